"""
Testes da biblioteca de características: kernels, avaliação, realização,
pesos b*, família geométrica e transformação m
"""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from caracteristicas import (COEFS_LV, COEFS_NTM, GeometricCoeffs, LogMartingaleSpec, MomentSpec, b_star,
                             central_components, characteristic_by_label, characteristic_from_polynomial,
                             characteristic_from_text, characteristic_to_text, corollary4_characteristic,
                             corollary4_implied, eta_kernel, eval_characteristic, geometric_g, geometric_state,
                             implied_characteristic, lambda_kernel, lv_characteristic, m_transform,
                             moment_characteristic, ntm_characteristic, power_characteristic, power_return,
                             realise, realise_held, realise_increments, rho_term, tau_kernel)
from erros import ErroComponente, ErroFormaNaoSuportada, ErroLeitura, ErroSingularidade, ErroValidacao
from nucleo import ContractState, PathBundle, StatePath, make_partition
from polinomios import Polynomial

Y = Polynomial.variable("Y")
P2 = Polynomial.variable("P2")


def _estado_fyz(F, Y_, Z, t=0.0):
    return ContractState(t, {"F": F, "Y": Y_, "Z": Z})


def _estado_gaussiano(Y0=-0.02, v=0.04):
    return ContractState(0.0, {
        "Y": Y0,
        "P2": Y0**2 + v,
        "P3": Y0**3 + 3 * Y0 * v,
        "P4": Y0**4 + 6 * Y0**2 * v + 3 * v**2,
    })


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

class TesteKernels:
    def teste_lambda(self):
        assert lambda_kernel(0.0) == 0.0
        assert lambda_kernel(0.01) == pytest.approx(1.003342e-4, abs=1e-10)
        assert lambda_kernel(-0.01) == pytest.approx(9.96675e-5, abs=1e-10)

    def teste_eta(self):
        assert eta_kernel(0.0) == 0.0
        assert eta_kernel(0.01) == pytest.approx(1.0066917e-4, abs=1e-10)

    def teste_tau(self):
        assert tau_kernel(0.0) == 0.0
        assert tau_kernel(0.1) == pytest.approx(1.05154e-3, abs=1e-8)
        assert tau_kernel(1e-4) == pytest.approx(1e-12, rel=1e-4)

    def teste_rho(self):
        assert rho_term(0.7, 0.0) == 0.0
        assert rho_term(0.0, 0.3) == 0.0
        assert rho_term(0.01, 0.02) == pytest.approx(6.0604e-4, abs=1e-9)

    def teste_potencias(self):
        assert power_return(0.1, 2) == pytest.approx(0.01)
        assert power_return(-0.1, 3) == pytest.approx(-0.001)
        assert power_return(0.1, 4) == pytest.approx(1e-4)
        with pytest.raises(ErroValidacao):
            power_return(0.1, 5)

    def teste_kernels_vetorizados(self):
        dy = np.array([-0.2, 0.0, 1e-7, 0.2])
        assert lambda_kernel(dy).shape == (4,)
        assert np.allclose(lambda_kernel(dy), 2 * (np.exp(dy) - 1 - dy), atol=1e-15)

    @given(st.floats(min_value=-2e-5, max_value=2e-5, allow_nan=False))
    @settings(max_examples=200, deadline=None)
    def teste_ramo_de_serie_continuo(self, dy):
        # a série e a forma fechada concordam em torno do corte
        escala = max(dy * dy, 1e-300)
        assert abs(lambda_kernel(dy) - 2 * (np.expm1(dy) - dy)) <= 1e-6 * escala + 1e-22
        assert abs(tau_kernel(dy) - dy**3) <= 1e-4 * abs(dy) ** 3 + 1e-27

    @pytest.mark.parametrize("kernel, coef, rel", [
        (lambda_kernel, lambda k: 2, 2e-10),
        (eta_kernel, lambda k: 2 * (k - 1), 2e-10),
        (tau_kernel, lambda k: 6 * (k - 2), 1e-11),
    ], ids=["lambda", "eta", "tau"])
    @pytest.mark.parametrize("dy", [1e-6, 9.99e-6, 1.0001e-5, 2e-5, 1e-4, 1e-3, 0.0999, 0.1001, 0.3])
    def teste_precisao_contra_serie_exata(self, kernel, coef, rel, dy):
        for x in (dy, -dy):
            assert kernel(x) == pytest.approx(_serie_exata(coef, x), rel=rel)

    @given(st.floats(min_value=-5.0, max_value=5.0, allow_nan=False))
    @settings(max_examples=200, deadline=None)
    def teste_kernels_nao_negativos(self, dy):
        assert lambda_kernel(dy) >= 0.0
        assert eta_kernel(dy) >= 0.0
        # τ tem o sinal de δy³
        assert tau_kernel(dy) * np.sign(dy) >= 0.0
        if dy != 0.0:
            assert lambda_kernel(dy) > 0.0 or abs(dy) < 1e-150


def _serie_exata(coef, x, termos=60):
    """Σ_{k>=2} coef(k) x^k / k! em aritmética racional"""
    q = Fraction(x)
    total = Fraction(0)
    termo = q * q / 2
    for k in range(2, termos):
        total += coef(k) * termo
        termo = termo * q / (k + 1)
    return float(total)


# ---------------------------------------------------------------------------
# avaliação e realização
# ---------------------------------------------------------------------------

class TesteAvaliacao:
    def teste_lv_em_dois_estados(self):
        lv = lv_characteristic()
        f = eval_characteristic(lv, ContractState(0, {"F": 100.0}), ContractState(1, {"F": 105.0}))
        assert f == pytest.approx(2 * (0.05 - np.log(1.05)), abs=1e-12)
        assert f == pytest.approx(lambda_kernel(np.log(1.05)), abs=1e-12)

    @pytest.mark.parametrize("rotulo", ["LV", "NTM", "RV", "RTM", "RFM", "SLR"])
    def teste_estados_iguais_dao_zero(self, rotulo):
        c = characteristic_by_label(rotulo)
        y = np.log(100.0)
        u = ContractState(0.0, {"F": 100.0, "Y": y - 0.02, "P2": (y - 0.02) ** 2 + 0.04,
                                "P3": 80.0, "P4": 400.0, "Z": 100.0 * (y + 0.02)})
        assert eval_characteristic(c, u, u) == 0.0

    @given(st.floats(-3.0, 6.0), st.floats(0.0, 0.5), st.floats(1e-6, 0.3), st.floats(-0.05, 0.05),
           st.floats(0.0, 0.5), st.sampled_from(["LV", "NTM", "RV", "RTM", "RFM", "SLR", "CLR", "QLR"]))
    @settings(max_examples=150, deadline=None)
    def teste_estados_iguais_dao_zero_em_qualquer_estado(self, y, desconto, v, w, premio, rotulo):
        Y_ = y - desconto
        u = {"F": np.exp(y), "Y": Y_, "P2": Y_**2 + v, "P3": Y_**3 + 3 * Y_ * v + w,
             "P4": Y_**4 + 6 * Y_**2 * v + 3 * v**2, "Z": np.exp(y) * (y + premio)}
        assert eval_characteristic(characteristic_by_label(rotulo), u, u) == 0.0

    def teste_rtm_com_variancia_constante(self):
        rtm = moment_characteristic(2)
        Y0, x, v = 0.3, 0.05, 0.04
        u_r = ContractState(0.0, {"Y": Y0, "P2": Y0**2 + v})
        u_s = ContractState(0.1, {"Y": Y0 + x, "P2": (Y0 + x) ** 2 + v})
        assert eval_characteristic(rtm, u_r, u_s) == pytest.approx(x**3, rel=1e-9)

    def teste_componente_faltando(self):
        with pytest.raises(ErroComponente):
            eval_characteristic(moment_characteristic(2), ContractState(0, {"Y": 0.0}), ContractState(1, {"Y": 0.1}))

    def teste_ordem_dos_tempos(self):
        with pytest.raises(ErroValidacao):
            eval_characteristic(lv_characteristic(), ContractState(1, {"F": 1.0}), ContractState(0, {"F": 1.0}))


class TesteRealizacao:
    def _caminho(self, F):
        F = np.asarray(F, dtype=float)
        return StatePath(make_partition(1.0, "regular", n=len(F) - 1), {"F": F})

    def teste_caminho_constante(self):
        assert realise(lv_characteristic(), self._caminho([100.0] * 5)) == 0.0

    def teste_um_intervalo_reduz_a_avaliacao(self):
        lv = lv_characteristic()
        caminho = self._caminho([100.0, 93.0])
        u0, u1 = caminho.states
        assert realise(lv, caminho) == pytest.approx(eval_characteristic(lv, u0, u1), rel=1e-12)

    def teste_lv_soma_dos_kernels(self):
        F = np.array([100.0, 103.0, 98.5, 101.2])
        esperado = float(np.sum(lambda_kernel(np.diff(np.log(F)))))
        assert realise(lv_characteristic(), self._caminho(F)) == pytest.approx(esperado, rel=1e-10)

    def teste_caminho_curto(self):
        with pytest.raises(ErroValidacao):
            realise(lv_characteristic(), {"F": np.array([1.0])})

    def teste_telescopica_igual_a_soma_dos_incrementos(self):
        rng = np.random.default_rng(5)
        Yv = np.cumsum(rng.normal(0, 0.02, 30)) + 4.6
        v2 = 0.04 * np.linspace(1, 0, 30)
        caminho = StatePath(make_partition(1.0, "regular", n=29), {"Y": Yv, "P2": Yv**2 + v2})
        rtm = moment_characteristic(2)
        assert realise(rtm, caminho) == pytest.approx(np.sum(realise_increments(rtm, caminho)), rel=1e-9, abs=1e-11)

    @given(st.integers(min_value=0, max_value=9), st.integers(min_value=0, max_value=1000),
           st.sampled_from(["LV", "NTM", "RTM", "RFM", "CLR"]))
    @settings(max_examples=60, deadline=None)
    def teste_estado_repetido_nao_altera_a_soma(self, posicao, semente, rotulo):
        rng = np.random.default_rng(semente)
        n = 10
        y = np.log(100.0) + np.cumsum(np.r_[0.0, rng.normal(0.0, 0.03, n)])
        v = 0.04 * np.linspace(1.0, 0.0, n + 1)
        Y_ = y - v / 2
        valores = {"F": np.exp(y), "Y": Y_, "P2": Y_**2 + v, "P3": Y_**3 + 3 * Y_ * v,
                   "P4": Y_**4 + 6 * Y_**2 * v + 3 * v**2, "Z": np.exp(y) * (y + v / 2)}
        tempos = np.linspace(0.0, 1.0, n + 1)
        original = StatePath(make_partition(1.0, "explicit", times=tempos), valores)

        # o estado em t_posicao se repete no meio do intervalo seguinte
        meio = (tempos[posicao] + tempos[posicao + 1]) / 2
        repetido = StatePath(
            make_partition(1.0, "explicit", times=np.insert(tempos, posicao + 1, meio)),
            {nome: np.insert(arr, posicao + 1, arr[posicao]) for nome, arr in valores.items()},
        )
        c = characteristic_by_label(rotulo)
        assert realise(c, repetido) == pytest.approx(realise(c, original), rel=1e-12, abs=1e-12)

    def teste_bundle_devolve_um_valor_por_caminho(self):
        caminhos = [self._caminho([100.0, 101.0, 99.0]), self._caminho([100.0, 100.0, 100.0])]
        valores = realise(lv_characteristic(), PathBundle.from_paths(caminhos))
        assert valores.shape == (2,)
        assert valores[1] == 0.0
        assert valores[0] == pytest.approx(realise(lv_characteristic(), caminhos[0]), rel=1e-14)

    def teste_b_fixo_num_unico_intervalo_coincide(self):
        a = characteristic_from_polynomial("Y^2")
        caminho = StatePath(make_partition(1.0, "regular", n=1), {"Y": np.array([0.1, 0.25])})
        assert realise_held(a, caminho) == pytest.approx(realise(a, caminho))

    def teste_b_fixo_rebalanceado_a_cada_intervalo_coincide(self):
        a = characteristic_from_polynomial("Y^2")
        caminho = StatePath(make_partition(1.0, "regular", n=4), {"Y": np.array([0.0, 0.1, -0.05, 0.2, 0.1])})
        assert realise_held(a, caminho, hold=1) == pytest.approx(realise(a, caminho), rel=1e-14)
        # b fixo em u_0 = 0: só sobra a(u_T) - a(u_0)
        assert realise_held(a, caminho) == pytest.approx(0.01)

    def teste_hold_invalido(self):
        a = characteristic_from_polynomial("Y^2")
        caminho = StatePath(make_partition(1.0, "regular", n=2), {"Y": np.zeros(3)})
        with pytest.raises(ErroValidacao):
            realise_held(a, caminho, hold=0)


# ---------------------------------------------------------------------------
# b*, momentos e valor implícito
# ---------------------------------------------------------------------------

class TestePesos:
    def teste_b_star_variancia(self):
        assert b_star("Y^2") == {"Y": -2 * Y}

    def teste_b_star_rtm(self):
        b = b_star(-2 * Y**3 + 3 * P2 * Y)
        assert b["Y"] == 6 * Y**2 - 3 * P2
        assert b["P2"] == -3 * Y

    def teste_b_star_constante_nula(self):
        assert b_star(Polynomial.constant(0.0), components=["Y"]) == {"Y": Polynomial()}

    def teste_b_star_nao_polinomial(self):
        with pytest.raises(ErroFormaNaoSuportada):
            b_star(lambda u: np.exp(u["Y"]))

    def teste_a_fora_dos_componentes(self):
        with pytest.raises(ErroValidacao):
            characteristic_from_polynomial("Y * P2", components=["Y"])


class TesteMomentos:
    def teste_n1_e_a_variancia(self):
        rv = moment_characteristic(MomentSpec(1))
        estado = {"Y": np.array(0.1)}
        assert rv.a(estado) == pytest.approx(0.01)
        assert rv.b(estado)[0] == pytest.approx(-0.2)
        assert rv.label == "RV"
        assert rv.implied_label == "m2"

    def teste_rotulos(self):
        assert moment_characteristic(2).label == "RTM"
        assert moment_characteristic(3).label == "RFM"
        assert moment_characteristic(3).components == ("Y", "P2", "P3")

    def teste_ordem_fora_do_escopo(self):
        with pytest.raises(ErroValidacao):
            moment_characteristic(4)
        with pytest.raises(ErroValidacao):
            MomentSpec(0)

    def teste_implicitos_gaussianos(self):
        u0 = _estado_gaussiano()
        assert implied_characteristic(MomentSpec(1), u0) == pytest.approx(0.04, abs=1e-15)
        assert implied_characteristic(MomentSpec(2), u0) == pytest.approx(0.0, abs=1e-15)
        assert implied_characteristic(MomentSpec(3), u0) == pytest.approx(4.8e-3, abs=1e-15)

    def teste_implicito_sem_p4(self):
        with pytest.raises(ErroComponente):
            implied_characteristic(3, ContractState(0.0, {"Y": 0.0, "P2": 0.04, "P3": 0.0}))

    def teste_metadado_implicito_coincide(self):
        u0 = _estado_gaussiano()
        for n in (1, 2, 3):
            c = moment_characteristic(n)
            assert c.implied(u0) == pytest.approx(implied_characteristic(n, u0), abs=1e-15)

    def teste_polinomial_generica_implicita(self):
        c = characteristic_from_polynomial("Y^2")
        assert c.implied(_estado_gaussiano()) == pytest.approx(0.04, abs=1e-15)

    def teste_momentos_centrais(self):
        u0 = _estado_gaussiano()
        v = central_components(u0)
        assert v["v2"] == pytest.approx(0.04)
        assert v["v3"] == pytest.approx(0.0, abs=1e-15)

    @given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(0.0, 0.2), st.floats(0.0, 0.2),
           st.floats(-0.05, 0.05), st.floats(-0.05, 0.05))
    @settings(max_examples=100, deadline=None)
    def teste_expansao_central(self, y_r, y_s, v_r, v_s, w_r, w_s):
        def estado(y, v, w):
            return {"Y": y, "P2": v + y**2, "P3": w + 3 * v * y + y**3}

        u_r, u_s = estado(y_r, v_r, w_r), estado(y_s, v_s, w_s)
        x = y_s - y_r
        rtm = eval_characteristic(moment_characteristic(2), u_r, u_s)
        rfm = eval_characteristic(moment_characteristic(3), u_r, u_s)
        assert rtm == pytest.approx(x**3 + 3 * (v_s - v_r) * x, abs=1e-12)
        assert rfm == pytest.approx(x**4 + 6 * v_s * x**2 + 4 * (w_s - w_r) * x, abs=1e-12)

    def teste_potencias_implicitas(self):
        assert power_characteristic(3).implied(_estado_gaussiano()) == pytest.approx(0.0, abs=1e-15)
        assert power_characteristic(4).implied(_estado_gaussiano()) == pytest.approx(4.8e-3)
        assert not power_characteristic(2).aggregating


# ---------------------------------------------------------------------------
# família geométrica
# ---------------------------------------------------------------------------

class TesteGeometrica:
    def teste_c8_e_c9_nao_nulos(self):
        with pytest.raises(ErroValidacao):
            GeometricCoeffs(0, 0, 0, 0, 1.0, 1.0)

    def teste_g_incrementos_nulos(self):
        assert geometric_g(COEFS_NTM, (0.0, 0.0, 0.0)) == 0.0

    def teste_g_lv(self):
        g = geometric_g(COEFS_LV, (0.05, 0.0, 0.0))
        assert g == pytest.approx(2.5421928e-3, abs=1e-9)
        assert g == pytest.approx(lambda_kernel(0.05), rel=1e-12)

    def teste_lv_pela_familia(self):
        c = corollary4_characteristic(COEFS_LV)
        u_r = _estado_fyz(100.0, np.log(100.0) - 0.02, 100.0 * (np.log(100.0) + 0.02))
        u_s = _estado_fyz(104.0, np.log(104.0) - 0.019, 104.0 * (np.log(104.0) + 0.019), t=0.1)
        assert eval_characteristic(c, u_r, u_s) == pytest.approx(lambda_kernel(np.log(1.04)), rel=1e-10)

    def teste_ntm_concorda_com_a_familia(self):
        rng = np.random.default_rng(11)
        ntm, familia = ntm_characteristic(), corollary4_characteristic(COEFS_NTM)
        for _ in range(20):
            F = rng.uniform(50, 150, 2)
            y = np.log(F)
            u_r = _estado_fyz(F[0], y[0] - rng.uniform(0, 0.05), F[0] * (y[0] + rng.uniform(0, 0.05)))
            u_s = _estado_fyz(F[1], y[1] - rng.uniform(0, 0.05), F[1] * (y[1] + rng.uniform(0, 0.05)), t=1)
            f = eval_characteristic(ntm, u_r, u_s)
            assert f == pytest.approx(eval_characteristic(familia, u_r, u_s), rel=1e-12, abs=1e-15)
            # f = ρ + τ
            x_r, x_s = geometric_state(u_r), geometric_state(u_s)
            dy, dveta = x_s[0] - x_r[0], x_s[2] - x_r[2]
            assert f == pytest.approx(rho_term(dveta, dy) + tau_kernel(dy), rel=1e-9, abs=1e-11)

    def teste_ntm_forward_constante(self):
        ntm = ntm_characteristic()
        y = np.log(100.0)
        u_r = _estado_fyz(100.0, y - 0.02, 100.0 * (y + 0.02))
        u_s = _estado_fyz(100.0, y - 0.02, 100.0 * (y + 0.05), t=1)
        assert eval_characteristic(ntm, u_r, u_s) == pytest.approx(0.0, abs=1e-12)

    def teste_coeficientes_nulos(self):
        c = corollary4_characteristic(GeometricCoeffs())
        y = np.log(90.0)
        u_r = _estado_fyz(100.0, np.log(100.0), 100.0 * np.log(100.0))
        u_s = _estado_fyz(90.0, y - 0.01, 90.0 * (y + 0.01), t=1)
        assert eval_characteristic(c, u_r, u_s) == 0.0

    def teste_identidade_em_sorteios_aleatorios(self):
        rng = np.random.default_rng(2024)
        n = 10_000
        coefs = rng.uniform(-5, 5, (n, 6))
        zerar_c8 = rng.random(n) < 0.5
        coefs[zerar_c8, 4] = 0.0
        coefs[~zerar_c8, 5] = 0.0
        F = rng.uniform(0.5, 2.0, (n, 2))
        y = np.log(F)
        Yv = y - rng.uniform(0.0, 0.2, (n, 2))
        Z = F * (y + rng.uniform(0.0, 0.2, (n, 2)))
        pior = 0.0
        for i in range(n):
            coeffs = GeometricCoeffs.from_sequence(coefs[i])
            c = corollary4_characteristic(coeffs)
            u_r = {"F": F[i, 0], "Y": Yv[i, 0], "Z": Z[i, 0]}
            u_s = {"F": F[i, 1], "Y": Yv[i, 1], "Z": Z[i, 1]}
            dx = (y[i, 1] - y[i, 0],
                  2 * (y[i, 1] - Yv[i, 1]) - 2 * (y[i, 0] - Yv[i, 0]),
                  2 * (Z[i, 1] / F[i, 1] - y[i, 1]) - 2 * (Z[i, 0] / F[i, 0] - y[i, 0]))
            g = geometric_g(coeffs, dx)
            f = eval_characteristic(c, u_r, u_s)
            pior = max(pior, abs(g - f) / (1 + abs(g)))
        assert pior <= 1e-12

    def teste_implicito_da_lv_geometrica(self):
        y = np.log(100.0)
        u0 = ContractState(0.0, {"F": 100.0, "y": y, "Y": y - 0.02, "Z": 100.0 * (y + 0.02)})
        assert corollary4_implied(COEFS_LV, u0) == pytest.approx(0.04, abs=1e-12)
        assert lv_characteristic().implied(u0) == pytest.approx(0.04, abs=1e-12)


# ---------------------------------------------------------------------------
# transformação m
# ---------------------------------------------------------------------------

class TesteTransformacaoM:
    def teste_escalar(self):
        m = m_transform(LogMartingaleSpec.scalar(0.5), np.array([1.0]))
        assert m[0] == pytest.approx(2 * (np.exp(0.5) - 1), abs=1e-12)

    def teste_origem(self):
        assert np.all(m_transform(LogMartingaleSpec.scalar(-1.0), np.zeros(1)) == 0.0)

    def teste_limite_c_pequeno(self):
        assert m_transform(LogMartingaleSpec.scalar(1e-8), np.array([1.0]))[0] == pytest.approx(1.0, abs=1e-7)

    def teste_singular(self):
        with pytest.raises(ErroSingularidade):
            m_transform(LogMartingaleSpec.scalar(0.0), np.array([1.0]))

    def teste_lote(self):
        u = np.linspace(-1, 1, 12).reshape(4, 3, 1)
        m = m_transform(LogMartingaleSpec.scalar(0.5), u)
        assert m.shape == u.shape
        assert np.allclose(m, np.expm1(0.5 * u) / 0.5)

    def teste_matrizes_diagonais_concordam_com_expm(self):
        C = (np.diag([0.3, -0.2]), np.diag([0.1, 0.4]))
        spec = LogMartingaleSpec(C)
        u = np.array([0.7, -0.4])
        S = C[0] + C[1]
        esperado = np.linalg.solve(S, (expm(u[0] * C[0] + u[1] * C[1]) - np.eye(2)) @ np.ones(2))
        assert np.allclose(m_transform(spec, u), esperado, atol=1e-12)

    def teste_nao_comutam(self):
        with pytest.raises(ErroValidacao):
            LogMartingaleSpec((np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([[0.0, 1.0], [1.0, 0.0]])))

    def teste_nao_simetrica(self):
        with pytest.raises(ErroValidacao):
            LogMartingaleSpec((np.array([[1.0, 2.0], [0.0, 1.0]]), np.eye(2)))


# ---------------------------------------------------------------------------
# texto
# ---------------------------------------------------------------------------

class TesteTexto:
    def teste_polinomial_com_b_proprio(self):
        c = characteristic_from_polynomial("Y^2", b={"Y": "-1.5 * Y"}, label="meio")
        lida = characteristic_from_text(characteristic_to_text(c))
        assert lida.label == "meio"
        assert lida.a_poly == c.a_poly
        assert lida.b_polys == c.b_polys

    @pytest.mark.parametrize("rotulo", ["LV", "NTM", "RTM", "QLR"])
    def teste_familias_nomeadas(self, rotulo):
        c = characteristic_by_label(rotulo)
        lida = characteristic_from_text(characteristic_to_text(c))
        assert lida.label == c.label
        assert lida.family == c.family

    def teste_chave_desconhecida_com_linha(self):
        with pytest.raises(ErroLeitura) as erro:
            characteristic_from_text("label = x\nfamily = polynomial\ncor = azul\n", arquivo="c.txt")
        assert erro.value.linha == 3
        assert erro.value.chave == "cor"

    def teste_rotulo_desconhecido(self):
        with pytest.raises(ErroValidacao):
            characteristic_by_label("XYZ")
