"""
Testes da árvore binomial: invariantes, agregação exata, peso ótimo
discreto e variância dos estimadores
"""

import numpy as np
import pytest

from arvore_binomial import (build_lattice, check_lattice_invariants, lattice_ap_check, lattice_ap_residuals,
                             lattice_ap_scan, lattice_discrete_optimal_b, lattice_dump, lattice_efficiency_gap,
                             lattice_estimator_variance)
from caracteristicas import Characteristic, characteristic_by_label, characteristic_from_polynomial
from erros import ErroComponente, ErroNumerico, ErroValidacao


@pytest.fixture(scope="module")
def arvore():
    return build_lattice(1.0, 0.2, 1.0, 8)


class TesteConstrucao:
    def teste_um_passo(self):
        tree = build_lattice(100.0, 0.2, 1.0, 1)
        esperado = tree.p * np.log(100.0 * tree.up) + (1 - tree.p) * np.log(100.0 * tree.down)
        assert tree.state(0, 0)["Y"] == pytest.approx(esperado, rel=1e-14)

    def teste_invariantes(self, arvore):
        martingal, contratos = check_lattice_invariants(arvore)
        assert martingal <= 1e-14
        assert contratos <= 1e-14

    @pytest.mark.parametrize("steps", [1, 5, 40])
    def teste_invariantes_outros_tamanhos(self, steps):
        martingal, contratos = check_lattice_invariants(build_lattice(100.0, 0.35, 2.0, steps))
        assert martingal <= 1e-14
        assert contratos <= 1e-14

    def teste_variancia_positiva_na_raiz(self, arvore):
        raiz = arvore.state(0, 0)
        assert raiz["P2"] - raiz["Y"] ** 2 > 0

    def teste_probabilidade(self, arvore):
        assert arvore.down == pytest.approx(1 / arvore.up)
        assert 0 < arvore.p < 0.5

    def teste_passos_invalidos(self):
        with pytest.raises(ErroValidacao):
            build_lattice(1.0, 0.2, 1.0, 0)

    def teste_volatilidade_nula(self):
        with pytest.raises(ErroNumerico):
            build_lattice(1.0, 0.0, 1.0, 4)

    def teste_transicoes_somam_um(self, arvore):
        P = arvore.transition(2, 7)
        assert P.shape == (3, 8)
        assert np.allclose(P.sum(axis=1), 1.0, atol=1e-15)

    def teste_esperanca_de_F(self, arvore):
        assert arvore.expectation(arvore.level(8)["F"], 0)[0] == pytest.approx(1.0, rel=1e-14)

    def teste_no_inexistente(self, arvore):
        with pytest.raises(ErroValidacao):
            arvore.state(3, 4)

    def teste_dump(self, arvore):
        tabela = lattice_dump(arvore)
        assert len(tabela) == 9 * 10 // 2
        for coluna in ("step", "node", "time", "F", "y", "Y", "P2", "P3", "Z"):
            assert coluna in tabela.columns
        assert tabela.loc[0, "F"] == pytest.approx(1.0)


class TesteAgregacaoNaArvore:
    @pytest.mark.parametrize("rotulo", ["LV", "RTM", "RFM", "NTM", "RV"])
    def teste_agregadoras_sem_residuo(self, arvore, rotulo):
        pior_abs, pior_rel = lattice_ap_scan(arvore, characteristic_by_label(rotulo))
        assert pior_rel <= 1e-12
        assert pior_abs <= 1e-12

    def teste_retorno_ao_quadrado_nao_agrega(self, arvore):
        pior_abs, _ = lattice_ap_scan(arvore, characteristic_by_label("SLR"))
        assert pior_abs > 1e-8

    @pytest.mark.parametrize("rotulo", ["NTM", "SLR"])
    def teste_r_igual_a_s(self, arvore, rotulo):
        assert lattice_ap_check(arvore, characteristic_by_label(rotulo), 3, 3) <= 1e-15

    def teste_polinomial_arbitraria(self, arvore):
        c = characteristic_from_polynomial("Y^3 * P2 - 0.5 * P3 + 2 * Z")
        assert lattice_ap_check(arvore, c, 1, 5) <= 1e-12

    def teste_residuos_por_no(self, arvore):
        residuos, total = lattice_ap_residuals(arvore, characteristic_by_label("LV"), 2, 6)
        assert residuos.shape == (3,)
        assert np.all(total > 0)

    def teste_passos_invertidos(self, arvore):
        with pytest.raises(ErroValidacao):
            lattice_ap_check(arvore, characteristic_by_label("LV"), 5, 2)

    def teste_componente_ausente(self, arvore):
        c = Characteristic(label="Q", components=("Q",), a=lambda v: v["Q"], b=lambda v: (0.0,))
        with pytest.raises(ErroComponente):
            lattice_ap_check(arvore, c, 0, 1)


class TestePesoOtimoDiscreto:
    def teste_um_periodo_quadrado(self):
        tree = build_lattice(1.0, 0.2, 1.0, 1)
        otimo = lattice_discrete_optimal_b(tree, "Y^2", 0)
        y_u, y_d = tree.level(1)["y"][1], tree.level(1)["y"][0]
        assert otimo.b[0, 0] == pytest.approx(-(y_u + y_d), rel=1e-10)
        assert otimo.b_star[0, 0] == pytest.approx(-2 * tree.state(0, 0)["Y"], rel=1e-14)

    @pytest.mark.parametrize("a", ["Y", "Y + 2 * P2 - 0.5 * Z"])
    def teste_linear_coincide_com_b_star(self, arvore, a):
        for step in range(arvore.steps):
            assert np.max(lattice_discrete_optimal_b(arvore, a, step).gap) <= 1e-10

    def teste_distancia_cai_pela_metade(self):
        gaps = lattice_efficiency_gap("Y^2", 0.2, 1.0, (8, 16, 32, 64))
        assert all(g > 0 for g in gaps)
        razoes = np.array(gaps[1:]) / np.array(gaps[:-1])
        assert np.all((razoes > 0.4) & (razoes < 0.6))

    def teste_passo_invalido(self, arvore):
        with pytest.raises(ErroValidacao):
            lattice_discrete_optimal_b(arvore, "Y^2", arvore.steps)


class TesteVarianciaDosEstimadores:
    def teste_media_da_lv_e_a_implicita(self, arvore):
        media, variancia = lattice_estimator_variance(arvore, characteristic_by_label("LV"))
        raiz = arvore.state(0, 0)
        assert media == pytest.approx(2 * (raiz["y"] - raiz["Y"]), rel=1e-12)
        assert variancia >= 0.0

    def teste_media_nao_depende_do_b(self, arvore):
        c = characteristic_from_polynomial("Y^2")
        medias = [lattice_estimator_variance(arvore, c, modo)[0]
                  for modo in ("b_star", "fixed_at_start", "lattice_optimal")]
        assert medias[1] == pytest.approx(medias[0], abs=1e-13)
        assert medias[2] == pytest.approx(medias[0], abs=1e-13)

    def teste_otimo_tem_a_menor_variancia(self):
        tree = build_lattice(1.0, 0.3, 1.0, 16)
        c = characteristic_by_label("RTM")
        var = {modo: lattice_estimator_variance(tree, c, modo)[1]
               for modo in ("b_star", "fixed_at_start", "lattice_optimal")}
        escala = 1e-12 * max(var.values())
        assert var["lattice_optimal"] <= var["b_star"] + escala
        assert var["lattice_optimal"] <= var["fixed_at_start"] + escala

    def teste_controle_com_kernel(self, arvore):
        media, variancia = lattice_estimator_variance(arvore, characteristic_by_label("SLR"))
        assert media > 0
        assert variancia > 0

    def teste_modo_desconhecido(self, arvore):
        with pytest.raises(ErroValidacao):
            lattice_estimator_variance(arvore, characteristic_by_label("LV"), "aleatorio")
