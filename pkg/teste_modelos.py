"""
Testes dos simuladores martingais e dos contratos em forma fechada
"""

import numpy as np
import pytest

from erros import ErroCapacidade, ErroValidacao
from modelos import (ModelSpec, closed_form_contracts, heston_expected_variance, map_path_blocks,
                     merton_central_moments, nested_contract_estimates, simulate_paths)
from nucleo import SeedSpec, make_partition

GBM = ModelSpec.gbm(0.2)
MERTON = ModelSpec.merton(0.2, 1.0, -0.1, 0.05)
HESTON = ModelSpec.heston(0.04, 1.5, 0.04, 0.2, -0.7)


def _erro_padrao(x):
    return float(np.std(x, ddof=1) / np.sqrt(len(x)))


class TesteModelSpec:
    def teste_modelo_desconhecido(self):
        with pytest.raises(ErroValidacao):
            ModelSpec("vg")

    def teste_volatilidade_negativa(self):
        with pytest.raises(ErroValidacao):
            ModelSpec.gbm(-0.1)

    def teste_correlacao_fora_do_intervalo(self):
        with pytest.raises(ErroValidacao):
            ModelSpec.heston(0.04, 1.5, 0.04, 0.5, -1.2)

    def teste_feller_e_so_um_indicador(self):
        spec = ModelSpec.heston(0.04, 1.5, 0.04, 0.5, -0.7)
        assert not spec.feller
        assert HESTON.feller

    def teste_compensador(self):
        assert MERTON.jump_compensator == pytest.approx(np.expm1(-0.1 + 0.5 * 0.05**2))


class TesteMomentosMerton:
    def teste_sem_saltos_e_gaussiano(self):
        spec = ModelSpec.merton(0.2, 0.0, -0.1, 0.05)
        m2, m3, m4 = merton_central_moments(spec, 0.5)
        assert m2 == pytest.approx(0.02)
        assert m3 == 0.0
        assert m4 == pytest.approx(3 * 0.02**2)

    def teste_terceiro_momento(self):
        _, m3, _ = merton_central_moments(MERTON, 1.0)
        assert m3 == pytest.approx(-0.00175, abs=1e-15)

    def teste_excesso_de_curtose_nao_negativo(self):
        m2, _, m4 = merton_central_moments(MERTON, 1.0)
        assert m4 - 3 * m2**2 == pytest.approx(0.1**4 + 6 * 0.01 * 0.0025 + 3 * 0.05**4)
        assert m4 - 3 * m2**2 >= 0.0

    def teste_exige_merton(self):
        with pytest.raises(ErroCapacidade):
            merton_central_moments(GBM, 1.0)


class TesteFormaFechada:
    def teste_gbm(self):
        y, tau = np.log(110.0), 0.75
        c = closed_form_contracts(GBM, tau, y)
        v = 0.04 * tau
        Y = y - v / 2
        assert float(c["Y"]) == pytest.approx(Y)
        assert float(c["P2"]) == pytest.approx(Y**2 + v)
        assert float(c["P3"]) == pytest.approx(Y**3 + 3 * Y * v)
        assert float(c["Z"]) == pytest.approx(110.0 * (y + v / 2))

    def teste_na_maturidade(self):
        y = np.log(95.0)
        c = closed_form_contracts(MERTON, 0.0, y)
        assert float(c["Y"]) == pytest.approx(y, abs=1e-15)
        assert float(c["P2"]) == pytest.approx(y**2, abs=1e-13)
        assert float(c["Z"]) == pytest.approx(95.0 * y, abs=1e-12)

    def teste_merton_usa_cumulantes(self):
        y, tau = np.log(100.0), 1.0
        c = closed_form_contracts(MERTON, tau, y, components=("Y", "P2", "P3"))
        m2, m3, _ = merton_central_moments(MERTON, tau)
        Y = c["Y"]
        assert c["P2"] - Y**2 == pytest.approx(m2, rel=1e-10)
        assert c["P3"] - 3 * Y * c["P2"] + 2 * Y**3 == pytest.approx(m3, rel=1e-6)

    def teste_heston_so_oferece_Y(self):
        with pytest.raises(ErroCapacidade):
            closed_form_contracts(HESTON, 0.5, 4.6, components=("Y", "P2"))
        with pytest.raises(ErroValidacao):
            closed_form_contracts(HESTON, 0.5, 4.6, components=("Y",))

    def teste_heston_Y(self):
        c = closed_form_contracts(HESTON, 0.5, 4.6, components=("Y",), v=0.04)
        assert float(c["Y"]) == pytest.approx(4.6 - 0.5 * 0.04 * 0.5)

    def teste_variancia_integrada_esperada(self):
        assert heston_expected_variance(HESTON, 0.04, 0.5) == pytest.approx(0.02)
        # v acima de θ reverte: média entre v0 e θ
        media = heston_expected_variance(HESTON, 0.09, 1.0)
        assert 0.04 < media < 0.09


class TesteMonteCarloAninhado:
    @pytest.mark.parametrize("spec", [GBM, MERTON], ids=["gbm", "merton"])
    @pytest.mark.parametrize("t", [0.25, 0.5, 0.75])
    def teste_concorda_com_forma_fechada(self, spec, t):
        y = np.log(100.0) + 0.03
        est = nested_contract_estimates(spec, y, t, m_inner=20_000, seed=SeedSpec(17, 3), chaves=(0, 1))
        fechado = closed_form_contracts(spec, spec.T - t, y)
        for nome, valor in est.means.items():
            limite = 4 * est.stderrs[nome] + 1e-12 * (1 + abs(valor))
            assert abs(valor - float(fechado[nome])) <= limite, nome

    def teste_heston_Y(self):
        v = 0.04
        est = nested_contract_estimates(HESTON, np.log(100.0), 0.5, m_inner=20_000, seed=SeedSpec(5),
                                        v=v, components=("Y",))
        fechado = closed_form_contracts(HESTON, 0.5, np.log(100.0), components=("Y",), v=v)
        assert abs(est.means["Y"] - float(fechado["Y"])) <= 4 * est.stderrs["Y"] + 5e-4

    def teste_na_maturidade_exato(self):
        est = nested_contract_estimates(GBM, 4.5, 1.0, m_inner=10)
        assert est.means["P2"] == 4.5**2
        assert est.stderrs["P2"] == 0.0

    def teste_heston_exige_v(self):
        with pytest.raises(ErroValidacao):
            nested_contract_estimates(HESTON, 4.6, 0.5, m_inner=100)

    def teste_amostra_minima(self):
        with pytest.raises(ErroValidacao):
            nested_contract_estimates(GBM, 4.6, 0.5, m_inner=1)


class TesteSimulacao:
    def teste_formato_e_componentes(self):
        p = make_partition(1.0, "regular", n=4)
        bundle = simulate_paths(GBM, p, 10, SeedSpec(1))
        assert bundle.n_paths == 10
        assert bundle.values["F"].shape == (10, 5)
        for nome in ("F", "y", "Y", "P2", "P3", "P4", "Z", "vlambda", "veta"):
            assert nome in bundle.values
        assert np.allclose(bundle.values["F"][:, 0], 100.0, rtol=1e-14)
        assert np.allclose(bundle.values["vlambda"][:, 0], 0.04)
        assert np.allclose(bundle.values["Y"][:, -1], bundle.values["y"][:, -1], atol=1e-15)

    def teste_reprodutivel(self):
        p = make_partition(1.0, "regular", n=3)
        a = simulate_paths(MERTON, p, 50, SeedSpec(9, 2))
        b = simulate_paths(MERTON, p, 50, SeedSpec(9, 2))
        assert np.array_equal(a.values["F"], b.values["F"])

    @pytest.mark.parametrize("spec", [GBM, MERTON, HESTON], ids=["gbm", "merton", "heston"])
    def teste_independente_do_numero_de_threads(self, spec):
        p = make_partition(1.0, "regular", n=5)
        um = simulate_paths(spec, p, 70, SeedSpec(4), threads=1, block_size=16)
        varios = simulate_paths(spec, p, 70, SeedSpec(4), threads=4, block_size=16)
        for nome in um.components:
            assert np.array_equal(um.values[nome], varios.values[nome]), nome

    def teste_map_path_blocks_na_ordem(self):
        p = make_partition(1.0, "regular", n=2)
        tamanhos = map_path_blocks(lambda b: b.n_paths, GBM, p, 45, SeedSpec(0), threads=3, block_size=10)
        assert tamanhos == [10, 10, 10, 10, 5]

    def teste_merton_sem_saltos_igual_ao_gbm(self):
        p = make_partition(1.0, "regular", n=6)
        sem_saltos = ModelSpec.merton(0.2, 1.0, 0.0, 0.0)
        a = simulate_paths(GBM, p, 200, SeedSpec(3))
        b = simulate_paths(sem_saltos, p, 200, SeedSpec(3))
        assert np.allclose(a.values["F"], b.values["F"], rtol=1e-14)
        assert np.allclose(a.values["P3"], b.values["P3"], rtol=1e-12)

    def teste_particao_com_outro_T(self):
        with pytest.raises(ErroValidacao):
            simulate_paths(GBM, make_partition(2.0, "regular", n=2), 5, SeedSpec(0))

    def teste_heston_forma_fechada_parcial(self):
        p = make_partition(1.0, "regular", n=2)
        with pytest.raises(ErroCapacidade):
            simulate_paths(HESTON, p, 5, SeedSpec(0), components=("Y", "P2"))
        bundle = simulate_paths(HESTON, p, 5, SeedSpec(0))
        assert "Y" in bundle.values
        assert "P2" not in bundle.values

    def teste_nested_mc_curto(self):
        p = make_partition(1.0, "regular", n=2)
        bundle = simulate_paths(HESTON, p, 3, SeedSpec(2), state_mode="nested_mc",
                                components=("Y", "P2"), m_inner=200)
        assert np.allclose(bundle.values["P2"][:, -1], bundle.values["y"][:, -1] ** 2)
        assert np.all(bundle.values["P2"] - bundle.values["Y"] ** 2 > -1e-12)

    def teste_n_paths_invalido(self):
        with pytest.raises(ErroValidacao):
            simulate_paths(GBM, make_partition(1.0, "regular", n=2), 0, SeedSpec(0))


class TesteMartingal:
    @pytest.mark.parametrize("spec", [GBM, MERTON, HESTON], ids=["gbm", "merton", "heston"])
    def teste_incrementos_de_F_com_media_nula(self, spec):
        p = make_partition(1.0, "regular", n=4)
        F = simulate_paths(spec, p, 20_000, SeedSpec(31), components=("Y",)).values["F"]
        for dF in np.diff(F, axis=1).T:
            assert abs(dF.mean()) <= 4 * _erro_padrao(dF)

    def teste_compensador_de_merton(self):
        p = make_partition(1.0, "regular", n=1)
        F_T = simulate_paths(MERTON, p, 50_000, SeedSpec(8)).values["F"][:, -1]
        assert abs(F_T.mean() - 100.0) <= 4 * _erro_padrao(F_T)

    def teste_drift_quebra_a_martingalidade(self):
        p = make_partition(1.0, "regular", n=1)
        spec = ModelSpec.gbm(0.2, drift=0.5)
        F_T = simulate_paths(spec, p, 20_000, SeedSpec(8)).values["F"][:, -1]
        assert F_T.mean() - 100.0 > 10 * _erro_padrao(F_T)

    @pytest.mark.lento
    def teste_media_de_F_T_com_um_milhao_de_caminhos(self):
        p = make_partition(1.0, "regular", n=1)
        F_T = simulate_paths(GBM, p, 1_000_000, SeedSpec(20240101), components=("Y",),
                             threads=4).values["F"][:, -1]
        assert abs(F_T.mean() - 100.0) <= 3 * _erro_padrao(F_T)

    @pytest.mark.lento
    @pytest.mark.parametrize("spec", [GBM, MERTON], ids=["gbm", "merton"])
    def teste_forma_fechada_contra_aninhado_grande(self, spec):
        for t in (0.25, 0.5, 0.75):
            y = np.log(100.0) - 0.05
            est = nested_contract_estimates(spec, y, t, m_inner=100_000, seed=SeedSpec(77), chaves=(int(4 * t),))
            fechado = closed_form_contracts(spec, spec.T - t, y)
            for nome, valor in est.means.items():
                assert abs(valor - float(fechado[nome])) <= 4 * est.stderrs[nome] + 1e-12 * (1 + abs(valor))
