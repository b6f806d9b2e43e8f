"""
Testes dos estudos: relatório, viés por partição, eficiência dos pesos,
martingalidade, dados das figuras e prêmio de risco
"""

import numpy as np
import pytest

from analise_estudos import (StudyReport, _combinar, _resumo, bias_study, characteristic_order, contracts_needed,
                             efficiency_study, figure_data, initial_state, log_martingale_host,
                             martingality_study, partition_gap_z, risk_premium)
from caracteristicas import MomentSpec, characteristic_by_label, moment_polynomial
from erros import ErroCapacidade, ErroValidacao
from modelos import ModelSpec, merton_central_moments, simulate_paths
from nucleo import PASSO_DIARIO, SeedSpec, make_partition
from replicacao import OptionChain, implied_moments_from_chain, synth_chain

GBM = ModelSpec.gbm(0.2)
MERTON = ModelSpec.merton(0.2, 1.0, -0.1, 0.05)


def _particoes(*ns):
    return [make_partition(1.0, "regular", n=n) for n in ns]


class TesteStudyReport:
    def teste_z_e_aprovacao(self):
        r = StudyReport("teste", 3.0)
        r.add("a", 100, 1.2, 0.1, 1.0)
        r.add("b", 100, 1.5, 0.1, 1.0)
        assert r.row("a").z == pytest.approx(2.0)
        assert r.row("a").passed
        assert not r.row("b").passed
        assert not r.passed

    def teste_unilateral(self):
        r = StudyReport("teste", 2.0, sided="one")
        assert r.add("a", 10, 0.5, 0.1, 0.0).passed
        assert not r.add("b", 10, -0.5, 0.1, 0.0).passed

    def teste_erro_zero(self):
        r = StudyReport("teste", 3.0)
        assert r.add("igual", 1, 0.04, 0.0, 0.04).z == 0.0
        assert r.add("diferente", 1, 0.05, 0.0, 0.04).z == np.inf

    def teste_linha_nao_conferida(self):
        r = StudyReport("teste", 3.0)
        linha = r.add("var", 10, 5.0, 0.1, float("nan"), checked=False)
        assert np.isnan(linha.z)
        assert r.passed

    def teste_tabela_e_resumo(self):
        r = StudyReport("teste", 3.0)
        r.add("regular(1)", 100, 0.0401, 0.0002, 0.04)
        r.add("regular(250)", 100, 0.05, 0.0002, 0.04)
        assert list(r.to_frame().columns) == ["configuration", "mean", "stderr", "target", "z"]
        texto = r.summary_text()
        assert "regular(250)" in texto
        assert "FALHOU" in texto
        assert "OK" in texto

    def teste_linha_inexistente(self):
        with pytest.raises(KeyError):
            StudyReport("teste", 3.0).row("nada")

    def teste_z_da_diferenca(self):
        r = StudyReport("teste", 3.0)
        r.add("a", 10, 1.0, 0.3, 1.0)
        r.add("b", 10, 0.5, 0.4, 1.0)
        assert partition_gap_z(r, "a", "b") == pytest.approx(1.0)


class TesteEstatisticasPorBloco:
    def teste_combinacao_igual_a_amostra_inteira(self):
        x = np.random.default_rng(0).normal(size=1000)
        blocos = [_resumo(x[i:i + 128]) for i in range(0, 1000, 128)]
        n, media, m2 = _combinar(blocos)
        assert n == 1000
        assert media == pytest.approx(x.mean(), rel=1e-12)
        assert m2 / (n - 1) == pytest.approx(x.var(ddof=1), rel=1e-12)


class TesteEstadoInicial:
    def teste_contratos_necessarios(self):
        assert contracts_needed(characteristic_by_label("LV")) == ()
        assert contracts_needed(characteristic_by_label("RTM")) == ("Y", "P2")
        assert contracts_needed(characteristic_by_label("NTM")) == ("Y", "Z")

    def teste_gbm(self):
        u0 = initial_state(GBM)
        assert u0["Y"] == pytest.approx(np.log(100.0) - 0.02)
        assert characteristic_by_label("LV").implied(u0) == pytest.approx(0.04, rel=1e-12)

    def teste_heston_estima_o_restante(self):
        heston = ModelSpec.heston(0.04, 1.5, 0.04, 0.2, -0.7)
        u0 = initial_state(heston, m_inner=2_000, seed=SeedSpec(1))
        assert u0["P2"] > 0
        assert "P3" in u0
        assert "Z" in u0


class TesteVies:
    def teste_lv_sem_vies_em_qualquer_particao(self):
        r = bias_study(GBM, characteristic_by_label("LV"), _particoes(1, 12, 50), 4_000, SeedSpec(11),
                       threshold=4.0)
        assert [l.configuration for l in r.rows] == ["regular(1)", "regular(12)", "regular(50)"]
        assert all(l.target == pytest.approx(0.04, rel=1e-12) for l in r.rows)
        assert r.passed

    def teste_rtm_alvo_zero(self):
        r = bias_study(GBM, characteristic_by_label("RTM"), _particoes(1, 20), 4_000, SeedSpec(12),
                       threshold=4.0)
        assert r.rows[0].target == pytest.approx(0.0, abs=1e-12)
        assert r.passed

    def teste_independente_do_numero_de_threads(self):
        args = (GBM, characteristic_by_label("NTM"), _particoes(1, 10), 300, SeedSpec(5))
        um = bias_study(*args, threads=1, block_size=64)
        varios = bias_study(*args, threads=3, block_size=64)
        assert [l.mean for l in um.rows] == [l.mean for l in varios.rows]
        assert [l.stderr for l in um.rows] == [l.stderr for l in varios.rows]

    def teste_alvo_explicito(self):
        r = bias_study(GBM, characteristic_by_label("SLR"), _particoes(1), 2_000, SeedSpec(3),
                       threshold=4.0, target=0.04 + 0.02**2)
        assert r.rows[0].target == pytest.approx(0.0404)
        assert r.passed

    def teste_sem_particoes(self):
        with pytest.raises(ErroValidacao):
            bias_study(GBM, characteristic_by_label("LV"), [], 10, SeedSpec(0))

    def teste_heston_forma_fechada_sem_P2(self):
        heston = ModelSpec.heston(0.04, 1.5, 0.04, 0.2, -0.7)
        with pytest.raises(ErroCapacidade):
            bias_study(heston, characteristic_by_label("RTM"), _particoes(2), 10, SeedSpec(0), target=0.0)


class TesteEficiencia:
    def teste_um_intervalo_sem_diferenca(self):
        r = efficiency_study(GBM, "Y^2", ["b_star", "fixed_at_start"], _particoes(1)[0], 1_000, SeedSpec(2))
        linha = r.row("fixed_at_start - b_star")
        assert linha.mean == 0.0
        assert r.passed

    def teste_b_star_mais_eficiente(self):
        r = efficiency_study(GBM, "Y^2", ["b_star", "fixed_at_start"], _particoes(16)[0], 2_000, SeedSpec(4))
        assert r.row("var:b_star").mean < r.row("var:fixed_at_start").mean
        assert r.row("fixed_at_start - b_star").z > 2.0
        assert r.passed

    def teste_sem_numeros_comuns(self):
        r = efficiency_study(GBM, moment_polynomial(2), ["b_star", "fixed_at_start"], _particoes(16)[0],
                             2_000, SeedSpec(4), common_random_numbers=False)
        assert r.row("fixed_at_start - b_star").z > 2.0

    def teste_ordenacao_na_arvore(self):
        r = efficiency_study(GBM, "Y^2", ["b_star", "fixed_at_start", "lattice_optimal"], _particoes(16)[0],
                             500, SeedSpec(6))
        assert r.row("lattice fixed_at_start - b_star").passed
        assert r.row("lattice b_star - lattice_optimal").passed
        assert r.row("lattice var:lattice_optimal").mean <= r.row("lattice var:b_star").mean

    def teste_arvore_exige_gbm(self):
        with pytest.raises(ErroCapacidade):
            efficiency_study(MERTON, "Y^2", ["lattice_optimal"], _particoes(4)[0], 100, SeedSpec(0))

    def teste_variante_desconhecida(self):
        with pytest.raises(ErroValidacao):
            efficiency_study(GBM, "Y^2", ["semanal"], _particoes(4)[0], 100, SeedSpec(0))


class TesteMartingalidade:
    def teste_incrementos_de_m(self):
        r = martingality_study(GBM, [0.5, -1.0], _particoes(50)[0], 5_000, SeedSpec(21))
        assert [l.configuration for l in r.rows] == ["c=0.5", "c=-1"]
        assert r.passed

    def teste_hospedeiro_na_maturidade(self):
        bundle = simulate_paths(GBM, _particoes(3)[0], 5, SeedSpec(0), components=("Y",))
        u = log_martingale_host(GBM, bundle, 0.5)
        assert np.array_equal(u[:, -1], bundle.values["y"][:, -1])

    def teste_hospedeiro_so_no_gbm(self):
        bundle = simulate_paths(MERTON, _particoes(2)[0], 5, SeedSpec(0), components=("Y",))
        with pytest.raises(ErroCapacidade):
            log_martingale_host(MERTON, bundle, 0.5)


class TesteFiguras:
    s = 0.2**2 * PASSO_DIARIO

    def teste_fig1_na_origem(self):
        t = figure_data("fig1", y_grid=[0.0])
        assert t["RV"][0] == 0.0
        assert t["SLR"][0] == pytest.approx((self.s / 2) ** 2)

    def teste_lv_e_slr_com_retorno_nulo(self):
        t = figure_data("fig1", y_grid=[-self.s / 2])
        assert t["LV"][0] == pytest.approx(0.0, abs=1e-20)
        assert t["SLR"][0] == pytest.approx(0.0, abs=1e-20)

    def teste_fig2_rtm_abaixo_do_clr_para_x_positivo(self):
        t = figure_data("fig2")
        positivos, negativos = t[t.x > 0], t[t.x < 0]
        assert np.all(positivos.RTM <= positivos.CLR)
        assert np.all(negativos.RTM >= negativos.CLR)

    def teste_fig2_rtm_mais_perto_do_clr(self):
        """Com Δv2 = -σ²dt a ordenação só vale para x <= -0.05 ou x >= ~0.124"""
        t = figure_data("fig2")
        longe = t[(t.x <= -0.05) | (t.x >= 0.13)]
        assert len(longe) > 0
        assert np.all(np.abs(longe.NTM - longe.CLR) > np.abs(longe.RTM - longe.CLR))

    def teste_fig3_distancia_cresce_com_x(self):
        t = figure_data("fig3")
        gap = (t.RFM - t.QLR).to_numpy()
        x = t.x.to_numpy()
        assert np.all(np.diff(gap[x > 0]) > 0)
        assert np.all(np.diff(gap[x < 0][::-1]) > 0)

    def teste_clr_impar_no_retorno(self):
        r = 0.07
        t = figure_data("fig2", y_grid=[r - self.s / 2, -r - self.s / 2])
        assert t["CLR"][0] == pytest.approx(-t["CLR"][1], rel=1e-12)
        assert np.allclose(t["CLR"], t["log_return"] ** 3, rtol=1e-15)

    def teste_grade_padrao(self):
        t = figure_data("fig3")
        assert len(t) == 601
        assert t.x.iloc[0] == pytest.approx(-0.15)
        assert list(t.columns) == ["x", "log_return", "RFM", "QLR"]

    def teste_figura_desconhecida(self):
        with pytest.raises(ErroValidacao):
            figure_data("fig4")


class TestePremio:
    def teste_ordem_da_caracteristica(self):
        assert characteristic_order(characteristic_by_label("RTM")) == 2
        assert characteristic_order(characteristic_by_label("SLR")) == 1
        assert characteristic_order(characteristic_by_label("LV")) is None

    def teste_mesma_medida_premio_nulo(self):
        caminhos = simulate_paths(GBM, _particoes(50)[0], 4_000, SeedSpec(41), components=("Y", "P2"))
        res = risk_premium(caminhos, characteristic_by_label("RTM"), synth_chain(100.0, 0.2, 1.0), MomentSpec(2))
        assert res["n_paths"] == 4_000
        assert res["implied"] == pytest.approx(0.0, abs=1e-6)
        assert abs(res["premium"]) <= 3 * res["realised_stderr"]

    def teste_saltos_negativos_premio_negativo(self):
        caminhos = simulate_paths(MERTON, _particoes(250)[0], 4_000, SeedSpec(42), components=("Y", "P2"))
        m2, m3, _ = merton_central_moments(MERTON, 1.0)
        chain = synth_chain(100.0, float(np.sqrt(m2)), 1.0)
        res = risk_premium(caminhos, characteristic_by_label("RTM"), chain, MomentSpec(2))
        assert res["premium"] < -3 * res["realised_stderr"]
        assert res["realised_mean"] == pytest.approx(m3, abs=4 * res["realised_stderr"])

    def teste_volatilidade_nula_premio_exatamente_zero(self):
        spec = ModelSpec.gbm(0.0, F0=1.0)
        caminhos = simulate_paths(spec, _particoes(5)[0], 3, SeedSpec(0), components=("Y", "P2"))
        chain = OptionChain(1.0, 1.0, np.linspace(0.5, 1.5, 21), np.zeros(21))
        res = risk_premium(caminhos, characteristic_by_label("RTM"), chain, MomentSpec(2))
        assert res["premium"] == 0.0

    def teste_lista_de_caminhos(self):
        bundle = simulate_paths(GBM, _particoes(4)[0], 10, SeedSpec(3), components=("Y", "P2"))
        chain = synth_chain(100.0, 0.2, 1.0)
        a = risk_premium(bundle, characteristic_by_label("RTM"), chain, MomentSpec(2))
        b = risk_premium(list(bundle), characteristic_by_label("RTM"), chain, MomentSpec(2))
        assert a["realised_mean"] == pytest.approx(b["realised_mean"], rel=1e-14)

    def teste_maturidades_diferentes(self):
        bundle = simulate_paths(GBM, _particoes(4)[0], 10, SeedSpec(3), components=("Y", "P2"))
        with pytest.raises(ErroValidacao):
            risk_premium(bundle, characteristic_by_label("RTM"), synth_chain(100.0, 0.2, 0.5), MomentSpec(2))

    def teste_implicito_vem_da_cadeia_normalizada(self):
        chain = synth_chain(5000.0, 0.2, 1.0)
        bundle = simulate_paths(ModelSpec.gbm(0.2, F0=5000.0), _particoes(4)[0], 10, SeedSpec(3),
                                components=("Y", "P2", "P3"))
        momentos = implied_moments_from_chain(chain)
        for rotulo, spec, chave in (("RTM", MomentSpec(2), "m3"), ("RFM", MomentSpec(3), "m4")):
            res = risk_premium(bundle, characteristic_by_label(rotulo), chain, spec)
            assert res["implied"] == momentos[chave]
        assert momentos["m4"] == pytest.approx(3 * 0.04**2, rel=1e-3)

    def teste_ordem_diferente(self):
        bundle = simulate_paths(GBM, _particoes(4)[0], 10, SeedSpec(3), components=("Y", "P2"))
        with pytest.raises(ErroValidacao):
            risk_premium(bundle, characteristic_by_label("RTM"), synth_chain(100.0, 0.2, 1.0), MomentSpec(3))


# ---------------------------------------------------------------------------
# critérios de aceitação com 10⁵ caminhos
# ---------------------------------------------------------------------------

@pytest.mark.lento
class TesteAceitacao:
    N = 100_000
    DIARIA = 250

    @pytest.mark.parametrize("rotulo, alvo", [("LV", 0.04), ("RTM", 0.0), ("RFM", 3 * 0.2**4)])
    def teste_vies_independente_da_particao(self, rotulo, alvo):
        r = bias_study(GBM, characteristic_by_label(rotulo), _particoes(1, 12, self.DIARIA), self.N,
                       SeedSpec(20240101), threshold=3.0, threads=4)
        for linha in r.rows:
            assert linha.target == pytest.approx(alvo, abs=1e-9)
        assert r.passed, r.summary_text()
        assert abs(partition_gap_z(r, "regular(1)", f"regular({self.DIARIA})")) <= 4.0

    def teste_controle_depende_da_particao(self):
        r = bias_study(GBM, characteristic_by_label("SLR"), _particoes(1, self.DIARIA), self.N,
                       SeedSpec(20240102), threads=4)
        gap = r.row("regular(1)").mean - r.row(f"regular({self.DIARIA})").mean
        esperado = 0.02**2 * (1 - 1 / self.DIARIA)
        erro = np.hypot(r.rows[0].stderr, r.rows[1].stderr)
        assert abs(gap - esperado) <= 4 * erro

    @pytest.mark.parametrize("rotulo, indice", [("RTM", 1), ("RFM", 2)])
    def teste_vies_dos_saltos(self, rotulo, indice):
        alvo = merton_central_moments(MERTON, 1.0)[indice]
        r = bias_study(MERTON, characteristic_by_label(rotulo), _particoes(self.DIARIA), self.N,
                       SeedSpec(20240103), threshold=3.0, threads=4)
        assert r.rows[0].target == pytest.approx(alvo, rel=1e-9)
        assert r.passed, r.summary_text()

    @pytest.mark.parametrize("a", ["Y^2", moment_polynomial(2)], ids=["Y2", "RTM"])
    def teste_eficiencia(self, a):
        r = efficiency_study(GBM, a, ["b_star", "fixed_at_start", "lattice_optimal"], _particoes(self.DIARIA)[0],
                             self.N, SeedSpec(20240104), threads=4)
        assert r.row("fixed_at_start - b_star").z > 2.0
        assert r.passed, r.summary_text()

    def teste_martingalidade(self):
        r = martingality_study(GBM, [0.5, -1.0], _particoes(self.DIARIA)[0], self.N, SeedSpec(20240105),
                               threads=4)
        assert r.passed, r.summary_text()

