"""
Testes do núcleo: partições, estados, caminhos e sementes
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from erros import ErroComponente, ErroValidacao
from nucleo import (ContractState, PathBundle, SeedSpec, StatePath, derive_geometric_components, make_partition,
                    refine, validate_components)


class TestePartition:
    def teste_regular_quatro_intervalos(self):
        p = make_partition(1.0, "regular", n=4)
        assert p.times == (0.0, 0.25, 0.5, 0.75, 1.0)
        assert p.N == 4
        assert p.T == 1.0

    def teste_regular_um_intervalo(self):
        assert make_partition(1.0, "regular", n=1).times == (0.0, 1.0)

    def teste_explicit_repassa_tempos(self):
        p = make_partition(2.0, "explicit", times=[0, 0.1, 1.9, 2.0])
        assert p.times == (0.0, 0.1, 1.9, 2.0)

    def teste_explicit_nao_crescente(self):
        with pytest.raises(ErroValidacao):
            make_partition(1.0, "explicit", times=[0, 0.5, 0.5, 1.0])

    def teste_explicit_nao_comeca_em_zero(self):
        with pytest.raises(ErroValidacao):
            make_partition(1.0, "explicit", times=[0.1, 0.5, 1.0])

    def teste_n_zero(self):
        with pytest.raises(ErroValidacao):
            make_partition(1.0, "regular", n=0)

    def teste_T_nao_positivo(self):
        with pytest.raises(ErroValidacao):
            make_partition(0.0, "regular", n=3)

    def teste_esquema_desconhecido(self):
        with pytest.raises(ErroValidacao):
            make_partition(1.0, "semanal", n=3)

    def teste_random_reprodutivel(self):
        a = make_partition(1.0, "random", n=50, seed=3)
        b = make_partition(1.0, "random", n=50, seed=3)
        assert a.times == b.times
        assert a.N == 50
        assert np.all(np.diff(a.array) > 0)

    @given(st.integers(min_value=1, max_value=200), st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=50, deadline=None)
    def teste_random_respeita_invariantes(self, n, seed):
        p = make_partition(2.5, "random", n=n, seed=seed)
        assert p.times[0] == 0.0
        assert p.times[-1] == 2.5
        assert p.N == n
        assert np.all(np.diff(p.array) > 0)

    def teste_array_somente_leitura(self):
        p = make_partition(1.0, "regular", n=3)
        with pytest.raises(ValueError):
            p.array[0] = 1.0


class TesteRefine:
    def teste_tempos_originais_preservados(self):
        p = make_partition(1.0, "explicit", times=[0, 0.3, 1.0])
        r = refine(p, 3)
        assert r.N == 6
        assert set(p.times) <= set(r.times)
        assert np.allclose(r.times[:4], [0.0, 0.1, 0.2, 0.3])

    def teste_fator_um_devolve_a_mesma(self):
        p = make_partition(1.0, "regular", n=5)
        assert refine(p, 1) == p

    def teste_fator_zero(self):
        with pytest.raises(ErroValidacao):
            refine(make_partition(1.0, "regular", n=2), 0)

    @given(st.integers(min_value=1, max_value=20), st.integers(min_value=1, max_value=8))
    @settings(max_examples=40, deadline=None)
    def teste_refine_regular_equivale_a_regular(self, n, fator):
        r = refine(make_partition(1.0, "regular", n=n), fator)
        assert r.N == n * fator
        assert np.allclose(r.array, np.linspace(0.0, 1.0, n * fator + 1), atol=1e-14)

    def teste_composicao_explicita(self):
        p = make_partition(1.0, "explicit", times=[0, 0.1, 0.7, 1.0])
        assert refine(refine(p, 3), 5) == refine(p, 15)
        assert refine(refine(p, 3), 5).times == refine(refine(p, 5), 3).times

    @given(st.integers(min_value=1, max_value=12), st.integers(min_value=0, max_value=1000),
           st.integers(min_value=1, max_value=7), st.integers(min_value=1, max_value=7))
    @settings(max_examples=60, deadline=None)
    def teste_composicao_em_particoes_aleatorias(self, n, seed, a, b):
        p = make_partition(1.3, "random", n=n, seed=seed)
        composta = refine(refine(p, a), b)
        assert composta == refine(p, a * b)
        assert composta.N == n * a * b
        assert set(p.times) <= set(composta.times)


class TesteContractState:
    def teste_componente_ausente(self):
        u = ContractState(0.0, {"F": 100.0, "Y": 4.6})
        with pytest.raises(ErroComponente):
            u["P2"]

    def teste_forward_nao_positivo(self):
        with pytest.raises(ErroValidacao):
            ContractState(0.0, {"F": 0.0})

    def teste_y_diferente_de_log_F(self):
        with pytest.raises(ErroValidacao):
            ContractState(0.0, {"F": 100.0, "y": 4.0})

    def teste_vlambda_coerente(self):
        y = np.log(100.0)
        u = ContractState(0.0, {"F": 100.0, "y": y, "Y": y - 0.02, "vlambda": 0.04})
        assert u["vlambda"] == pytest.approx(0.04)
        with pytest.raises(ErroValidacao):
            ContractState(0.0, {"F": 100.0, "y": y, "Y": y - 0.02, "vlambda": 0.05})

    def teste_veta_coerente(self):
        y = np.log(100.0)
        Z = 100.0 * (y + 0.02)
        ContractState(0.0, {"F": 100.0, "y": y, "Z": Z, "veta": 0.04})
        with pytest.raises(ErroValidacao):
            ContractState(0.0, {"F": 100.0, "y": y, "Z": Z, "veta": 0.0})

    def teste_componente_desconhecido(self):
        with pytest.raises(ErroValidacao):
            validate_components({"Q": 1.0})

    def teste_derivacao_geometrica(self):
        F = np.array([100.0, 110.0])
        valores = derive_geometric_components({"F": F, "Y": np.log(F) - 0.02, "Z": F * (np.log(F) + 0.02)})
        assert np.allclose(valores["vlambda"], 0.04)
        assert np.allclose(valores["veta"], 0.04)


class TesteCaminhos:
    def _caminho(self, deslocamento=0.0):
        p = make_partition(1.0, "regular", n=2)
        F = np.array([1.0, 1.1, 0.9]) + deslocamento
        return StatePath(p, {"F": F, "y": np.log(F)})

    def teste_from_states_ida_e_volta(self):
        caminho = self._caminho()
        refeito = StatePath.from_states(caminho.states)
        assert refeito.partition.times == caminho.partition.times
        assert np.array_equal(refeito.values["F"], caminho.values["F"])

    def teste_from_states_componentes_diferentes(self):
        estados = [ContractState(0.0, {"F": 1.0}), ContractState(1.0, {"F": 1.0, "y": 0.0})]
        with pytest.raises(ErroValidacao):
            StatePath.from_states(estados)

    def teste_tamanho_incompativel(self):
        with pytest.raises(ErroValidacao):
            StatePath(make_partition(1.0, "regular", n=2), {"F": np.ones(4)})

    def teste_bundle_from_paths_e_iteracao(self):
        caminhos = [self._caminho(0.0), self._caminho(0.5)]
        bundle = PathBundle.from_paths(caminhos)
        assert bundle.n_paths == 2
        assert len(list(bundle)) == 2
        assert np.array_equal(bundle.path(1).values["F"], caminhos[1].values["F"])
        assert np.array_equal(bundle.at(0)["F"], [1.0, 1.5])

    def teste_bundle_concat(self):
        a = PathBundle.from_paths([self._caminho(0.0)])
        b = PathBundle.from_paths([self._caminho(0.2), self._caminho(0.3)])
        juntos = PathBundle.concat([a, b])
        assert juntos.n_paths == 3

    def teste_bundle_particoes_diferentes(self):
        outro = StatePath(make_partition(1.0, "explicit", times=[0, 0.4, 1.0]), {"F": np.ones(3)})
        with pytest.raises(ErroValidacao):
            PathBundle.from_paths([self._caminho(), outro])


class TesteSeedSpec:
    def teste_mesma_semente_mesmo_sorteio(self):
        a = SeedSpec(42, 1).generator(3, 0).standard_normal(5)
        b = SeedSpec(42, 1).generator(3, 0).standard_normal(5)
        assert np.array_equal(a, b)

    def teste_fluxos_diferentes(self):
        a = SeedSpec(42, 1).generator(0).standard_normal(5)
        b = SeedSpec(42, 2).generator(0).standard_normal(5)
        assert not np.array_equal(a, b)

    def teste_semente_negativa(self):
        with pytest.raises(ErroValidacao):
            SeedSpec(-1)

    def teste_child(self):
        assert SeedSpec(7, 0).child(5) == SeedSpec(7, 5)
