"""
Testes da replicação de contratos por opções OTM
"""

import numpy as np
import pytest

from caracteristicas import implied_characteristic
from erros import ErroDominio, ErroGradeInsuficiente, ErroValidacao
from replicacao import (OptionChain, QuadratureSpec, atm_implied_vol, bs_otm_price, bs_price, entropy_contract,
                        gamma_weight, gaussian_contracts, implied_moments_from_chain, replicate_contracts,
                        replicate_power_contract, synth_chain)


@pytest.fixture(scope="module")
def cadeia_referencia():
    return synth_chain(100.0, 0.2, 1.0, 2001, 8.0)


class TesteOptionChain:
    def teste_strikes_fora_de_ordem(self):
        with pytest.raises(ErroValidacao):
            OptionChain(100.0, 1.0, [90.0, 80.0, 110.0], [1.0, 0.5, 1.0])

    def teste_strikes_repetidos(self):
        with pytest.raises(ErroValidacao):
            OptionChain(100.0, 1.0, [90.0, 90.0, 110.0], [1.0, 1.0, 1.0])

    def teste_preco_negativo(self):
        with pytest.raises(ErroDominio):
            OptionChain(100.0, 1.0, [90.0, 110.0], [1.0, -0.1])

    def teste_forward_nao_positivo(self):
        with pytest.raises(ErroDominio):
            OptionChain(0.0, 1.0, [90.0, 110.0], [1.0, 1.0])

    def teste_tamanhos_diferentes(self):
        with pytest.raises(ErroValidacao):
            OptionChain(100.0, 1.0, [90.0, 110.0], [1.0])

    def teste_put_ate_o_forward(self):
        chain = OptionChain(100.0, 1.0, [90.0, 100.0, 110.0], [1.0, 4.0, 1.0])
        assert chain.is_put.tolist() == [True, True, False]

    def teste_normalizada(self):
        chain = OptionChain(50.0, 1.0, [40.0, 50.0, 60.0], [1.0, 2.0, 1.0]).normalised()
        assert chain.forward == 1.0
        assert np.allclose(chain.strikes, [0.8, 1.0, 1.2])
        assert np.allclose(chain.prices, [0.02, 0.04, 0.02])


class TesteBlack:
    def teste_paridade_put_call(self):
        call = bs_price(100.0, 90.0, 0.3, 0.5, "call")
        put = bs_price(100.0, 90.0, 0.3, 0.5, "put")
        assert call - put == pytest.approx(10.0, abs=1e-10)

    def teste_otm_escolhe_put_ou_call(self):
        assert bs_otm_price(100.0, 95.0, 0.2, 1.0) == pytest.approx(bs_price(100.0, 95.0, 0.2, 1.0, "put"))
        assert bs_otm_price(100.0, 105.0, 0.2, 1.0) == pytest.approx(bs_price(100.0, 105.0, 0.2, 1.0, "call"))

    def teste_volatilidade_negativa(self):
        with pytest.raises(ErroDominio):
            bs_otm_price(100.0, 100.0, -0.2, 1.0)

    def teste_tipo_desconhecido(self):
        with pytest.raises(ErroValidacao):
            bs_price(100.0, 100.0, 0.2, 1.0, "digital")

    def teste_vol_atm_recuperada(self):
        assert atm_implied_vol(synth_chain(100.0, 0.25, 0.5, 401)) == pytest.approx(0.25, abs=1e-8)


class TesteSynthChain:
    def teste_extremos_da_grade(self, cadeia_referencia):
        assert cadeia_referencia.strikes[0] == pytest.approx(100.0 * np.exp(-1.6), rel=1e-12)
        assert cadeia_referencia.strikes[-1] == pytest.approx(100.0 * np.exp(1.6), rel=1e-12)
        assert cadeia_referencia.strikes[1000] == 100.0
        assert cadeia_referencia.n_points == 2001

    def teste_poucos_pontos(self):
        with pytest.raises(ErroGradeInsuficiente):
            synth_chain(100.0, 0.2, 1.0, 10)


class TesteGamma:
    def teste_pesos_conhecidos(self):
        assert gamma_weight(1, 2.0) == pytest.approx(-0.25)
        assert gamma_weight(2, 1.0) == pytest.approx(2.0)
        assert gamma_weight(3, np.e) == pytest.approx(3.0 / np.e**2)

    def teste_argumentos_invalidos(self):
        with pytest.raises(ErroValidacao):
            gamma_weight(0, 1.0)
        with pytest.raises(ErroDominio):
            gamma_weight(2, 0.0)


class TesteReplicacao:
    def teste_log_contract(self, cadeia_referencia):
        Y = replicate_power_contract(cadeia_referencia, 1, QuadratureSpec())
        # erro relativo à correção σ²T/2
        assert abs(Y - (np.log(100.0) - 0.02)) < 1e-4 * 0.02

    def teste_contratos_contra_forma_fechada(self, cadeia_referencia):
        estado = replicate_contracts(cadeia_referencia)
        fechado = gaussian_contracts(100.0, 0.2, 1.0)
        for nome in ("Y", "P2", "P3", "P4", "Z"):
            assert estado[nome] == pytest.approx(fechado[nome], rel=1e-4), nome
        assert estado["P2"] == pytest.approx((np.log(100.0) - 0.02) ** 2 + 0.04, rel=1e-4)

    def teste_entropia(self, cadeia_referencia):
        assert entropy_contract(cadeia_referencia) == pytest.approx(100.0 * (np.log(100.0) + 0.02), rel=1e-4)

    def teste_momentos_implicitos(self, cadeia_referencia):
        m = implied_moments_from_chain(cadeia_referencia)
        assert m["m2"] == pytest.approx(0.04, rel=1e-3)
        assert m["m3"] == pytest.approx(0.0, abs=1e-6)
        assert m["m4"] == pytest.approx(0.0048, rel=1e-3)

    def teste_caracteristica_implicita_dos_contratos(self, cadeia_referencia):
        estado = replicate_contracts(cadeia_referencia)
        assert implied_characteristic(1, estado) == pytest.approx(0.04, rel=1e-3)
        assert implied_characteristic(2, estado) == pytest.approx(0.0, abs=1e-5)
        assert implied_characteristic(3, estado) == pytest.approx(3 * 0.2**4, rel=1e-3)

    def teste_precos_nulos(self):
        strikes = np.linspace(50.0, 150.0, 20)
        estado = replicate_contracts(OptionChain(100.0, 1.0, strikes, np.zeros(20)))
        assert estado["Y"] == np.log(100.0)
        assert estado["Z"] == pytest.approx(100.0 * np.log(100.0), rel=1e-15)

    def teste_grade_insuficiente(self):
        strikes = np.linspace(50.0, 150.0, 10)
        chain = OptionChain(100.0, 1.0, strikes, bs_otm_price(100.0, strikes, 0.2, 1.0))
        with pytest.raises(ErroGradeInsuficiente, match="16"):
            replicate_contracts(chain)

    def teste_grade_log_uniforme(self):
        densa = synth_chain(100.0, 0.2, 1.0, 4001, 10.0)
        quad = QuadratureSpec(grid="log-uniform", n_points=2001, width_in_stdevs=8.0)
        estado = replicate_contracts(densa, quad)
        fechado = gaussian_contracts(100.0, 0.2, 1.0)
        for nome in ("Y", "P2", "Z"):
            assert estado[nome] == pytest.approx(fechado[nome], rel=1e-4), nome

    def teste_quadratura_invalida(self):
        with pytest.raises(ErroValidacao):
            QuadratureSpec(rule="simpson")
        with pytest.raises(ErroValidacao):
            QuadratureSpec(n_points=8)
        with pytest.raises(ErroValidacao):
            QuadratureSpec(grid="uniforme")

    @pytest.mark.parametrize("i", [1, 2, 3, 4])
    def teste_convergencia_ao_refinar(self, i):
        tamanhos = [251, 501, 1001, 2001, 4001]
        valores = [replicate_power_contract(synth_chain(100.0, 0.2, 1.0, n), i) for n in tamanhos]
        diferencas = np.abs(np.diff(valores))
        assert np.all(np.diff(diferencas) < 0)

    @pytest.mark.parametrize("i", [1, 2, 3, 4])
    def teste_truncamento(self, i):
        # mesmo passo em log-strike nas duas larguras
        estreita = synth_chain(100.0, 0.4, 2.0, 2001, 8.0)
        larga = synth_chain(100.0, 0.4, 2.0, 2501, 10.0)
        a = replicate_power_contract(estreita, i)
        b = replicate_power_contract(larga, i)
        assert abs(a - b) < 1e-6 * abs(b)
