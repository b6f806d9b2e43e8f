"""
Testes dos polinômios esparsos
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from erros import ErroComponente, ErroFormaNaoSuportada
from polinomios import Polynomial, as_polynomial

Y = Polynomial.variable("Y")
P2 = Polynomial.variable("P2")
P3 = Polynomial.variable("P3")

coeficientes = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)


def teste_aritmetica_basica():
    p = (Y + 1) * (Y - 1)
    assert p == Y**2 - 1
    assert (2 * Y - Y) == Y
    assert (Y - Y).is_zero()
    assert p.degree == 2
    assert p.variables == ("Y",)


def teste_derivada_do_polinomio_rtm():
    a = -2 * Y**3 + 3 * Y * P2
    assert a.derivative("Y") == -6 * Y**2 + 3 * P2
    assert a.derivative("P2") == 3 * Y
    assert a.derivative("P3").is_zero()
    assert a.jacobian(["Y", "P2"]) == (-6 * Y**2 + 3 * P2, 3 * Y)


def teste_variaveis_em_ordem_canonica():
    assert (P3 * Y + P2).variables == ("Y", "P2", "P3")


def teste_avaliacao_com_broadcast():
    a = Y**2 + 3 * P2
    valores = {"Y": np.array([1.0, 2.0]), "P2": 0.5}
    assert np.allclose(a.evaluate(valores), [2.5, 5.5])
    assert a.evaluate({"Y": 2.0, "P2": 1.0}) == pytest.approx(7.0)
    assert isinstance(a.evaluate({"Y": 2.0, "P2": 1.0}), float)


def teste_avaliacao_sem_componente():
    with pytest.raises(ErroComponente):
        (Y * P2).evaluate({"Y": 1.0})


def teste_constante_avalia_no_formato_dos_valores():
    assert np.array_equal(Polynomial.constant(2.0).evaluate({"Y": np.zeros(3)}), [2.0, 2.0, 2.0])


def teste_texto_estavel():
    a = -2 * Y**3 + 3 * Y * P2
    assert a.to_text() == "-2.0 * Y^3 + 3.0 * Y * P2"
    assert Polynomial.parse(a.to_text()) == a


def teste_parse_aceita_subtracao_e_sem_coeficiente():
    assert Polynomial.parse("Y^2 - 2 * P2") == Y**2 - 2 * P2
    assert Polynomial.parse("-2 * Y^3 + 3 * Y * P2") == -2 * Y**3 + 3 * Y * P2


@pytest.mark.parametrize("texto", ["exp(Y)", "Y ^ -1", "", "Y / P2"])
def teste_parse_rejeita_forma_nao_polinomial(texto):
    with pytest.raises(ErroFormaNaoSuportada):
        Polynomial.parse(texto)


def teste_as_polynomial():
    assert as_polynomial("Y^2") == Y**2
    assert as_polynomial(Y) is Y
    assert as_polynomial(3) == Polynomial.constant(3.0)
    with pytest.raises(ErroFormaNaoSuportada):
        as_polynomial(lambda u: u["Y"] ** 2)


def teste_expoente_invalido():
    with pytest.raises(ErroFormaNaoSuportada):
        Y ** -1


@given(coeficientes, coeficientes, coeficientes)
@settings(max_examples=100, deadline=None)
def teste_texto_ida_e_volta_exata(c1, c2, c3):
    p = c1 * Y**2 + c2 * Y * P2 + c3 * P3
    assert Polynomial.parse(p.to_text()) == p


@given(coeficientes, coeficientes, st.floats(min_value=-3, max_value=3), st.floats(min_value=0, max_value=9))
@settings(max_examples=100, deadline=None)
def teste_derivada_confere_com_diferenca_finita(c1, c2, y, p2):
    a = c1 * Y**3 + c2 * Y * P2
    h = 1e-6
    numerica = (a.evaluate({"Y": y + h, "P2": p2}) - a.evaluate({"Y": y - h, "P2": p2})) / (2 * h)
    exata = a.derivative("Y").evaluate({"Y": y, "P2": p2})
    assert exata == pytest.approx(numerica, rel=1e-5, abs=1e-5)
