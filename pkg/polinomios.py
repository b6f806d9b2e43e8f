"""
Polinômios Esparsos nos Componentes
Representação de a(u) como mapa de expoentes -> coeficiente, com derivação
exata (para b* = -J^a) e impressão/leitura em texto estável
"""

import re
from typing import Dict, Iterable, Mapping, Optional, Tuple, Union

import numpy as np

from erros import ErroComponente, ErroFormaNaoSuportada
from nucleo import COMPONENTES

Monomio = Tuple[Tuple[str, int], ...]

_NOME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_FATOR = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)(?:\s*\^\s*(\d+))?$")
_SEPARADOR = re.compile(r"\s+([+-])\s+")


def ordem_componente(nome: str):
    if nome in COMPONENTES:
        return (0, COMPONENTES.index(nome), nome)
    return (1, 0, nome)


def _canonico(fatores: Iterable[Tuple[str, int]]) -> Monomio:
    acumulado: Dict[str, int] = {}
    for nome, exp in fatores:
        if exp:
            acumulado[nome] = acumulado.get(nome, 0) + int(exp)
    return tuple(sorted(acumulado.items(), key=lambda par: ordem_componente(par[0])))


class Polynomial:
    """Polinômio esparso sobre componentes nomeados"""

    __slots__ = ("_termos",)

    def __init__(self, termos: Optional[Mapping[Monomio, float]] = None):
        limpos: Dict[Monomio, float] = {}
        for mono, coef in (termos or {}).items():
            mono = _canonico(mono)
            coef = float(coef)
            total = limpos.get(mono, 0.0) + coef
            if total == 0.0:
                limpos.pop(mono, None)
            else:
                limpos[mono] = total
        self._termos = limpos

    @classmethod
    def constant(cls, c: float) -> "Polynomial":
        return cls({(): c})

    @classmethod
    def variable(cls, nome: str) -> "Polynomial":
        if not _NOME.match(nome):
            raise ErroFormaNaoSuportada(f"Nome de componente inválido: {nome!r}")
        return cls({((nome, 1),): 1.0})

    @property
    def terms(self) -> Dict[Monomio, float]:
        return dict(self._termos)

    @property
    def variables(self) -> Tuple[str, ...]:
        nomes = {nome for mono in self._termos for nome, _ in mono}
        return tuple(sorted(nomes, key=ordem_componente))

    @property
    def degree(self) -> int:
        return max((sum(e for _, e in mono) for mono in self._termos), default=0)

    def is_zero(self) -> bool:
        return not self._termos

    # aritmética

    def _como_poly(self, outro) -> "Polynomial":
        if isinstance(outro, Polynomial):
            return outro
        if isinstance(outro, (int, float, np.floating, np.integer)):
            return Polynomial.constant(float(outro))
        return NotImplemented

    def __add__(self, outro):
        outro = self._como_poly(outro)
        if outro is NotImplemented:
            return outro
        termos = dict(self._termos)
        for mono, coef in outro._termos.items():
            termos[mono] = termos.get(mono, 0.0) + coef
        return Polynomial(termos)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({mono: -coef for mono, coef in self._termos.items()})

    def __sub__(self, outro):
        outro = self._como_poly(outro)
        if outro is NotImplemented:
            return outro
        return self + (-outro)

    def __rsub__(self, outro):
        return (-self) + outro

    def __mul__(self, outro):
        outro = self._como_poly(outro)
        if outro is NotImplemented:
            return outro
        termos: Dict[Monomio, float] = {}
        for m1, c1 in self._termos.items():
            for m2, c2 in outro._termos.items():
                mono = _canonico(m1 + m2)
                termos[mono] = termos.get(mono, 0.0) + c1 * c2
        return Polynomial(termos)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if int(k) != k or k < 0:
            raise ErroFormaNaoSuportada("Expoente deve ser inteiro não negativo")
        resultado = Polynomial.constant(1.0)
        for _ in range(int(k)):
            resultado = resultado * self
        return resultado

    def __eq__(self, outro):
        outro = self._como_poly(outro)
        if outro is NotImplemented:
            return outro
        return self._termos == outro._termos

    def __hash__(self):
        return hash(frozenset(self._termos.items()))

    def __repr__(self):
        return f"Polynomial({self.to_text()!r})"

    # cálculo

    def derivative(self, nome: str) -> "Polynomial":
        """Derivada parcial exata em relação a um componente"""
        termos: Dict[Monomio, float] = {}
        for mono, coef in self._termos.items():
            expoentes = dict(mono)
            e = expoentes.get(nome, 0)
            if e == 0:
                continue
            expoentes[nome] = e - 1
            novo = _canonico(expoentes.items())
            termos[novo] = termos.get(novo, 0.0) + coef * e
        return Polynomial(termos)

    def jacobian(self, nomes: Iterable[str]) -> Tuple["Polynomial", ...]:
        return tuple(self.derivative(nome) for nome in nomes)

    def evaluate(self, valores: Mapping[str, object]):
        """Avalia com broadcasting do numpy sobre os valores dos componentes"""
        faltando = set(self.variables) - set(valores)
        if faltando:
            raise ErroComponente(faltando, "avaliação de polinômio")
        arrays = [np.asarray(v, dtype=float) for v in valores.values()]
        forma = np.broadcast(*arrays).shape if arrays else ()
        resultado = np.zeros(forma)
        for mono, coef in self._termos.items():
            termo = np.full(forma, coef)
            for nome, e in mono:
                termo = termo * np.asarray(valores[nome], dtype=float) ** e
            resultado = resultado + termo
        return resultado if forma else float(resultado)

    # texto

    def to_text(self) -> str:
        """Formato `coef * Y^i * P2^j + ...`; coeficientes em repr (ida e volta exata)"""
        if not self._termos:
            return "0.0"
        chave = lambda item: (-sum(e for _, e in item[0]), [ordem_componente(n) + (e,) for n, e in item[0]])
        partes = []
        for mono, coef in sorted(self._termos.items(), key=chave):
            fatores = [repr(float(coef))]
            fatores += [nome if e == 1 else f"{nome}^{e}" for nome, e in mono]
            partes.append(" * ".join(fatores))
        return " + ".join(partes)

    @classmethod
    def parse(cls, texto: str) -> "Polynomial":
        """Lê o formato produzido por to_text (aceita também '-' entre termos)"""
        if not isinstance(texto, str) or not texto.strip():
            raise ErroFormaNaoSuportada("Texto de polinômio vazio")
        pedacos = _SEPARADOR.split(" " + texto.strip())
        # split com grupo de captura: [primeiro, sinal, termo, sinal, termo, ...]
        termos = [(+1.0, pedacos[0])]
        for sinal, termo in zip(pedacos[1::2], pedacos[2::2]):
            termos.append((1.0 if sinal == "+" else -1.0, termo))

        resultado: Dict[Monomio, float] = {}
        for sinal, termo in termos:
            coef, mono = _ler_termo(termo.strip(), texto)
            mono = _canonico(mono)
            resultado[mono] = resultado.get(mono, 0.0) + sinal * coef
        return cls(resultado)


def _ler_termo(termo: str, original: str):
    if not termo:
        raise ErroFormaNaoSuportada(f"Termo vazio em {original!r}")
    negativo = False
    if termo.startswith("-") and not _e_numero(termo.split("*")[0].strip()):
        negativo = True
        termo = termo[1:].strip()
    coef = 1.0
    mono = []
    for i, fator in enumerate(f.strip() for f in termo.split("*")):
        if i == 0 and _e_numero(fator):
            coef = float(fator)
            continue
        casamento = _FATOR.match(fator)
        if not casamento:
            raise ErroFormaNaoSuportada(f"Fator não polinomial {fator!r} em {original!r}")
        mono.append((casamento.group(1), int(casamento.group(2) or 1)))
    return (-coef if negativo else coef), mono


def _e_numero(texto: str) -> bool:
    try:
        float(texto)
    except ValueError:
        return False
    return True


def as_polynomial(a: Union["Polynomial", str]) -> Polynomial:
    """Aceita Polynomial ou texto; qualquer outra forma não é suportada"""
    if isinstance(a, Polynomial):
        return a
    if isinstance(a, str):
        return Polynomial.parse(a)
    if isinstance(a, (int, float)):
        return Polynomial.constant(float(a))
    raise ErroFormaNaoSuportada(f"a deve ser polinomial; recebido {type(a).__name__}")
