"""
Biblioteca de Características Realizadas
Kernels geométricos (λ, η, τ, ρ), pares (a, b) na forma
f(u_r, u_s) = a(u_s) - a(u_r) + b(u_r)ᵀ(u_s - u_r), pesos eficientes b*,
família geométrica de seis coeficientes e a transformação m
"""

import logging
from dataclasses import dataclass, field
from math import comb
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import eigh, expm

from erros import (ErroComponente, ErroFormaNaoSuportada, ErroLeitura,
                   ErroSingularidade, ErroValidacao)
from nucleo import ContractState, PathBundle, StatePath
from polinomios import Polynomial, as_polynomial, ordem_componente

logger = logging.getLogger(__name__)

# Abaixo deste |δy| λ e η usam série de Taylor de sexta ordem
CORTE_SERIE = 1e-5
# τ cancela até x³ na forma fechada; série até x¹⁵ abaixo deste corte
CORTE_SERIE_TAU = 0.1
TERMOS_SERIE_TAU = 15
RESIDUO_AUTOBASE = 1e-10
LIMIAR_SINGULAR = 1e-12

Valores = Mapping[str, np.ndarray]


def _saida(arr):
    arr = np.asarray(arr, dtype=float)
    return arr if arr.ndim else float(arr)


def _serie_ou_fechada(dy, serie, fechada, corte=CORTE_SERIE):
    x = np.asarray(dy, dtype=float)
    pequeno = np.abs(x) < corte
    with np.errstate(over="ignore", invalid="ignore"):
        resultado = np.where(pequeno, serie(x), fechada(x))
    return _saida(resultado)


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

def lambda_kernel(dy):
    """λ(δy) = 2(e^δy - 1 - δy), variância log"""
    return _serie_ou_fechada(
        dy,
        lambda x: x**2 + x**3 / 3 + x**4 / 12 + x**5 / 60 + x**6 / 360,
        lambda x: 2.0 * (np.expm1(x) - x),
    )


def eta_kernel(dy):
    """η(δy) = 2(δy e^δy - e^δy + 1), variância de entropia"""
    return _serie_ou_fechada(
        dy,
        lambda x: x**2 + 2 * x**3 / 3 + x**4 / 4 + x**5 / 15 + x**6 / 72,
        lambda x: 2.0 * (x * np.expm1(x) - (np.expm1(x) - x)),
    )


def _serie_tau(x):
    # 6 Σ_{k>=3} (k-2) x^k / k!
    termo = x**3 / 6.0
    soma = np.zeros_like(x)
    for k in range(3, TERMOS_SERIE_TAU + 1):
        soma = soma + (k - 2) * termo
        termo = termo * x / (k + 1)
    return 6.0 * soma


def tau_kernel(dy):
    """τ(δy) = 6(δy e^δy - 2e^δy + δy + 2); τ(δy)/δy³ -> 1"""
    return _serie_ou_fechada(
        dy,
        _serie_tau,
        lambda x: 6.0 * (x * np.expm1(x) - 2.0 * (np.expm1(x) - x)),
        corte=CORTE_SERIE_TAU,
    )


def rho_term(dveta, dy):
    """ρ = 3 δv^η (e^δy - 1)"""
    return _saida(3.0 * np.asarray(dveta, dtype=float) * np.expm1(np.asarray(dy, dtype=float)))


def power_return(dy, p: int):
    """Potência simples do log-retorno (SLR, CLR, QLR)"""
    if p not in (2, 3, 4):
        raise ErroValidacao(f"Potência deve ser 2, 3 ou 4; recebido {p}")
    return _saida(np.asarray(dy, dtype=float) ** p)


# ---------------------------------------------------------------------------
# tipos
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentSpec:
    """Ordem n da família de momentos (característica de ordem n+1)"""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ErroValidacao(f"MomentSpec exige n >= 1, recebido {self.n}")
        object.__setattr__(self, "n", int(self.n))


@dataclass(frozen=True)
class GeometricCoeffs:
    """(c5, c6λ, c6η, c7, c8, c9); pelo menos um entre c8 e c9 é zero"""

    c5: float = 0.0
    c6_lambda: float = 0.0
    c6_eta: float = 0.0
    c7: float = 0.0
    c8: float = 0.0
    c9: float = 0.0

    def __post_init__(self):
        for nome in ("c5", "c6_lambda", "c6_eta", "c7", "c8", "c9"):
            valor = float(getattr(self, nome))
            if not np.isfinite(valor):
                raise ErroValidacao(f"Coeficiente {nome} não finito")
            object.__setattr__(self, nome, valor)
        if self.c8 != 0.0 and self.c9 != 0.0:
            raise ErroValidacao("Pelo menos um entre c8 e c9 deve ser zero")

    @classmethod
    def from_sequence(cls, valores: Sequence[float]) -> "GeometricCoeffs":
        if len(valores) != 6:
            raise ErroValidacao(f"São esperados 6 coeficientes, recebidos {len(valores)}")
        return cls(*valores)

    def as_tuple(self) -> Tuple[float, ...]:
        return (self.c5, self.c6_lambda, self.c6_eta, self.c7, self.c8, self.c9)

    @property
    def a_coeffs(self) -> Tuple[float, float, float]:
        """Coeficientes de a sobre a base (ln F, Y², Z/F)"""
        return (self.c5 + 2.0 * self.c6_lambda - 2.0 * self.c6_eta, 4.0 * self.c8, 2.0 * self.c6_eta)


@dataclass(frozen=True)
class Characteristic:
    """
    Característica de dois pontos f(u_r, u_s).

    `a` recebe um mapeamento componente -> array e devolve array;
    `b` devolve uma tupla com um array por componente de `components`.
    `kernel`, quando presente, soma k(y_s - y_r) e quebra a agregação
    (usado nos controles SLR/CLR/QLR).
    """

    label: str
    components: Tuple[str, ...]
    a: Callable[[Valores], np.ndarray]
    b: Callable[[Valores], Tuple[np.ndarray, ...]]
    kernel: Optional[Callable[[np.ndarray], np.ndarray]] = None
    kernel_label: str = ""
    a_poly: Optional[Polynomial] = field(default=None, compare=False)
    b_polys: Optional[Tuple[Polynomial, ...]] = field(default=None, compare=False)
    coeffs: Optional[GeometricCoeffs] = None
    order: Optional[int] = None
    family: str = "polynomial"
    implied_label: str = ""
    implied: Optional[Callable[[object], float]] = field(default=None, compare=False)

    @property
    def required_components(self) -> Tuple[str, ...]:
        if self.kernel is not None and "y" not in self.components:
            return self.components + ("y",)
        return self.components

    @property
    def aggregating(self) -> bool:
        return self.kernel is None

    def describe(self) -> str:
        comps = ", ".join(self.components) or "-"
        return f"{self.label} [{comps}]"


# ---------------------------------------------------------------------------
# acesso a componentes
# ---------------------------------------------------------------------------

def _mapa(obj) -> Mapping[str, object]:
    if isinstance(obj, ContractState):
        return obj.components
    if isinstance(obj, (StatePath, PathBundle)):
        return obj.values
    if isinstance(obj, Mapping):
        return obj
    raise ErroValidacao(f"Estado não reconhecido: {type(obj).__name__}")


def component_values(obj, nomes: Sequence[str], contexto: str = "") -> Dict[str, np.ndarray]:
    """Extrai os componentes pedidos; y é derivado de F quando ausente"""
    mapa = _mapa(obj)
    valores = {}
    faltando = []
    for nome in nomes:
        if nome in mapa:
            valores[nome] = np.asarray(mapa[nome], dtype=float)
        elif nome == "y" and "F" in mapa:
            valores[nome] = np.log(np.asarray(mapa["F"], dtype=float))
        else:
            faltando.append(nome)
    if faltando:
        raise ErroComponente(faltando, contexto)
    return valores


def central_components(obj) -> Dict[str, np.ndarray]:
    """v2 = P2 - Y², v3 = P3 - 3 P2 Y + 2 Y³ (momentos centrais condicionais de y_T)"""
    v = component_values(obj, ("Y", "P2"), "momentos centrais")
    resultado = {"v2": _saida(v["P2"] - v["Y"] ** 2)}
    mapa = _mapa(obj)
    if "P3" in mapa:
        P3 = np.asarray(mapa["P3"], dtype=float)
        resultado["v3"] = _saida(P3 - 3.0 * v["P2"] * v["Y"] + 2.0 * v["Y"] ** 3)
    return resultado


def geometric_state(obj) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """x = (y, vλ, vη) a partir de (F, Y, Z)"""
    v = component_values(obj, ("F", "y", "Y", "Z"), "estado geométrico")
    return (_saida(v["y"]), _saida(2.0 * (v["y"] - v["Y"])), _saida(2.0 * (v["Z"] / v["F"] - v["y"])))


# ---------------------------------------------------------------------------
# avaliação
# ---------------------------------------------------------------------------

def eval_characteristic(c: Characteristic, u_r, u_s):
    """Valor de f(u_r, u_s); f(u, u) = 0 exatamente"""
    if isinstance(u_r, ContractState) and isinstance(u_s, ContractState) and u_r.time > u_s.time:
        raise ErroValidacao(f"u_r.time={u_r.time} posterior a u_s.time={u_s.time}")
    nomes = c.required_components
    vr = component_values(u_r, nomes, c.label)
    vs = component_values(u_s, nomes, c.label)
    total = np.asarray(c.a(vs), dtype=float) - np.asarray(c.a(vr), dtype=float)
    for peso, nome in zip(c.b(vr), c.components):
        total = total + peso * (vs[nome] - vr[nome])
    if c.kernel is not None:
        total = total + c.kernel(vs["y"] - vr["y"])
    return _saida(total)


def _valores_caminho(c: Characteristic, caminho) -> Dict[str, np.ndarray]:
    if isinstance(caminho, (StatePath, PathBundle)):
        if len(caminho.partition.times) < 2:
            raise ErroValidacao("Caminho precisa de pelo menos dois estados")
    valores = component_values(caminho, c.required_components, c.label)
    for nome, arr in valores.items():
        if arr.ndim == 0 or arr.shape[-1] < 2:
            raise ErroValidacao(f"Caminho precisa de pelo menos dois estados ({nome})")
    return valores


def _fatia(valores: Dict[str, np.ndarray], indice) -> Dict[str, np.ndarray]:
    return {nome: arr[..., indice] for nome, arr in valores.items()}


def realise(c: Characteristic, caminho):
    """
    Característica realizada ao longo de um caminho (forma telescópica).

    a(u_N) - a(u_0) + Σ b(u_{i-1})ᵀ(u_i - u_{i-1}) [+ Σ k(δy_i)]

    Aceita StatePath (devolve float) ou PathBundle (devolve um valor por caminho).
    """
    valores = _valores_caminho(c, caminho)
    total = np.asarray(c.a(_fatia(valores, -1)), dtype=float) - np.asarray(c.a(_fatia(valores, 0)), dtype=float)
    anteriores = _fatia(valores, slice(None, -1))
    for peso, nome in zip(c.b(anteriores), c.components):
        total = total + np.sum(peso * np.diff(valores[nome], axis=-1), axis=-1)
    if c.kernel is not None:
        total = total + np.sum(c.kernel(np.diff(valores["y"], axis=-1)), axis=-1)
    return _saida(total)


def realise_held(c: Characteristic, caminho, hold: Optional[int] = None):
    """
    Como realise, mas com b rebalanceado apenas a cada `hold` intervalos
    (None mantém b fixo no valor de u_0 durante todo o caminho).
    """
    valores = _valores_caminho(c, caminho)
    n_intervalos = next(iter(valores.values())).shape[-1] - 1 if valores else 0
    if hold is not None and (int(hold) != hold or hold < 1):
        raise ErroValidacao(f"hold deve ser inteiro >= 1, recebido {hold}")
    passo = n_intervalos if hold is None else int(hold)
    indices = (np.arange(n_intervalos) // max(passo, 1)) * max(passo, 1)

    total = np.asarray(c.a(_fatia(valores, -1)), dtype=float) - np.asarray(c.a(_fatia(valores, 0)), dtype=float)
    rebalanceados = _fatia(valores, indices)
    for peso, nome in zip(c.b(rebalanceados), c.components):
        total = total + np.sum(peso * np.diff(valores[nome], axis=-1), axis=-1)
    if c.kernel is not None:
        total = total + np.sum(c.kernel(np.diff(valores["y"], axis=-1)), axis=-1)
    return _saida(total)


def realise_increments(c: Characteristic, caminho) -> np.ndarray:
    """f(u_{i-1}, u_i) por intervalo (soma ingênua, usada como conferência)"""
    valores = _valores_caminho(c, caminho)
    return np.asarray(eval_characteristic(c, _fatia(valores, slice(None, -1)), _fatia(valores, slice(1, None))))


# ---------------------------------------------------------------------------
# construtores polinomiais
# ---------------------------------------------------------------------------

def _ordenar(nomes) -> Tuple[str, ...]:
    return tuple(sorted(set(nomes), key=ordem_componente))


def b_star(a, components: Optional[Sequence[str]] = None) -> Dict[str, Polynomial]:
    """
    Pesos eficientes b* = -Jᵃ por derivação polinomial exata.

    Args:
        a: Polynomial ou texto no formato `coef * Y^i * P2^j + ...`
        components: componentes de u (padrão: variáveis de a)

    Returns:
        dict componente -> polinômio de b*
    """
    if callable(a) and not isinstance(a, Polynomial):
        raise ErroFormaNaoSuportada("b_star exige a polinomial; funções arbitrárias não são suportadas")
    poly = as_polynomial(a)
    nomes = _ordenar(poly.variables) if components is None else tuple(components)
    return {nome: -poly.derivative(nome) for nome in nomes}


def _implicita_polinomial(a_poly: Polynomial) -> Optional[Callable[[object], float]]:
    """E_0[a(u_T)] - a(u_0) quando a só envolve Y, P2..P4 (na maturidade P_i = y_Tⁱ)"""
    graus = {"Y": 1, "P2": 2, "P3": 3, "P4": 4}
    if any(nome not in graus for nome in a_poly.variables):
        return None
    terminal: Dict[int, float] = {}
    for mono, coef in a_poly.terms.items():
        grau = sum(graus[nome] * e for nome, e in mono)
        if grau > 4:
            return None
        terminal[grau] = terminal.get(grau, 0.0) + coef
    exigidos = sorted({{1: "Y", 2: "P2", 3: "P3", 4: "P4"}[g] for g in terminal if g > 0} | set(a_poly.variables))

    def implicita(u0) -> float:
        v = component_values(u0, exigidos, "característica implícita")
        potencias = {0: 1.0, 1: v.get("Y"), 2: v.get("P2"), 3: v.get("P3"), 4: v.get("P4")}
        esperado = sum(coef * potencias[g] for g, coef in terminal.items())
        return _saida(esperado - a_poly.evaluate(v))

    return implicita


def characteristic_from_polynomial(a, components: Optional[Sequence[str]] = None,
                                   b: Optional[Mapping[str, object]] = None,
                                   label: str = "") -> Characteristic:
    """Característica com a polinomial e b dado (ou b* quando omitido)"""
    poly = as_polynomial(a)
    nomes = _ordenar(poly.variables) if components is None else tuple(components)
    fora = set(poly.variables) - set(nomes)
    if fora:
        raise ErroValidacao(f"a usa componentes fora de u: {sorted(fora)}")
    if b is None:
        pesos = b_star(poly, nomes)
    else:
        pesos = {nome: as_polynomial(b.get(nome, 0.0)) for nome in nomes}
        extras = set(b) - set(nomes)
        if extras:
            raise ErroValidacao(f"b com componentes fora de u: {sorted(extras)}")
    b_polys = tuple(pesos[nome] for nome in nomes)

    def func_a(v):
        return poly.evaluate(_restrito(v, nomes))

    def func_b(v):
        sub = _restrito(v, nomes)
        return tuple(p.evaluate(sub) for p in b_polys)

    return Characteristic(
        label=label or poly.to_text(),
        components=nomes,
        a=func_a,
        b=func_b,
        a_poly=poly,
        b_polys=b_polys,
        family="polynomial",
        implied_label="E0[a(uT)] - a(u0)",
        implied=_implicita_polinomial(poly),
    )


def _restrito(valores: Mapping[str, object], nomes) -> Dict[str, object]:
    return {nome: valores[nome] for nome in nomes}


# ---------------------------------------------------------------------------
# momentos
# ---------------------------------------------------------------------------

ROTULOS_MOMENTO = {1: "RV", 2: "RTM", 3: "RFM"}
COMPONENTES_POTENCIA = {1: "Y", 2: "P2", 3: "P3", 4: "P4"}


def moment_polynomial(n: int) -> Polynomial:
    """a(u) = n(-Y)^{n+1} - Σ_{i=2..n} C(n+1, i) P_i (-Y)^{n+1-i}"""
    menos_y = -Polynomial.variable("Y")
    a = n * menos_y ** (n + 1)
    for i in range(2, n + 1):
        a = a - comb(n + 1, i) * Polynomial.variable(COMPONENTES_POTENCIA[i]) * menos_y ** (n + 1 - i)
    return a


def implied_characteristic(spec: Union[MomentSpec, int], u_0) -> float:
    """
    Momento central implícito de ordem n+1:
    Σ_{i=0..n+1} C(n+1, i) P_i (-Y)^{n+1-i}, com P_0 = 1 e P_1 = Y.
    """
    spec = spec if isinstance(spec, MomentSpec) else MomentSpec(spec)
    ordem = spec.n + 1
    if ordem > 4:
        raise ErroValidacao(f"Momento implícito de ordem {ordem} exige P{ordem}, fora do escopo")
    exigidos = ["Y"] + [COMPONENTES_POTENCIA[i] for i in range(2, ordem + 1)]
    v = component_values(u_0, exigidos, f"momento implícito de ordem {ordem}")
    Y = v["Y"]
    potencias = {0: 1.0, 1: Y, **{i: v[COMPONENTES_POTENCIA[i]] for i in range(2, ordem + 1)}}
    total = sum(comb(ordem, i) * potencias[i] * (-Y) ** (ordem - i) for i in range(ordem + 1))
    return _saida(total)


def moment_characteristic(spec: Union[MomentSpec, int]) -> Characteristic:
    """RV (n=1), RTM (n=2) e RFM (n=3) com b = b*"""
    spec = spec if isinstance(spec, MomentSpec) else MomentSpec(spec)
    if spec.n not in ROTULOS_MOMENTO:
        raise ErroValidacao(f"Ordem n={spec.n} fora do escopo da biblioteca (1, 2 ou 3)")
    base = characteristic_from_polynomial(moment_polynomial(spec.n), label=ROTULOS_MOMENTO[spec.n])
    return Characteristic(
        label=base.label,
        components=base.components,
        a=base.a,
        b=base.b,
        a_poly=base.a_poly,
        b_polys=base.b_polys,
        order=spec.n,
        family="moment",
        implied_label=f"m{spec.n + 1}",
        implied=lambda u0: implied_characteristic(spec, u0),
    )


# ---------------------------------------------------------------------------
# família geométrica
# ---------------------------------------------------------------------------

def geometric_g(coeffs: GeometricCoeffs, dx):
    """
    g(δx) = c5 δy + c6λ δvλ + c6η δvη + c7(e^δy - 1)
            + c8(δvλ - 2δy)² + c9(δvη + 2δy)e^δy
    """
    dy, dvl, dve = (np.asarray(d, dtype=float) for d in dx)
    c = coeffs
    g = c.c5 * dy + c.c6_lambda * dvl + c.c6_eta * dve + c.c7 * np.expm1(dy)
    if c.c8:
        g = g + c.c8 * (dvl - 2.0 * dy) ** 2
    if c.c9:
        g = g + c.c9 * (dve + 2.0 * dy) * np.exp(dy)
    return _saida(g)


def corollary4_implied(coeffs: GeometricCoeffs, u_0) -> float:
    """E_0[a(u_T)] - a(u_0); na maturidade ln F = Y = Z/F = y_T"""
    A, B, C = coeffs.a_coeffs
    nomes = ["F", "y", "Y", "Z"] + (["P2"] if B else [])
    v = component_values(u_0, nomes, "característica geométrica implícita")
    esperado = (A + C) * v["Y"] + (B * v["P2"] if B else 0.0)
    atual = A * v["y"] + B * v["Y"] ** 2 + C * v["Z"] / v["F"]
    return _saida(esperado - atual)


def corollary4_characteristic(coeffs: GeometricCoeffs, label: str = "") -> Characteristic:
    """
    Reescrita (a, b) sobre u = (F, Y, Z):
    a = A ln F + B Y² + C Z/F,
    b = (c7/F - 2c9 Z/F², -2c6λ - 8c8 Y, 2c9/F)
    """
    if not isinstance(coeffs, GeometricCoeffs):
        coeffs = GeometricCoeffs.from_sequence(coeffs)
    A, B, C = coeffs.a_coeffs
    c = coeffs

    def func_a(v):
        F, Y, Z = (np.asarray(v[n], dtype=float) for n in ("F", "Y", "Z"))
        return A * np.log(F) + B * Y**2 + C * Z / F

    def func_b(v):
        F, Y, Z = (np.asarray(v[n], dtype=float) for n in ("F", "Y", "Z"))
        return (
            c.c7 / F - 2.0 * c.c9 * Z / F**2,
            -2.0 * c.c6_lambda - 8.0 * c.c8 * Y,
            2.0 * c.c9 / F,
        )

    return Characteristic(
        label=label or "geom(" + ", ".join(f"{x:g}" for x in coeffs.as_tuple()) + ")",
        components=("F", "Y", "Z"),
        a=func_a,
        b=func_b,
        coeffs=coeffs,
        family="geometric",
        implied_label="E0[a(uT)] - a(u0)",
        implied=lambda u0: corollary4_implied(coeffs, u0),
    )


COEFS_LV = GeometricCoeffs(-2.0, 0.0, 0.0, 2.0, 0.0, 0.0)
COEFS_NTM = GeometricCoeffs(6.0, 0.0, -3.0, -12.0, 0.0, 3.0)


def ntm_characteristic() -> Characteristic:
    """NTM: a = 12 ln F - 6 Z/F, b = (-12/F - 6Z/F², 0, 6/F); f = ρ + τ"""
    return corollary4_characteristic(COEFS_NTM, label="NTM")


def lv_characteristic() -> Characteristic:
    """LV sobre {F}: a = -2 ln F, b = 2/F; f = λ(y_s - y_r)"""

    def implicita(u0):
        v = component_values(u0, ("y", "Y"), "LV implícita")
        return _saida(2.0 * (v["y"] - v["Y"]))

    return Characteristic(
        label="LV",
        components=("F",),
        a=lambda v: -2.0 * np.log(np.asarray(v["F"], dtype=float)),
        b=lambda v: (2.0 / np.asarray(v["F"], dtype=float),),
        coeffs=COEFS_LV,
        family="lv",
        implied_label="vlambda",
        implied=implicita,
    )


ROTULOS_POTENCIA = {2: "SLR", 3: "CLR", 4: "QLR"}


def power_characteristic(p: int) -> Characteristic:
    """Controle não agregador: a = 0, b = 0, kernel (y_s - y_r)^p"""
    if p not in ROTULOS_POTENCIA:
        raise ErroValidacao(f"Potência deve ser 2, 3 ou 4; recebido {p}")
    spec = MomentSpec(p - 1)
    return Characteristic(
        label=ROTULOS_POTENCIA[p],
        components=(),
        a=lambda v: 0.0,
        b=lambda v: (),
        kernel=lambda dy: np.asarray(dy, dtype=float) ** p,
        kernel_label=f"power:{p}",
        family="power",
        implied_label=f"m{p}",
        implied=lambda u0: implied_characteristic(spec, u0),
    )


def characteristic_by_label(label: str) -> Characteristic:
    """LV, NTM, RV, RTM, RFM, SLR, CLR ou QLR"""
    chave = label.strip().upper()
    fabricas = {
        "LV": lv_characteristic,
        "NTM": ntm_characteristic,
        "RV": lambda: moment_characteristic(1),
        "RTM": lambda: moment_characteristic(2),
        "RFM": lambda: moment_characteristic(3),
        "SLR": lambda: power_characteristic(2),
        "CLR": lambda: power_characteristic(3),
        "QLR": lambda: power_characteristic(4),
    }
    if chave not in fabricas:
        raise ErroValidacao(f"Característica desconhecida: {label!r} (opções: {', '.join(fabricas)})")
    return fabricas[chave]()


# ---------------------------------------------------------------------------
# transformação m
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogMartingaleSpec:
    """n matrizes C_i simétricas n×n, comutando duas a duas"""

    C_list: Tuple[np.ndarray, ...]

    def __post_init__(self):
        matrizes = tuple(np.array(C, dtype=float) for C in self.C_list)
        n = len(matrizes)
        if n == 0:
            raise ErroValidacao("LogMartingaleSpec sem matrizes")
        for i, C in enumerate(matrizes):
            if C.shape != (n, n):
                raise ErroValidacao(f"C_{i} com formato {C.shape}; esperado ({n}, {n})")
            escala = 1.0 + np.max(np.abs(C))
            if np.max(np.abs(C - C.T)) > 1e-12 * escala:
                raise ErroValidacao(f"C_{i} não é simétrica")
        for i in range(n):
            for j in range(i + 1, n):
                comutador = matrizes[i] @ matrizes[j] - matrizes[j] @ matrizes[i]
                escala = 1.0 + np.max(np.abs(matrizes[i])) * np.max(np.abs(matrizes[j]))
                if np.max(np.abs(comutador)) > 1e-10 * escala:
                    raise ErroValidacao(f"C_{i} e C_{j} não comutam")
        for C in matrizes:
            C.setflags(write=False)
        object.__setattr__(self, "C_list", matrizes)

    @classmethod
    def scalar(cls, c: float) -> "LogMartingaleSpec":
        return cls((np.array([[float(c)]]),))

    @property
    def dim(self) -> int:
        return len(self.C_list)

    @property
    def total(self) -> np.ndarray:
        return np.sum(self.C_list, axis=0)


def _autobase_comum(spec: LogMartingaleSpec):
    """Q comum a todos os C_i ou None se a diagonalização simultânea não resolve"""
    n = spec.dim
    pesos = 1.0 + 0.6180339887498949 * np.arange(n)
    combinada = sum(w * C for w, C in zip(pesos, spec.C_list))
    _, Q = eigh(combinada)
    diagonais = []
    for C in spec.C_list:
        D = Q.T @ C @ Q
        fora = D - np.diag(np.diag(D))
        if n > 1 and np.max(np.abs(fora)) > RESIDUO_AUTOBASE * (1.0 + np.max(np.abs(C))):
            return None, None
        diagonais.append(np.diag(D))
    return Q, np.array(diagonais)


def m_transform(spec: LogMartingaleSpec, u) -> np.ndarray:
    """
    m(u) = (Σ C_i)^{-1} (exp{Σ C_i u_i} - I) 1

    Aceita u com formato (n,) ou (..., n). Usa a autobase comum da família
    e recai em expm quando ela não é resolvida numericamente.
    """
    u = np.asarray(u, dtype=float)
    n = spec.dim
    if u.shape[-1:] != (n,):
        raise ErroValidacao(f"u com formato {u.shape}; última dimensão deve ser {n}")

    Q, d = _autobase_comum(spec)
    if Q is None:
        logger.debug("Autobase comum não resolvida; usando expm")
        return _m_transform_expm(spec, u)

    s = d.sum(axis=0)
    maior = np.max(np.abs(s))
    if maior == 0.0 or np.min(np.abs(s)) <= LIMIAR_SINGULAR * maior:
        raise ErroSingularidade("Σ C_i singular na transformação m")

    expoentes = u @ d  # (..., n) autovalores de Σ C_i u_i
    fator = np.expm1(expoentes) / s
    coordenadas = fator * (Q.T @ np.ones(n))
    return coordenadas @ Q.T


def _m_transform_expm(spec: LogMartingaleSpec, u: np.ndarray) -> np.ndarray:
    S = spec.total
    valores_singulares = np.linalg.svd(S, compute_uv=False)
    if valores_singulares[0] == 0.0 or valores_singulares[-1] <= LIMIAR_SINGULAR * valores_singulares[0]:
        raise ErroSingularidade("Σ C_i singular na transformação m")
    n = spec.dim
    planos = u.reshape(-1, n)
    saida = np.empty_like(planos)
    for k, vetor in enumerate(planos):
        X = sum(ui * C for ui, C in zip(vetor, spec.C_list))
        saida[k] = np.linalg.solve(S, (expm(X) - np.eye(n)) @ np.ones(n))
    return saida.reshape(u.shape)


# ---------------------------------------------------------------------------
# texto
# ---------------------------------------------------------------------------

def characteristic_to_text(c: Characteristic) -> str:
    """Serializa em linhas `chave = valor` (ida e volta estável)"""
    linhas = [f"label = {c.label}", f"family = {c.family}"]
    if c.family in ("polynomial", "moment"):
        linhas.append(f"components = {', '.join(c.components)}")
        if c.family == "moment":
            linhas.append(f"order = {c.order}")
        linhas.append(f"a = {c.a_poly.to_text()}")
        for nome, poly in zip(c.components, c.b_polys):
            linhas.append(f"b[{nome}] = {poly.to_text()}")
    elif c.family == "geometric":
        linhas.append("coeffs = " + ", ".join(repr(x) for x in c.coeffs.as_tuple()))
    elif c.family == "power":
        linhas.append(f"kernel = {c.kernel_label}")
    elif c.family != "lv":
        raise ErroFormaNaoSuportada(f"Família sem serialização: {c.family}")
    return "\n".join(linhas) + "\n"


def characteristic_from_text(texto: str, arquivo: Optional[str] = None) -> Characteristic:
    campos: Dict[str, str] = {}
    pesos: Dict[str, str] = {}
    for numero, linha in enumerate(texto.splitlines(), start=1):
        limpa = linha.strip()
        if not limpa or limpa.startswith("#"):
            continue
        if "=" not in limpa:
            raise ErroLeitura("linha sem '='", arquivo=arquivo, linha=numero)
        chave, valor = (p.strip() for p in limpa.split("=", 1))
        if chave.startswith("b[") and chave.endswith("]"):
            pesos[chave[2:-1].strip()] = valor
        elif chave in ("label", "family", "components", "order", "a", "coeffs", "kernel"):
            campos[chave] = valor
        else:
            raise ErroLeitura("chave desconhecida", arquivo=arquivo, linha=numero, chave=chave)

    familia = campos.get("family", "polynomial")
    rotulo = campos.get("label", "")
    if familia == "lv":
        return lv_characteristic()
    if familia == "power":
        tipo, _, p = campos.get("kernel", "").partition(":")
        if tipo != "power" or not p.strip().isdigit():
            raise ErroLeitura(f"kernel inválido {campos.get('kernel')!r}", arquivo=arquivo, chave="kernel")
        return power_characteristic(int(p))
    if familia == "geometric":
        try:
            valores = [float(x) for x in campos["coeffs"].split(",")]
        except (KeyError, ValueError):
            raise ErroLeitura("coeffs ausente ou inválido", arquivo=arquivo, chave="coeffs") from None
        return corollary4_characteristic(GeometricCoeffs.from_sequence(valores), label=rotulo)
    if familia == "moment":
        return moment_characteristic(int(campos.get("order", "0")))
    if familia != "polynomial":
        raise ErroLeitura(f"família desconhecida {familia!r}", arquivo=arquivo, chave="family")

    if "a" not in campos:
        raise ErroLeitura("polinômio a ausente", arquivo=arquivo, chave="a")
    nomes = [n.strip() for n in campos.get("components", "").split(",") if n.strip()]
    return characteristic_from_polynomial(
        campos["a"],
        components=nomes or None,
        b=pesos or None,
        label=rotulo,
    )
