"""
Replicação de Contratos por Opções
Contratos log, potência-log e entropia sintetizados a partir de preços OTM
pela integral de spanning; cadeia sintética de Black para testes
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import brentq
from scipy.stats import norm

from erros import ErroDominio, ErroGradeInsuficiente, ErroValidacao
from nucleo import ContractState

logger = logging.getLogger(__name__)

MIN_STRIKES = 16
TOLERANCIA_CAUDA = 1e-3
PONTOS_PADRAO = 2001
LARGURA_PADRAO = 8.0
ORDEM_MAXIMA = 4


@dataclass(frozen=True, eq=False)
class OptionChain:
    """Forward, maturidade e preços OTM por strike (put se k <= F, call se k > F)"""

    forward: float
    maturity: float
    strikes: np.ndarray
    prices: np.ndarray

    def __post_init__(self):
        strikes = np.array(self.strikes, dtype=float)
        precos = np.array(self.prices, dtype=float)
        if not (np.isfinite(self.forward) and self.forward > 0):
            raise ErroDominio(f"Forward deve ser positivo, recebido {self.forward}")
        if not (np.isfinite(self.maturity) and self.maturity > 0):
            raise ErroDominio(f"Maturidade deve ser positiva, recebido {self.maturity}")
        if strikes.ndim != 1 or strikes.shape != precos.shape:
            raise ErroValidacao("Strikes e preços devem ser vetores de mesmo tamanho")
        if strikes.size == 0 or np.any(strikes <= 0) or not np.all(np.isfinite(strikes)):
            raise ErroDominio("Strikes devem ser positivos e finitos")
        if np.any(np.diff(strikes) <= 0):
            raise ErroValidacao("Strikes devem ser estritamente crescentes e sem repetição")
        if np.any(precos < 0) or not np.all(np.isfinite(precos)):
            raise ErroDominio("Preços de opções devem ser não negativos e finitos")
        strikes.setflags(write=False)
        precos.setflags(write=False)
        object.__setattr__(self, "forward", float(self.forward))
        object.__setattr__(self, "maturity", float(self.maturity))
        object.__setattr__(self, "strikes", strikes)
        object.__setattr__(self, "prices", precos)
        self._conferir_caudas()

    def _conferir_caudas(self):
        maximo = float(self.prices.max())
        if maximo == 0.0 or self.prices.size < 3:
            return
        limite = TOLERANCIA_CAUDA * maximo
        if self.prices[0] >= limite or self.prices[-1] >= limite:
            logger.warning(
                "Preços não se anulam nas pontas da grade (%.3g, %.3g; máximo %.3g); "
                "a integral pode estar truncada",
                self.prices[0], self.prices[-1], maximo,
            )

    @property
    def n_points(self) -> int:
        return int(self.strikes.size)

    @property
    def is_put(self) -> np.ndarray:
        return self.strikes <= self.forward

    def normalised(self) -> "OptionChain":
        """Mesma cadeia com forward 1 (strikes e preços divididos por F)"""
        return OptionChain(1.0, self.maturity, self.strikes / self.forward, self.prices / self.forward)


@dataclass(frozen=True)
class QuadratureSpec:
    """Regra trapezoidal sobre a grade dada ou reamostrada log-uniforme"""

    rule: str = "trapezoid"
    grid: str = "as-given"
    n_points: int = PONTOS_PADRAO
    width_in_stdevs: float = LARGURA_PADRAO

    def __post_init__(self):
        if self.rule != "trapezoid":
            raise ErroValidacao(f"Regra de quadratura não suportada: {self.rule}")
        if self.grid not in ("as-given", "log-uniform"):
            raise ErroValidacao(f"Grade desconhecida: {self.grid}")
        if int(self.n_points) != self.n_points or self.n_points < MIN_STRIKES:
            raise ErroValidacao(f"n_points deve ser inteiro >= {MIN_STRIKES}")
        if not self.width_in_stdevs > 0:
            raise ErroValidacao("width_in_stdevs deve ser positivo")


# ---------------------------------------------------------------------------
# Black sem desconto
# ---------------------------------------------------------------------------

def _conferir_positivos(**valores):
    for nome, valor in valores.items():
        arr = np.asarray(valor, dtype=float)
        if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
            raise ErroDominio(f"{nome} deve ser positivo, recebido {valor}")


def bs_price(F, k, sigma, T, kind: str):
    """Preço de Black sem desconto de call ('call') ou put ('put')"""
    _conferir_positivos(F=F, k=k, sigma=sigma, T=T)
    F = np.asarray(F, dtype=float)
    k = np.asarray(k, dtype=float)
    s = sigma * np.sqrt(T)
    d1 = (np.log(F / k) + 0.5 * s * s) / s
    d2 = d1 - s
    if kind == "call":
        preco = F * norm.cdf(d1) - k * norm.cdf(d2)
    elif kind == "put":
        preco = k * norm.cdf(-d2) - F * norm.cdf(-d1)
    else:
        raise ErroValidacao(f"Tipo de opção desconhecido: {kind}")
    preco = np.maximum(preco, 0.0)
    return preco if preco.ndim else float(preco)


def bs_otm_price(F, k, sigma, T):
    """Preço OTM: put para k <= F, call para k > F"""
    _conferir_positivos(F=F, k=k, sigma=sigma, T=T)
    k_arr = np.asarray(k, dtype=float)
    preco = np.where(k_arr <= F, bs_price(F, k_arr, sigma, T, "put"), bs_price(F, k_arr, sigma, T, "call"))
    return preco if preco.ndim else float(preco)


def synth_chain(F: float, sigma: float, T: float, n_points: int = PONTOS_PADRAO,
                width_in_stdevs: float = LARGURA_PADRAO) -> OptionChain:
    """
    Cadeia sintética de Black com strikes log-uniformes em ±width·σ√T em torno de ln F

    Args:
        F: forward
        sigma: volatilidade implícita
        T: maturidade em anos
        n_points: número de strikes (>= 16)
        width_in_stdevs: meia largura em desvios padrão

    Returns:
        OptionChain
    """
    _conferir_positivos(F=F, sigma=sigma, T=T, width_in_stdevs=width_in_stdevs)
    if int(n_points) != n_points or n_points < MIN_STRIKES:
        raise ErroGradeInsuficiente(f"synth_chain exige ao menos {MIN_STRIKES} strikes, recebido {n_points}")
    n_points = int(n_points)
    meia = width_in_stdevs * sigma * np.sqrt(T)
    x = np.linspace(-meia, meia, n_points)
    if n_points % 2 == 1:
        x[n_points // 2] = 0.0
    strikes = F * np.exp(x)
    return OptionChain(F, T, strikes, bs_otm_price(F, strikes, sigma, T))


# ---------------------------------------------------------------------------
# spanning
# ---------------------------------------------------------------------------

def gamma_weight(i: int, k):
    """
    γ_i(k) = i (ln k)^{i-2} k^{-2} (i - 1 - ln k); para i = 1, -k^{-2}.
    """
    if int(i) != i or i < 1:
        raise ErroValidacao(f"i deve ser inteiro >= 1, recebido {i}")
    k = np.asarray(k, dtype=float)
    if np.any(~np.isfinite(k)) or np.any(k <= 0):
        raise ErroDominio("Strike deve ser positivo")
    if i == 1:
        peso = -1.0 / k**2
    else:
        lk = np.log(k)
        peso = i * lk ** (i - 2) / k**2 * (i - 1 - lk)
    return peso if peso.ndim else float(peso)


def atm_implied_vol(chain: OptionChain) -> float:
    """Volatilidade implícita no forward (preço interpolado em log-strike)"""
    logs = np.log(chain.strikes)
    preco = float(np.interp(np.log(chain.forward), logs, chain.prices, left=0.0, right=0.0))
    if preco <= 0.0:
        raise ErroDominio("Cadeia sem valor temporal no forward; não há volatilidade ATM")
    alvo = lambda s: bs_otm_price(chain.forward, chain.forward, s, chain.maturity) - preco
    return float(brentq(alvo, 1e-8, 10.0, xtol=1e-14))


def _grade(chain: OptionChain, quad: QuadratureSpec):
    if chain.n_points < MIN_STRIKES:
        raise ErroGradeInsuficiente(
            f"Cadeia com {chain.n_points} strikes; a quadratura exige ao menos {MIN_STRIKES}. "
            "Forneça uma grade mais densa cobrindo as duas caudas"
        )
    if quad.grid == "as-given":
        return chain.strikes, chain.prices

    sigma = atm_implied_vol(chain)
    meia = quad.width_in_stdevs * sigma * np.sqrt(chain.maturity)
    x = np.linspace(-meia, meia, int(quad.n_points))
    if quad.n_points % 2 == 1:
        x[quad.n_points // 2] = 0.0
    strikes = chain.forward * np.exp(x)
    precos = np.interp(np.log(strikes), np.log(chain.strikes), chain.prices, left=0.0, right=0.0)
    logger.debug("Grade reamostrada: %d strikes em ±%.4f (σ ATM %.4f)", quad.n_points, meia, sigma)
    return strikes, precos


def replicate_power_contract(chain: OptionChain, i: int, quad: Optional[QuadratureSpec] = None) -> float:
    """P_i = yⁱ + ∫ γ_i(k) q(k) dk, com y = ln F"""
    quad = quad or QuadratureSpec()
    strikes, precos = _grade(chain, quad)
    y = np.log(chain.forward)
    return float(y**i + trapezoid(gamma_weight(i, strikes) * precos, strikes))


def entropy_contract(chain: OptionChain, quad: Optional[QuadratureSpec] = None) -> float:
    """Z = F y + ∫ k^{-1} q(k) dk"""
    quad = quad or QuadratureSpec()
    strikes, precos = _grade(chain, quad)
    F = chain.forward
    return float(F * np.log(F) + trapezoid(precos / strikes, strikes))


def replicate_contracts(chain: OptionChain, quad: Optional[QuadratureSpec] = None,
                        maximo: int = ORDEM_MAXIMA) -> ContractState:
    """Estado em t=0 com F, y, Y, P2..P4 e Z replicados da cadeia"""
    quad = quad or QuadratureSpec()
    nomes = {1: "Y", 2: "P2", 3: "P3", 4: "P4"}
    valores: Dict[str, float] = {"F": chain.forward, "y": float(np.log(chain.forward))}
    for i in range(1, maximo + 1):
        valores[nomes[i]] = replicate_power_contract(chain, i, quad)
    valores["Z"] = entropy_contract(chain, quad)
    logger.info("Contratos replicados com %d strikes (F=%g, T=%g)", chain.n_points, chain.forward, chain.maturity)
    return ContractState(0.0, valores)


def implied_moments_from_chain(chain: OptionChain, quad: Optional[QuadratureSpec] = None) -> Dict[str, float]:
    """
    Momentos centrais implícitos (m2, m3, m4) de y_T.

    Calculados na cadeia normalizada (F = 1), onde os contratos são momentos
    brutos de y_T - y, evitando o cancelamento entre potências de ln F.
    """
    normal = chain.normalised()
    brutos = {i: replicate_power_contract(normal, i, quad) for i in range(1, 5)}
    mu1, mu2, mu3, mu4 = brutos[1], brutos[2], brutos[3], brutos[4]
    return {
        "m2": mu2 - mu1**2,
        "m3": mu3 - 3.0 * mu2 * mu1 + 2.0 * mu1**3,
        "m4": mu4 - 4.0 * mu3 * mu1 + 6.0 * mu2 * mu1**2 - 3.0 * mu1**4,
    }


def gaussian_contracts(F: float, sigma: float, tau: float) -> Dict[str, float]:
    """Valores fechados sob log-normal: Y = y - σ²τ/2, P_i por momentos gaussianos, Z = F(y + σ²τ/2)"""
    y = float(np.log(F))
    v = sigma * sigma * tau
    Y = y - 0.5 * v
    return {
        "F": float(F),
        "y": y,
        "Y": Y,
        "P2": Y**2 + v,
        "P3": Y**3 + 3.0 * Y * v,
        "P4": Y**4 + 6.0 * Y**2 * v + 3.0 * v * v,
        "Z": F * (y + 0.5 * v),
    }

