"""
Simuladores de Caminhos Martingais
GBM, Merton (saltos compensados) e Heston (Euler com truncamento total),
emitindo caminhos de estados de contratos em forma fechada ou por
Monte Carlo aninhado
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from erros import ErroCapacidade, ErroValidacao
from nucleo import (COMPONENTES, PathBundle, Partition, SeedSpec,
                    derive_geometric_components)

logger = logging.getLogger(__name__)

TAMANHO_BLOCO = 2048
PASSO_HESTON = 1.0 / 1000
M_INTERNO_PADRAO = 10_000

# Rótulos dos fluxos de sorteio dentro de cada bloco
TAG_DIFUSAO = 0
TAG_CONTAGEM = 1
TAG_TAMANHO = 2
TAG_VARIANCIA = 3
TAG_INTERNO = 7

CONTRATOS = ("Y", "P2", "P3", "P4", "Z")

CAPACIDADES = {
    ("gbm", "closed_form"): frozenset(CONTRATOS),
    ("merton", "closed_form"): frozenset(CONTRATOS),
    ("heston", "closed_form"): frozenset({"Y"}),
    ("gbm", "nested_mc"): frozenset(CONTRATOS),
    ("merton", "nested_mc"): frozenset(CONTRATOS),
    ("heston", "nested_mc"): frozenset(CONTRATOS),
}


@dataclass(frozen=True)
class ModelSpec:
    """
    Parâmetros de um modelo martingal para o forward.

    `drift` é a taxa de crescimento de F sob a medida física; com drift
    diferente de zero F deixa de ser martingal (usado em testes negativos).
    Os contratos continuam precificados sob a medida martingal.
    """

    kind: str
    F0: float = 100.0
    T: float = 1.0
    sigma: float = 0.2
    jump_intensity: float = 0.0
    jump_mean: float = 0.0
    jump_stdev: float = 0.0
    v0: float = 0.04
    kappa: float = 1.5
    theta: float = 0.04
    xi: float = 0.5
    rho_corr: float = -0.7
    drift: float = 0.0

    def __post_init__(self):
        if self.kind not in ("gbm", "merton", "heston"):
            raise ErroValidacao(f"Modelo desconhecido: {self.kind}")
        for nome in ("F0", "T", "sigma", "jump_intensity", "jump_mean", "jump_stdev",
                     "v0", "kappa", "theta", "xi", "rho_corr", "drift"):
            valor = float(getattr(self, nome))
            if not np.isfinite(valor):
                raise ErroValidacao(f"Parâmetro {nome} não finito")
            object.__setattr__(self, nome, valor)
        if self.F0 <= 0:
            raise ErroValidacao(f"F0 deve ser positivo, recebido {self.F0}")
        if self.T <= 0:
            raise ErroValidacao(f"T deve ser positivo, recebido {self.T}")
        for nome in ("sigma", "jump_intensity", "jump_stdev", "v0", "kappa", "theta", "xi"):
            if getattr(self, nome) < 0:
                raise ErroValidacao(f"Parâmetro {nome} deve ser não negativo")
        if abs(self.rho_corr) > 1:
            raise ErroValidacao("rho_corr deve estar em [-1, 1]")
        if self.kind == "heston" and not self.feller:
            logger.warning("Condição de Feller violada (2κθ < ξ²): variância pode tocar zero")

    @classmethod
    def gbm(cls, sigma: float, F0: float = 100.0, T: float = 1.0, **extras) -> "ModelSpec":
        return cls("gbm", F0=F0, T=T, sigma=sigma, **extras)

    @classmethod
    def merton(cls, sigma: float, jump_intensity: float, jump_mean: float, jump_stdev: float,
               F0: float = 100.0, T: float = 1.0, **extras) -> "ModelSpec":
        return cls("merton", F0=F0, T=T, sigma=sigma, jump_intensity=jump_intensity,
                   jump_mean=jump_mean, jump_stdev=jump_stdev, **extras)

    @classmethod
    def heston(cls, v0: float, kappa: float, theta: float, xi: float, rho_corr: float,
               F0: float = 100.0, T: float = 1.0, **extras) -> "ModelSpec":
        return cls("heston", F0=F0, T=T, v0=v0, kappa=kappa, theta=theta, xi=xi,
                   rho_corr=rho_corr, **extras)

    @property
    def feller(self) -> bool:
        return 2.0 * self.kappa * self.theta >= self.xi**2

    @property
    def jump_compensator(self) -> float:
        """κ = E[e^J] - 1"""
        return float(np.expm1(self.jump_mean + 0.5 * self.jump_stdev**2))

    def describe(self) -> str:
        if self.kind == "gbm":
            return f"gbm(σ={self.sigma:g})"
        if self.kind == "merton":
            return (f"merton(σ={self.sigma:g}, λ={self.jump_intensity:g}, "
                    f"μJ={self.jump_mean:g}, σJ={self.jump_stdev:g})")
        return (f"heston(v0={self.v0:g}, κ={self.kappa:g}, θ={self.theta:g}, "
                f"ξ={self.xi:g}, ρ={self.rho_corr:g})")


# ---------------------------------------------------------------------------
# momentos condicionais
# ---------------------------------------------------------------------------

def _momentos_salto(spec: ModelSpec) -> Tuple[float, float, float]:
    """E[J²], E[J³], E[J⁴] para J ~ N(μ_J, σ_J²)"""
    m, s = spec.jump_mean, spec.jump_stdev
    return (
        m**2 + s**2,
        m**3 + 3.0 * m * s**2,
        m**4 + 6.0 * m**2 * s**2 + 3.0 * s**4,
    )


def _cumulantes(spec: ModelSpec, h):
    """(κ1, κ2, κ3, κ4) de y_{t+h} - y_t sob a medida martingal (gbm ou merton)"""
    h = np.asarray(h, dtype=float)
    lam = spec.jump_intensity if spec.kind == "merton" else 0.0
    e2, e3, e4 = _momentos_salto(spec)
    k1 = (-0.5 * spec.sigma**2 - lam * spec.jump_compensator + lam * spec.jump_mean) * h
    k2 = spec.sigma**2 * h + lam * h * e2
    k3 = lam * h * e3
    k4 = lam * h * e4
    return k1, k2, k3, k4


def merton_central_moments(spec: ModelSpec, horizon: float) -> Tuple[float, float, float]:
    """
    Momentos centrais (m2, m3, m4) de y_{t+h} - Y_t no modelo de Merton.

    m2 = κ2, m3 = κ3, m4 = κ4 + 3κ2²
    """
    if spec.kind != "merton":
        raise ErroCapacidade(f"merton_central_moments exige modelo merton, recebido {spec.kind}")
    if horizon < 0:
        raise ErroValidacao("Horizonte deve ser não negativo")
    _, k2, k3, k4 = _cumulantes(spec, horizon)
    return float(k2), float(k3), float(k4 + 3.0 * k2**2)


def heston_expected_variance(spec: ModelSpec, v, tau):
    """E_t[∫ v ds] sobre τ = θτ + (v - θ)(1 - e^{-κτ})/κ"""
    v = np.asarray(v, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if spec.kappa == 0.0:
        fator = tau
    else:
        fator = -np.expm1(-spec.kappa * tau) / spec.kappa
    return spec.theta * tau + (v - spec.theta) * fator


def closed_form_contracts(spec: ModelSpec, tau, y, components: Sequence[str] = CONTRATOS,
                          v=None) -> Dict[str, np.ndarray]:
    """
    Contratos em forma fechada dado y_t (e v_t no Heston), com τ = T - t.

    Raises:
        ErroCapacidade: combinação (modelo, componente) sem forma fechada
    """
    suportados = CAPACIDADES[(spec.kind, "closed_form")]
    faltando = set(components) - suportados
    if faltando:
        raise ErroCapacidade(
            f"Forma fechada indisponível para {sorted(faltando)} no modelo {spec.kind}; use nested_mc"
        )
    y = np.asarray(y, dtype=float)
    tau = np.asarray(tau, dtype=float)
    F = np.exp(y)

    if spec.kind == "heston":
        if v is None:
            raise ErroValidacao("Forma fechada do Heston exige a variância instantânea v")
        return {"Y": y - 0.5 * heston_expected_variance(spec, v, tau)} if "Y" in components else {}

    k1, m2, m3, k4 = _cumulantes(spec, tau)
    m4 = k4 + 3.0 * m2**2
    Y = y + k1
    todos = {
        "Y": lambda: Y,
        "P2": lambda: Y**2 + m2,
        "P3": lambda: Y**3 + 3.0 * Y * m2 + m3,
        "P4": lambda: Y**4 + 6.0 * Y**2 * m2 + 4.0 * Y * m3 + m4,
        "Z": lambda: F * (y + _derivada_cgf_em_1(spec, tau)),
    }
    return {nome: np.broadcast_to(todos[nome](), np.broadcast(y, tau).shape).copy() for nome in components}


def _derivada_cgf_em_1(spec: ModelSpec, tau):
    """K'(1) = E[X e^X] para X = y_T - y_t (E[e^X] = 1)"""
    lam = spec.jump_intensity if spec.kind == "merton" else 0.0
    deriva = (-0.5 * spec.sigma**2 - lam * spec.jump_compensator) * tau
    salto = lam * tau * (spec.jump_mean + spec.jump_stdev**2) * np.exp(spec.jump_mean + 0.5 * spec.jump_stdev**2)
    return deriva + spec.sigma**2 * tau + salto


# ---------------------------------------------------------------------------
# incrementos
# ---------------------------------------------------------------------------

def _incrementos_exatos(spec: ModelSpec, dt: np.ndarray, n: int, geradores: Dict[int, np.random.Generator],
                        antitetico: bool = False, mu: Optional[float] = None) -> np.ndarray:
    """Incrementos de ln F por intervalo (gbm e merton são exatos para qualquer Δt)"""
    mu = spec.drift if mu is None else mu
    dt = np.asarray(dt, dtype=float)
    formato = (n,) + dt.shape
    z = geradores[TAG_DIFUSAO].standard_normal(formato)
    if antitetico:
        z = np.concatenate([z, -z])
    incremento = (mu - 0.5 * spec.sigma**2) * dt + spec.sigma * np.sqrt(dt) * z

    if spec.kind == "merton" and spec.jump_intensity > 0:
        lam = spec.jump_intensity
        contagem = geradores[TAG_CONTAGEM].poisson(lam * dt, size=formato).astype(float)
        tamanho = geradores[TAG_TAMANHO].standard_normal(formato)
        if antitetico:
            contagem = np.concatenate([contagem, contagem])
            tamanho = np.concatenate([tamanho, -tamanho])
        incremento = (incremento - lam * spec.jump_compensator * dt
                      + contagem * spec.jump_mean + np.sqrt(contagem) * spec.jump_stdev * tamanho)
    return incremento


def _heston_passos(spec: ModelSpec, y: np.ndarray, v: np.ndarray, duracao: float,
                   gerador: np.random.Generator, antitetico: bool = False,
                   mu: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Avança (y, v) por `duracao` com Euler e truncamento total, passo <= 1/1000"""
    mu = spec.drift if mu is None else mu
    if duracao <= 0:
        return y, v
    m = int(np.ceil(duracao / PASSO_HESTON - 1e-9))
    h = duracao / m
    raiz_h = np.sqrt(h)
    complemento = np.sqrt(max(0.0, 1.0 - spec.rho_corr**2))
    n = y.shape[0] // 2 if antitetico else y.shape[0]
    y = y.copy()
    v = v.copy()
    for _ in range(m):
        z = gerador.standard_normal((2, n))
        if antitetico:
            z = np.concatenate([z, -z], axis=1)
        z1, z2 = z
        positiva = np.maximum(v, 0.0)
        raiz = np.sqrt(positiva) * raiz_h
        y += (mu - 0.5 * positiva) * h + raiz * z1
        v += spec.kappa * (spec.theta - positiva) * h + spec.xi * raiz * (spec.rho_corr * z1 + complemento * z2)
    return y, v


# ---------------------------------------------------------------------------
# Monte Carlo aninhado
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NestedEstimate:
    """Médias e erros padrão dos contratos estimados por MC interno"""

    means: Dict[str, float]
    stderrs: Dict[str, float]


def nested_contract_estimates(spec: ModelSpec, y: float, t: float, m_inner: int = M_INTERNO_PADRAO,
                              seed: Optional[SeedSpec] = None, chaves: Tuple[int, ...] = (),
                              v: Optional[float] = None,
                              components: Sequence[str] = CONTRATOS) -> NestedEstimate:
    """
    Estima E_t[y_T^i] e E_t[F_T y_T] com pares antitéticos.

    O erro padrão usa as médias de cada par antitético.
    """
    if m_inner < 2:
        raise ErroValidacao("m_inner deve ser >= 2")
    tau = spec.T - t
    F = float(np.exp(y))
    if tau <= 1e-15:
        exatos = {"Y": y, "P2": y**2, "P3": y**3, "P4": y**4, "Z": F * y}
        return NestedEstimate({c: float(exatos[c]) for c in components}, {c: 0.0 for c in components})

    seed = seed or SeedSpec(0)
    pares = int(m_inner) // 2
    geradores = {tag: seed.generator(TAG_INTERNO, *chaves, tag)
                 for tag in (TAG_DIFUSAO, TAG_CONTAGEM, TAG_TAMANHO, TAG_VARIANCIA)}

    if spec.kind == "heston":
        if v is None:
            raise ErroValidacao("MC aninhado do Heston exige a variância instantânea v")
        y_T, _ = _heston_passos(spec, np.full(2 * pares, float(y)), np.full(2 * pares, float(v)), tau,
                                geradores[TAG_VARIANCIA], antitetico=True, mu=0.0)
    else:
        incremento = _incrementos_exatos(spec, np.array([tau]), pares, geradores, antitetico=True, mu=0.0)
        y_T = y + incremento[:, 0]

    payoffs = {
        "Y": lambda: y_T,
        "P2": lambda: y_T**2,
        "P3": lambda: y_T**3,
        "P4": lambda: y_T**4,
        "Z": lambda: np.exp(y_T) * y_T,
    }
    medias, erros = {}, {}
    for nome in components:
        valores = payoffs[nome]()
        pares_medios = 0.5 * (valores[:pares] + valores[pares:])
        medias[nome] = float(pares_medios.mean())
        erros[nome] = float(pares_medios.std(ddof=1) / np.sqrt(pares))
    return NestedEstimate(medias, erros)


# ---------------------------------------------------------------------------
# simulação por blocos
# ---------------------------------------------------------------------------

def _componentes_padrao(spec: ModelSpec, state_mode: str) -> Tuple[str, ...]:
    if state_mode == "closed_form":
        return tuple(c for c in CONTRATOS if c in CAPACIDADES[(spec.kind, "closed_form")])
    return ("Y", "P2", "P3", "Z")


def _validar_pedido(spec: ModelSpec, p: Partition, n_paths: int, state_mode: str,
                    components: Optional[Sequence[str]]) -> Tuple[str, ...]:
    if int(n_paths) != n_paths or n_paths < 1:
        raise ErroValidacao(f"n_paths deve ser inteiro >= 1, recebido {n_paths}")
    if abs(p.T - spec.T) > 1e-12 * max(1.0, spec.T):
        raise ErroValidacao(f"Partição termina em {p.T}, modelo em T={spec.T}")
    if state_mode not in ("closed_form", "nested_mc"):
        raise ErroValidacao(f"state_mode desconhecido: {state_mode}")
    pedidos = _componentes_padrao(spec, state_mode) if components is None else tuple(components)
    desconhecidos = set(pedidos) - set(CONTRATOS)
    if desconhecidos:
        raise ErroValidacao(f"Componentes de contrato desconhecidos: {sorted(desconhecidos)}")
    faltando = set(pedidos) - CAPACIDADES[(spec.kind, state_mode)]
    if faltando:
        raise ErroCapacidade(
            f"Modo {state_mode} não fornece {sorted(faltando)} no modelo {spec.kind}; use nested_mc"
        )
    return tuple(c for c in CONTRATOS if c in pedidos)


def _simular_bloco(spec: ModelSpec, p: Partition, seed: SeedSpec, bloco: int, inicio: int, n: int,
                   state_mode: str, componentes: Tuple[str, ...], m_inner: int) -> PathBundle:
    tempos = p.array
    dt = p.intervals
    y0 = np.log(spec.F0)
    geradores = {tag: seed.generator(bloco, tag)
                 for tag in (TAG_DIFUSAO, TAG_CONTAGEM, TAG_TAMANHO, TAG_VARIANCIA)}

    y = np.empty((n, len(tempos)))
    v = None
    y[:, 0] = y0
    if spec.kind == "heston":
        v = np.empty_like(y)
        v[:, 0] = spec.v0
        atual_y = y[:, 0].copy()
        atual_v = v[:, 0].copy()
        for j, duracao in enumerate(dt, start=1):
            atual_y, atual_v = _heston_passos(spec, atual_y, atual_v, float(duracao), geradores[TAG_VARIANCIA])
            y[:, j] = atual_y
            v[:, j] = atual_v
    else:
        incrementos = _incrementos_exatos(spec, dt, n, geradores)
        y[:, 1:] = y0 + np.cumsum(incrementos, axis=1)

    valores: Dict[str, np.ndarray] = {"F": np.exp(y), "y": y}
    tau = spec.T - tempos
    tau[-1] = 0.0
    if state_mode == "closed_form":
        valores.update(closed_form_contracts(spec, tau[None, :], y, componentes, v=v))
    else:
        estimados = {c: np.empty_like(y) for c in componentes}
        for i in range(n):
            for j, t in enumerate(tempos):
                est = nested_contract_estimates(
                    spec, float(y[i, j]), float(t), m_inner, seed, chaves=(inicio + i, j),
                    v=None if v is None else float(v[i, j]), components=componentes,
                )
                for c in componentes:
                    estimados[c][i, j] = est.means[c]
        valores.update(estimados)

    valores = derive_geometric_components(valores)
    ordenados = {nome: valores[nome] for nome in COMPONENTES if nome in valores}
    return PathBundle(p, ordenados)


def _plano_blocos(n_paths: int, tamanho: int) -> List[Tuple[int, int, int]]:
    plano = []
    for bloco, inicio in enumerate(range(0, int(n_paths), tamanho)):
        plano.append((bloco, inicio, min(tamanho, int(n_paths) - inicio)))
    return plano


def iter_path_blocks(spec: ModelSpec, p: Partition, n_paths: int, seed: SeedSpec,
                     state_mode: str = "closed_form", components: Optional[Sequence[str]] = None,
                     m_inner: int = M_INTERNO_PADRAO, block_size: int = TAMANHO_BLOCO) -> Iterator[PathBundle]:
    """Gera os caminhos em blocos de tamanho fixo, na ordem dos índices de caminho"""
    componentes = _validar_pedido(spec, p, n_paths, state_mode, components)
    for bloco, inicio, n in _plano_blocos(n_paths, block_size):
        yield _simular_bloco(spec, p, seed, bloco, inicio, n, state_mode, componentes, m_inner)


def map_path_blocks(func: Callable[[PathBundle], object], spec: ModelSpec, p: Partition, n_paths: int,
                    seed: SeedSpec, state_mode: str = "closed_form",
                    components: Optional[Sequence[str]] = None, m_inner: int = M_INTERNO_PADRAO,
                    threads: int = 1, block_size: int = TAMANHO_BLOCO) -> List[object]:
    """
    Aplica `func` a cada bloco simulado e devolve os resultados na ordem dos blocos.

    O conteúdo de cada bloco depende só de (seed, índice do bloco), então o
    resultado é o mesmo para qualquer número de threads.
    """
    componentes = _validar_pedido(spec, p, n_paths, state_mode, components)
    plano = _plano_blocos(n_paths, block_size)

    def tarefa(item):
        bloco, inicio, n = item
        return func(_simular_bloco(spec, p, seed, bloco, inicio, n, state_mode, componentes, m_inner))

    if threads <= 1 or len(plano) == 1:
        return [tarefa(item) for item in plano]
    with ThreadPoolExecutor(max_workers=int(threads)) as executor:
        return list(executor.map(tarefa, plano))


def simulate_paths(spec: ModelSpec, p: Partition, n_paths: int, seed: SeedSpec,
                   state_mode: str = "closed_form", components: Optional[Sequence[str]] = None,
                   m_inner: int = M_INTERNO_PADRAO, threads: int = 1,
                   block_size: int = TAMANHO_BLOCO) -> PathBundle:
    """
    Simula n_paths caminhos de estados de contratos sobre a partição.

    Args:
        spec: modelo
        p: partição de monitoramento (deve terminar em spec.T)
        n_paths: número de caminhos
        seed: semente mestre e fluxo
        state_mode: 'closed_form' ou 'nested_mc'
        components: contratos pedidos (padrão conforme a matriz de capacidades)
        m_inner: tamanho da amostra interna do MC aninhado
        threads: número de threads sobre os blocos

    Returns:
        PathBundle com F, y, contratos e, quando possível, vlambda e veta
    """
    logger.info("Simulando %d caminhos (%s, %s, %s)", n_paths, spec.describe(), p.describe(), state_mode)
    blocos = map_path_blocks(lambda b: b, spec, p, n_paths, seed, state_mode, components,
                             m_inner, threads, block_size)
    return PathBundle.concat(blocos)
