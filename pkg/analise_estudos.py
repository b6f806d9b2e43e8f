"""
Módulo de Estudos Estatísticos
Viés sob diferentes partições, eficiência dos pesos b, martingalidade da
transformação m, dados das figuras e prêmio de risco (realizado - implícito)
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from arvore_binomial import build_lattice, lattice_estimator_variance
from caracteristicas import (Characteristic, LogMartingaleSpec, MomentSpec, characteristic_from_polynomial,
                             lambda_kernel, m_transform, realise, realise_held, tau_kernel)
from erros import ErroCapacidade, ErroValidacao
from modelos import (CAPACIDADES, CONTRATOS, M_INTERNO_PADRAO, TAMANHO_BLOCO, ModelSpec,
                     closed_form_contracts, map_path_blocks, nested_contract_estimates)
from nucleo import ContractState, PASSO_DIARIO, PathBundle, Partition, SeedSpec, StatePath
from polinomios import Polynomial
from replicacao import OptionChain, QuadratureSpec, implied_moments_from_chain

logger = logging.getLogger(__name__)

Z_BILATERAL = 3.0
Z_UNILATERAL = 2.0
Z_MARTINGAL = 4.0
GRUPOS_JACKKNIFE = 50
GRADE_PADRAO = (-0.15, 0.15, 601)
MATURIDADE_RESIDUAL = 1.0 / 12

VARIANTES_B = ("b_star", "fixed_at_start", "lattice_optimal")


# ---------------------------------------------------------------------------
# relatório
# ---------------------------------------------------------------------------

@dataclass
class StudyRow:
    configuration: str
    n_paths: int
    mean: float
    stderr: float
    target: float
    z: float
    passed: bool


@dataclass
class StudyReport:
    """Linhas de (configuração, média, erro padrão, alvo, z) com aprovação por linha"""

    label: str
    threshold: float
    sided: str = "two"
    rows: List[StudyRow] = field(default_factory=list)

    def add(self, configuration: str, n_paths: int, mean: float, stderr: float,
            target: float, checked: bool = True) -> StudyRow:
        z = _z(mean, target, stderr)
        if not checked:
            aprovado = True
        elif self.sided == "two":
            aprovado = bool(abs(z) <= self.threshold)
        else:
            aprovado = bool(z > self.threshold)
        linha = StudyRow(configuration, int(n_paths), float(mean), float(stderr), float(target), float(z), aprovado)
        self.rows.append(linha)
        return linha

    @property
    def passed(self) -> bool:
        return all(linha.passed for linha in self.rows)

    def row(self, configuration: str) -> StudyRow:
        for linha in self.rows:
            if linha.configuration == configuration:
                return linha
        raise KeyError(configuration)

    def to_frame(self) -> pd.DataFrame:
        """Tabela com as colunas configuration,mean,stderr,target,z"""
        return pd.DataFrame(
            [(l.configuration, l.mean, l.stderr, l.target, l.z) for l in self.rows],
            columns=["configuration", "mean", "stderr", "target", "z"],
        )

    def summary_text(self) -> str:
        largura = max([len("configuration")] + [len(l.configuration) for l in self.rows])
        cabecalho = (f"{'configuration':<{largura}}  {'n_paths':>8}  {'mean':>14}  {'stderr':>12}  "
                     f"{'target':>14}  {'z':>8}  status")
        linhas = [f"# {self.label} (|z| limite {self.threshold:g}, {self.sided})", cabecalho]
        for l in self.rows:
            linhas.append(
                f"{l.configuration:<{largura}}  {l.n_paths:>8d}  {l.mean:>14.6e}  {l.stderr:>12.4e}  "
                f"{l.target:>14.6e}  {l.z:>8.2f}  {'OK' if l.passed else 'FALHOU'}"
            )
        return "\n".join(linhas) + "\n"


def _z(media: float, alvo: float, erro: float) -> float:
    if not np.isfinite(alvo):
        return float("nan")
    diferenca = media - alvo
    if erro > 0:
        return diferenca / erro
    if diferenca == 0:
        return 0.0
    return float(np.copysign(np.inf, diferenca))


def partition_gap_z(report: StudyReport, primeira: str, segunda: str) -> float:
    """z da diferença entre as médias de duas linhas (amostras independentes)"""
    a, b = report.row(primeira), report.row(segunda)
    erro = float(np.hypot(a.stderr, b.stderr))
    return _z(a.mean - b.mean, 0.0, erro)


# ---------------------------------------------------------------------------
# estatísticas por bloco
# ---------------------------------------------------------------------------

def _resumo(valores: np.ndarray) -> Tuple[int, float, float]:
    valores = np.asarray(valores, dtype=float)
    media = float(valores.mean())
    return valores.size, media, float(np.sum((valores - media) ** 2))


def _combinar(resumos: Sequence[Tuple[int, float, float]]) -> Tuple[int, float, float]:
    """Combina (n, média, soma dos quadrados centrados) de blocos, em ordem"""
    n, media, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in resumos:
        if nb == 0:
            continue
        total = n + nb
        delta = mb - media
        media = media + delta * nb / total
        m2 = m2 + m2b + delta**2 * n * nb / total
        n = total
    return n, media, m2


def _media_erro(resumos) -> Tuple[int, float, float]:
    n, media, m2 = _combinar(resumos)
    if n < 2:
        return n, media, float("nan")
    return n, media, float(np.sqrt(m2 / (n - 1) / n))


# ---------------------------------------------------------------------------
# estado inicial e componentes
# ---------------------------------------------------------------------------

def contracts_needed(c: Characteristic) -> Tuple[str, ...]:
    """Contratos que a simulação precisa fornecer para avaliar c"""
    exigidos = set(c.required_components)
    contratos = exigidos & set(CONTRATOS)
    if "vlambda" in exigidos:
        contratos.add("Y")
    if "veta" in exigidos:
        contratos.add("Z")
    return tuple(nome for nome in CONTRATOS if nome in contratos)


def initial_state(spec: ModelSpec, m_inner: int = 200_000, seed: Optional[SeedSpec] = None) -> ContractState:
    """u_0 do modelo: forma fechada onde houver, MC aninhado nos demais contratos"""
    y0 = float(np.log(spec.F0))
    suportados = CAPACIDADES[(spec.kind, "closed_form")]
    fechados = [c for c in CONTRATOS if c in suportados]
    valores = {"F": spec.F0, "y": y0}
    v0 = spec.v0 if spec.kind == "heston" else None
    valores.update({k: float(v) for k, v in closed_form_contracts(spec, spec.T, y0, fechados, v=v0).items()})
    faltando = [c for c in CONTRATOS if c not in suportados]
    if faltando:
        logger.info("Estimando %s em t=0 por MC aninhado (%d amostras)", faltando, m_inner)
        est = nested_contract_estimates(spec, y0, 0.0, m_inner, seed or SeedSpec(0), chaves=(0, 0),
                                        v=v0, components=faltando)
        valores.update(est.means)
    return ContractState(0.0, valores)


# ---------------------------------------------------------------------------
# estudos
# ---------------------------------------------------------------------------

def bias_study(model: ModelSpec, c: Characteristic, partitions: Sequence[Partition], n_paths: int,
               seed: SeedSpec, threshold: float = Z_BILATERAL, state_mode: str = "closed_form",
               target: Optional[float] = None, threads: int = 1, m_inner: int = M_INTERNO_PADRAO,
               block_size: int = TAMANHO_BLOCO) -> StudyReport:
    """
    Média da característica realizada por partição contra o alvo implícito.

    Cada partição usa um fluxo de sorteio próprio (stream_id + índice).
    """
    if not partitions:
        raise ErroValidacao("Nenhuma partição informada")
    if target is None:
        if c.implied is None:
            raise ErroCapacidade(f"{c.label} não tem característica implícita; informe o alvo")
        target = float(c.implied(initial_state(model, seed=seed)))
    componentes = contracts_needed(c)

    relatorio = StudyReport(f"viés {c.label} em {model.describe()}", threshold, "two")
    for k, particao in enumerate(partitions):
        fluxo = SeedSpec(seed.master_seed, seed.stream_id + k)
        resumos = map_path_blocks(lambda bloco: _resumo(realise(c, bloco)), model, particao, n_paths, fluxo,
                                  state_mode, componentes, m_inner, threads, block_size)
        n, media, erro = _media_erro(resumos)
        linha = relatorio.add(particao.describe(), n, media, erro, target)
        logger.info("%s: média %.6e ± %.2e (z=%.2f)", particao.describe(), media, erro, linha.z)
    return relatorio


def _jackknife_variancia(valores: np.ndarray, grupos: int = GRUPOS_JACKKNIFE) -> Tuple[float, float]:
    """Variância amostral e erro padrão por jackknife de grupos; valores com formato (n,) ou (n, k)"""
    valores = np.asarray(valores, dtype=float)
    n = valores.shape[0]
    variancia = valores.var(axis=0, ddof=1)
    g = min(grupos, n)
    if g < 2:
        return variancia, np.full_like(variancia, np.nan)
    rotulos = np.arange(n) * g // n
    replicas = np.array([valores[rotulos != j].var(axis=0, ddof=1) for j in range(g)])
    erro = np.sqrt((g - 1) / g * np.sum((replicas - replicas.mean(axis=0)) ** 2, axis=0))
    return variancia, erro


def _jackknife_diferenca(x: np.ndarray, y: np.ndarray, grupos: int = GRUPOS_JACKKNIFE) -> Tuple[float, float]:
    """Var(x) - Var(y) e seu erro padrão por jackknife de grupos (respeita números aleatórios comuns)"""
    n = x.shape[0]
    diferenca = float(x.var(ddof=1) - y.var(ddof=1))
    g = min(grupos, n)
    if g < 2:
        return diferenca, float("nan")
    rotulos = np.arange(n) * g // n
    replicas = np.array([x[rotulos != j].var(ddof=1) - y[rotulos != j].var(ddof=1) for j in range(g)])
    erro = float(np.sqrt((g - 1) / g * np.sum((replicas - replicas.mean()) ** 2)))
    return diferenca, erro


def efficiency_study(model: ModelSpec, a: Union[Polynomial, str], b_variants: Sequence[str], p: Partition,
                     n_paths: int, seed: SeedSpec, threshold: float = Z_UNILATERAL,
                     common_random_numbers: bool = True, threads: int = 1,
                     block_size: int = TAMANHO_BLOCO) -> StudyReport:
    """
    Variância da característica realizada para cada regra de b com o mesmo a.

    b_star e fixed_at_start são comparados por Monte Carlo; lattice_optimal só
    existe nos nós da árvore, então as três regras são ordenadas também pelas
    variâncias exatas numa árvore com o mesmo Δt.
    """
    desconhecidas = set(b_variants) - set(VARIANTES_B)
    if desconhecidas:
        raise ErroValidacao(f"Variantes de b desconhecidas: {sorted(desconhecidas)}")
    if not b_variants:
        raise ErroValidacao("Nenhuma variante de b informada")
    c = characteristic_from_polynomial(a, label="a")
    componentes = contracts_needed(c)
    relatorio = StudyReport(f"eficiência de b em {model.describe()}, {p.describe()}", threshold, "one")

    mc = [v for v in b_variants if v != "lattice_optimal"]
    regras = {
        "b_star": lambda bloco: realise(c, bloco),
        "fixed_at_start": lambda bloco: realise_held(c, bloco),
    }
    # com números aleatórios comuns todas as regras veem os mesmos caminhos
    grupos = [mc] if common_random_numbers else [[v] for v in mc]
    valores: Dict[str, np.ndarray] = {}
    for k, grupo in enumerate(grupos):
        fluxo = SeedSpec(seed.master_seed, seed.stream_id + k)
        blocos = map_path_blocks(
            lambda bloco, grupo=grupo: {v: np.asarray(regras[v](bloco)) for v in grupo},
            model, p, n_paths, fluxo, "closed_form", componentes, threads=threads, block_size=block_size,
        )
        for v in grupo:
            valores[v] = np.concatenate([np.atleast_1d(bloco[v]) for bloco in blocos])

    for variante in mc:
        variancia, erro = _jackknife_variancia(valores[variante])
        relatorio.add(f"var:{variante}", n_paths, float(variancia), float(erro), float("nan"), checked=False)
    if {"b_star", "fixed_at_start"} <= set(mc):
        if common_random_numbers:
            diferenca, erro = _jackknife_diferenca(valores["fixed_at_start"], valores["b_star"])
        else:
            _, e1 = _jackknife_variancia(valores["fixed_at_start"])
            _, e2 = _jackknife_variancia(valores["b_star"])
            diferenca = float(valores["fixed_at_start"].var(ddof=1) - valores["b_star"].var(ddof=1))
            erro = float(np.hypot(e1, e2))
        relatorio.add("fixed_at_start - b_star", n_paths, diferenca, erro, 0.0, checked=p.N > 1)

    if "lattice_optimal" in b_variants:
        _ordenar_na_arvore(relatorio, model, c, p, b_variants)
    return relatorio


def _ordenar_na_arvore(relatorio: StudyReport, model: ModelSpec, c: Characteristic, p: Partition,
                       b_variants: Sequence[str]) -> None:
    if model.kind != "gbm":
        raise ErroCapacidade("A ordenação exata na árvore exige modelo gbm")
    if not np.allclose(p.intervals, p.intervals[0], rtol=1e-9, atol=0.0):
        raise ErroCapacidade("A árvore exige partição regular para casar o Δt")
    arvore = build_lattice(model.F0, model.sigma, model.T, p.N)
    variancias = {}
    for variante in VARIANTES_B:
        if variante in b_variants or variante == "lattice_optimal":
            _, variancias[variante] = lattice_estimator_variance(arvore, c, variante)
            relatorio.add(f"lattice var:{variante}", 0, variancias[variante], 0.0, float("nan"), checked=False)
    ordem = [v for v in ("fixed_at_start", "b_star", "lattice_optimal") if v in variancias]
    for pior, melhor in zip(ordem, ordem[1:]):
        diferenca = variancias[pior] - variancias[melhor]
        tolerancia = 1e-12 * max(1.0, variancias[pior])
        linha = relatorio.add(f"lattice {pior} - {melhor}", 0, diferenca, 0.0, 0.0, checked=False)
        linha.passed = bool(diferenca >= -tolerancia)
        linha.z = float("inf") if diferenca > tolerancia else 0.0


def log_martingale_host(model: ModelSpec, bundle: PathBundle, c: float) -> np.ndarray:
    """u_t = c⁻¹ ln E_t[e^{c y_T}] = y_t + (c - 1)σ²(T - t)/2 no gbm"""
    if model.kind != "gbm":
        raise ErroCapacidade("Hospedeiro log-martingal em forma fechada só no gbm")
    tau = model.T - bundle.partition.array
    return bundle.values["y"] + (c - 1.0) * model.sigma**2 * tau / 2.0


def martingality_study(model: ModelSpec, c_values: Sequence[float], p: Partition, n_paths: int,
                       seed: SeedSpec, threshold: float = Z_MARTINGAL, threads: int = 1) -> StudyReport:
    """Média por caminho dos incrementos de m(u_t) deve ser zero"""
    relatorio = StudyReport(f"martingalidade de m(u) em {model.describe()}", threshold, "two")
    for k, c in enumerate(c_values):
        spec = LogMartingaleSpec.scalar(c)
        fluxo = SeedSpec(seed.master_seed, seed.stream_id + k)

        def resumo(bloco, c=c, spec=spec):
            u = log_martingale_host(model, bloco, c)
            m = m_transform(spec, u[..., None])[..., 0]
            return _resumo(np.diff(m, axis=1).mean(axis=1))

        resumos = map_path_blocks(resumo, model, p, n_paths, fluxo, "closed_form", ("Y",), threads=threads)
        n, media, erro = _media_erro(resumos)
        relatorio.add(f"c={c:g}", n, media, erro, 0.0)
    return relatorio


# ---------------------------------------------------------------------------
# figuras
# ---------------------------------------------------------------------------

def figure_data(which: str, sigma: float = 0.2, dt: float = PASSO_DIARIO, y_grid=None,
                residual_maturity: float = MATURIDADE_RESIDUAL) -> pd.DataFrame:
    """
    Curvas em função de x = Y_s - Y_r, com y_s - y_r = x + σ²dt/2.

    Convenções: volatilidade implícita constante (Δv2 = -σ²dt, δvη = Δv2,
    v3 = 0); a fig3 usa v2 no instante s igual a σ²(T - s).
    Na fig2 o RTM fica mais perto do CLR que o NTM apenas para x <= -0.05 ou x >= ~0.124.
    """
    if which not in ("fig1", "fig2", "fig3"):
        raise ErroValidacao(f"Figura desconhecida: {which} (opções: fig1, fig2, fig3)")
    if not sigma > 0 or not dt > 0 or not residual_maturity >= 0:
        raise ErroValidacao("sigma e dt devem ser positivos")
    x = np.linspace(*GRADE_PADRAO) if y_grid is None else np.asarray(y_grid, dtype=float)
    if x.ndim != 1 or x.size == 0 or not np.all(np.isfinite(x)):
        raise ErroValidacao("Grade de x deve ser um vetor finito não vazio")
    s2dt = sigma**2 * dt
    dy = x + 0.5 * s2dt
    tabela = {"x": x, "log_return": dy}

    if which == "fig1":
        tabela.update(RV=x**2, LV=lambda_kernel(dy) * np.ones_like(x), SLR=dy**2)
    elif which == "fig2":
        dv2 = -s2dt
        tabela.update(
            RTM=x**3 + 3.0 * dv2 * x,
            NTM=3.0 * dv2 * np.expm1(dy) + tau_kernel(dy) * np.ones_like(x),
            CLR=dy**3,
        )
    else:
        v2_s = sigma**2 * residual_maturity
        tabela.update(RFM=x**4 + 6.0 * v2_s * x**2, QLR=dy**4)
    return pd.DataFrame(tabela)


# ---------------------------------------------------------------------------
# prêmio de risco
# ---------------------------------------------------------------------------

def characteristic_order(c: Characteristic) -> Optional[int]:
    if c.order is not None:
        return c.order
    if c.family == "power" and c.kernel_label.startswith("power:"):
        return int(c.kernel_label.split(":")[1]) - 1
    return None


def risk_premium(realised_paths: Union[PathBundle, Sequence[StatePath]], c: Characteristic,
                 chain: OptionChain, spec: MomentSpec,
                 quad: Optional[QuadratureSpec] = None) -> Dict[str, float]:
    """
    Prêmio = média realizada - característica implícita das opções.

    Returns:
        dict com realised_mean, realised_stderr, implied, premium, n_paths
    """
    if not isinstance(realised_paths, PathBundle):
        realised_paths = PathBundle.from_paths(list(realised_paths))
    T = realised_paths.partition.T
    if abs(T - chain.maturity) > 1e-9 * max(1.0, T):
        raise ErroValidacao(f"Maturidade dos caminhos ({T:g}) difere da cadeia ({chain.maturity:g})")
    ordem = characteristic_order(c)
    if ordem is not None and ordem != spec.n:
        raise ErroValidacao(f"Ordem da característica ({ordem}) difere da MomentSpec (n={spec.n})")

    realizados = np.asarray(realise(c, realised_paths), dtype=float)
    n = realizados.size
    media = float(realizados.mean())
    erro = float(realizados.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    # momentos centrais calculados na cadeia normalizada
    implicito = float(implied_moments_from_chain(chain, quad)[f"m{spec.n + 1}"])
    logger.info("Prêmio %s: realizado %.6e, implícito %.6e", c.label, media, implicito)
    return {
        "realised_mean": media,
        "realised_stderr": erro,
        "implied": implicito,
        "premium": media - implicito,
        "n_paths": n,
    }
