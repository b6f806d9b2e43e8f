"""
Árvore Binomial Martingal
Oráculo de esperanças condicionais exatas: estados de contratos por indução
retroativa, verificação da propriedade de agregação nó a nó, peso ótimo
discreto e variância exata dos estimadores realizados
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.stats import binom

from caracteristicas import Characteristic, characteristic_from_polynomial, component_values, eval_characteristic
from erros import ErroComponente, ErroNumerico, ErroSingularidade, ErroValidacao
from nucleo import COMPONENTES, ContractState, derive_geometric_components
from polinomios import Polynomial

logger = logging.getLogger(__name__)

CONTRATOS_ARVORE = ("Y", "P2", "P3", "P4", "Z")
RIDGE_RELATIVO = 1e-14
CORTE_ESPECTRAL = 1e-12


@dataclass(frozen=True, eq=False)
class LatticeModel:
    """
    Árvore recombinante com F martingal.

    `levels[k][nome]` guarda os valores do componente nos k+1 nós do passo k,
    indexados pelo número de subidas.
    """

    F0: float
    sigma: float
    T: float
    steps: int
    up: float
    down: float
    p: float
    levels: Tuple[Dict[str, np.ndarray], ...]

    @property
    def dt(self) -> float:
        return self.T / self.steps

    @property
    def components(self) -> Tuple[str, ...]:
        return tuple(self.levels[0])

    def time(self, step: int) -> float:
        return step * self.dt

    def level(self, step: int) -> Dict[str, np.ndarray]:
        if not 0 <= step <= self.steps:
            raise ErroValidacao(f"Passo {step} fora de [0, {self.steps}]")
        return self.levels[step]

    def state(self, step: int, node: int) -> ContractState:
        nivel = self.level(step)
        if not 0 <= node <= step:
            raise ErroValidacao(f"Nó {node} inexistente no passo {step}")
        return ContractState(self.time(step), {nome: float(arr[node]) for nome, arr in nivel.items()})

    def transition(self, origem: int, destino: int) -> np.ndarray:
        """Matriz (origem+1) x (destino+1) de probabilidades de transição"""
        if not 0 <= origem <= destino <= self.steps:
            raise ErroValidacao(f"Transição inválida {origem} -> {destino}")
        n = destino - origem
        saltos = np.arange(destino + 1)[None, :] - np.arange(origem + 1)[:, None]
        return binom.pmf(saltos, n, self.p)

    def expectation(self, terminal: np.ndarray, step: int) -> np.ndarray:
        """E_step[X] para X dado nos nós do último passo (indução retroativa)"""
        valores = np.asarray(terminal, dtype=float)
        for _ in range(self.steps, step, -1):
            valores = self.p * valores[1:] + (1.0 - self.p) * valores[:-1]
        return valores


def build_lattice(F0: float = 1.0, sigma: float = 0.2, T: float = 1.0, steps: int = 8) -> LatticeModel:
    """
    Constrói a árvore com u = e^{σ√Δt}, d = 1/u, p = (1 - d)/(u - d).

    Contratos terminais: Y = y_T, P_i = y_Tⁱ, Z = F_T y_T; os demais nós por
    indução retroativa. F0 = 1 mantém os contratos na escala unitária.
    """
    if int(steps) != steps or steps < 1:
        raise ErroValidacao(f"steps deve ser inteiro >= 1, recebido {steps}")
    if not F0 > 0 or not T > 0 or not sigma >= 0:
        raise ErroValidacao("F0 e T devem ser positivos e sigma não negativo")
    steps = int(steps)
    dt = T / steps
    h = sigma * np.sqrt(dt)
    up, down = float(np.exp(h)), float(np.exp(-h))
    with np.errstate(divide="ignore", invalid="ignore"):
        p = (1.0 - down) / (up - down)
    if not (np.isfinite(p) and 0.0 < p < 1.0):
        raise ErroNumerico(f"Probabilidade neutra ao risco fora de (0, 1): p={p}")

    y0 = float(np.log(F0))
    def nivel_y(k):
        return y0 + (2.0 * np.arange(k + 1) - k) * h

    y_T = nivel_y(steps)
    F_T = np.exp(y_T)
    terminais = {"Y": y_T, "P2": y_T**2, "P3": y_T**3, "P4": y_T**4, "Z": F_T * y_T}

    contratos = {nome: [None] * (steps + 1) for nome in CONTRATOS_ARVORE}
    for nome, valores in terminais.items():
        contratos[nome][steps] = valores
        for k in range(steps - 1, -1, -1):
            filhos = contratos[nome][k + 1]
            contratos[nome][k] = p * filhos[1:] + (1.0 - p) * filhos[:-1]

    niveis = []
    for k in range(steps + 1):
        y = nivel_y(k)
        valores = {"F": np.exp(y), "y": y}
        valores.update({nome: contratos[nome][k] for nome in CONTRATOS_ARVORE})
        valores = derive_geometric_components(valores)
        ordenados = {nome: valores[nome] for nome in COMPONENTES if nome in valores}
        for arr in ordenados.values():
            arr.setflags(write=False)
        niveis.append(ordenados)

    logger.debug("Árvore construída: %d passos, p=%.12f", steps, p)
    return LatticeModel(float(F0), float(sigma), float(T), steps, up, down, float(p), tuple(niveis))


def check_lattice_invariants(tree: LatticeModel) -> Tuple[float, float]:
    """Maiores resíduos relativos (martingal de F, consistência retroativa dos contratos)"""
    pior_martingal = 0.0
    pior_contrato = 0.0
    for k in range(tree.steps):
        atual, prox = tree.levels[k], tree.levels[k + 1]
        esperado_F = tree.p * prox["F"][1:] + (1.0 - tree.p) * prox["F"][:-1]
        pior_martingal = max(pior_martingal, float(np.max(np.abs(esperado_F - atual["F"]) / atual["F"])))
        for nome in CONTRATOS_ARVORE:
            esperado = tree.p * prox[nome][1:] + (1.0 - tree.p) * prox[nome][:-1]
            escala = 1.0 + np.abs(atual[nome])
            pior_contrato = max(pior_contrato, float(np.max(np.abs(esperado - atual[nome]) / escala)))
    return pior_martingal, pior_contrato


# ---------------------------------------------------------------------------
# propriedade de agregação
# ---------------------------------------------------------------------------

def _matriz_f(c: Characteristic, tree: LatticeModel, origem: int, destino: int) -> np.ndarray:
    """f(u_origem[m], u_destino[j]) para todos os pares de nós"""
    nomes = c.required_components
    a = component_values(tree.level(origem), nomes, c.label)
    b = component_values(tree.level(destino), nomes, c.label)
    return np.asarray(eval_characteristic(
        c,
        {nome: arr[:, None] for nome, arr in a.items()},
        {nome: arr[None, :] for nome, arr in b.items()},
    )) * np.ones((origem + 1, destino + 1))


def lattice_ap_residuals(tree: LatticeModel, c: Characteristic, r_step: int, s_step: int):
    """
    Resíduos |E_r[f(u_r,u_T)] - E_r[f(u_r,u_s)] - E_r[f(u_s,u_T)]| por nó de r.

    Returns:
        (resíduos, E_r[f(u_r,u_T)]) como arrays de tamanho r+1
    """
    if not 0 <= r_step <= s_step <= tree.steps:
        raise ErroValidacao(f"Exige 0 <= r <= s <= N; recebido r={r_step}, s={s_step}, N={tree.steps}")
    faltando = set(c.required_components) - set(tree.components)
    if faltando:
        raise ErroComponente(faltando, f"árvore para {c.label}")
    N = tree.steps
    P_rT = tree.transition(r_step, N)
    P_rs = tree.transition(r_step, s_step)
    P_sT = tree.transition(s_step, N)

    total = np.sum(P_rT * _matriz_f(c, tree, r_step, N), axis=1)
    primeiro = np.sum(P_rs * _matriz_f(c, tree, r_step, s_step), axis=1)
    segundo_por_s = np.sum(P_sT * _matriz_f(c, tree, s_step, N), axis=1)
    segundo = P_rs @ segundo_por_s
    return np.abs(total - primeiro - segundo), total


def lattice_ap_check(tree: LatticeModel, c: Characteristic, r_step: int, s_step: int) -> float:
    """Maior resíduo absoluto da propriedade de agregação sobre os nós do passo r"""
    residuos, _ = lattice_ap_residuals(tree, c, r_step, s_step)
    return float(np.max(residuos))


def lattice_ap_scan(tree: LatticeModel, c: Characteristic) -> Tuple[float, float]:
    """
    Varre todos os pares r <= s.

    Returns:
        (maior resíduo absoluto, maior resíduo relativo a max(1, |E_r[f(u_r,u_T)]|))
    """
    pior_abs, pior_rel = 0.0, 0.0
    for r in range(tree.steps + 1):
        for s in range(r, tree.steps + 1):
            residuos, total = lattice_ap_residuals(tree, c, r, s)
            pior_abs = max(pior_abs, float(np.max(residuos)))
            pior_rel = max(pior_rel, float(np.max(residuos / np.maximum(1.0, np.abs(total)))))
    return pior_abs, pior_rel


# ---------------------------------------------------------------------------
# peso ótimo discreto
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscreteOptimum:
    """b ótimo por nó de um passo, b* = -Jᵃ no mesmo nó e a distância entre eles"""

    step: int
    components: Tuple[str, ...]
    b: np.ndarray
    b_star: np.ndarray
    gap: np.ndarray


def _como_caracteristica(a) -> Characteristic:
    if isinstance(a, Characteristic):
        return a
    if isinstance(a, (Polynomial, str)):
        return characteristic_from_polynomial(a)
    raise ErroValidacao(f"Esperado polinômio ou Characteristic, recebido {type(a).__name__}")


def _incrementos(tree: LatticeModel, step: int, nomes: Sequence[str]) -> Tuple[np.ndarray, np.ndarray]:
    """Δu para filho de baixo e de cima: arrays (nós, componentes)"""
    atual = component_values(tree.level(step), nomes)
    prox = component_values(tree.level(step + 1), nomes)
    baixo = np.stack([prox[n][:-1] - atual[n] for n in nomes], axis=-1)
    cima = np.stack([prox[n][1:] - atual[n] for n in nomes], axis=-1)
    return baixo, cima


def lattice_discrete_optimal_b(tree: LatticeModel, a: Union[Polynomial, str, Characteristic],
                               step: int) -> DiscreteOptimum:
    """
    b = -Ω⁻¹ω por nó do passo `step`, com ω = E[a(u_T) Δu] e Ω = E[Δu Δuᵀ].

    Com dois filhos Ω tem posto um para u multidimensional; autovalores abaixo
    de 1e-12 do maior são descartados e o restante recebe ridge 1e-14·traço,
    o que dá a solução de norma mínima. A distância a b* é medida na direção
    do passo.
    """
    if not 0 <= step < tree.steps:
        raise ErroValidacao(f"Passo deve estar em [0, {tree.steps - 1}], recebido {step}")
    c = _como_caracteristica(a)
    nomes = c.components
    if not nomes:
        raise ErroValidacao("a sem componentes: não há b a otimizar")
    faltando = set(nomes) - set(tree.components)
    if faltando:
        raise ErroComponente(faltando, "peso ótimo discreto")

    terminal = np.asarray(c.a(component_values(tree.level(tree.steps), nomes)), dtype=float)
    terminal = terminal * np.ones(tree.steps + 1)
    A_prox = tree.expectation(terminal, step + 1)
    baixo, cima = _incrementos(tree, step, nomes)
    p = tree.p

    omega = p * A_prox[1:, None] * cima + (1.0 - p) * A_prox[:-1, None] * baixo
    Omega = (p * cima[:, :, None] * cima[:, None, :]
             + (1.0 - p) * baixo[:, :, None] * baixo[:, None, :])

    b = np.empty_like(omega)
    for m in range(step + 1):
        traco = float(np.trace(Omega[m]))
        if not traco > 0:
            raise ErroSingularidade("Ω nulo: nenhum componente se move", no=(step, m))
        w, Q = np.linalg.eigh(Omega[m])
        retidos = w > CORTE_ESPECTRAL * w.max()
        if not np.any(retidos):
            raise ErroSingularidade("Ω singular além do resgate por ridge", no=(step, m))
        coords = (Q[:, retidos].T @ omega[m]) / (w[retidos] + RIDGE_RELATIVO * traco)
        b[m] = -(Q[:, retidos] @ coords)

    atual = component_values(tree.level(step), nomes)
    b_star = np.stack(c.b(atual), axis=-1) * np.ones_like(b)
    direcao = cima / np.linalg.norm(cima, axis=-1, keepdims=True)
    gap = np.abs(np.sum((b - b_star) * direcao, axis=-1))
    return DiscreteOptimum(step, tuple(nomes), b, b_star, gap)


def lattice_efficiency_gap(a: Union[Polynomial, str, Characteristic], sigma: float = 0.2, T: float = 1.0,
                           steps_list: Sequence[int] = (8, 16, 32, 64), F0: float = 1.0) -> List[float]:
    """Maior distância entre b ótimo e b* na raiz, para cada número de passos"""
    gaps = []
    for steps in steps_list:
        tree = build_lattice(F0, sigma, T, steps)
        otimo = lattice_discrete_optimal_b(tree, a, 0)
        gaps.append(float(np.max(otimo.gap)))
    return gaps


# ---------------------------------------------------------------------------
# variância exata dos estimadores
# ---------------------------------------------------------------------------

def lattice_estimator_variance(tree: LatticeModel, c: Characteristic, mode: str = "b_star") -> Tuple[float, float]:
    """
    Média e variância exatas da característica realizada sobre a árvore inteira.

    Indução retroativa dos dois primeiros momentos do restante R:
    G_k = Σ p_c (bΔu_c + G_{k+1}),
    H_k = Σ p_c [(bΔu_c)² + 2bΔu_c G_{k+1} + H_{k+1}].

    Args:
        mode: 'b_star' (b do nó), 'fixed_at_start' (b da raiz em todos os nós)
              ou 'lattice_optimal' (peso ótimo discreto em cada nó)
    """
    if mode not in ("b_star", "fixed_at_start", "lattice_optimal"):
        raise ErroValidacao(f"Modo de b desconhecido: {mode}")
    nomes = c.components
    faltando = set(c.required_components) - set(tree.components)
    if faltando:
        raise ErroComponente(faltando, f"árvore para {c.label}")
    N = tree.steps
    p = tree.p

    terminal = np.asarray(c.a(component_values(tree.level(N), nomes)), dtype=float) * np.ones(N + 1)
    G, H = terminal, terminal**2
    raiz = component_values(tree.level(0), nomes)
    b_raiz = np.array([float(np.asarray(x).ravel()[0]) for x in c.b(raiz)]) if nomes else np.zeros(0)

    for k in range(N - 1, -1, -1):
        if nomes:
            baixo, cima = _incrementos(tree, k, nomes)
            if mode == "b_star":
                b = np.stack(c.b(component_values(tree.level(k), nomes)), axis=-1) * np.ones_like(cima)
            elif mode == "fixed_at_start":
                b = np.broadcast_to(b_raiz, cima.shape)
            else:
                b = lattice_discrete_optimal_b(tree, c, k).b
            termo_cima = np.sum(b * cima, axis=-1)
            termo_baixo = np.sum(b * baixo, axis=-1)
        else:
            termo_cima = np.zeros(k + 1)
            termo_baixo = np.zeros(k + 1)
        if c.kernel is not None:
            y = tree.level(k)["y"]
            y_prox = tree.level(k + 1)["y"]
            termo_cima = termo_cima + c.kernel(y_prox[1:] - y)
            termo_baixo = termo_baixo + c.kernel(y_prox[:-1] - y)
        G_cima, G_baixo = G[1:], G[:-1]
        H_cima, H_baixo = H[1:], H[:-1]
        G = p * (termo_cima + G_cima) + (1.0 - p) * (termo_baixo + G_baixo)
        H = (p * (termo_cima**2 + 2.0 * termo_cima * G_cima + H_cima)
             + (1.0 - p) * (termo_baixo**2 + 2.0 * termo_baixo * G_baixo + H_baixo))

    a0 = float(np.asarray(c.a(raiz)).ravel()[0]) if nomes else 0.0
    media = float(G[0]) - a0
    variancia = max(float(H[0] - G[0] ** 2), 0.0)
    return media, variancia


def lattice_dump(tree: LatticeModel) -> pd.DataFrame:
    """Uma linha por (passo, nó) com todos os componentes"""
    linhas = []
    for k, nivel in enumerate(tree.levels):
        for m in range(k + 1):
            linha = {"step": k, "node": m, "time": tree.time(k)}
            linha.update({nome: float(arr[m]) for nome, arr in nivel.items()})
            linhas.append(linha)
    return pd.DataFrame(linhas)
