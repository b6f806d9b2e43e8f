"""
Núcleo: Partições, Estados de Contratos e Caminhos
Tipos imutáveis compartilhados por todos os simuladores e estimadores
"""

import logging
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from erros import ErroComponente, ErroNumerico, ErroValidacao

logger = logging.getLogger(__name__)

# Tempo em anos; monitoramento diário = 1/250
DIAS_UTEIS_ANO = 250
PASSO_DIARIO = 1.0 / DIAS_UTEIS_ANO

INTERVALO_MINIMO = 1e-9
MAX_TENTATIVAS_SORTEIO = 1000

# Componentes admitidos num estado de contratos:
#   F forward, y = ln F, Y contrato log, P2..P4 contratos de potência do log,
#   Z contrato de entropia E_t[F_T y_T], vlambda / veta variâncias log e de entropia
COMPONENTES = ("F", "y", "Y", "P2", "P3", "P4", "Z", "vlambda", "veta")


def _tolerancia(*valores) -> np.ndarray:
    escala = 1.0
    for v in valores:
        escala = escala + np.abs(v)
    return 1e-12 * escala


def validate_components(valores: Mapping[str, object], contexto: str = "") -> None:
    """
    Validador compartilhado dos invariantes de estado de contratos.

    Funciona tanto para escalares quanto para arrays (caminhos, nós do lattice).

    Args:
        valores: mapeamento componente -> valor(es)
        contexto: texto anexado às mensagens de erro

    Raises:
        ErroValidacao: se algum invariante não vale
    """
    desconhecidos = set(valores) - set(COMPONENTES)
    if desconhecidos:
        raise ErroValidacao(f"Componentes desconhecidos {sorted(desconhecidos)} {contexto}".strip())

    arrays = {nome: np.asarray(v, dtype=float) for nome, v in valores.items()}
    for nome, arr in arrays.items():
        if not np.all(np.isfinite(arr)):
            raise ErroValidacao(f"Componente {nome} com valores não finitos {contexto}".strip())

    if "F" in arrays:
        F = arrays["F"]
        if np.any(F <= 0):
            raise ErroValidacao(f"Forward F deve ser positivo {contexto}".strip())
        if "y" in arrays:
            y = arrays["y"]
            if np.any(np.abs(y - np.log(F)) > _tolerancia(y)):
                raise ErroValidacao(f"y difere de ln F {contexto}".strip())

    if {"y", "Y", "vlambda"} <= set(arrays):
        y, Y, vl = arrays["y"], arrays["Y"], arrays["vlambda"]
        if np.any(np.abs(vl - 2.0 * (y - Y)) > _tolerancia(y, Y)):
            raise ErroValidacao(f"vlambda difere de 2(y - Y) {contexto}".strip())

    if {"F", "y", "Z", "veta"} <= set(arrays):
        F, y, Z, ve = arrays["F"], arrays["y"], arrays["Z"], arrays["veta"]
        if np.any(np.abs(ve - 2.0 * (Z / F - y)) > _tolerancia(y, Z / F)):
            raise ErroValidacao(f"veta difere de 2(Z/F - y) {contexto}".strip())


def derive_geometric_components(valores: Mapping[str, np.ndarray]) -> Dict[str, np.ndarray]:
    """Acrescenta y, vlambda e veta quando os constituintes estão presentes"""
    novos = dict(valores)
    if "F" in novos and "y" not in novos:
        novos["y"] = np.log(novos["F"])
    if "y" in novos and "Y" in novos:
        novos["vlambda"] = 2.0 * (novos["y"] - novos["Y"])
    if {"F", "y", "Z"} <= set(novos):
        novos["veta"] = 2.0 * (novos["Z"] / novos["F"] - novos["y"])
    return novos


def require_components(disponiveis, exigidos, contexto: str = "") -> None:
    faltando = set(exigidos) - set(disponiveis)
    if faltando:
        raise ErroComponente(faltando, contexto)


@dataclass(frozen=True)
class Partition:
    """Tempos de monitoramento 0 = t_0 < t_1 < ... < t_N = T (não precisa ser regular)"""

    times: Tuple[float, ...]
    label: str = field(default="", compare=False)
    # partição de origem e fator acumulado de refine
    base: Optional["Partition"] = field(default=None, compare=False, repr=False)
    fator: int = field(default=1, compare=False, repr=False)

    def __post_init__(self):
        tempos = tuple(float(t) for t in self.times)
        object.__setattr__(self, "times", tempos)
        if len(tempos) < 2:
            raise ErroValidacao("Partição precisa de pelo menos dois tempos")
        if tempos[0] != 0.0:
            raise ErroValidacao(f"Partição deve começar em 0, recebido {tempos[0]}")
        if tempos[-1] <= 0.0:
            raise ErroValidacao("Horizonte T deve ser positivo")
        if any(b <= a for a, b in zip(tempos, tempos[1:])):
            raise ErroValidacao("Tempos da partição devem ser estritamente crescentes")

    @property
    def T(self) -> float:
        return self.times[-1]

    @property
    def N(self) -> int:
        return len(self.times) - 1

    @property
    def array(self) -> np.ndarray:
        arr = np.array(self.times)
        arr.setflags(write=False)
        return arr

    @property
    def intervals(self) -> np.ndarray:
        return np.diff(self.array)

    def describe(self) -> str:
        return self.label or f"explicit(N={self.N}, T={self.T:g})"


def make_partition(T: float, scheme: str = "regular", n: Optional[int] = None,
                   times: Optional[Sequence[float]] = None,
                   seed: Optional[int] = None) -> Partition:
    """
    Constrói uma partição de [0, T].

    Args:
        T: horizonte em anos
        scheme: 'regular', 'explicit' ou 'random'
        n: número de intervalos (regular/random)
        times: tempos explícitos (explicit)
        seed: semente do sorteio (random)

    Returns:
        Partition válida
    """
    if not T > 0:
        raise ErroValidacao(f"T deve ser positivo, recebido {T}")

    if scheme == "explicit":
        if times is None:
            raise ErroValidacao("Esquema explicit exige a lista de tempos")
        p = Partition(tuple(times), label=f"explicit(N={len(times) - 1})")
        if abs(p.T - T) > 1e-12 * max(1.0, T):
            raise ErroValidacao(f"Último tempo {p.T} difere de T={T}")
        return p

    if n is None or int(n) != n or n < 1:
        raise ErroValidacao(f"N deve ser inteiro >= 1, recebido {n}")
    n = int(n)

    if scheme == "regular":
        tempos = np.linspace(0.0, T, n + 1)
        tempos[-1] = T
        return Partition(tuple(tempos), label=f"regular({n})")

    if scheme == "random":
        rng = np.random.default_rng(seed)
        for _ in range(MAX_TENTATIVAS_SORTEIO):
            interior = np.sort(rng.uniform(0.0, T, n - 1))
            tempos = np.concatenate(([0.0], interior, [T]))
            if np.all(np.diff(tempos) >= INTERVALO_MINIMO):
                return Partition(tuple(tempos), label=f"random({n}, seed={seed})")
            logger.debug("Sorteio de partição rejeitado (intervalo degenerado)")
        raise ErroNumerico("Não foi possível sortear partição sem intervalos degenerados")

    raise ErroValidacao(f"Esquema de partição desconhecido: {scheme}")


def refine(p: Partition, factor: int) -> Partition:
    """
    Divide cada intervalo em `factor` subintervalos iguais, preservando os tempos originais.

    Os tempos são sempre calculados a partir da partição de origem com o fator acumulado,
    então refine(refine(p, a), b) == refine(p, a * b) exatamente.
    """
    if int(factor) != factor or factor < 1:
        raise ErroValidacao(f"Fator de refinamento deve ser inteiro >= 1, recebido {factor}")
    factor = int(factor)
    if factor == 1:
        return p
    origem = p.base if p.base is not None else p
    total = p.fator * factor
    pontos = origem.array
    fracoes = np.arange(total) / total
    interior = pontos[:-1, None] + np.diff(pontos)[:, None] * fracoes[None, :]
    tempos = np.append(interior.ravel(), pontos[-1])
    rotulo = f"{origem.label}x{total}" if origem.label else ""
    return Partition(tuple(tempos), label=rotulo, base=origem, fator=total)


@dataclass(frozen=True)
class ContractState:
    """Vetor u_t de valores de contratos num instante"""

    time: float
    components: Mapping[str, float]

    def __post_init__(self):
        comps = {nome: float(v) for nome, v in dict(self.components).items()}
        validate_components(comps, contexto=f"em t={self.time}")
        object.__setattr__(self, "time", float(self.time))
        object.__setattr__(self, "components", MappingProxyType(comps))

    def __getitem__(self, nome: str) -> float:
        try:
            return self.components[nome]
        except KeyError:
            raise ErroComponente({nome}, f"estado em t={self.time}") from None

    def __contains__(self, nome: str) -> bool:
        return nome in self.components

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(self.components)


def _congelar(arr) -> np.ndarray:
    copia = np.array(arr, dtype=float)
    copia.setflags(write=False)
    return copia


@dataclass(frozen=True)
class StatePath:
    """Caminho de estados alinhado aos tempos da partição"""

    partition: Partition
    values: Mapping[str, np.ndarray]

    def __post_init__(self):
        n = len(self.partition.times)
        valores = {}
        for nome, arr in dict(self.values).items():
            arr = _congelar(arr)
            if arr.shape != (n,):
                raise ErroValidacao(f"Componente {nome} com {arr.shape} valores; esperado ({n},)")
            valores[nome] = arr
        if not valores:
            raise ErroValidacao("Caminho sem componentes")
        validate_components(valores, contexto="no caminho")
        object.__setattr__(self, "values", MappingProxyType(valores))

    @classmethod
    def from_states(cls, states: Sequence[ContractState]) -> "StatePath":
        if len(states) < 1:
            raise ErroValidacao("Lista de estados vazia")
        nomes = set(states[0].names)
        if any(set(s.names) != nomes for s in states):
            raise ErroValidacao("Todos os estados devem ter o mesmo conjunto de componentes")
        particao = Partition(tuple(s.time for s in states))
        valores = {nome: np.array([s[nome] for s in states]) for nome in states[0].names}
        return cls(particao, valores)

    @property
    def components(self) -> Tuple[str, ...]:
        return tuple(self.values)

    @property
    def states(self) -> List[ContractState]:
        return [
            ContractState(t, {nome: arr[i] for nome, arr in self.values.items()})
            for i, t in enumerate(self.partition.times)
        ]

    def __len__(self) -> int:
        return len(self.partition.times)


@dataclass(frozen=True)
class PathBundle:
    """Coleção de caminhos sobre a mesma partição (arrays n_paths x n_tempos)"""

    partition: Partition
    values: Mapping[str, np.ndarray]

    def __post_init__(self):
        n_tempos = len(self.partition.times)
        valores = {}
        formato = None
        for nome, arr in dict(self.values).items():
            arr = _congelar(arr)
            if arr.ndim != 2 or arr.shape[1] != n_tempos:
                raise ErroValidacao(f"Componente {nome} com formato {arr.shape}; esperado (n, {n_tempos})")
            if formato is not None and arr.shape != formato:
                raise ErroValidacao("Componentes com número de caminhos diferente")
            formato = arr.shape
            valores[nome] = arr
        if not valores:
            raise ErroValidacao("Conjunto de caminhos sem componentes")
        validate_components(valores, contexto="no conjunto de caminhos")
        object.__setattr__(self, "values", MappingProxyType(valores))

    @property
    def n_paths(self) -> int:
        return next(iter(self.values.values())).shape[0]

    @property
    def components(self) -> Tuple[str, ...]:
        return tuple(self.values)

    def __len__(self) -> int:
        return self.n_paths

    def path(self, i: int) -> StatePath:
        return StatePath(self.partition, {nome: arr[i] for nome, arr in self.values.items()})

    def __iter__(self) -> Iterator[StatePath]:
        for i in range(self.n_paths):
            yield self.path(i)

    def at(self, indice_tempo: int) -> Dict[str, np.ndarray]:
        """Componentes de todos os caminhos num índice de tempo"""
        return {nome: arr[:, indice_tempo] for nome, arr in self.values.items()}

    @classmethod
    def from_paths(cls, paths: Sequence[StatePath]) -> "PathBundle":
        if not paths:
            raise ErroValidacao("Nenhum caminho informado")
        particao = paths[0].partition
        if any(p.partition.times != particao.times for p in paths):
            raise ErroValidacao("Caminhos com partições diferentes")
        nomes = paths[0].components
        if any(set(p.components) != set(nomes) for p in paths):
            raise ErroValidacao("Caminhos com componentes diferentes")
        return cls(particao, {nome: np.vstack([p.values[nome] for p in paths]) for nome in nomes})

    @classmethod
    def concat(cls, blocos: Sequence["PathBundle"]) -> "PathBundle":
        if not blocos:
            raise ErroValidacao("Nenhum bloco informado")
        nomes = blocos[0].components
        return cls(blocos[0].partition,
                   {nome: np.concatenate([b.values[nome] for b in blocos], axis=0) for nome in nomes})


@dataclass(frozen=True)
class SeedSpec:
    """
    Semente mestre + identificador de fluxo.

    Cada bloco de caminhos (e cada tipo de sorteio dentro do bloco) recebe uma
    subsequência própria, de modo que o resultado não depende do número de threads.
    """

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ErroValidacao("master_seed deve ser inteiro de 64 bits sem sinal")
        if int(self.stream_id) < 0:
            raise ErroValidacao("stream_id deve ser não negativo")

    def sequence(self, *chaves: int) -> np.random.SeedSequence:
        return np.random.SeedSequence([int(self.master_seed), int(self.stream_id), *map(int, chaves)])

    def generator(self, *chaves: int) -> np.random.Generator:
        return np.random.default_rng(self.sequence(*chaves))

    def child(self, stream_id: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, stream_id)
