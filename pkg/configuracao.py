"""
Configuração dos experimentos
Arquivos INI (seções + chave = valor) validados por esquema antes de qualquer
cálculo, e variáveis de ambiente lidas do .env
"""

import configparser
import logging
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from dotenv import load_dotenv

from caracteristicas import characteristic_by_label, moment_polynomial
from erros import ErroConfiguracao, ErroValidacao
from modelos import ModelSpec
from nucleo import Partition, SeedSpec, make_partition
from polinomios import Polynomial

logger = logging.getLogger(__name__)

SAIDA_PADRAO = "resultados"
NIVEIS_LOG = ("DEBUG", "INFO", "WARNING", "ERROR")


# ---------------------------------------------------------------------------
# conversores
# ---------------------------------------------------------------------------

def _real(texto: str) -> float:
    return float(texto)


def _positivo(texto: str) -> float:
    valor = float(texto)
    if not valor > 0:
        raise ValueError("deve ser positivo")
    return valor


def _nao_negativo(texto: str) -> float:
    valor = float(texto)
    if valor < 0:
        raise ValueError("deve ser não negativo")
    return valor


def _inteiro_positivo(texto: str) -> int:
    valor = int(texto)
    if valor < 1:
        raise ValueError("deve ser inteiro >= 1")
    return valor


def _inteiro_nao_negativo(texto: str) -> int:
    valor = int(texto)
    if valor < 0:
        raise ValueError("deve ser inteiro >= 0")
    return valor


def _booleano(texto: str) -> bool:
    chave = texto.strip().lower()
    if chave in ("1", "sim", "true", "yes", "on"):
        return True
    if chave in ("0", "nao", "não", "false", "no", "off"):
        return False
    raise ValueError("esperado sim/não")


def _texto(texto: str) -> str:
    return texto.strip()


def _opcao(*opcoes: str) -> Callable[[str], str]:
    def conversor(texto: str) -> str:
        valor = texto.strip()
        if valor not in opcoes:
            raise ValueError(f"opções válidas: {', '.join(opcoes)}")
        return valor
    return conversor


def _lista_textos(texto: str) -> Tuple[str, ...]:
    itens = tuple(item.strip() for item in texto.split(",") if item.strip())
    if not itens:
        raise ValueError("lista vazia")
    return itens


def _lista_reais(texto: str) -> Tuple[float, ...]:
    return tuple(float(item) for item in re.split(r"[,\s]+", texto.strip()) if item)


def _lista_inteiros(texto: str) -> Tuple[int, ...]:
    itens = tuple(_inteiro_positivo(item) for item in re.split(r"[,\s]+", texto.strip()) if item)
    if not itens:
        raise ValueError("lista vazia")
    return itens


def _rotulo(texto: str) -> str:
    characteristic_by_label(texto)
    return texto.strip().upper()


def _rotulos(texto: str) -> Tuple[str, ...]:
    return tuple(_rotulo(item) for item in _lista_textos(texto))


def _polinomio(texto: str) -> str:
    polynomial_from_config(texto)
    return texto.strip()


def _particoes(texto: str) -> Tuple[str, ...]:
    itens = _lista_textos(texto)
    for item in itens:
        _ler_esquema(item)
    return itens


# ---------------------------------------------------------------------------
# esquemas: seção -> chave -> (conversor, padrão)
# ---------------------------------------------------------------------------

Esquema = Dict[str, Dict[str, Tuple[Callable[[str], Any], Any]]]

SECAO_MODELO = {
    "kind": (_opcao("gbm", "merton", "heston"), "gbm"),
    "F0": (_positivo, 100.0),
    "T": (_positivo, 1.0),
    "sigma": (_nao_negativo, 0.2),
    "jump_intensity": (_nao_negativo, 0.0),
    "jump_mean": (_real, 0.0),
    "jump_stdev": (_nao_negativo, 0.0),
    "v0": (_nao_negativo, 0.04),
    "kappa": (_nao_negativo, 1.5),
    "theta": (_nao_negativo, 0.04),
    "xi": (_nao_negativo, 0.5),
    "rho_corr": (_real, -0.7),
    "drift": (_real, 0.0),
}

SECAO_SIMULACAO = {
    "scheme": (_opcao("regular", "random", "explicit"), "regular"),
    "n": (_inteiro_positivo, 250),
    "times": (_lista_reais, None),
    "partition_seed": (_inteiro_nao_negativo, 0),
    "n_paths": (_inteiro_positivo, 10_000),
    "master_seed": (_inteiro_nao_negativo, 20240101),
    "stream_id": (_inteiro_nao_negativo, 0),
    "state_mode": (_opcao("closed_form", "nested_mc"), "closed_form"),
    "m_inner": (_inteiro_positivo, 10_000),
    "block_size": (_inteiro_positivo, 2048),
}

SECAO_ESTUDO = {
    "characteristic": (_rotulo, "LV"),
    "partitions": (_particoes, ("regular:1", "regular:12", "regular:250")),
    "threshold": (_positivo, 3.0),
    "target": (_real, None),
    "export_paths": (_booleano, False),
}

SECAO_EFICIENCIA = {
    "a": (_polinomio, "Y^2"),
    "variants": (_lista_textos, ("b_star", "fixed_at_start", "lattice_optimal")),
    "threshold": (_positivo, 2.0),
    "common_random_numbers": (_booleano, True),
    "gap_steps": (_lista_inteiros, (8, 16, 32, 64)),
}

SECAO_ARVORE = {
    "F0": (_positivo, 1.0),
    "sigma": (_positivo, 0.2),
    "T": (_positivo, 1.0),
    "steps": (_inteiro_positivo, 8),
    "characteristics": (_rotulos, ("LV", "NTM", "RV", "RTM", "RFM")),
    "control": (_rotulo, "SLR"),
    "tolerance": (_positivo, 1e-10),
    "dump": (_booleano, False),
}

SECAO_FIGURAS = {
    "which": (_lista_textos, ("fig1", "fig2", "fig3")),
    "sigma": (_positivo, 0.2),
    "dt": (_positivo, 1.0 / 250),
    "x_min": (_real, -0.15),
    "x_max": (_real, 0.15),
    "n_points": (_inteiro_positivo, 601),
    "residual_maturity": (_nao_negativo, 1.0 / 12),
}

SECAO_REPLICACAO = {
    "chain": (_texto, None),
    "synthetic_forward": (_positivo, None),
    "synthetic_sigma": (_positivo, None),
    "synthetic_maturity": (_positivo, None),
    "grid": (_opcao("as-given", "log-uniform"), "as-given"),
    "n_points": (_inteiro_positivo, 2001),
    "width_in_stdevs": (_positivo, 8.0),
}

SECAO_PREMIO = {
    "paths": (_texto, None),
    "characteristic": (_rotulo, "RTM"),
    "n": (_inteiro_positivo, None),
}

SECOES: Esquema = {
    "modelo": SECAO_MODELO,
    "simulacao": SECAO_SIMULACAO,
    "estudo": SECAO_ESTUDO,
    "eficiencia": SECAO_EFICIENCIA,
    "arvore": SECAO_ARVORE,
    "figuras": SECAO_FIGURAS,
    "replicacao": SECAO_REPLICACAO,
    "premio": SECAO_PREMIO,
}

COMANDOS: Dict[str, Tuple[str, ...]] = {
    "ap-check": ("arvore",),
    "bias": ("modelo", "simulacao", "estudo"),
    "efficiency": ("modelo", "simulacao", "eficiencia"),
    "figures": ("figuras",),
    "replicate": ("replicacao",),
    "premium": ("premio", "replicacao"),
    "simulate": ("modelo", "simulacao"),
}


# ---------------------------------------------------------------------------
# RunConfig
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    """Valores validados de um comando, já convertidos e com padrões preenchidos"""

    command: str
    secoes: Dict[str, Dict[str, Any]]
    arquivo: Optional[str] = None
    informados: Dict[str, Tuple[str, ...]] = field(default_factory=dict)

    def __getitem__(self, secao: str) -> Dict[str, Any]:
        return self.secoes[secao]

    def get(self, secao: str, chave: str, padrao: Any = None) -> Any:
        valor = self.secoes.get(secao, {}).get(chave)
        return padrao if valor is None else valor

    def resolve_path(self, caminho: Optional[str]) -> Optional[Path]:
        """Caminhos relativos são resolvidos a partir da pasta do arquivo de configuração"""
        if caminho is None:
            return None
        p = Path(caminho)
        if not p.is_absolute() and self.arquivo:
            p = Path(self.arquivo).parent / p
        return p

    def as_dict(self) -> Dict[str, Dict[str, Any]]:
        """Valores em formato serializável (manifesto de execuções)"""
        return {
            secao: {chave: list(valor) if isinstance(valor, tuple) else valor for chave, valor in valores.items()}
            for secao, valores in self.secoes.items()
        }


def _linhas_chaves(texto: str) -> Dict[Tuple[str, str], int]:
    """Número da linha de cada (seção, chave) no arquivo"""
    linhas: Dict[Tuple[str, str], int] = {}
    secao = ""
    for numero, linha in enumerate(texto.splitlines(), start=1):
        limpa = linha.strip()
        if not limpa or limpa[0] in "#;":
            continue
        cabecalho = re.match(r"^\[([^\]]+)\]$", limpa)
        if cabecalho:
            secao = cabecalho.group(1).strip()
            linhas.setdefault((secao, ""), numero)
            continue
        chave = re.match(r"^([^=:]+?)\s*[=:]", limpa)
        if chave and linha[:1] not in " \t":
            linhas.setdefault((secao, chave.group(1).strip()), numero)
    return linhas


def parse_config(texto: str, command: str, arquivo: Optional[str] = None) -> RunConfig:
    """
    Valida o texto de configuração para um comando.

    Raises:
        ErroConfiguracao: seção ou chave desconhecida, valor inválido ou
            texto malformado (com arquivo, linha e chave)
    """
    if command not in COMANDOS:
        raise ErroConfiguracao(f"Comando desconhecido: {command}", arquivo)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(texto, source=arquivo or "<config>")
    except configparser.MissingSectionHeaderError as erro:
        raise ErroConfiguracao("Chave fora de seção", arquivo, linha=erro.lineno) from erro
    except configparser.DuplicateSectionError as erro:
        raise ErroConfiguracao(f"Seção repetida [{erro.section}]", arquivo, linha=erro.lineno) from erro
    except configparser.DuplicateOptionError as erro:
        raise ErroConfiguracao(f"Chave repetida em [{erro.section}]", arquivo, linha=erro.lineno,
                               chave=erro.option) from erro
    except configparser.ParsingError as erro:
        linha = erro.errors[0][0] if erro.errors else None
        raise ErroConfiguracao("Linha malformada", arquivo, linha=linha) from erro

    linhas = _linhas_chaves(texto)
    permitidas = COMANDOS[command]
    secoes: Dict[str, Dict[str, Any]] = {}
    informados: Dict[str, Tuple[str, ...]] = {}
    for secao in parser.sections():
        if secao not in permitidas:
            raise ErroConfiguracao(
                f"Seção [{secao}] não se aplica ao comando {command} (permitidas: {', '.join(permitidas)})",
                arquivo, linha=linhas.get((secao, "")),
            )
    for secao in permitidas:
        esquema = SECOES[secao]
        brutos = dict(parser[secao]) if parser.has_section(secao) else {}
        valores: Dict[str, Any] = {}
        for chave, texto_valor in brutos.items():
            linha = linhas.get((secao, chave))
            if chave not in esquema:
                raise ErroConfiguracao(f"Chave desconhecida em [{secao}]", arquivo, linha=linha, chave=chave)
            conversor, _ = esquema[chave]
            try:
                valores[chave] = conversor(texto_valor)
            except (ValueError, ErroValidacao) as erro:
                raise ErroConfiguracao(f"Valor inválido {texto_valor!r}: {erro}", arquivo,
                                       linha=linha, chave=chave) from erro
        for chave, (_, padrao) in esquema.items():
            valores.setdefault(chave, padrao)
        secoes[secao] = valores
        informados[secao] = tuple(brutos)
    logger.debug("Configuração de %s validada (%s)", command, arquivo or "padrões")
    return RunConfig(command, secoes, arquivo, informados)


def load_config(caminho: Optional[str], command: str) -> RunConfig:
    """Lê e valida o arquivo; sem arquivo, todos os valores padrão"""
    if caminho is None:
        return parse_config("", command)
    try:
        texto = Path(caminho).read_text(encoding="utf-8")
    except OSError as erro:
        raise ErroConfiguracao(f"Não foi possível ler a configuração: {erro}", str(caminho)) from erro
    return parse_config(texto, command, str(caminho))


# ---------------------------------------------------------------------------
# construção dos objetos de domínio
# ---------------------------------------------------------------------------

def model_from_config(cfg: RunConfig) -> ModelSpec:
    valores = dict(cfg["modelo"])
    kind = valores.pop("kind")
    return ModelSpec(kind, **valores)


def seed_from_config(cfg: RunConfig) -> SeedSpec:
    return SeedSpec(cfg.get("simulacao", "master_seed"), cfg.get("simulacao", "stream_id"))


def _ler_esquema(item: str) -> Tuple[str, Optional[int], Optional[Tuple[float, ...]]]:
    """'regular:12', 'random:50' ou 'explicit:0 0.5 1'"""
    nome, _, argumento = item.partition(":")
    nome = nome.strip()
    if nome in ("regular", "random"):
        return nome, _inteiro_positivo(argumento), None
    if nome == "explicit":
        return nome, None, _lista_reais(argumento)
    raise ValueError(f"esquema de partição desconhecido: {item!r}")


def partition_from_text(item: str, T: float, seed: Optional[int] = None) -> Partition:
    esquema, n, tempos = _ler_esquema(item)
    return make_partition(T, esquema, n=n, times=tempos, seed=seed)


def partition_from_config(cfg: RunConfig) -> Partition:
    sim = cfg["simulacao"]
    T = cfg.get("modelo", "T", 1.0)
    if sim["scheme"] == "explicit" and sim["times"] is None:
        raise ErroConfiguracao("scheme = explicit exige a chave times", cfg.arquivo, chave="times")
    return make_partition(T, sim["scheme"], n=sim["n"], times=sim["times"], seed=sim["partition_seed"])


def polynomial_from_config(texto: str) -> Polynomial:
    """Rótulo de momento (RV, RTM, RFM) ou polinômio em texto ('Y^2', '-2 * Y^3 + 3 * Y * P2')"""
    ordens = {"RV": 1, "RTM": 2, "RFM": 3}
    chave = texto.strip().upper()
    if chave in ordens:
        return moment_polynomial(ordens[chave])
    return Polynomial.parse(texto)


# ---------------------------------------------------------------------------
# ambiente
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Ambiente:
    saida: str = SAIDA_PADRAO
    threads: int = 1
    log_level: str = "WARNING"


def load_environment(arquivo_env: Optional[str] = None) -> Ambiente:
    """
    Lê MOMENTOS_SAIDA, MOMENTOS_THREADS e MOMENTOS_LOG_LEVEL (após carregar o .env).

    Variáveis já definidas no ambiente têm prioridade sobre o .env.
    """
    load_dotenv(arquivo_env)
    saida = os.getenv("MOMENTOS_SAIDA", SAIDA_PADRAO)
    texto_threads = os.getenv("MOMENTOS_THREADS", "1")
    try:
        threads = _inteiro_positivo(texto_threads)
    except ValueError as erro:
        raise ErroConfiguracao(f"MOMENTOS_THREADS inválido: {texto_threads!r}", chave="MOMENTOS_THREADS") from erro
    nivel = os.getenv("MOMENTOS_LOG_LEVEL", "WARNING").strip().upper()
    if nivel not in NIVEIS_LOG:
        raise ErroConfiguracao(f"MOMENTOS_LOG_LEVEL inválido: {nivel!r}", chave="MOMENTOS_LOG_LEVEL")
    return Ambiente(saida, threads, nivel)


def example_config(command: str) -> str:
    """Texto INI com todos os valores padrão do comando"""
    if command not in COMANDOS:
        raise ErroConfiguracao(f"Comando desconhecido: {command}")
    blocos: List[str] = []
    for secao in COMANDOS[command]:
        linhas = [f"[{secao}]"]
        for chave, (_, padrao) in SECOES[secao].items():
            if padrao is None:
                linhas.append(f"# {chave} =")
            elif isinstance(padrao, tuple):
                linhas.append(f"{chave} = {', '.join(str(v) for v in padrao)}")
            elif isinstance(padrao, bool):
                linhas.append(f"{chave} = {'sim' if padrao else 'não'}")
            else:
                linhas.append(f"{chave} = {padrao}")
        blocos.append("\n".join(linhas))
    return "\n\n".join(blocos) + "\n"
