"""
Linha de comando dos experimentos com momentos agregadores
Subcomandos: ap-check, bias, efficiency, figures, replicate, premium, simulate

Códigos de saída: 0 sucesso, 1 erro de validação, 2 critério de aceitação
não atendido, 3 erro numérico
"""

import logging
import re
from typing import Callable, List, Tuple

import click
import numpy as np
import pandas as pd

from analise_estudos import (bias_study, characteristic_order, contracts_needed, efficiency_study, figure_data,
                             risk_premium)
from arvore_binomial import build_lattice, check_lattice_invariants, lattice_ap_scan, lattice_dump, \
    lattice_efficiency_gap
from caracteristicas import MomentSpec, characteristic_by_label
from configuracao import (RunConfig, load_config, load_environment, model_from_config, partition_from_config,
                          partition_from_text, polynomial_from_config, seed_from_config)
from erros import ErroCapacidade, ErroConfiguracao, ErroNumerico, ErroValidacao
from modelos import CAPACIDADES, CONTRATOS, simulate_paths
from nucleo import SeedSpec
from replicacao import OptionChain, QuadratureSpec, implied_moments_from_chain, replicate_contracts, synth_chain
from sistema_persistencia import SistemaPersistencia

logger = logging.getLogger(__name__)

SAIDA_VALIDACAO = 1
SAIDA_ACEITACAO = 2
SAIDA_NUMERICA = 3

FAIXA_RAZAO_GAP = (0.4, 0.6)

Resultado = Tuple[bool, List[str]]


def _configurar_log(verbose: int, nivel_ambiente: str) -> None:
    if verbose >= 2:
        nivel = logging.DEBUG
    elif verbose == 1:
        nivel = logging.INFO
    else:
        nivel = getattr(logging, nivel_ambiente, logging.WARNING)
    logging.basicConfig(level=nivel, format="%(asctime)s %(levelname)s %(name)s: %(message)s", force=True)


def _nome_arquivo(texto: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", texto).strip("_")


def _executar(ctx: click.Context, comando: str, tarefa: Callable[[RunConfig, SistemaPersistencia, int], Resultado]):
    """Carrega a configuração, roda a tarefa e traduz o resultado em código de saída"""
    opcoes = ctx.obj
    try:
        cfg = load_config(opcoes["config"], comando)
        persistencia = SistemaPersistencia(opcoes["saida"])
        aprovado, arquivos = tarefa(cfg, persistencia, opcoes["threads"])
    except ErroNumerico as erro:
        click.echo(f"❌ Erro numérico: {erro}", err=True)
        ctx.exit(SAIDA_NUMERICA)
    except (ErroValidacao, ErroCapacidade) as erro:
        click.echo(f"❌ {erro}", err=True)
        ctx.exit(SAIDA_VALIDACAO)

    status = 0 if aprovado else SAIDA_ACEITACAO
    persistencia.registrar_execucao(comando, cfg.as_dict(), arquivos, status)
    for arquivo in arquivos:
        click.echo(f"📁 {arquivo}")
    if not aprovado:
        click.echo(f"⚠️ {comando}: critério de aceitação não atendido", err=True)
        ctx.exit(SAIDA_ACEITACAO)
    click.echo(f"✅ {comando} concluído")


@click.group()
@click.option("--config", "config", type=click.Path(dir_okay=False), default=None,
              help="Arquivo INI do experimento (padrões se omitido)")
@click.option("--out", "saida", type=click.Path(file_okay=False), default=None,
              help="Pasta de saída (padrão: MOMENTOS_SAIDA)")
@click.option("--threads", type=click.IntRange(min=1), default=None,
              help="Threads para os blocos de caminhos (padrão: MOMENTOS_THREADS)")
@click.option("-v", "--verbose", count=True, help="Mais log (-v INFO, -vv DEBUG)")
@click.pass_context
def cli(ctx, config, saida, threads, verbose):
    """Características realizadas agregadoras: replicação, simulação e estudos."""
    try:
        ambiente = load_environment()
    except ErroConfiguracao as erro:
        click.echo(f"❌ {erro}", err=True)
        ctx.exit(SAIDA_VALIDACAO)
    _configurar_log(verbose, ambiente.log_level)
    ctx.obj = {
        "config": config,
        "saida": saida or ambiente.saida,
        "threads": threads or ambiente.threads,
    }


# ---------------------------------------------------------------------------
# ap-check
# ---------------------------------------------------------------------------

def tarefa_ap_check(cfg: RunConfig, persistencia: SistemaPersistencia, threads: int) -> Resultado:
    arv = cfg["arvore"]
    tree = build_lattice(arv["F0"], arv["sigma"], arv["T"], arv["steps"])
    martingal, contratos = check_lattice_invariants(tree)
    click.echo(f"Árvore: {tree.steps} passos, resíduo martingal {martingal:.2e}, contratos {contratos:.2e}")

    linhas = []
    aprovado = True
    rotulos = list(arv["characteristics"]) + [arv["control"]]
    for i, rotulo in enumerate(rotulos):
        c = characteristic_by_label(rotulo)
        absoluto, relativo = lattice_ap_scan(tree, c)
        controle = i == len(rotulos) - 1
        if controle and tree.steps < 2:
            logger.warning("Árvore com %d passo(s): não há s interior, controle não avaliado", tree.steps)
            ok = True
        elif controle:
            ok = relativo > arv["tolerance"]
        else:
            ok = relativo <= arv["tolerance"]
        aprovado &= ok
        papel = "controle" if controle else ("agregadora" if c.aggregating else "não agregadora")
        linhas.append({"characteristic": c.label, "role": papel, "max_abs": absoluto, "max_rel": relativo,
                       "passed": ok})
        marca = "✅" if ok else "❌"
        click.echo(f"{marca} {c.label:<4} {papel:<15} resíduo máx {absoluto:.3e} (rel {relativo:.3e})")

    arquivos = [persistencia.salvar_tabela(pd.DataFrame(linhas), "ap_check.csv")]
    if arv["dump"]:
        arquivos.append(persistencia.salvar_tabela(lattice_dump(tree), "arvore.csv"))
    return aprovado, arquivos


@cli.command("ap-check")
@click.pass_context
def ap_check(ctx):
    """Confere a propriedade de agregação na árvore binomial."""
    _executar(ctx, "ap-check", tarefa_ap_check)


# ---------------------------------------------------------------------------
# bias
# ---------------------------------------------------------------------------

def tarefa_bias(cfg: RunConfig, persistencia: SistemaPersistencia, threads: int) -> Resultado:
    modelo = model_from_config(cfg)
    sim, est = cfg["simulacao"], cfg["estudo"]
    seed = seed_from_config(cfg)
    c = characteristic_by_label(est["characteristic"])
    particoes = [partition_from_text(item, modelo.T, sim["partition_seed"]) for item in est["partitions"]]
    click.echo(f"Viés de {c.label} em {modelo.describe()}: {sim['n_paths']} caminhos por partição")

    relatorio = bias_study(modelo, c, particoes, sim["n_paths"], seed, threshold=est["threshold"],
                           state_mode=sim["state_mode"], target=est["target"], threads=threads,
                           m_inner=sim["m_inner"], block_size=sim["block_size"])
    click.echo(relatorio.summary_text())
    arquivos = persistencia.salvar_relatorio(relatorio, f"bias_{c.label}")

    if est["export_paths"]:
        suportados = CAPACIDADES[(modelo.kind, sim["state_mode"])]
        componentes = tuple(x for x in CONTRATOS if x in suportados) if sim["state_mode"] == "closed_form" \
            else contracts_needed(c)
        for k, particao in enumerate(particoes):
            # mesmo fluxo usado pelo estudo para esta partição
            fluxo = SeedSpec(seed.master_seed, seed.stream_id + k)
            caminhos = simulate_paths(modelo, particao, sim["n_paths"], fluxo, sim["state_mode"], componentes,
                                      sim["m_inner"], threads, sim["block_size"])
            nome = _nome_arquivo(f"caminhos_{c.label}_{k}_{particao.describe()}") + ".csv"
            arquivos.append(persistencia.salvar_caminhos(caminhos, nome))
    return relatorio.passed, arquivos


@cli.command()
@click.pass_context
def bias(ctx):
    """Média realizada por partição contra a característica implícita."""
    _executar(ctx, "bias", tarefa_bias)


# ---------------------------------------------------------------------------
# efficiency
# ---------------------------------------------------------------------------

def tarefa_efficiency(cfg: RunConfig, persistencia: SistemaPersistencia, threads: int) -> Resultado:
    modelo = model_from_config(cfg)
    sim, efi = cfg["simulacao"], cfg["eficiencia"]
    a = polynomial_from_config(efi["a"])
    particao = partition_from_config(cfg)
    click.echo(f"Eficiência de b para a = {a.to_text()} ({particao.describe()})")

    relatorio = efficiency_study(modelo, a, efi["variants"], particao, sim["n_paths"], seed_from_config(cfg),
                                 threshold=efi["threshold"], common_random_numbers=efi["common_random_numbers"],
                                 threads=threads, block_size=sim["block_size"])
    click.echo(relatorio.summary_text())
    arquivos = persistencia.salvar_relatorio(relatorio, "efficiency")
    aprovado = relatorio.passed

    if "lattice_optimal" in efi["variants"]:
        passos = list(efi["gap_steps"])
        gaps = np.array(lattice_efficiency_gap(a, modelo.sigma, modelo.T, passos))
        razoes = np.full(gaps.shape, np.nan)
        razoes[1:] = gaps[1:] / np.where(gaps[:-1] > 0, gaps[:-1], np.nan)
        exato = bool(np.all(gaps <= 1e-14))
        dentro = bool(np.all((razoes[1:] >= FAIXA_RAZAO_GAP[0]) & (razoes[1:] <= FAIXA_RAZAO_GAP[1])))
        convergiu = exato or dentro
        aprovado &= convergiu
        for n, gap, razao in zip(passos, gaps, razoes):
            click.echo(f"  passos={n:<4d} gap={gap:.4e} razão={razao:.3f}")
        click.echo(f"{'✅' if convergiu else '❌'} b ótimo discreto converge para b*")
        tabela = pd.DataFrame({"steps": passos, "gap": gaps, "ratio": razoes})
        arquivos.append(persistencia.salvar_tabela(tabela, "efficiency_gap.csv"))
    return aprovado, arquivos


@cli.command()
@click.pass_context
def efficiency(ctx):
    """Variância da característica realizada para cada regra de b."""
    _executar(ctx, "efficiency", tarefa_efficiency)


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------

def tarefa_figures(cfg: RunConfig, persistencia: SistemaPersistencia, threads: int) -> Resultado:
    fig = cfg["figuras"]
    desconhecidas = [w for w in fig["which"] if w not in ("fig1", "fig2", "fig3")]
    if desconhecidas:
        raise ErroConfiguracao(f"Figuras desconhecidas: {desconhecidas}", cfg.arquivo, chave="which")
    if not fig["x_max"] > fig["x_min"]:
        raise ErroConfiguracao("x_max deve ser maior que x_min", cfg.arquivo, chave="x_max")
    grade = np.linspace(fig["x_min"], fig["x_max"], fig["n_points"])
    arquivos = []
    for which in fig["which"]:
        tabela = figure_data(which, fig["sigma"], fig["dt"], grade, fig["residual_maturity"])
        arquivos.append(persistencia.salvar_tabela(tabela, f"{which}.csv"))
    return True, arquivos


@cli.command()
@click.pass_context
def figures(ctx):
    """Curvas das características em função de Y_s - Y_r (CSV)."""
    _executar(ctx, "figures", tarefa_figures)


# ---------------------------------------------------------------------------
# replicate / premium
# ---------------------------------------------------------------------------

def _carregar_cadeia(cfg: RunConfig,
                     persistencia: SistemaPersistencia) -> Tuple[OptionChain, QuadratureSpec, List[str]]:
    """Cadeia do arquivo `chain` ou, sem arquivo, cadeia sintética de Black (gravada na saída)"""
    rep = cfg["replicacao"]
    quad = QuadratureSpec(grid=rep["grid"], n_points=rep["n_points"], width_in_stdevs=rep["width_in_stdevs"])
    if rep["chain"] is not None:
        return persistencia.carregar_cadeia(str(cfg.resolve_path(rep["chain"]))), quad, []
    sinteticos = [rep[f"synthetic_{x}"] for x in ("forward", "sigma", "maturity")]
    if any(v is None for v in sinteticos):
        raise ErroConfiguracao("Informe chain ou synthetic_forward/synthetic_sigma/synthetic_maturity",
                               cfg.arquivo, chave="chain")
    chain = synth_chain(*sinteticos, n_points=rep["n_points"], width_in_stdevs=rep["width_in_stdevs"])
    return chain, quad, [persistencia.salvar_cadeia(chain, "cadeia_sintetica.csv")]


def tarefa_replicate(cfg: RunConfig, persistencia: SistemaPersistencia, threads: int) -> Resultado:
    chain, quad, arquivos = _carregar_cadeia(cfg, persistencia)
    u0 = replicate_contracts(chain, quad)
    momentos = implied_moments_from_chain(chain, quad)
    valores = {nome: u0[nome] for nome in ("F", "y", "Y", "P2", "P3", "P4", "Z")}
    valores.update(momentos)
    for nome, valor in valores.items():
        click.echo(f"  {nome:<3} = {valor:.10g}")
    tabela = pd.DataFrame({"name": list(valores), "value": list(valores.values())})
    return True, arquivos + [persistencia.salvar_tabela(tabela, "replicacao.csv")]


@cli.command()
@click.pass_context
def replicate(ctx):
    """Contratos log, potência e entropia replicados a partir de uma cadeia de opções."""
    _executar(ctx, "replicate", tarefa_replicate)


def tarefa_premium(cfg: RunConfig, persistencia: SistemaPersistencia, threads: int) -> Resultado:
    pre = cfg["premio"]
    if pre["paths"] is None:
        raise ErroConfiguracao("Informe o arquivo de caminhos", cfg.arquivo, chave="paths")
    c = characteristic_by_label(pre["characteristic"])
    ordem = pre["n"] or characteristic_order(c)
    if ordem is None:
        raise ErroConfiguracao(f"{c.label} não define ordem de momento; informe n", cfg.arquivo, chave="n")
    caminhos = persistencia.carregar_caminhos(str(cfg.resolve_path(pre["paths"])))
    chain, quad, arquivos = _carregar_cadeia(cfg, persistencia)
    resultado = risk_premium(caminhos, c, chain, MomentSpec(ordem), quad)
    click.echo(f"  realizado  {resultado['realised_mean']:.6e} ± {resultado['realised_stderr']:.2e}")
    click.echo(f"  implícito  {resultado['implied']:.6e}")
    click.echo(f"  prêmio     {resultado['premium']:.6e}")
    tabela = pd.DataFrame([{"characteristic": c.label, **resultado}])
    return True, arquivos + [persistencia.salvar_tabela(tabela, f"premio_{c.label}.csv")]


@cli.command()
@click.pass_context
def premium(ctx):
    """Prêmio de risco: média realizada menos característica implícita."""
    _executar(ctx, "premium", tarefa_premium)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def tarefa_simulate(cfg: RunConfig, persistencia: SistemaPersistencia, threads: int) -> Resultado:
    modelo = model_from_config(cfg)
    sim = cfg["simulacao"]
    particao = partition_from_config(cfg)
    caminhos = simulate_paths(modelo, particao, sim["n_paths"], seed_from_config(cfg), sim["state_mode"],
                              m_inner=sim["m_inner"], threads=threads, block_size=sim["block_size"])
    click.echo(f"Simulados {caminhos.n_paths} caminhos de {modelo.describe()} em {particao.describe()}")
    return True, [persistencia.salvar_caminhos(caminhos, "caminhos.csv")]


@cli.command()
@click.pass_context
def simulate(ctx):
    """Simula caminhos de estados de contratos e exporta em CSV."""
    _executar(ctx, "simulate", tarefa_simulate)


if __name__ == '__main__':
    cli()
