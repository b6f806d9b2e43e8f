"""
Testes da linha de comando: códigos de saída, arquivos gravados,
determinismo entre números de threads e o fluxo bias -> premium
"""

import json

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from app_momentos import SAIDA_ACEITACAO, SAIDA_NUMERICA, SAIDA_VALIDACAO, cli


@pytest.fixture(autouse=True)
def _ambiente_limpo(monkeypatch):
    for nome in ("MOMENTOS_SAIDA", "MOMENTOS_THREADS", "MOMENTOS_LOG_LEVEL"):
        monkeypatch.setenv(nome, "")
        monkeypatch.delenv(nome)


def _rodar(pasta, comando, config=None, saida="saida", opcoes=()):
    argumentos = ["--out", str(pasta / saida), *opcoes]
    if config is not None:
        arquivo = pasta / f"{comando}.ini"
        arquivo.write_text(config, encoding="utf-8")
        argumentos += ["--config", str(arquivo)]
    return CliRunner().invoke(cli, [*argumentos, comando])


def _cadeia(pasta, strikes, precos, nome="cadeia.csv"):
    linhas = ["# forward=100 maturity=1", "strike,price"]
    linhas += [f"{float(k)!r},{float(p)!r}" for k, p in zip(strikes, precos)]
    (pasta / nome).write_text("\n".join(linhas) + "\n", encoding="utf-8")


class TesteApCheck:
    def teste_arvore_padrao(self, tmp_path):
        resultado = _rodar(tmp_path, "ap-check")
        assert resultado.exit_code == 0, resultado.output
        tabela = pd.read_csv(tmp_path / "saida" / "ap_check.csv")
        assert list(tabela["characteristic"]) == ["LV", "NTM", "RV", "RTM", "RFM", "SLR"]
        assert tabela["passed"].all()
        assert tabela["role"].iloc[-1] == "controle"

    def teste_um_passo_sem_controle(self, tmp_path):
        resultado = _rodar(tmp_path, "ap-check", "[arvore]\nsteps = 1\n")
        assert resultado.exit_code == 0, resultado.output
        assert pd.read_csv(tmp_path / "saida" / "ap_check.csv")["passed"].all()

    def teste_controle_reprovado(self, tmp_path):
        resultado = _rodar(tmp_path, "ap-check", "[arvore]\nsteps = 4\ntolerance = 10\n")
        assert resultado.exit_code == SAIDA_ACEITACAO
        tabela = pd.read_csv(tmp_path / "saida" / "ap_check.csv")
        assert not tabela["passed"].iloc[-1]

    def teste_probabilidade_indefinida(self, tmp_path):
        resultado = _rodar(tmp_path, "ap-check", "[arvore]\nsigma = 1e-300\n")
        assert resultado.exit_code == SAIDA_NUMERICA
        assert "Erro numérico" in resultado.output

    def teste_dump_da_arvore(self, tmp_path):
        resultado = _rodar(tmp_path, "ap-check", "[arvore]\nsteps = 3\ndump = sim\n")
        assert resultado.exit_code == 0, resultado.output
        assert len(pd.read_csv(tmp_path / "saida" / "arvore.csv")) == 10

    def teste_manifesto(self, tmp_path):
        _rodar(tmp_path, "ap-check", "[arvore]\nsteps = 2\n")
        _rodar(tmp_path, "ap-check", "[arvore]\nsteps = 2\ntolerance = 10\n")
        manifesto = json.loads((tmp_path / "saida" / "execucoes.json").read_text(encoding="utf-8"))
        execucoes = manifesto["execucoes"]
        assert [e["status"] for e in execucoes] == [0, SAIDA_ACEITACAO]
        assert execucoes[0]["comando"] == "ap-check"
        assert execucoes[0]["arquivos"] == ["ap_check.csv"]
        assert execucoes[1]["config"]["arvore"]["tolerance"] == 10.0


class TesteErrosDeValidacao:
    def teste_chave_desconhecida(self, tmp_path):
        resultado = _rodar(tmp_path, "simulate", "[modelo]\nkind = gbm\nvol = 0.2\n")
        assert resultado.exit_code == SAIDA_VALIDACAO
        assert "linha 3" in resultado.output
        assert "vol" in resultado.output

    def teste_arquivo_ausente(self, tmp_path):
        resultado = CliRunner().invoke(cli, ["--out", str(tmp_path), "--config", str(tmp_path / "x.ini"), "bias"])
        assert resultado.exit_code == SAIDA_VALIDACAO

    def teste_threads_do_ambiente(self, tmp_path, monkeypatch):
        monkeypatch.setenv("MOMENTOS_THREADS", "0")
        assert _rodar(tmp_path, "figures").exit_code == SAIDA_VALIDACAO

    def teste_figura_desconhecida(self, tmp_path):
        assert _rodar(tmp_path, "figures", "[figuras]\nwhich = fig9\n").exit_code == SAIDA_VALIDACAO

    def teste_premio_sem_caminhos(self, tmp_path):
        resultado = _rodar(tmp_path, "premium", "[replicacao]\nsynthetic_forward = 100\n")
        assert resultado.exit_code == SAIDA_VALIDACAO
        assert "paths" in resultado.output

    def teste_capacidade_do_heston(self, tmp_path):
        config = "[modelo]\nkind = heston\n[simulacao]\nn_paths = 10\n[estudo]\ncharacteristic = RTM\ntarget = 0\n"
        assert _rodar(tmp_path, "bias", config).exit_code == SAIDA_VALIDACAO


class TesteFiguras:
    def teste_colunas(self, tmp_path):
        resultado = _rodar(tmp_path, "figures", "[figuras]\nwhich = fig1, fig2\nn_points = 11\n")
        assert resultado.exit_code == 0, resultado.output
        fig1 = pd.read_csv(tmp_path / "saida" / "fig1.csv")
        fig2 = pd.read_csv(tmp_path / "saida" / "fig2.csv")
        assert list(fig1.columns) == ["x", "log_return", "RV", "LV", "SLR"]
        assert list(fig2.columns) == ["x", "log_return", "RTM", "NTM", "CLR"]
        assert len(fig1) == 11
        assert not (tmp_path / "saida" / "fig3.csv").exists()


class TesteReplicacao:
    def teste_cadeia_sintetica(self, tmp_path):
        config = ("[replicacao]\nsynthetic_forward = 100\nsynthetic_sigma = 0.2\nsynthetic_maturity = 1\n"
                  "n_points = 2001\n")
        resultado = _rodar(tmp_path, "replicate", config)
        assert resultado.exit_code == 0, resultado.output
        valores = pd.read_csv(tmp_path / "saida" / "replicacao.csv").set_index("name")["value"]
        assert valores["Y"] == pytest.approx(np.log(100.0) - 0.02, rel=1e-6)
        assert valores["m2"] == pytest.approx(0.04, rel=1e-3)
        assert (tmp_path / "saida" / "cadeia_sintetica.csv").exists()

    def teste_precos_nulos(self, tmp_path):
        strikes = np.linspace(50.0, 150.0, 20)
        _cadeia(tmp_path, strikes, np.zeros(20))
        resultado = _rodar(tmp_path, "replicate", "[replicacao]\nchain = cadeia.csv\n")
        assert resultado.exit_code == 0, resultado.output
        valores = pd.read_csv(tmp_path / "saida" / "replicacao.csv").set_index("name")["value"]
        assert valores["Y"] == pytest.approx(np.log(100.0), rel=1e-15)
        assert valores["m2"] == pytest.approx(0.0, abs=1e-15)

    def teste_cadeia_curta(self, tmp_path):
        strikes = np.linspace(50.0, 150.0, 10)
        _cadeia(tmp_path, strikes, np.full(10, 0.5))
        resultado = _rodar(tmp_path, "replicate", "[replicacao]\nchain = cadeia.csv\n")
        assert resultado.exit_code == SAIDA_VALIDACAO
        assert "16" in resultado.output

    def teste_linha_malformada(self, tmp_path):
        (tmp_path / "cadeia.csv").write_text("# forward=100 maturity=1\nstrike,price\n90,1.5\n110,abc\n",
                                             encoding="utf-8")
        resultado = _rodar(tmp_path, "replicate", "[replicacao]\nchain = cadeia.csv\n")
        assert resultado.exit_code == SAIDA_VALIDACAO
        assert "linha 4" in resultado.output


class TesteSimulacao:
    CONFIG = ("[modelo]\nkind = merton\njump_intensity = 2\njump_mean = -0.05\njump_stdev = 0.1\n"
              "[simulacao]\nn = 6\nn_paths = 40\nblock_size = 8\nmaster_seed = 5\n")

    def teste_mesmos_bytes_com_mais_threads(self, tmp_path):
        um = _rodar(tmp_path, "simulate", self.CONFIG, saida="um", opcoes=("--threads", "1"))
        quatro = _rodar(tmp_path, "simulate", self.CONFIG, saida="quatro", opcoes=("--threads", "4"))
        assert um.exit_code == 0, um.output
        assert quatro.exit_code == 0, quatro.output
        assert (tmp_path / "um" / "caminhos.csv").read_bytes() == (tmp_path / "quatro" / "caminhos.csv").read_bytes()

    def teste_formato_longo(self, tmp_path):
        _rodar(tmp_path, "simulate", self.CONFIG)
        tabela = pd.read_csv(tmp_path / "saida" / "caminhos.csv")
        assert len(tabela) == 40 * 7
        assert list(tabela.columns[:4]) == ["path", "time", "F", "y"]


class TesteViesEPremio:
    BIAS = ("[modelo]\nkind = gbm\n[simulacao]\nn_paths = 300\nblock_size = 64\nmaster_seed = 9\n"
            "[estudo]\ncharacteristic = RTM\npartitions = regular:4\nthreshold = 50\nexport_paths = sim\n")
    PREMIO = ("[premio]\npaths = saida/caminhos_RTM_0_regular_4.csv\n"
              "[replicacao]\nsynthetic_forward = 100\nsynthetic_sigma = 0.2\nsynthetic_maturity = 1\n")

    def teste_premio_reusa_os_caminhos_do_estudo(self, tmp_path):
        vies = _rodar(tmp_path, "bias", self.BIAS)
        assert vies.exit_code == 0, vies.output
        relatorio = pd.read_csv(tmp_path / "saida" / "bias_RTM.csv")
        assert list(relatorio["configuration"]) == ["regular(4)"]
        assert (tmp_path / "saida" / "bias_RTM.txt").exists()

        premio = _rodar(tmp_path, "premium", self.PREMIO)
        assert premio.exit_code == 0, premio.output
        linha = pd.read_csv(tmp_path / "saida" / "premio_RTM.csv").iloc[0]
        assert linha["n_paths"] == 300
        assert linha["realised_mean"] == pytest.approx(relatorio["mean"].iloc[0], rel=1e-12, abs=1e-15)
        assert linha["premium"] == pytest.approx(linha["realised_mean"] - linha["implied"], abs=1e-15)

    def teste_vies_reprovado(self, tmp_path):
        config = self.BIAS.replace("threshold = 50", "threshold = 3").replace("export_paths = sim", "target = 1")
        assert _rodar(tmp_path, "bias", config).exit_code == SAIDA_ACEITACAO
