"""
Testes do sistema de persistência: caminhos, cadeias de opções,
relatórios e manifesto de execuções
"""

import json
import os

import numpy as np
import pytest

from analise_estudos import StudyReport
from erros import ErroLeitura
from modelos import ModelSpec, simulate_paths
from nucleo import PathBundle, SeedSpec, StatePath, make_partition
from replicacao import synth_chain
from sistema_persistencia import SistemaPersistencia


@pytest.fixture
def persistencia(tmp_path):
    return SistemaPersistencia(str(tmp_path / "resultados"))


@pytest.fixture(scope="module")
def caminhos():
    modelo = ModelSpec.merton(0.2, 1.0, -0.1, 0.05)
    return simulate_paths(modelo, make_partition(1.0, "regular", n=4), 5, SeedSpec(3))


def _escrever(persistencia, nome, texto):
    arquivo = persistencia.caminho(nome)
    with open(arquivo, "w", encoding="utf-8") as f:
        f.write(texto)
    return arquivo


class TesteCaminhos:
    def teste_ida_e_volta_do_lote(self, persistencia, caminhos):
        arquivo = persistencia.salvar_caminhos(caminhos, "caminhos.csv")
        lidos = persistencia.carregar_caminhos(arquivo)
        assert isinstance(lidos, PathBundle)
        assert lidos.n_paths == 5
        assert lidos.partition.times == caminhos.partition.times
        assert lidos.components == caminhos.components
        for nome in caminhos.components:
            assert np.array_equal(lidos.values[nome], caminhos.values[nome]), nome

    def teste_ida_e_volta_de_um_caminho(self, persistencia, caminhos):
        um = caminhos.path(2)
        lido = persistencia.carregar_caminhos(persistencia.salvar_caminhos(um, "um.csv"))
        assert isinstance(lido, StatePath)
        assert lido.partition.describe() == "um.csv"
        assert np.array_equal(lido.values["Y"], um.values["Y"])

    def teste_coluna_desconhecida(self, persistencia):
        arquivo = _escrever(persistencia, "x.csv", "time,F,y,Q\n0,1,0,1\n1,1,0,1\n")
        with pytest.raises(ErroLeitura) as erro:
            persistencia.carregar_caminhos(arquivo)
        assert erro.value.chave == "Q"
        assert erro.value.linha == 1

    def teste_valor_invalido_com_linha(self, persistencia):
        arquivo = _escrever(persistencia, "x.csv", "time,F,y\n0,100,4.6\n1,abc,4.6\n")
        with pytest.raises(ErroLeitura) as erro:
            persistencia.carregar_caminhos(arquivo)
        assert erro.value.linha == 3
        assert erro.value.chave == "F"

    def teste_tempos_diferentes_entre_caminhos(self, persistencia):
        arquivo = _escrever(persistencia, "x.csv", "path,time,F,y\n0,0,1,0\n0,1,1,0\n1,0,1,0\n1,0.5,1,0\n")
        with pytest.raises(ErroLeitura) as erro:
            persistencia.carregar_caminhos(arquivo)
        assert erro.value.linha == 4
        assert erro.value.chave == "time"

    def teste_sem_coluna_time(self, persistencia):
        arquivo = _escrever(persistencia, "x.csv", "F,y\n1,0\n")
        with pytest.raises(ErroLeitura, match="time"):
            persistencia.carregar_caminhos(arquivo)

    def teste_arquivo_inexistente(self, persistencia):
        with pytest.raises(ErroLeitura, match="não encontrado"):
            persistencia.carregar_caminhos(persistencia.caminho("nada.csv"))


class TesteCadeias:
    def teste_ida_e_volta(self, persistencia):
        chain = synth_chain(100.0, 0.2, 1.0, 101)
        arquivo = persistencia.salvar_cadeia(chain, "cadeia.csv")
        with open(arquivo, encoding="utf-8") as f:
            assert f.readline().strip() == "# forward=100.0 maturity=1.0"
        lida = persistencia.carregar_cadeia(arquivo)
        assert lida.forward == 100.0
        assert lida.maturity == 1.0
        assert np.array_equal(lida.strikes, chain.strikes)
        assert np.array_equal(lida.prices, chain.prices)

    def teste_sem_cabecalho(self, persistencia):
        arquivo = _escrever(persistencia, "c.csv", "strike,price\n90,1\n110,1\n")
        with pytest.raises(ErroLeitura) as erro:
            persistencia.carregar_cadeia(arquivo)
        assert erro.value.linha == 1

    def teste_preco_invalido(self, persistencia):
        arquivo = _escrever(persistencia, "c.csv", "# forward=100 maturity=1\nstrike,price\n90,1.0\n110,x\n")
        with pytest.raises(ErroLeitura) as erro:
            persistencia.carregar_cadeia(arquivo)
        assert erro.value.linha == 4
        assert erro.value.chave == "price"

    def teste_coluna_ausente(self, persistencia):
        arquivo = _escrever(persistencia, "c.csv", "# forward=100 maturity=1\nstrike,preco\n90,1.0\n")
        with pytest.raises(ErroLeitura) as erro:
            persistencia.carregar_cadeia(arquivo)
        assert erro.value.chave == "price"


class TesteRelatorios:
    def teste_csv_e_resumo(self, persistencia):
        relatorio = StudyReport("viés LV", 3.0)
        relatorio.add("regular(1)", 1000, 0.0401, 0.0002, 0.04)
        relatorio.add("regular(12)", 1000, 0.03993, 0.0002, 0.04)
        csv, txt = persistencia.salvar_relatorio(relatorio, "bias_LV")
        assert os.path.basename(csv) == "bias_LV.csv"
        tabela = persistencia.carregar_relatorio(csv)
        assert list(tabela["configuration"]) == ["regular(1)", "regular(12)"]
        assert tabela["mean"].iloc[1] == 0.03993
        assert tabela["z"].iloc[0] == pytest.approx(0.5)
        with open(txt, encoding="utf-8") as f:
            assert f.read() == relatorio.summary_text()

    def teste_colunas_erradas(self, persistencia):
        arquivo = _escrever(persistencia, "r.csv", "config,mean\nregular(1),0.04\n")
        with pytest.raises(ErroLeitura):
            persistencia.carregar_relatorio(arquivo)


class TesteManifesto:
    def teste_registros_acumulam(self, persistencia):
        arquivo = persistencia.caminho("ap_check.csv")
        assert persistencia.registrar_execucao("ap-check", {"arvore": {"steps": 8}}, [arquivo], 0)
        assert persistencia.registrar_execucao("bias", {}, [], 2)
        execucoes = persistencia.carregar_execucoes()["execucoes"]
        assert [e["id"] for e in execucoes] == [1, 2]
        assert execucoes[0]["arquivos"] == ["ap_check.csv"]
        assert execucoes[0]["config"] == {"arvore": {"steps": 8}}
        assert execucoes[1]["status"] == 2

    def teste_manifesto_existente_e_preservado(self, tmp_path):
        pasta = str(tmp_path / "resultados")
        SistemaPersistencia(pasta).registrar_execucao("figures", {}, [], 0)
        assert len(SistemaPersistencia(pasta).carregar_execucoes()["execucoes"]) == 1

    def teste_manifesto_ilegivel(self, persistencia):
        with open(persistencia.manifesto_file, "w", encoding="utf-8") as f:
            f.write("{quebrado")
        assert persistencia.carregar_execucoes()["execucoes"] == []
        assert persistencia.registrar_execucao("figures", {}, [], 0)
        with open(persistencia.manifesto_file, encoding="utf-8") as f:
            assert len(json.load(f)["execucoes"]) == 1
