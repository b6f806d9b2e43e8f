"""
Testes da configuração: esquemas INI, erros com linha e chave, construção
dos objetos de domínio e variáveis de ambiente
"""

from pathlib import Path

import pytest

from caracteristicas import moment_polynomial
from configuracao import (COMANDOS, RunConfig, example_config, load_config, load_environment, model_from_config,
                          parse_config, partition_from_config, partition_from_text, polynomial_from_config,
                          seed_from_config)
from erros import ErroConfiguracao, ErroLeitura, ErroValidacao
from polinomios import Polynomial

PASTA_CONFIGURACOES = Path(__file__).parent / "configuracoes"


class TesteParseConfig:
    def teste_sem_texto_usa_padroes(self):
        cfg = parse_config("", "simulate")
        assert cfg["modelo"]["kind"] == "gbm"
        assert cfg["modelo"]["sigma"] == 0.2
        assert cfg["simulacao"]["n_paths"] == 10_000
        assert cfg.informados == {"modelo": (), "simulacao": ()}

    def teste_valores_convertidos(self):
        texto = (
            "[modelo]\n"
            "kind = merton\n"
            "jump_intensity = 1\n"
            "jump_mean = -0.1   # média do salto\n"
            "\n"
            "[simulacao]\n"
            "scheme = explicit\n"
            "times = 0, 0.25, 0.5, 1\n"
        )
        cfg = parse_config(texto, "simulate")
        assert cfg["modelo"]["jump_mean"] == -0.1
        assert cfg["simulacao"]["times"] == (0.0, 0.25, 0.5, 1.0)
        assert cfg.informados["modelo"] == ("kind", "jump_intensity", "jump_mean")

    def teste_chave_desconhecida_com_linha(self):
        texto = "[modelo]\nkind = gbm\nvolatilidade = 0.2\n"
        with pytest.raises(ErroConfiguracao) as erro:
            parse_config(texto, "simulate", "exp.ini")
        assert erro.value.linha == 3
        assert erro.value.chave == "volatilidade"
        assert erro.value.arquivo == "exp.ini"
        assert "exp.ini, linha 3" in str(erro.value)

    def teste_secao_de_outro_comando(self):
        texto = "# comentário\n[modelo]\nkind = gbm\n\n[arvore]\nsteps = 4\n"
        with pytest.raises(ErroConfiguracao, match="arvore") as erro:
            parse_config(texto, "simulate")
        assert erro.value.linha == 5

    @pytest.mark.parametrize("linha, chave", [
        ("sigma = -0.2", "sigma"),
        ("kind = vasicek", "kind"),
        ("T = zero", "T"),
    ])
    def teste_valor_invalido(self, linha, chave):
        with pytest.raises(ErroConfiguracao) as erro:
            parse_config(f"[modelo]\n{linha}\n", "simulate")
        assert erro.value.linha == 2
        assert erro.value.chave == chave

    def teste_chave_fora_de_secao(self):
        with pytest.raises(ErroConfiguracao) as erro:
            parse_config("kind = gbm\n", "simulate")
        assert erro.value.linha == 1

    def teste_chave_repetida(self):
        with pytest.raises(ErroConfiguracao) as erro:
            parse_config("[arvore]\nsteps = 4\nsteps = 8\n", "ap-check")
        assert erro.value.chave == "steps"
        assert erro.value.linha == 3

    def teste_comando_desconhecido(self):
        with pytest.raises(ErroConfiguracao):
            parse_config("", "calibrate")

    def teste_e_um_erro_de_leitura(self):
        with pytest.raises(ErroLeitura):
            parse_config("[estudo]\ncharacteristic = XYZ\n", "bias")
        with pytest.raises(ErroValidacao):
            parse_config("[estudo]\npartitions = semanal:4\n", "bias")

    def teste_rotulos_normalizados(self):
        cfg = parse_config("[arvore]\ncharacteristics = lv, rtm\ncontrol = clr\ndump = sim\n", "ap-check")
        assert cfg["arvore"]["characteristics"] == ("LV", "RTM")
        assert cfg["arvore"]["control"] == "CLR"
        assert cfg["arvore"]["dump"] is True

    def teste_booleano_invalido(self):
        with pytest.raises(ErroConfiguracao, match="sim/não"):
            parse_config("[estudo]\nexport_paths = talvez\n", "bias")

    def teste_lista_de_inteiros_vazia(self):
        with pytest.raises(ErroConfiguracao) as erro:
            parse_config("[eficiencia]\ngap_steps = ,\n", "efficiency")
        assert erro.value.chave == "gap_steps"


class TesteExemplos:
    @pytest.mark.parametrize("comando", sorted(COMANDOS))
    def teste_exemplo_reproduz_os_padroes(self, comando):
        assert parse_config(example_config(comando), comando).secoes == parse_config("", comando).secoes

    @pytest.mark.parametrize("arquivo", sorted(p.name for p in PASTA_CONFIGURACOES.glob("*.ini")))
    def teste_arquivos_do_repositorio_sao_validos(self, arquivo):
        comandos = {"ap_check": "ap-check", "bias": "bias", "efficiency": "efficiency", "figuras": "figures",
                    "replicacao": "replicate", "premio": "premium", "simulacao": "simulate"}
        prefixo = next(p for p in comandos if arquivo.startswith(p))
        cfg = load_config(str(PASTA_CONFIGURACOES / arquivo), comandos[prefixo])
        assert cfg.arquivo.endswith(arquivo)

    def teste_arquivo_inexistente(self, tmp_path):
        with pytest.raises(ErroConfiguracao):
            load_config(str(tmp_path / "nada.ini"), "simulate")

    def teste_sem_arquivo(self):
        assert load_config(None, "figures").arquivo is None


class TesteConstrucao:
    def teste_modelo(self):
        cfg = parse_config("[modelo]\nkind = heston\nv0 = 0.09\nxi = 0.3\n", "simulate")
        modelo = model_from_config(cfg)
        assert modelo.kind == "heston"
        assert modelo.v0 == 0.09
        assert modelo.xi == 0.3
        assert modelo.F0 == 100.0

    def teste_semente(self):
        cfg = parse_config("[simulacao]\nmaster_seed = 7\nstream_id = 3\n", "simulate")
        seed = seed_from_config(cfg)
        assert (seed.master_seed, seed.stream_id) == (7, 3)

    def teste_particao_regular(self):
        cfg = parse_config("[modelo]\nT = 2\n[simulacao]\nn = 8\n", "simulate")
        p = partition_from_config(cfg)
        assert p.T == 2.0
        assert p.describe() == "regular(8)"

    def teste_particao_explicita_sem_tempos(self):
        cfg = parse_config("[simulacao]\nscheme = explicit\n", "simulate")
        with pytest.raises(ErroConfiguracao) as erro:
            partition_from_config(cfg)
        assert erro.value.chave == "times"

    def teste_particoes_em_texto(self):
        assert partition_from_text("regular:12", 1.0).describe() == "regular(12)"
        assert partition_from_text("explicit:0 0.5 1", 1.0).times == (0.0, 0.5, 1.0)
        aleatoria = partition_from_text("random:5", 1.0, seed=3)
        assert aleatoria.times == partition_from_text("random:5", 1.0, seed=3).times
        assert len(aleatoria.times) == 6
        with pytest.raises(ValueError):
            partition_from_text("mensal:12", 1.0)

    def teste_polinomio(self):
        assert polynomial_from_config("rtm") == moment_polynomial(2)
        assert polynomial_from_config("Y^2") == Polynomial.parse("Y^2")

    def teste_caminho_relativo_ao_arquivo(self, tmp_path):
        cfg = RunConfig("premium", {}, str(tmp_path / "premio.ini"))
        assert cfg.resolve_path("caminhos.csv") == tmp_path / "caminhos.csv"
        assert cfg.resolve_path(None) is None
        assert RunConfig("premium", {}).resolve_path("caminhos.csv") == Path("caminhos.csv")

    def teste_dicionario_serializavel(self):
        cfg = parse_config("", "efficiency")
        assert cfg.as_dict()["eficiencia"]["gap_steps"] == [8, 16, 32, 64]


class TesteAmbiente:
    @pytest.fixture(autouse=True)
    def _ambiente_limpo(self, monkeypatch):
        for nome in ("MOMENTOS_SAIDA", "MOMENTOS_THREADS", "MOMENTOS_LOG_LEVEL"):
            # registra o valor original para o teardown
            monkeypatch.setenv(nome, "")
            monkeypatch.delenv(nome)

    def teste_padroes(self, tmp_path):
        ambiente = load_environment(str(tmp_path / "ausente.env"))
        assert ambiente.saida == "resultados"
        assert ambiente.threads == 1
        assert ambiente.log_level == "WARNING"

    def teste_arquivo_env(self, tmp_path):
        env = tmp_path / ".env"
        env.write_text("MOMENTOS_SAIDA=saida_teste\nMOMENTOS_THREADS=4\nMOMENTOS_LOG_LEVEL=debug\n",
                       encoding="utf-8")
        ambiente = load_environment(str(env))
        assert ambiente.saida == "saida_teste"
        assert ambiente.threads == 4
        assert ambiente.log_level == "DEBUG"

    def teste_ambiente_tem_prioridade(self, tmp_path, monkeypatch):
        env = tmp_path / ".env"
        env.write_text("MOMENTOS_THREADS=4\n", encoding="utf-8")
        monkeypatch.setenv("MOMENTOS_THREADS", "2")
        assert load_environment(str(env)).threads == 2

    @pytest.mark.parametrize("nome, valor", [
        ("MOMENTOS_THREADS", "0"),
        ("MOMENTOS_THREADS", "muitas"),
        ("MOMENTOS_LOG_LEVEL", "VERBOSE"),
    ])
    def teste_valores_invalidos(self, tmp_path, monkeypatch, nome, valor):
        monkeypatch.setenv(nome, valor)
        with pytest.raises(ErroConfiguracao) as erro:
            load_environment(str(tmp_path / "ausente.env"))
        assert erro.value.chave == nome
