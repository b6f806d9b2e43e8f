"""
Sistema de Persistência dos Experimentos
Gerencia leitura e escrita de caminhos, cadeias de opções, relatórios e o
manifesto de execuções
"""

import json
import logging
import os
import re
from datetime import datetime
from typing import Any, Dict, List, Union

import numpy as np
import pandas as pd

from analise_estudos import StudyReport
from erros import ErroLeitura
from nucleo import COMPONENTES, Partition, PathBundle, StatePath
from replicacao import OptionChain

logger = logging.getLogger(__name__)

FORMATO_REAL = "%.17g"
_CABECALHO_CADEIA = re.compile(r"^#\s*forward\s*=\s*(\S+)\s+maturity\s*=\s*(\S+)\s*$")
_LINHA_PANDAS = re.compile(r"line (\d+)")


def _numerico(df: pd.DataFrame, colunas: List[str], arquivo: str, primeira_linha: int) -> pd.DataFrame:
    """Converte as colunas para float; a primeira célula inválida vira ErroLeitura com o número da linha"""
    convertido = df.copy()
    for coluna in colunas:
        valores = pd.to_numeric(df[coluna], errors="coerce")
        invalidos = ~np.isfinite(valores.to_numpy(dtype=float, na_value=np.nan))
        if invalidos.any():
            posicao = int(np.flatnonzero(invalidos)[0])
            raise ErroLeitura(f"Valor inválido {df[coluna].iloc[posicao]!r}", arquivo,
                              linha=primeira_linha + posicao, chave=coluna)
        convertido[coluna] = valores.astype(float)
    return convertido


def _ler_csv(arquivo: str, **opcoes) -> pd.DataFrame:
    try:
        return pd.read_csv(arquivo, dtype=str, keep_default_na=False, **opcoes)
    except FileNotFoundError as erro:
        raise ErroLeitura("Arquivo não encontrado", arquivo) from erro
    except pd.errors.EmptyDataError as erro:
        raise ErroLeitura("Arquivo vazio", arquivo) from erro
    except pd.errors.ParserError as erro:
        achado = _LINHA_PANDAS.search(str(erro))
        linha = int(achado.group(1)) if achado else None
        raise ErroLeitura("Linha com número de colunas inválido", arquivo, linha=linha) from erro


class SistemaPersistencia:
    def __init__(self, base_dir: str = "resultados"):
        self.base_dir = base_dir
        self.manifesto_file = os.path.join(base_dir, "execucoes.json")

        # Criar diretório de saída se não existir
        os.makedirs(self.base_dir, exist_ok=True)

        if not os.path.exists(self.manifesto_file):
            self._inicializar_manifesto()

    def _inicializar_manifesto(self):
        """Inicializa o manifesto de execuções"""
        manifesto = {
            "versao": "1.0",
            "criado_em": datetime.now().isoformat(),
            "ultima_atualizacao": datetime.now().isoformat(),
            "execucoes": [],
        }
        with open(self.manifesto_file, 'w', encoding='utf-8') as f:
            json.dump(manifesto, f, indent=2, ensure_ascii=False)

    def caminho(self, nome: str) -> str:
        return os.path.join(self.base_dir, nome)

    # ------------------------------------------------------------------
    # caminhos de estados
    # ------------------------------------------------------------------

    def salvar_caminhos(self, caminhos: Union[PathBundle, StatePath], nome: str) -> str:
        """
        Exporta caminhos em formato longo.

        Args:
            caminhos: PathBundle (colunas path,time,...) ou StatePath (time,...)
            nome: nome do arquivo dentro de base_dir

        Returns:
            str: caminho do arquivo escrito
        """
        arquivo = self.caminho(nome)
        tempos = np.asarray(caminhos.partition.times)
        if isinstance(caminhos, StatePath):
            tabela = {"time": tempos}
            tabela.update({c: np.asarray(caminhos.values[c]) for c in caminhos.components})
        else:
            n, m = caminhos.n_paths, len(tempos)
            tabela = {"path": np.repeat(np.arange(n), m), "time": np.tile(tempos, n)}
            tabela.update({c: np.asarray(caminhos.values[c]).reshape(-1) for c in caminhos.components})
        pd.DataFrame(tabela).to_csv(arquivo, index=False, float_format=FORMATO_REAL)
        logger.info("Caminhos salvos em %s", arquivo)
        return arquivo

    def carregar_caminhos(self, arquivo: str) -> Union[PathBundle, StatePath]:
        """
        Lê um CSV de caminhos (com coluna `path` vira PathBundle).

        Todos os caminhos precisam ter os mesmos tempos; colunas fora do
        conjunto de componentes conhecidos são rejeitadas.
        """
        df = _ler_csv(arquivo)
        if "time" not in df.columns:
            raise ErroLeitura("Coluna 'time' ausente", arquivo, linha=1, chave="time")
        componentes = [c for c in df.columns if c not in ("path", "time")]
        desconhecidas = [c for c in componentes if c not in COMPONENTES]
        if desconhecidas:
            raise ErroLeitura(f"Colunas desconhecidas: {desconhecidas}", arquivo, linha=1, chave=desconhecidas[0])
        if not componentes:
            raise ErroLeitura("Nenhuma coluna de componente", arquivo, linha=1)
        df = _numerico(df, ["time"] + componentes, arquivo, primeira_linha=2)

        if "path" not in df.columns:
            particao = Partition(tuple(df["time"]), label=os.path.basename(arquivo))
            return StatePath(particao, {c: df[c].to_numpy() for c in componentes})

        df = _numerico(df, ["path"], arquivo, primeira_linha=2)
        grupos = list(df.groupby("path", sort=True))
        tempos = grupos[0][1]["time"].to_numpy()
        for rotulo, grupo in grupos[1:]:
            atuais = grupo["time"].to_numpy()
            if atuais.shape != tempos.shape or not np.array_equal(atuais, tempos):
                linha = int(grupo.index[0]) + 2
                raise ErroLeitura(f"Caminho {rotulo:g} com tempos diferentes do primeiro", arquivo,
                                  linha=linha, chave="time")
        particao = Partition(tuple(tempos), label=os.path.basename(arquivo))
        valores = {c: np.vstack([g[c].to_numpy() for _, g in grupos]) for c in componentes}
        logger.info("%d caminhos lidos de %s", len(grupos), arquivo)
        return PathBundle(particao, valores)

    # ------------------------------------------------------------------
    # cadeias de opções
    # ------------------------------------------------------------------

    def salvar_cadeia(self, chain: OptionChain, nome: str) -> str:
        """Primeira linha `# forward=<f> maturity=<T>`, depois strike,price"""
        arquivo = self.caminho(nome)
        with open(arquivo, 'w', encoding='utf-8', newline='') as f:
            f.write(f"# forward={float(chain.forward)!r} maturity={float(chain.maturity)!r}\n")
            pd.DataFrame({"strike": chain.strikes, "price": chain.prices}).to_csv(
                f, index=False, float_format=FORMATO_REAL)
        return arquivo

    def carregar_cadeia(self, arquivo: str) -> OptionChain:
        """
        Lê uma cadeia de opções OTM.

        Raises:
            ErroLeitura: cabeçalho ausente ou linha malformada (com o número da linha)
        """
        try:
            with open(arquivo, 'r', encoding='utf-8') as f:
                primeira = f.readline().strip()
        except OSError as erro:
            raise ErroLeitura(f"Não foi possível ler a cadeia: {erro}", arquivo) from erro
        achado = _CABECALHO_CADEIA.match(primeira)
        if not achado:
            raise ErroLeitura("Cabeçalho '# forward=<f> maturity=<T>' ausente", arquivo, linha=1)
        try:
            forward, maturidade = float(achado.group(1)), float(achado.group(2))
        except ValueError as erro:
            raise ErroLeitura("Cabeçalho com valor não numérico", arquivo, linha=1) from erro

        df = _ler_csv(arquivo, skiprows=1)
        faltando = [c for c in ("strike", "price") if c not in df.columns]
        if faltando:
            raise ErroLeitura(f"Colunas ausentes: {faltando}", arquivo, linha=2, chave=faltando[0])
        df = _numerico(df, ["strike", "price"], arquivo, primeira_linha=3)
        return OptionChain(forward, maturidade, df["strike"].to_numpy(), df["price"].to_numpy())

    # ------------------------------------------------------------------
    # relatórios e tabelas
    # ------------------------------------------------------------------

    def salvar_tabela(self, tabela: pd.DataFrame, nome: str) -> str:
        arquivo = self.caminho(nome)
        tabela.to_csv(arquivo, index=False, float_format=FORMATO_REAL)
        return arquivo

    def salvar_relatorio(self, relatorio: StudyReport, nome: str) -> List[str]:
        """Grava <nome>.csv (configuration,mean,stderr,target,z) e <nome>.txt (resumo alinhado)"""
        csv = self.salvar_tabela(relatorio.to_frame(), f"{nome}.csv")
        texto = self.caminho(f"{nome}.txt")
        with open(texto, 'w', encoding='utf-8') as f:
            f.write(relatorio.summary_text())
        return [csv, texto]

    def carregar_relatorio(self, arquivo: str) -> pd.DataFrame:
        df = _ler_csv(arquivo)
        colunas = ["configuration", "mean", "stderr", "target", "z"]
        if list(df.columns) != colunas:
            raise ErroLeitura(f"Colunas esperadas: {','.join(colunas)}", arquivo, linha=1)
        for coluna in colunas[1:]:
            df[coluna] = pd.to_numeric(df[coluna], errors="coerce")
        return df

    # ------------------------------------------------------------------
    # manifesto de execuções
    # ------------------------------------------------------------------

    def registrar_execucao(self, comando: str, config: Dict[str, Any], arquivos: List[str],
                           status: int) -> bool:
        """
        Acrescenta uma execução ao manifesto

        Args:
            comando: subcomando executado
            config: valores de configuração usados
            arquivos: arquivos escritos
            status: código de saída

        Returns:
            bool: True se registrou com sucesso
        """
        try:
            dados = self.carregar_execucoes()
            dados["execucoes"].append({
                "id": len(dados["execucoes"]) + 1,
                "timestamp": datetime.now().isoformat(),
                "comando": comando,
                "config": config,
                "arquivos": [os.path.relpath(a, self.base_dir) for a in arquivos],
                "status": int(status),
            })
            dados["ultima_atualizacao"] = datetime.now().isoformat()
            with open(self.manifesto_file, 'w', encoding='utf-8') as f:
                json.dump(dados, f, indent=2, ensure_ascii=False, default=str)
            return True
        except (OSError, TypeError, ValueError) as e:
            logger.error("Erro ao registrar execução: %s", e)
            return False

    def carregar_execucoes(self) -> Dict[str, Any]:
        """Carrega o manifesto de execuções"""
        try:
            with open(self.manifesto_file, 'r', encoding='utf-8') as f:
                return json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            logger.warning("Manifesto ilegível (%s); recomeçando", e)
            return {"versao": "1.0", "execucoes": []}
