"""
Hierarquia de Erros do Projeto
Todas as falhas do pacote derivam de ErroMomentos para que a CLI
possa mapear cada família para um código de saída
"""

from typing import Optional


class ErroMomentos(Exception):
    """Erro base do projeto"""


class ErroValidacao(ErroMomentos, ValueError):
    """Pré-condição violada (partição, parâmetros, maturidade...)"""


class ErroComponente(ErroValidacao):
    """Estado de contratos sem os componentes exigidos"""

    def __init__(self, faltando, contexto: str = ""):
        self.faltando = tuple(sorted(faltando))
        msg = f"Componentes ausentes: {', '.join(self.faltando)}"
        if contexto:
            msg = f"{msg} ({contexto})"
        super().__init__(msg)


class ErroDominio(ErroValidacao):
    """Argumento fora do domínio (strike, preço ou volatilidade não positivos)"""


class ErroGradeInsuficiente(ErroValidacao):
    """Grade de strikes pequena demais para a quadratura"""


class ErroFormaNaoSuportada(ErroValidacao):
    """Função a que não é um polinômio nos componentes"""


class ErroLeitura(ErroValidacao):
    """Arquivo CSV ou de configuração malformado"""

    def __init__(self, mensagem: str, arquivo: Optional[str] = None,
                 linha: Optional[int] = None, chave: Optional[str] = None):
        self.arquivo = arquivo
        self.linha = linha
        self.chave = chave
        partes = []
        if arquivo:
            partes.append(str(arquivo))
        if linha is not None:
            partes.append(f"linha {linha}")
        if chave:
            partes.append(f"chave '{chave}'")
        prefixo = ", ".join(partes)
        super().__init__(f"{prefixo}: {mensagem}" if prefixo else mensagem)


class ErroConfiguracao(ErroLeitura):
    """Chave desconhecida ou valor inválido na configuração"""


class ErroCapacidade(ErroMomentos):
    """Combinação (modelo, componente, modo) não suportada"""


class ErroNumerico(ErroMomentos, ArithmeticError):
    """Falha numérica (probabilidade fora de (0,1), matriz mal condicionada...)"""


class ErroSingularidade(ErroNumerico):
    """Matriz singular; no lattice carrega o nó onde ocorreu"""

    def __init__(self, mensagem: str, no: Optional[tuple] = None):
        self.no = no
        if no is not None:
            mensagem = f"{mensagem} (nó passo={no[0]}, índice={no[1]})"
        super().__init__(mensagem)
