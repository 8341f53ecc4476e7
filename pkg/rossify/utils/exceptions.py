#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Exceções personalizadas para o Rossify.
"""

from typing import Any, Optional


class RossifyError(Exception):
    """Exceção base para o Rossify."""

    pass


class ConfigError(RossifyError):
    """Erro de configuração."""

    pass


class UsageError(RossifyError):
    """Parâmetros ou arquivos de entrada inválidos."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class ExpressionError(UsageError):
    """Expressão aritmética mal formada."""

    def __init__(self, message: str, expression: str = "", position: int = -1):
        super().__init__(message, field="expr")
        self.expression = expression
        self.position = position


class ModelError(RossifyError):
    """Erro base para modelos de difusão inválidos."""

    pass


class DomainError(ModelError):
    """Ponto fora do domínio ou parâmetro fora da faixa permitida."""

    pass


class EvaluationError(ModelError):
    """Campo retornou valor não finito."""

    pass


class DegenerateDiffusionError(ModelError):
    """Matriz de difusão não é positiva definida."""

    def __init__(self, message: str, point: Any = None):
        super().__init__(message)
        self.point = point


class PositivityError(ModelError):
    """Função candidata não é positiva no domínio amostrado."""

    pass


class CriticalityError(RossifyError):
    """Operador não é subcrítico onde isso é exigido."""

    def __init__(self, message: str, klass: Optional[str] = None):
        super().__init__(message)
        self.klass = klass


class SearchError(RossifyError):
    """Falha na busca do valor crítico."""

    pass


class QuadratureError(RossifyError):
    """Quadratura não convergiu dentro do orçamento."""

    def __init__(self, message: str, partial: Optional[float] = None):
        super().__init__(message)
        self.partial = partial


class DivergentIntegralError(RossifyError):
    """Integral imprópria divergente."""

    pass


class NumericError(RossifyError):
    """Erro numérico (matriz singular, overflow)."""

    pass


class RecoveryInfeasibleError(RossifyError):
    """Diretiva de recuperação não pode ser satisfeita."""

    def __init__(self, message: str, certificate: Any = None):
        super().__init__(message)
        self.certificate = certificate


class VerificationError(RossifyError):
    """Falha em uma verificação de invariantes."""

    pass


class OutputDirectoryError(RossifyError):
    """Erro no diretório de saída."""

    pass
