#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Modelos de dados dos arquivos de entrada e saída.
"""

import json
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Tolerância das restrições de norma e soma das diretivas
DIRECTIVE_TOL = 1e-9

Number = float
Vector = List[float]
Matrix = List[List[float]]


class FieldSpec(BaseModel):
    """Especificação de um campo (deriva, sigma ou taxa)."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["constant", "linear", "expr"] = Field(..., description="Tipo do campo")
    value: Optional[Union[Number, Vector, Matrix]] = Field(None, description="Valor constante")
    matrix: Optional[Matrix] = Field(None, description="Matriz B da deriva linear B x")
    expr: Optional[Union[str, List[str], List[List[str]]]] = Field(
        None, description="Expressão(ões) em x1..xN"
    )

    @model_validator(mode="after")
    def _payload(self) -> "FieldSpec":
        required = {"constant": "value", "linear": "matrix", "expr": "expr"}[self.kind]
        if getattr(self, required) is None:
            raise ValueError(f"campo do tipo '{self.kind}' exige '{required}'")
        return self


class IntervalSpec(BaseModel):
    """Eixo do domínio; null marca fronteira infinita."""

    model_config = ConfigDict(extra="forbid")

    left: Optional[float] = Field(None, description="Fronteira esquerda")
    right: Optional[float] = Field(None, description="Fronteira direita")
    left_label: str = Field("a", description="Rótulo da fronteira esquerda")
    right_label: str = Field("b", description="Rótulo da fronteira direita")

    @model_validator(mode="after")
    def _ordered(self) -> "IntervalSpec":
        if self.left is not None and self.right is not None and not self.left < self.right:
            raise ValueError(f"intervalo vazio ({self.left}, {self.right})")
        return self


class ModelFile(BaseModel):
    """Arquivo de modelo (JSON)."""

    model_config = ConfigDict(extra="forbid")

    name: str = Field("modelo", description="Nome do modelo")
    dim: int = Field(..., ge=1, description="Dimensão N do estado")
    drift: FieldSpec = Field(..., description="Deriva k(x)")
    sigma: FieldSpec = Field(..., description="Volatilidade sigma(x)")
    rate: FieldSpec = Field(..., description="Taxa curta r(x)")
    domain: Optional[List[IntervalSpec]] = Field(None, description="Domínio (padrão R^N)")

    @model_validator(mode="after")
    def _domain_dim(self) -> "ModelFile":
        if self.domain is not None and len(self.domain) != self.dim:
            raise ValueError(f"domain tem {len(self.domain)} eixos, esperado {self.dim}")
        return self


class AdmissibilityCertificate(BaseModel):
    """Certificado de admissibilidade de um par (lambda, h)."""

    verdict: Literal["admissible", "not_admissible", "inconclusive"]
    method: Literal["explosion_test", "monte_carlo", "both"]
    mean: Optional[float] = None
    std_error: Optional[float] = None
    residual: Optional[float] = None
    notes: List[str] = Field(default_factory=list)
    reason: Optional[str] = None
    details: Dict[str, Any] = Field(default_factory=dict)

    @property
    def admissible(self) -> bool:
        return self.verdict == "admissible"

    def to_json(self) -> str:
        return json.dumps(self.model_dump(), sort_keys=True, indent=2)


class AtomSpec(BaseModel):
    """Átomo de uma medida na esfera."""

    gamma: Vector
    weight: float = Field(..., gt=0)


RecoveryMode = Literal[
    "transient_side", "mixture", "recurrent", "direction_nd", "ratio_nd", "measure_nd", "ou"
]


class RecoveryDirective(BaseModel):
    """
    Diretiva de recuperação: beta mais a escolha da medida na fronteira.

    ``side`` aceita -1/+1 ou "left"/"right"; ``weights`` é (p, q) com
    p no lado esquerdo.
    """

    model_config = ConfigDict(extra="forbid")

    beta: Optional[float] = Field(None, description="Fator principal beta")
    mode: RecoveryMode
    side: Optional[int] = None
    weights: Optional[Vector] = None
    gamma: Optional[Vector] = None
    ratio: Optional[Vector] = None
    measure: Optional[List[AtomSpec]] = None
    model_ref: Optional[str] = Field(None, description="Arquivo ou preset do modelo")

    @field_validator("side", mode="before")
    @classmethod
    def _side(cls, value: Any) -> Any:
        if isinstance(value, str):
            names = {"left": -1, "right": 1, "-1": -1, "+1": 1, "1": 1}
            if value.strip().lower() not in names:
                raise ValueError(f"lado inválido '{value}' (use left ou right)")
            return names[value.strip().lower()]
        return value

    @model_validator(mode="after")
    def _mode_fields(self) -> "RecoveryDirective":
        if self.mode != "recurrent" and self.beta is None:
            raise ValueError(f"modo '{self.mode}' exige beta")
        if self.mode == "transient_side":
            if self.side not in (-1, 1):
                raise ValueError("modo transient_side exige side = left ou right")
        elif self.mode == "mixture":
            w = self.weights
            if w is None or len(w) != 2:
                raise ValueError("modo mixture exige weights = p,q")
            if min(w) < 0 or max(w) <= 0 or abs(sum(w) - 1.0) > DIRECTIVE_TOL:
                raise ValueError(f"pesos devem ser não negativos com p+q=1 (recebido {w})")
        elif self.mode in ("direction_nd", "ou"):
            if self.gamma is None:
                raise ValueError(f"modo {self.mode} exige gamma")
            if abs(float(np.linalg.norm(self.gamma)) - 1.0) > 1e-8:
                raise ValueError("gamma deve ser unitário")
        elif self.mode == "ratio_nd":
            _check_ratio(self.ratio)
        elif self.mode == "measure_nd":
            if not self.measure:
                raise ValueError("modo measure_nd exige átomos em measure")
        return self


def _check_ratio(ratio: Optional[Vector]) -> None:
    if ratio is None or not ratio:
        raise ValueError("modo ratio_nd exige ratio = p1,...,pk[,0,...]")
    k = 0
    while k < len(ratio) and ratio[k] > 0:
        k += 1
    if k == 0 or any(p != 0 for p in ratio[k:]):
        raise ValueError(f"razão deve ter p1..pk > 0 seguidos de zeros (recebido {ratio})")
    if abs(float(np.linalg.norm(ratio)) - 1.0) > 1e-8:
        raise ValueError("razão deve ter norma unitária")


class PhiRecord(BaseModel):
    """
    Descrição da função principal.

    Sem forma fechada, ``samples`` guarda phi na malha de registro.
    """

    description: str
    closed_form: Optional[str] = None
    theta: Optional[Vector] = None
    scale: float = 1.0
    samples: Optional[List[Dict[str, Any]]] = None


class RecoveredRecord(BaseModel):
    """Saída de ``recover``: suficiente para reconstruir a dinâmica recuperada."""

    model: ModelFile
    directive: RecoveryDirective
    beta: float
    xi: Vector
    phi: PhiRecord
    mu: List[Dict[str, Any]]
    drift_samples: List[Dict[str, Vector]]
    rho_samples: List[Dict[str, Vector]]
    certificate: AdmissibilityCertificate
