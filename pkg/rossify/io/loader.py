#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Leitura de modelos, diretivas e saídas de recuperação; escrita de JSON e CSV.
"""

import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from rossify.core.fields import MatrixField, ScalarField, VectorField
from rossify.core.model import DiffusionModel, Domain, Interval
from rossify.core.recovery import RecoveredMeasure, recover
from rossify.io.models import (
    FieldSpec,
    ModelFile,
    PhiRecord,
    RecoveredRecord,
    RecoveryDirective,
)
from rossify.utils.config import Settings, get_settings
from rossify.utils.exceptions import OutputDirectoryError, UsageError, VerificationError
from rossify.utils.logger import get_logger

logger = get_logger(__name__)

# Tolerância da reconstrução da dinâmica recuperada
ROUND_TRIP_TOL = 1e-12

SQRT2 = math.sqrt(2.0)

PRESETS: Dict[str, Dict[str, Any]] = {
    "gbm-log": {
        "name": "gbm-log",
        "dim": 1,
        "drift": {"kind": "constant", "value": [0.03]},
        "sigma": {"kind": "constant", "value": [[0.2]]},
        "rate": {"kind": "constant", "value": 0.05},
    },
    "gbm": {
        "name": "gbm",
        "dim": 1,
        "drift": {"kind": "expr", "expr": ["0.03*x1"]},
        "sigma": {"kind": "expr", "expr": [["0.2*x1"]]},
        "rate": {"kind": "constant", "value": 0.05},
        "domain": [{"left": 0.0, "right": None, "left_label": "0", "right_label": "inf"}],
    },
    "heat1d": {
        "name": "heat1d",
        "dim": 1,
        "drift": {"kind": "constant", "value": [0.0]},
        "sigma": {"kind": "constant", "value": [[SQRT2]]},
        "rate": {"kind": "constant", "value": 1.0},
    },
    "bm2": {
        "name": "bm2",
        "dim": 2,
        "drift": {"kind": "constant", "value": [0.0, 0.0]},
        "sigma": {"kind": "constant", "value": [[SQRT2, 0.0], [0.0, SQRT2]]},
        "rate": {"kind": "constant", "value": 1.0},
    },
    "tanh-rate": {
        "name": "tanh-rate",
        "dim": 1,
        "drift": {"kind": "constant", "value": [0.0]},
        "sigma": {"kind": "constant", "value": [[0.3]]},
        "rate": {"kind": "expr", "expr": "0.05 + 0.01*tanh(x1)"},
    },
    "cubic-drift": {
        "name": "cubic-drift",
        "dim": 1,
        "drift": {"kind": "expr", "expr": ["x1^3"]},
        "sigma": {"kind": "constant", "value": [[1.0]]},
        "rate": {"kind": "constant", "value": 0.0},
    },
    "ou-diag": {
        "name": "ou-diag",
        "dim": 2,
        "drift": {"kind": "linear", "matrix": [[1.0, 0.0], [0.0, 2.0]]},
        "sigma": {"kind": "constant", "value": [[1.0, 0.0], [0.0, 1.0]]},
        "rate": {"kind": "constant", "value": 0.0},
    },
}


def _validate(schema: type, data: Any, source: str) -> Any:
    try:
        return schema.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first.get("loc", ())) or "?"
        raise UsageError(f"{source}: campo '{where}' inválido: {first['msg']}", field=where) from e


def _read_json(path: Union[str, Path]) -> Any:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError as e:
        raise UsageError(f"Arquivo não encontrado: {path}") from e
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"Erro ao ler {path}: {e}") from e


def _drift_field(spec: FieldSpec, dim: int) -> VectorField:
    if spec.kind == "constant":
        return VectorField.constant_field(np.array(np.broadcast_to(np.asarray(spec.value, dtype=float), (dim,))))
    if spec.kind == "linear":
        return VectorField.linear_field(spec.matrix)
    texts = [spec.expr] if isinstance(spec.expr, str) else spec.expr
    return VectorField.from_expressions(texts, dim)


def _sigma_field(spec: FieldSpec, dim: int) -> MatrixField:
    if spec.kind == "constant":
        value = np.asarray(spec.value, dtype=float)
        if value.ndim == 0:
            value = float(value) * np.eye(dim)
        return MatrixField.constant_field(value.reshape(dim, dim))
    if spec.kind == "linear":
        raise UsageError("sigma não aceita o tipo 'linear'", field="sigma")
    if isinstance(spec.expr, str):
        texts = [[spec.expr]]
    else:
        texts = [[t] if isinstance(t, str) else t for t in spec.expr]
    return MatrixField.from_expressions(texts, dim)


def _rate_field(spec: FieldSpec, dim: int, fd_step: float) -> ScalarField:
    if spec.kind == "constant":
        value = np.asarray(spec.value, dtype=float)
        if value.size != 1:
            raise UsageError("Taxa constante deve ser um escalar", field="rate")
        return ScalarField.constant_field(float(value.reshape(-1)[0]), dim)
    if spec.kind == "linear" or not isinstance(spec.expr, str):
        raise UsageError("Taxa deve ser constante ou uma expressão", field="rate")
    return ScalarField.from_expression(spec.expr, dim, fd_step=fd_step)


def build_model(
    spec: ModelFile, allow_degenerate: bool = False, settings: Optional[Settings] = None
) -> DiffusionModel:
    """Constrói o DiffusionModel de um arquivo de modelo validado."""
    settings = settings if settings is not None else get_settings()
    dim = spec.dim
    if spec.domain is None:
        domain = Domain.real_space(dim)
    else:
        domain = Domain(
            tuple(Interval(iv.left, iv.right, iv.left_label, iv.right_label) for iv in spec.domain)
        )
    model = DiffusionModel(
        drift=_drift_field(spec.drift, dim),
        sigma=_sigma_field(spec.sigma, dim),
        rate=_rate_field(spec.rate, dim, settings.fd_step),
        domain=domain,
        name=spec.name,
        spec=spec.model_dump(),
        allow_degenerate=allow_degenerate,
    )
    logger.debug(f"Modelo {spec.name} carregado (N={dim})")
    return model


def load_model_file(source: str) -> ModelFile:
    """Preset pelo nome ou arquivo JSON."""
    if source in PRESETS:
        return ModelFile.model_validate(PRESETS[source])
    if not Path(source).exists():
        raise UsageError(
            f"Modelo '{source}' não é um arquivo nem um preset ({', '.join(sorted(PRESETS))})",
            field="model",
        )
    return _validate(ModelFile, _read_json(source), source)


def load_model(
    source: str, allow_degenerate: bool = False, settings: Optional[Settings] = None
) -> DiffusionModel:
    """
    Carrega um modelo de um preset ou de um arquivo JSON.

    Raises:
        UsageError: Se o arquivo não existir ou for inválido.
        ModelError: Se o modelo violar as hipóteses (difusão degenerada, r < 0).
    """
    return build_model(load_model_file(source), allow_degenerate, settings)


def load_directive(source: Union[str, Path, Dict[str, Any]]) -> RecoveryDirective:
    data = source if isinstance(source, dict) else _read_json(source)
    return _validate(RecoveryDirective, data, str(source) if not isinstance(source, dict) else "diretiva")


def _record_grid(model: DiffusionModel) -> np.ndarray:
    return model.domain.sample_grid({1: 21, 2: 7}.get(model.dim, 5))


def _samples(points: np.ndarray, values: np.ndarray, key: str) -> List[Dict[str, Any]]:
    return [{"x": p.tolist(), key: v.tolist()} for p, v in zip(points, values)]


def recovered_record(recovered: RecoveredMeasure) -> RecoveredRecord:
    """Serializa uma medida recuperada com o modelo base e a diretiva."""
    model = recovered.base
    if model.spec is None:
        raise UsageError(f"Modelo {model.name} sem especificação serializável")
    points = _record_grid(model)
    drift = recovered.dynamics.drift.values(points)
    rho = recovered.rho.values(points)
    phi = PhiRecord(
        description=recovered.description,
        samples=_samples(points, recovered.phi.values(points), "phi"),
    )
    if recovered.closed_form is not None:
        origin = np.zeros((1, model.dim))
        phi = PhiRecord(
            description=recovered.description,
            closed_form="exp",
            theta=recovered.closed_form.tolist(),
            scale=float(recovered.phi.raw(origin)[0]),
        )
    return RecoveredRecord(
        model=ModelFile.model_validate(model.spec),
        directive=recovered.directive,
        beta=recovered.beta,
        xi=recovered.xi.tolist(),
        phi=phi,
        mu=recovered.mu.to_list(),
        drift_samples=_samples(points, drift, "drift"),
        rho_samples=_samples(points, rho, "rho"),
        certificate=recovered.certificate,
    )


def rebuild_recovered(record: RecoveredRecord, settings: Optional[Settings] = None) -> RecoveredMeasure:
    """
    Reconstrói a dinâmica recuperada de uma saída de ``recover``.

    O certificado gravado é reaproveitado; as amostras de deriva (e de phi,
    quando não há forma fechada) precisam coincidir com as recalculadas.

    Raises:
        VerificationError: Se alguma amostra diferir mais que 1e-12.
    """
    model = build_model(record.model, settings=settings)
    recovered = recover(model, record.directive, settings, certificate=record.certificate)
    points = np.array([s["x"] for s in record.drift_samples], dtype=float).reshape(-1, model.dim)
    stored = np.array([s["drift"] for s in record.drift_samples], dtype=float).reshape(points.shape)
    fresh = recovered.dynamics.drift.values(points)
    gap = float(np.max(np.abs(fresh - stored))) if points.size else 0.0
    if gap > ROUND_TRIP_TOL:
        raise VerificationError(f"Deriva reconstruída difere da gravada ({gap:.3e})")
    if record.phi.samples:
        phi_points = np.array([s["x"] for s in record.phi.samples], dtype=float).reshape(-1, model.dim)
        stored_phi = np.array([s["phi"] for s in record.phi.samples], dtype=float)
        fresh_phi = recovered.phi.values(phi_points)
        phi_gap = float(np.max(np.abs(fresh_phi - stored_phi) / np.maximum(1.0, np.abs(stored_phi))))
        if phi_gap > ROUND_TRIP_TOL:
            raise VerificationError(f"phi reconstruída difere da gravada ({phi_gap:.3e})")
    logger.debug(f"Dinâmica recuperada reconstruída (diferença {gap:.1e})")
    return recovered


def load_recovered(path: Union[str, Path], settings: Optional[Settings] = None) -> RecoveredMeasure:
    record = _validate(RecoveredRecord, _read_json(path), str(path))
    return rebuild_recovered(record, settings)


def ensure_dir(path: Union[str, Path]) -> Path:
    """Garante que o diretório de saída existe."""
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputDirectoryError(f"Não foi possível criar {path}: {e}") from e
    return path


def write_json(path: Union[str, Path], payload: Union[BaseModel, Dict[str, Any], List[Any]]) -> Path:
    """JSON com chaves ordenadas e indentação 2."""
    path = Path(path)
    ensure_dir(path.parent)
    data = payload.model_dump(mode="json") if isinstance(payload, BaseModel) else payload
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f, sort_keys=True, indent=2)
            f.write("\n")
    except OSError as e:
        raise OutputDirectoryError(f"Erro ao escrever {path}: {e}") from e
    return path


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """CSV com floats em repr (ida e volta exata)."""
    path = Path(path)
    ensure_dir(path.parent)

    def cell(value: Any) -> str:
        if isinstance(value, (float, np.floating)):
            return repr(float(value))
        if value is None:
            return ""
        return str(value)

    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(list(header))
            for row in rows:
                writer.writerow([cell(v) for v in row])
    except OSError as e:
        raise OutputDirectoryError(f"Erro ao escrever {path}: {e}") from e
    return path
