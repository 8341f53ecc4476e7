#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Modelos de difusão sob a medida neutra ao risco e o gerador associado.

O gerador é  L h = 1/2 sum a_ij d_ij h + sum k_i d_i h - r h  com
a = sigma sigma^T. O h-transform de um par (lambda, h) produz a deriva
k + a grad(h)/h e o preço de mercado do risco rho = sigma^T grad(h)/h.
"""

import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from rossify.core.fields import MatrixField, ScalarField, State, VectorField, as_points
from rossify.utils.exceptions import (
    DegenerateDiffusionError,
    DomainError,
    EvaluationError,
    ModelError,
    PositivityError,
    UsageError,
)
from rossify.utils.logger import get_logger

logger = get_logger(__name__)

# Largura da malha amostrada em eixos infinitos
SAMPLE_SPAN = 5.0


@dataclass(frozen=True)
class Interval:
    """Eixo do domínio; ``None`` ou infinito marca fronteira infinita."""

    left: float = -math.inf
    right: float = math.inf
    left_label: str = "a"
    right_label: str = "b"

    def __post_init__(self) -> None:
        left = -math.inf if self.left is None else float(self.left)
        right = math.inf if self.right is None else float(self.right)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        if not left < right:
            raise UsageError(f"Intervalo vazio: ({left}, {right})", field="domain")

    @property
    def left_finite(self) -> bool:
        return math.isfinite(self.left)

    @property
    def right_finite(self) -> bool:
        return math.isfinite(self.right)

    @property
    def reference(self) -> float:
        """Ponto de referência xi: ponto médio, 0 na reta, a+1 em semirretas."""
        if self.left_finite and self.right_finite:
            return 0.5 * (self.left + self.right)
        if self.left_finite:
            return self.left + 1.0
        if self.right_finite:
            return self.right - 1.0
        return 0.0

    def window(self, cutoff: float, center: Optional[float] = None) -> Tuple[float, float]:
        """Janela truncada: fronteiras infinitas são cortadas em center +- cutoff."""
        c = self.reference if center is None else center
        lo = self.left if self.left_finite else c - cutoff
        hi = self.right if self.right_finite else c + cutoff
        return lo, hi

    def contains(self, values: np.ndarray) -> np.ndarray:
        return (values > self.left) & (values < self.right)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "left": self.left if self.left_finite else None,
            "right": self.right if self.right_finite else None,
            "left_label": self.left_label,
            "right_label": self.right_label,
        }


@dataclass(frozen=True)
class Domain:
    """Caixa alinhada aos eixos (produto de intervalos)."""

    intervals: Tuple[Interval, ...]

    @classmethod
    def real_space(cls, dim: int) -> "Domain":
        return cls(tuple(Interval() for _ in range(dim)))

    @property
    def dim(self) -> int:
        return len(self.intervals)

    @property
    def reference(self) -> np.ndarray:
        return np.array([iv.reference for iv in self.intervals])

    def contains(self, points: np.ndarray) -> np.ndarray:
        inside = np.ones(points.shape[0], dtype=bool)
        for i, iv in enumerate(self.intervals):
            inside &= iv.contains(points[:, i])
        return inside

    def require_interior(self, points: np.ndarray) -> None:
        inside = self.contains(points)
        if not np.all(inside):
            bad = points[~inside][0]
            raise DomainError(f"Ponto {bad.tolist()} fora do domínio")

    def sample_axes(self, n: int, span: float = SAMPLE_SPAN) -> List[np.ndarray]:
        axes = []
        for iv in self.intervals:
            lo, hi = iv.window(span)
            axes.append(np.linspace(lo, hi, n + 2)[1:-1])
        return axes

    def sample_grid(self, n: Optional[int] = None, span: float = SAMPLE_SPAN) -> np.ndarray:
        """Malha tensorial de pontos interiores usada nas validações."""
        if n is None:
            n = {1: 41, 2: 11, 3: 5}.get(self.dim, 3)
        axes = self.sample_axes(n, span)
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)


@dataclass(frozen=True, eq=False)
class DiffusionModel:
    """
    Dinâmica neutra ao risco dX = k(X)dt + sigma(X)dW com taxa r(X).

    A matriz a = sigma sigma^T é validada na construção (positiva definida
    em toda a malha amostrada) e r >= 0. ``allow_degenerate`` desliga a
    exigência de a > 0 para dinâmicas usadas apenas em simulação.
    """

    drift: VectorField
    sigma: MatrixField
    rate: ScalarField
    domain: Domain
    name: str = "modelo"
    spec: Optional[Dict[str, Any]] = None
    allow_degenerate: bool = False

    def __post_init__(self) -> None:
        dims = {self.drift.dim, self.sigma.dim, self.rate.dim, self.domain.dim}
        if len(dims) != 1:
            raise ModelError(
                f"Dimensões inconsistentes: deriva {self.drift.dim}, sigma {self.sigma.dim}, "
                f"taxa {self.rate.dim}, domínio {self.domain.dim}"
            )
        self.validate()

    @property
    def dim(self) -> int:
        return self.drift.dim

    @property
    def reference(self) -> np.ndarray:
        return self.domain.reference

    @property
    def is_constant_coefficient(self) -> bool:
        return (
            self.drift.constant is not None
            and self.sigma.constant is not None
            and self.rate.constant is not None
        )

    def constant_coefficients(self) -> Tuple[np.ndarray, np.ndarray, float]:
        """(a, k, r) constantes; erro de uso se algum coeficiente variar."""
        if not self.is_constant_coefficient:
            raise UsageError(f"Modelo {self.name} não tem coeficientes constantes")
        sigma = self.sigma.constant
        return sigma @ sigma.T, self.drift.constant.copy(), float(self.rate.constant)

    def diffusion(self, points: np.ndarray) -> np.ndarray:
        return self.sigma.covariance(points)

    def validate(self, points: Optional[np.ndarray] = None) -> None:
        grid = self.domain.sample_grid() if points is None else points
        a = self.diffusion(grid)
        if not np.allclose(a, np.swapaxes(a, 1, 2), rtol=1e-12, atol=1e-14):
            raise DegenerateDiffusionError("Matriz de difusão não simétrica")
        eig = np.linalg.eigvalsh(a)
        floor = 1e-14 * np.maximum(1.0, np.abs(eig[:, -1]))
        if self.allow_degenerate:
            bad = eig[:, 0] < -floor
        else:
            bad = eig[:, 0] <= floor
        if np.any(bad):
            point = grid[np.argmax(bad)]
            raise DegenerateDiffusionError(
                f"a(x) não é positiva definida em x={point.tolist()} (modelo {self.name})",
                point=point,
            )
        r = self.rate.values(grid)
        if np.any(r < 0):
            point = grid[np.argmax(r < 0)]
            raise ModelError(f"Taxa negativa r={r[np.argmax(r < 0)]:g} em x={point.tolist()}")

    def with_drift(self, drift: VectorField, name: str) -> "DiffusionModel":
        return DiffusionModel(
            drift=drift,
            sigma=self.sigma,
            rate=self.rate,
            domain=self.domain,
            name=name,
            spec=None,
            allow_degenerate=self.allow_degenerate,
        )


@dataclass(frozen=True, eq=False)
class CandidatePair:
    """Par (lambda, h) candidato a L h = -lambda h com h > 0."""

    lam: float
    h: ScalarField

    def check_positive(self, points: np.ndarray) -> None:
        values = self.h.raw(points)
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            idx = int(np.argmax(~(np.isfinite(values) & (values > 0))))
            raise PositivityError(
                f"h não é positiva em x={points[idx].tolist()} (h={values[idx]!r})"
            )


@dataclass(frozen=True, eq=False)
class TransformedDynamics:
    """Dinâmica h-transformada: deriva k + a grad(h)/h, mesma sigma, e rho."""

    model: DiffusionModel
    rho: VectorField
    pair: CandidatePair
    base: DiffusionModel

    @property
    def drift(self) -> VectorField:
        return self.model.drift

    @property
    def sigma(self) -> MatrixField:
        return self.model.sigma

    @property
    def dim(self) -> int:
        return self.model.dim


Dynamics = Union[DiffusionModel, TransformedDynamics]


def as_model(dynamics: Dynamics) -> DiffusionModel:
    """Aceita modelo ou dinâmica transformada."""
    if isinstance(dynamics, TransformedDynamics):
        return dynamics.model
    return dynamics


def generator_values(model: DiffusionModel, h: ScalarField, points: np.ndarray) -> np.ndarray:
    """L h nos pontos (M, N), sem checagem de domínio."""
    a = model.diffusion(points)
    k = model.drift.values(points)
    r = model.rate.values(points)
    out = (
        0.5 * np.einsum("mij,mij->m", a, h.hess_points(points))
        + np.einsum("mi,mi->m", k, h.grad_points(points))
        - r * h.values(points)
    )
    if not np.all(np.isfinite(out)):
        raise EvaluationError(f"L h não finito para h={h.label}")
    return out


def apply_generator(model: DiffusionModel, h: ScalarField, x: State) -> Union[float, np.ndarray]:
    """
    Aplica o gerador do modelo a h.

    Args:
        model: Modelo de difusão.
        h: Campo duas vezes avaliável.
        x: Ponto interior (ou lote de pontos).

    Returns:
        L h(x).

    Raises:
        DomainError: Se x estiver fora do domínio.
        EvaluationError: Se algum campo produzir valor não finito.
    """
    points, single = as_points(x, model.dim)
    model.domain.require_interior(points)
    out = generator_values(model, h, points)
    return float(out[0]) if single else out


def pde_residual(model: DiffusionModel, pair: CandidatePair, grid: Sequence) -> float:
    """
    Resíduo max |L h + lambda h| / max(1, |h|) na malha.

    Raises:
        UsageError: Se a malha estiver vazia.
    """
    if grid is None or len(grid) == 0:
        raise UsageError("Malha vazia para o resíduo da EDP", field="grid")
    points, _ = as_points(grid, model.dim)
    model.domain.require_interior(points)
    lh = generator_values(model, pair.h, points)
    h = pair.h.values(points)
    return float(np.max(np.abs(lh + pair.lam * h) / np.maximum(1.0, np.abs(h))))


def h_transform(
    model: DiffusionModel, pair: CandidatePair, grid: Optional[np.ndarray] = None
) -> TransformedDynamics:
    """
    Constrói a dinâmica sob a medida transformada por h.

    Args:
        model: Modelo neutro ao risco.
        pair: Par (lambda, h) com h > 0.
        grid: Pontos onde a positividade é verificada (padrão: malha do domínio).

    Returns:
        TransformedDynamics com deriva k + a grad(h)/h e rho = sigma^T grad(h)/h.

    Raises:
        PositivityError: Se h <= 0 em algum ponto amostrado.
    """
    points = model.domain.sample_grid() if grid is None else as_points(grid, model.dim)[0]
    pair.check_positive(points)
    h = pair.h

    def log_grad(p: np.ndarray) -> np.ndarray:
        return h.grad_points(p) / h.values(p)[:, None]

    def drift(p: np.ndarray) -> np.ndarray:
        return model.drift.values(p) + np.einsum("mij,mj->mi", model.diffusion(p), log_grad(p))

    def rho(p: np.ndarray) -> np.ndarray:
        return np.einsum("mji,mj->mi", model.sigma.values(p), log_grad(p))

    constant_drift = None
    constant_rho = None
    if h.log_gradient is not None and model.drift.constant is not None and model.sigma.constant is not None:
        sigma = model.sigma.constant
        theta = h.log_gradient
        constant_drift = model.drift.constant + (sigma @ sigma.T) @ theta
        constant_rho = sigma.T @ theta

    if constant_drift is not None:
        new_drift = VectorField.constant_field(constant_drift)
        rho_field = VectorField.constant_field(constant_rho)
    else:
        new_drift = VectorField(func=drift, dim=model.dim, label=f"k + a grad({h.label})/h")
        rho_field = VectorField(func=rho, dim=model.dim, label=f"sigma^T grad({h.label})/h")

    transformed = model.with_drift(new_drift, name=f"{model.name}^h")
    logger.debug(f"h-transform de {model.name} por h={h.label}")
    return TransformedDynamics(model=transformed, rho=rho_field, pair=pair, base=model)


def scalar_coefficients(model: DiffusionModel) -> Callable[[float], Tuple[float, float, float]]:
    """Coeficientes (a, k, r) de um modelo 1D como função escalar rápida."""
    if model.dim != 1:
        raise UsageError(f"Esperado modelo 1D, recebido dimensão {model.dim}")
    a_c = None if model.sigma.constant is None else float(model.sigma.constant[0, 0] ** 2)
    k_c = None if model.drift.constant is None else float(model.drift.constant[0])
    r_c = None if model.rate.constant is None else float(model.rate.constant)

    def coefficients(x: float) -> Tuple[float, float, float]:
        point = np.array([[x]])
        a = a_c if a_c is not None else float(model.sigma.raw(point)[0, 0, 0] ** 2)
        k = k_c if k_c is not None else float(model.drift.raw(point)[0, 0])
        r = r_c if r_c is not None else float(model.rate.raw(point)[0])
        return a, k, r

    return coefficients
