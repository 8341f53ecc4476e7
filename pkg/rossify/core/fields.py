#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Campos escalares, vetoriais e matriciais sobre o espaço de estados.

Todos os campos avaliam lotes de pontos de forma vetorizada: a função
interna recebe uma matriz (M, N) e devolve (M,), (M, N) ou (M, N, N).
Um ponto isolado pode ser passado como escalar (N = 1) ou sequência de
tamanho N; nesse caso o resultado é um escalar, vetor ou matriz.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from rossify.core.parser import compile_scalar, parse_expression, vectorize
from rossify.utils.exceptions import EvaluationError, UsageError

ArrayFunc = Callable[[np.ndarray], np.ndarray]
State = Union[float, Sequence[float], np.ndarray]

DEFAULT_FD_STEP = 1e-4


def as_points(x: State, dim: int) -> Tuple[np.ndarray, bool]:
    """
    Normaliza a entrada para uma matriz (M, N).

    Returns:
        Tupla (pontos, ponto_unico).
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        if dim != 1:
            raise UsageError(f"Estado escalar exige dimensão 1, modelo tem {dim}")
        return arr.reshape(1, 1), True
    if arr.ndim == 1:
        if dim == 1:
            return arr.reshape(-1, 1), False
        if arr.shape[0] != dim:
            raise UsageError(f"Estado com {arr.shape[0]} coordenadas, esperado {dim}")
        return arr.reshape(1, dim), True
    if arr.ndim == 2 and arr.shape[1] == dim:
        return arr, False
    raise UsageError(f"Formato de estado inválido {arr.shape} para dimensão {dim}")


def fd_steps(points: np.ndarray, scale: float) -> np.ndarray:
    """Passos por eixo: scale * (1 + |x_i|)."""
    return scale * (1.0 + np.abs(points))


def _check_finite(values: np.ndarray, label: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise EvaluationError(f"Campo {label or '?'} retornou valor não finito")
    return values


@dataclass(frozen=True, eq=False)
class ScalarField:
    """
    Campo escalar f: R^N -> R.

    ``gradient`` e ``hessian`` são opcionais; na ausência deles usam-se
    diferenças centrais com passo ``fd_step * (1 + |x_i|)``.
    ``log_gradient`` marca campos da forma c*exp(theta.x).
    """

    func: ArrayFunc
    dim: int
    gradient: Optional[ArrayFunc] = None
    hessian: Optional[ArrayFunc] = None
    label: str = ""
    constant: Optional[float] = None
    log_gradient: Optional[np.ndarray] = None
    fd_step: float = DEFAULT_FD_STEP

    def raw(self, points: np.ndarray) -> np.ndarray:
        """Avalia em (M, N) sem verificar finitude."""
        return np.asarray(self.func(points), dtype=float).reshape(points.shape[0])

    def values(self, points: np.ndarray) -> np.ndarray:
        return _check_finite(self.raw(points), self.label)

    def __call__(self, x: State) -> Union[float, np.ndarray]:
        points, single = as_points(x, self.dim)
        out = self.values(points)
        return float(out[0]) if single else out

    def grad_points(self, points: np.ndarray) -> np.ndarray:
        if self.gradient is not None:
            out = np.asarray(self.gradient(points), dtype=float).reshape(points.shape)
            return _check_finite(out, self.label)
        return self.fd_gradient(points)

    def fd_gradient(self, points: np.ndarray) -> np.ndarray:
        """Gradiente por diferenças centrais."""
        steps = fd_steps(points, self.fd_step)
        out = np.empty_like(points)
        for i in range(self.dim):
            shift = np.zeros_like(points)
            shift[:, i] = steps[:, i]
            out[:, i] = (self.raw(points + shift) - self.raw(points - shift)) / (
                2.0 * steps[:, i]
            )
        return _check_finite(out, self.label)

    def grad(self, x: State) -> np.ndarray:
        points, single = as_points(x, self.dim)
        out = self.grad_points(points)
        return out[0] if single else out

    def hess_points(self, points: np.ndarray) -> np.ndarray:
        m, n = points.shape
        if self.hessian is not None:
            out = np.asarray(self.hessian(points), dtype=float).reshape(m, n, n)
            return _check_finite(out, self.label)
        steps = fd_steps(points, self.fd_step)
        out = np.empty((m, n, n))
        if self.gradient is not None:
            # Diferença central do gradiente analítico
            for j in range(n):
                shift = np.zeros_like(points)
                shift[:, j] = steps[:, j]
                out[:, :, j] = (
                    self.grad_points(points + shift) - self.grad_points(points - shift)
                ) / (2.0 * steps[:, j : j + 1])
            out = 0.5 * (out + np.swapaxes(out, 1, 2))
            return _check_finite(out, self.label)
        center = self.raw(points)
        for i in range(n):
            ei = np.zeros_like(points)
            ei[:, i] = steps[:, i]
            out[:, i, i] = (
                self.raw(points + ei) - 2.0 * center + self.raw(points - ei)
            ) / steps[:, i] ** 2
            for j in range(i + 1, n):
                ej = np.zeros_like(points)
                ej[:, j] = steps[:, j]
                mixed = (
                    self.raw(points + ei + ej)
                    - self.raw(points + ei - ej)
                    - self.raw(points - ei + ej)
                    + self.raw(points - ei - ej)
                ) / (4.0 * steps[:, i] * steps[:, j])
                out[:, i, j] = mixed
                out[:, j, i] = mixed
        return _check_finite(out, self.label)

    def hess(self, x: State) -> np.ndarray:
        points, single = as_points(x, self.dim)
        out = self.hess_points(points)
        return out[0] if single else out

    def gradient_mismatch(self, points: np.ndarray) -> float:
        """Maior erro relativo entre gradiente analítico e diferenças centrais."""
        if self.gradient is None:
            return 0.0
        exact = self.grad_points(points)
        approx = self.fd_gradient(points)
        scale = np.maximum(1.0, np.abs(exact))
        return float(np.max(np.abs(exact - approx) / scale))

    # Construtores

    @classmethod
    def constant_field(cls, value: float, dim: int) -> "ScalarField":
        value = float(value)

        def func(points: np.ndarray) -> np.ndarray:
            return np.full(points.shape[0], value)

        return cls(
            func=func,
            dim=dim,
            gradient=lambda p: np.zeros_like(p),
            hessian=lambda p: np.zeros((p.shape[0], dim, dim)),
            label=f"{value:g}",
            constant=value,
            log_gradient=np.zeros(dim) if value > 0 else None,
        )

    @classmethod
    def exponential(
        cls, theta: Sequence[float], scale: float = 1.0, label: str = ""
    ) -> "ScalarField":
        """Campo scale * exp(theta . x) com derivadas exatas."""
        theta = np.asarray(theta, dtype=float).reshape(-1)
        dim = theta.shape[0]
        outer = np.outer(theta, theta)

        def func(points: np.ndarray) -> np.ndarray:
            return scale * np.exp(points @ theta)

        def gradient(points: np.ndarray) -> np.ndarray:
            return func(points)[:, None] * theta[None, :]

        def hessian(points: np.ndarray) -> np.ndarray:
            return func(points)[:, None, None] * outer[None, :, :]

        text = " + ".join(f"{t:.12g}*x{i + 1}" for i, t in enumerate(theta) if t != 0.0)
        return cls(
            func=func,
            dim=dim,
            gradient=gradient,
            hessian=hessian,
            label=label or f"{scale:g}*exp({text or '0'})",
            constant=scale if not np.any(theta) else None,
            log_gradient=theta.copy() if scale > 0 else None,
        )

    @classmethod
    def from_expression(cls, text: str, dim: int, fd_step: float = DEFAULT_FD_STEP) -> "ScalarField":
        expr, func, gradient, hessian = compile_scalar(text, dim)
        constant = float(expr) if not expr.free_symbols else None
        return cls(
            func=func,
            dim=dim,
            gradient=gradient,
            hessian=hessian,
            label=text,
            constant=constant,
            fd_step=fd_step,
        )


def linear_combination(
    fields: Sequence[ScalarField], weights: Sequence[float], label: str = ""
) -> ScalarField:
    """
    Combinação linear de campos, preservando derivadas analíticas.

    A soma é feita sempre na ordem dada.
    """
    if len(fields) != len(weights) or not fields:
        raise UsageError("Combinação linear exige listas não vazias de mesmo tamanho")
    dim = fields[0].dim
    if any(f.dim != dim for f in fields):
        raise UsageError("Campos com dimensões diferentes")
    weights = [float(w) for w in weights]
    pairs = list(zip(weights, fields))

    def func(points: np.ndarray) -> np.ndarray:
        total = np.zeros(points.shape[0])
        for w, f in pairs:
            total = total + w * f.raw(points)
        return total

    gradient = None
    if all(f.gradient is not None for f in fields):

        def gradient(points: np.ndarray) -> np.ndarray:
            total = np.zeros_like(points)
            for w, f in pairs:
                total = total + w * f.grad_points(points)
            return total

    hessian = None
    if all(f.hessian is not None for f in fields):

        def hessian(points: np.ndarray) -> np.ndarray:
            total = np.zeros((points.shape[0], dim, dim))
            for w, f in pairs:
                total = total + w * f.hess_points(points)
            return total

    constant = None
    if all(f.constant is not None for f in fields):
        constant = sum(w * f.constant for w, f in pairs)  # type: ignore[operator]
    log_gradient = None
    if len(fields) == 1 and fields[0].log_gradient is not None and weights[0] > 0:
        log_gradient = fields[0].log_gradient

    return ScalarField(
        func=func,
        dim=dim,
        gradient=gradient,
        hessian=hessian,
        label=label or " + ".join(f"{w:g}*[{f.label}]" for w, f in pairs),
        constant=constant,
        log_gradient=log_gradient,
        fd_step=fields[0].fd_step,
    )


@dataclass(frozen=True, eq=False)
class VectorField:
    """Campo vetorial k: R^N -> R^N (deriva, linhas de sigma)."""

    func: ArrayFunc
    dim: int
    label: str = ""
    constant: Optional[np.ndarray] = None
    linear: Optional[np.ndarray] = None

    def raw(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.func(points), dtype=float).reshape(points.shape)

    def values(self, points: np.ndarray) -> np.ndarray:
        return _check_finite(self.raw(points), self.label)

    def __call__(self, x: State) -> np.ndarray:
        points, single = as_points(x, self.dim)
        out = self.values(points)
        return out[0] if single else out

    @classmethod
    def constant_field(cls, vector: Sequence[float]) -> "VectorField":
        vector = np.asarray(vector, dtype=float).reshape(-1)

        def func(points: np.ndarray) -> np.ndarray:
            return np.broadcast_to(vector, points.shape).copy()

        return cls(func=func, dim=vector.shape[0], label=str(vector.tolist()), constant=vector)

    @classmethod
    def linear_field(cls, matrix: Sequence[Sequence[float]]) -> "VectorField":
        """k(x) = B x."""
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        if matrix.shape[0] != matrix.shape[1]:
            raise UsageError(f"Matriz da deriva linear deve ser quadrada: {matrix.shape}")

        def func(points: np.ndarray) -> np.ndarray:
            return points @ matrix.T

        return cls(
            func=func,
            dim=matrix.shape[0],
            label=f"B x, B={matrix.tolist()}",
            constant=np.zeros(matrix.shape[0]) if not np.any(matrix) else None,
            linear=matrix,
        )

    @classmethod
    def from_expressions(cls, texts: Sequence[str], dim: int) -> "VectorField":
        if len(texts) != dim:
            raise UsageError(f"Deriva com {len(texts)} componentes, esperado {dim}", field="drift")
        exprs = [parse_expression(t, dim) for t in texts]
        funcs = [vectorize(e, dim) for e in exprs]

        def func(points: np.ndarray) -> np.ndarray:
            return np.stack([f(points) for f in funcs], axis=-1)

        constant = None
        if all(not e.free_symbols for e in exprs):
            constant = np.array([float(e) for e in exprs])
        return cls(func=func, dim=dim, label=str(list(texts)), constant=constant)


@dataclass(frozen=True, eq=False)
class MatrixField:
    """Campo matricial sigma: R^N -> R^{N x N}."""

    func: ArrayFunc
    dim: int
    label: str = ""
    constant: Optional[np.ndarray] = None

    def raw(self, points: np.ndarray) -> np.ndarray:
        m, n = points.shape
        return np.asarray(self.func(points), dtype=float).reshape(m, n, n)

    def values(self, points: np.ndarray) -> np.ndarray:
        return _check_finite(self.raw(points), self.label)

    def __call__(self, x: State) -> np.ndarray:
        points, single = as_points(x, self.dim)
        out = self.values(points)
        return out[0] if single else out

    def covariance(self, points: np.ndarray) -> np.ndarray:
        """a(x) = sigma(x) sigma(x)^T."""
        sigma = self.values(points)
        return np.einsum("mik,mjk->mij", sigma, sigma)

    @classmethod
    def constant_field(cls, matrix: Union[float, Sequence]) -> "MatrixField":
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        if matrix.shape[0] != matrix.shape[1]:
            raise UsageError(f"Sigma deve ser quadrada: {matrix.shape}", field="sigma")
        n = matrix.shape[0]

        def func(points: np.ndarray) -> np.ndarray:
            return np.broadcast_to(matrix, (points.shape[0], n, n)).copy()

        return cls(func=func, dim=n, label=str(matrix.tolist()), constant=matrix)

    @classmethod
    def from_expressions(cls, texts: Sequence[Sequence[str]], dim: int) -> "MatrixField":
        if len(texts) != dim or any(len(row) != dim for row in texts):
            raise UsageError(f"Sigma deve ser {dim}x{dim}", field="sigma")
        exprs = [[parse_expression(t, dim) for t in row] for row in texts]
        funcs = [[vectorize(e, dim) for e in row] for row in exprs]

        def func(points: np.ndarray) -> np.ndarray:
            return np.stack(
                [np.stack([f(points) for f in row], axis=-1) for row in funcs], axis=-2
            )

        constant = None
        if all(not e.free_symbols for row in exprs for e in row):
            constant = np.array([[float(e) for e in row] for row in exprs])
        return cls(func=func, dim=dim, label=str([list(r) for r in texts]), constant=constant)
