#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Núcleos de Martin em forma fechada para os exemplos multidimensionais.

Cobre o movimento browniano escalado (Delta + lambda), operadores de
coeficientes constantes reduzidos a essa forma, o Ornstein-Uhlenbeck 2D
dX = dW + BX dt e a métrica de Martin por quadratura tensorial.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import quad
from scipy.linalg import solve_continuous_lyapunov

from rossify.core.fields import ScalarField, State
from rossify.core.model import DiffusionModel
from rossify.utils.config import Settings, get_settings
from rossify.utils.exceptions import (
    DivergentIntegralError,
    DomainError,
    NumericError,
    QuadratureError,
    UsageError,
)
from rossify.utils.logger import get_logger

logger = get_logger(__name__)

KIND_SIDE = "side"
KIND_DIRECTION = "direction"
KIND_POINT = "point"

UNIT_TOL = 1e-8

# Pontos avaliados por bloco na regra fixa do núcleo OU
_CHUNK = 256


def unit_vector(gamma: Sequence[float], dim: Optional[int] = None) -> np.ndarray:
    """Valida |gamma| = 1 (tolerância 1e-8) e devolve o vetor como array."""
    vec = np.asarray(gamma, dtype=float).reshape(-1)
    if dim is not None and vec.shape[0] != dim:
        raise UsageError(f"Direção com {vec.shape[0]} coordenadas, esperado {dim}", field="gamma")
    norm = float(np.linalg.norm(vec))
    if abs(norm - 1.0) > UNIT_TOL:
        raise UsageError(f"Direção deve ser unitária, |gamma|={norm:.12g}", field="gamma")
    return vec / norm


@dataclass(frozen=True, eq=False)
class MartinBoundaryPoint:
    """
    Ponto da fronteira de Martin.

    ``side`` para a fronteira 1D (-1 ou +1), ``direction`` para gamma na
    esfera S^{N-1} e ``point`` para a fronteira de um único ponto.
    """

    kind: str
    side: Optional[int] = None
    gamma: Optional[np.ndarray] = None
    curve: Optional[Callable[[float], np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.kind == KIND_SIDE:
            if self.side not in (-1, 1):
                raise UsageError(f"Lado deve ser -1 ou +1, recebido {self.side}", field="side")
        elif self.kind == KIND_DIRECTION:
            if self.gamma is None:
                raise UsageError("Ponto direcional exige gamma", field="gamma")
            object.__setattr__(self, "gamma", unit_vector(self.gamma))
        elif self.kind != KIND_POINT:
            raise UsageError(f"Tipo de ponto de fronteira desconhecido: {self.kind}")

    @classmethod
    def at_side(cls, side: int) -> "MartinBoundaryPoint":
        return cls(KIND_SIDE, side=side)

    @classmethod
    def at_direction(
        cls, gamma: Sequence[float], curve: Optional[Callable[[float], np.ndarray]] = None
    ) -> "MartinBoundaryPoint":
        vec = unit_vector(gamma)
        return cls(KIND_DIRECTION, gamma=vec, curve=curve or bm_curve(vec))

    @classmethod
    def single(cls) -> "MartinBoundaryPoint":
        return cls(KIND_POINT)

    @property
    def label(self) -> str:
        if self.kind == KIND_SIDE:
            return "right" if self.side == 1 else "left"
        if self.kind == KIND_DIRECTION:
            return "(" + ", ".join(f"{g:.6g}" for g in self.gamma) + ")"
        return "point"

    def matches(self, other: "MartinBoundaryPoint", tol: float = 1e-9) -> bool:
        if self.kind != other.kind:
            return False
        if self.kind == KIND_SIDE:
            return self.side == other.side
        if self.kind == KIND_DIRECTION:
            return bool(np.allclose(self.gamma, other.gamma, atol=tol, rtol=0.0))
        return True

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"kind": self.kind}
        if self.kind == KIND_SIDE:
            out["side"] = self.side
        elif self.kind == KIND_DIRECTION:
            out["gamma"] = [float(g) for g in self.gamma]
        return out

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MartinBoundaryPoint":
        kind = data.get("kind")
        if kind == KIND_SIDE:
            return cls.at_side(int(data["side"]))
        if kind == KIND_DIRECTION:
            return cls.at_direction(data["gamma"])
        if kind == KIND_POINT:
            return cls.single()
        raise UsageError(f"Ponto de fronteira inválido: {data}")


def bm_curve(gamma: np.ndarray) -> Callable[[float], np.ndarray]:
    """Curva de Martin t -> gamma t."""
    gamma = np.asarray(gamma, dtype=float)

    def curve(t: float) -> np.ndarray:
        return gamma * float(t)

    return curve


def bm_minimal_field(lam: float, gamma: Sequence[float]) -> ScalarField:
    """
    Função minimal de Delta + lambda como campo: exp(sqrt(-lambda) gamma.x).

    Raises:
        DomainError: Se lambda > 0, ou lambda = 0 com N <= 2.
    """
    vec = unit_vector(gamma)
    dim = vec.shape[0]
    if lam > 0:
        raise DomainError(f"Delta + lambda exige lambda <= 0 (lambda={lam:g})")
    if lam == 0:
        if dim >= 3:
            # Fronteira de um único ponto: núcleo constante
            return ScalarField.constant_field(1.0, dim)
        raise DomainError(f"lambda=0 com N={dim} é crítico: não há fronteira direcional")
    return ScalarField.exponential(np.sqrt(-lam) * vec, label=f"exp(sqrt({-lam:g}) gamma.x)")


def bm_minimal(lam: float, gamma: Sequence[float], x: State) -> Union[float, np.ndarray]:
    """k(x; gamma) = exp(sqrt(-lambda) gamma.x) para Delta + lambda."""
    kernel = bm_minimal_field(lam, gamma)
    return kernel(x)


@dataclass(frozen=True)
class Reduction:
    """
    h(x) = exp(c.x) g(Sx) leva 1/2 a:D2 + k.D - r + beta em Delta + lambda.

    S = sqrt(2) a^{-1/2}, c = -a^{-1} k, lambda = beta - r - 1/2 k.a^{-1}k.
    """

    S: np.ndarray
    c: np.ndarray
    lam: float

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    def theta(self, gamma: Sequence[float]) -> np.ndarray:
        """Expoente de exp(theta.x) para a direção gamma (lambda < 0)."""
        vec = unit_vector(gamma, self.dim)
        if self.lam >= 0:
            raise DomainError(f"Direção exige lambda < 0 na forma reduzida (lambda={self.lam:g})")
        return np.sqrt(-self.lam) * (self.S.T @ vec) + self.c

    def principal(self, gamma: Optional[Sequence[float]] = None) -> ScalarField:
        """
        Função minimal em coordenadas originais.

        Sem gamma (lambda = 0, N >= 3) devolve exp(c.x), o núcleo da
        fronteira de um único ponto.
        """
        if gamma is None:
            if self.lam != 0 or self.dim < 3:
                raise DomainError(
                    f"Núcleo de ponto único exige lambda=0 e N>=3 (lambda={self.lam:g}, N={self.dim})"
                )
            return ScalarField.exponential(self.c, label="exp(c.x)")
        return ScalarField.exponential(self.theta(gamma))


def constcoef_reduce(model: DiffusionModel, beta: float) -> Reduction:
    """
    Reduz um operador de coeficientes constantes à forma Delta + lambda.

    A raiz quadrada de a vem da decomposição espectral (autovalores em
    ordem crescente).

    Raises:
        UsageError: Se algum coeficiente não for constante.
    """
    if not model.is_constant_coefficient:
        raise UsageError(f"Redução exige coeficientes constantes (modelo {model.name})")
    a, k, r = model.constant_coefficients()
    w, v = np.linalg.eigh(a)
    inv_sqrt = (v / np.sqrt(w)) @ v.T
    S = np.sqrt(2.0) * inv_sqrt
    a_inv_k = np.linalg.solve(a, k)
    c = -a_inv_k
    lam = float(beta - r - 0.5 * k @ a_inv_k)
    return Reduction(S=0.5 * (S + S.T), c=c, lam=lam)


def expm_2x2(B: np.ndarray, t: Union[float, np.ndarray]) -> np.ndarray:
    """
    e^{Bt} para uma matriz 2x2 e um vetor de tempos, forma fechada.

    Returns:
        Array (T, 2, 2); entradas não finitas indicam overflow.
    """
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    m = 0.5 * (B[0, 0] + B[1, 1])
    det = B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0]
    disc = m * m - det
    nil = B - m * np.eye(2)
    with np.errstate(over="ignore", invalid="ignore"):
        if abs(disc) < 1e-14:
            grow = np.exp(m * ts)
            even = grow * (1.0 + 0.5 * disc * ts**2)
            odd = grow * ts * (1.0 + disc * ts**2 / 6.0)
        else:
            delta = np.sqrt(complex(disc))
            up = np.exp((m + delta) * ts)
            down = np.exp((m - delta) * ts)
            even = (0.5 * (up + down)).real
            odd = ((up - down) / (2.0 * delta)).real
        return even[:, None, None] * np.eye(2)[None] + odd[:, None, None] * nil[None]


@dataclass(frozen=True, eq=False)
class OUSpec:
    """Matriz B (2x2, não singular) do OU dX = dW + BX dt e seus autovalores."""

    B: np.ndarray
    eigs: Tuple[complex, complex] = field(init=False)

    def __post_init__(self) -> None:
        B = np.asarray(self.B, dtype=float)
        if B.shape != (2, 2):
            raise UsageError(f"OU suportado apenas em dimensão 2, B tem forma {B.shape}", field="B")
        scale = max(1.0, float(np.max(np.abs(B))))
        det = float(np.linalg.det(B))
        if abs(det) <= 1e-12 * scale**2:
            raise DomainError("B deve ser não singular (det B = 0)")
        eigs = np.linalg.eigvals(B)
        order = np.argsort(-eigs.real, kind="stable")
        z1, z2 = (complex(e) for e in eigs[order])
        trace = float(np.trace(B))
        for z in (z1, z2):
            if abs(z * z - trace * z + det) > 1e-10 * scale**2:
                raise NumericError(f"Autovalor {z} não satisfaz o polinômio característico")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "eigs", (z1, z2))

    @property
    def trace(self) -> float:
        return float(np.trace(self.B))

    @property
    def expanding(self) -> bool:
        """Ambos autovalores com parte real positiva."""
        return all(z.real > 0 for z in self.eigs)

    @property
    def recurrent(self) -> bool:
        """Ambos autovalores com parte real não positiva (operador crítico)."""
        return all(z.real <= 0 for z in self.eigs)

    @property
    def mixed(self) -> bool:
        z1, z2 = self.eigs
        return abs(z1.imag) < 1e-12 and z2.real < 0 < z1.real

    def expm(self, t: Union[float, np.ndarray]) -> np.ndarray:
        out = expm_2x2(self.B, t)
        return out[0] if np.ndim(t) == 0 else out

    def triangular_form(self) -> Tuple[np.ndarray, "OUSpec"]:
        """
        Rotação Q e a matriz B-chapéu do caso misto z2 < 0 < z1.

        Q^T B Q = [[z2, 0], [b, z1]]; B-chapéu troca o sinal de z2. Q vem
        de QR com diagonal positiva, det Q = +1.
        """
        if not self.mixed:
            raise DomainError("Forma triangular exige autovalores reais z2 < 0 < z1")
        z1, z2 = (z.real for z in self.eigs)
        w, v = np.linalg.eig(self.B)
        q2 = np.real(v[:, int(np.argmax(w.real))])
        q2 = q2 / np.linalg.norm(q2)
        if q2[int(np.argmax(np.abs(q2)))] < 0:
            q2 = -q2
        q1 = np.array([q2[1], -q2[0]])
        q, r = np.linalg.qr(np.column_stack([q1, q2]))
        q = q * np.sign(np.diag(r))[None, :]
        if np.linalg.det(q) < 0:
            q[:, 0] = -q[:, 0]
        b = float(q[:, 1] @ self.B @ q[:, 0])
        hat = np.array([[-z2, 0.0], [b, z1]])
        return q, OUSpec(hat)


def ou_covariance(spec: OUSpec) -> np.ndarray:
    """
    C_B = int_0^inf e^{-Bs} e^{-B^T s} ds, via B C + C B^T = I.

    Raises:
        DivergentIntegralError: Se algum autovalor tiver parte real <= 0.
    """
    if not spec.expanding:
        raise DivergentIntegralError(
            f"C_B diverge: autovalores {spec.eigs} sem parte real positiva"
        )
    C = solve_continuous_lyapunov(spec.B, np.eye(2))
    return 0.5 * (C + C.T)


def _precision(C: np.ndarray) -> np.ndarray:
    C = np.asarray(C, dtype=float)
    if not np.all(np.isfinite(C)) or np.linalg.cond(C) > 1e12:
        raise NumericError("C_B singular ou mal condicionada")
    P = np.linalg.inv(C)
    return 0.5 * (P + P.T)


def ou_kernel_density(
    spec: OUSpec, C: np.ndarray, x: State, t: float, gamma: Sequence[float]
) -> float:
    """
    K_B(x, t; gamma) = e^{tr(B) t} exp(-1/2 d.C^{-1}d - gamma.C^{-1}gamma), d = e^{Bt}gamma - x.

    Raises:
        NumericError: Se C_B for singular.
    """
    P = _precision(C)
    vec = unit_vector(gamma, 2)
    point = np.asarray(x, dtype=float).reshape(2)
    return _density(spec, P, point, float(t), vec)


def _density(spec: OUSpec, P: np.ndarray, point: np.ndarray, t: float, vec: np.ndarray) -> float:
    with np.errstate(over="ignore", invalid="ignore"):
        d = spec.expm(t) @ vec - point
        value = np.exp(spec.trace * t - 0.5 * d @ P @ d - vec @ P @ vec)
    return float(value) if np.isfinite(value) else 0.0


def ou_martin_kernel(
    spec: OUSpec,
    x: State,
    gamma: Sequence[float],
    settings: Optional[Settings] = None,
) -> float:
    """
    k_B(x; gamma) = c_gamma^{-1} int K_B(x, s; gamma) ds por quadratura adaptativa.

    A janela simétrica |s| <= W começa em ``quad_start`` e dobra até a
    variação relativa ficar abaixo de ``quad_tail_tol``.

    No caso misto z2 < 0 < z1 avalia k_{B-chapéu}(Q^T x).

    Raises:
        QuadratureError: Se não convergir no orçamento (com resultado parcial).
    """
    settings = settings if settings is not None else get_settings()
    vec = unit_vector(gamma, 2)
    point = np.asarray(x, dtype=float).reshape(2)
    if spec.mixed:
        rotation, spec = spec.triangular_form()
        point = rotation.T @ point
    P = _precision(ou_covariance(spec))

    def integral(target: np.ndarray) -> float:
        def integrand(s: float) -> float:
            return _density(spec, P, target, s, vec)

        width = settings.quad_start
        previous = None
        for _ in range(settings.quad_max_doublings + 1):
            value, _ = quad(integrand, -width, width, points=[0.0], limit=500,
                            epsabs=0.0, epsrel=1e-13)
            if previous is not None and abs(value - previous) <= settings.quad_tail_tol * abs(value):
                return value
            previous = value
            width *= 2.0
        raise QuadratureError(
            f"Quadratura OU não convergiu até |s| <= {width / 2:g}", partial=previous
        )

    norm = integral(np.zeros(2))
    if not np.any(point):
        return 1.0
    return integral(point) / norm


def _gauss_rule(lo: float, hi: float, panels: int, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Regra composta de Gauss-Legendre em [lo, hi]."""
    ref_x, ref_w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    points = (mid[:, None] + half[:, None] * ref_x[None, :]).reshape(-1)
    weights = (half[:, None] * ref_w[None, :]).reshape(-1)
    return points, weights


class OUKernel:
    """
    Núcleo de Martin do OU como campo escalar com gradiente analítico.

    Usa uma regra fixa de Gauss-Legendre em s (``ou_panels`` x ``ou_nodes``),
    adequada a |x| <= ``ou_radius``. No caso misto avalia k_{B-chapéu}(Q^T x).
    """

    def __init__(
        self,
        spec: OUSpec,
        gamma: Sequence[float],
        settings: Optional[Settings] = None,
        rotation: Optional[np.ndarray] = None,
    ):
        self.settings = settings if settings is not None else get_settings()
        self.spec = spec
        self.gamma = unit_vector(gamma, 2)
        self.rotation = rotation
        self.C = ou_covariance(spec)
        self.P = _precision(self.C)
        s_lo = -35.0 / spec.trace
        s_hi = self._upper_limit()
        self.nodes, self.weights = _gauss_rule(
            s_lo, s_hi, self.settings.ou_panels, self.settings.ou_nodes
        )
        with np.errstate(over="ignore", invalid="ignore"):
            self.curve_points = np.einsum("sij,j->si", expm_2x2(spec.B, self.nodes), self.gamma)
        self.norm = float(self._integrate(np.zeros((1, 2)))[0][0])
        if not self.norm > 0:
            raise QuadratureError("Normalização c_gamma não positiva", partial=self.norm)

    def _upper_limit(self) -> float:
        """Menor s tal que a gaussiana esmaga e^{tr(B) s} para |x| <= raio."""
        radius = self.settings.ou_radius
        p_min = float(np.linalg.eigvalsh(self.P)[0])
        s = 1.0
        for _ in range(60):
            reach = float(np.linalg.norm(self.spec.expm(s) @ self.gamma))
            needed = radius + np.sqrt(2.0 * (45.0 + self.spec.trace * s) / p_min)
            if reach >= needed:
                return s
            s *= 1.5
        raise QuadratureError("Curva de Martin não se afasta da origem")

    def _weighted(self, chunk: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        const = float(self.gamma @ self.P @ self.gamma)
        base = self.spec.trace * self.nodes - const
        with np.errstate(over="ignore", invalid="ignore"):
            d = self.curve_points[None, :, :] - chunk[:, None, :]
            pd = np.einsum("ij,msj->msi", self.P, d)
            q = np.einsum("msi,msi->ms", d, pd)
            dens = np.exp(base[None, :] - 0.5 * q)
        dens = np.where(np.isfinite(dens), dens, 0.0)
        pd = np.where(np.isfinite(pd), pd, 0.0)
        return dens * self.weights[None, :], pd

    def _hessian_local(self, points: np.ndarray) -> np.ndarray:
        """Hessiana: sum w K (P d)(P d)^T - K P."""
        out = np.empty((points.shape[0], 2, 2))
        for start in range(0, points.shape[0], _CHUNK):
            w, pd = self._weighted(points[start : start + _CHUNK])
            outer = np.einsum("ms,msi,msj->mij", w, pd, pd)
            out[start : start + _CHUNK] = outer - w.sum(axis=1)[:, None, None] * self.P[None]
        return out

    def hessian(self, points: np.ndarray) -> np.ndarray:
        local = points if self.rotation is None else points @ self.rotation
        hess = self._hessian_local(local) / self.norm
        if self.rotation is None:
            return hess
        return np.einsum("ij,mjk,lk->mil", self.rotation, hess, self.rotation)

    def _integrate(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        values = np.empty(points.shape[0])
        grads = np.empty_like(points)
        for start in range(0, points.shape[0], _CHUNK):
            w, pd = self._weighted(points[start : start + _CHUNK])
            values[start : start + _CHUNK] = w.sum(axis=1)
            grads[start : start + _CHUNK] = np.einsum("ms,msi->mi", w, pd)
        return values, grads

    def values(self, points: np.ndarray) -> np.ndarray:
        local = points if self.rotation is None else points @ self.rotation
        return self._integrate(local)[0] / self.norm

    def gradient(self, points: np.ndarray) -> np.ndarray:
        local = points if self.rotation is None else points @ self.rotation
        grads = self._integrate(local)[1] / self.norm
        return grads if self.rotation is None else grads @ self.rotation.T

    def curve(self, t: float) -> np.ndarray:
        point = self.spec.expm(float(t)) @ self.gamma
        return point if self.rotation is None else self.rotation @ point

    def as_field(self) -> ScalarField:
        label = f"k_B(x;{self.gamma.tolist()})"
        return ScalarField(
            func=self.values, dim=2, gradient=self.gradient, hessian=self.hessian, label=label
        )


def ou_kernel(
    B: Sequence[Sequence[float]], gamma: Sequence[float], settings: Optional[Settings] = None
) -> Tuple[ScalarField, MartinBoundaryPoint]:
    """
    Núcleo minimal do OU para a direção gamma, escolhendo o caso pelos autovalores.

    Returns:
        (campo, ponto de fronteira); no caso recorrente o núcleo é 1 e a
        fronteira é um ponto.
    """
    spec = OUSpec(np.asarray(B, dtype=float))
    if spec.recurrent:
        return ScalarField.constant_field(1.0, 2), MartinBoundaryPoint.single()
    if spec.expanding:
        kernel = OUKernel(spec, gamma, settings)
    elif spec.mixed:
        rotation, hat = spec.triangular_form()
        logger.info(f"OU misto: B-chapéu={hat.B.tolist()}")
        kernel = OUKernel(hat, gamma, settings, rotation=rotation)
    else:
        raise DomainError(f"Autovalores de B não suportados: {spec.eigs}")
    point = MartinBoundaryPoint(KIND_DIRECTION, gamma=kernel.gamma, curve=kernel.curve)
    return kernel.as_field(), point


def _kernel_values(kernel: Union[ScalarField, Callable], points: np.ndarray) -> np.ndarray:
    if isinstance(kernel, ScalarField):
        return kernel.values(points)
    return np.asarray(kernel(points), dtype=float).reshape(points.shape[0])


def martin_metric(
    k1: Union[ScalarField, Callable],
    k2: Union[ScalarField, Callable],
    box: Sequence[Tuple[float, float]],
    settings: Optional[Settings] = None,
) -> float:
    """
    rho = int_U |k1 - k2| / (1 + |k1 - k2|) dx por Gauss-Legendre tensorial.

    Args:
        k1: Primeiro núcleo (campo ou função (M, N) -> (M,)).
        k2: Segundo núcleo.
        box: Limites (lo, hi) por eixo de U.
        settings: Painéis e nós por eixo.
    """
    settings = settings if settings is not None else get_settings()
    if not box:
        raise UsageError("Caixa U vazia", field="box")
    axes = []
    for lo, hi in box:
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise UsageError(f"Caixa U deve ser limitada e não vazia: ({lo}, {hi})", field="box")
        axes.append(_gauss_rule(lo, hi, settings.metric_panels, settings.metric_nodes))
    mesh = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    wmesh = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    points = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    weights = np.prod(np.stack([w.reshape(-1) for w in wmesh], axis=-1), axis=-1)
    diff = np.abs(_kernel_values(k1, points) - _kernel_values(k2, points))
    return float(np.sum(weights * diff / (1.0 + diff)))


def sphere_atoms(
    density: Callable[[np.ndarray], float], n: int, dim: int
) -> List[Tuple[np.ndarray, float]]:
    """
    Discretiza uma densidade em S^{N-1} em átomos (gamma, peso).

    Trapézio em S^1; Gauss-Legendre em cos(theta) x trapézio em S^2.
    Em N = 1 a "esfera" são os dois sinais. Pesos nulos são descartados.
    """
    if n < 1:
        raise UsageError("Número de nós deve ser positivo", field="n")
    atoms: List[Tuple[np.ndarray, float]] = []
    if dim == 1:
        candidates = [(np.array([-1.0]), 1.0), (np.array([1.0]), 1.0)]
    elif dim == 2:
        angles = 2.0 * np.pi * np.arange(n) / n
        candidates = [
            (np.array([np.cos(a), np.sin(a)]), 2.0 * np.pi / n) for a in angles
        ]
    elif dim == 3:
        cos_t, w_t = np.polynomial.legendre.leggauss(n)
        phis = 2.0 * np.pi * np.arange(2 * n) / (2 * n)
        candidates = []
        for c, w in zip(cos_t, w_t):
            s = np.sqrt(max(0.0, 1.0 - c * c))
            for phi in phis:
                candidates.append(
                    (np.array([s * np.cos(phi), s * np.sin(phi), c]), w * np.pi / n)
                )
    else:
        raise UsageError(f"Discretização da esfera suportada até N=3 (N={dim})", field="dim")
    for gamma, area in candidates:
        weight = float(density(gamma)) * area
        if weight < 0 or not np.isfinite(weight):
            raise UsageError(f"Densidade inválida em gamma={gamma.tolist()}: {weight}")
        if weight > 0:
            atoms.append((gamma, weight))
    return atoms


def domain_box(model: DiffusionModel, span: float = 1.0) -> List[Tuple[float, float]]:
    """Caixa U padrão: [-span, span] por eixo, recortada ao domínio."""
    box = []
    for iv in model.domain.intervals:
        lo, hi = iv.window(span, center=iv.reference)
        if iv.left_finite:
            lo = iv.left + 0.1 * (iv.reference - iv.left)
        if iv.right_finite:
            hi = iv.right - 0.1 * (iv.right - iv.reference)
        box.append((lo, hi))
    return box

