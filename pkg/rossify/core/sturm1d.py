#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Análise unidimensional da equação 1/2 a h'' + k h' + (lambda - r) h = 0.

Soluções mínimas nas fronteiras são obtidas por shooting a partir das
extremidades da janela truncada (valor 0, inclinação +-1) em dois níveis
de truncamento, L e 2L. A classificação de criticidade usa a oscilação da
solução disparada de uma fronteira (supercrítico) e o wronskiano
extrapolado das duas soluções normalizadas em xi (crítico se nulo).
"""

from dataclasses import dataclass, replace
from typing import Any, Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from rossify.core.fields import ScalarField
from rossify.core.model import DiffusionModel, scalar_coefficients
from rossify.utils.config import Settings, get_settings
from rossify.utils.exceptions import (
    CriticalityError,
    DomainError,
    NumericError,
    SearchError,
    UsageError,
)
from rossify.utils.logger import get_logger

logger = get_logger(__name__)

SUBCRITICAL = "subcritical"
CRITICAL = "critical"
SUPERCRITICAL = "supercritical"

# Menor rtol aceito pelo DOP853 sem aviso (100 * eps)
_MIN_RTOL = 2.3e-14


class _Piece(NamedTuple):
    lo: float
    hi: float
    dense: Any


@dataclass(frozen=True, eq=False)
class OdeSolution:
    """Solução numérica de L h = -lambda h em uma faixa do domínio."""

    grid: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    lam: float
    overflow: bool = False
    range_reached: Tuple[float, float] = (np.nan, np.nan)
    pieces: Tuple[_Piece, ...] = ()
    scale: float = 1.0
    truncation_error: float = 0.0

    def evaluate(self, x: Union[float, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
        """(h, h') em x; fora da faixa usa extrapolação log-linear."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        vals = np.empty_like(xs)
        ders = np.empty_like(xs)
        lo, hi = self.range_reached
        done = np.zeros(xs.shape, dtype=bool)
        for piece in self.pieces:
            mask = (~done) & (xs >= piece.lo) & (xs <= piece.hi)
            if np.any(mask):
                y = piece.dense(xs[mask])
                vals[mask] = y[0]
                ders[mask] = y[1]
                done |= mask
        if not np.all(done):
            for end, mask in ((lo, xs < lo), (hi, xs > hi)):
                mask = mask & ~done
                if np.any(mask):
                    v_end, d_end = self._at(end)
                    w = d_end / v_end
                    vals[mask] = v_end * np.exp(w * (xs[mask] - end))
                    ders[mask] = w * vals[mask]
        return vals * self.scale, ders * self.scale

    def _at(self, x: float) -> Tuple[float, float]:
        for piece in self.pieces:
            if piece.lo <= x <= piece.hi:
                y = piece.dense(np.array([x]))
                return float(y[0, 0]), float(y[1, 0])
        raise NumericError(f"Ponto {x} fora da faixa integrada {self.range_reached}")

    def __call__(self, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        vals, _ = self.evaluate(x)
        return float(vals[0]) if np.ndim(x) == 0 else vals

    def normalized(self, xi: float) -> "OdeSolution":
        """Reescala para h(xi) = 1."""
        value = self(xi)
        if not np.isfinite(value) or value <= 0:
            raise CriticalityError(
                f"Solução não positiva em xi={xi:g} (h={value!r})", klass=SUPERCRITICAL
            )
        return replace(self, scale=self.scale / value)

    def log_slope(self, xi: float) -> float:
        vals, ders = self.evaluate(xi)
        return float(ders[0] / vals[0])

    def dense_grid(self, n: int) -> np.ndarray:
        lo, hi = self.range_reached
        return np.union1d(self.grid, np.linspace(lo, hi, n))

    def as_field(
        self, model: DiffusionModel, n: Optional[int] = None, label: str = ""
    ) -> ScalarField:
        """
        Campo escalar interpolado (Hermite cúbico) com h'' dado pela própria EDO.

        Fora da faixa integrada o campo é estendido log-linearmente.
        """
        settings = get_settings()
        n = n or settings.dense_points
        lo, hi = self.range_reached
        xs = np.linspace(lo, hi, n)
        vals, ders = self.evaluate(xs)
        spline = CubicHermiteSpline(xs, vals, ders)
        w_lo, w_hi = ders[0] / vals[0], ders[-1] / vals[-1]
        v_lo, v_hi = vals[0], vals[-1]
        lam = self.lam

        def value_and_slope(points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
            x = points[:, 0]
            v = np.empty_like(x)
            d = np.empty_like(x)
            inside = (x >= lo) & (x <= hi)
            v[inside] = spline(x[inside])
            d[inside] = spline(x[inside], 1)
            left = x < lo
            v[left] = v_lo * np.exp(w_lo * (x[left] - lo))
            d[left] = w_lo * v[left]
            right = x > hi
            v[right] = v_hi * np.exp(w_hi * (x[right] - hi))
            d[right] = w_hi * v[right]
            return v, d

        def func(points: np.ndarray) -> np.ndarray:
            return value_and_slope(points)[0]

        def gradient(points: np.ndarray) -> np.ndarray:
            return value_and_slope(points)[1][:, None]

        def hessian(points: np.ndarray) -> np.ndarray:
            v, d = value_and_slope(points)
            a = model.diffusion(points)[:, 0, 0]
            k = model.drift.values(points)[:, 0]
            r = model.rate.values(points)
            h2 = -2.0 * (k * d + (lam - r) * v) / a
            return h2[:, None, None]

        return ScalarField(
            func=func,
            dim=1,
            gradient=gradient,
            hessian=hessian,
            label=label or f"ode(lambda={lam:g})",
        )


def _settings(settings: Optional[Settings]) -> Settings:
    return settings if settings is not None else get_settings()


def _require_1d(model: DiffusionModel) -> None:
    if model.dim != 1:
        raise UsageError(f"Análise 1D exige modelo unidimensional (N={model.dim})")


def _reference(model: DiffusionModel, xi: Optional[float]) -> float:
    value = float(model.reference[0]) if xi is None else float(xi)
    if not model.domain.intervals[0].contains(np.array([value]))[0]:
        raise DomainError(f"Ponto de referência {value} fora do domínio")
    return value


def truncation_windows(
    model: DiffusionModel, xi: float, settings: Settings
) -> List[Tuple[float, float]]:
    """Janelas dos níveis L e 2L (fronteiras finitas: recuo delta e delta/2)."""
    iv = model.domain.intervals[0]
    windows = []
    for level in (1, 2):
        cutoff = settings.truncation * level
        inset = settings.finite_inset / level
        lo = iv.left + inset * (xi - iv.left) if iv.left_finite else xi - cutoff
        hi = iv.right - inset * (iv.right - xi) if iv.right_finite else xi + cutoff
        windows.append((lo, hi))
    return windows


def integrate_ode(
    model: DiffusionModel,
    lam: float,
    anchor: float,
    value: float,
    slope: float,
    direction: str,
    stop: Optional[float] = None,
    settings: Optional[Settings] = None,
) -> OdeSolution:
    """
    Integra a EDO de autovalor a partir de ``anchor`` rumo a uma fronteira.

    Args:
        model: Modelo 1D.
        lam: Valor de lambda.
        anchor: Ponto inicial (interior).
        value: h(anchor).
        slope: h'(anchor).
        direction: "left" ou "right".
        stop: Ponto final; padrão é o corte da fronteira (nível L).
        settings: Configurações numéricas.

    Returns:
        OdeSolution; ``overflow`` indica parada antes do destino.
    """
    _require_1d(model)
    settings = _settings(settings)
    if direction not in ("left", "right"):
        raise UsageError(f"Direção inválida: {direction}", field="direction")
    iv = model.domain.intervals[0]
    if not iv.contains(np.array([anchor]))[0]:
        raise DomainError(f"Âncora {anchor} fora do domínio")
    if stop is None:
        lo, hi = truncation_windows(model, float(model.reference[0]), settings)[0]
        stop = hi if direction == "right" else lo
    if (direction == "right" and stop <= anchor) or (direction == "left" and stop >= anchor):
        raise UsageError(f"Destino {stop} incompatível com direção {direction}")

    coefficients = scalar_coefficients(model)
    limit = settings.overflow_limit

    def rhs(x: float, y: np.ndarray) -> List[float]:
        a, k, r = coefficients(x)
        return [y[1], -2.0 * (k * y[1] + (lam - r) * y[0]) / a]

    def overflow(x: float, y: np.ndarray) -> float:
        return limit - max(abs(y[0]), abs(y[1]))

    overflow.terminal = True  # type: ignore[attr-defined]
    overflow.direction = -1  # type: ignore[attr-defined]

    sol = solve_ivp(
        rhs,
        (anchor, stop),
        [value, slope],
        method="DOP853",
        rtol=max(settings.ode_rtol, _MIN_RTOL),
        atol=settings.ode_atol,
        dense_output=True,
        events=overflow,
    )
    if sol.status < 0:
        raise NumericError(f"Falha na integração da EDO: {sol.message}")

    reached = float(sol.t[-1])
    order = np.argsort(sol.t)
    lo, hi = (anchor, reached) if direction == "right" else (reached, anchor)
    return OdeSolution(
        grid=sol.t[order],
        values=sol.y[0][order],
        derivs=sol.y[1][order],
        lam=float(lam),
        overflow=sol.status == 1,
        range_reached=(lo, hi),
        pieces=(_Piece(lo, hi, sol.sol),),
    )


def _shoot(
    model: DiffusionModel,
    lam: float,
    start: float,
    end: float,
    settings: Settings,
) -> OdeSolution:
    """Solução com h(start) = 0 e h'(start) apontando para dentro."""
    if end > start:
        return integrate_ode(model, lam, start, 0.0, 1.0, "right", end, settings)
    return integrate_ode(model, lam, start, 0.0, -1.0, "left", end, settings)


def _sign_change(sol: OdeSolution, start: float, settings: Settings) -> Tuple[Optional[float], bool]:
    """
    Primeira troca estrita de sinal e indicador de zero rasante.

    O ponto inicial (onde h = 0 por construção) é ignorado.
    """
    xs = sol.dense_grid(settings.dense_points)
    vals, _ = sol.evaluate(xs)
    keep = xs != start
    xs, vals = xs[keep], vals[keep]
    if start > xs[0]:
        xs, vals = xs[::-1], vals[::-1]
    signs = np.sign(vals)
    flips = np.nonzero(signs[:-1] * signs[1:] < 0)[0]
    if flips.size:
        return float(xs[flips[0] + 1]), False
    width = abs(xs[-1] - start)
    away = np.abs(xs - start) > 0.01 * width
    peak = np.max(np.abs(vals)) if vals.size else 0.0
    grazing = bool(np.any(away & (np.abs(vals) <= 1e-8 * peak)))
    return None, grazing


def _oscillation(
    model: DiffusionModel, lam: float, start: float, end: float, settings: Settings
) -> Tuple[OdeSolution, Optional[float]]:
    sol = _shoot(model, lam, start, end, settings)
    change, grazing = _sign_change(sol, start, settings)
    if change is None and grazing:
        # Zero rasante: refina o passo uma vez antes de decidir
        fine = settings.model_copy(update={"ode_rtol": max(settings.ode_rtol / 100, _MIN_RTOL)})
        logger.debug(f"Zero rasante em lambda={lam:g}; refinando integração")
        sol = _shoot(model, lam, start, end, fine)
        change, _ = _sign_change(sol, start, fine)
    return sol, change


class _Level(NamedTuple):
    window: Tuple[float, float]
    u_left: OdeSolution
    u_right: OdeSolution
    wronskian: float


class BoundarySolutions(NamedTuple):
    """Soluções positivas mínimas na fronteira esquerda e direita, h(xi) = 1."""

    u_left: OdeSolution
    u_right: OdeSolution


@dataclass(frozen=True)
class CriticalityReport:
    """Resultado da classificação de G = L + lambda."""

    lam: float
    klass: str
    witness: str
    wronskian: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda": self.lam,
            "class": self.klass,
            "witness": self.witness,
            "wronskian": self.wronskian,
        }


def _levels(
    model: DiffusionModel, lam: float, xi: float, settings: Settings
) -> Tuple[List[_Level], Optional[str]]:
    """Dispara as soluções nos dois níveis; devolve testemunha de oscilação se houver."""
    levels: List[_Level] = []
    for lo, hi in truncation_windows(model, xi, settings):
        u_left, change = _oscillation(model, lam, lo, hi, settings)
        if change is not None:
            return levels, f"u_left troca de sinal em x={change:.6g} (janela [{lo:g}, {hi:g}])"
        u_right, change = _oscillation(model, lam, hi, lo, settings)
        if change is not None:
            return levels, f"u_right troca de sinal em x={change:.6g} (janela [{lo:g}, {hi:g}])"
        for sol, name in ((u_left, "u_left"), (u_right, "u_right")):
            lo_r, hi_r = sol.range_reached
            if not lo_r <= xi <= hi_r:
                raise NumericError(
                    f"{name} estourou antes de xi={xi:g} (lambda={lam:g}); reduza o truncamento"
                )
        u_left = u_left.normalized(xi)
        u_right = u_right.normalized(xi)
        wronskian = u_right.log_slope(xi) - u_left.log_slope(xi)
        levels.append(_Level((lo, hi), u_left, u_right, wronskian))
    return levels, None


def _extrapolated_wronskian(levels: List[_Level]) -> float:
    return 2.0 * levels[1].wronskian - levels[0].wronskian


def classify_criticality(
    model: DiffusionModel,
    lam: float,
    xi: Optional[float] = None,
    settings: Optional[Settings] = None,
) -> CriticalityReport:
    """
    Classifica G = L + lambda como subcrítico, crítico ou supercrítico.

    Supercrítico quando a solução disparada de uma fronteira troca de sinal
    antes de alcançar a outra; crítico quando o wronskiano extrapolado das
    duas soluções normalizadas se anula; subcrítico caso contrário.
    """
    _require_1d(model)
    settings = _settings(settings)
    xi = _reference(model, xi)
    levels, witness = _levels(model, lam, xi, settings)
    if witness is not None:
        return CriticalityReport(lam, SUPERCRITICAL, witness)
    wronskian = _extrapolated_wronskian(levels)
    if abs(wronskian) < settings.wronskian_tol:
        return CriticalityReport(
            lam, CRITICAL, f"soluções proporcionais (W extrapolado={wronskian:.3e})", wronskian
        )
    return CriticalityReport(
        lam,
        SUBCRITICAL,
        f"duas soluções positivas independentes (W extrapolado={wronskian:.6g})",
        wronskian,
    )


def boundary_solutions(
    model: DiffusionModel,
    lam: float,
    xi: Optional[float] = None,
    settings: Optional[Settings] = None,
) -> BoundarySolutions:
    """
    Soluções mínimas em cada fronteira, normalizadas em xi.

    ``u_left`` se anula na fronteira esquerda truncada e ``u_right`` na
    direita; ambas vêm do nível 2L e carregam em ``truncation_error`` a
    variação da derivada logarítmica em xi entre os níveis L e 2L.
    Só o wronskiano é extrapolado; as soluções devolvidas não.

    Raises:
        CriticalityError: Se as soluções oscilam ou são proporcionais.
    """
    _require_1d(model)
    settings = _settings(settings)
    xi = _reference(model, xi)
    levels, witness = _levels(model, lam, xi, settings)
    if witness is not None:
        raise CriticalityError(f"lambda={lam:g} supercrítico: {witness}", klass=SUPERCRITICAL)
    wronskian = _extrapolated_wronskian(levels)
    if abs(wronskian) < settings.wronskian_tol:
        raise CriticalityError(
            f"lambda={lam:g} crítico: soluções proporcionais (W={wronskian:.3e})", klass=CRITICAL
        )
    coarse, fine = levels
    u_left = replace(
        fine.u_left,
        truncation_error=abs(fine.u_left.log_slope(xi) - coarse.u_left.log_slope(xi)),
    )
    u_right = replace(
        fine.u_right,
        truncation_error=abs(fine.u_right.log_slope(xi) - coarse.u_right.log_slope(xi)),
    )
    return BoundarySolutions(u_left, u_right)


@dataclass(frozen=True, eq=False)
class GreensFunction1D:
    """G(x, y) = -2 u_l(min) u_r(max) / (a(y) W(y))."""

    model: DiffusionModel
    u_left: OdeSolution
    u_right: OdeSolution

    def wronskian(self, y: float) -> float:
        (ul,), (dul,) = self.u_left.evaluate(y)
        (ur,), (dur,) = self.u_right.evaluate(y)
        return float(ul * dur - dul * ur)

    def __call__(self, x: float, y: float) -> float:
        if x == y:
            raise UsageError("G(x, y) exige x != y")
        a, _, _ = scalar_coefficients(self.model)(y)
        lo, hi = min(x, y), max(x, y)
        return float(-2.0 * self.u_left(lo) * self.u_right(hi) / (a * self.wronskian(y)))


def greens_function_1d(
    model: DiffusionModel,
    lam: float,
    x: float,
    y: float,
    xi: Optional[float] = None,
    settings: Optional[Settings] = None,
) -> float:
    """Função de Green de G = L + lambda em (x, y)."""
    bs = boundary_solutions(model, lam, xi, settings)
    return GreensFunction1D(model, bs.u_left, bs.u_right)(x, y)


@dataclass(frozen=True, eq=False)
class BoundaryKernel:
    """
    Núcleo de Martin k(.; side) com a verificação do sinal da deriva.

    ``ambiguous`` indica que a deriva transformada perto da fronteira
    truncada não aponta claramente para ``side``.
    """

    side: int
    solution: OdeSolution
    field: ScalarField
    xi: float
    edge: float
    edge_drift: float
    ambiguous: bool


def _check_side(side: int) -> int:
    if side not in (-1, 1):
        raise UsageError(f"Lado deve ser -1 ou +1, recebido {side}", field="side")
    return int(side)


def boundary_kernel(
    model: DiffusionModel,
    lam: float,
    side: int,
    xi: Optional[float] = None,
    settings: Optional[Settings] = None,
) -> BoundaryKernel:
    """
    Núcleo de Martin do lado ``side`` como campo, com teste de sinal da deriva.

    k(.; +1) é o limite de G(x, y)/G(xi, y) com y -> fronteira direita,
    ou seja, a solução mínima na fronteira esquerda.
    """
    side = _check_side(side)
    settings = _settings(settings)
    xi = _reference(model, xi)
    bs = boundary_solutions(model, lam, xi, settings)
    solution = bs.u_left if side == 1 else bs.u_right
    lo, hi = truncation_windows(model, xi, settings)[0]
    edge = hi if side == 1 else lo
    a, k, _ = scalar_coefficients(model)(edge)
    vals, ders = solution.evaluate(edge)
    drift = float(k + a * ders[0] / vals[0])
    ambiguous = not side * drift > settings.drift_sign_tol
    if ambiguous:
        logger.warning(
            f"Sinal da deriva ambíguo para k(.;{side:+d}) em x={edge:g}: deriva={drift:.3e}"
        )
    field = solution.as_field(model, label=f"k(x;{side:+d}) lambda={lam:g}")
    return BoundaryKernel(side, solution, field, xi, edge, drift, ambiguous)


def martin_kernel_1d(
    model: DiffusionModel,
    lam: float,
    x: Union[float, np.ndarray],
    side: int,
    xi: Optional[float] = None,
    settings: Optional[Settings] = None,
) -> Union[float, np.ndarray]:
    """
    k(x; side) normalizado com k(xi; side) = 1.

    Raises:
        CriticalityError: Se lambda não for subcrítico.
    """
    return boundary_kernel(model, lam, side, xi, settings).solution(x)


def critical_beta(
    model: DiffusionModel,
    tol: Optional[float] = None,
    xi: Optional[float] = None,
    settings: Optional[Settings] = None,
) -> float:
    """
    Valor crítico beta-barra por bissecção na oscilação de u_left.

    Em cada nível de truncamento a bissecção localiza o primeiro lambda em
    que a solução disparada da esquerda troca de sinal dentro da janela; os
    dois níveis são combinados por Richardson.

    Raises:
        UsageError: Se tol <= 0.
        SearchError: Se o intervalo inicial não for encontrado.
    """
    _require_1d(model)
    settings = _settings(settings)
    tol = settings.critical_tol if tol is None else float(tol)
    if tol <= 0:
        raise UsageError("tol deve ser positivo", field="tol")
    xi = _reference(model, xi)
    windows = truncation_windows(model, xi, settings)

    def oscillates(lam: float, window: Tuple[float, float]) -> bool:
        return _oscillation(model, lam, window[0], window[1], settings)[1] is not None

    if oscillates(0.0, windows[0]):
        raise SearchError("lambda=0 já oscila: taxa negativa ou truncamento inadequado")

    hi = settings.beta_bracket_start
    doublings = 0
    while not oscillates(hi, windows[0]):
        doublings += 1
        if doublings > settings.max_doublings:
            raise SearchError(
                f"Nenhuma oscilação até lambda={hi:g} após {settings.max_doublings} duplicações"
            )
        hi *= 2.0
    logger.debug(f"Intervalo de busca de beta crítico: [0, {hi:g}]")

    estimates = []
    for window in windows:
        a, b = 0.0, hi
        while b - a > tol / 4.0:
            mid = 0.5 * (a + b)
            if oscillates(mid, window):
                b = mid
            else:
                a = mid
        estimates.append(0.5 * (a + b))

    iv = model.domain.intervals[0]
    if iv.left_finite and iv.right_finite:
        beta = 2.0 * estimates[1] - estimates[0]
    else:
        beta = (4.0 * estimates[1] - estimates[0]) / 3.0
    logger.info(f"Beta crítico de {model.name}: {beta:.10g} (níveis {estimates})")
    return float(beta)


def critical_solution(
    model: DiffusionModel,
    beta: float,
    xi: Optional[float] = None,
    settings: Optional[Settings] = None,
) -> OdeSolution:
    """
    Solução positiva (única a menos de escala) no valor crítico, h(xi) = 1.

    A derivada logarítmica em xi é a média das soluções das duas fronteiras,
    extrapolada nos níveis de truncamento; a solução é então integrada a
    partir de xi nos dois sentidos.
    """
    _require_1d(model)
    settings = _settings(settings)
    xi = _reference(model, xi)
    levels, witness = _levels(model, beta, xi, settings)
    if witness is not None:
        raise CriticalityError(f"beta={beta:g} acima do valor crítico: {witness}", klass=SUPERCRITICAL)
    slopes = [0.5 * (lv.u_left.log_slope(xi) + lv.u_right.log_slope(xi)) for lv in levels]
    lo, hi = levels[1].window
    for slope in (2.0 * slopes[1] - slopes[0], slopes[1]):
        solution = _two_sided(model, beta, xi, slope, lo, hi, settings)
        vals, _ = solution.evaluate(solution.dense_grid(settings.dense_points))
        if np.all(vals > 0):
            return replace(solution, truncation_error=abs(slopes[1] - slopes[0]))
        logger.warning(f"Solução crítica extrapolada não positiva (inclinação {slope:g})")
    raise CriticalityError(f"Nenhuma solução positiva em beta={beta:g}", klass=SUPERCRITICAL)


def _two_sided(
    model: DiffusionModel,
    lam: float,
    xi: float,
    slope: float,
    lo: float,
    hi: float,
    settings: Settings,
) -> OdeSolution:
    left = integrate_ode(model, lam, xi, 1.0, slope, "left", lo, settings)
    right = integrate_ode(model, lam, xi, 1.0, slope, "right", hi, settings)
    grid = np.concatenate([left.grid, right.grid[1:]])
    return OdeSolution(
        grid=grid,
        values=np.concatenate([left.values, right.values[1:]]),
        derivs=np.concatenate([left.derivs, right.derivs[1:]]),
        lam=float(lam),
        overflow=left.overflow or right.overflow,
        range_reached=(left.range_reached[0], right.range_reached[1]),
        pieces=left.pieces + right.pieces,
    )
