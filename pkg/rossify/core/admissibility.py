#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Certificação de admissibilidade de pares (lambda, h).

Um par é admissível quando o processo densidade
M_t = exp(lambda t - int r) h(X_t)/h(X_0) é martingale, o que equivale à
não explosão da difusão transformada. Em 1D usa-se o teste de explosão
de Feller; em qualquer dimensão, uma verificação Monte Carlo de E[M_T] = 1.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from rossify.core.fields import State
from rossify.core.model import (
    CandidatePair,
    DiffusionModel,
    Dynamics,
    as_model,
    h_transform,
    pde_residual,
    scalar_coefficients,
)
from rossify.core.simulate import PathEnsemble, simulate_paths
from rossify.io.models import AdmissibilityCertificate
from rossify.utils.config import Settings, get_settings
from rossify.utils.exceptions import ModelError, PositivityError, UsageError
from rossify.utils.logger import get_logger

logger = get_logger(__name__)

ADMISSIBLE = "admissible"
NOT_ADMISSIBLE = "not_admissible"
INCONCLUSIVE = "inconclusive"

DIVERGES = "diverges"
CONVERGES = "converges"
UNSETTLED = "inconclusive"


@dataclass(frozen=True, eq=False)
class DensityProcess:
    """Processo densidade M_t de um par sobre um conjunto de caminhos sob Q."""

    pair: CandidatePair
    ensemble: PathEnsemble

    def values(self) -> np.ndarray:
        """M_t nos instantes registrados, forma (R, n_paths); caminhos marcados valem 0."""
        ens = self.ensemble
        h0 = float(self.pair.h.values(ens.x0[None, :])[0])
        out = np.empty(ens.int_r.shape)
        for i, t in enumerate(ens.times):
            states = np.where(ens.flagged[:, None], 0.0, ens.states[i])
            with np.errstate(all="ignore"):
                h = self.pair.h.raw(states)
                m = np.exp(self.pair.lam * t - ens.int_r[i]) * h / h0
            out[i] = np.where(ens.flagged | ~np.isfinite(m), 0.0, m)
        if ens.times[0] == 0.0:
            out[0] = 1.0
        return out

    def terminal(self) -> np.ndarray:
        return self.values()[-1]

    def state_price_ratio(self) -> np.ndarray:
        """Sigma_t = 1/M_t."""
        with np.errstate(divide="ignore"):
            return 1.0 / self.values()

    def pricing_kernel_reciprocal(self) -> np.ndarray:
        """L_t = exp(int r) M_t = exp(lambda t) h(X_t)/h(X_0)."""
        return np.exp(self.ensemble.int_r) * self.values()


@dataclass(frozen=True)
class MartingaleCheck:
    mean: float
    std_error: float
    flagged: int
    n_paths: int


def martingale_check_mc(
    model: DiffusionModel,
    pair: CandidatePair,
    T: float,
    n_paths: int,
    seed: int,
    x0: Optional[State] = None,
    settings: Optional[Settings] = None,
) -> MartingaleCheck:
    """
    Estima E^Q[M_T] simulando o modelo neutro ao risco a partir de xi.

    Raises:
        UsageError: Se T <= 0 ou n_paths < 1000.
    """
    if not T > 0:
        raise UsageError(f"T deve ser positivo (T={T})", field="T")
    if n_paths < 1000:
        raise UsageError(f"Verificação MC exige ao menos 1000 caminhos ({n_paths})", field="paths")
    start = model.reference if x0 is None else x0
    ensemble = simulate_paths(model, start, T, None, n_paths, seed, settings=settings)
    density = DensityProcess(pair, ensemble)
    mean, se = ensemble.mean_and_se(density.terminal())
    flagged = int(ensemble.flagged.sum())
    if flagged:
        logger.warning(f"{flagged} caminhos explodiram na verificação MC (M_T=0)")
    logger.debug(f"E[M_T] = {mean:.6f} +- {se:.2e} (T={T:g}, n={n_paths})")
    return MartingaleCheck(mean, se, flagged, n_paths)


def _explosion_levels(model: DiffusionModel, xi: float, settings: Settings) -> Dict[int, np.ndarray]:
    iv = model.domain.intervals[0]
    steps = np.arange(settings.explosion_levels)
    levels = {}
    for side, end, finite in ((1, iv.right, iv.right_finite), (-1, iv.left, iv.left_finite)):
        if finite:
            levels[side] = xi + (end - xi) * (1.0 - 2.0 ** -(steps + 1.0))
        else:
            levels[side] = xi + side * settings.explosion_start * 2.0**steps
    return levels


def _explosion_side(
    model: DiffusionModel, xi: float, side: int, levels: np.ndarray, settings: Settings
) -> Tuple[str, List[float]]:
    """
    Integral de Feller v = int s(y) int 2/(a s) dz dy rumo a uma fronteira.

    Integrada como EDO: w' = -(2k/a) w + 2/a, v' = w (espelhada à esquerda).
    """
    coefficients = scalar_coefficients(model)
    limit = settings.divergence_threshold * 1e200

    def rhs(x: float, y: np.ndarray) -> List[float]:
        a, k, _ = coefficients(x)
        w = y[0]
        return [-(2.0 * k / a) * w + side * 2.0 / a, side * w]

    def overflow(x: float, y: np.ndarray) -> float:
        return limit - max(abs(y[0]), abs(y[1]))

    overflow.terminal = True  # type: ignore[attr-defined]

    sol = solve_ivp(
        rhs,
        (xi, float(levels[-1])),
        [0.0, 0.0],
        method="LSODA",
        t_eval=levels,
        rtol=1e-8,
        atol=1e-12,
        events=overflow,
    )
    values = [float(v) for v in sol.y[1]]
    if sol.status == 1:
        return DIVERGES, values + [float("inf")]
    if sol.status < 0 or len(values) < 2:
        return UNSETTLED, values
    last, prev = values[-1], values[-2]
    if last > settings.divergence_threshold and (last - prev) >= settings.divergence_growth * prev:
        return DIVERGES, values
    if abs(last - prev) <= settings.convergence_rel * abs(last):
        return CONVERGES, values
    return UNSETTLED, values


def explosion_test_1d(
    transformed: Dynamics, xi: Optional[float] = None, settings: Optional[Settings] = None
) -> AdmissibilityCertificate:
    """
    Teste de explosão da difusão 1D (transformada) nas duas fronteiras.

    Admissível se a integral de Feller diverge dos dois lados; não
    admissível se converge em algum; inconclusivo caso contrário.
    """
    settings = settings if settings is not None else get_settings()
    model = as_model(transformed)
    if model.dim != 1:
        raise UsageError("Teste de explosão só existe em 1D")
    xi = float(model.reference[0]) if xi is None else float(xi)
    levels = _explosion_levels(model, xi, settings)
    details: Dict[str, object] = {}
    outcomes = {}
    for side, name in ((-1, "left"), (1, "right")):
        outcome, values = _explosion_side(model, xi, side, levels[side], settings)
        outcomes[name] = outcome
        details[f"{name}_outcome"] = outcome
        details[f"{name}_integral"] = values[-1] if values else None

    notes = [f"fronteira {name}: {outcome}" for name, outcome in outcomes.items()]
    if any(o == CONVERGES for o in outcomes.values()):
        verdict = NOT_ADMISSIBLE
    elif all(o == DIVERGES for o in outcomes.values()):
        verdict = ADMISSIBLE
    else:
        verdict = INCONCLUSIVE
        logger.warning(f"Teste de explosão inconclusivo para {model.name}: {outcomes}")
    return AdmissibilityCertificate(
        verdict=verdict, method="explosion_test", notes=notes, details=details
    )


def certify(
    model: DiffusionModel,
    pair: CandidatePair,
    grid: Optional[np.ndarray] = None,
    T: Optional[float] = None,
    n_paths: Optional[int] = None,
    seed: Optional[int] = None,
    settings: Optional[Settings] = None,
) -> AdmissibilityCertificate:
    """
    Certifica um par candidato.

    O resíduo da EDP é verificado primeiro; pares que não resolvem a
    equação são rejeitados com a razão "not a solution". Em seguida roda
    o teste de explosão (N = 1) e a verificação MC; o veredito é
    admissível apenas se todos os métodos passam.
    """
    settings = settings if settings is not None else get_settings()
    points = model.domain.sample_grid() if grid is None else np.asarray(grid, dtype=float).reshape(-1, model.dim)
    try:
        residual = pde_residual(model, pair, points)
    except ModelError as e:
        return AdmissibilityCertificate(
            verdict=NOT_ADMISSIBLE, method="monte_carlo", reason="not a solution", notes=[str(e)]
        )
    if not residual <= settings.residual_tol:
        logger.info(f"Par rejeitado: resíduo {residual:.3e} > {settings.residual_tol:g}")
        return AdmissibilityCertificate(
            verdict=NOT_ADMISSIBLE,
            method="monte_carlo",
            residual=residual,
            reason="not a solution",
            notes=[f"resíduo {residual:.3e} acima da tolerância {settings.residual_tol:g}"],
        )
    try:
        pair.check_positive(points)
    except PositivityError as e:
        return AdmissibilityCertificate(
            verdict=NOT_ADMISSIBLE, method="monte_carlo", residual=residual,
            reason="not positive", notes=[str(e)],
        )

    notes: List[str] = []
    details: Dict[str, object] = {}
    explosion = None
    if model.dim == 1:
        explosion = explosion_test_1d(h_transform(model, pair, points), settings=settings)
        notes.extend(explosion.notes)
        details.update(explosion.details)

    check = martingale_check_mc(
        model,
        pair,
        settings.certify_T if T is None else T,
        settings.certify_paths if n_paths is None else n_paths,
        settings.certify_seed if seed is None else seed,
        settings=settings,
    )
    band = settings.certify_z * check.std_error + 1e-12
    mc_pass = abs(check.mean - 1.0) <= band
    notes.append(f"E[M_T] = {check.mean:.6f} +- {check.std_error:.2e} ({'ok' if mc_pass else 'falhou'})")
    details["flagged_paths"] = check.flagged
    details["n_paths"] = check.n_paths

    if not mc_pass or (explosion is not None and explosion.verdict == NOT_ADMISSIBLE):
        verdict = NOT_ADMISSIBLE
    elif explosion is not None and explosion.verdict == INCONCLUSIVE:
        verdict = INCONCLUSIVE
    else:
        verdict = ADMISSIBLE
    certificate = AdmissibilityCertificate(
        verdict=verdict,
        method="both" if explosion is not None else "monte_carlo",
        mean=check.mean,
        std_error=check.std_error,
        residual=residual,
        notes=notes,
        details=details,
    )
    logger.info(f"Certificado de {pair.h.label or 'h'} em {model.name}: {verdict}")
    return certificate
