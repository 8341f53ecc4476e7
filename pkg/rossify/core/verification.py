#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Bateria de verificações de invariantes para um modelo (comando ``verify``).

Cada verificação devolve um CheckResult; falhas numéricas viram
verificações reprovadas em vez de interromper a bateria.
"""

from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from rossify.core.martin_nd import (
    OUSpec,
    constcoef_reduce,
    domain_box,
    martin_metric,
    ou_covariance,
    ou_kernel,
)
from rossify.core.model import CandidatePair, DiffusionModel, pde_residual
from rossify.core.recovery import (
    limiting_distribution,
    recover_direction_nd,
    recover_mixture_1d,
    recover_recurrent_1d,
)
from rossify.core.simulate import long_term_yield
from rossify.core.sturm1d import (
    CRITICAL,
    boundary_solutions,
    classify_criticality,
    critical_beta,
)
from rossify.utils.config import Settings, get_settings
from rossify.utils.exceptions import RossifyError
from rossify.utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: Optional[float] = None
    threshold: Optional[float] = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "threshold": self.threshold,
            "detail": self.detail,
        }


Check = Callable[[], CheckResult]


def _run(name: str, check: Check) -> CheckResult:
    try:
        result = check()
    except RossifyError as e:
        logger.warning(f"Verificação {name} falhou com erro: {e}")
        return CheckResult(name, False, detail=f"{type(e).__name__}: {e}")
    level = logger.info if result.passed else logger.warning
    level(f"Verificação {name}: {'ok' if result.passed else 'falhou'} ({result.value})")
    return result


def _at_most(name: str, value: float, threshold: float, detail: str = "") -> CheckResult:
    return CheckResult(name, bool(value <= threshold), float(value), float(threshold), detail)


def _checks_1d(model: DiffusionModel, settings: Settings) -> List[Tuple[str, Check]]:
    xi = float(model.reference[0])
    state = {}

    def beta_bar() -> CheckResult:
        beta = critical_beta(model, settings=settings)
        state["beta"] = beta
        report = classify_criticality(model, beta, settings=settings)
        return CheckResult(
            "critical_beta", report.klass == CRITICAL, beta, None, report.witness
        )

    def kernels() -> CheckResult:
        beta = 0.5 * state.get("beta", 0.0)
        grid = model.domain.sample_grid()
        worst = 0.0
        bs = boundary_solutions(model, beta, xi, settings)
        for solution in (bs.u_left, bs.u_right):
            field = solution.as_field(model)
            worst = max(worst, pde_residual(model, CandidatePair(beta, field), grid))
            worst = max(worst, abs(solution(xi) - 1.0))
        return _at_most("kernel_residual", worst, settings.residual_tol, f"beta={beta:g}")

    def recurrent() -> CheckResult:
        recovered = recover_recurrent_1d(model, settings)
        return CheckResult(
            "recurrent_recovery",
            recovered.certificate.admissible,
            recovered.beta,
            None,
            recovered.certificate.verdict,
        )

    def mixture() -> CheckResult:
        beta = 0.5 * state.get("beta", 0.0)
        recovered = recover_mixture_1d(model, beta, 0.5, 0.5, settings)
        gaps = [abs(limiting_distribution(recovered, x, None) - 1.0) for x in (xi - 1.0, xi, xi + 1.0)
                if model.domain.contains(np.array([[x]]))[0]]
        half = limiting_distribution(recovered, xi, "left")
        gaps.append(abs(half - 0.5))
        return _at_most("limiting_distribution", max(gaps), 1e-12)

    return [
        ("critical_beta", beta_bar),
        ("kernel_residual", kernels),
        ("recurrent_recovery", recurrent),
        ("limiting_distribution", mixture),
    ]


def _checks_constant(model: DiffusionModel, settings: Settings) -> List[Tuple[str, Check]]:
    a, k, r = model.constant_coefficients()
    # beta com lambda = -1 na forma reduzida
    beta = float(r + 0.5 * k @ np.linalg.solve(a, k) - 1.0)
    gamma = np.zeros(model.dim)
    gamma[0] = 1.0

    def direction() -> CheckResult:
        recovered = recover_direction_nd(model, beta, gamma, settings)
        grid = model.domain.sample_grid()
        drift = recovered.dynamics.drift.values(grid)
        phi = recovered.phi
        analytic = k[None, :] + np.einsum("ij,mj->mi", a, phi.grad_points(grid) / phi.values(grid)[:, None])
        gap = float(np.max(np.abs(drift - analytic)))
        return _at_most("direction_consistency", gap, 1e-10, recovered.certificate.verdict)

    def metric() -> CheckResult:
        reduction = constcoef_reduce(model, beta)
        box = domain_box(model)
        angles = (0.0, 2.0, 4.0)
        kernels = []
        for t in angles:
            g = np.zeros(model.dim)
            g[0], g[1] = np.cos(t), np.sin(t)
            kernels.append(reduction.principal(g))

        def d(i: int, j: int) -> float:
            return martin_metric(kernels[i], kernels[j], box, settings)

        zero = d(0, 0)
        asym = abs(d(0, 1) - d(1, 0))
        triangle = d(0, 2) - d(0, 1) - d(1, 2)
        worst = max(zero, asym, triangle, 0.0)
        return _at_most("metric_axioms", worst, 1e-12)

    checks = [("direction_consistency", direction)]
    if model.dim >= 2:
        checks.append(("metric_axioms", metric))
    return checks


def _checks_ou(model: DiffusionModel, settings: Settings) -> List[Tuple[str, Check]]:
    def lyapunov() -> CheckResult:
        spec = OUSpec(model.drift.linear)
        if not spec.expanding:
            return CheckResult("lyapunov_residual", True, detail="C_B não existe (B não expansiva)")
        C = ou_covariance(spec)
        residual = float(np.max(np.abs(spec.B @ C + C @ spec.B.T - np.eye(2))))
        return _at_most("lyapunov_residual", residual, 1e-10)

    def harmonic() -> CheckResult:
        kernel, _ = ou_kernel(model.drift.linear, [1.0, 0.0], settings)
        grid = model.domain.sample_grid(5, span=2.0)
        residual = pde_residual(model, CandidatePair(float(model.rate.constant), kernel), grid)
        return _at_most("ou_harmonicity", residual, 1e-5)

    return [("lyapunov_residual", lyapunov), ("ou_harmonicity", harmonic)]


def gradient_check(model: DiffusionModel, settings: Optional[Settings] = None) -> CheckResult:
    """Gradiente analítico da taxa contra diferenças centrais com passo ``fd_step``."""
    settings = settings if settings is not None else get_settings()
    grid = model.domain.sample_grid()
    mismatch = model.rate.gradient_mismatch(grid)
    return _at_most(
        "gradient_consistency", mismatch, settings.gradient_tol, f"fd_step={model.rate.fd_step:g}"
    )


def _check_yield(model: DiffusionModel, seed: int, settings: Settings) -> Tuple[str, Check]:
    def constant_yield() -> CheckResult:
        r = float(model.rate.constant)
        curve = long_term_yield(model, [1.0, 2.0], 1000, seed, dt=0.25, settings=settings)
        gap = float(np.max(np.abs(curve.yields - r)))
        return _at_most("constant_rate_yield", gap, 1e-12)

    return ("constant_rate_yield", constant_yield)


def run_verification(
    model: DiffusionModel, seed: int = 0, settings: Optional[Settings] = None
) -> List[CheckResult]:
    """
    Executa as verificações aplicáveis ao modelo.

    1D: beta crítico, resíduo dos núcleos, recuperação recorrente e
    normalização da distribuição limite. Coeficientes constantes:
    consistência da deriva direcional e axiomas da métrica de Martin.
    OU: resíduo de Lyapunov e harmonicidade do núcleo. Taxa constante:
    yield igual a r; taxa por expressão: gradiente analítico contra
    diferenças centrais.
    """
    settings = settings if settings is not None else get_settings()
    checks: List[Tuple[str, Check]] = []
    if model.dim == 1:
        checks.extend(_checks_1d(model, settings))
    elif model.is_constant_coefficient:
        checks.extend(_checks_constant(model, settings))
    if (
        model.drift.linear is not None
        and model.drift.constant is None
        and model.dim == 2
        and model.rate.constant is not None
    ):
        checks.extend(_checks_ou(model, settings))
    if model.rate.constant is None and model.rate.gradient is not None:
        checks.append(("gradient_consistency", lambda: gradient_check(model, settings)))
    if model.rate.constant is not None:
        checks.append(_check_yield(model, seed, settings))
    results = [_run(name, check) for name, check in checks]
    passed = sum(r.passed for r in results)
    logger.info(f"Verificação de {model.name}: {passed}/{len(results)} aprovadas")
    return results
