#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Simulação de caminhos de difusões e estimadores derivados.

Euler-Maruyama com fluxos Philox por bloco de caminhos: o bloco b usa a
semente (seed, b) e consome sempre o mesmo número de normais por passo,
de modo que o resultado não depende do número de threads. Modelos de
coeficientes constantes são integrados exatamente a partir do browniano
acumulado.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from rossify.core.fields import ScalarField, State, as_points
from rossify.core.model import DiffusionModel, Dynamics, as_model
from rossify.utils.config import Settings, get_settings
from rossify.utils.exceptions import UsageError
from rossify.utils.logger import get_logger

logger = get_logger(__name__)

SCHEME_AUTO = "auto"
SCHEME_EULER = "euler"


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """
    Conjunto de caminhos simulados.

    ``states`` e ``int_r`` guardam apenas os instantes de ``times``;
    ``hit`` vale -1/+1 para caminhos absorvidos na barreira esquerda/direita.
    """

    n_paths: int
    dt: float
    T: float
    seed: int
    times: np.ndarray
    states: np.ndarray
    int_r: np.ndarray
    brownian: np.ndarray
    hit: np.ndarray
    hit_time: np.ndarray
    flagged: np.ndarray
    antithetic: bool
    block_sizes: Tuple[int, ...]
    x0: np.ndarray = field(default_factory=lambda: np.zeros(1))

    @property
    def dim(self) -> int:
        return self.states.shape[2]

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]

    def pair_means(self, values: np.ndarray) -> np.ndarray:
        """Médias por unidade independente (pares antitéticos ou caminhos)."""
        values = np.asarray(values, dtype=float)
        if not self.antithetic:
            return values
        out = []
        start = 0
        for size in self.block_sizes:
            half = size // 2
            out.append(0.5 * (values[start : start + half] + values[start + half : start + size]))
            start += size
        return np.concatenate(out)

    def mean_and_se(self, values: np.ndarray) -> Tuple[float, float]:
        """Média amostral e erro padrão (a partir das médias dos pares)."""
        units = self.pair_means(values)
        if units.size == 0:
            raise UsageError("Nenhum caminho para estimar a média")
        if np.all(units == units[0]):
            return float(units[0]), 0.0
        mean = float(np.mean(units))
        se = float(np.std(units, ddof=1) / np.sqrt(units.size)) if units.size > 1 else 0.0
        return mean, se


class _BlockJob(NamedTuple):
    index: int
    size: int


class _BlockResult(NamedTuple):
    states: np.ndarray
    int_r: np.ndarray
    brownian: np.ndarray
    hit: np.ndarray
    hit_time: np.ndarray
    flagged: np.ndarray


def _step_grid(T: float, dt: float) -> int:
    if not T > 0:
        raise UsageError(f"Horizonte T deve ser positivo (T={T})", field="T")
    if not dt > 0:
        raise UsageError(f"Passo dt deve ser positivo (dt={dt})", field="dt")
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * T:
        raise UsageError(f"dt={dt} não divide T={T}", field="dt")
    return n


def _record_steps(record_times: Optional[Sequence[float]], T: float, n: int) -> List[int]:
    if record_times is None:
        return [0, n]
    steps = []
    for t in record_times:
        i = int(round(float(t) / T * n))
        if i < 0 or i > n or abs(T * i / n - float(t)) > 1e-9 * max(T, 1.0):
            raise UsageError(f"Instante {t} não pertence à malha de passos", field="record_times")
        steps.append(i)
    if any(b <= a for a, b in zip(steps, steps[1:])):
        raise UsageError("Instantes registrados devem ser crescentes", field="record_times")
    return steps


def simulate_paths(
    dynamics: Dynamics,
    x0: State,
    T: float,
    dt: Optional[float] = None,
    n_paths: int = 1000,
    seed: int = 0,
    record_times: Optional[Sequence[float]] = None,
    barriers: Optional[Tuple[float, float]] = None,
    antithetic: Optional[bool] = None,
    scheme: str = SCHEME_AUTO,
    settings: Optional[Settings] = None,
) -> PathEnsemble:
    """
    Simula o SDE dX = k(X)dt + sigma(X)dW por Euler-Maruyama.

    Args:
        dynamics: Modelo neutro ao risco ou dinâmica transformada.
        x0: Estado inicial (interior).
        T: Horizonte.
        dt: Passo; deve dividir T (padrão T / mc_steps).
        n_paths: Número de caminhos.
        seed: Semente.
        record_times: Instantes guardados (padrão 0 e T).
        barriers: Barreiras absorventes (lo, hi) em 1D.
        antithetic: Usa pares antitéticos (padrão da configuração;
            desligado se n_paths for ímpar).
        scheme: "auto" (exato para coeficientes constantes) ou "euler".
        settings: Configurações.

    Returns:
        PathEnsemble determinístico para os mesmos argumentos.
    """
    settings = settings if settings is not None else get_settings()
    model = as_model(dynamics)
    dt = T / settings.mc_steps if dt is None else float(dt)
    n_steps = _step_grid(T, dt)
    if n_paths < 1:
        raise UsageError("n_paths deve ser >= 1", field="paths")
    if scheme not in (SCHEME_AUTO, SCHEME_EULER):
        raise UsageError(f"Esquema desconhecido: {scheme}", field="scheme")
    start, _ = as_points(x0, model.dim)
    start = start[0]
    model.domain.require_interior(start[None, :])
    if barriers is not None:
        if model.dim != 1:
            raise UsageError("Barreiras só são suportadas em 1D", field="barriers")
        lo, hi = barriers
        if not lo < start[0] < hi:
            raise UsageError(f"x0={start[0]} fora das barreiras ({lo}, {hi})", field="barriers")
    steps = _record_steps(record_times, T, n_steps)

    use_antithetic = settings.antithetic if antithetic is None else bool(antithetic)
    block = settings.mc_block
    if use_antithetic and (n_paths % 2 or block % 2):
        logger.debug("Variáveis antitéticas desligadas (número ímpar de caminhos)")
        use_antithetic = False

    exact = scheme == SCHEME_AUTO and model.drift.constant is not None and model.sigma.constant is not None
    jobs = [
        _BlockJob(b, min(block, n_paths - b * block))
        for b in range((n_paths + block - 1) // block)
    ]

    def run(job: _BlockJob) -> _BlockResult:
        return _simulate_block(
            model, start, T, n_steps, steps, seed, job, block, use_antithetic, exact, barriers
        )

    workers = max(1, min(settings.threads, len(jobs)))
    if workers == 1:
        results = [run(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(run, jobs))

    ensemble = PathEnsemble(
        n_paths=n_paths,
        dt=dt,
        T=float(T),
        seed=int(seed),
        times=np.array([T * i / n_steps for i in steps]),
        states=np.concatenate([r.states for r in results], axis=1),
        int_r=np.concatenate([r.int_r for r in results], axis=1),
        brownian=np.concatenate([r.brownian for r in results], axis=0),
        hit=np.concatenate([r.hit for r in results]),
        hit_time=np.concatenate([r.hit_time for r in results]),
        flagged=np.concatenate([r.flagged for r in results]),
        antithetic=use_antithetic,
        block_sizes=tuple(job.size for job in jobs),
        x0=start.copy(),
    )
    n_flagged = int(ensemble.flagged.sum())
    if n_flagged:
        logger.warning(f"{n_flagged} caminhos com valores não finitos em {model.name}")
    logger.debug(
        f"Simulados {n_paths} caminhos de {model.name}: T={T:g}, dt={dt:g}, "
        f"{'exato' if exact else 'Euler'}, {workers} threads"
    )
    return ensemble


def _simulate_block(
    model: DiffusionModel,
    x0: np.ndarray,
    T: float,
    n_steps: int,
    record_steps: List[int],
    seed: int,
    job: _BlockJob,
    block: int,
    antithetic: bool,
    exact: bool,
    barriers: Optional[Tuple[float, float]],
) -> _BlockResult:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), job.index])))
    m, n = job.size, x0.shape[0]
    draws = block // 2 if antithetic else block
    dt = T / n_steps
    sqrt_dt = np.sqrt(dt)

    x = np.tile(x0, (m, 1))
    w = np.zeros((m, n))
    int_r = np.zeros(m)
    active = np.ones(m, dtype=bool)
    flagged = np.zeros(m, dtype=bool)
    hit = np.zeros(m, dtype=int)
    hit_time = np.full(m, np.nan)

    drift_c = model.drift.constant
    sigma_c = model.sigma.constant
    rate_c = model.rate.constant
    r_prev = None if rate_c is not None else model.rate.raw(x)

    slots = {s: i for i, s in enumerate(record_steps)}
    rec_states = np.empty((len(record_steps), m, n))
    rec_r = np.empty((len(record_steps), m))
    if 0 in slots:
        rec_states[slots[0]] = x
        rec_r[slots[0]] = 0.0

    for i in range(1, n_steps + 1):
        z = rng.standard_normal((draws, n))
        if antithetic:
            z = np.concatenate([z[: m // 2], -z[: m // 2]])
        else:
            z = z[:m]
        dw = sqrt_dt * z
        t = T * i / n_steps
        idx = np.nonzero(active)[0]
        if idx.size:
            w[idx] += dw[idx]
            with np.errstate(all="ignore"):
                if exact:
                    x[idx] = x0 + drift_c * t + w[idx] @ sigma_c.T
                else:
                    xa = x[idx]
                    k = model.drift.raw(xa) if drift_c is None else drift_c
                    if sigma_c is None:
                        shock = np.einsum("mij,mj->mi", model.sigma.raw(xa), dw[idx])
                    else:
                        shock = dw[idx] @ sigma_c.T
                    x[idx] = xa + k * dt + shock
                bad = ~np.all(np.isfinite(x[idx]), axis=1)
                if rate_c is not None:
                    int_r[idx] = rate_c * t
                else:
                    r_new = model.rate.raw(x[idx])
                    int_r[idx] += 0.5 * (r_prev[idx] + r_new) * dt
                    r_prev[idx] = r_new
                    bad |= ~np.isfinite(r_new)
            if np.any(bad):
                lost = idx[bad]
                flagged[lost] = True
                active[lost] = False
                x[lost] = np.nan
            if barriers is not None:
                lo, hi = barriers
                live = idx[~bad]
                left = live[x[live, 0] <= lo]
                right = live[x[live, 0] >= hi]
                hit[left], hit[right] = -1, 1
                hit_time[left] = t
                hit_time[right] = t
                active[left] = False
                active[right] = False
        if i in slots:
            rec_states[slots[i]] = x
            rec_r[slots[i]] = int_r
    return _BlockResult(rec_states, rec_r, w, hit, hit_time, flagged)


@dataclass(frozen=True)
class EscapeStatistics:
    """Frequências de saída por fronteira ou direção."""

    labels: Tuple[str, ...]
    frequencies: np.ndarray
    std_errors: np.ndarray
    decided: int
    total: int
    low_power: bool


def escape_statistics(
    ensemble: PathEnsemble,
    directions: Optional[Sequence[Sequence[float]]] = None,
    settings: Optional[Settings] = None,
) -> EscapeStatistics:
    """
    Frequências de saída com erros padrão binomiais.

    Em 1D usa os registros de barreira (esquerda/direita); em N-D classifica
    X_T/|X_T| pela direção mais próxima entre ``directions``.
    """
    settings = settings if settings is not None else get_settings()
    valid = ~ensemble.flagged
    if directions is None:
        if ensemble.dim != 1:
            raise UsageError("Estatísticas N-D exigem a lista de direções", field="directions")
        labels: Tuple[str, ...] = ("left", "right")
        decided_mask = valid & (ensemble.hit != 0)
        counts = np.array(
            [np.sum(decided_mask & (ensemble.hit == -1)), np.sum(decided_mask & (ensemble.hit == 1))]
        )
    else:
        dirs = np.asarray(directions, dtype=float).reshape(len(directions), -1)
        if dirs.shape[1] != ensemble.dim:
            raise UsageError("Direções com dimensão incompatível", field="directions")
        dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
        terminal = ensemble.terminal
        norms = np.linalg.norm(np.where(valid[:, None], terminal, 0.0), axis=1)
        decided_mask = valid & (norms > 0)
        unit = terminal[decided_mask] / norms[decided_mask][:, None]
        nearest = np.argmax(unit @ dirs.T, axis=1) if unit.size else np.array([], dtype=int)
        counts = np.bincount(nearest, minlength=dirs.shape[0])
        labels = tuple("(" + ", ".join(f"{g:.6g}" for g in d) + ")" for d in dirs)
    decided = int(decided_mask.sum())
    if decided:
        freqs = counts / decided
        ses = np.sqrt(freqs * (1.0 - freqs) / decided)
    else:
        freqs = np.zeros(len(labels))
        ses = np.zeros(len(labels))
    low_power = decided < settings.min_decided
    if low_power:
        logger.warning(
            f"Poucos caminhos decididos ({decided} < {settings.min_decided}): estatística de baixa potência"
        )
    return EscapeStatistics(labels, freqs, ses, decided, ensemble.n_paths, low_power)


def escape_barriers(model: DiffusionModel, settings: Optional[Settings] = None) -> Tuple[float, float]:
    """Barreiras absorventes a 99% do domínio truncado em torno de xi."""
    settings = settings if settings is not None else get_settings()
    if model.dim != 1:
        raise UsageError("Barreiras só são definidas em 1D")
    iv = model.domain.intervals[0]
    xi = iv.reference
    lo, hi = iv.window(settings.truncation, center=xi)
    f = settings.escape_fraction
    return xi + f * (lo - xi), xi + f * (hi - xi)


@dataclass(frozen=True)
class YieldCurve:
    """Preços de zero-cupom, yields e extrapolação de cauda."""

    times: np.ndarray
    prices: np.ndarray
    price_se: np.ndarray
    yields: np.ndarray
    yield_se: np.ndarray
    tail_yield: float

    def rows(self) -> List[Tuple[float, float, float, float]]:
        return [
            (float(t), float(p), float(y), float(s))
            for t, p, y, s in zip(self.times, self.prices, self.yields, self.yield_se)
        ]


def _tail(times: np.ndarray) -> slice:
    n = len(times)
    return slice(n // 2 if n >= 4 else max(0, n - 2), n)


def long_term_yield(
    model: DiffusionModel,
    T_grid: Sequence[float],
    n_paths: int,
    seed: int,
    x0: Optional[State] = None,
    dt: Optional[float] = None,
    antithetic: Optional[bool] = None,
    settings: Optional[Settings] = None,
) -> YieldCurve:
    """
    Yield -(1/T) log E^Q[exp(-int r)] por Monte Carlo em cada horizonte.

    Uma única simulação registra todos os horizontes; a extrapolação ajusta
    -log P = y T + c por mínimos quadrados na metade final da malha.
    """
    settings = settings if settings is not None else get_settings()
    times = np.asarray(T_grid, dtype=float)
    if times.size == 0:
        raise UsageError("Malha de horizontes vazia", field="T_grid")
    if np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise UsageError("Horizontes devem ser positivos e crescentes", field="T_grid")
    dt = settings.yield_dt if dt is None else dt
    start = model.reference if x0 is None else x0
    ensemble = simulate_paths(
        model, start, float(times[-1]), dt, n_paths, seed,
        record_times=list(times), antithetic=antithetic, settings=settings,
    )
    prices, price_se = [], []
    for i in range(times.size):
        discount = np.exp(-ensemble.int_r[i])
        discount[ensemble.flagged] = 0.0
        p, se = ensemble.mean_and_se(discount)
        prices.append(p)
        price_se.append(se)
    prices_a = np.array(prices)
    se_a = np.array(price_se)
    yields = -np.log(prices_a) / times
    yield_se = se_a / (prices_a * times)
    tail = _tail(times)
    if times[tail].size >= 2:
        tail_yield = float(np.polyfit(times[tail], -np.log(prices_a[tail]), 1)[0])
    else:
        tail_yield = float(yields[-1])
    logger.info(f"Yield de longo prazo de {model.name}: {tail_yield:.8g}")
    return YieldCurve(times, prices_a, se_a, yields, yield_se, tail_yield)


def bond_price_pde(
    model: DiffusionModel,
    T: float,
    x0: Optional[float] = None,
    half_width: float = 10.0,
    n_space: int = 2001,
    n_time: int = 2000,
) -> float:
    """
    Preço de zero-cupom pela EDP u_t = 1/2 a u'' + k u' - r u (Crank-Nicolson).

    Condições de Dirichlet exp(-r(x_b) t) nas bordas da janela x0 +- half_width.
    """
    if model.dim != 1:
        raise UsageError("EDP de preço implementada apenas em 1D")
    if not T > 0:
        raise UsageError("T deve ser positivo", field="T")
    iv = model.domain.intervals[0]
    center = iv.reference if x0 is None else float(x0)
    lo, hi = center - half_width, center + half_width
    if iv.left_finite:
        lo = max(lo, iv.left + 1e-3 * (center - iv.left))
    if iv.right_finite:
        hi = min(hi, iv.right - 1e-3 * (iv.right - center))
    xs = np.linspace(lo, hi, n_space)
    h = xs[1] - xs[0]
    points = xs[:, None]
    a = model.diffusion(points)[:, 0, 0]
    k = model.drift.values(points)[:, 0]
    r = model.rate.values(points)

    inner = slice(1, -1)
    lower = 0.5 * a[inner] / h**2 - 0.5 * k[inner] / h
    diag = -a[inner] / h**2 - r[inner]
    upper = 0.5 * a[inner] / h**2 + 0.5 * k[inner] / h
    m = n_space - 2
    op = sparse.diags([lower[1:], diag, upper[:-1]], [-1, 0, 1], shape=(m, m), format="csc")
    tau = T / n_time
    eye = sparse.identity(m, format="csc")
    lhs = splu((eye - 0.5 * tau * op).tocsc())
    rhs_op = (eye + 0.5 * tau * op).tocsr()

    u = np.ones(m)
    r_lo, r_hi = r[0], r[-1]
    for j in range(n_time):
        t0, t1 = j * tau, (j + 1) * tau
        b = rhs_op @ u
        b[0] += 0.5 * tau * lower[0] * (np.exp(-r_lo * t0) + np.exp(-r_lo * t1))
        b[-1] += 0.5 * tau * upper[-1] * (np.exp(-r_hi * t0) + np.exp(-r_hi * t1))
        u = lhs.solve(b)
    full = np.concatenate([[np.exp(-r_lo * T)], u, [np.exp(-r_hi * T)]])
    return float(np.interp(center, xs, full))


def price_claim(
    model: DiffusionModel,
    f: ScalarField,
    x0: State,
    T: float,
    n_paths: int,
    seed: int,
    dt: Optional[float] = None,
    settings: Optional[Settings] = None,
) -> Tuple[float, float]:
    """P_T f(x0) = E^Q[exp(-int_0^T r) f(X_T)] com erro padrão."""
    ensemble = simulate_paths(model, x0, T, dt, n_paths, seed, settings=settings)
    payoff = _payoff(f, ensemble.terminal, ensemble.flagged)
    return ensemble.mean_and_se(np.exp(-ensemble.int_r[-1]) * payoff)


def _payoff(f: ScalarField, states: np.ndarray, flagged: np.ndarray) -> np.ndarray:
    safe = np.where(flagged[:, None], 0.0, states)
    with np.errstate(all="ignore"):
        values = f.raw(safe)
    values = np.where(flagged | ~np.isfinite(values), 0.0, values)
    return values


@dataclass(frozen=True)
class CashflowCurve:
    """Curva e^{beta t} p_t, limite de cauda e diagnósticos."""

    times: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray
    limit: Optional[float]
    limit_se: float
    slope: float
    converged: bool
    reference: Optional[float]
    max_ratio: np.ndarray
    estimator: str
    notes: List[str] = field(default_factory=list)

    def rows(self) -> List[Tuple[float, float, float, float]]:
        return [
            (float(t), float(v), float(s), float(m))
            for t, v, s, m in zip(self.times, self.values, self.std_errors, self.max_ratio)
        ]


ESTIMATOR_RISK_NEUTRAL = "risk_neutral"
ESTIMATOR_RECOVERED = "recovered"


def cashflow_rate(
    model: DiffusionModel,
    f: ScalarField,
    recovered: Any,
    T_grid: Sequence[float],
    n_paths: int,
    seed: int,
    x0: Optional[State] = None,
    estimator: str = ESTIMATOR_RISK_NEUTRAL,
    dt: Optional[float] = None,
    settings: Optional[Settings] = None,
) -> CashflowCurve:
    """
    Curva e^{beta t} p_t com p_t = P_t f(x) e seu limite de cauda.

    Args:
        model: Modelo neutro ao risco.
        f: Payoff.
        recovered: Medida recuperada (fornece beta, phi e a fronteira).
        T_grid: Horizontes crescentes.
        n_paths: Número de caminhos.
        seed: Semente.
        x0: Estado inicial (padrão xi).
        estimator: "risk_neutral" (MC sob Q) ou "recovered"
            (phi(x) E^P[(f/phi)(X_t)]).
        dt: Passo de simulação.
        settings: Configurações.

    Returns:
        CashflowCurve; ``limit`` é None se a cauda não convergir.
    """
    from rossify.core.recovery import boundary_value_reference

    settings = settings if settings is not None else get_settings()
    times = np.asarray(T_grid, dtype=float)
    if times.size == 0 or np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise UsageError("Horizontes devem ser positivos e crescentes", field="T_grid")
    if estimator not in (ESTIMATOR_RISK_NEUTRAL, ESTIMATOR_RECOVERED):
        raise UsageError(f"Estimador desconhecido: {estimator}", field="estimator")
    beta = recovered.principal.lam
    phi = recovered.principal.h
    start = np.asarray(recovered.xi if x0 is None else x0, dtype=float)
    dt = settings.yield_dt if dt is None else dt
    dynamics = model if estimator == ESTIMATOR_RISK_NEUTRAL else recovered.dynamics
    ensemble = simulate_paths(
        dynamics, start, float(times[-1]), dt, n_paths, seed,
        record_times=list(times), settings=settings,
    )
    phi_x = float(phi.values(as_points(start, model.dim)[0])[0])

    values, ses, max_ratio = [], [], []
    for i, t in enumerate(times):
        states = ensemble.states[i]
        payoff = _payoff(f, states, ensemble.flagged)
        weight = _payoff(phi, states, ensemble.flagged)
        with np.errstate(all="ignore"):
            ratio = np.where(weight > 0, payoff / weight, 0.0)
        max_ratio.append(float(np.max(np.abs(ratio))))
        if estimator == ESTIMATOR_RISK_NEUTRAL:
            sample = np.exp(beta * t - ensemble.int_r[i]) * payoff
        else:
            sample = phi_x * ratio
        mean, se = ensemble.mean_and_se(sample)
        values.append(mean)
        ses.append(se)

    values_a, ses_a, ratio_a = np.array(values), np.array(ses), np.array(max_ratio)
    tail = _tail(times)
    tail_t = times[tail]
    limit = float(np.mean(values_a[tail]))
    limit_se = float(np.mean(ses_a[tail]))
    slope = float(np.polyfit(tail_t, values_a[tail], 1)[0]) if tail_t.size >= 2 else 0.0
    span = float(tail_t[-1] - tail_t[0]) if tail_t.size >= 2 else 0.0
    converged = abs(slope * span) <= settings.cashflow_slope_tol * abs(limit) + 3.0 * limit_se

    notes: List[str] = []
    if ratio_a[-1] > 10.0 * max(ratio_a[0], 1e-300):
        notes.append(f"max|f/phi| cresce ao longo dos caminhos ({ratio_a[0]:.3g} -> {ratio_a[-1]:.3g})")
        logger.warning(notes[-1])
    if not converged:
        notes.append(f"curva não convergente: inclinação {slope:.3e} na cauda")
        logger.warning(notes[-1])

    try:
        reference = boundary_value_reference(recovered, f, start, settings)
    except UsageError as e:
        reference = None
        notes.append(f"referência indisponível: {e}")

    return CashflowCurve(
        times=times,
        values=values_a,
        std_errors=ses_a,
        limit=limit if converged else None,
        limit_se=limit_se,
        slope=slope,
        converged=bool(converged),
        reference=reference,
        max_ratio=ratio_a,
        estimator=estimator,
        notes=notes,
    )


def strong_error(
    model: DiffusionModel,
    exact: Any,
    x0: State,
    T: float,
    dt: float,
    n_paths: int,
    seed: int,
    settings: Optional[Settings] = None,
) -> float:
    """
    Erro forte E|X_T^Euler - X_T| contra a solução exata no mesmo browniano.

    ``exact(x0, T, W_T)`` devolve o estado exato (n_paths, N).
    """
    ensemble = simulate_paths(
        model, x0, T, dt, n_paths, seed, antithetic=False, scheme=SCHEME_EULER, settings=settings
    )
    target = np.asarray(exact(ensemble.x0, T, ensemble.brownian), dtype=float).reshape(
        ensemble.terminal.shape
    )
    valid = ~ensemble.flagged
    return float(np.mean(np.linalg.norm(ensemble.terminal[valid] - target[valid], axis=1)))


def terminal_summary(ensemble: PathEnsemble) -> Dict[str, Union[float, List[float]]]:
    """Média, erro padrão e variância de X_T por coordenada."""
    means, ses, variances = [], [], []
    for j in range(ensemble.dim):
        values = np.where(ensemble.flagged, np.nan, ensemble.terminal[:, j])
        valid = values[~np.isnan(values)]
        m, s = ensemble.mean_and_se(np.nan_to_num(values))
        means.append(m)
        ses.append(s)
        variances.append(float(np.var(valid, ddof=1)) if valid.size > 1 else 0.0)
    return {"mean": means, "se": ses, "var": variances, "flagged": int(ensemble.flagged.sum())}
