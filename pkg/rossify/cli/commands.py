#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Implementação dos comandos da CLI.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from rich.console import Console
from rich.table import Table

from rossify.core.admissibility import certify
from rossify.core.fields import ScalarField
from rossify.core.martin_nd import constcoef_reduce, ou_kernel
from rossify.core.model import CandidatePair, DiffusionModel
from rossify.core.recovery import LAMBDA_ZERO_TOL, recover
from rossify.core.simulate import (
    cashflow_rate,
    escape_barriers,
    escape_statistics,
    long_term_yield,
    simulate_paths,
    terminal_summary,
)
from rossify.core.sturm1d import boundary_solutions, classify_criticality, critical_beta
from rossify.core.verification import run_verification
from rossify.io.loader import (
    ensure_dir,
    load_directive,
    load_model,
    load_recovered,
    recovered_record,
    write_csv,
    write_json,
)
from rossify.utils.config import Settings, get_settings
from rossify.utils.exceptions import SearchError, UsageError, VerificationError
from rossify.utils.logger import get_logger

console = Console()
logger = get_logger(__name__)

SIDE_NAMES = {"left": -1, "right": 1}


def _start(model: DiffusionModel, x0: Optional[Sequence[float]]) -> np.ndarray:
    if x0 is None:
        return np.asarray(model.reference, dtype=float)
    if len(x0) != model.dim:
        raise UsageError(f"--x0 com {len(x0)} coordenadas, esperado {model.dim}", field="x0")
    return np.asarray(x0, dtype=float)


def _horizons(horizon: float, points: int) -> List[float]:
    if not horizon > 0:
        raise UsageError(f"--T deve ser positivo (T={horizon})", field="T")
    return [horizon * (i + 1) / points for i in range(points)]


def _reduced_class(model: DiffusionModel, beta: float) -> Tuple[str, str]:
    lam = constcoef_reduce(model, beta).lam
    zero = abs(lam) <= LAMBDA_ZERO_TOL
    if zero and model.dim >= 3:
        return "subcritical", f"lambda=0 com N={model.dim}"
    if zero:
        return "critical", f"lambda=0 com N={model.dim}"
    if lam < 0:
        return "subcritical", f"lambda={lam:.6g} na forma reduzida"
    return "supercritical", f"lambda={lam:.6g} > 0 na forma reduzida"


def run_classify(
    model_ref: str,
    betas: List[float],
    tol: Optional[float],
    out: str,
    settings: Optional[Settings] = None,
) -> Path:
    """Classificação de criticidade em uma malha de beta e o valor crítico."""
    settings = settings if settings is not None else get_settings()
    model = load_model(model_ref, settings=settings)
    console.print(f"[bold green]Classificando:[/] {model.name}")
    rows: List[Dict[str, Any]] = []
    if model.dim == 1:
        try:
            beta_bar: Optional[float] = critical_beta(model, tol, settings=settings)
        except SearchError as e:
            logger.warning(f"Valor crítico não encontrado: {e}")
            beta_bar = None
        grid = betas or ([beta_bar * f for f in (0.5, 0.9, 1.1)] if beta_bar else [0.0])
        for beta in grid:
            report = classify_criticality(model, beta, settings=settings)
            rows.append(report.to_dict())
    elif model.is_constant_coefficient:
        a, k, r = model.constant_coefficients()
        beta_bar = float(r + 0.5 * k @ np.linalg.solve(a, k))
        for beta in betas or [beta_bar - 1.0, beta_bar, beta_bar + 1.0]:
            klass, witness = _reduced_class(model, beta)
            rows.append({"lambda": beta, "class": klass, "witness": witness})
    else:
        raise UsageError("classify exige modelo 1D ou de coeficientes constantes", field="model")

    path = write_json(
        Path(out) / "classify.json", {"model": model.name, "beta_bar": beta_bar, "classes": rows}
    )
    table = Table(title=f"Criticidade de {model.name}", show_header=True)
    table.add_column("beta", style="cyan")
    table.add_column("Classe", style="white")
    for row in rows:
        table.add_row(f"{row['lambda']:.8g}", row["class"])
    console.print(table)
    if beta_bar is not None:
        console.print(f"[bold green]beta crítico:[/] {beta_bar:.10g}")
    console.print(f"[bold green]Resultado salvo em:[/] {path}")
    return path


def run_kernels(
    model_ref: str,
    beta: Optional[float],
    gamma: Optional[Sequence[float]],
    bounds: Sequence[float],
    points: int,
    out: str,
    settings: Optional[Settings] = None,
) -> Path:
    """Tabela CSV de núcleos de Martin."""
    settings = settings if settings is not None else get_settings()
    model = load_model(model_ref, settings=settings)
    axis = np.linspace(bounds[0], bounds[1], points)
    if model.dim == 1:
        if beta is None:
            raise UsageError("kernels em 1D exige --beta", field="beta")
        grid = axis[model.domain.contains(axis[:, None])]
        bs = boundary_solutions(model, beta, settings=settings)
        # k(.;-1) é u_right e k(.;+1) é u_left
        rows = [(float(x), float(bs.u_right(x)), float(bs.u_left(x))) for x in grid]
        header: List[str] = ["x", "k_left", "k_right"]
    else:
        if gamma is None:
            raise UsageError("kernels em N-D exige --gamma", field="gamma")
        mesh = np.meshgrid(*([axis] * model.dim), indexing="ij")
        grid = np.stack([m.reshape(-1) for m in mesh], axis=-1)
        if model.drift.linear is not None and model.drift.constant is None:
            kernel, _ = ou_kernel(model.drift.linear, gamma, settings)
        else:
            if beta is None:
                raise UsageError("kernels com coeficientes constantes exige --beta", field="beta")
            kernel = constcoef_reduce(model, beta).principal(gamma)
        values = kernel.values(grid)
        rows = [tuple(float(c) for c in p) + (float(v),) for p, v in zip(grid, values)]
        header = [f"x{i + 1}" for i in range(model.dim)] + ["k"]
    path = write_csv(Path(out) / "kernels.csv", header, rows)
    console.print(f"[bold green]{len(rows)} valores de núcleo salvos em:[/] {path}")
    return path


def run_certify(
    model_ref: str,
    beta: float,
    h_expr: str,
    horizon: Optional[float],
    paths: Optional[int],
    seed: Optional[int],
    out: str,
    settings: Optional[Settings] = None,
) -> Path:
    """Certificado JSON de um par (beta, h)."""
    settings = settings if settings is not None else get_settings()
    model = load_model(model_ref, settings=settings)
    h = ScalarField.from_expression(h_expr, model.dim, fd_step=settings.fd_step)
    console.print(f"[bold green]Certificando:[/] beta={beta:g}, h={h_expr}")
    certificate = certify(
        model, CandidatePair(beta, h), T=horizon, n_paths=paths, seed=seed, settings=settings
    )
    path = write_json(Path(out) / "certificate.json", certificate)
    style = "green" if certificate.admissible else "yellow"
    console.print(f"[bold {style}]Veredito:[/] {certificate.verdict}")
    for note in certificate.notes:
        console.print(f"  {note}")
    console.print(f"[bold green]Certificado salvo em:[/] {path}")
    return path


def run_recover(
    model_ref: Optional[str],
    directive_path: Optional[str],
    flags: Dict[str, Any],
    out: str,
    settings: Optional[Settings] = None,
) -> Path:
    """Recuperação a partir de um arquivo de diretiva ou das opções."""
    settings = settings if settings is not None else get_settings()
    if directive_path is not None:
        directive = load_directive(directive_path)
    else:
        data = {k: v for k, v in flags.items() if v is not None}
        if "side" in data:
            data["side"] = SIDE_NAMES[data["side"]]
        for key in ("weights", "gamma", "ratio"):
            if key in data:
                data[key] = list(data[key])
        directive = load_directive(data)
    source = model_ref or directive.model_ref
    if source is None:
        raise UsageError("Informe --model ou model_ref na diretiva", field="model")
    model = load_model(source, settings=settings)
    console.print(f"[bold green]Recuperando:[/] {model.name} ({directive.mode})")
    recovered = recover(model, directive, settings)
    record = recovered_record(recovered)
    path = write_json(Path(out) / "recovered.json", record)

    drift = recovered.dynamics.drift.values(recovered.xi[None, :])[0]
    table = Table(title="Medida recuperada", show_header=False)
    table.add_column("Campo", style="cyan")
    table.add_column("Valor", style="white")
    table.add_row("beta", f"{recovered.beta:.10g}")
    table.add_row("phi", recovered.description)
    table.add_row("deriva em xi", str([float(d) for d in drift]))
    table.add_row("mu", ", ".join(f"{p.label}: {w:g}" for p, w in recovered.mu.atoms))
    table.add_row("certificado", recovered.certificate.verdict)
    console.print(table)
    console.print(f"[bold green]Resultado salvo em:[/] {path}")
    return path


def run_simulate(
    model_ref: Optional[str],
    recovered_path: Optional[str],
    horizon: float,
    dt: Optional[float],
    paths: int,
    seed: int,
    x0: Optional[Sequence[float]],
    out: str,
    settings: Optional[Settings] = None,
) -> Path:
    """Simula sob Q (modelo) ou sob P (saída de recover); grava terminal.csv."""
    settings = settings if settings is not None else get_settings()
    if recovered_path is not None:
        recovered = load_recovered(recovered_path, settings)
        dynamics: Any = recovered.dynamics
        model = recovered.dynamics.model
        label = f"{recovered.base.name} sob P"
    else:
        recovered = None
        model = load_model(model_ref, allow_degenerate=True, settings=settings)
        dynamics = model
        label = f"{model.name} sob Q"
    if not horizon > 0:
        raise UsageError(f"--T deve ser positivo (T={horizon})", field="T")
    start = _start(model, x0)
    barriers = escape_barriers(model, settings) if recovered is not None and model.dim == 1 else None
    console.print(f"[bold green]Simulando:[/] {label}, {paths} caminhos, T={horizon:g}")
    ensemble = simulate_paths(dynamics, start, horizon, dt, paths, seed, barriers=barriers, settings=settings)
    summary = terminal_summary(ensemble)
    rows = [
        (j + 1, summary["mean"][j], summary["se"][j], summary["var"][j])
        for j in range(model.dim)
    ]
    target = ensure_dir(out)
    path = write_csv(target / "terminal.csv", ["coordinate", "mean", "se", "var"], rows)

    if recovered is not None:
        directions = None
        if model.dim > 1:
            directions = [p.gamma for p in recovered.mu.points if p.gamma is not None] or None
        if model.dim == 1 or directions:
            stats = escape_statistics(ensemble, directions, settings)
            write_csv(
                target / "escape.csv",
                ["boundary", "frequency", "se"],
                [(lab, f, s) for lab, f, s in zip(stats.labels, stats.frequencies, stats.std_errors)],
            )
            for lab, f, s in zip(stats.labels, stats.frequencies, stats.std_errors):
                console.print(f"  saída {lab}: {f:.4f} +- {s:.4f}")

    for j, (mean, se) in enumerate(zip(summary["mean"], summary["se"])):
        console.print(f"  X{j + 1}(T): {mean:.6g} +- {se:.2g}")
    if summary["flagged"]:
        console.print(f"[yellow]{summary['flagged']} caminhos marcados como explosivos[/yellow]")
    console.print(f"[bold green]Resultado salvo em:[/] {path}")
    return path


def run_yield(
    model_ref: str,
    horizon: float,
    points: int,
    dt: Optional[float],
    paths: int,
    seed: int,
    x0: Optional[Sequence[float]],
    out: str,
    settings: Optional[Settings] = None,
) -> Path:
    """Curva de yields em yield.csv."""
    settings = settings if settings is not None else get_settings()
    model = load_model(model_ref, settings=settings)
    times = _horizons(horizon, points)
    curve = long_term_yield(
        model, times, paths, seed, x0=_start(model, x0), dt=dt, settings=settings
    )
    path = write_csv(Path(out) / "yield.csv", ["t", "price", "yield", "se"], curve.rows())
    console.print(f"[bold green]Yield de longo prazo:[/] {curve.tail_yield:.8g}")
    console.print(f"[bold green]Resultado salvo em:[/] {path}")
    return path


def run_cashflow(
    recovered_path: str,
    payoff: str,
    horizon: float,
    points: int,
    estimator: str,
    dt: Optional[float],
    paths: int,
    seed: int,
    out: str,
    settings: Optional[Settings] = None,
) -> Path:
    """Curva e^{beta t} P_t f em cashflow.csv e resumo em cashflow.json."""
    settings = settings if settings is not None else get_settings()
    recovered = load_recovered(recovered_path, settings)
    model = recovered.base
    f = ScalarField.from_expression(payoff, model.dim, fd_step=settings.fd_step)
    times = _horizons(horizon, points)
    curve = cashflow_rate(
        model, f, recovered, times, paths, seed, estimator=estimator, dt=dt, settings=settings
    )
    target = ensure_dir(out)
    path = write_csv(
        target / "cashflow.csv",
        ["t", "value", "se", "max_ratio"],
        [(t, v, s, m) for t, v, s, m in zip(curve.times, curve.values, curve.std_errors, curve.max_ratio)],
    )
    write_json(
        target / "cashflow.json",
        {
            "estimator": curve.estimator,
            "limit": curve.limit,
            "limit_se": curve.limit_se,
            "slope": curve.slope,
            "converged": curve.converged,
            "reference": curve.reference,
            "notes": list(curve.notes),
        },
    )
    if curve.converged:
        console.print(f"[bold green]Limite:[/] {curve.limit:.6g} +- {curve.limit_se:.2g}")
    else:
        console.print("[yellow]Curva não convergiu na cauda[/yellow]")
    if curve.reference is not None:
        console.print(f"[bold green]Referência na fronteira:[/] {curve.reference:.6g}")
    console.print(f"[bold green]Resultado salvo em:[/] {path}")
    return path


def run_verify(model_ref: str, seed: int, out: str, settings: Optional[Settings] = None) -> Path:
    """
    Bateria de invariantes; falha (saída 1) se alguma verificação reprovar.
    """
    settings = settings if settings is not None else get_settings()
    model = load_model(model_ref, settings=settings)
    console.print(f"[bold green]Verificando:[/] {model.name}")
    results = run_verification(model, seed, settings)
    path = write_json(Path(out) / "verify.json", {"model": model.name, "checks": [r.to_dict() for r in results]})
    table = Table(title=f"Verificações de {model.name}", show_header=True)
    table.add_column("Verificação", style="cyan")
    table.add_column("Resultado", style="white")
    table.add_column("Valor", style="white")
    for r in results:
        table.add_row(
            r.name,
            "[green]ok[/green]" if r.passed else "[red]falhou[/red]",
            "" if r.value is None else f"{r.value:.4g}",
        )
    console.print(table)
    console.print(f"[bold green]Resultado salvo em:[/] {path}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise VerificationError(f"Verificações reprovadas: {', '.join(failed)}")
    return path
