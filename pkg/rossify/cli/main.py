#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Interface de linha de comando principal para o Rossify.
"""

from typing import Any, Callable, Optional, Tuple

import click
from pydantic import ValidationError
from rich.console import Console

from rossify import __version__
from rossify.cli.commands import (
    run_cashflow,
    run_certify,
    run_classify,
    run_kernels,
    run_recover,
    run_simulate,
    run_verify,
    run_yield,
)
from rossify.cli.config_commands import config
from rossify.utils.config import Settings, get_settings
from rossify.utils.exceptions import ConfigError, RecoveryInfeasibleError, RossifyError
from rossify.utils.logger import get_logger, setup_logger

# Mensagens de erro vão para stderr
console = Console(stderr=True)

logger = get_logger(__name__)

EXIT_USAGE = 1
EXIT_INFEASIBLE = 2


class _UsageError(click.UsageError):
    exit_code = EXIT_USAGE


class RossifyGroup(click.Group):
    """Grupo que traduz as exceções do Rossify em códigos de saída."""

    def make_context(self, info_name: Optional[str], args: list, parent: Any = None, **extra: Any) -> click.Context:
        try:
            return super().make_context(info_name, args, parent=parent, **extra)
        except click.UsageError as e:
            if e.exit_code == EXIT_USAGE:
                raise
            raise _UsageError(e.message, e.ctx) from e

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            if e.exit_code == EXIT_USAGE:
                raise
            raise _UsageError(e.message, e.ctx) from e
        except RecoveryInfeasibleError as e:
            logger.error(f"Diretiva inviável: {e}")
            console.print(f"[bold red]Diretiva inviável:[/] {e}")
            ctx.exit(EXIT_INFEASIBLE)
        except RossifyError as e:
            field = getattr(e, "field", None)
            where = f" (campo: {field})" if field else ""
            logger.error(f"{type(e).__name__}: {e}")
            console.print(f"[bold red]Erro:[/] {e}{where}")
            ctx.exit(EXIT_USAGE)


OUT_OPTION = click.option("--out", "-o", default="./output", show_default=True, help="Diretório de saída")
MODEL_OPTION = click.option("--model", "-m", help="Arquivo JSON do modelo ou nome de preset")
SEED_OPTION = click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True, help="Semente")
PATHS_OPTION = click.option("--paths", type=click.IntRange(1), default=10000, show_default=True, help="Número de caminhos")
DT_OPTION = click.option("--dt", type=float, help="Passo de simulação (deve dividir T)")

# Chave em ctx.meta com as sobrescritas de Settings desta execução
OVERRIDES_KEY = "rossify.overrides"


def _store_override(ctx: click.Context, param: click.Parameter, value: Any) -> Any:
    if value is not None:
        ctx.meta.setdefault(OVERRIDES_KEY, {})[param.name] = value
    return value


def _override(flag: str, kind: Any, text: str) -> Callable:
    return click.option(flag, type=kind, expose_value=False, callback=_store_override, help=text)


_POSITIVE = click.FloatRange(min=0, min_open=True)

NUMERIC_OPTIONS = [
    _override("--truncation", _POSITIVE, "Corte das fronteiras infinitas"),
    _override("--wronskian-tol", _POSITIVE, "Limiar do wronskiano para criticidade"),
    _override("--residual-tol", _POSITIVE, "Tolerância do resíduo da EDP"),
    _override("--ode-rtol", _POSITIVE, "Tolerância relativa do integrador"),
    _override("--fd-step", _POSITIVE, "Passo relativo das diferenças centrais"),
    _override("--gradient-tol", _POSITIVE, "Tolerância gradiente analítico x numérico"),
    _override("--mc-steps", click.IntRange(1), "Passos de Euler por horizonte"),
    _override("--certify-paths", click.IntRange(1000), "Caminhos da certificação MC"),
    _override("--threads", click.IntRange(1), "Threads de simulação"),
]


def numeric_options(func: Callable) -> Callable:
    """Opções que sobrescrevem ``Settings`` apenas nesta execução."""
    for option in reversed(NUMERIC_OPTIONS):
        func = option(func)
    return func


def _command_settings() -> Settings:
    overrides = click.get_current_context().meta.get(OVERRIDES_KEY, {})
    settings = get_settings()
    if not overrides:
        return settings
    logger.debug(f"Sobrescritas de configuração: {overrides}")
    try:
        return Settings(**{**settings.model_dump(), **overrides})
    except ValidationError as e:
        raise _UsageError(f"Opção numérica inválida: {e.errors()[0]['msg']}") from e


def _floats(text: Optional[str], name: str) -> Optional[Tuple[float, ...]]:
    if text is None:
        return None
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as e:
        raise _UsageError(f"--{name} deve ser uma lista de números separados por vírgula: {text!r}") from e


def _require(value: Any, name: str) -> Any:
    if value is None:
        raise _UsageError(f"Opção obrigatória ausente: --{name}")
    return value


@click.group(cls=RossifyGroup)
@click.version_option(version=__version__)
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"]), help="Nível de log do console")
@click.pass_context
def main(ctx: click.Context, log_level: Optional[str]) -> None:
    """Rossify - recuperação do núcleo de preços em modelos markovianos."""
    try:
        settings = get_settings()
    except ConfigError as e:
        console.print(f"[bold red]Erro ao carregar configurações:[/] {e}")
        console.print("[yellow]Corrija com 'rossify config set CHAVE=VALOR'.[/yellow]")
        # config set precisa rodar para consertar o próprio .env
        if ctx.invoked_subcommand != "config":
            raise
        setup_logger(log_level or "INFO")
        return
    setup_logger(log_level or settings.log_level, settings.log_dir)


main.add_command(config)


@main.command("classify")
@MODEL_OPTION
@click.option("--beta", "betas", multiple=True, type=float, help="Valores de beta a classificar (repetível)")
@click.option("--tol", type=float, help="Tolerância da busca de beta crítico")
@numeric_options
@OUT_OPTION
def classify_command(model: Optional[str], betas: Tuple[float, ...], tol: Optional[float], out: str) -> None:
    """Classifica L + beta e localiza o valor crítico beta-barra."""
    run_classify(_require(model, "model"), list(betas), tol, out, _command_settings())


@main.command("kernels")
@MODEL_OPTION
@click.option("--beta", type=float, help="Fator beta (padrão: taxa r no OU)")
@click.option("--gamma", help="Direção unitária x,y[,z] (N-D)")
@click.option("--range", "span", default="-2,2", show_default=True, help="Intervalo lo,hi por eixo")
@click.option("--points", type=click.IntRange(2), default=41, show_default=True, help="Pontos por eixo")
@numeric_options
@OUT_OPTION
def kernels_command(
    model: Optional[str], beta: Optional[float], gamma: Optional[str], span: str, points: int, out: str
) -> None:
    """Tabela de núcleos de Martin (1D, coeficientes constantes ou OU)."""
    bounds = _floats(span, "range")
    if len(bounds) != 2 or not bounds[0] < bounds[1]:
        raise _UsageError(f"--range deve ser lo,hi com lo < hi: {span!r}")
    run_kernels(
        _require(model, "model"), beta, _floats(gamma, "gamma"), bounds, points, out, _command_settings()
    )


@main.command("certify")
@MODEL_OPTION
@click.option("--beta", type=float, help="Autovalor do par (L h = -beta h)")
@click.option("--h", "h_expr", help="Função candidata h em x1..xN")
@click.option("--T", "horizon", type=float, help="Horizonte da verificação MC")
@click.option("--paths", type=click.IntRange(1000), help="Caminhos da verificação MC")
@click.option("--seed", type=click.IntRange(0), help="Semente da verificação MC")
@numeric_options
@OUT_OPTION
def certify_command(
    model: Optional[str],
    beta: Optional[float],
    h_expr: Optional[str],
    horizon: Optional[float],
    paths: Optional[int],
    seed: Optional[int],
    out: str,
) -> None:
    """Emite o certificado de admissibilidade de um par (beta, h)."""
    run_certify(
        _require(model, "model"),
        _require(beta, "beta"),
        _require(h_expr, "h"),
        horizon,
        paths,
        seed,
        out,
        _command_settings(),
    )


@main.command("recover")
@MODEL_OPTION
@click.option("--directive", "directive_path", type=click.Path(), help="Arquivo JSON da diretiva")
@click.option(
    "--mode",
    type=click.Choice(["transient_side", "mixture", "recurrent", "direction_nd", "ratio_nd", "ou"]),
    help="Modo de recuperação (sem arquivo de diretiva)",
)
@click.option("--beta", type=float, help="Fator principal beta")
@click.option("--side", type=click.Choice(["left", "right"]), help="Fronteira do modo transient_side")
@click.option("--weights", help="Pesos p,q do modo mixture")
@click.option("--gamma", help="Direção unitária x,y[,z]")
@click.option("--ratio", help="Razão p1,...,pk[,0,...] do modo ratio_nd")
@numeric_options
@OUT_OPTION
def recover_command(
    model: Optional[str],
    directive_path: Optional[str],
    mode: Optional[str],
    beta: Optional[float],
    side: Optional[str],
    weights: Optional[str],
    gamma: Optional[str],
    ratio: Optional[str],
    out: str,
) -> None:
    """Recupera a medida objetiva a partir de uma diretiva (beta, mu)."""
    if directive_path is None and mode is None:
        if side is not None:
            mode = "transient_side"
        elif weights is not None:
            mode = "mixture"
        else:
            raise _UsageError("Informe --directive ou --mode")
    run_recover(
        model,
        directive_path,
        {
            "mode": mode,
            "beta": beta,
            "side": side,
            "weights": _floats(weights, "weights"),
            "gamma": _floats(gamma, "gamma"),
            "ratio": _floats(ratio, "ratio"),
        },
        out,
        _command_settings(),
    )


@main.command("simulate")
@MODEL_OPTION
@click.option("--recovered", "recovered_path", type=click.Path(), help="Saída de 'recover' (simula sob P)")
@click.option("--T", "horizon", type=float, default=1.0, show_default=True, help="Horizonte")
@DT_OPTION
@PATHS_OPTION
@SEED_OPTION
@click.option("--x0", help="Estado inicial (padrão: ponto de referência)")
@numeric_options
@OUT_OPTION
def simulate_command(
    model: Optional[str],
    recovered_path: Optional[str],
    horizon: float,
    dt: Optional[float],
    paths: int,
    seed: int,
    x0: Optional[str],
    out: str,
) -> None:
    """Simula caminhos e grava estatísticas do estado terminal."""
    if (model is None) == (recovered_path is None):
        raise _UsageError("Informe exatamente um entre --model e --recovered")
    run_simulate(
        model, recovered_path, horizon, dt, paths, seed, _floats(x0, "x0"), out, _command_settings()
    )


@main.command("yield")
@MODEL_OPTION
@click.option("--T", "horizon", type=float, default=10.0, show_default=True, help="Maior horizonte")
@click.option("--points", type=click.IntRange(1), default=10, show_default=True, help="Horizontes na malha")
@DT_OPTION
@PATHS_OPTION
@SEED_OPTION
@click.option("--x0", help="Estado inicial (padrão: ponto de referência)")
@numeric_options
@OUT_OPTION
def yield_command(
    model: Optional[str],
    horizon: float,
    points: int,
    dt: Optional[float],
    paths: int,
    seed: int,
    x0: Optional[str],
    out: str,
) -> None:
    """Curva de yields de zero-cupom e yield de longo prazo."""
    run_yield(
        _require(model, "model"),
        horizon,
        points,
        dt,
        paths,
        seed,
        _floats(x0, "x0"),
        out,
        _command_settings(),
    )


@main.command("cashflow")
@click.option("--recovered", "recovered_path", type=click.Path(), help="Saída de 'recover'")
@click.option("--payoff", help="Payoff f em x1..xN")
@click.option("--T", "horizon", type=float, default=20.0, show_default=True, help="Maior horizonte")
@click.option("--points", type=click.IntRange(2), default=10, show_default=True, help="Horizontes na malha")
@click.option(
    "--estimator",
    type=click.Choice(["risk_neutral", "recovered"]),
    default="risk_neutral",
    show_default=True,
    help="Estimador de P_t f",
)
@DT_OPTION
@PATHS_OPTION
@SEED_OPTION
@numeric_options
@OUT_OPTION
def cashflow_command(
    recovered_path: Optional[str],
    payoff: Optional[str],
    horizon: float,
    points: int,
    estimator: str,
    dt: Optional[float],
    paths: int,
    seed: int,
    out: str,
) -> None:
    """Taxa de decaimento e^{beta t} P_t f de um fluxo de caixa."""
    run_cashflow(
        _require(recovered_path, "recovered"), _require(payoff, "payoff"),
        horizon, points, estimator, dt, paths, seed, out, _command_settings(),
    )


@main.command("verify")
@MODEL_OPTION
@SEED_OPTION
@numeric_options
@OUT_OPTION
def verify_command(model: Optional[str], seed: int, out: str) -> None:
    """Executa a bateria de invariantes sobre um modelo."""
    run_verify(_require(model, "model"), seed, out, _command_settings())


if __name__ == "__main__":
    main()
