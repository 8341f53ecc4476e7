#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Comandos de configuração para a CLI do Rossify.
"""

from typing import Dict, Optional, Tuple

import click
from rich.console import Console
from rich.table import Table

from rossify.utils.config import Settings, env_name, list_config, save_config
from rossify.utils.exceptions import ConfigError
from rossify.utils.logger import get_logger

console = Console()
logger = get_logger(__name__)

GROUPS = {
    "Integração de EDO": ("ode_", "truncation", "finite_inset", "overflow_limit", "wronskian_tol",
                          "drift_sign_tol", "dense_points", "critical_tol", "beta_bracket_start",
                          "max_doublings"),
    "Quadraturas": ("quad_", "ou_", "metric_"),
    "Admissibilidade": ("explosion_", "divergence_", "convergence_", "certify_"),
    "Monte Carlo": ("mc_", "antithetic", "escape_fraction", "min_decided", "yield_dt",
                    "cashflow_slope_tol", "threads"),
}


def _group_of(field: str) -> str:
    for title, prefixes in GROUPS.items():
        if any(field == p or (p.endswith("_") and field.startswith(p)) for p in prefixes):
            return title
    return "Outras Configurações"


@click.group()
def config():
    """Comandos de configuração do Rossify."""
    pass


@config.command("set")
@click.argument("assignments", nargs=-1, required=True)
@click.option("--env-file", type=click.Path(dir_okay=False), help="Arquivo .env alternativo")
def set_config(assignments: Tuple[str, ...], env_file: Optional[str]):
    """Define configurações no formato CHAVE=VALOR (ex.: truncation=30)."""
    updates: Dict[str, str] = {}
    for item in assignments:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise click.BadParameter(f"Esperado CHAVE=VALOR, recebido {item!r}", param_hint="ASSIGNMENTS")
        updates[key.strip()] = value.strip()

    try:
        path = save_config(updates, env_file)
    except ConfigError as e:
        logger.error(f"Erro ao definir configurações: {e}")
        console.print(f"[bold red]Erro ao definir configurações:[/] {e}")
        raise click.exceptions.Exit(1)

    for key, value in updates.items():
        console.print(f"[green]{key} definido como:[/] {value}")
    console.print(f"\n[bold green]Configurações salvas em {path}[/]")


@config.command("show")
def show_config():
    """Exibe as configurações atuais."""
    try:
        config_data = list_config()
    except ConfigError as e:
        console.print(f"[bold red]Erro ao exibir configurações:[/] {e}")
        raise click.exceptions.Exit(1)

    grouped: Dict[str, Dict[str, str]] = {}
    for field in Settings.model_fields:
        grouped.setdefault(_group_of(field), {})[field] = config_data[env_name(field)]

    for title, entries in grouped.items():
        table = Table(title=title, show_header=True)
        table.add_column("Configuração", style="cyan", width=28)
        table.add_column("Variável", style="dim")
        table.add_column("Valor", style="white")
        for field, value in entries.items():
            table.add_row(field, env_name(field), value)
        console.print(table)
        console.print()
