#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Utilitário para configuração do sistema.

Todas as tolerâncias, truncamentos e orçamentos numéricos vivem em
``Settings``. Os valores vêm de variáveis de ambiente ``ROSSIFY_*``
(opcionalmente de um arquivo ``.env``) e podem ser sobrescritos por
comando com ``settings.model_copy(update=...)``.
"""

import os
from pathlib import Path
from typing import Any, Dict, Optional

import dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from rossify.utils.exceptions import ConfigError
from rossify.utils.logger import get_logger

logger = get_logger(__name__)

ENV_PREFIX = "ROSSIFY_"
THREADS_ENV = "MARTIN_RECOVER_THREADS"


def _default_threads() -> int:
    return max(1, min(4, os.cpu_count() or 1))


class Settings(BaseModel):
    """Parâmetros numéricos globais."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    # Campos e resíduos
    fd_step: float = Field(1e-4, gt=0, description="Passo relativo das diferenças centrais")
    residual_tol: float = Field(1e-6, gt=0, description="Tolerância do resíduo da EDP")
    gradient_tol: float = Field(1e-5, gt=0, description="Tolerância gradiente analítico x numérico")

    # Integração da EDO (sturm1d)
    ode_rtol: float = Field(1e-12, gt=0, description="Tolerância relativa do integrador")
    ode_atol: float = Field(1e-14, gt=0, description="Tolerância absoluta do integrador")
    truncation: float = Field(25.0, gt=0, description="Corte das fronteiras infinitas")
    finite_inset: float = Field(1e-3, gt=0, lt=0.5, description="Recuo relativo em fronteiras finitas")
    overflow_limit: float = Field(1e250, gt=0, description="Limite de overflow das soluções")
    wronskian_tol: float = Field(1e-7, gt=0, description="Limiar do wronskiano para criticidade")
    drift_sign_tol: float = Field(1e-8, ge=0, description="Tolerância do sinal da deriva transformada")
    dense_points: int = Field(20001, ge=101, description="Pontos da malha densa das soluções")

    # Busca de beta crítico
    critical_tol: float = Field(1e-7, gt=0, description="Tolerância padrão para beta crítico")
    beta_bracket_start: float = Field(0.01, gt=0, description="Limite superior inicial da busca")
    max_doublings: int = Field(40, ge=1, description="Máximo de duplicações do intervalo")

    # Quadraturas (martin_nd)
    quad_start: float = Field(10.0, gt=0, description="Janela inicial |s| da quadratura OU")
    quad_tail_tol: float = Field(1e-10, gt=0, description="Tolerância relativa da cauda")
    quad_max_doublings: int = Field(8, ge=1, description="Máximo de duplicações da janela")
    ou_panels: int = Field(192, ge=8, description="Painéis da regra fixa do núcleo OU")
    ou_nodes: int = Field(8, ge=2, description="Nós Gauss-Legendre por painel (OU)")
    ou_radius: float = Field(10.0, gt=0, description="Raio de precisão da regra fixa OU")
    metric_panels: int = Field(64, ge=1, description="Painéis por eixo da métrica de Martin")
    metric_nodes: int = Field(4, ge=1, description="Nós Gauss-Legendre por painel (métrica)")

    # Teste de explosão
    explosion_start: float = Field(10.0, gt=0, description="Primeiro nível de truncamento")
    explosion_levels: int = Field(24, ge=3, description="Número de níveis de refinamento")
    divergence_threshold: float = Field(1e6, gt=0, description="Limiar de divergência")
    divergence_growth: float = Field(0.10, gt=0, description="Crescimento mínimo por nível")
    convergence_rel: float = Field(1e-3, gt=0, description="Variação relativa de convergência")

    # Monte Carlo
    mc_steps: int = Field(1024, ge=1, description="Passos de Euler por horizonte")
    antithetic: bool = Field(True, description="Usa variáveis antitéticas")
    mc_block: int = Field(4096, ge=2, description="Caminhos por bloco de sementes")
    certify_paths: int = Field(4096, ge=1000, description="Caminhos da certificação MC")
    certify_T: float = Field(1.0, gt=0, description="Horizonte da certificação MC")
    certify_seed: int = Field(2024, ge=0, description="Semente da certificação MC")
    certify_z: float = Field(4.0, gt=0, description="Banda de aceitação em erros padrão")
    escape_fraction: float = Field(0.99, gt=0, le=1, description="Fração do domínio truncado das barreiras")
    min_decided: int = Field(100, ge=1, description="Caminhos decididos mínimos")
    yield_dt: float = Field(1.0 / 128.0, gt=0, description="Passo padrão da curva de juros")
    cashflow_slope_tol: float = Field(0.05, gt=0, description="Variação relativa tolerada na cauda")
    threads: int = Field(default_factory=_default_threads, ge=1, description="Threads de simulação")

    # Logging
    log_level: str = Field("INFO", description="Nível de log do console")
    log_dir: str = Field("./logs", description="Diretório dos logs")


def env_name(field: str) -> str:
    """Nome da variável de ambiente associada a um campo de ``Settings``."""
    if field == "threads":
        return THREADS_ENV
    return f"{ENV_PREFIX}{field.upper()}"


_settings: Optional[Settings] = None


def load_config(env_file: Optional[str] = None) -> Settings:
    """
    Carrega as configurações do sistema a partir de variáveis de ambiente ou arquivo .env.

    Args:
        env_file: Caminho alternativo do arquivo .env.

    Returns:
        Settings: Configurações carregadas.

    Raises:
        ConfigError: Se algum valor for inválido.
    """
    env_path = Path(env_file) if env_file else Path(".") / ".env"
    if env_path.exists():
        logger.debug(f"Carregando configurações do arquivo: {env_path}")
        dotenv.load_dotenv(env_path)

    values: Dict[str, Any] = {}
    for name in Settings.model_fields:
        raw = os.environ.get(env_name(name))
        if raw is not None and raw != "":
            values[name] = raw

    try:
        return Settings(**values)
    except ValidationError as e:
        first = e.errors()[0]
        field = str(first["loc"][0]) if first.get("loc") else "?"
        message = f"Valor inválido para {env_name(field)}: {first['msg']}"
        logger.error(message)
        raise ConfigError(message) from e


def get_settings() -> Settings:
    """Retorna as configurações carregadas (carrega na primeira chamada)."""
    global _settings
    if _settings is None:
        _settings = load_config()
    return _settings


def reset_settings() -> None:
    """Descarta o cache de configurações."""
    global _settings
    _settings = None


def get_config_value(key: str, default: Optional[str] = None) -> Optional[str]:
    """
    Obtém um valor de configuração específico.

    Args:
        key: Nome do campo (``truncation``) ou da variável (``ROSSIFY_TRUNCATION``).
        default: Valor padrão se a configuração não for encontrada.

    Returns:
        Optional[str]: Valor da configuração ou o valor padrão.
    """
    if key in Settings.model_fields:
        return str(getattr(get_settings(), key))
    return os.environ.get(key, default)


def save_config(config: Dict[str, str], env_file: Optional[str] = None) -> Path:
    """
    Salva configurações no arquivo .env.

    Args:
        config: Pares campo -> valor (nomes de campo ou de variável).
        env_file: Caminho alternativo do arquivo .env.

    Returns:
        Path: Arquivo escrito.

    Raises:
        ConfigError: Se alguma chave for desconhecida, algum valor inválido
            ou o arquivo não puder ser escrito.
    """
    updates: Dict[str, str] = {}
    for key, value in config.items():
        field = key.lower()
        if key.startswith(ENV_PREFIX):
            field = key[len(ENV_PREFIX):].lower()
        elif key == THREADS_ENV:
            field = "threads"
        if field not in Settings.model_fields:
            raise ConfigError(f"Configuração desconhecida: {key}")
        updates[env_name(field)] = str(value)

    # Valida o ambiente resultante antes de gravar
    try:
        current: Dict[str, Any] = {}
        for field in Settings.model_fields:
            raw = updates.get(env_name(field), os.environ.get(env_name(field)))
            if raw is not None and raw != "":
                current[field] = raw
        Settings(**current)
    except ValidationError as e:
        raise ConfigError(f"Valor inválido: {e.errors()[0]['msg']}") from e

    env_path = Path(env_file) if env_file else Path(".") / ".env"
    try:
        existing: Dict[str, str] = {}
        if env_path.exists():
            existing = {
                k: v for k, v in dotenv.dotenv_values(env_path).items() if v is not None
            }
        existing.update(updates)

        with open(env_path, "w", encoding="utf-8") as f:
            f.write("# Configurações do Rossify\n")
            for key in sorted(existing):
                f.write(f"{key}={existing[key]}\n")
    except OSError as e:
        logger.error(f"Erro ao salvar configurações: {e}")
        raise ConfigError(f"Erro ao salvar configurações: {e}") from e

    for key, value in updates.items():
        os.environ[key] = value
    reset_settings()
    logger.info(f"Configurações salvas em: {env_path}")
    return env_path


def list_config() -> Dict[str, str]:
    """
    Lista todas as configurações atuais.

    Returns:
        Dict[str, str]: Variável de ambiente -> valor efetivo.
    """
    settings = get_settings()
    return {env_name(name): str(getattr(settings, name)) for name in Settings.model_fields}
