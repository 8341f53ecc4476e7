#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Configuração de logging para o Rossify.
"""

import logging
import os
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional

ROOT_LOGGER = "rossify"


def setup_logger(
    level: Optional[str] = None, log_dir: Optional[str] = None
) -> logging.Logger:
    """
    Configura o logger global para o Rossify.

    Pode ser chamada várias vezes; os handlers são instalados apenas uma vez.

    Args:
        level: Nível do console (padrão: ROSSIFY_LOG_LEVEL ou INFO).
        log_dir: Diretório dos arquivos de log (padrão: ROSSIFY_LOG_DIR ou ./logs).

    Returns:
        logging.Logger: Logger configurado.
    """
    logger = logging.getLogger(ROOT_LOGGER)
    level_name = (level or os.environ.get("ROSSIFY_LOG_LEVEL", "INFO")).upper()
    console_level = getattr(logging, level_name, logging.INFO)

    if getattr(logger, "_rossify_configured", False):
        for handler in logger.handlers:
            if isinstance(handler, logging.StreamHandler) and not isinstance(
                handler, RotatingFileHandler
            ):
                handler.setLevel(console_level)
        return logger

    logger.setLevel(logging.DEBUG)
    logger.propagate = False

    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )

    # Console em stderr: stdout fica livre para resumos e arquivos de saída
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    console_handler.setLevel(console_level)
    logger.addHandler(console_handler)

    logs_dir = Path(log_dir or os.environ.get("ROSSIFY_LOG_DIR", "./logs"))
    try:
        logs_dir.mkdir(parents=True, exist_ok=True)
        file_handler = RotatingFileHandler(
            logs_dir / "rossify.log",
            maxBytes=10 * 1024 * 1024,  # 10 MB
            backupCount=5,
            encoding="utf-8",
        )
        file_handler.setFormatter(formatter)
        file_handler.setLevel(logging.DEBUG)
        logger.addHandler(file_handler)
    except OSError as e:
        logger.warning(f"Não foi possível criar o arquivo de log em {logs_dir}: {e}")

    logger._rossify_configured = True  # type: ignore[attr-defined]
    return logger


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """
    Obtém um logger específico.

    Args:
        name: Nome do logger (opcional), normalmente __name__.

    Returns:
        logging.Logger: Logger específico.
    """
    if not name:
        return logging.getLogger(ROOT_LOGGER)
    if name == ROOT_LOGGER or name.startswith(f"{ROOT_LOGGER}."):
        return logging.getLogger(name)
    return logging.getLogger(f"{ROOT_LOGGER}.{name}")
