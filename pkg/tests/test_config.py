#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Testes para o utilitário de configuração.
"""

import os
import shutil
import tempfile
from unittest import TestCase, mock

import dotenv

from rossify.utils.config import (
    THREADS_ENV,
    env_name,
    get_config_value,
    get_settings,
    list_config,
    load_config,
    reset_settings,
    save_config,
)
from rossify.utils.exceptions import ConfigError


class TestConfig(TestCase):
    """Testes para Settings e o arquivo .env."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.env_file = os.path.join(self.temp_dir, ".env")
        reset_settings()

    def tearDown(self):
        reset_settings()
        shutil.rmtree(self.temp_dir)

    def test_defaults(self):
        """Testa os valores padrão."""
        with mock.patch.dict(os.environ, {}, clear=True):
            settings = load_config(self.env_file)
        self.assertEqual(1e-6, settings.residual_tol)
        self.assertEqual(25.0, settings.truncation)
        self.assertGreaterEqual(settings.threads, 1)

    def test_environment_override(self):
        """Testa a sobrescrita por variável de ambiente."""
        with mock.patch.dict(os.environ, {"ROSSIFY_TRUNCATION": "30", THREADS_ENV: "2"}):
            settings = get_settings()
            self.assertEqual(30.0, settings.truncation)
            self.assertEqual(2, settings.threads)
            self.assertEqual("30.0", get_config_value("truncation"))

    def test_invalid_value(self):
        """Testa valores inválidos."""
        with mock.patch.dict(os.environ, {"ROSSIFY_RESIDUAL_TOL": "-1"}):
            with self.assertRaises(ConfigError):
                load_config(self.env_file)

    def test_env_names(self):
        """Testa os nomes das variáveis."""
        self.assertEqual("ROSSIFY_MC_STEPS", env_name("mc_steps"))
        self.assertEqual("MARTIN_RECOVER_THREADS", env_name("threads"))

    def test_save_config(self):
        """Testa a gravação no arquivo .env."""
        with mock.patch.dict(os.environ, {}, clear=True):
            path = save_config({"mc_steps": "256", "ROSSIFY_CERTIFY_Z": "5"}, self.env_file)
            values = dotenv.dotenv_values(path)
            self.assertEqual("256", values["ROSSIFY_MC_STEPS"])
            self.assertEqual("5", values["ROSSIFY_CERTIFY_Z"])
            self.assertEqual(256, get_settings().mc_steps)
            self.assertEqual("256", list_config()["ROSSIFY_MC_STEPS"])

    def test_save_unknown_key(self):
        """Testa chaves desconhecidas."""
        with self.assertRaises(ConfigError):
            save_config({"api_token": "x"}, self.env_file)
        self.assertFalse(os.path.exists(self.env_file))

    def test_save_invalid_value(self):
        """Testa que valores inválidos não são gravados."""
        with mock.patch.dict(os.environ, {}, clear=True):
            with self.assertRaises(ConfigError):
                save_config({"certify_paths": "10"}, self.env_file)
        self.assertFalse(os.path.exists(self.env_file))

    def test_save_repairs_broken_environment(self):
        """Testa que set corrige um valor inválido já presente."""
        with mock.patch.dict(os.environ, {"ROSSIFY_TRUNCATION": "abc"}, clear=True):
            save_config({"truncation": "20"}, self.env_file)
            self.assertEqual(20.0, get_settings().truncation)
