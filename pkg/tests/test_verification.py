#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Testes para a bateria de verificações.
"""

from unittest import TestCase

from rossify.core.verification import gradient_check, run_verification
from rossify.io.loader import load_model
from rossify.utils.config import Settings


class TestVerification(TestCase):
    """Testes para run_verification."""

    def _assert_all_pass(self, name, expected):
        results = run_verification(load_model(name), seed=0)
        names = [r.name for r in results]
        for check in expected:
            self.assertIn(check, names)
        failed = [(r.name, r.detail) for r in results if not r.passed]
        self.assertEqual([], failed)

    def test_heat1d(self):
        """Testa as verificações 1D no modelo cosh."""
        self._assert_all_pass("heat1d", ["critical_beta", "kernel_residual", "limiting_distribution"])

    def test_bm2(self):
        """Testa as verificações de coeficientes constantes."""
        self._assert_all_pass("bm2", ["direction_consistency", "metric_axioms", "constant_rate_yield"])

    def test_ou_diag(self):
        """Testa as verificações do OU."""
        self._assert_all_pass("ou-diag", ["lyapunov_residual", "ou_harmonicity"])

    def test_gradient_check(self):
        """Testa o gradiente da taxa contra diferenças centrais com o passo configurado."""
        model = load_model("tanh-rate", settings=Settings())
        result = gradient_check(model, Settings())
        self.assertTrue(result.passed, result.detail)
        self.assertEqual(1e-5, result.threshold)

        coarse = Settings(fd_step=0.5)
        result = gradient_check(load_model("tanh-rate", settings=coarse), coarse)
        self.assertFalse(result.passed)
        self.assertIn("fd_step=0.5", result.detail)
