#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Testes para a teoria de Sturm-Liouville em 1D.
"""

import math
from unittest import TestCase

import numpy as np

from rossify.core.model import CandidatePair, pde_residual
from rossify.core.sturm1d import (
    CRITICAL,
    SUBCRITICAL,
    SUPERCRITICAL,
    GreensFunction1D,
    boundary_kernel,
    boundary_solutions,
    classify_criticality,
    critical_beta,
    critical_solution,
    greens_function_1d,
    integrate_ode,
    martin_kernel_1d,
)
from rossify.io.loader import load_model
from rossify.utils.exceptions import CriticalityError, UsageError

# r + k^2/(2a) para o GBM em log
GBM_LOG_BETA_BAR = 0.05 + 0.03**2 / (2.0 * 0.04)


class TestCriticality(TestCase):
    """Testes para a classificação de criticidade."""

    def setUp(self):
        self.model = load_model("gbm-log")

    def test_critical_beta(self):
        """Testa beta-barra = 0.06125 no GBM em log."""
        self.assertAlmostEqual(0.06125, GBM_LOG_BETA_BAR)
        beta = critical_beta(self.model)
        self.assertAlmostEqual(GBM_LOG_BETA_BAR, beta, delta=1e-5)

    def test_classification(self):
        """Testa as três classes ao redor de beta-barra."""
        self.assertEqual(SUBCRITICAL, classify_criticality(self.model, 0.05).klass)
        self.assertEqual(CRITICAL, classify_criticality(self.model, GBM_LOG_BETA_BAR).klass)
        report = classify_criticality(self.model, 0.07)
        self.assertEqual(SUPERCRITICAL, report.klass)
        self.assertTrue(report.witness)

    def test_classification_monotone_in_beta(self):
        """Testa que a classe nunca regride ao aumentar beta."""
        rank = {SUBCRITICAL: 0, CRITICAL: 1, SUPERCRITICAL: 2}
        grid = [0.0, 0.03, 0.05, 0.06, GBM_LOG_BETA_BAR, 0.065, 0.08]
        ranks = [rank[classify_criticality(self.model, beta).klass] for beta in grid]
        self.assertEqual(sorted(ranks), ranks)
        self.assertEqual([0, 0, 0, 0, 1, 2, 2], ranks)

    def test_report_dict(self):
        """Testa a serialização do relatório."""
        data = classify_criticality(self.model, 0.05).to_dict()
        self.assertEqual({"lambda", "class", "witness", "wronskian"}, set(data))
        self.assertEqual(SUBCRITICAL, data["class"])

    def test_requires_one_dimension(self):
        """Testa a rejeição de modelos 2D."""
        with self.assertRaises(UsageError):
            classify_criticality(load_model("bm2"), 0.0)

    def test_invalid_tolerance(self):
        """Testa tol <= 0."""
        with self.assertRaises(UsageError):
            critical_beta(self.model, tol=0.0)


class TestKernels(TestCase):
    """Testes para os núcleos de Martin 1D."""

    def setUp(self):
        self.model = load_model("gbm-log")
        self.xs = np.linspace(-2.0, 2.0, 9)

    def test_boundary_solutions_closed_form(self):
        """Testa os núcleos 1 e exp(-1.5x) em beta = 0.05."""
        bs = boundary_solutions(self.model, 0.05)
        np.testing.assert_allclose(bs.u_left(self.xs), np.ones_like(self.xs), rtol=1e-6)
        np.testing.assert_allclose(bs.u_right(self.xs), np.exp(-1.5 * self.xs), rtol=1e-6)
        self.assertAlmostEqual(1.0, bs.u_left(0.0), places=12)

    def test_kernel_residual(self):
        """Testa o resíduo da EDP dos núcleos numéricos."""
        grid = self.xs[:, None]
        for side in (-1, 1):
            kernel = boundary_kernel(self.model, 0.05, side)
            self.assertFalse(kernel.ambiguous)
            self.assertLess(pde_residual(self.model, CandidatePair(0.05, kernel.field), grid), 1e-6)

    def test_kernel_side_convention(self):
        """Testa que k(.;+1) induz deriva para a direita."""
        right = boundary_kernel(self.model, 0.05, 1)
        left = boundary_kernel(self.model, 0.05, -1)
        self.assertGreater(right.edge_drift, 0.0)
        self.assertLess(left.edge_drift, 0.0)
        self.assertAlmostEqual(math.exp(-1.5), martin_kernel_1d(self.model, 0.05, 1.0, -1), places=6)

    def test_supercritical_raises(self):
        """Testa CriticalityError acima de beta-barra."""
        with self.assertRaises(CriticalityError) as ctx:
            boundary_solutions(self.model, 0.07)
        self.assertEqual(SUPERCRITICAL, ctx.exception.klass)

    def test_critical_solution(self):
        """Testa a solução crítica exp(-0.75x)."""
        solution = critical_solution(self.model, GBM_LOG_BETA_BAR)
        np.testing.assert_allclose(solution(self.xs), np.exp(-0.75 * self.xs), rtol=1e-3)

    def test_greens_function(self):
        """Testa G(x, y) = exp(-|x - y|)/2 para Delta h = h."""
        heat = load_model("heat1d")
        self.assertAlmostEqual(0.5 * math.exp(-1.0), greens_function_1d(heat, 0.0, 0.0, 1.0), places=5)
        self.assertAlmostEqual(
            greens_function_1d(heat, 0.0, 0.0, 1.0), greens_function_1d(heat, 0.0, 1.0, 0.0), places=6
        )

    def test_greens_ratio_limit(self):
        """Testa G(x, y)/G(xi, y) -> k(x; +-1) com y nas fronteiras."""
        heat = load_model("heat1d")
        bs = boundary_solutions(heat, 0.0)
        green = GreensFunction1D(heat, bs.u_left, bs.u_right)
        kernels = {1: bs.u_left, -1: bs.u_right}
        for y, side in ((12.0, 1), (-12.0, -1)):
            for x in (-0.5, 0.5, 1.5):
                ratio = green(x, y) / green(0.0, y)
                self.assertAlmostEqual(kernels[side](x), ratio, places=8)
                self.assertAlmostEqual(math.exp(side * x), ratio, places=5)

    def test_truncation_error_reported(self):
        """Testa que as soluções do nível fino trazem a variação entre os níveis."""
        bs = boundary_solutions(load_model("heat1d"), 0.0)
        for solution in (bs.u_left, bs.u_right):
            self.assertGreaterEqual(solution.truncation_error, 0.0)
            self.assertLess(solution.truncation_error, 1e-8)

    def test_integrate_ode(self):
        """Testa a integração de h'' = h a partir de (0, 1, 1)."""
        heat = load_model("heat1d")
        solution = integrate_ode(heat, 0.0, 0.0, 1.0, 1.0, "right", stop=2.0)
        self.assertAlmostEqual(math.exp(2.0), solution(2.0), places=8)
        with self.assertRaises(UsageError):
            integrate_ode(heat, 0.0, 0.0, 1.0, 1.0, "up")
