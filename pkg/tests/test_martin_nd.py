#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Testes para a fronteira de Martin em N-D (coeficientes constantes e OU).
"""

import math
from unittest import TestCase

import numpy as np
from scipy.integrate import simpson

from rossify.core.martin_nd import (
    KIND_DIRECTION,
    KIND_POINT,
    MartinBoundaryPoint,
    OUKernel,
    OUSpec,
    bm_minimal,
    bm_minimal_field,
    constcoef_reduce,
    martin_metric,
    ou_covariance,
    ou_kernel,
    ou_kernel_density,
    ou_martin_kernel,
    sphere_atoms,
)
from rossify.core.model import CandidatePair, pde_residual
from rossify.io.loader import load_model
from rossify.utils.exceptions import DivergentIntegralError, DomainError, UsageError

B_DIAG = [[1.0, 0.0], [0.0, 2.0]]


class TestBoundaryPoints(TestCase):
    """Testes para os pontos da fronteira de Martin."""

    def test_round_trip(self):
        """Testa to_dict/from_dict."""
        for point in (
            MartinBoundaryPoint.at_side(-1),
            MartinBoundaryPoint.at_direction([3.0, 4.0]),
            MartinBoundaryPoint.single(),
        ):
            self.assertTrue(point.matches(MartinBoundaryPoint.from_dict(point.to_dict())))

    def test_direction_is_normalized(self):
        """Testa a normalização de gamma."""
        point = MartinBoundaryPoint.at_direction([3.0, 4.0])
        np.testing.assert_allclose(point.gamma, [0.6, 0.8])
        self.assertEqual("(0.6, 0.8)", point.label)

    def test_invalid_side(self):
        """Testa lados inválidos."""
        with self.assertRaises(UsageError):
            MartinBoundaryPoint.at_side(0)


class TestConstantCoefficients(TestCase):
    """Testes para a redução a Delta + lambda."""

    def test_bm_reduction(self):
        """Testa S = I, c = 0 e lambda = -1 no BM escalado."""
        reduction = constcoef_reduce(load_model("bm2"), 0.0)
        np.testing.assert_allclose(reduction.S, np.eye(2), atol=1e-14)
        np.testing.assert_allclose(reduction.c, [0.0, 0.0])
        self.assertAlmostEqual(-1.0, reduction.lam)
        np.testing.assert_allclose(reduction.theta([1.0, 0.0]), [1.0, 0.0], atol=1e-14)

    def test_principal_is_harmonic(self):
        """Testa que exp(theta.x) resolve L h = -beta h."""
        model = load_model("bm2")
        reduction = constcoef_reduce(model, 0.0)
        for angle in (0.0, 1.0, 2.5):
            kernel = reduction.principal([math.cos(angle), math.sin(angle)])
            residual = pde_residual(model, CandidatePair(0.0, kernel), model.domain.sample_grid(5, span=2.0))
            self.assertLess(residual, 1e-10)

    def test_bm_minimal(self):
        """Testa exp(sqrt(-lambda) gamma.x)."""
        self.assertAlmostEqual(math.exp(2.0 * 0.6), bm_minimal(-4.0, [0.6, 0.8], [1.0, 0.0]))

    def test_critical_dimension(self):
        """Testa lambda = 0: crítico em N = 2, ponto único em N >= 3."""
        with self.assertRaises(DomainError):
            bm_minimal_field(0.0, [1.0, 0.0])
        self.assertEqual(1.0, bm_minimal_field(0.0, [0.0, 0.0, 1.0]).constant)
        with self.assertRaises(DomainError):
            bm_minimal_field(0.5, [1.0, 0.0])

    def test_martin_metric_axioms(self):
        """Testa d(k, k) = 0, simetria e desigualdade triangular."""
        reduction = constcoef_reduce(load_model("bm2"), 0.0)
        kernels = [reduction.principal([math.cos(t), math.sin(t)]) for t in (0.0, 2.0, 4.0)]
        box = [(-1.0, 1.0), (-1.0, 1.0)]
        self.assertEqual(0.0, martin_metric(kernels[0], kernels[0], box))
        d01 = martin_metric(kernels[0], kernels[1], box)
        self.assertGreater(d01, 0.0)
        self.assertAlmostEqual(d01, martin_metric(kernels[1], kernels[0], box), places=12)
        self.assertLessEqual(
            martin_metric(kernels[0], kernels[2], box),
            d01 + martin_metric(kernels[1], kernels[2], box) + 1e-12,
        )

    def test_sphere_atoms(self):
        """Testa a discretização da esfera."""
        atoms = sphere_atoms(lambda g: 1.0, 8, 2)
        self.assertEqual(8, len(atoms))
        self.assertAlmostEqual(2.0 * math.pi, sum(w for _, w in atoms))
        atoms3 = sphere_atoms(lambda g: 1.0, 6, 3)
        self.assertAlmostEqual(4.0 * math.pi, sum(w for _, w in atoms3), places=10)
        half = sphere_atoms(lambda g: 1.0 if g[0] > 0 else 0.0, 8, 2)
        self.assertTrue(all(g[0] > 0 for g, _ in half))


class TestOrnsteinUhlenbeck(TestCase):
    """Testes para o núcleo de Martin do OU."""

    def setUp(self):
        self.spec = OUSpec(np.array(B_DIAG))

    def test_lyapunov_covariance(self):
        """Testa C_B = diag(1/2, 1/4)."""
        C = ou_covariance(self.spec)
        np.testing.assert_allclose(C, np.diag([0.5, 0.25]), atol=1e-12)
        residual = self.spec.B @ C + C @ self.spec.B.T - np.eye(2)
        self.assertLess(float(np.max(np.abs(residual))), 1e-10)

    def test_covariance_diverges(self):
        """Testa C_B quando B não é expansiva."""
        with self.assertRaises(DivergentIntegralError):
            ou_covariance(OUSpec(np.array([[1.0, 0.0], [0.0, -1.0]])))

    def test_kernel_density_origin(self):
        """Testa K_B(0, 0; e1) = exp(-3)."""
        C = ou_covariance(self.spec)
        self.assertAlmostEqual(math.exp(-3.0), ou_kernel_density(self.spec, C, [0.0, 0.0], 0.0, [1.0, 0.0]))

    def test_fixed_rule_matches_adaptive(self):
        """Testa a regra fixa contra a quadratura adaptativa."""
        kernel = OUKernel(self.spec, [1.0, 0.0])
        points = np.array([[0.5, 0.0], [-0.3, 0.7], [1.0, -1.0]])
        fixed = kernel.values(points)
        for p, value in zip(points, fixed):
            self.assertAlmostEqual(ou_martin_kernel(self.spec, p, [1.0, 0.0]), value, delta=1e-6)

    def test_adaptive_matches_simpson(self):
        """Testa a quadratura adaptativa contra Simpson em malha fina."""
        C = ou_covariance(self.spec)
        s = np.linspace(-30.0, 30.0, 40001)
        gamma = [0.6, 0.8]
        x = [0.4, -0.2]
        num = simpson([ou_kernel_density(self.spec, C, x, t, gamma) for t in s], x=s)
        den = simpson([ou_kernel_density(self.spec, C, [0.0, 0.0], t, gamma) for t in s], x=s)
        self.assertAlmostEqual(num / den, ou_martin_kernel(self.spec, x, gamma), delta=1e-6)

    def test_kernel_is_harmonic(self):
        """Testa 1/2 Delta k + Bx.grad k = 0."""
        model = load_model("ou-diag")
        kernel, point = ou_kernel(B_DIAG, [1.0, 0.0])
        self.assertEqual(KIND_DIRECTION, point.kind)
        self.assertAlmostEqual(1.0, kernel([0.0, 0.0]), places=12)
        grid = model.domain.sample_grid(5, span=2.0)
        self.assertLess(pde_residual(model, CandidatePair(0.0, kernel), grid), 1e-5)

    def test_recurrent_case(self):
        """Testa o núcleo constante quando B não tem autovalor expansivo."""
        kernel, point = ou_kernel([[-1.0, 0.0], [0.0, -2.0]], [1.0, 0.0])
        self.assertEqual(KIND_POINT, point.kind)
        self.assertEqual(1.0, kernel.constant)

    def test_triangular_form(self):
        """Testa Q^T B Q triangular no caso misto."""
        spec = OUSpec(np.array([[1.0, 0.0], [0.0, -1.0]]))
        self.assertTrue(spec.mixed)
        Q, hat = spec.triangular_form()
        self.assertAlmostEqual(1.0, float(np.linalg.det(Q)))
        T = Q.T @ spec.B @ Q
        self.assertAlmostEqual(0.0, T[0, 1], places=12)
        self.assertAlmostEqual(-1.0, T[0, 0], places=12)
        self.assertTrue(hat.expanding)

    def test_singular_matrix(self):
        """Testa B singular."""
        with self.assertRaises(DomainError):
            OUSpec(np.array([[1.0, 0.0], [0.0, 0.0]]))
