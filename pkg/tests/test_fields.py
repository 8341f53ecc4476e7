#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Testes para o parser de expressões, campos e o modelo de difusão.
"""

import math
from unittest import TestCase

import numpy as np

from rossify.core.fields import MatrixField, ScalarField, VectorField, linear_combination
from rossify.core.model import (
    CandidatePair,
    DiffusionModel,
    Domain,
    Interval,
    apply_generator,
    h_transform,
    pde_residual,
)
from rossify.core.parser import compile_scalar, parse_expression
from rossify.io.loader import load_model
from rossify.utils.exceptions import (
    DegenerateDiffusionError,
    DomainError,
    ExpressionError,
    ModelError,
    PositivityError,
)


class TestParser(TestCase):
    """Testes para o parser de expressões."""

    def test_power_operators(self):
        """Testa que ^ e ** são equivalentes."""
        a = compile_scalar("x1^2 + 3", 1)[1]
        b = compile_scalar("x1**2 + 3", 1)[1]
        points = np.array([[-1.5], [0.0], [2.0]])
        np.testing.assert_allclose(a(points), [5.25, 3.0, 7.0])
        np.testing.assert_allclose(a(points), b(points))

    def test_analytic_gradient(self):
        """Testa gradiente e hessiana analíticos."""
        _, f, grad, hess = compile_scalar("exp(x1)*x2", 2)
        p = np.array([[0.5, 2.0]])
        self.assertAlmostEqual(f(p)[0], 2.0 * math.exp(0.5))
        np.testing.assert_allclose(grad(p)[0], [2.0 * math.exp(0.5), math.exp(0.5)])
        np.testing.assert_allclose(hess(p)[0], [[2.0 * math.exp(0.5), math.exp(0.5)], [math.exp(0.5), 0.0]])

    def test_max_min_payoffs(self):
        """Testa payoffs de call e limitado."""
        _, call, grad, _ = compile_scalar("max(exp(x1) - 1, 0)", 1)
        points = np.array([[-1.0], [0.5]])
        np.testing.assert_allclose(call(points), [0.0, math.exp(0.5) - 1.0])
        np.testing.assert_allclose(grad(points)[:, 0], [0.0, math.exp(0.5)])
        capped = compile_scalar("min(exp(x1), 2)", 1)[1]
        np.testing.assert_allclose(capped(np.array([[0.0], [3.0]])), [1.0, 2.0])

    def test_unknown_identifier(self):
        """Testa identificadores desconhecidos."""
        with self.assertRaises(ExpressionError):
            parse_expression("foo(x1)", 1)

    def test_variable_out_of_dimension(self):
        """Testa variável além da dimensão."""
        with self.assertRaises(ExpressionError):
            parse_expression("x1 + x3", 2)

    def test_unbalanced_parenthesis(self):
        """Testa parênteses desbalanceados."""
        with self.assertRaises(ExpressionError):
            parse_expression("(x1 + 1", 1)


class TestFields(TestCase):
    """Testes para os campos escalares, vetoriais e matriciais."""

    def test_constant_expression(self):
        """Testa que expressões sem variáveis viram constantes."""
        field = ScalarField.from_expression("2.5", 1)
        self.assertEqual(2.5, field.constant)
        self.assertEqual(2.5, field(3.0))

    def test_exponential_derivatives(self):
        """Testa derivadas exatas de scale*exp(theta.x)."""
        field = ScalarField.exponential([1.0, -2.0], scale=0.5)
        x = np.array([0.3, 0.1])
        value = 0.5 * math.exp(0.3 - 0.2)
        self.assertAlmostEqual(field(x), value)
        np.testing.assert_allclose(field.grad(x), [value, -2.0 * value])
        np.testing.assert_allclose(field.hess(x), value * np.array([[1.0, -2.0], [-2.0, 4.0]]))
        np.testing.assert_allclose(field.log_gradient, [1.0, -2.0])

    def test_fd_gradient_matches(self):
        """Testa o gradiente por diferenças centrais contra o analítico."""
        field = ScalarField.from_expression("tanh(x1)*x2^2", 2)
        points = np.array([[0.2, 1.0], [-1.0, 0.5]])
        self.assertLess(field.gradient_mismatch(points), 1e-6)

    def test_linear_combination(self):
        """Testa a combinação linear de campos."""
        f = ScalarField.exponential([1.0])
        g = ScalarField.exponential([-1.0])
        cosh = linear_combination([f, g], [0.5, 0.5])
        self.assertAlmostEqual(cosh(0.7), math.cosh(0.7))
        self.assertAlmostEqual(cosh.grad(0.7)[0], math.sinh(0.7))

    def test_vector_and_matrix_fields(self):
        """Testa campos linear e matricial."""
        drift = VectorField.linear_field([[1.0, 0.0], [0.0, 2.0]])
        np.testing.assert_allclose(drift(np.array([1.0, 1.0])), [1.0, 2.0])
        sigma = MatrixField.from_expressions([["0.2*x1"]], 1)
        np.testing.assert_allclose(sigma.covariance(np.array([[2.0]]))[0], [[0.16]])


class TestDiffusionModel(TestCase):
    """Testes para DiffusionModel e a h-transformada."""

    def setUp(self):
        self.model = load_model("gbm-log")

    def _flat(self, sigma: float, rate: float = 0.0, allow_degenerate: bool = False) -> DiffusionModel:
        return DiffusionModel(
            drift=VectorField.constant_field([0.5]),
            sigma=MatrixField.constant_field([[sigma]]),
            rate=ScalarField.constant_field(rate, 1),
            domain=Domain.real_space(1),
            allow_degenerate=allow_degenerate,
        )

    def test_degenerate_diffusion(self):
        """Testa a rejeição de sigma nula."""
        with self.assertRaises(DegenerateDiffusionError):
            self._flat(0.0)
        model = self._flat(0.0, allow_degenerate=True)
        self.assertEqual(1, model.dim)

    def test_negative_rate(self):
        """Testa a rejeição de taxa negativa."""
        with self.assertRaises(ModelError):
            self._flat(1.0, rate=-0.01)

    def test_generator_on_kernel(self):
        """Testa L h = -beta h para h = exp(-1.5x) com beta = 0.05."""
        h = ScalarField.exponential([-1.5])
        residual = pde_residual(self.model, CandidatePair(0.05, h), self.model.domain.sample_grid())
        self.assertLess(residual, 1e-12)
        self.assertAlmostEqual(apply_generator(self.model, h, 0.0), -0.05)

    def test_generator_linearity(self):
        """Testa L(2 h1 - 3 h2) = 2 L h1 - 3 L h2."""
        h1 = ScalarField.exponential([-1.5])
        h2 = ScalarField.from_expression("x1^2 + tanh(x1)", 1)
        combo = linear_combination([h1, h2], [2.0, -3.0])
        points = np.linspace(-2.0, 2.0, 9)
        expected = 2.0 * apply_generator(self.model, h1, points)
        expected -= 3.0 * apply_generator(self.model, h2, points)
        np.testing.assert_allclose(
            apply_generator(self.model, combo, points), expected, rtol=1e-12, atol=1e-12
        )

    def test_h_transform_drift(self):
        """Testa a deriva k + a h'/h e rho = sigma h'/h."""
        dynamics = h_transform(self.model, CandidatePair(0.05, ScalarField.exponential([-1.5])))
        self.assertAlmostEqual(dynamics.drift(0.4)[0], -0.03)
        self.assertAlmostEqual(dynamics.rho(0.4)[0], -0.3)
        self.assertIs(self.model, dynamics.base)

    def test_h_transform_requires_positive(self):
        """Testa a exigência de h > 0."""
        with self.assertRaises(PositivityError):
            h_transform(self.model, CandidatePair(0.05, ScalarField.constant_field(-1.0, 1)))

    def test_domain_interior(self):
        """Testa pontos fora do domínio."""
        gbm = load_model("gbm")
        with self.assertRaises(DomainError):
            apply_generator(gbm, ScalarField.constant_field(1.0, 1), -1.0)
        domain = Domain((Interval(0.0, None),))
        np.testing.assert_array_equal(domain.contains(np.array([[-1.0], [1.0]])), [False, True])
