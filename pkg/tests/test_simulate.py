#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Testes para a simulação Monte Carlo, yields e fluxos de caixa.
"""

import math
from unittest import TestCase

import numpy as np

from rossify.core.fields import ScalarField
from rossify.core.recovery import (
    limiting_distribution,
    recover_1d,
    recover_direction_nd,
    recover_mixture_1d,
)
from rossify.core.simulate import (
    bond_price_pde,
    cashflow_rate,
    escape_barriers,
    escape_statistics,
    long_term_yield,
    price_claim,
    simulate_paths,
    strong_error,
    terminal_summary,
)
from rossify.io.loader import build_model, load_model
from rossify.io.models import ModelFile
from rossify.utils.config import Settings
from rossify.utils.exceptions import UsageError


def _flat_model():
    """Difusão degenerada dX = 0.5 dt usada para checar a integração."""
    spec = ModelFile.model_validate(
        {
            "name": "flat",
            "dim": 1,
            "drift": {"kind": "constant", "value": [0.5]},
            "sigma": {"kind": "constant", "value": [[0.0]]},
            "rate": {"kind": "constant", "value": 0.0},
        }
    )
    return build_model(spec, allow_degenerate=True)


class TestSimulatePaths(TestCase):
    """Testes para simulate_paths."""

    def test_degenerate_terminal(self):
        """Testa X_T = x0 + c T com sigma nula."""
        ensemble = simulate_paths(_flat_model(), 1.0, 2.0, 0.01, 64, 3)
        np.testing.assert_allclose(ensemble.terminal[:, 0], np.full(64, 2.0), atol=1e-12)
        summary = terminal_summary(ensemble)
        self.assertAlmostEqual(2.0, summary["mean"][0], places=12)
        self.assertEqual(0, summary["flagged"])

    def test_seed_reproducibility(self):
        """Testa que a mesma semente reproduz os caminhos."""
        model = load_model("tanh-rate")
        a = simulate_paths(model, 0.0, 1.0, 1.0 / 64, 200, 7)
        b = simulate_paths(model, 0.0, 1.0, 1.0 / 64, 200, 7)
        c = simulate_paths(model, 0.0, 1.0, 1.0 / 64, 200, 8)
        np.testing.assert_array_equal(a.terminal, b.terminal)
        np.testing.assert_array_equal(a.int_r, b.int_r)
        self.assertFalse(np.array_equal(a.terminal, c.terminal))

    def test_thread_count_independence(self):
        """Testa caminhos idênticos byte a byte com 1 e 8 threads."""
        model = load_model("tanh-rate")
        base = Settings(mc_block=64)
        single = simulate_paths(
            model, 0.0, 1.0, 1.0 / 32, 1000, 9, settings=base.model_copy(update={"threads": 1})
        )
        many = simulate_paths(
            model, 0.0, 1.0, 1.0 / 32, 1000, 9, settings=base.model_copy(update={"threads": 8})
        )
        self.assertEqual(single.terminal.tobytes(), many.terminal.tobytes())
        self.assertEqual(single.int_r.tobytes(), many.int_r.tobytes())

    def test_antithetic_pairs(self):
        """Testa que pares antitéticos espelham o browniano."""
        ensemble = simulate_paths(load_model("gbm-log"), 0.0, 1.0, 0.25, 8, 1, antithetic=True)
        self.assertTrue(ensemble.antithetic)
        np.testing.assert_allclose(ensemble.brownian[:4], -ensemble.brownian[4:])

    def test_invalid_arguments(self):
        """Testa argumentos inválidos."""
        model = load_model("gbm-log")
        with self.assertRaises(UsageError):
            simulate_paths(model, 0.0, 1.0, 0.1, 0, 1)
        with self.assertRaises(UsageError):
            simulate_paths(model, 0.0, 1.0, 0.1, 10, 1, scheme="milstein")
        with self.assertRaises(UsageError):
            simulate_paths(model, 0.0, 1.0, 0.1, 10, 1, barriers=(1.0, 2.0))

    def test_strong_error_order(self):
        """Testa a ordem forte 1/2 do esquema de Euler no GBM."""
        model = load_model("gbm")
        mu, sigma = 0.03, 0.2

        def exact(x0, T, W):
            return x0 * np.exp((mu - 0.5 * sigma**2) * T + sigma * W)

        coarse = strong_error(model, exact, 1.0, 1.0, 1.0 / 16, 20000, 11)
        fine = strong_error(model, exact, 1.0, 1.0, 1.0 / 32, 20000, 11)
        self.assertGreaterEqual(coarse / fine, 1.2)
        self.assertLessEqual(coarse / fine, 1.7)


class TestEscape(TestCase):
    """Testes para as estatísticas de saída."""

    def test_one_dimensional_escape(self):
        """Testa a saída pela direita com a dinâmica k(.;+1) do modelo cosh."""
        heat = load_model("heat1d")
        recovered = recover_1d(heat, 0.0, 1)
        lo, hi = escape_barriers(heat)
        self.assertLess(lo, 0.0)
        self.assertGreater(hi, 0.0)
        ensemble = simulate_paths(recovered.dynamics, 0.0, 40.0, 0.01, 400, 5, barriers=(lo, hi))
        stats = escape_statistics(ensemble)
        self.assertEqual(("left", "right"), stats.labels)
        self.assertGreater(stats.frequencies[1], 0.95)

    def test_mixture_escape_frequencies(self):
        """Testa as frequências de saída da mistura (1/2, 1/2) do modelo cosh."""
        heat = load_model("heat1d")
        recovered = recover_mixture_1d(heat, 0.0, 0.5, 0.5)
        barriers = escape_barriers(heat)
        expected = {0.0: 0.5, 1.0: 1.0 - 0.5 * math.exp(-1.0) / math.cosh(1.0)}
        for seed, (x0, right) in enumerate(expected.items()):
            self.assertAlmostEqual(right, 1.0 - limiting_distribution(recovered, x0, "left"), places=10)
            ensemble = simulate_paths(recovered.dynamics, x0, 40.0, 0.01, 2000, seed, barriers=barriers)
            stats = escape_statistics(ensemble)
            self.assertFalse(stats.low_power)
            self.assertLess(abs(stats.frequencies[1] - right), 4.0 * stats.std_errors[1] + 5e-3)

    def test_direction_escape(self):
        """Testa que a deriva 2 e1 escapa na direção e1."""
        recovered = recover_direction_nd(load_model("bm2"), 0.0, [1.0, 0.0])
        ensemble = simulate_paths(recovered.dynamics, [0.0, 0.0], 5.0, 0.05, 1000, 2)
        stats = escape_statistics(ensemble, [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        self.assertEqual("(1, 0)", stats.labels[0])
        self.assertGreater(stats.frequencies[0], 0.9)
        self.assertAlmostEqual(1.0, float(np.sum(stats.frequencies)))
        self.assertFalse(stats.low_power)

    def test_directions_required(self):
        """Testa que N-D exige direções."""
        ensemble = simulate_paths(load_model("bm2"), [0.0, 0.0], 1.0, 0.1, 10, 1)
        with self.assertRaises(UsageError):
            escape_statistics(ensemble)


class TestYield(TestCase):
    """Testes para a curva de juros."""

    def test_constant_rate(self):
        """Testa yield = r com taxa constante."""
        curve = long_term_yield(load_model("gbm-log"), [1.0, 2.0, 4.0, 8.0], 200, 0)
        np.testing.assert_allclose(curve.yields, np.full(4, 0.05), atol=1e-12)
        self.assertAlmostEqual(0.05, curve.tail_yield, delta=1e-12)

    def test_tanh_rate_matches_pde(self):
        """Testa o preço MC contra Crank-Nicolson."""
        model = load_model("tanh-rate")
        curve = long_term_yield(model, [1.0, 2.0], 20000, 4)
        for T, price, se in zip(curve.times, curve.prices, curve.price_se):
            reference = bond_price_pde(model, float(T))
            self.assertLess(abs(price - reference), 4.0 * se + 1e-4)

    def test_price_claim(self):
        """Testa P_T 1 = exp(-rT) com taxa constante."""
        unit = ScalarField.constant_field(1.0, 1)
        price, se = price_claim(load_model("gbm-log"), unit, 0.0, 2.0, 50, 0, dt=0.5)
        self.assertAlmostEqual(math.exp(-0.1), price, places=12)
        self.assertAlmostEqual(0.0, se, places=12)

    def test_invalid_grid(self):
        """Testa malhas de horizontes inválidas."""
        with self.assertRaises(UsageError):
            long_term_yield(load_model("gbm-log"), [2.0, 1.0], 10, 0)


class TestCashflow(TestCase):
    """Testes para a taxa de fluxo de caixa."""

    def setUp(self):
        self.model = load_model("gbm-log")

    def test_unit_payoff(self):
        """Testa e^{beta t} P_t 1 = 1 quando beta = r."""
        recovered = recover_1d(self.model, 0.05, 1)
        unit = ScalarField.constant_field(1.0, 1)
        curve = cashflow_rate(self.model, unit, recovered, [1.0, 2.0, 3.0, 4.0], 200, 0)
        np.testing.assert_allclose(curve.values, np.ones(4), atol=1e-10)
        self.assertTrue(curve.converged)
        self.assertAlmostEqual(1.0, curve.limit, places=10)
        self.assertAlmostEqual(1.0, curve.reference, places=8)

    def test_recovered_estimator_on_phi(self):
        """Testa que f = phi devolve phi(x) no estimador recuperado."""
        recovered = recover_1d(self.model, 0.05, -1)
        curve = cashflow_rate(
            self.model, recovered.phi, recovered, [1.0, 2.0], 100, 0, x0=0.4, estimator="recovered"
        )
        np.testing.assert_allclose(curve.values, np.full(2, math.exp(-0.6)), rtol=1e-12)

    def test_unknown_estimator(self):
        """Testa estimadores desconhecidos."""
        recovered = recover_1d(self.model, 0.05, 1)
        with self.assertRaises(UsageError):
            cashflow_rate(self.model, recovered.phi, recovered, [1.0], 10, 0, estimator="bogus")
