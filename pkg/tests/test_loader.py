#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Testes para a leitura de modelos, diretivas e saídas.
"""

import csv
import json
import os
import shutil
import tempfile
from unittest import TestCase

import numpy as np

from rossify.core.recovery import recover_1d, recover_direction_nd
from rossify.io.loader import (
    PRESETS,
    load_directive,
    load_model,
    load_recovered,
    recovered_record,
    write_csv,
    write_json,
)
from rossify.utils.config import Settings
from rossify.utils.exceptions import UsageError, VerificationError


class TestModels(TestCase):
    """Testes para load_model."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def test_presets(self):
        """Testa que todos os presets carregam."""
        for name in PRESETS:
            model = load_model(name)
            self.assertEqual(name, model.name)

    def test_unknown_source(self):
        """Testa fonte inexistente."""
        with self.assertRaises(UsageError):
            load_model("nao-existe")

    def test_model_file(self):
        """Testa um arquivo de modelo com domínio."""
        path = os.path.join(self.temp_dir, "cir.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump(
                {
                    "name": "cir",
                    "dim": 1,
                    "drift": {"kind": "expr", "expr": ["0.5*(0.04 - x1)"]},
                    "sigma": {"kind": "expr", "expr": "0.1*sqrt(x1)"},
                    "rate": {"kind": "expr", "expr": "x1"},
                    "domain": [{"left": 0.0, "right": None}],
                },
                f,
            )
        model = load_model(path)
        self.assertEqual("cir", model.name)
        self.assertTrue(model.domain.intervals[0].left_finite)
        self.assertAlmostEqual(0.01, model.drift(0.02)[0])

    def test_fd_step_from_settings(self):
        """Testa que o passo das diferenças centrais vem de Settings."""
        self.assertEqual(1e-4, load_model("tanh-rate", settings=Settings()).rate.fd_step)
        model = load_model("tanh-rate", settings=Settings(fd_step=1e-3))
        self.assertEqual(1e-3, model.rate.fd_step)
        points = np.array([[0.0], [1.0]])
        coarse = load_model("tanh-rate", settings=Settings(fd_step=0.5)).rate
        self.assertGreater(coarse.gradient_mismatch(points), model.rate.gradient_mismatch(points))

    def test_invalid_field_is_named(self):
        """Testa que o campo inválido aparece no erro."""
        path = os.path.join(self.temp_dir, "bad.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump({"dim": 0, "drift": {"kind": "constant", "value": 0.0}}, f)
        with self.assertRaises(UsageError) as ctx:
            load_model(path)
        self.assertEqual("dim", ctx.exception.field)


class TestDirectives(TestCase):
    """Testes para load_directive."""

    def test_side_names(self):
        """Testa left/right."""
        self.assertEqual(-1, load_directive({"beta": 0.05, "mode": "transient_side", "side": "left"}).side)
        self.assertEqual(1, load_directive({"beta": 0.05, "mode": "transient_side", "side": "right"}).side)
        with self.assertRaises(UsageError):
            load_directive({"beta": 0.05, "mode": "transient_side", "side": "up"})

    def test_beta_required(self):
        """Testa beta obrigatório fora do modo recorrente."""
        with self.assertRaises(UsageError):
            load_directive({"mode": "direction_nd", "gamma": [1.0, 0.0]})
        self.assertIsNone(load_directive({"mode": "recurrent"}).beta)

    def test_weights(self):
        """Testa os pesos da mistura."""
        with self.assertRaises(UsageError):
            load_directive({"beta": 0.0, "mode": "mixture", "weights": [0.5, 0.6]})
        with self.assertRaises(UsageError):
            load_directive({"beta": 0.0, "mode": "mixture", "weights": [-0.5, 1.5]})

    def test_gamma_and_ratio(self):
        """Testa gamma unitário e razões."""
        with self.assertRaises(UsageError):
            load_directive({"beta": 0.0, "mode": "direction_nd", "gamma": [1.0, 1.0]})
        with self.assertRaises(UsageError):
            load_directive({"beta": 0.0, "mode": "ratio_nd", "ratio": [0.0, 1.0]})
        directive = load_directive({"beta": 0.0, "mode": "ratio_nd", "ratio": [0.6, 0.8]})
        self.assertEqual([0.6, 0.8], directive.ratio)


class TestOutputs(TestCase):
    """Testes para a gravação e reconstrução das saídas."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def test_round_trip(self):
        """Testa recover -> JSON -> dinâmica reconstruída."""
        recovered = recover_direction_nd(load_model("bm2"), 0.0, [0.6, 0.8])
        path = write_json(os.path.join(self.temp_dir, "recovered.json"), recovered_record(recovered))
        rebuilt = load_recovered(path)
        point = np.array([[0.3, -0.4]])
        self.assertEqual(
            recovered.dynamics.drift.values(point).tolist(), rebuilt.dynamics.drift.values(point).tolist()
        )
        self.assertEqual("direction_nd", rebuilt.directive.mode)

    def test_tampered_drift(self):
        """Testa a rejeição de amostras de deriva alteradas."""
        recovered = recover_1d(load_model("gbm-log"), 0.05, 1)
        path = write_json(os.path.join(self.temp_dir, "recovered.json"), recovered_record(recovered))
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        data["drift_samples"][0]["drift"][0] += 1e-6
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f)
        with self.assertRaises(VerificationError):
            load_recovered(path)

    def test_numeric_phi_samples(self):
        """Testa amostras de phi sem forma fechada e sua conferência na leitura."""
        closed = recovered_record(recover_1d(load_model("gbm-log"), 0.05, 1))
        self.assertEqual("exp", closed.phi.closed_form)
        self.assertIsNone(closed.phi.samples)

        recovered = recover_1d(load_model("tanh-rate"), 0.03, 1)
        record = recovered_record(recovered)
        self.assertIsNone(record.phi.closed_form)
        self.assertEqual(21, len(record.phi.samples))
        x = np.array([record.phi.samples[5]["x"]])
        self.assertAlmostEqual(float(recovered.phi.values(x)[0]), record.phi.samples[5]["phi"], places=12)

        path = write_json(os.path.join(self.temp_dir, "recovered.json"), record)
        rebuilt = load_recovered(path)
        point = np.array([[0.7]])
        self.assertEqual(recovered.phi.values(point).tolist(), rebuilt.phi.values(point).tolist())

        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        data["phi"]["samples"][3]["phi"] *= 1.0 + 1e-6
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f)
        with self.assertRaises(VerificationError):
            load_recovered(path)

    def test_sorted_json(self):
        """Testa chaves ordenadas."""
        path = write_json(os.path.join(self.temp_dir, "out", "a.json"), {"b": 1, "a": 2})
        with open(path, "r", encoding="utf-8") as f:
            self.assertEqual(["a", "b"], list(json.load(f)))

    def test_csv_repr(self):
        """Testa floats gravados com repr."""
        path = write_csv(os.path.join(self.temp_dir, "x.csv"), ["t", "v"], [(0.1, 1.0 / 3.0), (2.0, None)])
        with open(path, "r", encoding="utf-8", newline="") as f:
            rows = list(csv.reader(f))
        self.assertEqual(["t", "v"], rows[0])
        self.assertEqual(1.0 / 3.0, float(rows[1][1]))
        self.assertEqual("", rows[2][1])
