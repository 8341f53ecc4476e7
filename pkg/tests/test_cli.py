#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Testes para a interface de linha de comando.
"""

import csv
import json
import os
import shutil
import tempfile
from unittest import TestCase, mock

from click.testing import CliRunner

from rossify.cli.main import main
from rossify.core.verification import CheckResult
from rossify.utils.config import get_settings, reset_settings


def _read_csv(path):
    with open(path, "r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def _read_json(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


class TestCLI(TestCase):
    """Testes para a interface de linha de comando."""

    def setUp(self):
        """Configuração dos testes."""
        self.runner = CliRunner()
        self.temp_dir = tempfile.mkdtemp()
        self.out = os.path.join(self.temp_dir, "out")
        self.env = mock.patch.dict(os.environ, {"ROSSIFY_LOG_DIR": os.path.join(self.temp_dir, "logs")})
        self.env.start()
        reset_settings()

    def tearDown(self):
        """Limpeza após os testes."""
        self.env.stop()
        reset_settings()
        shutil.rmtree(self.temp_dir)

    def _invoke(self, *args):
        return self.runner.invoke(main, list(args) + ["--out", self.out])

    def test_recover_side(self):
        """Testa o comando recover no lado direito do GBM em log."""
        result = self._invoke("recover", "--model", "gbm-log", "--beta", "0.05", "--side", "right")
        self.assertEqual(0, result.exit_code, result.output)
        record = _read_json(os.path.join(self.out, "recovered.json"))
        self.assertEqual(1, record["directive"]["side"])
        self.assertAlmostEqual(0.03, record["drift_samples"][0]["drift"][0], places=8)
        self.assertEqual("admissible", record["certificate"]["verdict"])

    def test_classify(self):
        """Testa o comando classify."""
        result = self._invoke("classify", "--model", "gbm-log", "--beta", "0.05", "--beta", "0.07")
        self.assertEqual(0, result.exit_code, result.output)
        data = _read_json(os.path.join(self.out, "classify.json"))
        self.assertAlmostEqual(0.06125, data["beta_bar"], delta=1e-5)
        self.assertEqual(["subcritical", "supercritical"], [c["class"] for c in data["classes"]])

    def test_classify_constant_coefficients(self):
        """Testa classify em N-D pelo sinal de lambda."""
        result = self._invoke("classify", "--model", "bm2", "--beta", "0", "--beta", "1")
        self.assertEqual(0, result.exit_code, result.output)
        data = _read_json(os.path.join(self.out, "classify.json"))
        self.assertEqual(["subcritical", "critical"], [c["class"] for c in data["classes"]])

    def test_simulate_degenerate(self):
        """Testa X_T = x0 + c T com sigma nula."""
        model_path = os.path.join(self.temp_dir, "flat.json")
        with open(model_path, "w", encoding="utf-8") as f:
            json.dump(
                {
                    "name": "flat",
                    "dim": 1,
                    "drift": {"kind": "constant", "value": [0.5]},
                    "sigma": {"kind": "constant", "value": [[0.0]]},
                    "rate": {"kind": "constant", "value": 0.0},
                },
                f,
            )
        result = self._invoke(
            "simulate", "--model", model_path, "--T", "2", "--dt", "0.01", "--paths", "100", "--x0", "1"
        )
        self.assertEqual(0, result.exit_code, result.output)
        rows = _read_csv(os.path.join(self.out, "terminal.csv"))
        self.assertAlmostEqual(2.0, float(rows[0]["mean"]), places=12)

    def test_infeasible_directive(self):
        """Testa a saída 2 para lambda = 0 em N = 2."""
        result = self._invoke(
            "recover", "--model", "bm2", "--mode", "direction_nd", "--beta", "1", "--gamma", "1,0"
        )
        self.assertEqual(2, result.exit_code)
        self.assertFalse(os.path.exists(os.path.join(self.out, "recovered.json")))

    def test_missing_mode(self):
        """Testa recover sem --mode nem --directive."""
        result = self._invoke("recover", "--model", "gbm-log", "--beta", "0.05")
        self.assertEqual(1, result.exit_code)

    def test_model_and_recovered(self):
        """Testa --model e --recovered juntos."""
        result = self._invoke("simulate", "--model", "gbm-log", "--recovered", "x.json")
        self.assertEqual(1, result.exit_code)

    def test_unknown_option(self):
        """Testa opções desconhecidas."""
        result = self._invoke("classify", "--model", "gbm-log", "--bogus")
        self.assertEqual(1, result.exit_code)

    def test_invalid_model_file(self):
        """Testa um arquivo de modelo inválido."""
        path = os.path.join(self.temp_dir, "bad.json")
        with open(path, "w", encoding="utf-8") as f:
            f.write("{nao e json")
        result = self._invoke("classify", "--model", path)
        self.assertEqual(1, result.exit_code)

    def test_recover_then_simulate(self):
        """Testa simulate --recovered sobre a saída de recover."""
        result = self._invoke("recover", "--model", "bm2", "--mode", "direction_nd", "--beta", "0", "--gamma", "1,0")
        self.assertEqual(0, result.exit_code, result.output)
        recovered = os.path.join(self.out, "recovered.json")
        result = self._invoke(
            "simulate", "--recovered", recovered, "--T", "5", "--dt", "0.05", "--paths", "500", "--seed", "3"
        )
        self.assertEqual(0, result.exit_code, result.output)
        rows = _read_csv(os.path.join(self.out, "terminal.csv"))
        self.assertAlmostEqual(10.0, float(rows[0]["mean"]), delta=1.0)
        escape = _read_csv(os.path.join(self.out, "escape.csv"))
        self.assertEqual("(1, 0)", escape[0]["boundary"])
        self.assertGreater(float(escape[0]["frequency"]), 0.9)

    def test_directive_file(self):
        """Testa recover com arquivo de diretiva e model_ref."""
        path = os.path.join(self.temp_dir, "directive.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump({"mode": "recurrent", "model_ref": "gbm-log"}, f)
        result = self._invoke("recover", "--directive", path)
        self.assertEqual(0, result.exit_code, result.output)
        record = _read_json(os.path.join(self.out, "recovered.json"))
        self.assertAlmostEqual(0.06125, record["beta"], places=12)

    def test_cashflow(self):
        """Testa o comando cashflow com payoff unitário."""
        result = self._invoke("recover", "--model", "gbm-log", "--beta", "0.05", "--side", "right")
        self.assertEqual(0, result.exit_code, result.output)
        result = self._invoke(
            "cashflow",
            "--recovered", os.path.join(self.out, "recovered.json"),
            "--payoff", "1",
            "--T", "4",
            "--points", "4",
            "--paths", "200",
        )
        self.assertEqual(0, result.exit_code, result.output)
        summary = _read_json(os.path.join(self.out, "cashflow.json"))
        self.assertTrue(summary["converged"])
        self.assertAlmostEqual(1.0, summary["limit"], places=10)
        self.assertEqual(4, len(_read_csv(os.path.join(self.out, "cashflow.csv"))))

    def test_yield(self):
        """Testa o comando yield com taxa constante."""
        result = self._invoke("yield", "--model", "gbm-log", "--T", "4", "--points", "4", "--paths", "100")
        self.assertEqual(0, result.exit_code, result.output)
        rows = _read_csv(os.path.join(self.out, "yield.csv"))
        self.assertAlmostEqual(0.05, float(rows[-1]["yield"]), delta=1e-12)

    def test_certify(self):
        """Testa o comando certify."""
        result = self._invoke("certify", "--model", "gbm-log", "--beta", "0.05", "--h", "exp(-1.5*x1)")
        self.assertEqual(0, result.exit_code, result.output)
        self.assertEqual("admissible", _read_json(os.path.join(self.out, "certificate.json"))["verdict"])

    def test_kernels(self):
        """Testa o comando kernels em 1D."""
        result = self._invoke("kernels", "--model", "gbm-log", "--beta", "0.05", "--points", "5")
        self.assertEqual(0, result.exit_code, result.output)
        rows = _read_csv(os.path.join(self.out, "kernels.csv"))
        self.assertEqual(5, len(rows))
        self.assertAlmostEqual(1.0, float(rows[2]["k_right"]), places=8)

    @mock.patch("rossify.cli.commands.run_verification")
    def test_verify(self, mock_verification):
        """Testa o comando verify (aprovado e reprovado)."""
        mock_verification.return_value = [CheckResult("kernel_residual", True, 1e-9, 1e-6)]
        result = self._invoke("verify", "--model", "gbm-log")
        self.assertEqual(0, result.exit_code, result.output)
        self.assertTrue(_read_json(os.path.join(self.out, "verify.json"))["checks"][0]["passed"])

        mock_verification.return_value = [CheckResult("kernel_residual", False, 1e-3, 1e-6)]
        result = self._invoke("verify", "--model", "gbm-log")
        self.assertEqual(1, result.exit_code)

    @mock.patch("rossify.cli.main.run_classify")
    def test_numeric_overrides(self, mock_classify):
        """Testa que as opções numéricas sobrescrevem Settings só na execução."""
        result = self._invoke(
            "classify", "--model", "gbm-log",
            "--truncation", "30", "--wronskian-tol", "1e-9", "--threads", "2",
        )
        self.assertEqual(0, result.exit_code, result.output)
        settings = mock_classify.call_args.args[4]
        self.assertEqual(30.0, settings.truncation)
        self.assertEqual(1e-9, settings.wronskian_tol)
        self.assertEqual(2, settings.threads)
        self.assertEqual(25.0, get_settings().truncation)

        result = self._invoke("classify", "--model", "gbm-log")
        self.assertEqual(0, result.exit_code, result.output)
        self.assertEqual(25.0, mock_classify.call_args.args[4].truncation)

    def test_invalid_numeric_override(self):
        """Testa valores inválidos nas opções numéricas."""
        result = self._invoke("classify", "--model", "gbm-log", "--truncation", "-1")
        self.assertEqual(1, result.exit_code)
        result = self._invoke("simulate", "--model", "gbm-log", "--certify-paths", "10")
        self.assertEqual(1, result.exit_code)

    def test_config_show(self):
        """Testa o comando config show."""
        result = self.runner.invoke(main, ["config", "show"])
        self.assertEqual(0, result.exit_code, result.output)
        self.assertIn("ROSSIFY_TRUNCATION", result.output)

    def test_config_set(self):
        """Testa o comando config set."""
        env_file = os.path.join(self.temp_dir, ".env")
        with mock.patch.dict(os.environ, {}):
            result = self.runner.invoke(main, ["config", "set", "mc_steps=128", "--env-file", env_file])
            self.assertEqual(0, result.exit_code, result.output)
        with open(env_file, "r", encoding="utf-8") as f:
            self.assertIn("ROSSIFY_MC_STEPS=128", f.read())
        result = self.runner.invoke(main, ["config", "set", "nao_existe=1", "--env-file", env_file])
        self.assertEqual(1, result.exit_code)
