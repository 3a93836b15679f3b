"""End-to-end checks of the fhum command line: exit codes, output files, schema, determinism."""
import csv
import json
import os
import subprocess
import tempfile
import unittest
from pathlib import Path

import jsonschema

BIN = os.environ["FHUM_BIN"]
ROOT = Path(os.environ["FHUM_ROOT"])
SMALL = ["--config", str(ROOT / "configs" / "custom_point.yaml")]


def fhum(*args, env=None):
    full_env = {k: v for k, v in os.environ.items() if k != "FHUM_OUTPUT_DIR"}
    full_env.update(env or {})
    return subprocess.run([BIN, *args], capture_output=True, text=True, env=full_env)


class Cli(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def test_mlf(self):
        r = fhum("mlf", "--alpha", "1", "--beta", "1", "--z", "1")
        self.assertEqual(r.returncode, 0)
        self.assertAlmostEqual(float(r.stdout), 2.718281828459045, places=13)
        self.assertEqual(fhum("mlf", "--alpha", "0", "--beta", "1", "--z", "1").returncode, 64)

    def test_usage_errors(self):
        self.assertEqual(fhum("run", "--preset", "example1", "--max-iters", "0").returncode, 64)
        self.assertEqual(fhum("run", "--preset", "example1", "--alpha", "0.4").returncode, 64)
        self.assertEqual(fhum("run", "--preset", "no_such_preset").returncode, 64)
        self.assertEqual(fhum("run", "--preset", "example1", "--bogus").returncode, 64)
        self.assertEqual(fhum("run").returncode, 64)
        self.assertEqual(fhum("sweep", "--table", "3").returncode, 64)
        bad = self.tmp / "bad.yaml"
        bad.write_text("preset: example1\nsolver: {iters: 3}\n")
        r = fhum("run", "--config", str(bad))
        self.assertEqual(r.returncode, 64)
        self.assertIn("iters", r.stderr)

    def test_run_writes_valid_deterministic_outputs(self):
        a, b = self.tmp / "a", self.tmp / "b"
        self.assertEqual(fhum("run", *SMALL, "--output", str(a)).returncode, 0)
        self.assertEqual(fhum("run", *SMALL, "--output", str(b)).returncode, 0)
        names = ["report.json", "control.csv", "reached_state.dat", "desired_state.dat", "trace.csv"]
        for n in names:
            self.assertEqual((a / n).read_bytes(), (b / n).read_bytes(), n)
        schema = json.loads((ROOT / "docs" / "report.schema.json").read_text())
        report = json.loads((a / "report.json").read_text())
        jsonschema.validate(report, schema)
        self.assertTrue(report["report"]["converged"])
        with open(a / "control.csv") as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], ["t", "u"])
        self.assertEqual(len(rows) - 1, report["problem"]["M"])
        with open(a / "trace.csv") as f:
            self.assertEqual(next(csv.reader(f)), ["s", "reached", "desired"])
        lines = (a / "reached_state.dat").read_text().splitlines()
        self.assertEqual(lines[0], "# J=2 P=64")
        self.assertEqual(len(lines), 1 + 64 * 64)

    def test_output_directory_precedence(self):
        env_dir, flag_dir = self.tmp / "env", self.tmp / "flag"
        self.assertEqual(fhum("run", *SMALL, env={"FHUM_OUTPUT_DIR": str(env_dir)}).returncode, 0)
        self.assertTrue((env_dir / "report.json").exists())
        self.assertEqual(fhum("run", *SMALL, "--output", str(flag_dir), env={"FHUM_OUTPUT_DIR": str(env_dir / "x")}).returncode, 0)
        self.assertTrue((flag_dir / "report.json").exists())
        self.assertFalse((env_dir / "x").exists())

    def test_not_converged_exits_2(self):
        r = fhum("run", *SMALL, "--max-iters", "1", "--output", str(self.tmp / "nc"))
        self.assertEqual(r.returncode, 2)
        self.assertFalse(json.loads((self.tmp / "nc" / "report.json").read_text())["report"]["converged"])

    def test_blow_up_exits_1_with_node(self):
        r = fhum("run", "--preset", "example2", "--J", "4", "--M", "32", "--quad-order", "16", "--output", str(self.tmp / "b"))
        self.assertEqual(r.returncode, 1)
        self.assertRegex(r.stderr, r"node \d+")

    def test_sweep_small(self):
        out = self.tmp / "sw"
        r = fhum("sweep", "--table", "1", "--J", "3", "--M", "16", "--quad-order", "8", "--max-iters", "2", "--jobs", "2", "--output", str(out))
        self.assertIn(r.returncode, (0, 2))
        with open(out / "table1.csv") as f:
            rows = list(csv.DictReader(f))
        self.assertEqual([row["label"] for row in rows], [f"table1_row{i}" for i in range(1, 7)])
        self.assertEqual(list(rows[0])[:7], ["actuator", "region", "error_gamma", "error_omega", "gram_min_eig", "iterations", "converged"])
        for row in rows:
            self.assertTrue((out / row["label"] / "report.json").exists())
        again = self.tmp / "sw2"
        fhum("sweep", "--table", "1", "--J", "3", "--M", "16", "--quad-order", "8", "--max-iters", "2", "--output", str(again))
        self.assertEqual((out / "table1.csv").read_bytes(), (again / "table1.csv").read_bytes())

    def test_sweep_failed_rows_record_nan(self):
        out = self.tmp / "sw"
        r = fhum("sweep", "--table", "2", "--J", "4", "--M", "32", "--quad-order", "16", "--output", str(out))
        self.assertEqual(r.returncode, 1)
        with open(out / "table2.csv") as f:
            rows = list(csv.DictReader(f))
        self.assertEqual(len(rows), 6)
        for row in rows:
            self.assertEqual(row["error_gamma"], "NaN")
            self.assertTrue(row["status"].startswith("blow-up at node"))

    def test_check_whole_domain_actuator(self):
        cfg = self.tmp / "zonal.yaml"
        cfg.write_text("preset: example1\nlabel: whole\nproblem:\n  J: 3\n  actuator: {zonal: [0, 3.141592653589793, 0, 3.141592653589793]}\n")
        r = fhum("check", "--config", str(cfg))
        self.assertEqual(r.returncode, 0)
        self.assertIn("rank: 1\n", r.stdout)
        zero = [line for line in r.stdout.splitlines() if line.startswith("zero_modes:")][0]
        self.assertEqual(zero.count("("), 15)

    def test_check_alpha_near_half(self):
        r = fhum("check", "--preset", "example1", "--J", "3", "--alpha", "0.51")
        self.assertEqual(r.returncode, 0)
        self.assertIn("warning", r.stdout)
        self.assertEqual(fhum("check", "--preset", "example1", "--J", "3", "--alpha", "0.51", "--strict-alpha").returncode, 64)


if __name__ == "__main__":
    unittest.main()
