# Copyright 2026 The qterm Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""End-to-end checks of the qterm binary.

Usage: cli_test.py <qterm-binary> <source-root>
"""

import json
import os
import subprocess
import sys
import tempfile
import unittest

import jsonschema
from referencing import Registry, Resource

QTERM = None
ROOT = None


def fixture(name):
    return os.path.join(ROOT, "fixtures", name)


def run(*args, env=None):
    full_env = dict(os.environ)
    full_env.pop("QTERM_TOLERANCES", None)
    if env:
        full_env.update(env)
    return subprocess.run([QTERM, *args], capture_output=True, env=full_env, timeout=60)


class CliTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        with open(os.path.join(ROOT, "schema", "report.schema.json")) as f:
            report = json.load(f)
        with open(os.path.join(ROOT, "schema", "model.schema.json")) as f:
            model = json.load(f)
        registry = Registry().with_resources(
            [(s["$id"], Resource.from_contents(s)) for s in (report, model)])
        cls.report_validator = jsonschema.Draft202012Validator(report, registry=registry)
        cls.model_validator = jsonschema.Draft202012Validator(model)
        cls.tmp = tempfile.TemporaryDirectory()

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()

    def write_model(self, name, model):
        path = os.path.join(self.tmp.name, name)
        with open(path, "w") as f:
            json.dump(model, f)
        return path

    def report(self, *args, code=0, env=None):
        p = run(*args, env=env)
        self.assertEqual(p.returncode, code, p.stderr.decode())
        rep = json.loads(p.stdout)
        self.report_validator.validate(rep)
        return rep["result"]

    def failure(self, code, *args):
        p = run(*args)
        self.assertEqual(p.returncode, code, p.stdout.decode())
        self.assertEqual(p.stdout, b"")
        self.assertTrue(p.stderr.startswith(b"qterm: "), p.stderr.decode())

    def test_fixtures_match_model_schema(self):
        for name in ("qbf.json", "qbf_modified.json", "nqw.json"):
            with open(fixture(name)) as f:
                self.model_validator.validate(json.load(f))

    def test_reach_i(self):
        r = self.report("reach-i", "--model", fixture("qbf.json"), "--state", "11")
        self.assertEqual(r["dim"], 4)
        self.assertEqual(r["chain_dims"], [1, 3, 4])
        r = self.report("reach-i", "--model", fixture("nqw.json"), "--state", "0")
        self.assertEqual(r["dim"], 3)

    def test_reach_ii(self):
        r = self.report("reach-ii", "--model", fixture("qbf.json"), "--state", "11")
        self.assertEqual(r["dim"], 8)
        self.assertEqual(len(r["pure_basis"]), 8)

    def test_reach_ii_rejects_mixed_input(self):
        mixed = json.dumps([[0.25 if i == j else 0 for j in range(4)] for i in range(4)])
        self.failure(3, "reach-ii", "--model", fixture("qbf.json"), "--state", mixed)

    def test_divergent(self):
        r = self.report("divergent", "--model", fixture("qbf.json"))
        self.assertEqual(sorted(l["loop"] for l in r["leaves"]), [["alpha1"], ["alpha2"]])
        self.assertTrue(all(l["space"]["dim"] == 2 for l in r["leaves"]))

    def test_divergent_nqw_period_two(self):
        # |0> survives w2 w1 w2 w1 ... with probability 1/2, so leaves exist.
        r = self.report("divergent", "--model", fixture("nqw.json"))
        self.assertTrue(r["leaves"])
        self.assertTrue(all(len(l["loop"]) == 2 for l in r["leaves"]))

    def test_divergent_all_false_is_empty(self):
        eye = [[1, 0], [0, 1]]
        zero = [[0, 0], [0, 0]]
        path = self.write_model("halt.json", {
            "dim": 2, "actions": ["a"], "kraus": {"a": [eye]},
            "measurement": {"m_true": zero, "m_false": eye}})
        r = self.report("divergent", "--model", path)
        self.assertEqual(r["pd0"]["dim"], 0)
        self.assertEqual(r["leaves"], [])

    def test_nonterm_qbf(self):
        r = self.report("nonterm", "--model", fixture("qbf.json"), "--state", "11")
        self.assertEqual(r["status"], "Nonterminating")
        self.assertLessEqual(r["validation"]["lower_bound"], 1 - 1e-6)
        self.assertLessEqual(r["validation"]["plateau_delta"], 1e-9)
        self.assertLessEqual(r["certificate_residual"], 1e-8)

    def test_nonterm_forced_order(self):
        r = self.report("nonterm", "--model", fixture("qbf.json"), "--state", "11",
                        "--witness", "[1, 0, 0, 0]", "--candidate-order", "3,0,1,2")
        self.assertEqual(r["scheduler"]["prefix"], ["alpha1", "alpha2"])
        self.assertEqual(r["scheduler"]["loop"], ["alpha2"])

    def test_nonterm_terminating_exits_4_with_report(self):
        x = [[0, 1], [1, 0]]
        path = self.write_model("flip.json", {
            "dim": 2, "actions": ["x"], "kraus": {"x": [x]},
            "measurement": {"m_true": [[1, 0], [0, 0]], "m_false": [[0, 0], [0, 1]]},
            "states": {"0": [1, 0]}})
        r = self.report("nonterm", "--model", path, "--state", "0", code=4)
        self.assertEqual(r["status"], "Terminating")
        self.assertNotIn("scheduler", r)

    def test_universal(self):
        r = self.report("universal", "--model", fixture("qbf.json"))
        self.assertEqual(r["status"], "UniversallyTerminating")
        self.assertEqual(r["scheduler"]["loop"], ["alpha1", "alpha2", "alpha1"])
        self.assertEqual(len(r["oracle"]["basis_tp"]), 4)
        r = self.report("universal", "--model", fixture("qbf_modified.json"))
        self.assertEqual(r["status"], "NotUniversal")
        self.assertEqual(r["invariant_space"]["dim"], 1)

    def test_simulate_divergent_lasso_is_flat_zero(self):
        r = self.report("simulate", "--model", fixture("qbf.json"), "--state", "11",
                        "--lasso", "alpha1", "--steps", "100")
        self.assertEqual(len(r["trace"]), 101)
        self.assertTrue(all(abs(t) <= 1e-12 for t in r["trace"]))

    def test_simulate_word(self):
        r = self.report("simulate", "--model", fixture("nqw.json"), "--state", "0",
                        "--word", "w1")
        self.assertEqual(len(r["trace"]), 2)
        self.assertAlmostEqual(r["tp"], 1 / 3, places=12)

    def test_compile_program(self):
        r = self.report("compile", "--program", fixture("qbf_program.txt"),
                        "--bindings", fixture("qbf_bindings.json"))
        self.assertEqual(r["located"]["dim"], 4)
        self.model_validator.validate(r["flat"])

    def test_program_input(self):
        r = self.report("reach-i", "--program", fixture("qbf_program.txt"),
                        "--bindings", fixture("qbf_bindings.json"), "--state", "basis:3")
        self.assertGreaterEqual(r["dim"], 1)

    def test_validation_errors(self):
        qbf = fixture("qbf.json")
        self.failure(2, "reach-i", "--model", os.path.join(self.tmp.name, "missing.json"),
                     "--state", "11")
        self.failure(2, "reach-i", "--model", qbf, "--state", "nope")
        self.failure(2, "reach-i", "--model", qbf, "--state", "basis:9")
        self.failure(2, "reach-i", "--model", qbf, "--state", "11", "--tolerance", "bogus=1")
        self.failure(2, "reach-i", "--model", qbf, "--program", fixture("qbf_program.txt"),
                     "--state", "11")
        self.failure(2, "simulate", "--model", qbf, "--state", "11", "--word", "alpha9")
        self.assertEqual(run("frobnicate").returncode, 2)

    def test_non_trace_preserving_model_rejected(self):
        path = self.write_model("leaky.json", {
            "dim": 2, "actions": ["a"], "kraus": {"a": [[[0.5, 0], [0, 0.5]]]},
            "measurement": {"m_true": [[1, 0], [0, 0]], "m_false": [[0, 0], [0, 1]]}})
        self.failure(2, "divergent", "--model", path)

    def test_deterministic_reports(self):
        cases = [
            ("reach-ii", "--model", fixture("qbf.json"), "--state", "11"),
            ("divergent", "--model", fixture("nqw.json")),
            ("nonterm", "--model", fixture("qbf.json"), "--state", "11"),
            ("universal", "--model", fixture("qbf.json"), "--pretty"),
        ]
        for args in cases:
            first, second = run(*args), run(*args)
            self.assertEqual(first.returncode, 0)
            self.assertEqual(first.stdout, second.stdout, args[0])

    def test_timing_is_opt_in(self):
        args = ("reach-i", "--model", fixture("qbf.json"), "--state", "11")
        self.assertNotIn("wall_time_s", json.loads(run(*args).stdout))
        self.assertIn("wall_time_s", json.loads(run(*args, "--timing").stdout))

    def test_tolerance_profile_from_environment(self):
        args = ("reach-i", "--model", fixture("qbf.json"), "--state", "11")
        rep = json.loads(run(*args, env={"QTERM_TOLERANCES": "strict"}).stdout)
        self.assertEqual(rep["tolerances"]["rank_tol"], 1e-10)
        rep = json.loads(run(*args, "--tolerance", "rank_tol=1e-7",
                             env={"QTERM_TOLERANCES": "strict"}).stdout)
        self.assertEqual(rep["tolerances"]["rank_tol"], 1e-7)

    def test_out_file(self):
        path = os.path.join(self.tmp.name, "report.json")
        p = run("reach-i", "--model", fixture("qbf.json"), "--state", "11", "--out", path)
        self.assertEqual(p.returncode, 0)
        self.assertEqual(p.stdout, b"")
        with open(path) as f:
            self.report_validator.validate(json.load(f))


if __name__ == "__main__":
    QTERM, ROOT = sys.argv[1], sys.argv[2]
    unittest.main(argv=sys.argv[:1], verbosity=2)
