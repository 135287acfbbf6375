#!/usr/bin/env python3
"""
🧪 Smoke Tests for wienervar

Quick end-to-end runs of small experiments to make sure an installation
works: sampling, both sides of the variational formula, the concavity scan
and the Brascamp–Lieb certification. Takes seconds, not minutes.
"""

import argparse
import sys
import tempfile

from wienervar.core.exceptions import WienerVarError
from wienervar.services.experiment_runner import experiment_runner


class SmokeTests:
    def __init__(self, out_dir, n_paths):
        self.out_dir = out_dir
        self.n_paths = n_paths
        self.passed = 0
        self.failed = 0

    def _run(self, label, descriptor):
        try:
            config = experiment_runner.parse_config(descriptor)
            record = experiment_runner.run(config)
            experiment_runner.write_record(record, self.out_dir)
            failed = [c.name for c in record.checks if not c.passed]
            assert not failed, f"failed checks: {', '.join(failed)}"
            print(f"✅ {label} passed")
            self.passed += 1
        except (AssertionError, WienerVarError) as e:
            print(f"❌ {label} failed: {e}")
            self.failed += 1

    def test_linear_lhs(self):
        """log E[e^{W(1)}] = 1/2, direct and importance sampled"""
        print("📐 Testing the left side...")
        self._run("Linear LHS", {
            "kind": "estimate-lhs",
            "experiment_id": "smoke_linear_lhs",
            "seed": 1,
            "n_paths": self.n_paths,
            "grid": {"n_steps": 8},
            "functional": {"kind": "linear-terminal", "c": 1.0},
            "method": "both",
            "drift": {"kind": "constant", "theta": [1.0]},
            "expect": {"value": 0.5, "n_sigma": 4.0},
        })

    def test_roundtrip(self):
        """T^{v~} and T^{v-bar} invert T^v"""
        print("🔁 Testing drift conjugates...")
        self._run("Conjugate round trip", {
            "kind": "conjugate-roundtrip",
            "experiment_id": "smoke_roundtrip",
            "grid": {"n_steps": 16},
            "n_fixtures": 10,
            "families": [
                {"kind": "piecewise-constant", "knots": [0.0, 0.5, 1.0], "lower": -1.0, "upper": 1.0},
                {"kind": "linear-state-feedback", "knots": [0.0, 0.5, 1.0], "lower": -1.0, "upper": 1.0},
            ],
        })

    def test_prekopa_scan(self):
        """λ ↦ log E[e^{-(W(1)-λ)²/2}] is concave"""
        print("⛰️ Testing the concavity scan...")
        self._run("Gaussian shift scan", {
            "kind": "prekopa-scan",
            "experiment_id": "smoke_prekopa",
            "seed": 2,
            "n_paths": self.n_paths,
            "grid": {"n_steps": 8},
            "param_functional": {"kind": "gaussian-shift"},
            "lambdas": [-1.0, 0.0, 1.0],
            "b2_triples": 30,
            "expect_b2": True,
        })

    def test_certification(self):
        """The shallow double well is certified"""
        print("🧮 Testing the Brascamp–Lieb certification...")
        self._run("Double well certification", {
            "kind": "bl-certify",
            "experiment_id": "smoke_certify",
            "potential": {"kind": "double_well", "alpha": 5.0, "beta": 2.0},
            "bass": False,
            "expect_certified": True,
        })

    def test_error_handling(self):
        """Bad descriptors are rejected before anything runs"""
        print("🚫 Testing error handling...")
        try:
            experiment_runner.parse_config({"kind": "estimate-lhs", "experiment_id": "x", "surprise": 1})
            print("❌ Error handling failed: an invalid descriptor was accepted")
            self.failed += 1
        except WienerVarError:
            print("✅ Error handling working")
            self.passed += 1

    def run_all_tests(self):
        """Run all smoke tests"""
        print("🧪 Starting smoke tests")
        print(f"📁 Output: {self.out_dir}")
        print("=" * 50)

        self.test_linear_lhs()
        self.test_roundtrip()
        self.test_prekopa_scan()
        self.test_certification()
        self.test_error_handling()

        print("=" * 50)
        print("📊 Smoke Test Results:")
        print(f"   ✅ Passed: {self.passed}")
        print(f"   ❌ Failed: {self.failed}")
        print(f"   📊 Total: {self.passed + self.failed}")

        if self.failed == 0:
            print("🎉 All smoke tests passed!")
            return True
        print(f"⚠️ {self.failed} smoke tests failed!")
        return False


def main():
    parser = argparse.ArgumentParser(description="Run smoke tests for wienervar")
    parser.add_argument("--out", help="Output directory (default: a temporary directory)")
    parser.add_argument("--n-paths", type=int, default=20_000, help="Paths per Monte Carlo estimate")
    args = parser.parse_args()

    out_dir = args.out or tempfile.mkdtemp(prefix="wienervar-smoke-")
    tests = SmokeTests(out_dir, args.n_paths)
    success = tests.run_all_tests()
    sys.exit(0 if success else 1)


if __name__ == "__main__":
    main()
