import numpy as np
import pytest

from wavestat import BasisConfig
from wavestat.riccati import eig_pqr_finite
from wavestat.validation import (SUITES, SuiteResult, concavity, hjb, limits, operator_identities,
                                 riccati_residuals, run_all)


def corrupt_mode(target, factor=1.01):
    def fn(n, t, mu, c, cfg):
        p, q, r = eig_pqr_finite(n, t, mu, c, cfg)
        return (p * factor if n == target else p), q, r
    return fn


class TestSuiteResult:
    def test_bounds(self):
        res = SuiteResult("x")
        res.add("upper ok", 0.5, 1.0)
        res.add("lower ok", 2.0, 1.0, upper=False)
        assert res.passed
        res.add("nan never passes", float("nan"), 1.0)
        assert not res.passed and [c.name for c in res.failures()] == ["nan never passes"]

    def test_serialisable(self):
        res = SuiteResult("x")
        res.add("a", 1.0, 2.0, "note")
        assert res.to_dict() == {"suite": "x", "passed": True,
                                 "checks": [{"name": "a", "observed": 1.0, "threshold": 2.0, "passed": True,
                                             "detail": "note"}]}


class TestSuites:
    @pytest.mark.parametrize("N", [1, 16])
    def test_all_pass(self, N):
        results = run_all(BasisConfig(N=N), seed=3)
        assert [r.name for r in results] == list(SUITES)
        assert all(r.passed for r in results), [c for r in results for c in r.failures()]

    def test_default_basis(self):
        results = run_all(BasisConfig(), seed=0, suites=("operator_identities", "riccati_residuals", "round_trips",
                                                         "long_horizon"))
        assert all(r.passed for r in results)

    def test_general_constants(self, rng):
        cfg = BasisConfig(L=2.0, N=8, m=0.5, kappa=3.0)
        for res in (operator_identities(cfg), riccati_residuals(cfg, rng, samples=50), limits(cfg, rng),
                    hjb(cfg, rng, points=10), concavity(cfg, rng, probes=50)):
            assert res.passed, res.failures()

    def test_corrupted_table_is_caught(self, rng):
        cfg = BasisConfig(N=8)
        res = riccati_residuals(cfg, rng, samples=200, eig_fn=corrupt_mode(3))
        assert not res.passed
        failing = res.failures()[0]
        assert failing.name == "max relative residual" and "[3]" in failing.detail

    def test_unknown_suite(self):
        with pytest.raises(ValueError):
            run_all(BasisConfig(N=2), suites=("nope",))

    def test_seed_reproducible(self):
        a = run_all(BasisConfig(N=4), seed=7, suites=("riccati_residuals",))[0]
        b = run_all(BasisConfig(N=4), seed=7, suites=("riccati_residuals",))[0]
        assert a.to_dict() == b.to_dict()

    def test_observed_values_finite(self):
        res = run_all(BasisConfig(N=8), seed=1, suites=("hjb",))[0]
        assert all(np.isfinite(c.observed) for c in res.checks)
