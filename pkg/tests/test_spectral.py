import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavestat import (BasisConfig, SingularOperatorError, SpectralVector, basis_fn_value, lambda_n,
                      make_operator, op_apply, op_compose, op_invert, project_analytic, project_profile,
                      reconstruct)
from wavestat.errors import BasisMismatchError, ProfileError
from wavestat.spectral import DiagonalOperator, load_profile_file, named_profile

PI2 = 9.869604401089358


class TestLambda:
    def test_first_mode_unit_length(self):
        assert lambda_n(1, BasisConfig(L=1)) == pytest.approx(PI2, rel=1e-15)

    def test_scale_invariance(self):
        assert lambda_n(2, BasisConfig(L=2)) == pytest.approx(math.pi**2, rel=1e-15)

    def test_third_mode(self):
        assert lambda_n(3, BasisConfig(L=1)) == pytest.approx(88.82643960980423, rel=1e-15)

    def test_rejects_zero_index(self):
        with pytest.raises(ValueError):
            lambda_n(0, BasisConfig())

    def test_strictly_increasing(self):
        lam = BasisConfig(N=500).lambdas
        assert np.all(np.diff(lam) > 0)


class TestBasisConfig:
    @pytest.mark.parametrize("kw", [{"L": 0}, {"N": 0}, {"m": -1}, {"kappa": 0}, {"N": 2.5}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            BasisConfig(**kw)

    def test_all_problems_reported_together(self):
        with pytest.raises(ValueError) as info:
            BasisConfig(L=-1, m=-1)
        assert "L must" in str(info.value) and "m must" in str(info.value)


class TestBasisFunctions:
    def test_l2_mode_one_midpoint(self):
        assert basis_fn_value(1, 0.5, "phi", BasisConfig(L=1)) == pytest.approx(math.sqrt(2), rel=1e-15)

    @pytest.mark.parametrize("L", [0.5, 1.0, 3.0])
    def test_node_of_second_mode(self, L):
        assert basis_fn_value(2, L / 2, "phi", BasisConfig(L=L)) == pytest.approx(0.0, abs=1e-15)

    def test_energy_mode_one_midpoint(self):
        assert basis_fn_value(1, 0.5, "phi_tilde", BasisConfig(L=1)) == pytest.approx(0.45015815807855303)

    def test_relation_between_families(self):
        cfg = BasisConfig(L=2.0)
        x = np.linspace(0, 2, 17)
        for n in (1, 4, 9):
            assert np.allclose(basis_fn_value(n, x, "phi_tilde", cfg),
                               basis_fn_value(n, x, "phi", cfg) / math.sqrt(lambda_n(n, cfg)))

    @pytest.mark.parametrize("pos", [-1e-9, 1.0 + 1e-9])
    def test_outside_domain(self, pos):
        with pytest.raises(ValueError):
            basis_fn_value(1, pos, "phi", BasisConfig(L=1))


class TestProjection:
    grid = np.linspace(0.0, 1.0, 2001)

    def test_first_energy_basis_function(self):
        cfg = BasisConfig(L=1, N=4)
        vals = basis_fn_value(1, self.grid, "phi_tilde", cfg)
        a = project_profile(self.grid, vals, cfg).coeffs
        assert np.allclose(a, [1, 0, 0, 0], atol=1e-6)

    def test_first_l2_basis_function(self):
        cfg = BasisConfig(L=1, N=1)
        vals = basis_fn_value(1, self.grid, "phi", cfg)
        assert project_profile(self.grid, vals, cfg).coeffs[0] == pytest.approx(math.pi, abs=1e-6)

    def test_zero_samples(self):
        cfg = BasisConfig(N=5)
        assert np.all(project_profile(self.grid, np.zeros_like(self.grid), cfg).coeffs == 0)

    def test_non_monotone(self):
        pos = np.array([0, 0.5, 0.4, 1.0])
        with pytest.raises(ProfileError, match="increasing"):
            project_profile(pos, np.zeros(4), BasisConfig())

    def test_nonzero_endpoint(self):
        with pytest.raises(ProfileError, match="vanish"):
            project_profile(self.grid, np.ones_like(self.grid), BasisConfig())

    def test_partial_coverage(self):
        pos = np.linspace(0, 0.9, 11)
        with pytest.raises(ProfileError, match="cover"):
            project_profile(pos, np.zeros(11), BasisConfig())

    def test_trapezoid_matches_closed_form_gaussian(self):
        cfg = BasisConfig(L=1, N=24)
        prof = named_profile("gaussian")
        sampled = project_profile(self.grid, prof(self.grid, 1.0), cfg)
        exact = project_analytic(prof, cfg)
        assert np.max(np.abs(sampled.coeffs - exact.coeffs)) < 1e-6

    def test_gauss_legendre_matches_closed_form(self):
        cfg = BasisConfig(L=2.0, N=40)
        prof = named_profile("gaussian")
        quad = project_analytic(prof, cfg, exact=False)
        assert np.max(np.abs(quad.coeffs - project_analytic(prof, cfg).coeffs)) < 1e-12

    def test_triangle_closed_form(self):
        # hat peak 1 at L/2: L2 coefficient 4 sqrt(2) sin(n pi/2) / (n pi)^2 for L = 1
        cfg = BasisConfig(L=1, N=9)
        a = project_analytic("triangle", cfg).coeffs
        n = cfg.modes
        expect = np.sqrt(cfg.lambdas) * 4 * math.sqrt(2) * np.sin(n * np.pi / 2) / (n * np.pi) ** 2
        assert np.allclose(a, expect, atol=1e-13)

    def test_single_mode_key(self):
        cfg = BasisConfig(L=1, N=4)
        a = project_analytic("mode:2", cfg).coeffs
        assert a[1] == pytest.approx(2 * math.pi * math.sqrt(0.5)) and np.count_nonzero(a) == 1

    def test_unknown_profile(self):
        with pytest.raises(ProfileError, match="unknown profile"):
            named_profile("nope")

    def test_profile_file(self, tmp_path):
        path = tmp_path / "p.txt"
        x = np.linspace(0, 1, 401)
        body = "# position value\n" + "\n".join(f"{a} {b}" for a, b in zip(x, np.sin(np.pi * x)))
        path.write_text(body)
        pos, val = load_profile_file(path)
        a = project_profile(pos, val, BasisConfig(N=3)).coeffs
        assert a[0] == pytest.approx(math.pi * math.sqrt(0.5), rel=1e-5)
        assert abs(a[1]) < 1e-12

    def test_profile_file_wrong_columns(self, tmp_path):
        path = tmp_path / "p.txt"
        path.write_text("0 0 0\n1 0 0\n")
        with pytest.raises(ProfileError, match="2 columns"):
            load_profile_file(path)


class TestReconstruct:
    def test_single_basis_function(self):
        cfg = BasisConfig(L=1, N=3)
        assert reconstruct(SpectralVector.unit(cfg, 1), [0.5])[0] == pytest.approx(math.sqrt(2) / math.pi)

    def test_zero(self):
        assert np.all(reconstruct(SpectralVector.zeros(BasisConfig(N=5)), np.linspace(0, 1, 7)) == 0)

    def test_two_terms(self):
        cfg = BasisConfig(L=1, N=2)
        x = np.linspace(0, 1, 5)
        expect = basis_fn_value(1, x, "phi_tilde", cfg) + basis_fn_value(2, x, "phi_tilde", cfg)
        assert np.allclose(reconstruct(SpectralVector(np.ones(2), cfg), x), expect, atol=1e-15)

    def test_round_trip_band_limited(self, rng):
        cfg = BasisConfig(L=1.5, N=12)
        x = SpectralVector(rng.normal(size=12), cfg)
        grid = np.linspace(0, 1.5, 4001)
        back = project_profile(grid, reconstruct(x, grid), cfg)
        assert np.max(np.abs(back.coeffs - x.coeffs)) < 1e-5


class TestOperators:
    def test_A_first_eigenvalue(self):
        assert make_operator("A", 0, BasisConfig(L=1)).eig(1) == pytest.approx(PI2, rel=1e-15)

    def test_I_mu_identity_at_zero(self):
        assert np.all(make_operator("I_mu", 0.0, BasisConfig(N=20)).eigvals == 1.0)

    def test_M_mu_value(self):
        # ((1 + 0.01 pi^2) / pi^2)^(1/2)
        assert make_operator("M_mu", 0.1, BasisConfig(L=1)).eig(1) == pytest.approx(0.33364829333047, rel=1e-13)

    def test_M_mu_at_zero(self):
        cfg = BasisConfig(N=6)
        assert np.allclose(make_operator("M_mu", 0.0, cfg).eigvals, cfg.lambdas**-0.5)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown operator"):
            make_operator("B", 0.1, BasisConfig())

    def test_negative_mu(self):
        with pytest.raises(ValueError):
            make_operator("I_mu", -0.1, BasisConfig())

    def test_apply_identity(self, rng):
        cfg = BasisConfig(N=10)
        x = SpectralVector(rng.normal(size=10), cfg)
        assert np.array_equal(op_apply(make_operator("identity", 0, cfg), x).coeffs, x.coeffs)

    def test_apply_A_to_first_unit(self):
        cfg = BasisConfig(L=1, N=3)
        out = make_operator("A", 0, cfg)(SpectralVector.unit(cfg, 1))
        assert np.allclose(out.coeffs, [PI2, 0, 0])

    def test_J_undoes_A_sqrt(self, rng):
        cfg = BasisConfig(N=30)
        x = SpectralVector(rng.normal(size=30), cfg)
        back = op_apply(op_compose(make_operator("J", 0, cfg), make_operator("A_sqrt", 0, cfg)), x)
        assert np.allclose(back.coeffs, x.coeffs, rtol=1e-15)

    def test_compose_square_root(self):
        cfg = BasisConfig(N=50)
        s = make_operator("A_sqrt", 0, cfg)
        assert np.allclose((s @ s).eigvals, cfg.lambdas, rtol=1e-15)

    def test_invert_I_mu(self):
        cfg = BasisConfig(N=40)
        inv = op_invert(make_operator("I_mu", 0.2, cfg))
        assert np.allclose(inv.eigvals, 1 + 0.04 * cfg.lambdas, rtol=1e-15)

    def test_lambda_mu_by_composition(self):
        cfg = BasisConfig(N=40)
        f = op_compose(make_operator("A_sqrt", 0.3, cfg), make_operator("I_mu", 0.3, cfg),
                       make_operator("A_sqrt", 0.3, cfg))
        assert np.allclose(f.eigvals, cfg.lambdas_mu(0.3), rtol=1e-15)

    def test_invert_singular_names_mode(self):
        cfg = BasisConfig(N=5)
        f = DiagonalOperator([1.0, 2.0, 1e-14, 3.0, 4.0], cfg, "F")
        with pytest.raises(SingularOperatorError) as info:
            op_invert(f)
        assert info.value.mode == 3

    def test_basis_mismatch(self):
        x = SpectralVector.zeros(BasisConfig(N=3))
        with pytest.raises(BasisMismatchError):
            op_apply(make_operator("A", 0, BasisConfig(N=3, L=2)), x)


class TestProperties:
    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=40))
    def test_parseval(self, coeffs):
        cfg = BasisConfig(N=len(coeffs))
        x = SpectralVector(coeffs, cfg)
        assert x.norm_half() ** 2 == pytest.approx(sum(c * c for c in coeffs), rel=1e-12, abs=1e-300)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(1e-3, 1.0), st.sampled_from([0.5, 1.0, 2.0]))
    def test_identities(self, mu, L):
        cfg = BasisConfig(L=L, N=200)
        op = {k: make_operator(k, mu, cfg) for k in ("A", "I_mu", "I_mu_sqrt", "M_mu", "K_mu")}
        assert np.allclose((op["I_mu_sqrt"] @ op["I_mu_sqrt"]).eigvals, op["I_mu"].eigvals, rtol=1e-14)
        assert np.allclose((op["K_mu"] @ op["K_mu"]).eigvals, op["M_mu"].eigvals, rtol=1e-14)
        assert np.allclose((op["M_mu"] @ op["M_mu"]).eigvals, (1 + mu**2 * cfg.lambdas) / cfg.lambdas,
                           rtol=1e-14)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(1e-3, 1.0))
    def test_bounded_by_inverse_mu(self, mu):
        cfg = BasisConfig(N=10_000)
        f = make_operator("A_sqrt", mu, cfg) @ make_operator("I_mu_sqrt", mu, cfg)
        assert np.max(f.eigvals) <= (1 / mu) * (1 + 1e-15)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(1e-3, 1.0))
    def test_lambda_mu_monotone_and_bounded(self, mu):
        lam_mu = BasisConfig(N=2000).lambdas_mu(mu)
        assert np.all(np.diff(lam_mu) > 0) and np.all(lam_mu <= 1 / mu**2)

    def test_commutation(self):
        cfg = BasisConfig(N=64)
        kinds = ["A", "A_sqrt", "J", "I_mu", "I_mu_sqrt", "I_mu_inv_sqrt", "M_mu", "K_mu", "identity"]
        ops = [make_operator(k, 0.4, cfg) for k in kinds]
        for f in ops:
            for g in ops:
                assert np.array_equal((f @ g).eigvals, (g @ f).eigvals)


class TestVectors:
    def test_immutable(self):
        x = SpectralVector.zeros(BasisConfig(N=3))
        with pytest.raises(ValueError):
            x.coeffs[0] = 1.0

    def test_length_checked(self):
        with pytest.raises(ValueError):
            SpectralVector([1.0, 2.0], BasisConfig(N=3))

    def test_tail_indicator(self):
        cfg = BasisConfig(N=4)
        assert SpectralVector([2.0, 0, 0, 0.5], cfg).tail_indicator() == 0.25
        assert SpectralVector.zeros(cfg).tail_indicator() == 0.0
        assert SpectralVector([2.0, 0, 0.5, 0], cfg).tail_indicator() == 0.25

    def test_tail_sees_symmetric_profiles(self):
        cfg = BasisConfig(N=64)
        assert project_analytic("raised-cosine", cfg).tail_indicator() > 1e-3

    def test_gaussian_tail_small(self):
        x = project_analytic("gaussian", BasisConfig(N=64))
        assert x.tail_indicator() < 1e-12

    def test_l2_norm(self):
        cfg = BasisConfig(L=1, N=2)
        assert SpectralVector([math.pi, 0], cfg).norm_l2() == pytest.approx(1.0)
