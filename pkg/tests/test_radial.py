"""Tests for the order-m radial solver, fits, and cone-plus-tail extremals."""

import math

import numpy as np
import pytest

from borninfeld.core import (
    asymptotics_spec,
    best_constant_cbar,
    sphere_measure,
    taylor_coefficients,
)
from borninfeld.quad import exact_radial_profile
from borninfeld.radial import (
    ConeTailCandidate,
    approx_radial_profile,
    cone_tail_energy,
    fit_singularity,
    flux_gradient_magnitude,
    spacelike_ratio,
)

OMEGA3 = sphere_measure(3)


class TestFluxRoot:
    def test_linear_order_is_exact(self):
        for r in (0.1, 1.0, 7.0):
            target = 1.0 / (OMEGA3 * r * r)
            assert flux_gradient_magnitude(r, 1.0, 1, 3) == pytest.approx(
                target, rel=1e-14
            )

    def test_far_field_dominated_by_linear_term(self):
        t = flux_gradient_magnitude(100.0, 1.0, 4, 3)
        newtonian = 1.0 / (OMEGA3 * 100.0**2)
        assert t == pytest.approx(newtonian, rel=1e-3)

    def test_near_field_dominated_by_top_term(self):
        alpha_m = taylor_coefficients(4).alphas[-1]
        t = flux_gradient_magnitude(1e-3, 1.0, 4, 3)
        predicted = (1.0 / (alpha_m * OMEGA3 * 1e-6)) ** (1.0 / 7.0)
        assert t == pytest.approx(predicted, rel=0.02)

    def test_residual_tolerance(self):
        alphas = taylor_coefficients(6).alphas
        for r in np.geomspace(1e-6, 1e3, 40):
            t = flux_gradient_magnitude(r, -2.5, 6, 4)
            g = math.fsum(a * t ** (2 * h - 1) for h, a in enumerate(alphas, 1))
            target = 2.5 / (sphere_measure(4) * r**3)
            assert abs(g - target) <= 1e-12 * max(1.0, target)

    def test_gradient_blowup_at_small_radius(self):
        assert flux_gradient_magnitude(1e-8, 1.0, 4, 3) > 10.0

    def test_approach_to_light_cone_in_order(self):
        # at fixed small radius the slope decreases toward the bound 1
        for r in (1e-3, 1e-4):
            gaps = [
                abs(flux_gradient_magnitude(r, 1.0, m, 3)) - 1.0
                for m in (2, 4, 8, 16, 32)
            ]
            assert all(g > 0 for g in gaps)
            assert all(a > b for a, b in zip(gaps, gaps[1:]))

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            flux_gradient_magnitude(0.0, 1.0, 2, 3)
        with pytest.raises(ValueError):
            flux_gradient_magnitude(1.0, 0.0, 2, 3)


class TestApproxProfile:
    def test_newtonian_closed_form(self):
        rgrid = np.geomspace(1e-2, 1e3, 300)
        profile = approx_radial_profile(1.0, 1, 3, rgrid)
        newton = 1.0 / (4 * math.pi * rgrid)
        assert np.max(np.abs(profile.u - newton)) < 1e-10
        assert profile.u0 is None  # diverges at the charge

    def test_far_field_tail(self):
        rgrid = np.geomspace(1e-2, 1e3, 300)
        profile = approx_radial_profile(1.0, 4, 3, rgrid)
        assert profile.u[-1] * rgrid[-1] == pytest.approx(1 / (4 * math.pi), rel=0.01)

    def test_finite_central_value_above_exact(self):
        rgrid = np.geomspace(1e-6, 1e2, 400)
        profile = approx_radial_profile(1.0, 4, 3, rgrid)
        exact = exact_radial_profile(1.0, 3, rgrid)
        assert profile.u0 is not None
        assert math.isfinite(profile.u0)
        assert profile.u0 > exact.u0  # order-m field overshoots at the charge
        assert np.all(np.diff(profile.u) < 0)

    def test_odd_symmetry(self):
        rgrid = np.geomspace(1e-4, 10, 100)
        plus = approx_radial_profile(2.0, 3, 3, rgrid)
        minus = approx_radial_profile(-2.0, 3, 3, rgrid)
        assert np.array_equal(plus.u, -minus.u)
        assert np.array_equal(plus.du, -minus.du)

    def test_flux_conservation_at_samples(self):
        rgrid = np.geomspace(1e-5, 50, 120)
        m, a = 5, -1.7
        profile = approx_radial_profile(a, m, 3, rgrid)
        alphas = taylor_coefficients(m).alphas
        for r, du in zip(profile.r, profile.du):
            t = abs(du)
            g = math.fsum(al * t ** (2 * h - 1) for h, al in enumerate(alphas, 1))
            assert OMEGA3 * r**2 * g == pytest.approx(abs(a), rel=1e-10)

    def test_invalid_grid(self):
        with pytest.raises(ValueError):
            approx_radial_profile(1.0, 2, 3, np.array([2.0, 1.0]))


@pytest.fixture(scope="module")
def profile_m4():
    return approx_radial_profile(1.0, 4, 3, np.geomspace(1e-7, 1e3, 1500))


class TestFitSingularity:
    def test_exponents_and_coefficients(self, profile_m4):
        spec = asymptotics_spec(4, 3, 1.0)
        u_fit, du_fit = fit_singularity(profile_m4, (1e-6, 1e-4))
        assert u_fit.guaranteed and du_fit.guaranteed
        assert u_fit.exponent == pytest.approx(spec.u_exponent, rel=0.01)
        assert abs(u_fit.coefficient) == pytest.approx(abs(spec.K), rel=0.02)
        assert u_fit.coefficient < 0  # opposite sign to the charge
        assert du_fit.exponent == pytest.approx(spec.grad_exponent, rel=0.01)
        assert du_fit.coefficient == pytest.approx(spec.Kprime, rel=0.02)

    def test_window_shrink_reduces_exponent_error(self, profile_m4):
        spec = asymptotics_spec(4, 3, 1.0)
        wide, _ = fit_singularity(profile_m4, (1e-6, 1e-4))
        narrow, _ = fit_singularity(profile_m4, (1e-7, 1e-5))
        err_wide = abs(wide.exponent - spec.u_exponent)
        err_narrow = abs(narrow.exponent - spec.u_exponent)
        assert err_narrow < err_wide

    def test_newtonian_pole_flagged(self):
        profile = approx_radial_profile(1.0, 1, 3, np.geomspace(1e-7, 10, 400))
        u_fit, _ = fit_singularity(profile, (1e-6, 1e-4))
        assert u_fit.exponent == pytest.approx(-1.0, abs=1e-6)
        assert not u_fit.guaranteed

    def test_residual_reported(self, profile_m4):
        u_fit, du_fit = fit_singularity(profile_m4, (1e-6, 1e-4))
        assert u_fit.residual > 0
        assert du_fit.residual > 0

    def test_window_validation(self, profile_m4):
        with pytest.raises(ValueError):
            fit_singularity(profile_m4, (1e-9, 1e-4))  # below sampled range
        with pytest.raises(ValueError):
            fit_singularity(profile_m4, (1e-4, 1e-6))  # inverted
        with pytest.raises(ValueError):
            fit_singularity(profile_m4, (1e-3, 1e-1))  # not deep inside

    def test_too_few_samples(self):
        profile = approx_radial_profile(1.0, 4, 3, np.geomspace(1e-7, 10, 40))
        with pytest.raises(ValueError):
            fit_singularity(profile, (1e-6, 1e-5))


class TestConeTailFamily:
    def test_no_tail_energy(self):
        assert cone_tail_energy(1.0, 3) == pytest.approx(1.0 / 3.0, rel=1e-15)

    def test_minimizer_energy_equals_best_constant(self):
        # E(1/2) = 1/24 + 1/8 = 1/6, and omega_2 E = Cbar(3)
        assert cone_tail_energy(0.5, 3) == pytest.approx(1.0 / 6.0, rel=1e-14)
        assert cone_tail_energy(0.5, 3) * OMEGA3 == pytest.approx(
            best_constant_cbar(3), abs=1e-10
        )

    @pytest.mark.parametrize("N", [3, 4, 5, 6])
    def test_non_decreasing_on_admissible_interval(self, N):
        lo = (N - 2) / (N - 1)
        grid = np.linspace(lo, 1.0, 1000)
        values = [cone_tail_energy(float(R), N) for R in grid]
        assert all(b >= a - 1e-15 for a, b in zip(values, values[1:]))

    def test_argmin_at_left_endpoint(self):
        grid = np.linspace(0.5, 1.0, 10_000)
        values = np.array([cone_tail_energy(float(R), 3) for R in grid])
        assert grid[int(np.argmin(values))] == pytest.approx(0.5, abs=grid[1] - grid[0])

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            cone_tail_energy(0.4, 3)  # not 1-Lipschitz tail
        with pytest.raises(ValueError):
            cone_tail_energy(1.1, 3)

    def test_candidate_c1_constraint(self):
        cand = ConeTailCandidate(3, 0.5)
        assert cand.c1 == pytest.approx(0.25, rel=1e-15)
        # equality case of the 1-Lipschitz tail constraint at R = (N-2)/(N-1)
        assert cand.c1 == pytest.approx(cand.R ** (3 - 1) / (3 - 2), rel=1e-15)


class TestSpacelikeRatio:
    def test_minimizing_candidate_attains_best_constant(self):
        ratio = spacelike_ratio(ConeTailCandidate(3, 0.5))
        assert ratio == pytest.approx(best_constant_cbar(3), abs=1e-8)

    def test_non_minimizing_candidate_exceeds(self):
        assert spacelike_ratio(ConeTailCandidate(3, 0.8)) > best_constant_cbar(3)

    def test_rescaling_invariance(self):
        base = spacelike_ratio(ConeTailCandidate(3, 0.5))
        scaled = spacelike_ratio(ConeTailCandidate(3, 0.5), scale=2.0)
        assert scaled == pytest.approx(base, abs=1e-10)

    def test_random_candidates_and_scales_bounded_below(self):
        rng = np.random.default_rng(5)
        for _ in range(15):
            N = int(rng.integers(3, 6))
            lo = (N - 2) / (N - 1)
            R = float(rng.uniform(lo, 1.0))
            scale = float(rng.uniform(0.2, 5.0))
            ratio = spacelike_ratio(ConeTailCandidate(N, R), scale=scale)
            assert ratio >= best_constant_cbar(N) - 1e-6

    def test_exact_profile_bounded_below(self):
        profile = exact_radial_profile(1.0, 3, np.geomspace(1e-4, 1e3, 200))
        ratio = spacelike_ratio(profile)
        assert ratio >= best_constant_cbar(3) - 1e-6
        assert spacelike_ratio(profile, scale=2.0) == pytest.approx(ratio, abs=1e-10)

    def test_order_m_profile_rejected(self):
        profile = approx_radial_profile(1.0, 4, 3, np.geomspace(1e-4, 10, 50))
        with pytest.raises(ValueError):
            spacelike_ratio(profile)

    def test_invalid_scale(self):
        with pytest.raises(ValueError):
            spacelike_ratio(ConeTailCandidate(3, 0.5), scale=0.0)
