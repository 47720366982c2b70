import math

import numpy as np
import pytest

from fdodmd import (
    Spectrum,
    SpectrumError,
    Trajectory,
    depolarized_signal,
    exact_signal,
    load_spectrum,
    make_reference_overlaps,
    rescale_spectrum,
    unscale_energy,
)

from _oracles import naive_signal


class TestRescale:
    def test_symmetric_three_level_reference(self):
        # lo = -1.2, hi = 1.2, span = 2.4, mu = 0 -> beta1 = pi/4.8, beta0 = 0
        params, scaled = rescale_spectrum([-1.0, 0.0, 1.0], dt=1.0, alpha=0.2)
        assert params.beta1 == pytest.approx(math.pi / 4.8, rel=1e-15)
        assert params.beta0 == pytest.approx(0.0, abs=1e-15)
        assert scaled[1] == 0.0
        assert scaled[0] == -scaled[2]

    def test_asymmetric_hand_case(self):
        # raw {0, 1}, dt = 0.5, alpha = 0.25: lo = -0.25, hi = 1.25,
        # span = 1.5, mu = 0.5 -> beta1 = pi/1.5, beta0 = -pi/3
        params, scaled = rescale_spectrum([0.0, 1.0], dt=0.5, alpha=0.25)
        assert params.beta1 == pytest.approx(math.pi / 1.5, rel=1e-15)
        assert params.beta0 == pytest.approx(-math.pi / 3.0, rel=1e-15)
        assert scaled[0] == pytest.approx(-math.pi / 3.0, rel=1e-14)
        assert scaled[1] == pytest.approx(math.pi / 3.0, rel=1e-14)

    def test_extremes_are_exact_negatives(self):
        # the padded midpoint maps to zero, so min/max land symmetric
        rng = np.random.default_rng(11)
        for _ in range(50):
            raw = np.sort(rng.uniform(-40.0, 40.0, rng.integers(2, 9)))
            _, scaled = rescale_spectrum(raw, dt=1.0, alpha=0.3)
            assert scaled[0] == pytest.approx(-scaled[-1], rel=1e-12, abs=1e-15)

    def test_containment_ordering_and_phase_gap(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            n = int(rng.integers(1, 12))
            raw = np.sort(rng.uniform(-50.0, 50.0, n))
            dt = float(rng.uniform(0.05, 3.0))
            alpha = float(rng.uniform(0.01, 5.0))
            params, scaled = rescale_spectrum(raw, dt, alpha)
            band = math.pi / (4.0 * dt)
            assert np.all(scaled >= -band - 1e-12) and np.all(scaled <= band + 1e-12)
            assert np.all(np.diff(scaled) >= 0)
            if n >= 2:
                gap = (scaled[-1] + scaled[1] - 2.0 * scaled[0]) * dt
                assert gap < 2.0 * math.pi

    def test_unscale_round_trip(self):
        rng = np.random.default_rng(3)
        raw = np.sort(rng.uniform(-5.0, 5.0, 6))
        params, scaled = rescale_spectrum(raw, dt=0.7, alpha=0.4)
        back = np.array([unscale_energy(e, params) for e in scaled])
        np.testing.assert_allclose(back, raw, rtol=1e-12, atol=1e-12)

    def test_rejects_bad_inputs(self):
        with pytest.raises(SpectrumError):
            rescale_spectrum([], dt=1.0, alpha=0.2)
        with pytest.raises(SpectrumError):
            rescale_spectrum([0.0, 1.0], dt=1.0, alpha=0.0)
        with pytest.raises(SpectrumError):
            rescale_spectrum([0.0, 1.0], dt=-1.0, alpha=0.2)
        with pytest.raises(SpectrumError):
            rescale_spectrum([0.0, np.inf], dt=1.0, alpha=0.2)


class TestOverlaps:
    def test_five_levels_uniform_at_p0_point_two(self):
        ov = make_reference_overlaps(5, 0.2)
        np.testing.assert_allclose(ov, [0.2, 0.2, 0.2, 0.2, 0.2], rtol=1e-15)
        assert abs(math.fsum(ov.tolist()) - 1.0) <= 1e-12

    def test_general_shape(self):
        ov = make_reference_overlaps(4, 0.7)
        assert ov[0] == 0.7
        np.testing.assert_allclose(ov[1:], 0.1, rtol=1e-14)

    def test_single_level(self):
        np.testing.assert_array_equal(make_reference_overlaps(1, 1.0), [1.0])
        with pytest.raises(SpectrumError):
            make_reference_overlaps(1, 0.5)

    def test_domain_errors(self):
        with pytest.raises(SpectrumError):
            make_reference_overlaps(0, 0.5)
        with pytest.raises(SpectrumError):
            make_reference_overlaps(3, 0.0)
        with pytest.raises(SpectrumError):
            make_reference_overlaps(3, 1.5)


class TestSpectrumType:
    def test_invariants(self):
        with pytest.raises(SpectrumError):
            Spectrum(np.array([1.0, 0.0]), np.array([0.5, 0.5]))  # decreasing
        with pytest.raises(SpectrumError):
            Spectrum(np.array([0.0, 1.0]), np.array([0.6, 0.6]))  # sum != 1
        with pytest.raises(SpectrumError):
            Spectrum(np.array([0.0, 1.0]), np.array([-0.1, 1.1]))  # negative
        with pytest.raises(SpectrumError):
            Spectrum(np.array([]), np.array([]))

    def test_ground_energy(self):
        s = Spectrum(np.array([-0.3, 0.2]), np.array([0.25, 0.75]))
        assert s.ground_energy == -0.3
        assert s.n_levels == 2


class TestSignals:
    def _spec(self):
        params, scaled = rescale_spectrum([-1.0, -0.2, 0.4, 1.0], dt=1.0, alpha=0.2)
        return Spectrum(scaled, make_reference_overlaps(4, 0.4))

    def test_matches_naive_oracle(self):
        spec = self._spec()
        s = exact_signal(spec, dt=1.0, n_samples=25)
        ref = naive_signal(spec.eigenvalues, spec.overlaps, 1.0, 25)
        np.testing.assert_allclose(s.samples, ref, rtol=0, atol=1e-13)

    def test_initial_value_is_one(self):
        s = exact_signal(self._spec(), dt=0.5, n_samples=3)
        assert abs(s.samples[0] - 1.0) <= 1e-12

    def test_real_only_takes_real_part(self):
        spec = self._spec()
        full = exact_signal(spec, 1.0, 30)
        real = exact_signal(spec, 1.0, 30, real_only=True)
        assert real.real_only
        np.testing.assert_array_equal(real.samples.real, full.samples.real)
        assert np.all(real.samples.imag == 0.0)

    def test_depolarized_damping_ratio(self):
        spec = self._spec()
        theta, dt = 0.07, 0.8
        plain = exact_signal(spec, dt, 20)
        damped = depolarized_signal(spec, theta, dt, 20)
        k = np.arange(20)
        np.testing.assert_allclose(
            damped.samples, plain.samples * np.exp(-theta * k * dt), rtol=1e-13
        )

    def test_zero_theta_equals_exact(self):
        spec = self._spec()
        a = exact_signal(spec, 1.0, 16)
        b = depolarized_signal(spec, 0.0, 1.0, 16)
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_negative_theta_rejected(self):
        with pytest.raises(SpectrumError):
            depolarized_signal(self._spec(), -0.1, 1.0, 8)

    def test_magnitude_never_exceeds_one(self):
        spec = self._spec()
        s = exact_signal(spec, 1.0, 200)
        assert np.all(np.abs(s.samples) <= 1.0 + 1e-12)


class TestTrajectoryType:
    def test_validation(self):
        with pytest.raises(SpectrumError):
            Trajectory(np.array([]), 1.0)
        with pytest.raises(SpectrumError):
            Trajectory(np.array([1.0]), 0.0)
        with pytest.raises(SpectrumError):
            Trajectory(np.array([1.0 + 1j]), 1.0, real_only=True)

    def test_head(self):
        t = Trajectory(np.arange(6, dtype=complex), 0.5)
        h = t.head(4)
        assert len(h) == 4 and h.dt == 0.5
        np.testing.assert_array_equal(h.samples, np.arange(4, dtype=complex))
        with pytest.raises(SpectrumError):
            t.head(7)

    def test_times(self):
        t = Trajectory(np.ones(4, dtype=complex), 0.25)
        np.testing.assert_allclose(t.times, [0.0, 0.25, 0.5, 0.75])


class TestLoadSpectrum:
    def test_parse_sort_and_comments(self, tmp_path):
        p = tmp_path / "spec.csv"
        p.write_text(
            "# ground and two excited levels\n"
            "0.4, 0.25\n"
            "-0.4, 0.5   # ground\n"
            "\n"
            "0.1, 0.25\n"
        )
        spec = load_spectrum(p)
        np.testing.assert_allclose(spec.eigenvalues, [-0.4, 0.1, 0.4])
        np.testing.assert_allclose(spec.overlaps, [0.5, 0.25, 0.25])

    def test_renormalizes_small_drift(self, tmp_path):
        p = tmp_path / "spec.csv"
        p.write_text("-0.2,0.5000000002\n0.3,0.4999999998\n")
        spec = load_spectrum(p)
        assert abs(math.fsum(spec.overlaps.tolist()) - 1.0) <= 1e-12

    def test_rejects_large_drift(self, tmp_path):
        p = tmp_path / "spec.csv"
        p.write_text("-0.2,0.6\n0.3,0.6\n")
        with pytest.raises(SpectrumError):
            load_spectrum(p)

    def test_rejects_malformed_rows(self, tmp_path):
        for body in ("0.1\n", "a,b\n", "0.1,0.5,9\n", "0.1,-0.5\n0.2,1.5\n", ""):
            p = tmp_path / "bad.csv"
            p.write_text(body)
            with pytest.raises(SpectrumError):
                load_spectrum(p)
