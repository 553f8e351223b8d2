import math

import numpy as np
import pytest
from scipy.special import j0

from ofdmsync import (
    ImpairmentParams,
    SystemConfig,
    add_awgn,
    apply_impairments_freq,
    apply_impairments_time,
    demodulate_frame,
    exponential_power_profile,
    flat_channel,
    generate_taps,
    map_symbols,
    modulate_frame,
    perturb_csi,
    tone_phase_ramp,
)


def eq8_phase(cfg, l, theta):
    """Expected per-tone rotation: half-block term plus block ramp."""
    return np.pi * theta * (cfg.n - 1) / cfg.n + 2 * np.pi * (
        (l * cfg.n_b + cfg.n_g) / cfg.n
    ) * theta


def single_tone_grid(cfg, k):
    grid = np.zeros((cfg.m, cfg.n), complex)
    grid[:, k] = 1.0
    return grid


class TestProfile:
    def test_single_tap_degenerates_to_unit_power(self):
        np.testing.assert_allclose(exponential_power_profile(1), [1.0])

    def test_matches_direct_formula_evaluation(self):
        # independent evaluation with math.exp, term by term
        L = 32
        denom = sum(math.exp(-2 * i / L) for i in range(L))
        expected = [math.exp(-i / L) / denom for i in range(L)]
        np.testing.assert_allclose(exponential_power_profile(L), expected, rtol=1e-13)
        # the denominator squares the magnitudes: total power is not 1
        assert sum(expected) == pytest.approx(1.4396, abs=2e-4)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            exponential_power_profile(0)


class TestGenerateTaps:
    def test_rejects_delay_spread_beyond_guard(self, cfg512):
        with pytest.raises(ValueError, match="guard"):
            generate_taps(cfg512, 65)

    def test_static_taps_repeat_over_blocks(self, cfg512):
        chan = generate_taps(cfg512, 32, seed=1)
        assert chan.taps.shape == (10, 32)
        for l in range(1, 10):
            np.testing.assert_array_equal(chan.taps[l], chan.taps[0])
        assert chan.consistent()

    def test_per_tap_ensemble_power(self):
        # 1e5 draws; each tap power within 3% of the profile value
        cfg = SystemConfig(n=8, n_g=4, m=1, q=2)
        L, draws = 4, 100_000
        acc = np.zeros(L)
        for i in range(draws):
            acc += np.abs(generate_taps(cfg, L, seed=i).taps[0]) ** 2
        measured = acc / draws
        expected = exponential_power_profile(L)
        np.testing.assert_allclose(measured, expected, rtol=0.03)

    def test_ensemble_tone_power_matches_profile_total(self):
        cfg = SystemConfig(n=64, n_g=16, m=1, q=2)
        total = exponential_power_profile(16).sum()
        acc = 0.0
        draws = 2000
        for i in range(draws):
            acc += np.mean(np.abs(generate_taps(cfg, 16, seed=i).ctf) ** 2)
        assert acc / draws == pytest.approx(total, rel=0.02)

    def test_doppler_block_correlation_matches_bessel(self):
        # 100 km/h at 5 GHz: 463 Hz, block duration 57.6 us
        cfg = SystemConfig()  # n_b * t_s = 57.6e-6
        fd = 463.0
        expected = j0(2 * np.pi * fd * cfg.n_b * cfg.t_s)
        num = 0.0
        den = 0.0
        draws = 400  # 400 draws x 9 lags x 32 taps > 1e5 products
        for i in range(draws):
            taps = generate_taps(cfg, 32, doppler_hz=fd, seed=i).taps
            num += np.sum(taps[1:] * np.conj(taps[:-1])).real
            den += np.sum(np.abs(taps[:-1]) ** 2)
        assert num / den == pytest.approx(expected, rel=0.05)

    def test_doppler_preserves_tap_power(self):
        cfg = SystemConfig()
        draws = 2000
        acc = 0.0
        for i in range(draws):
            taps = generate_taps(cfg, 8, doppler_hz=900.0, seed=i).taps
            acc += np.mean(np.sum(np.abs(taps) ** 2, axis=1))
        assert acc / draws == pytest.approx(exponential_power_profile(8).sum(), rel=0.05)


class TestTimeModel:
    def test_identity_channel_is_bit_exact(self, cfg8, rng):
        grid = map_symbols(rng.integers(0, 16, (2, 8)), cfg8.constellation)
        frame = modulate_frame(grid, cfg8)
        out = apply_impairments_time(frame, flat_channel(cfg8), ImpairmentParams(), cfg8)
        assert np.array_equal(out, frame)

    def test_cfo_phase_matches_model(self, cfg512):
        # single tone isolates the deterministic rotation from ICI
        imp = ImpairmentParams(cfo=0.02)
        for k in (0, 100, 511):
            frame = modulate_frame(single_tone_grid(cfg512, k), cfg512)
            out = apply_impairments_time(frame, flat_channel(cfg512), imp, cfg512)
            grid = demodulate_frame(out, cfg512)
            for l in (0, 4, 9):
                resid = np.angle(
                    grid[l, k] * np.exp(-1j * eq8_phase(cfg512, l, imp.cfo))
                )
                assert abs(resid) < 1e-3

    def test_sfo_phase_slope_matches_model(self, cfg512):
        imp = ImpairmentParams(sfo=5e-5)
        k = cfg512.n - 1  # worst tone for the k-proportional ramp
        frame = modulate_frame(single_tone_grid(cfg512, k), cfg512)
        out = apply_impairments_time(frame, flat_channel(cfg512), imp, cfg512)
        grid = demodulate_frame(out, cfg512)
        for l in range(cfg512.m):
            resid = np.angle(
                grid[l, k] * np.exp(-1j * eq8_phase(cfg512, l, imp.sfo * k))
            )
            assert abs(resid) < 5e-3

    def test_multipath_pipeline_returns_tone_product(self, cfg512, rng):
        # no offsets, no noise: guard absorbs the tap memory exactly
        grid = map_symbols(rng.integers(0, 16, (10, 512)), cfg512.constellation)
        chan = generate_taps(cfg512, 32, seed=7)
        frame = modulate_frame(grid, cfg512)
        out = apply_impairments_time(frame, chan, ImpairmentParams(), cfg512)
        received = demodulate_frame(out, cfg512)
        expected = grid * chan.ctf
        assert np.max(np.abs(received - expected)) < 1e-9 * np.max(np.abs(expected))

    def test_models_agree_without_offsets(self, cfg512, rng):
        grid = map_symbols(rng.integers(0, 16, (10, 512)), cfg512.constellation)
        chan = generate_taps(cfg512, 32, seed=3)
        imp = ImpairmentParams()
        fast = apply_impairments_freq(grid, chan, imp, cfg512)
        frame = apply_impairments_time(modulate_frame(grid, cfg512), chan, imp, cfg512)
        slow = demodulate_frame(frame, cfg512)
        assert np.max(np.abs(fast - slow)) < 1e-9 * np.max(np.abs(fast))

    def test_disagreement_sits_at_the_ici_floor(self, cfg512, rng):
        # loaded grid, both offsets: the fast model omits ICI, the sample
        # model realizes it, so their gap measures the ICI floor itself
        grid = map_symbols(rng.integers(0, 16, (10, 512)), cfg512.constellation)
        chan = flat_channel(cfg512)
        imp = ImpairmentParams(cfo=0.02, sfo=5e-5)
        fast = apply_impairments_freq(grid, chan, imp, cfg512)
        frame = apply_impairments_time(modulate_frame(grid, cfg512), chan, imp, cfg512)
        slow = demodulate_frame(frame, cfg512)
        gap_db = 10 * np.log10(np.mean(np.abs(fast - slow) ** 2))
        k = np.arange(cfg512.n)
        theta = imp.cfo + imp.sfo * k
        floor_db = 10 * np.log10(np.mean(1 - np.sinc(theta) ** 2))
        assert gap_db < -20.0
        assert gap_db == pytest.approx(floor_db, abs=1.5)

    def test_sfo_resampler_matches_direct_tone_sum(self, rng):
        # brute-force oracle: evaluate the skewed tone sum with an O(N*NB)
        # exponential matrix and compare against the chirp-transform path
        cfg = SystemConfig(n=32, n_g=8, m=3, q=2)
        grid = rng.standard_normal((3, 32)) + 1j * rng.standard_normal((3, 32))
        chan = generate_taps(cfg, 5, seed=11)
        imp = ImpairmentParams(cfo=0.013, sfo=4e-4)
        out = apply_impairments_time(modulate_frame(grid, cfg), chan, imp, cfg)
        tones = grid * chan.ctf
        k = np.arange(cfg.n)
        expected = np.empty(cfg.m * cfg.n_b, complex)
        for l in range(cfg.m):
            for j_idx in range(cfg.n_b):
                p = l * cfg.n_b + j_idx
                u = (j_idx - cfg.n_g) + imp.sfo * p
                tone_sum = np.sum(tones[l] * np.exp(2j * np.pi * k * u / cfg.n))
                expected[p] = tone_sum / np.sqrt(cfg.n) * np.exp(
                    2j * np.pi * imp.cfo * p * (1 + imp.sfo) / cfg.n
                )
        assert np.max(np.abs(out - expected)) < 1e-10 * np.max(np.abs(expected))


class TestFreqModel:
    def test_no_impairments_is_exact_identity(self, cfg8, rng):
        grid = map_symbols(rng.integers(0, 16, (2, 8)), cfg8.constellation)
        out = apply_impairments_freq(grid, flat_channel(cfg8), ImpairmentParams(), cfg8)
        assert np.array_equal(out, grid)

    def test_block0_phase_formula(self, cfg512):
        # cfo only, first block: half-block term plus guard advance
        imp = ImpairmentParams(cfo=0.02)
        ramp = tone_phase_ramp(cfg512, imp)
        expected = np.pi * 0.02 * 511 / 512 + 2 * np.pi * (64 / 512) * 0.02
        assert ramp[0, 0] == pytest.approx(expected, rel=1e-12)
        assert ramp[0, 100] == pytest.approx(expected, rel=1e-12)  # k-free when sfo=0

    def test_seeded_grids_reproducible(self, cfg512, rng):
        grid = map_symbols(rng.integers(0, 16, (10, 512)), cfg512.constellation)
        chan = flat_channel(cfg512)
        imp = ImpairmentParams(cfo=0.01, sfo=2e-5, noise_var=0.1, seed=42)
        a = apply_impairments_freq(grid, chan, imp, cfg512)
        b = apply_impairments_freq(grid, chan, imp, cfg512)
        assert np.array_equal(a, b)


class TestAwgn:
    def test_zero_variance_is_identity(self, rng):
        x = rng.standard_normal(100) + 1j * rng.standard_normal(100)
        np.testing.assert_array_equal(add_awgn(x, 0.0), x)

    def test_variance_split_between_parts(self):
        out = add_awgn(np.zeros(1_000_000, complex), 1.0, seed=5)
        assert np.mean(np.abs(out) ** 2) == pytest.approx(1.0, rel=0.005)
        assert np.var(out.real) == pytest.approx(0.5, rel=0.01)
        assert np.var(out.imag) == pytest.approx(0.5, rel=0.01)

    def test_fixed_seed_is_deterministic(self):
        x = np.ones(64, complex)
        np.testing.assert_array_equal(add_awgn(x, 0.3, seed=9), add_awgn(x, 0.3, seed=9))

    def test_rejects_negative_variance(self):
        with pytest.raises(ValueError):
            add_awgn(np.zeros(4, complex), -1.0)


class TestPerturbCsi:
    def test_kappa_zero_returns_identical_ctf(self, cfg512):
        chan = generate_taps(cfg512, 32, seed=2)
        out = perturb_csi(chan, 0.0, seed=3)
        np.testing.assert_array_equal(out.ctf, chan.ctf)

    def test_kappa_one_is_uncorrelated_noise(self, cfg512):
        num = 0.0 + 0.0j
        den_a = den_b = 0.0
        for i in range(20):  # 20 x 5120 tones
            chan = generate_taps(cfg512, 32, seed=100 + i)
            out = perturb_csi(chan, 1.0, seed=200 + i)
            num += np.sum(out.ctf * np.conj(chan.ctf))
            den_a += np.sum(np.abs(out.ctf) ** 2)
            den_b += np.sum(np.abs(chan.ctf) ** 2)
        assert np.abs(num) / np.sqrt(den_a * den_b) < 0.01

    def test_second_moment_blend(self):
        # tones within one draw share only l_taps degrees of freedom, so
        # many small draws beat few large ones for a 1% ensemble check
        cfg = SystemConfig(n=64, n_g=16, m=1, q=2)
        kappa = 0.3
        total = exponential_power_profile(16).sum()
        acc = 0.0
        draws = 4000
        for i in range(draws):
            chan = generate_taps(cfg, 16, seed=300 + i)
            acc += np.mean(np.abs(perturb_csi(chan, kappa, seed=400_000 + i).ctf) ** 2)
        expected = (1 - kappa**2) * total + kappa**2
        assert acc / draws == pytest.approx(expected, rel=0.01)

    def test_rejects_kappa_outside_unit_interval(self, cfg512):
        with pytest.raises(ValueError):
            perturb_csi(flat_channel(cfg512), 1.5)
