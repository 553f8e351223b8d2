import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ofdmsync import (
    SIMPLIFIED,
    WEIGHTED,
    PairSnr,
    SystemConfig,
    check_cs_ordering,
    f_lq,
    flat_channel,
    intercept_penalty,
    pair_snr_table,
    plan_regions,
    var_a1a2a3,
    var_general,
    var_intercept,
)

# frozen from 30-digit evaluation of the closed forms at the default system
# (n=512, g=1/8, m=10, q=4) and linear SNR 100
VAR_ETA_20DB = 1.1567815703413823e-13
VAR_EPS_20DB = 9.9501723554484343e-9


def a1a2a3_tables(cfg, snr):
    """Construct the idealized phi table: flat gain 1/n, constant symbol
    power, full pair sets of n/(2q) -- the closed forms' assumptions."""
    pairs = cfg.n // (2 * cfg.q)
    phi_cross = np.full((cfg.m, pairs), snr**2)
    phi_plus = np.full((cfg.m, pairs), 2.0 * snr)
    return [PairSnr(phi_cross, phi_plus) for _ in range(cfg.q)]


class TestPairSnr:
    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            PairSnr(np.array([-1.0]), np.array([1.0]))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            PairSnr(np.ones(3), np.ones(4))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            PairSnr(np.array([]), np.array([]))


class TestFigureOfMerit:
    def test_single_pair_branches_coincide(self):
        snr = PairSnr(np.array([4.0]), np.array([3.0]))
        assert f_lq(snr, WEIGHTED) == pytest.approx(1.0)
        assert f_lq(snr, SIMPLIFIED) == pytest.approx(1.0)

    def test_two_pair_point_values(self):
        snr = PairSnr(np.array([1.0, 1.0]), np.array([1.0, 3.0]))
        assert f_lq(snr, WEIGHTED) == pytest.approx(0.75)
        assert f_lq(snr, SIMPLIFIED) == pytest.approx(2.0 / 3.0)

    def test_constant_phi_plus_equalizes_branches(self, rng):
        snr = PairSnr(rng.random(50) + 0.1, np.full(50, 2.7))
        fw, fs = f_lq(snr, WEIGHTED), f_lq(snr, SIMPLIFIED)
        assert fw == pytest.approx(fs, rel=1e-12)

    def test_reduces_over_last_axis_only(self, rng):
        snr = PairSnr(rng.random((5, 4, 7)), rng.random((5, 4, 7)))
        assert f_lq(snr, WEIGHTED).shape == (5, 4)


class TestClosedForms:
    def test_frozen_values_at_20db(self, cfg512):
        pred = var_a1a2a3(cfg512, 100.0)
        assert pred.var_eta == pytest.approx(VAR_ETA_20DB, rel=1e-12)
        assert pred.var_eps == pytest.approx(VAR_EPS_20DB, rel=1e-12)
        assert pred.assumptions == "a1a2a3"

    def test_doubling_noise_doubles_variances(self, cfg512):
        base = var_a1a2a3(cfg512, 100.0)
        worse = var_a1a2a3(cfg512, 50.0)
        assert worse.var_eta == pytest.approx(2 * base.var_eta, rel=1e-12)
        assert worse.var_eps == pytest.approx(2 * base.var_eps, rel=1e-12)

    def test_block_count_scaling_is_cubic(self):
        v10 = var_a1a2a3(SystemConfig(m=10), 100.0)
        v20 = var_a1a2a3(SystemConfig(m=20), 100.0)
        assert v20.var_eta / v10.var_eta == pytest.approx(990 / 7980, rel=1e-12)

    def test_rejects_bad_snr(self, cfg512):
        with pytest.raises(ValueError):
            var_a1a2a3(cfg512, 0.0)


class TestInterceptPenalty:
    def test_default_system_factor(self, cfg512):
        assert intercept_penalty(cfg512.m, cfg512.g) == pytest.approx(554.04, rel=1e-12)
        # independent recomputation: 76 * 9 * (1.125/1.25)^2
        assert intercept_penalty(10, 0.125) == pytest.approx(76 * 9 * 0.81, rel=1e-12)

    def test_smallest_system_factor(self):
        assert intercept_penalty(2, 0.0) == pytest.approx(12.0, rel=1e-12)

    def test_factor_exceeds_one_everywhere(self):
        for m in range(2, 40):
            for g in np.linspace(0.0, 1.0, 21):
                assert intercept_penalty(m, g) > 1.0

    def test_var_intercept_rescales_both_entries(self, cfg512):
        base = var_a1a2a3(cfg512, 100.0)
        alt = var_intercept(cfg512, base)
        f = intercept_penalty(10, 0.125)
        assert alt.var_eta == pytest.approx(base.var_eta * f, rel=1e-12)
        assert alt.var_eps == pytest.approx(base.var_eps * f, rel=1e-12)
        assert alt.basis == "intercept"


class TestGeneralForm:
    def test_reduction_to_closed_form(self, cfg512):
        # algebraic relation: under the idealized inputs the general form
        # carries the extra (2*snr+1)/(2*snr) noise-squared term that the
        # closed form drops, vanishing as snr grows
        for snr in (10.0, 100.0, 1e4):
            general = var_general(a1a2a3_tables(cfg512, snr), cfg512, WEIGHTED)
            closed = var_a1a2a3(cfg512, snr)
            ratio = (2 * snr + 1) / (2 * snr)
            assert general.var_eta == pytest.approx(closed.var_eta * ratio, rel=1e-12)
            assert general.var_eps == pytest.approx(closed.var_eps * ratio, rel=1e-12)
        # high-SNR limit: agreement to 1e-12 outright
        snr = 1e13
        general = var_general(a1a2a3_tables(cfg512, snr), cfg512, WEIGHTED)
        closed = var_a1a2a3(cfg512, snr)
        assert general.var_eta == pytest.approx(closed.var_eta, rel=1e-12)
        assert general.var_eps == pytest.approx(closed.var_eps, rel=1e-12)
        # and at 20 dB the gap is already below a percent
        general = var_general(a1a2a3_tables(cfg512, 100.0), cfg512, SIMPLIFIED)
        assert general.var_eta == pytest.approx(VAR_ETA_20DB, rel=6e-3)

    def test_weighted_never_above_simplified(self, cfg512, rng):
        ctf = rng.standard_normal((10, 512)) + 1j * rng.standard_normal((10, 512))
        tables = pair_snr_table(ctf, 1.0, 0.01, plan_regions(cfg512))
        w = var_general(tables, cfg512, WEIGHTED)
        s = var_general(tables, cfg512, SIMPLIFIED)
        assert w.var_eta <= s.var_eta * (1 + 1e-12)
        assert w.var_eps <= s.var_eps * (1 + 1e-12)
        assert s.var_eta > w.var_eta  # strict for a genuinely uneven channel

    def test_accepts_stacked_table(self, cfg512):
        pairs = 64
        snr = 100.0
        stacked = PairSnr(
            np.full((10, 4, pairs), snr**2), np.full((10, 4, pairs), 2 * snr)
        )
        a = var_general(stacked, cfg512, WEIGHTED)
        b = var_general(a1a2a3_tables(cfg512, snr), cfg512, WEIGHTED)
        assert a.var_eta == pytest.approx(b.var_eta, rel=1e-13)

    def test_table_builder_matches_manual_phis(self, cfg512, rng):
        plan = plan_regions(cfg512)
        ctf = flat_channel(cfg512).ctf * (1 + 0.3 * rng.random((10, 512)))
        nv = 0.02
        tables = pair_snr_table(ctf, 1.0, nv, plan)
        k1, k2 = plan.pair_indices(2)
        p1 = np.abs(ctf[:, k1]) ** 2
        p2 = np.abs(ctf[:, k2]) ** 2
        np.testing.assert_allclose(tables[2].phi_cross, p1 * p2 / nv**2, rtol=1e-12)
        np.testing.assert_allclose(tables[2].phi_plus, (p1 + p2) / nv, rtol=1e-12)


class TestCauchySchwarzOrdering:
    def test_random_draws_never_invert(self, rng):
        for _ in range(200):
            snr = PairSnr(rng.random(20) * 10, rng.random(20) * 10)
            report = check_cs_ordering(snr)
            assert report.gap >= -1e-12 * max(report.f_weighted, 1.0)

    def test_constant_phi_plus_is_the_equality_case(self, rng):
        snr = PairSnr(rng.random(30) + 0.5, np.full(30, 4.2))
        report = check_cs_ordering(snr)
        assert report.phi_plus_constant
        assert abs(report.gap) <= 1e-12 * report.f_weighted

    def test_inverse_power_loading_also_equalizes(self, cfg512, rng):
        # non-flat channel with symbol power proportional to 1/|H|^2 keeps
        # phi_plus constant, hitting the equality branch without flatness
        plan = plan_regions(cfg512)
        ctf = (rng.random((10, 512)) + 0.2) * np.exp(
            2j * np.pi * rng.random((10, 512))
        )
        c, nv = 3.0, 0.1
        x_pow = c / np.abs(ctf) ** 2
        tables = pair_snr_table(ctf, x_pow, nv, plan)
        for qi in (0, 3):
            report = check_cs_ordering(
                PairSnr(tables[qi].phi_cross[4], tables[qi].phi_plus[4])
            )
            assert report.phi_plus_constant
            assert abs(report.gap) <= 1e-12 * report.f_weighted
        assert not np.allclose(np.abs(ctf), np.abs(ctf[0, 0]))

    def test_varying_phi_plus_gives_strict_gap(self, rng):
        snr = PairSnr(rng.random(30) + 0.5, rng.random(30) * 5)
        report = check_cs_ordering(snr)
        assert not report.phi_plus_constant
        assert report.gap > 0

    @given(
        phi_cross=st.lists(st.floats(0.0, 1e6), min_size=1, max_size=40),
        phi_plus=st.lists(st.floats(0.0, 1e6), min_size=40, max_size=40),
    )
    @settings(max_examples=300, deadline=None)
    def test_ordering_property(self, phi_cross, phi_plus):
        n = len(phi_cross)
        snr = PairSnr(np.asarray(phi_cross), np.asarray(phi_plus[:n]))
        report = check_cs_ordering(snr)  # raises internally on violation
        assert report.f_weighted >= report.f_simplified - 1e-9 * max(
            report.f_weighted, 1.0
        )
