import math

import numpy as np
import pytest

from corrtherm import (
    InvalidStateError,
    analytic_cwork,
    build_spectrum,
    cwork_lp,
    gibbs_weights,
    quasi_thermal_interval,
    qubit_delta_f,
    qubit_single_formation,
    qubit_state,
    qubit_system,
    renyi_divergence,
    rstar_ladder,
    rstar_spacing_stats,
)
from corrtherm.qubit import _log_weights

LN2 = math.log(2)


def normalized_weights(n, beta_e0):
    log_g, _ = _log_weights(n, beta_e0)
    return np.exp(log_g)


class TestLadder:
    def test_single_copy_small_gap(self):
        lad = rstar_ladder(1, 1e-12)
        assert np.allclose(lad.p_values, [0.0, 0.5, 1.0], atol=1e-11)

    def test_pair_zero_gap(self):
        lad = rstar_ladder(2, 0.0)
        assert np.allclose(lad.p_values, [0, 1 / 3, 1 / 2, 2 / 3, 1], atol=1e-14)

    @pytest.mark.parametrize("n", [1, 2, 5, 13, 50])
    @pytest.mark.parametrize("beta_e0", [0.0, LN2, 1.0, 3.0])
    def test_count_and_thermal_membership(self, n, beta_e0):
        lad = rstar_ladder(n, beta_e0)
        assert lad.size == 2 * n + 1
        assert lad.p_values[0] == 0.0
        assert lad.p_values[-1] == 1.0
        p_beta = 1.0 / (1.0 + math.exp(beta_e0))
        assert lad.p_values[n] == pytest.approx(p_beta, abs=1e-12)
        assert np.all(np.diff(lad.p_values) >= 0)

    def test_strictly_increasing_where_representable(self):
        lad = rstar_ladder(6, 1.0)
        assert np.all(np.diff(lad.p_values) > 0)

    def test_quasi_thermal_endpoints_closed_forms(self):
        # the rung above thermal equals p_beta / (1 - g_0); the rung below
        # follows the matching form with the top-level Gibbs weight
        for n, beta_e0 in [(2, 0.7), (3, 1.0), (5, LN2)]:
            lad = rstar_ladder(n, beta_e0)
            g = normalized_weights(n, beta_e0)
            p_beta = lad.p_beta
            p_plus = p_beta / (1.0 - g[0])
            p_minus_gibbs = (p_beta - g[-1]) / (1.0 - g[-1])
            lo, hi = quasi_thermal_interval(n, beta_e0, lad)
            assert hi == pytest.approx(p_plus, abs=1e-12)
            assert lo == pytest.approx(p_minus_gibbs, abs=1e-12)
            # the same expression with the sign of the exponent flipped does
            # not reproduce the ladder: suspected typo in the printed form
            wrong = (p_beta - 1.0 / g[-1]) / (1.0 - 1.0 / g[-1])
            assert abs(lo - wrong) > 1e-6


class TestAnalyticOptimum:
    def test_thermal_point_full_support(self):
        opt = analytic_cwork(1.0 / (1.0 + math.exp(1.0)), 4, 1.0)
        assert opt.works.formation == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(opt.q_vector(), 1.0, atol=1e-12)

    def test_pair_anchor(self):
        opt = analytic_cwork(0.75, 2, 0.0)
        assert opt.side == "above"
        assert opt.u_range == (2, 2)
        assert opt.m_star == 1
        assert opt.s == pytest.approx(0.5, abs=1e-12)
        assert opt.q_value == pytest.approx(2.0, abs=1e-12)
        assert opt.works.formation == pytest.approx(LN2, abs=1e-12)
        assert opt.works.extraction == pytest.approx(math.log(4 / 3), abs=1e-12)

    @pytest.mark.parametrize("beta_e0", [0.3, 1.0])
    def test_rungs_are_reversible_restricted_thermals(self, beta_e0):
        n = 6
        lad = rstar_ladder(n, beta_e0)
        g = normalized_weights(n, beta_e0)
        for j, p in enumerate(lad.p_values):
            opt = analytic_cwork(float(p), n, beta_e0, lad)
            assert opt.s == pytest.approx(1.0)
            assert opt.works.formation == pytest.approx(
                opt.works.extraction, abs=1e-12
            )
            # formation equals the log ratio of full to restricted partition
            # sums over the populated run
            if j <= n:
                mass = g[: j + 1].sum()
            else:
                mass = g[j - n :].sum()
            assert opt.works.formation == pytest.approx(-math.log(mass), abs=1e-9)

    def test_explicit_boundary_formulas(self):
        # the boundary fill and ceiling follow from the two active
        # constraints: reproduce them from the raw weighted sums
        rng = np.random.default_rng(7)
        for _ in range(25):
            n = int(rng.integers(2, 11))
            beta_e0 = float(rng.uniform(0.0, 2.0))
            p = float(rng.uniform(0.0, 1.0))
            opt = analytic_cwork(p, n, beta_e0)
            if opt.s == 1.0:
                continue  # on a rung
            g = normalized_weights(n, beta_e0)
            m_star = opt.m_star
            lo, hi = opt.u_range
            run = np.arange(lo, hi + 1)
            gamma = (m_star - n * p) / np.sum((m_star - run) * g[run])
            s = np.sum((n * p - run) * g[run]) / ((m_star - n * p) * g[m_star])
            assert opt.q_value == pytest.approx(gamma, rel=1e-9)
            assert opt.s == pytest.approx(s, rel=1e-9)

    def test_constraints_reproduced(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            n = int(rng.integers(1, 12))
            beta_e0 = float(rng.uniform(0.0, 3.0))
            p = float(rng.uniform(0.0, 1.0))
            opt = analytic_cwork(p, n, beta_e0)
            g = normalized_weights(n, beta_e0)
            q = opt.q_vector()
            assert np.dot(g, q) == pytest.approx(1.0, abs=1e-10)
            assert np.dot(np.arange(n + 1) * g, q) == pytest.approx(n * p, abs=1e-10)

    def test_convex_combination_of_rung_solutions(self):
        n, beta_e0 = 5, 0.8
        lad = rstar_ladder(n, beta_e0)
        g = normalized_weights(n, beta_e0)
        rng = np.random.default_rng(11)
        for _ in range(20):
            p = float(rng.uniform(0.0, 1.0))
            opt = analytic_cwork(p, n, beta_e0, lad)
            j = opt.segment
            x = opt.mix
            if not 0.0 < x < 1.0:
                continue

            def rung_vector(idx):
                if idx <= n:
                    support = np.arange(0, idx + 1)
                else:
                    support = np.arange(idx - n, n + 1)
                v = np.zeros(n + 1)
                v[support] = 1.0 / g[support].sum()
                return v

            expected = x * rung_vector(j) + (1 - x) * rung_vector(j + 1)
            assert np.allclose(opt.q_vector(), expected, atol=1e-9)

    def test_formation_exponential_piecewise_affine(self):
        n, beta_e0 = 4, 1.0
        lad = rstar_ladder(n, beta_e0)
        for j in range(2 * n):
            lo, hi = lad.p_values[j], lad.p_values[j + 1]
            if hi - lo < 1e-6:
                continue
            grid = np.linspace(lo, hi, 9)[1:-1]
            values = [
                math.exp(analytic_cwork(float(p), n, beta_e0, lad).works.formation)
                for p in grid
            ]
            second = np.diff(values, 2)
            assert np.max(np.abs(second)) < 1e-9 * max(values)

    def test_out_of_range_rejected(self):
        with pytest.raises(InvalidStateError):
            analytic_cwork(1.2, 3, 1.0)
        with pytest.raises(InvalidStateError):
            analytic_cwork(-0.1, 3, 1.0)

    def test_mutual_information_matches_direct_entropy(self):
        rng = np.random.default_rng(23)
        sys_cache = {}
        for _ in range(15):
            n = int(rng.integers(2, 9))
            beta_e0 = float(rng.uniform(0.05, 2.0))
            p = float(rng.uniform(0.0, 1.0))
            opt = analytic_cwork(p, n, beta_e0)
            occ = opt.occupations()
            from corrtherm.freeenergy import binary_entropy, joint_entropy

            sys = sys_cache.setdefault(beta_e0, qubit_system(beta_e0))
            spec = build_spectrum(sys, n)
            direct = n * binary_entropy(p) - joint_entropy(occ, spec)
            assert opt.mutual_information == pytest.approx(direct, abs=1e-9)

    def test_divergence_orders_collapse_on_rungs(self):
        n, beta_e0 = 7, LN2
        sys = qubit_system(beta_e0)
        spec = build_spectrum(sys, n)
        ref = gibbs_weights(spec, sys)
        lad = rstar_ladder(n, beta_e0)
        for p in lad.p_values:
            occ = analytic_cwork(float(p), n, beta_e0, lad).occupations()
            values = [
                renyi_divergence(occ, ref, a) for a in (0.0, 0.5, 1.0, 2.0, math.inf)
            ]
            assert max(values) - min(values) <= 1e-10


class TestQuasiThermal:
    def test_pair_zero_gap_interval(self):
        lo, hi = quasi_thermal_interval(2, 0.0)
        assert lo == pytest.approx(1 / 3, abs=1e-15)
        assert hi == pytest.approx(2 / 3, abs=1e-15)

    def test_single_copy_interval_is_everything_trivially(self):
        lo, hi = quasi_thermal_interval(1, 1e-12)
        assert (lo, hi) == (0.0, 1.0)

    def test_work_equals_single_copy_inside(self):
        n = 2
        lo, hi = quasi_thermal_interval(n, 0.0)
        for p in np.linspace(lo, hi, 11):
            total = analytic_cwork(float(p), n, 0.0).works.formation
            assert total == pytest.approx(qubit_single_formation(float(p), 0.0), abs=1e-10)

    def test_collective_strictly_helps_outside(self):
        # strictly mixed, non-thermal states outside the interval cost less
        # than independent copies (the pure endpoints are product-optimal)
        n, beta_e0 = 3, 1.0
        lo, hi = quasi_thermal_interval(n, beta_e0)
        for p in np.linspace(0.02, 0.98, 25):
            if lo - 1e-9 <= p <= hi + 1e-9:
                continue
            total = analytic_cwork(float(p), n, beta_e0).works.formation
            assert total < n * qubit_single_formation(float(p), beta_e0) - 1e-12

    def test_interval_width_shrinks(self):
        widths = []
        for n in range(2, 11):
            lo, hi = quasi_thermal_interval(n, 1.0)
            widths.append(hi - lo)
        assert all(b < a for a, b in zip(widths, widths[1:]))


class TestSpacingStats:
    def test_pair_zero_gap_no_cut(self):
        stats = rstar_spacing_stats(2, 0.0, 0.0)
        # scaled spacings of the sorted ladder {0, 1/3, 1/2, 2/3, 1}
        assert stats.count == 4
        assert stats.minimum == pytest.approx(1 / 3, abs=1e-12)
        assert stats.median == pytest.approx(1 / 2, abs=1e-12)
        assert stats.maximum == pytest.approx(2 / 3, abs=1e-12)

    def test_large_ladder_tail_density(self):
        stats = rstar_spacing_stats(2000, 1.0, 3.0)
        assert 0.9 <= stats.median <= 1.1

    def test_median_approaches_unity(self):
        deviations = [
            abs(rstar_spacing_stats(n, 1.0, 3.0).median - 1.0)
            for n in (250, 500, 1000, 2000)
        ]
        for prev, nxt in zip(deviations, deviations[1:]):
            assert nxt <= prev + 0.05

    def test_everything_cut_rejected(self):
        with pytest.raises(InvalidStateError):
            rstar_spacing_stats(4, 1.0, 100.0)


def test_delta_f_and_single_formation_helpers():
    assert qubit_delta_f(0.5, LN2) == pytest.approx(math.log(1.5) - 0.5 * LN2, abs=1e-12)
    assert qubit_single_formation(1.0, LN2) == pytest.approx(math.log(3), abs=1e-12)
    assert qubit_single_formation(0.0, LN2) == pytest.approx(math.log(1.5), abs=1e-12)


@pytest.mark.parametrize("beta_e0", [0.1, LN2, 1.0, 3.0])
def test_agreement_with_linear_program(beta_e0):
    sys = qubit_system(beta_e0)
    for n in (1, 2, 3, 5, 8):
        lad = rstar_ladder(n, beta_e0)
        for p in np.linspace(0.0, 1.0, 17):
            _, budget, _ = cwork_lp(qubit_state(float(p)), sys, n)
            a = analytic_cwork(float(p), n, beta_e0, lad)
            assert budget.formation == pytest.approx(a.works.formation, abs=1e-9)
            assert budget.extraction == pytest.approx(a.works.extraction, abs=1e-9)
