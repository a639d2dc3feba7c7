import math

import numpy as np
import pytest

from corrtherm import DiagonalState, LocalSystem


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_system(rng, dim, e_max=2.5) -> LocalSystem:
    levels = np.sort(np.concatenate([[0.0], rng.uniform(0.1, e_max, dim - 1)]))
    return LocalSystem(tuple(float(e) for e in levels))


def random_state(rng, dim, floor=0.0) -> DiagonalState:
    p = rng.dirichlet(np.ones(dim))
    if floor > 0:
        p = floor + (1 - dim * floor) * p
    p = p / p.sum()
    return DiagonalState(tuple(float(x) for x in p))


def flatten_joint(spec, occupations):
    """Expand (spectrum, level occupations) into one explicit system/state
    pair with every degenerate state listed, for majorization cross-checks."""
    levels = []
    probs = []
    for j, (energy, log_deg) in enumerate(spec.entries()):
        g = round(math.exp(log_deg))
        lam = occupations[j] / g
        levels.extend([energy] * g)
        probs.extend([lam] * g)
    order = np.argsort(levels, kind="stable")
    sys_flat = LocalSystem(tuple(float(levels[i]) for i in order))
    state_flat = DiagonalState(tuple(float(probs[i]) for i in order))
    return sys_flat, state_flat


def enumerate_spectrum(levels, n):
    """Brute-force oracle: all ordered n-tuples of levels, energies grouped
    exactly (tolerance 1e-9 on sums)."""
    import itertools

    sums = sorted(math.fsum(combo) for combo in itertools.product(levels, repeat=n))
    grouped = []
    for e in sums:
        if grouped and e - grouped[-1][0] <= 1e-9:
            grouped[-1][1] += 1
        else:
            grouped.append([e, 1])
    return [(e, c) for e, c in grouped]
