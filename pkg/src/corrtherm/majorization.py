"""Thermo-majorization curves and wit-assisted transformation feasibility.

A diagonal state maps to a concave polygon: levels sorted by decreasing
occupation-to-Boltzmann ratio, x accumulating Boltzmann factors and y
accumulating probability.  One diagonal state can reach another through
thermal operations exactly when its polygon dominates the target's.  A
work bit charged to ``w`` on the source side scales every source abscissa
by ``exp(-w)``, which turns the minimal assisting work into a bisection on
a monotone feasibility predicate; that bisection independently reproduces
both deterministic work formulas and the correlated formation values, so
this module doubles as the package's cross-check oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidStateError, MajorizationError
from .spectrum import DiagonalState, LocalSystem

__all__ = [
    "MajorizationCurve",
    "beta_order",
    "curve",
    "can_transform",
    "min_work",
]

_DOMINATION_SLACK = 1e-12


@dataclass(frozen=True)
class MajorizationCurve:
    """Cumulative (Boltzmann weight, probability) polygon, beta-ordered.

    Vertices start at (0, 0); x is strictly increasing and y reaches one.
    The stored polygon continues flat at y = 1 beyond its last vertex.
    """

    x: np.ndarray
    y: np.ndarray
    beta_order: tuple[int, ...]

    def __post_init__(self):
        if self.x[0] != 0.0 or self.y[0] != 0.0:
            raise InvalidStateError("curve must start at the origin")
        if np.any(np.diff(self.x) <= 0):
            raise InvalidStateError("curve abscissas must be strictly increasing")
        if np.any(np.diff(self.y) < -1e-15) or abs(self.y[-1] - 1.0) > 1e-9:
            raise InvalidStateError("curve ordinates must climb to one")

    def height(self, x) -> np.ndarray:
        """Polygon height at abscissa x (flat at 1 past the last vertex)."""
        return np.interp(x, self.x, self.y, left=0.0, right=1.0)


def beta_order(state: DiagonalState, sys: LocalSystem) -> tuple[int, ...]:
    """Level indices sorted by decreasing p * exp(E); equal ratios break
    toward ascending energy (any such reordering gives the same polygon)."""
    if state.dim != sys.dim:
        raise InvalidStateError("state and system dimensions differ")
    keys = []
    for i, (p, e) in enumerate(zip(state.probs, sys.levels)):
        ratio = math.log(p) + e if p > 0 else -math.inf
        keys.append((-ratio, e, i))
    return tuple(i for _, _, i in sorted(keys))


def curve(state: DiagonalState, sys: LocalSystem, w: float = 0.0) -> MajorizationCurve:
    """Beta-ordered cumulative polygon of ``state`` with a wit charged to ``w``.

    Positive ``w`` models a charged work bit on the source side (all
    abscissas shrink by exp(-w)); negative ``w`` models demanded extraction.
    """
    order = beta_order(state, sys)
    scale = math.exp(-w)
    xs = [0.0]
    ys = [0.0]
    acc_x = 0.0
    acc_y = 0.0
    for i in order:
        acc_x += scale * math.exp(-sys.levels[i])
        acc_y += state.probs[i]
        xs.append(acc_x)
        ys.append(min(acc_y, 1.0))
    return MajorizationCurve(np.array(xs), np.array(ys), order)


def can_transform(
    src: DiagonalState,
    dst: DiagonalState,
    sys_src: LocalSystem,
    sys_dst: LocalSystem | None = None,
    w: float = 0.0,
    slack: float = _DOMINATION_SLACK,
) -> bool:
    """Whether ``src`` plus a wit charged to ``w`` reaches ``dst``.

    True when the source polygon lies on-or-above the target polygon at the
    union of both vertex sets (piecewise-linear curves dominate everywhere
    exactly when they dominate there).
    """
    sys_dst = sys_dst or sys_src
    source = curve(src, sys_src, w)
    target = curve(dst, sys_dst, 0.0)
    grid = np.union1d(source.x, target.x)
    return bool(np.all(source.height(grid) >= target.height(grid) - slack))


def _bracket(sys_src: LocalSystem, sys_dst: LocalSystem) -> float:
    # the true answer lies within the divergence ranges of either side,
    # each bounded by max|E| + |log Z| + log D; sum both for margin
    span = 1.0
    for s in (sys_src, sys_dst):
        span += max(abs(e) for e in s.levels) + abs(s.log_partition) + math.log(s.dim)
    return span


def min_work(
    src: DiagonalState,
    dst: DiagonalState,
    sys_src: LocalSystem,
    sys_dst: LocalSystem | None = None,
    tol: float = 1e-9,
) -> float:
    """Smallest wit charge (within ``tol``) that makes the transformation go.

    Feasibility is monotone in ``w``, so bisection applies; the returned
    value is the feasible endpoint of the final bracket.  Negative results
    mean work can be drawn while still completing the transformation.
    """
    if tol <= 0:
        raise InvalidStateError("tolerance must be positive")
    sys_dst = sys_dst or sys_src
    hi = _bracket(sys_src, sys_dst)
    lo = -hi
    if not can_transform(src, dst, sys_src, sys_dst, hi):
        raise MajorizationError("transformation infeasible at the bracket top")
    if can_transform(src, dst, sys_src, sys_dst, lo):
        raise MajorizationError("feasibility below the bracket bottom")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if can_transform(src, dst, sys_src, sys_dst, mid):
            hi = mid
        else:
            lo = mid
    return hi
