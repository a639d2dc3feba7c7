"""Minimum-infinity-norm solver for correlated formation problems.

The optimization: minimize the largest occupation-to-thermal-weight ratio
``q_E`` of a composite diagonal state subject to fixed single-subsystem
marginals, ``q >= 0``.  The auxiliary-ceiling linearization (minimize Q
with q <= Q) is solved through its reciprocal scaling: with occupation
variables ``v_E = w_E q_E / Q`` and ``t = 1/Q``, the program becomes

    maximize t   subject to   B v = t p,   0 <= v_E <= w_E,

where ``B`` holds conditional probabilities in [0, 1] and the thermal
weights ``w_E`` appear only as box bounds.  Every tableau coefficient then
lives in [-1, 1] even though the raw matrix entries span hundreds of
orders of magnitude (the scale sits in an explicit per-column log factor),
the start v = 0, t = 0 is already feasible, and any simplex basis is a
small full-rank submatrix with entries of order one.  Pivoting is a dense
bounded-variable simplex with Bland's rule; the binomial systems are
heavily degenerate and Bland guarantees termination.

A second mode re-runs the identical pivot rules in exact rational
arithmetic (inputs snapped onto a bounded-denominator grid).  It is
bit-reproducible and serves as an oracle for the float path; it is not a
production path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np
from scipy.special import logsumexp

from .errors import AccuracyError, InfeasibleError, InvalidStateError
from .freeenergy import WorkBudget, joint_entropy
from .spectrum import (
    DEFAULT_LEVEL_CAP,
    DiagonalState,
    LocalSystem,
    build_spectrum,
    degeneracy_shifted,
    zero_copy_spectrum,
)

PIVOT_TOL = 1e-11
FEAS_TOL = 1e-9
SNAP_DENOMINATOR = 10**6

__all__ = [
    "ConstraintSystem",
    "LpSolution",
    "ExactSolution",
    "build_constraints",
    "min_infnorm",
    "cwork_lp",
]


@dataclass(frozen=True)
class ConstraintSystem:
    """Marginal constraints of a correlated formation problem.

    The raw matrix entry for (row d, level E) is
    ``g_{N-1}(E - E_d) * exp(-E) / Z**N``; it is stored as a conditional
    probability ``coeff`` in [0, 1] with the magnitude carried by the
    per-column log scale (the log thermal weight of the level).  Rows come
    in blocks of one probability vector each (one block for identical
    copies; one block per subsystem class in the heterogeneous case), and
    within a block every column's coefficients sum to one.
    """

    coeff: np.ndarray
    log_col_scale: np.ndarray
    rhs: np.ndarray
    column_energies: np.ndarray
    n_blocks: int = 1
    block_rows: tuple[int, ...] | None = None

    def __post_init__(self):
        coeff = np.asarray(self.coeff, dtype=float)
        scale = np.asarray(self.log_col_scale, dtype=float)
        rhs = np.asarray(self.rhs, dtype=float)
        energies = np.asarray(self.column_energies, dtype=float)
        object.__setattr__(self, "coeff", coeff)
        object.__setattr__(self, "log_col_scale", scale)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "column_energies", energies)
        if coeff.ndim != 2:
            raise InvalidStateError("coefficient matrix must be 2-d")
        rows, cols = coeff.shape
        if scale.shape != (cols,) or energies.shape != (cols,) or rhs.shape != (rows,):
            raise InvalidStateError("constraint system shapes disagree")
        if np.any(coeff < -1e-12):
            raise InvalidStateError("constraint coefficients must be nonnegative")
        blocks = self.block_rows or self._even_blocks(rows)
        object.__setattr__(self, "block_rows", tuple(blocks))
        if sum(blocks) != rows or len(blocks) != self.n_blocks:
            raise InvalidStateError("block structure does not cover the rows")
        start = 0
        for size in blocks:
            colsum = coeff[start : start + size].sum(axis=0)
            if np.any(np.abs(colsum - 1.0) > 1e-9):
                raise InvalidStateError("block column sums must equal the level weights")
            start += size

    def _even_blocks(self, rows: int) -> tuple[int, ...]:
        if rows % self.n_blocks:
            raise InvalidStateError("rows do not divide into equal blocks")
        return (rows // self.n_blocks,) * self.n_blocks

    @property
    def n_rows(self) -> int:
        return int(self.coeff.shape[0])

    @property
    def n_cols(self) -> int:
        return int(self.coeff.shape[1])

    @property
    def col_weights(self) -> np.ndarray:
        """Linear thermal weights of the columns (may underflow to 0)."""
        return np.exp(self.log_col_scale)

    def matrix(self) -> np.ndarray:
        """The raw constraint matrix (coefficients times weights)."""
        return self.coeff * self.col_weights[None, :]

    def snapped(self, max_denominator: int = SNAP_DENOMINATOR) -> "ConstraintSystem":
        """The same system with every number rounded onto the rational grid
        used by the exact mode, re-expressed in floats."""
        coeff_fr, w_fr, rhs_fr = _snap(self, max_denominator)
        w = np.array([float(x) for x in w_fr])
        with np.errstate(divide="ignore"):
            log_scale = np.log(w)
        return replace(
            self,
            coeff=np.array([[float(x) for x in row] for row in coeff_fr]),
            log_col_scale=log_scale,
            rhs=np.array([float(x) for x in rhs_fr]),
        )


@dataclass(frozen=True)
class ExactSolution:
    """Rational payload of an exact-mode solve (snapped inputs)."""

    q: tuple[Fraction, ...]
    value: Fraction
    col_weights: tuple[Fraction, ...]

    @property
    def support_mass(self) -> Fraction:
        return sum((w for q, w in zip(self.q, self.col_weights) if q > 0), Fraction(0))


@dataclass(frozen=True)
class LpSolution:
    """Optimal ratio vector ``q`` with its ceiling value and basis."""

    q: np.ndarray
    value: float
    log_value: float
    status: str
    intermediate_count: int
    basis: tuple[int, ...]
    occupations: np.ndarray
    residual: float
    exact: ExactSolution | None = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def build_constraints(
    local: DiagonalState,
    sys: LocalSystem,
    n: int,
    coalesce_tol: float | None = None,
    cap: int = DEFAULT_LEVEL_CAP,
) -> ConstraintSystem:
    """Marginal constraint system for ``n`` copies of ``sys`` in state ``local``."""
    cs, _ = _build_with_spectrum(local, sys, n, coalesce_tol, cap)
    return cs


def _build_with_spectrum(local, sys, n, coalesce_tol=None, cap=DEFAULT_LEVEL_CAP):
    if local.dim != sys.dim:
        raise InvalidStateError("state and system dimensions differ")
    spec = build_spectrum(sys, n, coalesce_tol, cap)
    minor = build_spectrum(sys, n - 1, coalesce_tol, cap) if n > 1 else zero_copy_spectrum()
    logz = sys.log_partition
    log_scale = spec.log_degeneracies - spec.energies - n * logz
    coeff = np.zeros((sys.dim, spec.size))
    for d, e_d in enumerate(sys.levels):
        for j in range(spec.size):
            shifted = degeneracy_shifted(minor, float(spec.energies[j]), e_d)
            if shifted != -math.inf:
                coeff[d, j] = math.exp(shifted - spec.log_degeneracies[j])
    cs = ConstraintSystem(
        coeff=coeff,
        log_col_scale=log_scale,
        rhs=np.asarray(local.probs, dtype=float),
        column_energies=spec.energies.copy(),
    )
    return cs, spec


def _infeasible(m: int) -> LpSolution:
    nan = float("nan")
    return LpSolution(
        q=np.zeros(m),
        value=nan,
        log_value=nan,
        status="infeasible",
        intermediate_count=0,
        basis=(),
        occupations=np.zeros(m),
        residual=nan,
    )


def min_infnorm(cs: ConstraintSystem, mode: str = "float") -> LpSolution:
    """Minimize the largest ratio ``q`` subject to ``cs``.

    ``mode="float"`` runs the numpy simplex; ``mode="exact"`` snaps the
    inputs to rationals (denominator <= 10**6) and runs the same pivot rules
    in exact arithmetic.
    """
    if mode not in ("float", "exact"):
        raise InvalidStateError(f"unknown mode {mode!r}")
    if np.any(cs.rhs < -1e-15):
        return _infeasible(cs.n_cols)
    if mode == "float":
        return _solve_float(cs)
    return _solve_exact(cs)


# --------------------------------------------------------------------------
# float bounded-variable simplex

_AT_LOWER = 0
_AT_UPPER = 1


def _solve_float(cs: ConstraintSystem) -> LpSolution:
    B = cs.coeff
    w = cs.col_weights
    p = cs.rhs
    R, M = B.shape
    # columns: v_0..v_{M-1} | t | artificials (pinned to zero) | rhs
    ncols = M + 1 + R
    T = np.zeros((R, ncols + 1))
    T[:, :M] = B
    T[:, M] = -p
    for r in range(R):
        T[r, M + 1 + r] = 1.0
    upper = np.concatenate([w, [math.inf], np.zeros(R)])
    basis = [M + 1 + r for r in range(R)]
    at_upper = np.zeros(ncols, dtype=bool)
    cost = np.zeros(ncols)
    cost[M] = 1.0

    max_iter = 500 * (ncols + 1)
    for _ in range(max_iter):
        x_b = T[:, -1].copy()
        for j in np.flatnonzero(at_upper):
            x_b -= T[:, j] * upper[j]
        basic_cost = cost[basis]
        obj = cost - basic_cost @ T[:, :ncols]
        in_basis = np.zeros(ncols, dtype=bool)
        in_basis[basis] = True

        enter = -1
        direction = 0.0
        for j in range(ncols):
            if in_basis[j] or upper[j] <= 0.0:
                continue
            if not at_upper[j] and obj[j] > PIVOT_TOL:
                enter, direction = j, 1.0
                break
            if at_upper[j] and obj[j] < -PIVOT_TOL:
                enter, direction = j, -1.0
                break
        if enter < 0:
            break

        col = T[:, enter]
        theta = upper[enter] if math.isfinite(upper[enter]) else math.inf
        leave = -1
        leave_to = _AT_LOWER
        for i in range(R):
            delta = direction * col[i]
            if delta > PIVOT_TOL:
                limit = x_b[i] / delta
                hit = _AT_LOWER
            elif delta < -PIVOT_TOL and math.isfinite(upper[basis[i]]):
                limit = (upper[basis[i]] - x_b[i]) / (-delta)
                hit = _AT_UPPER
            else:
                continue
            limit = max(limit, 0.0)
            margin = 1e-14 * max(1.0, theta) if math.isfinite(theta) else 0.0
            if limit < theta - margin:
                theta, leave, leave_to = limit, i, hit
            elif leave >= 0 and limit <= theta + margin and basis[i] < basis[leave]:
                leave, leave_to = i, hit
        if math.isinf(theta):
            raise AccuracyError("simplex reports an unbounded direction")
        if leave < 0:
            at_upper[enter] = not at_upper[enter]  # bound-to-bound flip
            continue
        leaving_var = basis[leave]
        at_upper[leaving_var] = leave_to == _AT_UPPER
        _pivot_float(T, basis, leave, enter)
        at_upper[enter] = False
    else:
        raise AccuracyError("simplex failed to terminate")

    x_b = T[:, -1].copy()
    for j in np.flatnonzero(at_upper):
        x_b -= T[:, j] * upper[j]
    values = np.where(at_upper, upper, 0.0)
    for i, b in enumerate(basis):
        values[b] = x_b[i]
    v = values[:M]
    t = float(values[M])
    if t <= 0.0:
        return _infeasible(M)
    return _package_float(cs, v, t)


def _pivot_float(T, basis, row, col):
    prow = T[row] / T[row, col]
    coefs = T[:, col].copy()
    T -= np.outer(coefs, prow)
    T[row] = prow
    T[:, col] = 0.0
    T[row, col] = 1.0
    basis[row] = col


def _package_float(cs: ConstraintSystem, v, t: float) -> LpSolution:
    w = cs.col_weights
    M = cs.n_cols
    Q = 1.0 / t
    if not math.isfinite(Q):
        raise AccuracyError("ceiling value overflowed; use the analytic path")
    q = np.zeros(M)
    for j in range(M):
        if w[j] <= 0.0 or v[j] <= 0.0:
            continue
        if v[j] >= w[j]:
            q[j] = Q  # at its box bound: exactly the ceiling
        else:
            q[j] = v[j] / (w[j] * t)
    occ = np.maximum(v, 0.0) / t
    residual = float(np.max(np.abs(cs.coeff @ occ - cs.rhs)))
    if residual > FEAS_TOL:
        raise AccuracyError(f"optimal basis misses the marginals by {residual:.3e}")
    total = occ.sum()
    if abs(total - 1.0) <= 1e-7 and total > 0:
        occ = occ / total  # residual-level noise; the occupations are a distribution
    lo = 1e-7 * Q
    intermediate = int(np.sum((q > lo) & (q < Q - lo)))
    return LpSolution(
        q=q,
        value=Q,
        log_value=-math.log(t),
        status="optimal",
        intermediate_count=intermediate,
        basis=tuple(sorted(np.flatnonzero(q > lo).tolist())),
        occupations=occ,
        residual=residual,
    )


# --------------------------------------------------------------------------
# exact rational simplex (oracle)


def _snap(cs: ConstraintSystem, max_denominator: int):
    def snap(x: float) -> Fraction:
        if x == 0.0 or not math.isfinite(x):
            return Fraction(0)
        return Fraction(x).limit_denominator(max_denominator)

    coeff = [[snap(x) for x in row] for row in cs.coeff]
    weights = [snap(x) for x in cs.col_weights]
    rhs = [snap(x) for x in cs.rhs]
    return coeff, weights, rhs


def _solve_exact(cs: ConstraintSystem) -> LpSolution:
    Bfr, wfr, rhsfr = _snap(cs, SNAP_DENOMINATOR)
    if any(x < 0 for x in rhsfr):
        return _infeasible(cs.n_cols)
    R = len(Bfr)
    M = len(wfr)
    ncols = M + 1 + R
    zero = Fraction(0)
    one = Fraction(1)
    T = [[zero] * (ncols + 1) for _ in range(R)]
    for r in range(R):
        row = T[r]
        for j in range(M):
            row[j] = Bfr[r][j]
        row[M] = -rhsfr[r]
        row[M + 1 + r] = one
    upper: list = list(wfr) + [None] + [zero] * R  # None marks +infinity
    basis = [M + 1 + r for r in range(R)]
    at_upper = [False] * ncols

    max_iter = 500 * (ncols + 1)
    for _ in range(max_iter):
        x_b = [T[i][-1] for i in range(R)]
        for j in range(ncols):
            if at_upper[j] and upper[j]:
                for i in range(R):
                    if T[i][j] != 0:
                        x_b[i] -= T[i][j] * upper[j]
        in_basis = [False] * ncols
        for b in basis:
            in_basis[b] = True
        obj = [zero] * ncols
        obj[M] = one
        for i in range(R):
            if basis[i] == M:
                for j in range(ncols):
                    obj[j] -= T[i][j]

        enter = -1
        direction = 0
        for j in range(ncols):
            if in_basis[j] or (upper[j] is not None and upper[j] == 0):
                continue
            if not at_upper[j] and obj[j] > 0:
                enter, direction = j, 1
                break
            if at_upper[j] and obj[j] < 0:
                enter, direction = j, -1
                break
        if enter < 0:
            break

        theta = upper[enter]  # None = unbounded span
        leave = -1
        leave_to = _AT_LOWER
        for i in range(R):
            delta = direction * T[i][enter]
            if delta > 0:
                limit = x_b[i] / delta
                hit = _AT_LOWER
            elif delta < 0 and upper[basis[i]] is not None:
                limit = (upper[basis[i]] - x_b[i]) / (-delta)
                hit = _AT_UPPER
            else:
                continue
            if limit < 0:
                limit = zero
            if theta is None or limit < theta:
                theta, leave, leave_to = limit, i, hit
            elif limit == theta and leave >= 0 and basis[i] < basis[leave]:
                leave, leave_to = i, hit
        if theta is None:
            raise AccuracyError("exact simplex reports an unbounded direction")
        if leave < 0:
            at_upper[enter] = not at_upper[enter]
            continue
        leaving_var = basis[leave]
        at_upper[leaving_var] = leave_to == _AT_UPPER
        _pivot_exact(T, basis, leave, enter)
        at_upper[enter] = False
    else:
        raise AccuracyError("exact simplex failed to terminate")

    x_b = [T[i][-1] for i in range(R)]
    for j in range(ncols):
        if at_upper[j] and upper[j]:
            for i in range(R):
                if T[i][j] != 0:
                    x_b[i] -= T[i][j] * upper[j]
    values = [upper[j] if at_upper[j] else zero for j in range(ncols)]
    for i, b in enumerate(basis):
        values[b] = x_b[i]
    v = values[:M]
    t = values[M]
    if t is None or t <= 0:
        return _infeasible(M)

    q = []
    for j in range(M):
        if wfr[j] == 0 or v[j] <= 0:
            q.append(zero)
        elif v[j] >= wfr[j]:
            q.append(1 / t)
        else:
            q.append(v[j] / (wfr[j] * t))
    Q = 1 / t
    residual = max(
        (
            abs(sum(Bfr[r][j] * v[j] for j in range(M) if v[j] != 0) - t * rhsfr[r])
            for r in range(R)
        ),
        default=zero,
    )
    if residual != 0:
        raise AccuracyError("exact solve left a marginal residual")
    exact = ExactSolution(q=tuple(q), value=Q, col_weights=tuple(wfr))
    value = float(Q)
    return LpSolution(
        q=np.array([float(x) for x in q]),
        value=value,
        log_value=math.log(value) if value > 0 else -math.inf,
        status="optimal",
        intermediate_count=sum(1 for x in q if 0 < x < Q),
        basis=tuple(sorted(j for j in range(M) if q[j] > 0)),
        occupations=np.array([float(x / t) for x in v]),
        residual=0.0,
        exact=exact,
    )


def _pivot_exact(T, basis, row, col):
    prow = T[row]
    inv = 1 / prow[col]
    prow = [x * inv for x in prow]
    T[row] = prow
    for i in range(len(T)):
        if i == row:
            continue
        coef = T[i][col]
        if coef != 0:
            T[i] = [a - coef * b for a, b in zip(T[i], prow)]
    basis[row] = col


# --------------------------------------------------------------------------
# end-to-end solve


def cwork_lp(
    local: DiagonalState,
    sys: LocalSystem,
    n: int,
    mode: str = "float",
    coalesce_tol: float | None = None,
    cap: int = DEFAULT_LEVEL_CAP,
):
    """Correlated work of formation of ``n`` copies via the linear program.

    Returns ``(solution, budget, occupations)``: the optimal ratio vector,
    the work budget of the optimal joint state (formation, extraction,
    irreversible work, free-energy difference, all in kT), and the joint
    level occupations.
    """
    cs, spec = _build_with_spectrum(local, sys, n, coalesce_tol, cap)
    sol = min_infnorm(cs, mode)
    if not sol.optimal:
        raise InfeasibleError("marginal constraints admit no joint state")

    if sol.exact is not None:
        populated = np.array([x > 0 for x in sol.exact.q])
    else:
        populated = sol.q > 1e-12 * max(sol.value, 1e-300)
    log_mass = float(logsumexp(cs.log_col_scale[populated]))
    formation = sol.log_value
    extraction = -log_mass

    occ = sol.occupations
    mean_energy = float(np.dot(occ, spec.energies))
    df_joint = mean_energy - joint_entropy(occ, spec) + n * sys.log_partition
    budget = WorkBudget(
        formation=formation,
        extraction=extraction,
        irreversible=formation - extraction,
        delta_f=df_joint,
    )
    return sol, budget, occ
