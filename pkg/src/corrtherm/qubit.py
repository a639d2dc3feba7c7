"""Closed-form correlated formation works for two-level subsystems.

For n qubits with gap ``beta_e0`` the composite levels sit on the lattice
``m * beta_e0`` with binomial degeneracies, and the optimal joint state has
an explicit form: a thermal distribution over one contiguous run of lattice
indices plus at most one partially filled boundary index.  The run is
anchored at the bottom of the lattice for states colder than thermal and at
the top for hotter ones.

The boundary becomes exactly filled at 2n+1 special local states (the
reversible ladder): there the optimal joint state is thermal on a truncated
support, formation and extraction works coincide, and every divergence
order gives the same value.  Between two adjacent ladder states the optimal
ratio vector is the convex combination of the two rung solutions with the
same mixing weight as the local excitation probability, which makes the
exponential of the formation work piecewise affine in ``p``.

Everything runs on log-domain partial binomial sums, so ladders with n of
order 10**5 are routine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import InvalidStateError
from .freeenergy import WorkBudget, binary_entropy

__all__ = [
    "RStarLadder",
    "QubitOptimum",
    "SpacingStats",
    "rstar_ladder",
    "analytic_cwork",
    "quasi_thermal_interval",
    "rstar_spacing_stats",
    "qubit_delta_f",
    "qubit_single_formation",
]


def _log_weights(n: int, beta_e0: float) -> tuple[np.ndarray, float]:
    """Normalized log Gibbs weights of the excitation lattice m = 0..n."""
    m = np.arange(n + 1, dtype=float)
    log_binom = gammaln(n + 1) - gammaln(m + 1) - gammaln(n - m + 1)
    log_z = math.log1p(math.exp(-beta_e0))
    return log_binom - m * beta_e0 - n * log_z, log_z


def qubit_delta_f(p: float, beta_e0: float) -> float:
    """Single-copy free-energy difference of the state with excitation p."""
    log_z = math.log1p(math.exp(-beta_e0))
    return p * beta_e0 - binary_entropy(p) + log_z


def qubit_single_formation(p: float, beta_e0: float) -> float:
    """Single-copy work of formation, kT units."""
    log_z = math.log1p(math.exp(-beta_e0))
    candidates = []
    if p > 0:
        candidates.append(math.log(p) + beta_e0 + log_z)
    if p < 1:
        candidates.append(math.log1p(-p) + log_z)
    return max(candidates)


@dataclass(frozen=True)
class RStarLadder:
    """The 2n+1 reversible local states of the n-qubit formation problem.

    ``p_values`` is sorted; index n is the thermal point.  Each rung carries
    the log Gibbs mass of its support run in ``log_partial_sums`` (anchored
    at m=0 for rungs below thermal, at m=n above).  The prefix/suffix arrays
    and lattice weights are kept so downstream solves reuse them.
    """

    p_values: np.ndarray
    log_partial_sums: np.ndarray
    n: int
    beta_e0: float
    p_beta: float
    log_z: float
    log_g: np.ndarray
    prefix_mass: np.ndarray
    suffix_mass: np.ndarray

    def __post_init__(self):
        if self.p_values.size != 2 * self.n + 1:
            raise InvalidStateError("ladder must hold exactly 2n+1 rungs")
        if self.p_values[0] != 0.0 or abs(self.p_values[-1] - 1.0) > 1e-12:
            raise InvalidStateError("ladder endpoints must be 0 and 1")
        if np.any(np.diff(self.p_values) < -1e-12):
            raise InvalidStateError("ladder must be nondecreasing")
        if abs(self.p_values[self.n] - self.p_beta) > 1e-9:
            raise InvalidStateError("ladder must contain the thermal point")

    @property
    def size(self) -> int:
        return int(self.p_values.size)


def rstar_ladder(n: int, beta_e0: float) -> RStarLadder:
    """Build the reversible-state ladder for ``n`` copies."""
    if n < 1:
        raise InvalidStateError("need at least one copy")
    if beta_e0 < 0:
        raise InvalidStateError("gap must be nonnegative")
    log_g, log_z = _log_weights(n, beta_e0)
    m = np.arange(n + 1, dtype=float)
    with np.errstate(divide="ignore"):
        log_m = np.log(m)
    log_mg = log_m + log_g

    prefix = np.logaddexp.accumulate(log_g)
    prefix_w = np.logaddexp.accumulate(log_mg)
    suffix = np.logaddexp.accumulate(log_g[::-1])[::-1]
    suffix_w = np.logaddexp.accumulate(log_mg[::-1])[::-1]

    log_n = math.log(n)
    p_lo = np.exp(prefix_w - prefix - log_n)
    p_lo[0] = 0.0
    p_hi = np.exp(suffix_w - suffix - log_n)
    p_hi[-1] = 1.0  # exact by construction; the log round trip loses ulps

    p_beta = 1.0 / (1.0 + math.exp(beta_e0))
    values = np.concatenate([p_lo, p_hi[1:]])
    partial = np.concatenate([prefix, suffix[1:]])
    # mathematical monotonicity can be lost at the last ulp where bulk rungs
    # coincide in double precision; restore it without moving any value by
    # more than 1e-12
    fixed = np.maximum.accumulate(values)
    if np.any(fixed - values > 1e-12):
        raise InvalidStateError("ladder ordering broke beyond rounding noise")
    return RStarLadder(
        p_values=fixed,
        log_partial_sums=partial,
        n=n,
        beta_e0=beta_e0,
        p_beta=p_beta,
        log_z=log_z,
        log_g=log_g,
        prefix_mass=prefix,
        suffix_mass=suffix,
    )


@dataclass(frozen=True)
class QubitOptimum:
    """Optimal joint solution for one local excitation probability.

    ``u_range`` is the inclusive index run of fully populated lattice levels
    (None when only the boundary index carries weight), ``m_star`` the
    boundary index filled to fraction ``s``; at ladder rungs the convention
    is s = 1 with the topmost (below thermal) or bottommost (above thermal)
    populated index playing the boundary role.  ``works`` is the budget of
    the optimal joint state, total over all copies.
    """

    p: float
    n: int
    beta_e0: float
    side: str
    u_range: tuple[int, int] | None
    m_star: int
    s: float
    log_q_value: float
    log_support_mass: float
    log_u_mass: float
    log_g_star: float
    works: WorkBudget
    segment: int
    mix: float

    @property
    def q_value(self) -> float:
        return math.exp(self.log_q_value)

    @property
    def gamma(self) -> float:
        """Normalization of the joint occupations (partition form)."""
        return math.exp(self.n * self.log_z_total - self.log_q_value)

    @property
    def log_z_total(self) -> float:
        return math.log1p(math.exp(-self.beta_e0))

    @property
    def mutual_information(self) -> float:
        """Total correlations of the optimal joint state, nats."""
        info = self.works.delta_f - self.n * qubit_delta_f(self.p, self.beta_e0)
        return max(info, 0.0)

    def q_vector(self) -> np.ndarray:
        """Materialized ratio vector over m = 0..n (small n only)."""
        q = np.zeros(self.n + 1)
        gamma = self.q_value
        if self.u_range is not None:
            lo, hi = self.u_range
            q[lo : hi + 1] = gamma
        q[self.m_star] = self.s * gamma
        return q

    def occupations(self) -> np.ndarray:
        """Joint level occupations over m = 0..n."""
        log_g, _ = _log_weights(self.n, self.beta_e0)
        occ = np.zeros(self.n + 1)
        if self.u_range is not None:
            lo, hi = self.u_range
            occ[lo : hi + 1] = np.exp(self.log_q_value + log_g[lo : hi + 1])
        occ[self.m_star] = self.s * math.exp(self.log_q_value + log_g[self.m_star])
        return occ


def _logaddexp(a: float, b: float) -> float:
    return float(np.logaddexp(a, b))


def analytic_cwork(
    p: float, n: int, beta_e0: float, ladder: RStarLadder | None = None
) -> QubitOptimum:
    """Closed-form minimum work of formation of ``n`` correlated qubit copies.

    Brackets ``p`` between two ladder rungs (half-open segments, so a state
    sitting exactly on a rung takes the reversible s = 1 form) and mixes the
    rung solutions with the weight that reproduces ``p``.
    """
    if not 0.0 <= p <= 1.0:
        raise InvalidStateError("excitation probability must lie in [0, 1]")
    if ladder is None:
        ladder = rstar_ladder(n, beta_e0)
    elif ladder.n != n or ladder.beta_e0 != beta_e0:
        raise InvalidStateError("ladder belongs to a different problem")

    values = ladder.p_values
    j = int(np.searchsorted(values, p, side="right")) - 1
    j = min(max(j, 0), values.size - 2)
    width = values[j + 1] - values[j]
    x = 1.0 if width <= 0 else float((values[j + 1] - p) / width)
    x = min(max(x, 0.0), 1.0)

    if j < n:
        side = "below"
        k = j
        mass_low = ladder.prefix_mass[k]  # run {0..k}
        mass_high = ladder.prefix_mass[k + 1]  # run {0..k+1}
    else:
        side = "above"
        k = j - n
        mass_low = ladder.suffix_mass[k]  # run {k..n}
        mass_high = ladder.suffix_mass[k + 1]  # run {k+1..n}

    if x >= 1.0:
        # exactly on the lower rung: thermal over its run, boundary filled
        if side == "below":
            u = (0, k - 1) if k >= 1 else None
            m_star = k
            log_u = ladder.prefix_mass[k - 1] if k >= 1 else -math.inf
        else:
            u = (k + 1, n) if k + 1 <= n else None
            m_star = k
            log_u = ladder.suffix_mass[k + 1] if k + 1 <= n else -math.inf
        s = 1.0
        log_q = -mass_low
        log_support = mass_low
    elif x <= 0.0:
        # exactly on the upper rung (only reachable at p = 1)
        if side == "below":
            u = (0, k) if k >= 0 else None
            m_star = k + 1
            log_u = ladder.prefix_mass[k]
        else:
            u = (k + 2, n) if k + 2 <= n else None
            m_star = k + 1
            log_u = ladder.suffix_mass[k + 2] if k + 2 <= n else -math.inf
        s = 1.0
        log_q = -mass_high
        log_support = mass_high
    else:
        log_q = _logaddexp(math.log(x) - mass_low, math.log1p(-x) - mass_high)
        if side == "below":
            u = (0, k)
            m_star = k + 1
            log_u = mass_low
            log_boundary = math.log1p(-x) - mass_high
        else:
            u = (k + 1, n)
            m_star = k
            log_u = mass_high
            log_boundary = math.log(x) - mass_low
        s = math.exp(log_boundary - log_q)
        log_support = _logaddexp(log_u, ladder.log_g[m_star])

    log_g_star = float(ladder.log_g[m_star])
    formation = log_q
    extraction = -log_support
    # relative entropy of the joint state against the composite thermal state:
    # the populated run carries mass q*mass(U) at log-ratio log q, the
    # boundary s*q*g at log-ratio log(s q)
    p_run = math.exp(log_q + log_u) if log_u != -math.inf else 0.0
    p_boundary = s * math.exp(log_q + log_g_star)
    delta_f = p_run * log_q
    if p_boundary > 0.0 and s > 0.0:
        delta_f += p_boundary * (math.log(s) + log_q)
    works = WorkBudget(
        formation=formation,
        extraction=extraction,
        irreversible=formation - extraction,
        delta_f=delta_f,
    )
    return QubitOptimum(
        p=float(p),
        n=n,
        beta_e0=beta_e0,
        side=side,
        u_range=u,
        m_star=int(m_star),
        s=float(s),
        log_q_value=float(log_q),
        log_support_mass=float(log_support),
        log_u_mass=float(log_u),
        log_g_star=log_g_star,
        works=works,
        segment=j,
        mix=x,
    )


def quasi_thermal_interval(
    n: int, beta_e0: float, ladder: RStarLadder | None = None
) -> tuple[float, float]:
    """The two rungs bracketing the thermal point.

    Inside the closed interval the n-copy correlated formation work equals
    the single-copy work of formation (total, not per copy).
    """
    if ladder is None:
        ladder = rstar_ladder(n, beta_e0)
    return float(ladder.p_values[ladder.n - 1]), float(ladder.p_values[ladder.n + 1])


@dataclass(frozen=True)
class SpacingStats:
    minimum: float
    median: float
    maximum: float
    count: int


def rstar_spacing_stats(
    n: int, beta_e0: float, tail_cut: float, ladder: RStarLadder | None = None
) -> SpacingStats:
    """Scaled rung spacings n * (p*_{k+1} - p*_k) away from the thermal bulk.

    A rung survives the cut when its distance to the thermal point exceeds
    ``tail_cut`` standard-deviation units, |n (p* - p_beta)| >= tail_cut *
    sqrt(n); a spacing is counted when both endpoints survive.  In the tails
    the scaled spacing approaches one as n grows.
    """
    if ladder is None:
        ladder = rstar_ladder(n, beta_e0)
    values = ladder.p_values
    keep = np.abs(n * (values - ladder.p_beta)) >= tail_cut * math.sqrt(n)
    spacings = [
        n * (values[j + 1] - values[j])
        for j in range(values.size - 1)
        if keep[j] and keep[j + 1]
    ]
    if not spacings:
        raise InvalidStateError("no rungs survive the tail cut")
    arr = np.array(spacings)
    return SpacingStats(
        minimum=float(arr.min()),
        median=float(np.median(arr)),
        maximum=float(arr.max()),
        count=int(arr.size),
    )
