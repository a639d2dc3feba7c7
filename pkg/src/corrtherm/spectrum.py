"""Energy spectra of composite systems and their thermal weights.

All energies are dimensionless (energy times inverse temperature), so the
Boltzmann factor of a level ``E`` is ``exp(-E)``.  Degeneracies are kept in
log domain throughout; composite systems with tens of thousands of levels
stay representable without overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import InvalidStateError, SpectrumCapError

DEFAULT_LEVEL_CAP = 2**22

__all__ = [
    "LocalSystem",
    "DiagonalState",
    "SpectrumN",
    "GibbsWeights",
    "qubit_system",
    "thermal_state",
    "build_spectrum",
    "gibbs_weights",
    "degeneracy_shifted",
    "marginal_distribution",
    "DEFAULT_LEVEL_CAP",
]


@dataclass(frozen=True)
class LocalSystem:
    """A single subsystem: its energy levels in dimensionless units.

    ``quantum`` declares that every level is an integer multiple of one
    lattice step.  It is never inferred from the data; a wrong declaration
    would silently corrupt degeneracy merging downstream.
    """

    levels: tuple[float, ...]
    quantum: float | None = None

    def __post_init__(self):
        levels = tuple(float(e) for e in self.levels)
        object.__setattr__(self, "levels", levels)
        if len(levels) < 1:
            raise InvalidStateError("a system needs at least one level")
        if not all(math.isfinite(e) for e in levels):
            raise InvalidStateError("levels must be finite")
        if any(b < a for a, b in zip(levels, levels[1:])):
            raise InvalidStateError("levels must be sorted ascending")
        if self.quantum is not None:
            if self.quantum <= 0:
                raise InvalidStateError("lattice step must be positive")
            for e in levels:
                ratio = e / self.quantum
                if abs(ratio - round(ratio)) > 1e-9:
                    raise InvalidStateError(
                        f"level {e} is not a multiple of the declared step {self.quantum}"
                    )

    @property
    def dim(self) -> int:
        return len(self.levels)

    @property
    def log_partition(self) -> float:
        """log of the single-system partition function."""
        return float(logsumexp([-e for e in self.levels]))


@dataclass(frozen=True)
class DiagonalState:
    """Occupation probabilities of a diagonal state, aligned with a system's levels."""

    probs: tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        if any(p < 0 for p in probs):
            raise InvalidStateError("probabilities must be nonnegative")
        total = math.fsum(probs)
        if abs(total - 1.0) > 1e-12:
            raise InvalidStateError(f"probabilities sum to {total!r}, not 1")

    @property
    def dim(self) -> int:
        return len(self.probs)


def qubit_system(beta_e0: float) -> LocalSystem:
    """Two-level system with ground energy 0 and gap ``beta_e0``."""
    if beta_e0 < 0:
        raise InvalidStateError("gap must be nonnegative")
    return LocalSystem((0.0, float(beta_e0)), quantum=beta_e0 if beta_e0 > 0 else None)


def qubit_state(p_excited: float) -> DiagonalState:
    return DiagonalState((1.0 - p_excited, p_excited))


def thermal_state(sys: LocalSystem) -> DiagonalState:
    logz = sys.log_partition
    return DiagonalState(tuple(math.exp(-e - logz) for e in sys.levels))


@dataclass(frozen=True)
class SpectrumN:
    """Distinct energy levels of ``n_copies`` subsystems with log-degeneracies.

    Energies are strictly increasing after coalescing; the log-degeneracies
    sum (in linear domain) to ``D**n``.
    """

    energies: np.ndarray
    log_degeneracies: np.ndarray
    n_copies: int
    coalesce_tol: float
    local_dim: int = field(default=0)

    def __post_init__(self):
        energies = np.asarray(self.energies, dtype=float)
        logdeg = np.asarray(self.log_degeneracies, dtype=float)
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "log_degeneracies", logdeg)
        if energies.shape != logdeg.shape or energies.ndim != 1:
            raise InvalidStateError("spectrum arrays must be 1-d and aligned")
        if np.any(np.diff(energies) <= 0):
            raise InvalidStateError("spectrum energies must be strictly increasing")
        if np.any(logdeg < -1e-12):
            raise InvalidStateError("log-degeneracies must be nonnegative")
        if self.local_dim:
            total = logsumexp(logdeg)
            expected = self.n_copies * math.log(self.local_dim)
            if abs(total - expected) > 1e-9:
                raise InvalidStateError(
                    f"degeneracies sum to exp({total}), expected exp({expected})"
                )

    @property
    def size(self) -> int:
        return int(self.energies.size)

    def entries(self):
        """Iterate (energy, log_degeneracy) pairs."""
        return zip(self.energies.tolist(), self.log_degeneracies.tolist())


@dataclass(frozen=True)
class GibbsWeights:
    """Normalized log thermal weights of a composite spectrum.

    ``log_weights[j] = log g(E_j) - E_j - n * log Z`` and sums to one in
    linear domain.
    """

    log_weights: np.ndarray
    log_z_local: float
    n_copies: int

    def __post_init__(self):
        lw = np.asarray(self.log_weights, dtype=float)
        object.__setattr__(self, "log_weights", lw)
        if abs(logsumexp(lw)) > 1e-9:
            raise InvalidStateError("thermal weights are not normalized")

    @property
    def size(self) -> int:
        return int(self.log_weights.size)


def _coalesce(energies: np.ndarray, logdeg: np.ndarray, tol: float):
    """Merge levels whose energies agree within ``tol`` (absolute).

    Groups are anchored at their first (smallest) member so repeated merging
    cannot drift; the anchor energy represents the group.
    """
    order = np.argsort(energies, kind="stable")
    energies = energies[order]
    logdeg = logdeg[order]
    out_e: list[float] = []
    out_d: list[float] = []
    anchor = None
    for e, ld in zip(energies, logdeg):
        if anchor is not None and e - anchor <= tol:
            out_d[-1] = np.logaddexp(out_d[-1], ld)
        else:
            anchor = e
            out_e.append(e)
            out_d.append(ld)
    return np.array(out_e), np.array(out_d)


def _log_binomial(n: int, m: np.ndarray) -> np.ndarray:
    return gammaln(n + 1) - gammaln(m + 1) - gammaln(n - m + 1)


def default_coalesce_tol(sys: LocalSystem) -> float:
    return 1e-9 * max(abs(e) for e in sys.levels)


def build_spectrum(
    sys: LocalSystem,
    n: int,
    coalesce_tol: float | None = None,
    cap: int = DEFAULT_LEVEL_CAP,
) -> SpectrumN:
    """All distinct n-fold level sums of ``sys`` with log-degeneracies.

    Two-level lattice systems take a closed binomial form; everything else
    goes through iterated convolution with coalescing.  Raises
    :class:`SpectrumCapError` when the number of distinct levels would pass
    ``cap``.
    """
    if n < 1:
        raise InvalidStateError("need at least one copy")
    if coalesce_tol is None:
        coalesce_tol = default_coalesce_tol(sys)
    if coalesce_tol < 0:
        raise InvalidStateError("coalescing tolerance must be nonnegative")

    if sys.dim == 2 and sys.quantum is not None and sys.levels[1] > sys.levels[0]:
        m = np.arange(n + 1, dtype=float)
        energies = n * sys.levels[0] + m * (sys.levels[1] - sys.levels[0])
        logdeg = _log_binomial(n, m)
        if energies.size > cap:
            raise SpectrumCapError(f"{energies.size} levels exceed cap {cap}")
        return SpectrumN(energies, logdeg, n, coalesce_tol, sys.dim)

    local = np.array(sorted(sys.levels), dtype=float)
    energies, logdeg = _coalesce(local, np.zeros(sys.dim), coalesce_tol)
    for _ in range(n - 1):
        summed = energies[:, None] + local[None, :]
        spread = np.broadcast_to(logdeg[:, None], summed.shape)
        energies, logdeg = _coalesce(summed.ravel(), spread.ravel().copy(), coalesce_tol)
        if energies.size > cap:
            raise SpectrumCapError(f"{energies.size} levels exceed cap {cap}")
    return SpectrumN(energies, logdeg, n, coalesce_tol, sys.dim)


def zero_copy_spectrum() -> SpectrumN:
    """Spectrum of an empty tensor product: one level at zero energy."""
    return SpectrumN(np.array([0.0]), np.array([0.0]), 0, 0.0, 0)


def gibbs_weights(spec: SpectrumN, sys: LocalSystem) -> GibbsWeights:
    """Normalized log weights of the composite thermal state on ``spec``."""
    logz = sys.log_partition
    lw = spec.log_degeneracies - spec.energies - spec.n_copies * logz
    return GibbsWeights(lw, logz, spec.n_copies)


def local_gibbs(sys: LocalSystem) -> GibbsWeights:
    """Per-level thermal weights of a single system (levels kept distinct)."""
    logz = sys.log_partition
    lw = np.array([-e - logz for e in sys.levels])
    return GibbsWeights(lw, logz, 1)


def _match_tolerance(spec: SpectrumN, scale: float) -> float:
    # floor at accumulated-rounding scale; must stay far below any physical
    # level spacing (gaps as small as 1e-12 are legitimate inputs)
    eps = np.finfo(float).eps
    return max(spec.coalesce_tol, 32.0 * eps * max(1.0, abs(scale)))


def degeneracy_shifted(spec: SpectrumN, energy: float, local_energy: float) -> float:
    """log degeneracy of ``energy - local_energy`` in ``spec``.

    Returns ``-inf`` when the shifted energy is not a level of the spectrum
    (no match within the coalescing tolerance).
    """
    target = energy - local_energy
    tol = _match_tolerance(spec, target)
    idx = np.searchsorted(spec.energies, target)
    for j in (idx - 1, idx):
        if 0 <= j < spec.size and abs(spec.energies[j] - target) <= tol:
            return float(spec.log_degeneracies[j])
    return -math.inf


def marginal_distribution(
    occupations: np.ndarray,
    sys: LocalSystem,
    n: int,
    spec: SpectrumN | None = None,
    spec_minor: SpectrumN | None = None,
) -> np.ndarray:
    """Single-subsystem marginal of level occupations on the n-copy spectrum.

    ``occupations[j]`` is the total probability of spectrum level ``j``,
    spread uniformly over its degenerate states.
    """
    if spec is None:
        spec = build_spectrum(sys, n)
    if spec_minor is None:
        spec_minor = build_spectrum(sys, n - 1) if n > 1 else zero_copy_spectrum()
    occupations = np.asarray(occupations, dtype=float)
    if occupations.shape != spec.energies.shape:
        raise InvalidStateError("occupations do not match the spectrum")
    out = np.zeros(sys.dim)
    for d, e_d in enumerate(sys.levels):
        acc = 0.0
        for j in range(spec.size):
            if occupations[j] <= 0.0:
                continue
            shifted = degeneracy_shifted(spec_minor, spec.energies[j], e_d)
            if shifted == -math.inf:
                continue
            # conditional probability that one copy sits at level d given
            # total energy E_j, times the level occupation
            acc += occupations[j] * math.exp(shifted - spec.log_degeneracies[j])
        out[d] = acc
    return out
