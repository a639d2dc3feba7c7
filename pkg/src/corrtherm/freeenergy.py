"""Divergences, deterministic work budgets, and correlation accounting.

Works are in units of kT, entropies and divergences in nats.  The key
identities used throughout: for a diagonal state the deterministic work of
formation is the order-infinity divergence from the thermal state, the
extractable work is the order-zero divergence, and the nonequilibrium free
energy difference is the order-one (relative entropy) divergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import ConstraintViolationError, InvalidStateError
from .spectrum import (
    DiagonalState,
    GibbsWeights,
    LocalSystem,
    SpectrumN,
    build_spectrum,
    local_gibbs,
    marginal_distribution,
    zero_copy_spectrum,
)

__all__ = [
    "WorkBudget",
    "CorrelationReport",
    "shannon_entropy",
    "renyi_divergence",
    "work_budget_single",
    "delta_f_local",
    "mutual_information",
    "average_work",
]

# budgets combine independently rounded divergences; allow their noise to stack
_SLACK = 1e-8


@dataclass(frozen=True)
class WorkBudget:
    """Formation / extraction / irreversible work and free-energy difference
    of one diagonal state, all in kT.

    The three divergence orders are monotone, so extraction <= delta_f <=
    formation and the irreversible part is nonnegative.
    """

    formation: float
    extraction: float
    irreversible: float
    delta_f: float

    def __post_init__(self):
        if self.extraction > self.formation + _SLACK:
            raise InvalidStateError("extraction exceeds formation")
        if self.delta_f > self.formation + _SLACK:
            raise InvalidStateError("free-energy difference exceeds formation")
        if abs(self.irreversible - (self.formation - self.extraction)) > _SLACK:
            raise InvalidStateError("irreversible work must be formation - extraction")


@dataclass(frozen=True)
class CorrelationReport:
    """Total correlations of a joint state against the per-copy dissipation cap."""

    mutual_information: float
    per_copy: float
    dissipated_work: float
    bound_satisfied: bool

    def __post_init__(self):
        if self.mutual_information < -1e-9:
            raise InvalidStateError("mutual information must be nonnegative")


def shannon_entropy(probs) -> float:
    """Entropy in nats with the 0 log 0 = 0 convention."""
    p = np.asarray(probs, dtype=float)
    mask = p > 0
    return float(-np.sum(p[mask] * np.log(p[mask])))


def binary_entropy(p: float) -> float:
    return shannon_entropy([p, 1.0 - p])


def renyi_divergence(probs, reference: GibbsWeights, alpha: float) -> float:
    """Divergence of order ``alpha`` between level occupations and thermal weights.

    Both arguments are per-level aggregates over the same level set; states
    spread uniformly within a degenerate level contribute exactly as their
    level totals, so the degeneracies cancel and never appear here.  The
    order-one case is a dedicated relative-entropy branch (no numeric limit),
    order zero is the negative log reference mass on the support, order
    infinity the log of the largest occupation ratio.  Returns ``inf`` when
    ``alpha >= 1`` and the state puts mass outside the reference support.
    """
    p = np.asarray(probs, dtype=float)
    lw = reference.log_weights
    if p.shape != lw.shape:
        raise InvalidStateError("state and reference cover different level sets")
    if np.any(p < -1e-15):
        raise InvalidStateError("occupations must be nonnegative")
    if alpha < 0:
        raise InvalidStateError("alpha must be nonnegative")

    support = p > 0
    if not np.any(support):
        raise InvalidStateError("state has empty support")
    with np.errstate(divide="ignore"):
        logp = np.where(support, np.log(np.where(support, p, 1.0)), -np.inf)

    if alpha == 0:
        return float(-logsumexp(lw[support]))
    if np.any(support & np.isneginf(lw)) and alpha >= 1:
        return math.inf
    if alpha == 1:
        return float(np.sum(p[support] * (logp[support] - lw[support])))
    if math.isinf(alpha):
        return float(np.max(logp[support] - lw[support]))
    terms = alpha * logp[support] + (1.0 - alpha) * lw[support]
    return float(logsumexp(terms) / (alpha - 1.0))


def delta_f_local(state: DiagonalState, sys: LocalSystem) -> float:
    """Free-energy difference to the thermal state, in kT."""
    mean_energy = math.fsum(p * e for p, e in zip(state.probs, sys.levels))
    return mean_energy - shannon_entropy(state.probs) + sys.log_partition


def work_budget_single(state: DiagonalState, sys: LocalSystem) -> WorkBudget:
    """Deterministic work budget of a single copy of ``state``."""
    if state.dim != sys.dim:
        raise InvalidStateError("state and system dimensions differ")
    ref = local_gibbs(sys)
    formation = renyi_divergence(state.probs, ref, math.inf)
    extraction = renyi_divergence(state.probs, ref, 0.0)
    return WorkBudget(
        formation=formation,
        extraction=extraction,
        irreversible=formation - extraction,
        delta_f=delta_f_local(state, sys),
    )


def joint_entropy(occupations, spec: SpectrumN) -> float:
    """Entropy of a joint state given per-level occupations spread uniformly
    over each level's degenerate states."""
    p = np.asarray(occupations, dtype=float)
    mask = p > 0
    return float(-np.sum(p[mask] * (np.log(p[mask]) - spec.log_degeneracies[mask])))


def _check_marginals(occupations, local, sys, n, spec, spec_minor, tol):
    marg = marginal_distribution(occupations, sys, n, spec, spec_minor)
    err = float(np.max(np.abs(marg - np.asarray(local.probs))))
    if err > tol:
        raise ConstraintViolationError(
            f"joint occupations miss the target marginal by {err:.3e}"
        )


def mutual_information(
    occupations,
    local: DiagonalState,
    sys: LocalSystem,
    n: int,
    spec: SpectrumN | None = None,
    marginal_tol: float = 1e-9,
) -> CorrelationReport:
    """Total correlations of a joint state with equal marginals ``local``.

    ``occupations`` are level totals on the n-copy spectrum.  The mutual
    information is n S(local) - S(joint); the report compares its per-copy
    share against the single-copy dissipated work, which caps the amount of
    correlations that a collective formation process can put to use.
    """
    if spec is None:
        spec = build_spectrum(sys, n)
    spec_minor = build_spectrum(sys, n - 1) if n > 1 else zero_copy_spectrum()
    _check_marginals(occupations, local, sys, n, spec, spec_minor, marginal_tol)

    info = n * shannon_entropy(local.probs) - joint_entropy(occupations, spec)
    if info < -1e-9:
        raise InvalidStateError(f"mutual information came out negative: {info}")
    info = max(info, 0.0)
    budget = work_budget_single(local, sys)
    dissipated = budget.formation - budget.delta_f
    per_copy = info / n
    return CorrelationReport(
        mutual_information=info,
        per_copy=per_copy,
        dissipated_work=dissipated,
        bound_satisfied=per_copy <= dissipated + 1e-12,
    )


def average_work(
    occupations,
    local: DiagonalState,
    sys: LocalSystem,
    n: int,
    spec: SpectrumN | None = None,
) -> float:
    """Average work cost of creating the joint state when work may fluctuate.

    Equals n times the local free-energy difference plus the total
    correlations, which is the free-energy difference of the joint state
    itself.
    """
    report = mutual_information(occupations, local, sys, n, spec)
    return n * delta_f_local(local, sys) + report.mutual_information
