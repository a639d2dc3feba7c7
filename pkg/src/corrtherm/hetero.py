"""Correlated formation for non-identical subsystems.

The joint problem for a mixed collection of subsystems reduces, after
symmetrizing within each class of identical members, to the same
minimum-ratio program as the identical-copies case: one variable per tuple
of per-class level compositions, one marginal row per (class, level).
Grouping is by composition rather than by raw thermal weight because two
compositions with equal energy can still touch different members'
marginals; merging them would change the feasible set.

The convergence experiment draws i.i.d. subsystems from a distribution,
solves the joint problem exactly when the dimension allows it, or sums
per-class correlated works (a feasible, hence upper-bounding, strategy) at
scale, and compares the per-copy work against the distribution mean of the
free-energy difference.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DimensionCapError, InfeasibleError, InvalidStateError
from .freeenergy import WorkBudget, binary_entropy, delta_f_local
from .lpsolver import ConstraintSystem, LpSolution, min_infnorm
from .qubit import analytic_cwork
from .spectrum import DiagonalState, LocalSystem

DEFAULT_DIM_CAP = 2**20
DIM_CAP_ENV = "CORRTHERM_DIM_CAP"

__all__ = [
    "Ensemble",
    "EnsembleClass",
    "ClassDecomposition",
    "Atom",
    "DistributionSpec",
    "SigmaState",
    "Theorem3Result",
    "decompose",
    "build_joint_constraints",
    "ensemble_cwork",
    "sigma_d_states",
    "sample_ensemble",
    "mean_delta_f",
    "theorem3_experiment",
    "resolve_dim_cap",
]


def resolve_dim_cap(dim_cap: int | None = None) -> int:
    if dim_cap is not None:
        return dim_cap
    env = os.environ.get(DIM_CAP_ENV)
    return int(env) if env else DEFAULT_DIM_CAP


@dataclass(frozen=True)
class Ensemble:
    """A finite collection of (system, state) members, optionally seeded."""

    members: tuple[tuple[LocalSystem, DiagonalState], ...]
    seed: int | None = None

    def __post_init__(self):
        if not self.members:
            raise InvalidStateError("ensemble must be nonempty")
        for sys, state in self.members:
            if sys.dim != state.dim:
                raise InvalidStateError("member state and system dimensions differ")

    @property
    def size(self) -> int:
        return len(self.members)

    def joint_dimension(self) -> int:
        dim = 1
        for sys, _ in self.members:
            dim *= sys.dim
        return dim


@dataclass(frozen=True)
class EnsembleClass:
    system: LocalSystem
    state: DiagonalState
    count: int


@dataclass(frozen=True)
class ClassDecomposition:
    classes: tuple[EnsembleClass, ...]
    match_tol: float = 1e-12

    @property
    def total(self) -> int:
        return sum(c.count for c in self.classes)


def _same_member(a_sys, a_state, b_sys, b_state, tol) -> bool:
    if a_sys.dim != b_sys.dim:
        return False
    return all(
        abs(x - y) <= tol for x, y in zip(a_sys.levels, b_sys.levels)
    ) and all(abs(x - y) <= tol for x, y in zip(a_state.probs, b_state.probs))


def decompose(ens: Ensemble, match_tol: float = 1e-12) -> ClassDecomposition:
    """Group members into classes of identical (system, state) pairs."""
    reps: list[list] = []
    for sys, state in ens.members:
        for rep in reps:
            if _same_member(sys, state, rep[0], rep[1], match_tol):
                rep[2] += 1
                break
        else:
            reps.append([sys, state, 1])
    classes = tuple(EnsembleClass(s, st, c) for s, st, c in reps)
    return ClassDecomposition(classes, match_tol)


def _compositions(total: int, bins: int):
    """All ways to place ``total`` identical items into ``bins`` slots."""
    if bins == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, bins - 1):
            yield (first,) + rest


def _log_multinomial(n: int, counts) -> float:
    return float(gammaln(n + 1) - sum(gammaln(c + 1) for c in counts))


def build_joint_constraints(
    ens: Ensemble, dim_cap: int | None = None
) -> ConstraintSystem:
    """Marginal constraint system of an arbitrary ensemble.

    Columns are tuples of per-class level compositions (the orbits of the
    within-class permutation symmetry); rows are one per (class, level).
    Raises :class:`DimensionCapError` when the raw joint dimension exceeds
    the cap.
    """
    cap = resolve_dim_cap(dim_cap)
    dim = ens.joint_dimension()
    if dim > cap:
        raise DimensionCapError(
            f"joint dimension {dim} exceeds the cap {cap}; "
            "use the class-grouped path"
        )
    classes = decompose(ens).classes
    log_z_total = sum(c.count * c.system.log_partition for c in classes)

    per_class = [list(_compositions(c.count, c.system.dim)) for c in classes]
    columns = []
    for combo in itertools.product(*per_class):
        energy = 0.0
        log_mult = 0.0
        for cls, counts in zip(classes, combo):
            energy += sum(k * e for k, e in zip(counts, cls.system.levels))
            log_mult += _log_multinomial(cls.count, counts)
        columns.append((energy, combo, log_mult))
    columns.sort(key=lambda item: (item[0], item[1]))

    m = len(columns)
    energies = np.array([c[0] for c in columns])
    log_scale = np.array([c[2] - c[0] - log_z_total for c in columns])
    rows = sum(c.system.dim for c in classes)
    coeff = np.zeros((rows, m))
    rhs = np.zeros(rows)
    row = 0
    for ci, cls in enumerate(classes):
        for d in range(cls.system.dim):
            for j, (_, combo, _) in enumerate(columns):
                coeff[row, j] = combo[ci][d] / cls.count
            rhs[row] = cls.state.probs[d]
            row += 1
    return ConstraintSystem(
        coeff=coeff,
        log_col_scale=log_scale,
        rhs=rhs,
        column_energies=energies,
        n_blocks=len(classes),
        block_rows=tuple(c.system.dim for c in classes),
    )


def ensemble_cwork(
    ens: Ensemble, mode: str = "float", dim_cap: int | None = None
) -> tuple[LpSolution, WorkBudget, np.ndarray]:
    """Exact correlated work of formation of an arbitrary ensemble."""
    cs = build_joint_constraints(ens, dim_cap)
    sol = min_infnorm(cs, mode)
    if not sol.optimal:
        raise InfeasibleError("ensemble constraints admit no joint state")
    if sol.exact is not None:
        populated = np.array([x > 0 for x in sol.exact.q])
    else:
        populated = sol.q > 1e-12 * max(sol.value, 1e-300)
    log_mass = float(logsumexp(cs.log_col_scale[populated]))
    formation = sol.log_value
    extraction = -log_mass

    classes = decompose(ens).classes
    log_z_total = sum(c.count * c.system.log_partition for c in classes)
    occ = sol.occupations
    log_mult = cs.log_col_scale + cs.column_energies + log_z_total
    mask = occ > 0
    entropy = float(-np.sum(occ[mask] * (np.log(occ[mask]) - log_mult[mask])))
    delta_f = float(np.dot(occ, cs.column_energies)) - entropy + log_z_total
    budget = WorkBudget(
        formation=formation,
        extraction=extraction,
        irreversible=formation - extraction,
        delta_f=delta_f,
    )
    return sol, budget, occ


@dataclass(frozen=True)
class SigmaState:
    """A permutation-symmetric single-energy joint state.

    Uniform over all arrangements of fixed per-level counts, hence thermal
    on one energy level and reversible by construction.
    """

    counts: tuple[int, ...]
    energy: float
    log_degeneracy: float
    marginal: DiagonalState
    works: WorkBudget


def sigma_d_states(ens: Ensemble, local: DiagonalState) -> list[SigmaState]:
    """The D floor-count symmetric states approximating ``local`` marginals.

    For variant d, every level i != d receives floor(p_i N) members and
    level d absorbs the remainder.  When all p_i N are integers the variants
    coincide and reproduce ``local`` exactly.
    """
    classes = decompose(ens).classes
    if len(classes) != 1:
        raise InvalidStateError("sigma states require identical members")
    sys = classes[0].system
    n = classes[0].count
    if local.dim != sys.dim:
        raise InvalidStateError("target state does not match the member system")
    d_dim = sys.dim
    out = []
    for d in range(d_dim):
        counts = [0] * d_dim
        for i in range(d_dim):
            if i != d:
                counts[i] = math.floor(local.probs[i] * n)
        counts[d] = n - sum(counts)
        if counts[d] < 0:
            raise InvalidStateError("floor counts exceeded the member total")
        energy = sum(k * e for k, e in zip(counts, sys.levels))
        log_c = _log_multinomial(n, counts)
        formation = energy + n * sys.log_partition - log_c
        works = WorkBudget(
            formation=formation,
            extraction=formation,
            irreversible=0.0,
            delta_f=formation,
        )
        out.append(
            SigmaState(
                counts=tuple(counts),
                energy=energy,
                log_degeneracy=log_c,
                marginal=DiagonalState(tuple(k / n for k in counts)),
                works=works,
            )
        )
    return out


# --------------------------------------------------------------------------
# sampled ensembles


@dataclass(frozen=True)
class Atom:
    """One (state, system) point of a discrete distribution."""

    weight: float
    probs: tuple[float, ...]
    levels: tuple[float, ...]

    def __post_init__(self):
        if self.weight < 0:
            raise InvalidStateError("atom weights must be nonnegative")
        DiagonalState(self.probs)
        LocalSystem(self.levels)

    @property
    def system(self) -> LocalSystem:
        return LocalSystem(self.levels)

    @property
    def state(self) -> DiagonalState:
        return DiagonalState(self.probs)


@dataclass(frozen=True)
class DistributionSpec:
    """Distribution over (state, system) pairs feeding the experiment.

    Kinds: ``point-mass`` (one atom), ``finite-discrete`` (weighted atoms),
    ``product-uniform-box`` (two-level systems with excitation probability
    and gap drawn uniformly from a box, keeping the energy support bounded).
    """

    kind: str
    atoms: tuple[Atom, ...] = ()
    box: tuple[tuple[float, float], tuple[float, float]] | None = None

    def __post_init__(self):
        if self.kind == "point-mass":
            if len(self.atoms) != 1:
                raise InvalidStateError("point-mass takes exactly one atom")
            if abs(self.atoms[0].weight - 1.0) > 1e-12:
                raise InvalidStateError("point-mass atom must carry weight one")
        elif self.kind == "finite-discrete":
            if not self.atoms:
                raise InvalidStateError("finite-discrete needs atoms")
            total = math.fsum(a.weight for a in self.atoms)
            if abs(total - 1.0) > 1e-12:
                raise InvalidStateError("atom weights must sum to one")
        elif self.kind == "product-uniform-box":
            if self.box is None:
                raise InvalidStateError("box bounds are required")
            (p_lo, p_hi), (e_lo, e_hi) = self.box
            if not (0.0 <= p_lo <= p_hi <= 1.0):
                raise InvalidStateError("probability bounds must be ordered in [0, 1]")
            if not (math.isfinite(e_lo) and math.isfinite(e_hi) and 0.0 <= e_lo <= e_hi):
                raise InvalidStateError("energy bounds must be ordered, finite, nonnegative")
        else:
            raise InvalidStateError(f"unknown distribution kind {self.kind!r}")


def sample_ensemble(spec: DistributionSpec, n: int, seed: int) -> Ensemble:
    """Draw ``n`` i.i.d. members; identical output for identical seeds."""
    if n < 1:
        raise InvalidStateError("need at least one member")
    rng = np.random.default_rng(seed)
    if spec.kind == "point-mass":
        atom = spec.atoms[0]
        members = tuple((atom.system, atom.state) for _ in range(n))
    elif spec.kind == "finite-discrete":
        weights = np.array([a.weight for a in spec.atoms])
        idx = rng.choice(len(spec.atoms), size=n, p=weights / weights.sum())
        members = tuple((spec.atoms[i].system, spec.atoms[i].state) for i in idx)
    else:
        (p_lo, p_hi), (e_lo, e_hi) = spec.box
        ps = rng.uniform(p_lo, p_hi, size=n)
        es = rng.uniform(e_lo, e_hi, size=n)
        members = tuple(
            (
                LocalSystem((0.0, float(e)), quantum=float(e) if e > 0 else None),
                DiagonalState((1.0 - float(p), float(p))),
            )
            for p, e in zip(ps, es)
        )
    return Ensemble(members, seed=seed)


def _qubit_delta_f(p: float, e0: float) -> float:
    return p * e0 - binary_entropy(p) + math.log1p(math.exp(-e0))


def mean_delta_f(spec: DistributionSpec, quad_points: int = 64) -> float:
    """Distribution average of the free-energy difference, kT units.

    Closed form for discrete kinds; fixed tensor Gauss-Legendre quadrature
    over the box otherwise (the integrand is smooth).
    """
    if spec.kind in ("point-mass", "finite-discrete"):
        return math.fsum(
            a.weight * delta_f_local(a.state, a.system) for a in spec.atoms
        )
    (p_lo, p_hi), (e_lo, e_hi) = spec.box
    nodes, weights = np.polynomial.legendre.leggauss(quad_points)
    ps = 0.5 * (p_hi - p_lo) * nodes + 0.5 * (p_hi + p_lo)
    es = 0.5 * (e_hi - e_lo) * nodes + 0.5 * (e_hi + e_lo)
    total = 0.0
    for wp, p in zip(weights, ps):
        for we, e in zip(weights, es):
            total += wp * we * _qubit_delta_f(float(p), float(e))
    # normalize the quadrature to a probability average over the box
    return total / 4.0


@dataclass(frozen=True)
class Theorem3Result:
    """One convergence-experiment record."""

    work_per_copy: float
    mean_delta_f: float
    gap: float
    mode: str
    n: int
    seed: int
    class_counts: tuple[int, ...]


def _class_cwork(cls: EnsembleClass, dim_cap: int | None) -> float:
    if cls.system.dim == 2:
        gap = cls.system.levels[1] - cls.system.levels[0]
        return analytic_cwork(cls.state.probs[1], cls.count, gap).works.formation
    sub = Ensemble(tuple((cls.system, cls.state) for _ in range(cls.count)))
    _, budget, _ = ensemble_cwork(sub, dim_cap=dim_cap)
    return budget.formation


def theorem3_experiment(
    spec: DistributionSpec,
    n: int,
    seed: int,
    mode: str = "class-grouped",
    dim_cap: int | None = None,
) -> Theorem3Result:
    """Per-copy correlated formation work of an i.i.d. sample vs its mean
    free-energy difference.

    ``exact`` solves the joint program (dimension-capped); ``class-grouped``
    sums the per-class correlated works, which corresponds to correlating
    identical members only and therefore upper-bounds the joint optimum.
    """
    if mode not in ("exact", "class-grouped"):
        raise InvalidStateError(f"unknown mode {mode!r}")
    if mode == "class-grouped" and spec.kind == "product-uniform-box":
        raise InvalidStateError(
            "class-grouped mode needs a discrete spec; box samples are all distinct"
        )
    ens = sample_ensemble(spec, n, seed)
    classes = decompose(ens).classes
    if mode == "exact":
        _, budget, _ = ensemble_cwork(ens, dim_cap=dim_cap)
        work = budget.formation
    else:
        work = math.fsum(_class_cwork(c, dim_cap) for c in classes)
    per_copy = work / n
    mean_df = mean_delta_f(spec)
    return Theorem3Result(
        work_per_copy=per_copy,
        mean_delta_f=mean_df,
        gap=per_copy - mean_df,
        mode=mode,
        n=n,
        seed=seed,
        class_counts=tuple(c.count for c in classes),
    )
