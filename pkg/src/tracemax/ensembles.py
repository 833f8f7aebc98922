"""Finitely-supported PSD matrix ensembles under norm constraints.

An ensemble is a random PSD matrix taking finitely many values (atoms)
with given probabilities, subject to a hard cap ||X|| <= L and an exact
mean-norm constraint ||E X|| = alpha * L. A family is a tuple of
independent ensembles sharing a dimension; expectations over a family are
taken over the finite product support, so small cases are computed exactly
and only larger cases fall back to Monte Carlo.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    BudgetExceeded,
    ConstraintViolated,
    DimensionError,
    InvalidExponent,
    SamplerFailed,
)
from .extremal import MOMENT_BUDGET, BernoulliParams
from .linalg import SymMatrix, batched_trace_power, random_spectral
from .rng import stream, subseed

PROB_TOL = 1e-12
CAP_SLACK = 1e-9
MEAN_REL_TOL = 1e-8
SUPPORT_BUDGET = 10**6

_PROJECTION_ROUNDS = 50
_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class FiniteEnsemble:
    """One random PSD matrix with finite support.

    ``cap`` is the operator-norm bound L every atom must respect;
    ``alpha`` is the target mean-norm fraction, so ||E X|| = alpha * cap.
    Constraints are verified at construction, making instances witnesses
    of admissibility.
    """

    atoms: tuple[SymMatrix, ...]
    probs: tuple[float, ...]
    cap: float
    alpha: float

    def __post_init__(self):
        atoms = tuple(self.atoms)
        probs = tuple(float(q) for q in self.probs)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)
        if not atoms:
            raise DimensionError("ensemble needs at least one atom")
        if len(atoms) != len(probs):
            raise DimensionError(
                f"{len(atoms)} atoms but {len(probs)} probabilities"
            )
        dims = {a.dim for a in atoms}
        if len(dims) != 1:
            raise DimensionError(f"atom dims differ: {sorted(dims)}")
        if not self.cap > 0:
            raise ConstraintViolated(f"cap must be positive, got {self.cap}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConstraintViolated(f"alpha must lie in [0, 1], got {self.alpha}")
        for q in probs:
            if q < 0.0:
                raise ConstraintViolated(f"negative probability {q}")
        total = math.fsum(probs)
        if abs(total - 1.0) > PROB_TOL:
            raise ConstraintViolated(f"probabilities sum to {total!r}, not 1")
        for i, a in enumerate(atoms):
            if not a.is_psd():
                raise ConstraintViolated(
                    f"atom {i} is not PSD (min eigenvalue {a.min_eigenvalue():.3e})"
                )
            if a.opnorm > self.cap * (1.0 + CAP_SLACK):
                raise ConstraintViolated(
                    f"atom {i} has norm {a.opnorm!r} above cap {self.cap!r}"
                )
        target = self.alpha * self.cap
        # Tiny absolute floor so alpha = 0 (target 0) stays checkable.
        tol = MEAN_REL_TOL * target + 1e-12 * (1.0 + self.cap)
        if abs(self.mean_norm - target) > tol:
            raise ConstraintViolated(
                f"mean norm {self.mean_norm!r} misses target "
                f"{target!r} by more than {tol:.3e}"
            )

    @property
    def dim(self) -> int:
        return self.atoms[0].dim

    @property
    def support_size(self) -> int:
        return len(self.atoms)

    @cached_property
    def mean(self) -> SymMatrix:
        acc = np.zeros((self.dim, self.dim))
        for q, a in zip(self.probs, self.atoms):
            acc += q * a.entries
        return SymMatrix(acc)

    @property
    def mean_norm(self) -> float:
        return self.mean.opnorm


@dataclass(frozen=True, eq=False)
class EnsembleFamily:
    """Independent ensembles sharing one dimension (joint law = product)."""

    members: tuple[FiniteEnsemble, ...]

    def __post_init__(self):
        members = tuple(self.members)
        object.__setattr__(self, "members", members)
        if not members:
            raise DimensionError("family needs at least one member")
        dims = {m.dim for m in members}
        if len(dims) != 1:
            raise DimensionError(f"member dims differ: {sorted(dims)}")

    @property
    def dim(self) -> int:
        return self.members[0].dim

    @property
    def params(self) -> BernoulliParams:
        """Declared (cap, alpha) targets of the members, in order."""
        return BernoulliParams(
            caps=tuple(m.cap for m in self.members),
            alphas=tuple(m.alpha for m in self.members),
        )


def project_mean_shell(
    atoms: tuple[SymMatrix, ...],
    probs: tuple[float, ...],
    cap: float,
    alpha: float,
    rounds: int = _PROJECTION_ROUNDS,
) -> tuple[SymMatrix, ...] | None:
    """Rescale atoms (spectrally, capped at ``cap``) until ||mean|| = alpha*cap.

    Scale factors multiply eigenvalues, clipped into [0, cap]; the
    eigenbasis never changes, so cached spectra stay valid. Two phases:
    a few compounded rescale rounds (one round is exact when nothing
    clips, which covers warm inputs already near the shell), then, on a
    stall, bisection of a single factor applied to the original
    eigenvalues. The mean norm is continuous and nondecreasing in that
    factor with limits 0 and cap, so bisection cannot stall the way
    compounding can near alpha = 1, where the compounding rate degrades
    to the clipped-mass fraction. Returns None if the round budget runs
    out or the target norm is unreachable, which callers translate into
    SamplerFailed or a rejected proposal.
    """
    target = alpha * cap
    if target == 0.0:
        return tuple(SymMatrix.zeros(a.dim) for a in atoms)

    def mean_norm_of(current: tuple[SymMatrix, ...]) -> float:
        acc = np.zeros_like(current[0].entries)
        for q, a in zip(probs, current):
            acc = acc + q * a.entries
        return SymMatrix(acc).opnorm

    fast_rounds = min(8, rounds)
    candidate = atoms
    for _ in range(fast_rounds):
        norm = mean_norm_of(candidate)
        if abs(norm - target) <= 1e-9 * target:
            return candidate
        if norm == 0.0:
            break
        t = target / norm
        candidate = tuple(
            SymMatrix.from_eigensystem(
                a.eig.eigenvectors, np.clip(a.eig.eigenvalues * t, 0.0, cap)
            )
            for a in candidate
        )

    spectra = [(a.eig.eigenvectors, a.eig.eigenvalues) for a in atoms]

    def mean_norm_at(t: float) -> float:
        acc = np.zeros_like(atoms[0].entries)
        for q, (vecs, vals) in zip(probs, spectra):
            clipped = np.clip(vals * t, 0.0, cap)
            acc = acc + q * ((vecs * clipped) @ vecs.T)
        return SymMatrix(0.5 * (acc + acc.T)).opnorm

    def build(t: float) -> tuple[SymMatrix, ...]:
        return tuple(
            SymMatrix.from_eigensystem(vecs, np.clip(vals * t, 0.0, cap))
            for vecs, vals in spectra
        )

    hi = 1.0
    norm_hi = mean_norm_at(hi)
    for _ in range(64):
        if norm_hi >= target:
            break
        hi *= 2.0
        norm_hi = mean_norm_at(hi)
    else:
        # saturated below the target: some direction is unreachable
        return None
    if abs(norm_hi - target) <= 1e-9 * target:
        return build(hi)

    lo = 0.0
    for _ in range(rounds):
        mid = 0.5 * (lo + hi)
        norm_mid = mean_norm_at(mid)
        if abs(norm_mid - target) <= 1e-9 * target:
            return build(mid)
        if norm_mid < target:
            lo = mid
        else:
            hi = mid
    return None


def sample_constrained_ensemble(
    n: int, s: int, cap: float, alpha: float, seed: int
) -> FiniteEnsemble:
    """Random admissible ensemble: s atoms, norm cap, exact mean-norm target.

    Atoms are drawn spectrally (random rotation, spectrum uniform on
    [0, cap]) and probabilities from a flat simplex draw, then projected
    onto the mean-norm shell. Deterministic in ``seed``.
    """
    if n < 1 or s < 1:
        raise DimensionError(f"need n >= 1 and s >= 1, got n={n}, s={s}")
    if not cap > 0:
        raise ConstraintViolated(f"cap must be positive, got {cap}")
    if not 0.0 <= alpha <= 1.0:
        raise ConstraintViolated(f"alpha must lie in [0, 1], got {alpha}")

    rng = stream(seed)
    probs = tuple(float(q) for q in rng.dirichlet(np.ones(s)))
    if alpha == 0.0:
        atoms = tuple(SymMatrix.zeros(n) for _ in range(s))
    elif alpha == 1.0:
        # Mean norm == cap forces the mean to sit at the cap; every-atom
        # cap*I is always admissible and keeps the draw deterministic.
        eye = np.eye(n)
        atoms = tuple(
            SymMatrix.from_eigensystem(eye, np.full(n, cap)) for _ in range(s)
        )
    else:
        drawn = tuple(random_spectral(n, rng, 0.0, cap) for _ in range(s))
        projected = project_mean_shell(drawn, probs, cap, alpha)
        if projected is None:
            raise SamplerFailed(
                f"mean-norm projection did not converge for seed {seed} "
                f"(n={n}, s={s}, cap={cap}, alpha={alpha})"
            )
        atoms = projected
    return FiniteEnsemble(atoms=atoms, probs=probs, cap=cap, alpha=alpha)


def sample_with_retry(
    n: int,
    s: int,
    cap: float,
    alpha: float,
    rng: np.random.Generator,
    attempts: int = 10,
) -> FiniteEnsemble:
    """Draw sampler seeds from ``rng`` until the projection converges.

    Convergence failures are rare and seed-specific; retrying with the next
    derived seed keeps sweeps deterministic without aborting them. The last
    SamplerFailed propagates if every attempt fails.
    """
    failure: SamplerFailed | None = None
    for _ in range(attempts):
        candidate = subseed(rng)
        try:
            return sample_constrained_ensemble(n, s, cap, alpha, candidate)
        except SamplerFailed as exc:
            failure = exc
    raise failure


def extremal_family(n: int, params: BernoulliParams) -> EnsembleFamily:
    """The conjectured maximizer: member k takes cap_k * I w.p. alpha_k, else 0."""
    if n < 1:
        raise DimensionError(f"dimension must be >= 1, got {n}")
    eye = np.eye(n)
    members = []
    for cap, alpha in zip(params.caps, params.alphas):
        atoms = (
            SymMatrix.from_eigensystem(eye, np.full(n, cap)),
            SymMatrix.from_eigensystem(eye, np.zeros(n)),
        )
        members.append(
            FiniteEnsemble(atoms=atoms, probs=(alpha, 1.0 - alpha), cap=cap, alpha=alpha)
        )
    return EnsembleFamily(members=tuple(members))


def _validate_moment_order(p: int) -> int:
    if p != int(p) or p < 1:
        raise InvalidExponent(f"moment order must be a positive integer, got {p}")
    if p > MOMENT_BUDGET:
        raise BudgetExceeded(f"moment order {p} exceeds budget {MOMENT_BUDGET}")
    return int(p)


def exact_trace_moment(family: EnsembleFamily, p: int) -> float:
    """E tr((X_1 + ... + X_N)^p), summed exactly over the product support."""
    p = _validate_moment_order(p)
    sizes = [m.support_size for m in family.members]
    support = math.prod(sizes)
    if support > SUPPORT_BUDGET:
        raise BudgetExceeded(
            f"product support has {support} outcomes, budget is {SUPPORT_BUDGET}"
        )
    stacks = [np.stack([a.entries for a in m.atoms]) for m in family.members]
    prob_arrays = [np.asarray(m.probs) for m in family.members]

    contributions: list[float] = []
    outcomes = itertools.product(*(range(s) for s in sizes))
    while chunk := list(itertools.islice(outcomes, _CHUNK)):
        idx = np.asarray(chunk)
        total = stacks[0][idx[:, 0]].copy()
        weight = prob_arrays[0][idx[:, 0]].copy()
        for k in range(1, len(sizes)):
            total += stacks[k][idx[:, k]]
            weight *= prob_arrays[k][idx[:, k]]
        contributions.extend((weight * batched_trace_power(total, p)).tolist())
    return math.fsum(contributions)


def mc_trace_moment(
    family: EnsembleFamily, p: int, samples: int, seed: int
) -> tuple[float, float]:
    """Monte Carlo estimate of the trace moment with its standard error."""
    p = _validate_moment_order(p)
    if samples < 100:
        raise ValueError(f"need at least 100 samples, got {samples}")
    rng = stream(seed)
    n = family.dim
    total = np.zeros((samples, n, n))
    for m in family.members:
        idx = rng.choice(m.support_size, size=samples, p=np.asarray(m.probs))
        total += np.stack([a.entries for a in m.atoms])[idx]
    traces = np.empty(samples)
    for start in range(0, samples, _CHUNK):
        block = slice(start, start + _CHUNK)
        traces[block] = batched_trace_power(total[block], p)
    estimate = float(traces.mean())
    std_error = float(traces.std(ddof=1) / math.sqrt(samples))
    return estimate, std_error


# JSON replay format: {"dim": n, "members": [{"atoms": [flat row-major], ...}]}

def family_to_json(family: EnsembleFamily) -> dict:
    return {
        "dim": family.dim,
        "members": [
            {
                "atoms": [a.entries.ravel().tolist() for a in m.atoms],
                "probs": list(m.probs),
                "L_cap": m.cap,
                "alpha_target": m.alpha,
            }
            for m in family.members
        ],
    }


def family_from_json(doc: dict) -> EnsembleFamily:
    dim = int(doc["dim"])
    members = []
    for entry in doc["members"]:
        atoms = tuple(
            SymMatrix(np.asarray(flat, dtype=float).reshape(dim, dim))
            for flat in entry["atoms"]
        )
        members.append(
            FiniteEnsemble(
                atoms=atoms,
                probs=tuple(float(q) for q in entry["probs"]),
                cap=float(entry["L_cap"]),
                alpha=float(entry["alpha_target"]),
            )
        )
    return EnsembleFamily(members=tuple(members))
