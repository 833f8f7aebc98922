"""Executable checkers for the trace-inequality chain.

Each checker evaluates both sides of one inequality on concrete inputs
and returns a CheckReport with the raw numbers. The chain runs from the
generalized Holder bound through the Araki-Lieb-Thirring step, word
bounds, their expectation versions, the Bernoulli reduction, and finally
the extremal theorem itself. A single failing report on admissible inputs
means an implementation bug, never a counterexample, so sweeps treat any
failure as build-breaking.

Expectations are always exact sums over finite product supports; no
checker uses Monte Carlo, so there are no statistical false alarms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import reduce
from typing import Sequence

import numpy as np

from .ensembles import (
    CAP_SLACK,
    EnsembleFamily,
    FiniteEnsemble,
    exact_trace_moment,
    sample_with_retry,
)
from .errors import BudgetExceeded, ConstraintViolated, DimensionError, InvalidExponent
from .extremal import theorem_max_value
from .linalg import (
    SymMatrix,
    psd_power,
    psd_trace_power,
    random_psd,
    schatten_norm,
    schatten_from_singulars,
    singular_values,
    trace_product,
)
from .parallel import parallel_map
from .rng import stream, subseed
from .words import WORD_BUDGET, AlternatingWord, eval_word_trace

CHECK_TOL = 1e-9

# Exponent grid exercised by the randomized sweep.
ALT_EXPONENTS = (1.0, 1.5, 2.0, 3.0)


class LemmaId(str, Enum):
    HOLDER = "Holder"
    ALT = "ALT"
    ALT_SCHATTEN = "ALT_Schatten"
    WORD_BOUND = "WordBound"
    EXPECTATION_WORD_BOUND = "ExpectationWordBound"
    BINOMIAL_REDUCTION = "BinomialReduction"
    THEOREM_MAX = "TheoremMax"


@dataclass(frozen=True)
class CheckReport:
    """LHS <= RHS verdict for one inequality instance."""

    lemma_id: LemmaId
    lhs: float
    rhs: float
    slack: float
    passed: bool
    input_digest: str

    @property
    def norm_slack(self) -> float:
        """Slack rescaled by 1 + |rhs|; passing means >= -CHECK_TOL."""
        return self.slack / (1.0 + abs(self.rhs))


def _report(lemma_id: LemmaId, lhs: float, rhs: float, digest: str) -> CheckReport:
    lhs, rhs = float(lhs), float(rhs)
    slack = rhs - lhs
    passed = lhs <= rhs + CHECK_TOL * (1.0 + abs(rhs))
    return CheckReport(
        lemma_id=lemma_id, lhs=lhs, rhs=rhs, slack=slack, passed=passed,
        input_digest=digest,
    )


def check_holder(
    factors: Sequence[SymMatrix], exponents: Sequence[float], digest: str = ""
) -> CheckReport:
    """|A_1 ... A_r|_1 <= prod |A_i|_{p_i} with sum 1/p_i = 1."""
    if len(factors) != len(exponents) or not factors:
        raise DimensionError(
            f"need matching nonempty factors/exponents, got {len(factors)}/{len(exponents)}"
        )
    for q in exponents:
        if math.isnan(q) or q < 1:
            raise InvalidExponent(f"Holder exponents must be >= 1, got {q}")
    inverse_sum = math.fsum(0.0 if math.isinf(q) else 1.0 / q for q in exponents)
    if abs(inverse_sum - 1.0) > 1e-12:
        raise InvalidExponent(f"exponent inverses sum to {inverse_sum!r}, not 1")
    dims = {f.dim for f in factors}
    if len(dims) != 1:
        raise DimensionError(f"factor dims differ: {sorted(dims)}")

    if len(factors) == 1:
        lhs = schatten_norm(factors[0], 1)
    else:
        product = reduce(np.matmul, (f.entries for f in factors))
        lhs = schatten_from_singulars(singular_values(product), 1)
    rhs_terms = [schatten_norm(f, q) for f, q in zip(factors, exponents)]
    return _report(LemmaId.HOLDER, lhs, math.prod(rhs_terms), digest)


def _psd_sandwich(a: SymMatrix, b: SymMatrix) -> SymMatrix:
    return SymMatrix(a.entries @ b.entries @ a.entries)


def check_alt(
    a: SymMatrix, b: SymMatrix, alpha_exp: float, digest: str = ""
) -> CheckReport:
    """tr((ABA)^alpha) <= tr(A^{2 alpha} B^alpha) for PSD A, B, alpha >= 1."""
    if math.isnan(alpha_exp) or alpha_exp < 1:
        raise InvalidExponent(f"need alpha >= 1, got {alpha_exp}")
    lhs = psd_trace_power(_psd_sandwich(a, b), alpha_exp)
    rhs = trace_product([psd_power(a, 2.0 * alpha_exp), psd_power(b, alpha_exp)])
    return _report(LemmaId.ALT, lhs, rhs, digest)


def check_alt_schatten(
    a: SymMatrix, b: SymMatrix, alpha_exp: float, digest: str = ""
) -> CheckReport:
    """|ABA|_alpha <= tr(A^{2 alpha} B^alpha)^{1/alpha}."""
    if math.isnan(alpha_exp) or alpha_exp < 1:
        raise InvalidExponent(f"need alpha >= 1, got {alpha_exp}")
    lhs = schatten_norm(_psd_sandwich(a, b), alpha_exp)
    base = trace_product([psd_power(a, 2.0 * alpha_exp), psd_power(b, alpha_exp)])
    # The trace is nonnegative for PSD arguments; clamp roundoff before rooting.
    rhs = max(base, 0.0) ** (1.0 / alpha_exp)
    return _report(LemmaId.ALT_SCHATTEN, lhs, rhs, digest)


def check_word_bound(
    x: SymMatrix, y: SymMatrix, w: AlternatingWord, digest: str = ""
) -> CheckReport:
    """|tr X^{l1} Y^{m1} ...| <= ||X||^{l-1} tr(X Y^m), degrees l, m summed."""
    lhs = abs(eval_word_trace(x, y, w))
    collapsed = trace_product([x, psd_power(y, w.y_degree)])
    rhs = x.opnorm ** (w.x_degree - 1.0) * collapsed
    return _report(LemmaId.WORD_BOUND, lhs, rhs, digest)


def _require_caps(ex: FiniteEnsemble, cap: float) -> None:
    for i, atom in enumerate(ex.atoms):
        if atom.opnorm > cap * (1.0 + CAP_SLACK):
            raise ConstraintViolated(
                f"atom {i} has norm {atom.opnorm!r} above the stated cap {cap!r}"
            )


def _bernoulli_weight(ex: FiniteEnsemble, cap: float) -> float:
    # ||E X|| <= cap holds whenever all atoms respect the cap; clamp the
    # quotient so roundoff cannot produce a probability above 1.
    return min(ex.mean_norm / cap, 1.0)


def check_expectation_word_bound(
    ex: FiniteEnsemble,
    ey: FiniteEnsemble,
    w: AlternatingWord,
    cap: float,
    digest: str = "",
) -> CheckReport:
    """E tr X^{l1} Y^{m1} ... <= E f^l * E tr Y^m.

    f is the {0, cap} Bernoulli surrogate with P(f = cap) = ||E X|| / cap;
    both expectations are exact sums over the product support.
    """
    if ex.dim != ey.dim:
        raise DimensionError(f"dim mismatch: {ex.dim} vs {ey.dim}")
    _require_caps(ex, cap)
    lhs = math.fsum(
        px * py * eval_word_trace(ax, ay, w)
        for px, ax in zip(ex.probs, ex.atoms)
        for py, ay in zip(ey.probs, ey.atoms)
    )
    ef_l = _bernoulli_weight(ex, cap) * cap**w.x_degree
    ey_trace = math.fsum(
        py * psd_trace_power(ay, w.y_degree) for py, ay in zip(ey.probs, ey.atoms)
    )
    return _report(LemmaId.EXPECTATION_WORD_BOUND, lhs, ef_l * ey_trace, digest)


def _shift_identity(a: SymMatrix, c: float) -> SymMatrix:
    """A + c*I through the cached eigensystem (basis unchanged)."""
    e = a.eig
    return SymMatrix.from_eigensystem(e.eigenvectors, e.eigenvalues + c)


def check_binomial_reduction(
    ex: FiniteEnsemble, ey: FiniteEnsemble, p: int, cap: float, digest: str = ""
) -> CheckReport:
    """E tr(X + Y)^p <= E tr(f I + Y)^p with the Bernoulli surrogate f."""
    if ex.dim != ey.dim:
        raise DimensionError(f"dim mismatch: {ex.dim} vs {ey.dim}")
    if p != int(p) or p < 1:
        raise InvalidExponent(f"need a positive integer power, got {p}")
    if p > WORD_BUDGET:
        raise BudgetExceeded(f"power {p} exceeds word budget {WORD_BUDGET}")
    _require_caps(ex, cap)
    lhs = math.fsum(
        px * py * psd_trace_power(ax + ay, p)
        for px, ax in zip(ex.probs, ex.atoms)
        for py, ay in zip(ey.probs, ey.atoms)
    )
    weight = _bernoulli_weight(ex, cap)
    rhs = math.fsum(
        py
        * (
            weight * psd_trace_power(_shift_identity(ay, cap), p)
            + (1.0 - weight) * psd_trace_power(ay, p)
        )
        for py, ay in zip(ey.probs, ey.atoms)
    )
    return _report(LemmaId.BINOMIAL_REDUCTION, lhs, rhs, digest)


def check_theorem_max(family: EnsembleFamily, p: int, digest: str = "") -> CheckReport:
    """Exact family moment vs the closed-form maximum for its targets."""
    lhs = exact_trace_moment(family, p)
    rhs = theorem_max_value(family.dim, family.params, p)
    return _report(LemmaId.THEOREM_MAX, lhs, rhs, digest)


# Randomized sweep ---------------------------------------------------------

@dataclass(frozen=True)
class LemmaSummary:
    lemma_id: LemmaId
    trials: int
    passes: int
    min_slack: float
    min_norm_slack: float
    worst_digest: str

    @property
    def all_passed(self) -> bool:
        return self.passes == self.trials


def _random_word(rng: np.random.Generator, p_max: int) -> AlternatingWord:
    # Half the draws use fractional exponents: the word bound is stated for
    # reals >= 1, only the binomial expansion needs integers.
    r = int(rng.integers(1, 4))
    per_slot = max(1, p_max // (2 * r))
    if rng.random() < 0.5:
        values = rng.integers(1, per_slot + 1, size=2 * r).astype(float)
    else:
        values = rng.uniform(1.0, per_slot + 1.0, size=2 * r)
    pairs = tuple((float(values[2 * i]), float(values[2 * i + 1])) for i in range(r))
    return AlternatingWord(exponent_pairs=pairs)


def _holder_trial(rng: np.random.Generator, t: int, dim_max: int) -> CheckReport:
    n = int(rng.integers(1, dim_max + 1))
    r = int(rng.integers(1, 4))
    weights = rng.uniform(0.5, 2.0, size=r)
    inverses = weights / math.fsum(weights.tolist())
    exponents = [1.0 / u for u in inverses]
    factors = [random_psd(n, rng, scale=float(rng.uniform(0.5, 2.0))) for _ in range(r)]
    return check_holder(factors, exponents, digest=f"trial={t};n={n};r={r}")


def _alt_trial(
    rng: np.random.Generator, t: int, dim_max: int, schatten: bool
) -> CheckReport:
    n = int(rng.integers(1, dim_max + 1))
    alpha_exp = float(rng.choice(ALT_EXPONENTS))
    a = random_psd(n, rng, scale=float(rng.uniform(0.5, 2.0)))
    b = random_psd(n, rng, scale=float(rng.uniform(0.5, 2.0)))
    digest = f"trial={t};n={n};alpha={alpha_exp}"
    if schatten:
        return check_alt_schatten(a, b, alpha_exp, digest=digest)
    return check_alt(a, b, alpha_exp, digest=digest)


def _word_trial(
    rng: np.random.Generator, t: int, dim_max: int, p_max: int
) -> CheckReport:
    n = int(rng.integers(1, dim_max + 1))
    x = random_psd(n, rng, scale=float(rng.uniform(0.5, 2.0)))
    y = random_psd(n, rng, scale=float(rng.uniform(0.5, 2.0)))
    w = _random_word(rng, p_max)
    return check_word_bound(x, y, w, digest=f"trial={t};n={n};word={w.exponent_pairs}")


def _ensemble_trials(
    rng: np.random.Generator, t: int, dim_max: int, p_max: int
) -> tuple[CheckReport, CheckReport]:
    n = int(rng.integers(1, dim_max + 1))
    cap = float(rng.uniform(0.5, 2.0))
    ex = sample_with_retry(
        n, int(rng.integers(1, 4)), cap, float(rng.uniform()), rng
    )
    ey = sample_with_retry(
        n, int(rng.integers(1, 4)), float(rng.uniform(0.5, 2.0)), float(rng.uniform()), rng
    )
    w = _random_word(rng, p_max)
    p = int(rng.integers(1, p_max + 1))
    digest = f"trial={t};n={n};cap={cap}"
    expectation = check_expectation_word_bound(
        ex, ey, w, cap, digest=f"{digest};word={w.exponent_pairs}"
    )
    reduction = check_binomial_reduction(ex, ey, p, cap, digest=f"{digest};p={p}")
    return expectation, reduction


def run_trial(seed: int, t: int, dim_max: int, p_max: int) -> list[CheckReport]:
    """All six lemma checks on fresh draws for trial index t."""
    reports = [
        _holder_trial(stream(seed, t, 0), t, dim_max),
        _alt_trial(stream(seed, t, 1), t, dim_max, schatten=False),
        _alt_trial(stream(seed, t, 2), t, dim_max, schatten=True),
        _word_trial(stream(seed, t, 3), t, dim_max, p_max),
    ]
    reports.extend(_ensemble_trials(stream(seed, t, 4), t, dim_max, p_max))
    return reports


def _run_trial_block(args: tuple[int, int, int, int, int]) -> list[CheckReport]:
    seed, start, stop, dim_max, p_max = args
    out: list[CheckReport] = []
    for t in range(start, stop):
        out.extend(run_trial(seed, t, dim_max, p_max))
    return out


def run_lemma_sweep(
    trials: int, dim_max: int, p_max: int, seed: int
) -> dict[LemmaId, LemmaSummary]:
    """Randomized constrained sweep over all six lemma checkers.

    Every trial owns a counter-derived RNG stream keyed by (seed, trial),
    so results are independent of block boundaries and worker count.
    """
    if trials < 1 or dim_max < 1 or p_max < 1:
        raise InvalidExponent(
            f"trials, dim_max, p_max must be positive, got {trials}, {dim_max}, {p_max}"
        )
    block = 256
    blocks = [
        (seed, start, min(start + block, trials), dim_max, p_max)
        for start in range(0, trials, block)
    ]
    tallies: dict[LemmaId, dict] = {}
    for reports in parallel_map(_run_trial_block, blocks):
        for rep in reports:
            agg = tallies.setdefault(
                rep.lemma_id,
                {"trials": 0, "passes": 0, "min_slack": math.inf,
                 "min_norm_slack": math.inf, "worst_digest": ""},
            )
            agg["trials"] += 1
            agg["passes"] += rep.passed
            agg["min_slack"] = min(agg["min_slack"], rep.slack)
            if rep.norm_slack < agg["min_norm_slack"]:
                agg["min_norm_slack"] = rep.norm_slack
                agg["worst_digest"] = rep.input_digest
    return {
        lemma: LemmaSummary(
            lemma_id=lemma,
            trials=agg["trials"],
            passes=agg["passes"],
            min_slack=agg["min_slack"],
            min_norm_slack=agg["min_norm_slack"],
            worst_digest=agg["worst_digest"],
        )
        for lemma, agg in tallies.items()
    }
