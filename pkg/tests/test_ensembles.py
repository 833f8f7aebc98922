"""Ensemble construction, mean-shell sampling, and the exact/Monte Carlo
trace-moment oracles checked against each other and against numpy."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import assert_close, seeds
from tracemax import (
    BernoulliParams,
    BudgetExceeded,
    ConstraintViolated,
    DimensionError,
    EnsembleFamily,
    FiniteEnsemble,
    SamplerFailed,
    SymMatrix,
    exact_trace_moment,
    extremal_family,
    family_from_json,
    family_to_json,
    mc_trace_moment,
    project_mean_shell,
    psd_trace_power,
    random_psd,
    sample_constrained_ensemble,
    sample_with_retry,
    stream,
    theorem_max_value,
)

_EYE2 = SymMatrix.identity(2)
_ZERO2 = SymMatrix.zeros(2)


def _bernoulli_member(cap, alpha, n=2):
    return FiniteEnsemble(
        atoms=(cap * SymMatrix.identity(n), SymMatrix.zeros(n)),
        probs=(alpha, 1.0 - alpha),
        cap=cap,
        alpha=alpha,
    )


# FiniteEnsemble invariants ----------------------------------------------------

def test_valid_ensemble_accepted():
    member = _bernoulli_member(1.5, 0.4)
    assert member.dim == 2
    assert member.support_size == 2
    assert_close(member.mean_norm, 0.6)
    assert np.array_equal(member.mean.entries, (0.4 * 1.5) * np.eye(2))


def test_rejects_negative_probability():
    with pytest.raises(ConstraintViolated):
        FiniteEnsemble(atoms=(_EYE2, _ZERO2), probs=(1.2, -0.2), cap=1.0, alpha=1.2)


def test_rejects_probabilities_not_summing_to_one():
    with pytest.raises(ConstraintViolated):
        FiniteEnsemble(atoms=(_EYE2, _ZERO2), probs=(0.6, 0.3), cap=1.0, alpha=0.6)


def test_rejects_non_psd_atom():
    bad = SymMatrix.diagonal([1.0, -0.5])
    with pytest.raises(ConstraintViolated):
        FiniteEnsemble(atoms=(bad,), probs=(1.0,), cap=1.0, alpha=1.0)


def test_rejects_atom_over_cap():
    with pytest.raises(ConstraintViolated):
        FiniteEnsemble(atoms=(2.0 * _EYE2,), probs=(1.0,), cap=1.0, alpha=1.0)


def test_rejects_mean_norm_mismatch():
    with pytest.raises(ConstraintViolated):
        FiniteEnsemble(atoms=(_EYE2, _ZERO2), probs=(0.5, 0.5), cap=1.0, alpha=0.9)


def test_rejects_mixed_dimensions():
    with pytest.raises(DimensionError):
        FiniteEnsemble(
            atoms=(_EYE2, SymMatrix.zeros(3)), probs=(0.5, 0.5), cap=1.0, alpha=0.5
        )


def test_rejects_empty_support_and_length_mismatch():
    with pytest.raises(DimensionError):
        FiniteEnsemble(atoms=(), probs=(), cap=1.0, alpha=0.5)
    with pytest.raises(DimensionError):
        FiniteEnsemble(atoms=(_EYE2,), probs=(0.5, 0.5), cap=1.0, alpha=0.5)


def test_rejects_bad_cap_and_alpha():
    with pytest.raises(ConstraintViolated):
        FiniteEnsemble(atoms=(_EYE2,), probs=(1.0,), cap=-1.0, alpha=1.0)
    with pytest.raises(ConstraintViolated):
        FiniteEnsemble(atoms=(_EYE2,), probs=(1.0,), cap=1.0, alpha=1.5)


def test_family_consistency():
    family = EnsembleFamily(members=(_bernoulli_member(1.0, 0.5),))
    assert family.dim == 2
    assert family.params == BernoulliParams(caps=(1.0,), alphas=(0.5,))
    with pytest.raises(DimensionError):
        EnsembleFamily(members=())
    with pytest.raises(DimensionError):
        EnsembleFamily(
            members=(_bernoulli_member(1.0, 0.5, n=2), _bernoulli_member(1.0, 0.5, n=3))
        )


# Sampler ----------------------------------------------------------------------

def test_sampler_invariants_recomputed_with_numpy():
    member = sample_constrained_ensemble(3, 2, 1.0, 0.4, seed=42)
    assert member.dim == 3
    assert member.support_size == 2
    probs = np.array(member.probs)
    assert np.all(probs >= 0)
    assert abs(probs.sum() - 1.0) <= 1e-12
    mean = sum(q * a.entries for q, a in zip(member.probs, member.atoms))
    mean_norm = float(np.max(np.abs(np.linalg.eigvalsh(mean))))
    assert abs(mean_norm - 0.4) <= 1e-8 * 0.4 + 1e-12
    for atom in member.atoms:
        evals = np.linalg.eigvalsh(atom.entries)
        assert evals.min() >= -1e-10
        assert evals.max() <= 1.0 * (1.0 + 1e-9)


def test_sampler_alpha_zero_gives_zero_atoms():
    member = sample_constrained_ensemble(2, 3, 1.0, 0.0, seed=7)
    for atom in member.atoms:
        assert np.array_equal(atom.entries, np.zeros((2, 2)))


def test_sampler_alpha_one_caps_every_atom():
    member = sample_constrained_ensemble(3, 2, 1.7, 1.0, seed=7)
    for atom in member.atoms:
        np.testing.assert_allclose(atom.entries, 1.7 * np.eye(3), atol=1e-12)


def test_sampler_deterministic_in_seed():
    a = sample_constrained_ensemble(3, 2, 1.0, 0.4, seed=11)
    b = sample_constrained_ensemble(3, 2, 1.0, 0.4, seed=11)
    assert a.probs == b.probs
    for x, y in zip(a.atoms, b.atoms):
        assert np.array_equal(x.entries, y.entries)


def test_sampler_validation():
    with pytest.raises(DimensionError):
        sample_constrained_ensemble(0, 2, 1.0, 0.5, seed=0)
    with pytest.raises(ConstraintViolated):
        sample_constrained_ensemble(2, 2, -1.0, 0.5, seed=0)
    with pytest.raises(ConstraintViolated):
        sample_constrained_ensemble(2, 2, 1.0, 1.5, seed=0)


@given(seeds, st.integers(min_value=1, max_value=4), st.integers(min_value=1, max_value=3))
def test_sampler_with_retry_always_lands_on_shell(seed, n, s):
    rng = stream(seed, 201)
    alpha = float(rng.uniform())
    cap = float(rng.uniform(0.2, 3.0))
    member = sample_with_retry(n, s, cap, alpha, rng)
    assert abs(member.mean_norm - alpha * cap) <= 1e-8 * alpha * cap + 1e-12 * (1 + cap)


def test_projection_reports_unreachable_target():
    # orthogonal positive eigenspaces saturate the mean norm at cap/2, so
    # alpha = 0.9 is unreachable no matter how hard the atoms are scaled
    atoms = (SymMatrix.diagonal([1.0, 0.0]), SymMatrix.diagonal([0.0, 1.0]))
    probs = (0.5, 0.5)
    assert project_mean_shell(atoms, probs, cap=1.0, alpha=0.9) is None


def test_projection_handles_extreme_alpha():
    # bisection on the shared scale factor must not stall near alpha = 1
    rng = stream(55)
    for _ in range(30):
        member = sample_with_retry(5, 3, 0.75, 0.9985, rng, attempts=1)
        assert abs(member.mean_norm - 0.9985 * 0.75) <= 1e-8 * 0.9985 * 0.75 + 1e-12


def test_sample_with_retry_propagates_final_failure(monkeypatch):
    import tracemax.ensembles as mod

    calls = []

    def always_fails(n, s, cap, alpha, seed):
        calls.append(seed)
        raise SamplerFailed(f"seed {seed}")

    monkeypatch.setattr(mod, "sample_constrained_ensemble", always_fails)
    with pytest.raises(SamplerFailed):
        mod.sample_with_retry(2, 2, 1.0, 0.5, stream(0), attempts=4)
    assert len(calls) == 4
    assert len(set(calls)) == 4


# Extremal family ---------------------------------------------------------------

def test_extremal_family_shape_and_mean():
    params = BernoulliParams(caps=(1.0, 2.0), alphas=(0.25, 0.75))
    family = extremal_family(3, params)
    assert family.dim == 3
    assert family.params == params
    first = family.members[0]
    assert np.array_equal(first.atoms[0].entries, np.eye(3))
    assert np.array_equal(first.atoms[1].entries, np.zeros((3, 3)))
    assert first.probs == (0.25, 0.75)


def test_extremal_family_attains_theorem_value():
    params = BernoulliParams(caps=(1.0, 0.5), alphas=(0.3, 0.8))
    family = extremal_family(2, params)
    for p in (1, 2, 3, 5, 8):
        exact = exact_trace_moment(family, p)
        target = theorem_max_value(2, params, p)
        assert_close(exact, target, rel=1e-12, abs_tol=0.0)


# Exact and Monte Carlo moments --------------------------------------------------

def test_exact_moment_single_deterministic_member():
    a = random_psd(3, stream(301), 1.0)
    member = FiniteEnsemble(atoms=(a,), probs=(1.0,), cap=max(a.opnorm, 1e-9), alpha=1.0)
    family = EnsembleFamily(members=(member,))
    for p in (1, 2, 4, 7):
        assert_close(exact_trace_moment(family, p), psd_trace_power(a, p))


def test_exact_moment_two_members_hand_enumeration():
    m1 = _bernoulli_member(1.0, 0.5)
    m2 = _bernoulli_member(2.0, 0.25)
    family = EnsembleFamily(members=(m1, m2))
    p = 3
    expected = 0.0
    for q1, a1 in zip(m1.probs, m1.atoms):
        for q2, a2 in zip(m2.probs, m2.atoms):
            total = np.linalg.matrix_power(a1.entries + a2.entries, p)
            expected += q1 * q2 * np.trace(total)
    assert_close(exact_trace_moment(family, p), float(expected), rel=1e-13)


def test_exact_moment_budget():
    member = sample_constrained_ensemble(2, 2, 1.0, 0.5, seed=5)
    family = EnsembleFamily(members=(member,) * 21)
    with pytest.raises(BudgetExceeded):
        exact_trace_moment(family, 2)
    with pytest.raises(BudgetExceeded):
        exact_trace_moment(EnsembleFamily(members=(member,)), 31)


def test_mc_agrees_with_exact_within_four_sigma():
    member = sample_constrained_ensemble(2, 2, 1.0, 0.5, seed=9)
    other = sample_constrained_ensemble(2, 3, 1.5, 0.3, seed=10)
    family = EnsembleFamily(members=(member, other))
    exact = exact_trace_moment(family, 4)
    estimate, se = mc_trace_moment(family, 4, samples=100_000, seed=3)
    assert se > 0
    assert abs(estimate - exact) <= 4.0 * se


def test_mc_deterministic_family_has_zero_error():
    a = random_psd(2, stream(302), 1.0)
    member = FiniteEnsemble(atoms=(a,), probs=(1.0,), cap=max(a.opnorm, 1e-9), alpha=1.0)
    family = EnsembleFamily(members=(member,))
    estimate, se = mc_trace_moment(family, 3, samples=200, seed=0)
    assert_close(estimate, psd_trace_power(a, 3))
    assert se == 0.0


def test_mc_rejects_tiny_sample_counts():
    family = extremal_family(2, BernoulliParams(caps=(1.0,), alphas=(0.5,)))
    with pytest.raises(ValueError):
        mc_trace_moment(family, 2, samples=99, seed=0)


def test_mc_error_shrinks_like_root_n():
    family = extremal_family(2, BernoulliParams(caps=(1.0,), alphas=(0.5,)))
    ratios = []
    for seed in range(8):
        _, se_small = mc_trace_moment(family, 3, samples=2_000, seed=seed)
        _, se_big = mc_trace_moment(family, 3, samples=8_000, seed=seed + 100)
        ratios.append(se_small / se_big)
    mean_ratio = sum(ratios) / len(ratios)
    assert 1.7 <= mean_ratio <= 2.3


def test_mc_coverage_over_many_seeds():
    family = extremal_family(2, BernoulliParams(caps=(1.0, 1.0), alphas=(0.5, 0.25)))
    exact = exact_trace_moment(family, 3)
    hits = 0
    runs = 60
    for seed in range(runs):
        estimate, se = mc_trace_moment(family, 3, samples=4_000, seed=seed)
        if abs(estimate - exact) <= 4.0 * se:
            hits += 1
    assert hits >= int(0.95 * runs)


# Serialization -------------------------------------------------------------------

def test_json_round_trip_is_bitwise():
    member = sample_constrained_ensemble(3, 2, 1.3, 0.6, seed=21)
    family = EnsembleFamily(members=(member,))
    doc = family_to_json(family)
    text = json.dumps(doc, sort_keys=True)
    back = family_from_json(json.loads(text))
    assert back.dim == family.dim
    for orig, copy in zip(family.members, back.members):
        assert orig.probs == copy.probs
        assert orig.cap == copy.cap
        assert orig.alpha == copy.alpha
        for x, y in zip(orig.atoms, copy.atoms):
            assert np.array_equal(x.entries, y.entries)


def test_json_schema_shape():
    family = extremal_family(2, BernoulliParams(caps=(1.5,), alphas=(0.5,)))
    doc = family_to_json(family)
    assert doc["dim"] == 2
    member = doc["members"][0]
    assert member["L_cap"] == 1.5
    assert member["alpha_target"] == 0.5
    assert member["atoms"][0] == [1.5, 0.0, 0.0, 1.5]
    assert member["probs"] == [0.5, 0.5]
