"""Dense symmetric/PSD linear algebra.

Everything operates on exact-symmetric float64 matrices at desk scale
(n up to ~64). The eigensolver is a self-contained cyclic Jacobi sweep,
so results do not depend on an external LAPACK build; numpy is used for
storage and matrix products only. Traces are accumulated with exact
compensated summation (math.fsum) because downstream moment computations
raise them to powers up to 30.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import ConvergenceError, DimensionError, InvalidExponent, NotPSD

# Eigenvalues are accepted as nonnegative down to -PSD_TOL * (1 + opnorm).
PSD_TOL = 1e-10

_JACOBI_SWEEPS = 100
_JACOBI_REL_TOL = 1e-14


@dataclass(frozen=True)
class EigenDecomposition:
    """Spectral factorization A = Q diag(lam) Q^T.

    ``eigenvalues`` are in nondecreasing order; ``eigenvectors`` holds the
    matching orthonormal eigenvectors as columns.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.T

    def power(self, t: float) -> np.ndarray:
        """Q diag(clamp(lam)^t) Q^T with negative eigenvalues clamped to 0."""
        lam = np.maximum(self.eigenvalues, 0.0)
        q = self.eigenvectors
        m = (q * lam**t) @ q.T
        return 0.5 * (m + m.T)


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """Dense real symmetric n x n matrix.

    Construction symmetrizes the input as 0.5 * (M + M^T), which makes
    entries[i, j] == entries[j, i] hold exactly, and freezes the storage.
    The eigendecomposition is computed lazily and cached; instances are
    immutable and safe to share across threads.
    """

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise DimensionError(f"expected a square matrix, got shape {m.shape}")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def eig(self) -> EigenDecomposition:
        lam, q = _jacobi(self.entries)
        return EigenDecomposition(lam, q)

    @property
    def opnorm(self) -> float:
        """Operator (spectral) norm, the largest singular value."""
        lam = self.eig.eigenvalues
        return max(abs(float(lam[0])), abs(float(lam[-1])))

    def trace(self) -> float:
        return math.fsum(self.entries.diagonal().tolist())

    def min_eigenvalue(self) -> float:
        return float(self.eig.eigenvalues[0])

    def is_psd(self, tol: float = PSD_TOL) -> bool:
        return self.min_eigenvalue() >= -tol * (1.0 + self.opnorm)

    # Convenience constructors -------------------------------------------

    @staticmethod
    def identity(n: int) -> "SymMatrix":
        return SymMatrix(np.eye(n))

    @staticmethod
    def zeros(n: int) -> "SymMatrix":
        return SymMatrix(np.zeros((n, n)))

    @staticmethod
    def diagonal(values: Sequence[float]) -> "SymMatrix":
        return SymMatrix(np.diag(np.asarray(values, dtype=float)))

    @staticmethod
    def from_eigensystem(q: np.ndarray, lam: np.ndarray) -> "SymMatrix":
        """Build Q diag(lam) Q^T and seed the eigendecomposition cache.

        Used by samplers that construct matrices spectrally and already
        know (Q, lam); the cache is stored sorted, matching ``eig``.
        """
        lam = np.asarray(lam, dtype=float)
        q = np.asarray(q, dtype=float)
        order = np.argsort(lam, kind="stable")
        lam = np.ascontiguousarray(lam[order])
        q = np.ascontiguousarray(q[:, order])
        m = SymMatrix((q * lam) @ q.T)
        m.__dict__["eig"] = EigenDecomposition(lam, q)
        return m

    # Arithmetic ----------------------------------------------------------

    def __add__(self, other: "SymMatrix") -> "SymMatrix":
        if not isinstance(other, SymMatrix):
            return NotImplemented
        if other.dim != self.dim:
            raise DimensionError(f"dim mismatch: {self.dim} vs {other.dim}")
        return SymMatrix(self.entries + other.entries)

    def __mul__(self, scalar: float) -> "SymMatrix":
        return SymMatrix(self.entries * float(scalar))

    __rmul__ = __mul__


def _jacobi(a_in: np.ndarray, max_sweeps: int = _JACOBI_SWEEPS):
    """Cyclic Jacobi diagonalization of a symmetric matrix.

    Rotations run over the strict upper triangle in row order until the
    off-diagonal Frobenius mass falls below 1e-14 * ||A||_F or the sweep
    budget is exhausted. Plain-float inner loops beat vectorized updates
    by a wide margin at the target sizes (n <= 64).
    """
    n = a_in.shape[0]
    if n == 1:
        return np.array([float(a_in[0, 0])]), np.eye(1)

    peak = float(np.max(np.abs(a_in)))
    if peak == 0.0:
        return np.zeros(n), np.eye(n)
    # Power-of-two prescaling keeps entry squares finite for entries near
    # the overflow threshold; binary scaling is exact, so results for
    # ordinary magnitudes are unchanged bit for bit.
    scale = math.ldexp(1.0, math.frexp(peak)[1])
    a_in = a_in / scale
    fro = math.sqrt(math.fsum((a_in.ravel() ** 2).tolist()))
    tol = _JACOBI_REL_TOL * fro
    a = [[float(x) for x in row] for row in a_in]
    v = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]

    for _ in range(max_sweeps):
        off2 = 0.0
        for i in range(n - 1):
            ai = a[i]
            for j in range(i + 1, n):
                off2 += ai[j] * ai[j]
        if math.sqrt(2.0 * off2) <= tol:
            break
        for p in range(n - 1):
            ap = a[p]
            for q in range(p + 1, n):
                apq = ap[q]
                if apq == 0.0:
                    continue
                aq = a[q]
                tau = (aq[q] - ap[p]) / (2.0 * apq)
                if abs(tau) > 1e150:
                    t = 1.0 / (2.0 * tau)
                else:
                    t = (1.0 if tau >= 0.0 else -1.0) / (
                        abs(tau) + math.sqrt(1.0 + tau * tau)
                    )
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                ap[p] -= t * apq
                aq[q] += t * apq
                ap[q] = 0.0
                aq[p] = 0.0
                for k in range(n):
                    if k == p or k == q:
                        continue
                    ak = a[k]
                    akp = ak[p]
                    akq = ak[q]
                    nkp = c * akp - s * akq
                    nkq = s * akp + c * akq
                    ak[p] = nkp
                    ak[q] = nkq
                    ap[k] = nkp
                    aq[k] = nkq
                for k in range(n):
                    vk = v[k]
                    vkp = vk[p]
                    vkq = vk[q]
                    vk[p] = c * vkp - s * vkq
                    vk[q] = s * vkp + c * vkq
    else:
        off = math.sqrt(
            2.0
            * math.fsum(
                a[i][j] * a[i][j] for i in range(n - 1) for j in range(i + 1, n)
            )
        )
        raise ConvergenceError(
            f"Jacobi sweep budget ({max_sweeps}) exhausted on a {n}x{n} matrix: "
            f"off-diagonal norm {off:.3e} above threshold {tol:.3e}"
        )

    lam = np.array([a[i][i] for i in range(n)]) * scale
    q = np.array(v)
    order = np.argsort(lam, kind="stable")
    return np.ascontiguousarray(lam[order]), np.ascontiguousarray(q[:, order])


def eigh(a: SymMatrix) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix (cached on the instance)."""
    return a.eig


def psd_power(a: SymMatrix, t: float) -> SymMatrix:
    """Fractional matrix power A^t of a PSD matrix, t >= 0.

    Eigenvalues below the PSD tolerance raise NotPSD; tiny negatives from
    roundoff are clamped to 0 before powering.
    """
    if t < 0:
        raise InvalidExponent(f"psd_power requires t >= 0, got {t}")
    _require_psd(a)
    return SymMatrix(a.eig.power(float(t)))


def psd_trace_power(a: SymMatrix, t: float) -> float:
    """tr(A^t) for PSD A, evaluated on the (clamped) spectrum."""
    if t < 0:
        raise InvalidExponent(f"psd_trace_power requires t >= 0, got {t}")
    _require_psd(a)
    lam = np.maximum(a.eig.eigenvalues, 0.0)
    return math.fsum((lam ** float(t)).tolist())


def _require_psd(a: SymMatrix) -> None:
    lo = a.min_eigenvalue()
    bound = -PSD_TOL * (1.0 + a.opnorm)
    if lo < bound:
        raise NotPSD(f"min eigenvalue {lo:.6e} below tolerance {bound:.6e}")


def schatten_norm(a: SymMatrix, q: float) -> float:
    """Schatten q-norm (singular-value l_q norm) of a symmetric matrix.

    q = inf gives the operator norm; q = 1 the trace norm; q = 2 Frobenius.
    """
    sigma = np.abs(a.eig.eigenvalues)
    return schatten_from_singulars(sigma, q)


def schatten_from_singulars(sigma: np.ndarray, q: float) -> float:
    if math.isnan(q) or q < 1:
        raise InvalidExponent(f"Schatten exponent must be >= 1 or inf, got {q}")
    top = float(np.max(sigma)) if sigma.size else 0.0
    if math.isinf(q) or top == 0.0:
        return top
    # Factor out the largest singular value so sigma**q cannot overflow.
    scaled = (sigma / top) ** q
    return top * math.fsum(scaled.tolist()) ** (1.0 / q)


def singular_values(m: np.ndarray) -> np.ndarray:
    """Singular values of a general square matrix, via the spectrum of M^T M."""
    m = np.asarray(m, dtype=float)
    gram = SymMatrix(m.T @ m)
    lam = np.maximum(gram.eig.eigenvalues, 0.0)
    return np.sqrt(lam)


def trace_product(factors: Sequence[SymMatrix]) -> float:
    """tr(F1 F2 ... Fk); invariant under cyclic rotation of the factors."""
    if not factors:
        raise DimensionError("trace_product requires at least one factor")
    dims = {f.dim for f in factors}
    if len(dims) != 1:
        raise DimensionError(f"factor dims differ: {sorted(dims)}")
    if len(factors) == 1:
        return factors[0].trace()
    prod = reduce(np.matmul, (f.entries for f in factors))
    return math.fsum(prod.diagonal().tolist())


def clip_spectrum(a: SymMatrix, lo: float, hi: float) -> SymMatrix:
    """Clamp the spectrum of A into [lo, hi], keeping the eigenbasis."""
    e = a.eig
    lam = np.clip(e.eigenvalues, lo, hi)
    return SymMatrix.from_eigensystem(e.eigenvectors, lam)


def batched_trace_power(stack: np.ndarray, p: int) -> np.ndarray:
    """tr(S^p) for each matrix S in a (k, n, n) stack, p >= 1 integer.

    Binary exponentiation over batched matmul; used on exact product
    supports where k can reach 10^6.
    """
    if p < 1 or p != int(p):
        raise InvalidExponent(f"integer power >= 1 required, got {p}")
    p = int(p)
    result = None
    base = stack
    while True:
        if p & 1:
            result = base if result is None else result @ base
        p >>= 1
        if p == 0:
            break
        base = base @ base
    return np.einsum("kii->k", result)


def random_rotation(n: int, rng: np.random.Generator) -> np.ndarray:
    """Orthogonal matrix from composed random plane rotations."""
    q = np.eye(n)
    for i in range(n - 1):
        for j in range(i + 1, n):
            theta = rng.uniform(0.0, 2.0 * math.pi)
            c, s = math.cos(theta), math.sin(theta)
            qi = q[:, i].copy()
            qj = q[:, j].copy()
            q[:, i] = c * qi + s * qj
            q[:, j] = -s * qi + c * qj
    return q


def random_spectral(
    n: int, rng: np.random.Generator, lo: float, hi: float
) -> SymMatrix:
    """Random symmetric matrix Q^T diag(d) Q with d uniform on [lo, hi].

    The eigendecomposition is known by construction and seeded into the
    cache, so norms and powers of sampled matrices cost no extra sweeps.
    """
    q = random_rotation(n, rng)
    d = rng.uniform(lo, hi, size=n)
    return SymMatrix.from_eigensystem(q, d)


def random_psd(n: int, rng: np.random.Generator, scale: float = 1.0) -> SymMatrix:
    """Random PSD matrix with spectrum uniform on [0, scale]."""
    return random_spectral(n, rng, 0.0, scale)
