"""Deterministic complex linear algebra and seeded random sampling.

Complex vectors and matrices are plain ``numpy`` arrays of dtype
``complex128``; the helpers here add the validation and the two numeric
primitives everything else is built on: a Hermitian positive-definite
solver and a counter-based random number generator whose output stream
is bit-identical for a given seed on every platform.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, DomainError, SingularMatrixError

# Pivots below this are treated as a numerically singular factorization.
PIVOT_TOLERANCE = 1e-12

# Max |A - A^H| tolerated when an argument is required to be Hermitian.
HERMITIAN_TOLERANCE = 1e-10

_MASK64 = 0xFFFFFFFFFFFFFFFF
# splitmix64 constants: stream increment (golden ratio) and the two
# multipliers of the Stafford "mix13" finalizer.
_GOLDEN = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB


def _mix64(z: int) -> int:
    z &= _MASK64
    z ^= z >> 30
    z = (z * _MIX_A) & _MASK64
    z ^= z >> 27
    z = (z * _MIX_B) & _MASK64
    z ^= z >> 31
    return z


class SeededRng:
    """Counter-based splitmix64 generator.

    Output ``k`` of a stream with seed ``s`` is ``mix64(s + (k+1)*GOLDEN)``
    (all arithmetic mod 2**64), so any stretch of the stream can be
    produced as one vectorized uint64 batch. The raw 64-bit stream is the
    cross-platform reproducibility contract; derived floats go through
    IEEE-754 double arithmetic only.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self.counter = 0

    def derive(self, index: int) -> "SeededRng":
        """Independent child stream for (seed, index); self is untouched.

        Used to give every trial / grid point its own private generator.
        """
        if index < 0:
            raise DomainError("derive index must be non-negative")
        return SeededRng(_mix64((self.seed + (index + 1) * _GOLDEN) & _MASK64))

    def raw64(self, n: int) -> np.ndarray:
        """Next ``n`` uint64 outputs of the stream."""
        if n < 0:
            raise DomainError("draw count must be non-negative")
        ks = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        z = np.uint64(self.seed) + ks * np.uint64(_GOLDEN)
        z ^= z >> np.uint64(30)
        z *= np.uint64(_MIX_A)
        z ^= z >> np.uint64(27)
        z *= np.uint64(_MIX_B)
        z ^= z >> np.uint64(31)
        return z

    def uniform(self, n: int) -> np.ndarray:
        """``n`` doubles uniform on [0, 1), using the top 53 bits."""
        return (self.raw64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def integers(self, bound: int, n: int | None = None):
        """Uniform integers in [0, bound) by modulo reduction.

        The modulo bias is bound/2**64, negligible for the small bounds
        (population sizes, gene counts) used here.
        """
        if bound <= 0:
            raise DomainError("bound must be positive")
        out = self.raw64(1 if n is None else n) % np.uint64(bound)
        return int(out[0]) if n is None else out.astype(np.int64)

    def normal(self, n: int) -> np.ndarray:
        """``n`` standard normal draws via the Box-Muller transform."""
        m = (n + 1) // 2
        u1 = self.uniform(m)
        u2 = self.uniform(m)
        # 1 - u1 lies in (0, 1], so the log is finite.
        radius = np.sqrt(-2.0 * np.log1p(-u1))
        angle = (2.0 * np.pi) * u2
        z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])
        return z[:n]


def gaussian_complex(n: int, variance: float, rng: SeededRng) -> np.ndarray:
    """``n`` i.i.d. circular complex Gaussians, zero mean, per-entry
    variance ``variance`` (split evenly between real and imaginary parts).
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    if variance < 0:
        raise DomainError("variance must be non-negative")
    z = rng.normal(2 * n)
    scale = np.sqrt(variance / 2.0)
    return scale * (z[:n] + 1j * z[n:])


def as_complex_vector(x, name: str = "vector") -> np.ndarray:
    v = np.asarray(x, dtype=np.complex128)
    if v.ndim != 1 or v.shape[0] == 0:
        raise DimensionError(f"{name} must be a non-empty 1-D array")
    return v


def as_complex_matrix(x, name: str = "matrix") -> np.ndarray:
    m = np.asarray(x, dtype=np.complex128)
    if m.ndim != 2 or 0 in m.shape:
        raise DimensionError(f"{name} must be a non-empty 2-D array")
    return m


def assert_finite(x, name: str = "array") -> None:
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{name} contains NaN or Inf entries")


def hermitian_deviation(a: np.ndarray) -> float:
    """Max absolute entry difference between ``a`` and its conjugate transpose."""
    a = as_complex_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError("matrix must be square")
    return float(np.abs(a - a.conj().T).max())


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOLERANCE) -> bool:
    return hermitian_deviation(a) <= tol


def hermitian_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``a @ x = b`` for Hermitian positive-definite ``a``.

    Uses an in-repo Cholesky factorization (no LAPACK) so results are
    reproducible bit-for-bit across runs; only the lower triangle of
    ``a`` is read. ``b`` may be a vector or a matrix of stacked
    right-hand sides.

    Raises:
        DimensionError: non-square ``a`` or mismatched ``b``.
        SingularMatrixError: a pivot fell below ``PIVOT_TOLERANCE``.
    """
    a = as_complex_matrix(a, "a")
    n = a.shape[0]
    if a.shape[1] != n:
        raise DimensionError(f"matrix must be square, got {a.shape}")
    b = np.asarray(b, dtype=np.complex128)
    vector_rhs = b.ndim == 1
    rhs = b[:, None] if vector_rhs else b
    if rhs.ndim != 2 or rhs.shape[0] != n:
        raise DimensionError(f"right-hand side shape {b.shape} does not match {n}x{n} matrix")

    lower = np.zeros((n, n), dtype=np.complex128)
    for j in range(n):
        row = lower[j, :j]
        pivot = a[j, j].real - np.real(row @ row.conj())
        if pivot <= PIVOT_TOLERANCE:
            raise SingularMatrixError(
                f"pivot {pivot:.3e} at column {j} below tolerance {PIVOT_TOLERANCE:.0e}"
            )
        diag = np.sqrt(pivot)
        lower[j, j] = diag
        if j + 1 < n:
            lower[j + 1 :, j] = (a[j + 1 :, j] - lower[j + 1 :, :j] @ row.conj()) / diag

    # Forward substitution L y = b, then back substitution L^H x = y.
    y = np.empty_like(rhs)
    for i in range(n):
        y[i] = (rhs[i] - lower[i, :i] @ y[:i]) / lower[i, i]
    x = np.empty_like(rhs)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - lower[i + 1 :, i].conj() @ x[i + 1 :]) / lower[i, i].conj()
    return x[:, 0] if vector_rhs else x


def outer_accumulate(acc: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Return ``acc + v v^H``; Hermitian symmetry is preserved."""
    acc = as_complex_matrix(acc, "acc")
    v = as_complex_vector(v, "v")
    n = v.shape[0]
    if acc.shape != (n, n):
        raise DimensionError(f"accumulator shape {acc.shape} does not match vector length {n}")
    return acc + np.outer(v, v.conj())
