"""Linear receivers for user 1: closed-form MMSE, reduced-parameter cost
machinery, and the LMS-family adaptive baselines.

Two length-2M filters recover the odd and even symbol of each block from
the stacked observation. At the minimum-MSE solution the filter halves
are tied by a conjugate symmetry: writing ``w_odd = [top; bottom]`` and
``w_even`` likewise,

    bottom(w_odd) = conj(top(w_even)),  bottom(w_even) = -conj(top(w_odd)),

so the pair of top halves (M complex weights per filter) determines both
filters. :class:`WeightPair` carries those reduced unknowns and
:func:`expand_weights` rebuilds the full filters; the reduced cost and
its conjugate (Wirtinger) gradient are expressed in the pair alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .airlink import SignatureSet
from .errors import DimensionError, DomainError
from .numerics import as_complex_matrix, hermitian_solve


@dataclass(frozen=True)
class AutocorrMatrix:
    """Autocorrelation of the stacked observation with its quarter blocks.

    For the analytic construction the blocks satisfy
    ``lower_right = conj(upper_left)`` and
    ``lower_left = -conj(upper_right)`` exactly.
    """

    matrix: np.ndarray  # (2M, 2M) complex

    def __post_init__(self):
        m = as_complex_matrix(self.matrix, "autocorrelation")
        if m.shape[0] != m.shape[1] or m.shape[0] % 2 != 0:
            raise DimensionError(f"autocorrelation must be square with even size, got {m.shape}")

    @property
    def half(self) -> int:
        return self.matrix.shape[0] // 2

    @property
    def upper_left(self) -> np.ndarray:
        return self.matrix[: self.half, : self.half]

    @property
    def upper_right(self) -> np.ndarray:
        return self.matrix[: self.half, self.half :]

    @property
    def lower_left(self) -> np.ndarray:
        return self.matrix[self.half :, : self.half]

    @property
    def lower_right(self) -> np.ndarray:
        return self.matrix[self.half :, self.half :]


@dataclass(frozen=True)
class FullWeights:
    """The two full-length filters; ``odd`` detects the odd symbol."""

    odd: np.ndarray  # (2M,)
    even: np.ndarray  # (2M,)


@dataclass(frozen=True)
class WeightPair:
    """Reduced unknowns: the top halves of the odd and even filter."""

    top_odd: np.ndarray  # (M,)
    top_even: np.ndarray  # (M,)

    @property
    def size(self) -> int:
        return self.top_odd.shape[0]


@dataclass(frozen=True)
class TrainingBatch:
    """Known (observation, desired symbol pair) samples for user 1."""

    received: np.ndarray  # (blocks, 2M)
    desired: np.ndarray  # (blocks, 2), odd symbol in column 0

    def __post_init__(self):
        r = np.asarray(self.received)
        d = np.asarray(self.desired)
        if r.ndim != 2 or r.shape[0] == 0:
            raise DomainError("training batch must contain at least one block")
        if d.shape != (r.shape[0], 2):
            raise DimensionError(f"desired shape {d.shape} does not match {(r.shape[0], 2)}")

    def __len__(self) -> int:
        return self.received.shape[0]


def analytic_autocorrelation(signatures: SignatureSet, noise_variance: float) -> AutocorrMatrix:
    """Exact autocorrelation for unit-power uncorrelated symbols:
    the sum of both signature outer products per user plus the noise floor.
    """
    if noise_variance < 0:
        raise DomainError("noise_variance must be non-negative")
    n = 2 * signatures.subcarriers
    r = (
        np.einsum("ui,uj->ij", signatures.odd, signatures.odd.conj())
        + np.einsum("ui,uj->ij", signatures.even, signatures.even.conj())
        + noise_variance * np.eye(n, dtype=np.complex128)
    )
    return AutocorrMatrix(matrix=r)


def verify_block_symmetry(r: AutocorrMatrix) -> float:
    """Max violation of the quarter-block conjugate symmetry."""
    lower_right = float(np.abs(r.lower_right - np.conj(r.upper_left)).max())
    lower_left = float(np.abs(r.lower_left + np.conj(r.upper_right)).max())
    return max(lower_right, lower_left)


def mmse_weights(r: AutocorrMatrix, sig_odd: np.ndarray, sig_even: np.ndarray) -> FullWeights:
    """Closed-form minimum-MSE filters: each solves R w = signature."""
    stacked = np.column_stack([sig_odd, sig_even])
    solved = hermitian_solve(r.matrix, stacked)
    return FullWeights(odd=solved[:, 0], even=solved[:, 1])


def mmse_cost(r: AutocorrMatrix, sig_odd: np.ndarray, sig_even: np.ndarray) -> float:
    """Minimum achievable total MSE over both symbols:
    (1 - sig_odd^H R^-1 sig_odd) + (1 - sig_even^H R^-1 sig_even).
    """
    stacked = np.column_stack([sig_odd, sig_even])
    solved = hermitian_solve(r.matrix, stacked)
    q_odd = np.vdot(sig_odd, solved[:, 0])
    q_even = np.vdot(sig_even, solved[:, 1])
    return float((1.0 - q_odd.real) + (1.0 - q_even.real))


def expand_weights(pair: WeightPair) -> FullWeights:
    """Rebuild both full filters from the reduced pair (exact identity)."""
    odd = np.concatenate([pair.top_odd, np.conj(pair.top_even)])
    even = np.concatenate([pair.top_even, -np.conj(pair.top_odd)])
    return FullWeights(odd=odd, even=even)


def extract_pair(weights: FullWeights) -> WeightPair:
    """Inverse of :func:`expand_weights` (top halves of both filters)."""
    m = weights.odd.shape[0] // 2
    return WeightPair(top_odd=weights.odd[:m].copy(), top_even=weights.even[:m].copy())


def filter_outputs(weights: FullWeights, received: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-block filter outputs ``w^H r`` for a (blocks, 2M) array."""
    received = np.asarray(received, dtype=np.complex128)
    return received @ weights.odd.conj(), received @ weights.even.conj()


def full_cost(weights: FullWeights, batch: TrainingBatch) -> float:
    """Sample-average total squared error of both filters over the batch."""
    y_odd, y_even = filter_outputs(weights, batch.received)
    e_odd = y_odd - batch.desired[:, 0]
    e_even = y_even - batch.desired[:, 1]
    return float(np.mean(np.abs(e_odd) ** 2) + np.mean(np.abs(e_even) ** 2))


def reduced_cost_parts(pair: WeightPair, batch: TrainingBatch) -> tuple[float, float]:
    """The two summands of the reduced cost (odd-symbol MSE, even-symbol MSE)."""
    weights = expand_weights(pair)
    y_odd, y_even = filter_outputs(weights, batch.received)
    c_odd = float(np.mean(np.abs(y_odd - batch.desired[:, 0]) ** 2))
    c_even = float(np.mean(np.abs(y_even - batch.desired[:, 1]) ** 2))
    return c_odd, c_even


def reduced_cost(pair: WeightPair, batch: TrainingBatch) -> float:
    """Sample-average cost as a function of the reduced pair alone."""
    c_odd, c_even = reduced_cost_parts(pair, batch)
    return c_odd + c_even


def _reduce_gradient(
    g_odd: np.ndarray, g_even: np.ndarray, m: int
) -> tuple[np.ndarray, np.ndarray]:
    """Chain rule from full-filter conjugate gradients to the reduced pair."""
    grad_top_odd = g_odd[:m] - np.conj(g_even[m:])
    grad_top_even = np.conj(g_odd[m:]) + g_even[:m]
    return grad_top_odd, grad_top_even


def reduced_cost_gradient(
    pair: WeightPair, batch: TrainingBatch
) -> tuple[np.ndarray, np.ndarray]:
    """Conjugate (Wirtinger) gradient of :func:`reduced_cost`.

    Returns the derivative with respect to the conjugates of the two top
    halves, so a step ``pair - mu * gradient`` descends the cost.
    """
    weights = expand_weights(pair)
    y_odd, y_even = filter_outputs(weights, batch.received)
    e_odd = y_odd - batch.desired[:, 0]
    e_even = y_even - batch.desired[:, 1]
    n = len(batch)
    g_odd = batch.received.T @ np.conj(e_odd) / n
    g_even = batch.received.T @ np.conj(e_even) / n
    return _reduce_gradient(g_odd, g_even, pair.size)


def expected_cost(
    weights: FullWeights, r: AutocorrMatrix, sig_odd: np.ndarray, sig_even: np.ndarray
) -> float:
    """Population (expectation) MSE of both filters under the model:
    ``w^H R w - 2 Re(w^H f) + 1`` summed over the two filters.
    """
    total = 0.0
    for w, f in ((weights.odd, sig_odd), (weights.even, sig_even)):
        quad = np.vdot(w, r.matrix @ w).real
        total += quad - 2.0 * np.vdot(w, f).real + 1.0
    return float(total)


def expected_reduced_cost(
    pair: WeightPair, r: AutocorrMatrix, sig_odd: np.ndarray, sig_even: np.ndarray
) -> float:
    return expected_cost(expand_weights(pair), r, sig_odd, sig_even)


def expected_reduced_cost_gradient(
    pair: WeightPair, r: AutocorrMatrix, sig_odd: np.ndarray, sig_even: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Exact-expectation counterpart of :func:`reduced_cost_gradient`."""
    weights = expand_weights(pair)
    g_odd = r.matrix @ weights.odd - sig_odd
    g_even = r.matrix @ weights.even - sig_even
    return _reduce_gradient(g_odd, g_even, pair.size)


def lms_step(
    weights: FullWeights, received: np.ndarray, desired: np.ndarray, mu: float
) -> FullWeights:
    """One unconstrained stochastic-gradient update of both filters.

    ``w <- w + mu * r * conj(d - w^H r)`` applied independently to the
    odd and even filter; no symmetry between them is enforced.
    """
    if mu <= 0:
        raise DomainError("mu must be positive")
    received = np.asarray(received, dtype=np.complex128)
    e_odd = desired[0] - np.vdot(weights.odd, received)
    e_even = desired[1] - np.vdot(weights.even, received)
    return FullWeights(
        odd=weights.odd + mu * received * np.conj(e_odd),
        even=weights.even + mu * received * np.conj(e_even),
    )


def fast_lms_step(
    pair: WeightPair, received: np.ndarray, desired: np.ndarray, mu_c: float
) -> WeightPair:
    """One constrained stochastic-gradient update of the reduced pair.

    Descends the single-sample reduced cost, so the expanded filters keep
    the conjugate symmetry after every step by construction.
    """
    if mu_c <= 0:
        raise DomainError("mu_c must be positive")
    received = np.asarray(received, dtype=np.complex128)
    weights = expand_weights(pair)
    e_odd = np.vdot(weights.odd, received) - desired[0]
    e_even = np.vdot(weights.even, received) - desired[1]
    g_odd = received * np.conj(e_odd)
    g_even = received * np.conj(e_even)
    grad_top_odd, grad_top_even = _reduce_gradient(g_odd, g_even, pair.size)
    return WeightPair(
        top_odd=pair.top_odd - mu_c * grad_top_odd,
        top_even=pair.top_even - mu_c * grad_top_even,
    )


def detect(weights: FullWeights, received: np.ndarray) -> np.ndarray:
    """Hard QPSK decisions for one block: bits (2, 2), one row per symbol.

    Bit 0 of a symbol is 0 when the filter output's real part is
    non-negative, bit 1 likewise for the imaginary part (axis ties go to
    the positive half-plane).
    """
    y_odd = np.vdot(weights.odd, received)
    y_even = np.vdot(weights.even, received)
    return np.array(
        [
            [y_odd.real < 0, y_odd.imag < 0],
            [y_even.real < 0, y_even.imag < 0],
        ],
        dtype=np.uint8,
    )


def detect_batch(weights: FullWeights, received: np.ndarray) -> np.ndarray:
    """Vectorized :func:`detect` over (blocks, 2M); returns (blocks, 2, 2)."""
    y_odd, y_even = filter_outputs(weights, received)
    bits = np.empty((received.shape[0], 2, 2), dtype=np.uint8)
    bits[:, 0, 0] = y_odd.real < 0
    bits[:, 0, 1] = y_odd.imag < 0
    bits[:, 1, 0] = y_even.real < 0
    bits[:, 1, 1] = y_even.imag < 0
    return bits


def zero_weights(subcarriers: int) -> FullWeights:
    z = np.zeros(2 * subcarriers, dtype=np.complex128)
    return FullWeights(odd=z.copy(), even=z.copy())


def zero_pair(subcarriers: int) -> WeightPair:
    z = np.zeros(subcarriers, dtype=np.complex128)
    return WeightPair(top_odd=z.copy(), top_even=z.copy())
