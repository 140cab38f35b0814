"""Algebraic property suites behind the ``verify`` and ``selftest``
commands.

Each suite sweeps randomized instances of one structural identity of the
receiver model and reports the worst violation against its tolerance:
the stacked two-interval observation model, the quarter-block conjugate
symmetry of the autocorrelation, the conjugate relationship between the
two optimum filters, and the finite-difference check of the reduced-cost
gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .airlink import (
    SystemConfig,
    build_signatures,
    draw_symbols,
    generate_channel,
    generate_spreading_codes,
    snr_to_noise_variance,
    synthesize_batch,
    synthesize_received,
    two_interval_oracle,
)
from .ga import Individual, crossover, flip_component
from .numerics import SeededRng, gaussian_complex, hermitian_solve
from .receivers import (
    TrainingBatch,
    WeightPair,
    analytic_autocorrelation,
    expand_weights,
    extract_pair,
    mmse_cost,
    mmse_weights,
    reduced_cost,
    reduced_cost_gradient,
    verify_block_symmetry,
)

STACKING_TOLERANCE = 1e-12
BLOCK_SYMMETRY_TOLERANCE = 1e-10
WEIGHT_RELATION_TOLERANCE = 1e-8
GRADIENT_TOLERANCE = 1e-5


@dataclass(frozen=True)
class CheckResult:
    name: str
    instances: int
    max_violation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"[{status}] {self.name}: max violation {self.max_violation:.3e} "
            f"(tolerance {self.tolerance:.0e}, {self.instances} instances)"
        )


def _random_instance(rng: SeededRng, subcarriers: int, users: int, paths: int | None = None):
    cfg = SystemConfig(
        subcarriers=subcarriers,
        users=users,
        paths=paths if paths is not None else min(3, subcarriers),
        noise_variance=0.1,
        master_seed=0,
    )
    codes = generate_spreading_codes(cfg, rng)
    channel = generate_channel(cfg, rng)
    return cfg, codes, channel, build_signatures(cfg, codes, channel)


def stacking_equivalence_suite(seed: int, instances: int = 1000) -> CheckResult:
    """Direct synthesis versus the independent two-interval simulation."""
    rng = SeededRng(seed)
    sizes = (2, 4, 8)
    user_counts = (1, 2, 3)
    worst = 0.0
    for i in range(instances):
        sub = sizes[i % len(sizes)]
        users = user_counts[(i // len(sizes)) % len(user_counts)]
        inst = rng.derive(i)
        cfg, codes, channel, signatures = _random_instance(inst, sub, users)
        pairs = draw_symbols(users, inst)
        first = gaussian_complex(sub, 0.1, inst)
        second = gaussian_complex(sub, 0.1, inst)
        stacked_noise = np.concatenate([first, np.conj(second)])
        direct = synthesize_received(signatures, pairs, stacked_noise)
        oracle = two_interval_oracle(codes, channel, pairs, first, second)
        worst = max(worst, float(np.abs(direct - oracle).max()))
    return CheckResult("stacking equivalence", instances, worst, STACKING_TOLERANCE)


def block_symmetry_suite(seed: int, instances: int = 500) -> CheckResult:
    """Quarter-block conjugate symmetry of the analytic autocorrelation."""
    rng = SeededRng(seed)
    sizes = (2, 4, 8)
    user_counts = (1, 2, 4)
    worst = 0.0
    for i in range(instances):
        sub = sizes[i % len(sizes)]
        users = user_counts[(i // len(sizes)) % len(user_counts)]
        inst = rng.derive(i)
        _, _, _, signatures = _random_instance(inst, sub, users)
        noise_variance = (0.01, 0.1, 1.0)[i % 3]
        autocorr = analytic_autocorrelation(signatures, noise_variance)
        worst = max(worst, verify_block_symmetry(autocorr))
    return CheckResult("autocorrelation block symmetry", instances, worst, BLOCK_SYMMETRY_TOLERANCE)


def weight_relationship_suite(seed: int, instances: int = 500) -> CheckResult:
    """The unconstrained optimum filters satisfy the conjugate pairing
    between their halves, relative to the weight magnitude."""
    rng = SeededRng(seed)
    sizes = (2, 4, 8)
    user_counts = (1, 2, 4)
    variances = (0.01, 0.1, 1.0)
    worst = 0.0
    for i in range(instances):
        sub = sizes[i % len(sizes)]
        users = user_counts[(i // len(sizes)) % len(user_counts)]
        inst = rng.derive(i)
        _, _, _, signatures = _random_instance(inst, sub, users)
        autocorr = analytic_autocorrelation(signatures, variances[i % 3])
        weights = mmse_weights(autocorr, signatures.odd[0], signatures.even[0])
        scale = max(float(np.abs(weights.odd).max()), float(np.abs(weights.even).max()))
        bottom_odd = float(np.abs(weights.odd[sub:] - np.conj(weights.even[:sub])).max())
        bottom_even = float(np.abs(weights.even[sub:] + np.conj(weights.odd[:sub])).max())
        worst = max(worst, max(bottom_odd, bottom_even) / scale)
    return CheckResult("optimum weight relationship", instances, worst, WEIGHT_RELATION_TOLERANCE)


def gradient_check_suite(seed: int, probes: int = 200, step: float = 1e-5) -> CheckResult:
    """Analytic conjugate gradient versus central finite differences.

    For a real cost, the derivative along the real axis of one weight is
    twice the real part of the conjugate gradient, and along the
    imaginary axis twice its imaginary part.
    """
    rng = SeededRng(seed)
    worst = 0.0
    for i in range(probes):
        inst = rng.derive(i)
        cfg, _, _, signatures = _random_instance(inst, 2, 1 + (i % 2))
        blocks = 8
        pairs = draw_symbols(blocks * cfg.users, inst).reshape(blocks, cfg.users, 2)
        noise = gaussian_complex(blocks * 2 * cfg.subcarriers, 0.1, inst).reshape(blocks, -1)
        batch = TrainingBatch(
            received=synthesize_batch(signatures, pairs, noise), desired=pairs[:, 0, :]
        )
        pair = WeightPair(
            top_odd=gaussian_complex(cfg.subcarriers, 1.0, inst),
            top_even=gaussian_complex(cfg.subcarriers, 1.0, inst),
        )
        grad_odd, grad_even = reduced_cost_gradient(pair, batch)
        scale = max(float(np.abs(grad_odd).max()), float(np.abs(grad_even).max()))

        def perturbed(delta_odd, delta_even):
            return reduced_cost(
                WeightPair(pair.top_odd + delta_odd, pair.top_even + delta_even), batch
            )

        m = cfg.subcarriers
        for grad, which in ((grad_odd, 0), (grad_even, 1)):
            for j in range(m):
                for axis in (1.0, 1j):
                    delta = np.zeros(m, dtype=np.complex128)
                    delta[j] = axis * step
                    d_odd = delta if which == 0 else np.zeros(m, dtype=np.complex128)
                    d_even = delta if which == 1 else np.zeros(m, dtype=np.complex128)
                    fd = (perturbed(d_odd, d_even) - perturbed(-d_odd, -d_even)) / (2 * step)
                    analytic = 2 * (grad[j].real if axis == 1.0 else grad[j].imag)
                    worst = max(worst, abs(fd - analytic) / scale)
    return CheckResult("reduced-cost gradient vs finite differences", probes, worst, GRADIENT_TOLERANCE)


def verification_suites(seed: int) -> list[CheckResult]:
    """All four property suites at their standard instance counts."""
    return [
        stacking_equivalence_suite(seed),
        block_symmetry_suite(seed + 1),
        weight_relationship_suite(seed + 2),
        gradient_check_suite(seed + 3),
    ]


def selftest_suite(seed: int) -> list[CheckResult]:
    """Small exact oracles on hand-checkable instances."""
    results: list[CheckResult] = []
    rng = SeededRng(seed)

    # Flat channel: the stacked signatures reduce to the codes themselves.
    cfg = SystemConfig(subcarriers=2, users=1, paths=1, noise_variance=0.1, master_seed=0)
    codes = generate_spreading_codes(cfg, rng.derive(0))
    channel_flat = _flat_channel(cfg)
    signatures = build_signatures(cfg, codes, channel_flat)
    dev = float(np.abs(signatures.antenna - codes).max())
    results.append(CheckResult("flat channel signature identity", 1, dev, 1e-15))

    # Single-symbol pick-off through both synthesis paths.
    pairs = np.array([[1.0 + 0j, 0.0 + 0j]])
    zero = np.zeros(4, dtype=np.complex128)
    direct = synthesize_received(signatures, pairs, zero)
    expected = np.concatenate([codes[0, 0], np.conj(codes[0, 1])])
    results.append(
        CheckResult("odd-symbol pick-off", 1, float(np.abs(direct - expected).max()), 1e-15)
    )
    oracle = two_interval_oracle(codes, channel_flat, pairs, zero[:2], zero[:2])
    results.append(
        CheckResult("two-interval pick-off", 1, float(np.abs(oracle - expected).max()), 1e-15)
    )

    # Identity and diagonal solves.
    eye = np.eye(2, dtype=np.complex128)
    x = hermitian_solve(eye, np.array([1.0, 2j]))
    results.append(
        CheckResult("identity solve", 1, float(np.abs(x - np.array([1.0, 2j])).max()), 0.0)
    )
    diag = np.diag([2.0 + 0j, 4.0 + 0j])
    x = hermitian_solve(diag, np.array([2.0 + 0j, 2.0 + 0j]))
    results.append(
        CheckResult("diagonal solve", 1, float(np.abs(x - np.array([1.0, 0.5])).max()), 1e-15)
    )

    # Closed-form weights against a dense reference inverse.
    inst = rng.derive(1)
    _, _, _, sigs = _random_instance(inst, 4, 2)
    autocorr = analytic_autocorrelation(sigs, 0.1)
    weights = mmse_weights(autocorr, sigs.odd[0], sigs.even[0])
    reference = np.linalg.solve(autocorr.matrix, sigs.odd[0])
    results.append(
        CheckResult(
            "hermitian solve vs dense reference",
            1,
            float(np.abs(weights.odd - reference).max()),
            1e-10,
        )
    )

    # Expansion round trip and the cost floor identity.
    pair = extract_pair(weights)
    rebuilt = extract_pair(expand_weights(pair))
    round_trip = max(
        float(np.abs(rebuilt.top_odd - pair.top_odd).max()),
        float(np.abs(rebuilt.top_even - pair.top_even).max()),
    )
    results.append(CheckResult("weight pair round trip", 1, round_trip, 0.0))

    floor = mmse_cost(autocorr, sigs.odd[0], sigs.even[0])
    from .receivers import expected_reduced_cost

    attained = expected_reduced_cost(pair, autocorr, sigs.odd[0], sigs.even[0])
    results.append(CheckResult("reduced pair attains cost floor", 1, abs(attained - floor), 1e-10))

    # Crossover split bookkeeping and the mutation involution.
    genes_a = gaussian_complex(8, 1.0, rng)
    genes_b = gaussian_complex(8, 1.0, rng)
    child_a, child_b = crossover(Individual(genes_a), Individual(genes_b), 0.75, rng)
    split_ok = float(
        np.abs(np.concatenate([genes_a[:6], genes_b[6:]]) - child_a.genes).max()
        + np.abs(np.concatenate([genes_b[:6], genes_a[6:]]) - child_b.genes).max()
    )
    results.append(CheckResult("crossover split 3/4", 1, split_ok, 0.0))
    flipped = flip_component(flip_component(genes_a, 3, 1), 3, 1)
    results.append(
        CheckResult("mutation involution", 1, float(np.abs(flipped - genes_a).max()), 0.0)
    )

    # Noise-variance conversion spot values.
    dev = max(
        abs(snr_to_noise_variance(0.0) - 1.0),
        abs(snr_to_noise_variance(10.0) - 0.1),
        abs(snr_to_noise_variance(3.0) - 10.0 ** (-0.3)),
    )
    results.append(CheckResult("snr conversion", 3, dev, 1e-15))
    return results


def _flat_channel(cfg: SystemConfig):
    from .airlink import ChannelRealization

    taps = np.zeros((cfg.users, 2, cfg.paths), dtype=np.complex128)
    taps[:, :, 0] = 1.0
    return ChannelRealization.from_taps(taps, cfg.subcarriers)
