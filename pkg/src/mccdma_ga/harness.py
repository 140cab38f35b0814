"""Experiment runner: seeded learning-curve and error-rate studies.

Two studies are produced as exportable curve data: training MSE versus
cycle count for every receiver, and bit error rate of user 1 versus the
nominal SNR. Each trial fixes one realization of codes and channels,
derives private random streams for training, held-out and payload data,
and runs all receivers on identical inputs; curves aggregate the
per-trial values by the median.

Power convention: spreading codes as generated carry unit-magnitude
chips (squared norm M per code). By default the runner rescales each
code to unit energy before building signatures, which keeps the classic
step sizes of the stochastic-gradient baselines inside their stability
region and aligns the nominal SNR axis with the effective per-symbol
SNR. Set ``unit_energy_codes`` to false for the raw chip scaling; the
choice is recorded in every output file.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .airlink import (
    ChannelRealization,
    SignatureSet,
    SystemConfig,
    build_signatures,
    draw_noise,
    draw_symbol_bits,
    draw_symbols,
    generate_channel,
    generate_spreading_codes,
    snr_to_noise_variance,
    symbols_from_bits,
    synthesize_batch,
)
from .errors import ConfigError
from .ga import GaConfig, run_ga, with_seed
from .numerics import SeededRng
from .receivers import (
    AutocorrMatrix,
    FullWeights,
    TrainingBatch,
    analytic_autocorrelation,
    detect_batch,
    expand_weights,
    fast_lms_step,
    full_cost,
    lms_step,
    mmse_weights,
    zero_pair,
    zero_weights,
)

SNR_CONVENTION = "SNR(dB) = 10*log10(E|b|^2 / noise_variance), unit symbol energy, unit average channel gain"

# Ceiling applied to recorded MSE values so a diverged adaptive run stays
# finite and plottable instead of overflowing to inf.
MSE_CLIP = 1e30


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a curve run needs; all fields have workable defaults."""

    system: SystemConfig = field(default_factory=SystemConfig)
    ga: GaConfig = field(default_factory=GaConfig)
    lms_mu: float = 0.01
    fast_lms_mu: tuple[float, ...] = (0.02, 0.01)
    snr_grid_db: tuple[float, ...] = (0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20)
    trials: int = 50
    cycles: int = 500
    fitness_blocks: int = 64
    holdout_blocks: int = 256
    payload_blocks: int = 100000
    unit_energy_codes: bool = True
    output: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError(f"trials must be at least 1, got {self.trials}")
        if self.cycles < 1:
            raise ConfigError(f"cycles must be at least 1, got {self.cycles}")
        if self.lms_mu <= 0:
            raise ConfigError(f"lms_mu must be positive, got {self.lms_mu}")
        if any(mu <= 0 for mu in self.fast_lms_mu):
            raise ConfigError(f"fast_lms_mu entries must be positive, got {self.fast_lms_mu}")
        if self.fitness_blocks < 1 or self.holdout_blocks < 1 or self.payload_blocks < 1:
            raise ConfigError("block counts must be at least 1")


@dataclass(frozen=True)
class CurveData:
    """One exportable curve family: shared x grid, one series per receiver."""

    x_label: str
    x_units: str
    y_label: str
    y_units: str
    x: np.ndarray
    series: dict[str, np.ndarray]
    trials: int
    metadata: dict[str, str]

    def __post_init__(self):
        for name, values in self.series.items():
            if len(values) != len(self.x):
                raise ConfigError(f"series {name!r} length does not match the x grid")
            if not np.all(np.isfinite(values)):
                raise ConfigError(f"series {name!r} contains non-finite values")


@dataclass(frozen=True)
class Link:
    """One fixed realization of the air interface for a trial."""

    system: SystemConfig
    codes: np.ndarray
    channel: ChannelRealization
    signatures: SignatureSet


def build_link(system: SystemConfig, rng: SeededRng, unit_energy_codes: bool = True) -> Link:
    """Draw codes and channel once and build the stacked signatures.

    With ``unit_energy_codes`` each spreading code is scaled by
    1/sqrt(M) so it has unit squared norm.
    """
    codes = generate_spreading_codes(system, rng.derive(0))
    if unit_energy_codes:
        codes = codes / np.sqrt(system.subcarriers)
    channel = generate_channel(system, rng.derive(1))
    signatures = build_signatures(system, codes, channel)
    return Link(system=system, codes=codes, channel=channel, signatures=signatures)


def make_batch(link: Link, blocks: int, noise_variance: float, rng: SeededRng) -> TrainingBatch:
    """Synthesize ``blocks`` stacked observations with known user-1 symbols."""
    users = link.system.users
    pairs = draw_symbols(blocks * users, rng).reshape(blocks, users, 2)
    noise = draw_noise(blocks, link.system.subcarriers, noise_variance, rng)
    received = synthesize_batch(link.signatures, pairs, noise)
    return TrainingBatch(received=received, desired=pairs[:, 0, :])


def reference_weights(link: Link, noise_variance: float) -> tuple[FullWeights, AutocorrMatrix]:
    """Exact minimum-MSE filters from the model autocorrelation.

    A zero noise floor would make the autocorrelation singular, so the
    noiseless demo case is regularized with a relative 1e-9 ridge.
    """
    variance = noise_variance
    if variance == 0.0:
        scale = float(np.mean(np.abs(link.signatures.odd) ** 2)) * link.system.users * 2
        variance = 1e-9 * max(scale, 1.0)
    autocorr = analytic_autocorrelation(link.signatures, variance)
    weights = mmse_weights(autocorr, link.signatures.odd[0], link.signatures.even[0])
    return weights, autocorr


def _config_digest(cfg: ExperimentConfig) -> str:
    blob = json.dumps(dataclasses.asdict(cfg), sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _base_metadata(cfg: ExperimentConfig, experiment: str) -> dict[str, str]:
    return {
        "tool_version": __version__,
        "experiment": experiment,
        "master_seed": str(cfg.system.master_seed),
        "config_digest": _config_digest(cfg),
        "snr_convention": SNR_CONVENTION,
        "code_normalization": "unit_energy" if cfg.unit_energy_codes else "unit_chip",
        "trials": str(cfg.trials),
        "aggregation": "median over trials",
        "mse_clip": repr(MSE_CLIP),
        "config": json.dumps(dataclasses.asdict(cfg), sort_keys=True, default=str),
    }


class _AdaptiveState:
    """Tracks one stochastic-gradient receiver, freezing it on divergence."""

    def __init__(self, step, state):
        self.step = step
        self.state = state
        self.diverged = False

    def update(self, received, desired):
        if self.diverged:
            return
        new_state = self.step(self.state, received, desired)
        arrays = (
            (new_state.odd, new_state.even)
            if isinstance(new_state, FullWeights)
            else (new_state.top_odd, new_state.top_even)
        )
        if all(np.all(np.isfinite(a)) for a in arrays):
            self.state = new_state
        else:
            self.diverged = True

    def weights(self) -> FullWeights:
        if isinstance(self.state, FullWeights):
            return self.state
        return expand_weights(self.state)

    def holdout_mse(self, batch: TrainingBatch) -> float:
        if self.diverged:
            return MSE_CLIP
        value = full_cost(self.weights(), batch)
        if not np.isfinite(value):
            return MSE_CLIP
        return min(value, MSE_CLIP)


def _receiver_names(cfg: ExperimentConfig) -> list[str]:
    names = [f"lms(mu={cfg.lms_mu:g})"]
    names += [f"fast-lms(mu_c={mu:g})" for mu in cfg.fast_lms_mu]
    names += ["ga", "mmse"]
    return names


def run_mse_vs_cycles(cfg: ExperimentConfig) -> CurveData:
    """Held-out MSE of every receiver after each training cycle.

    Per trial the codes and channel stay fixed. The stochastic-gradient
    receivers consume one fresh training block per cycle; the genetic
    receiver evolves one generation per cycle against a fixed fitness
    batch taken from the head of the same training stream. MSE is always
    evaluated on a held-out batch none of the receivers trains on, and
    the exact-model receiver is included as a floor.
    """
    names = _receiver_names(cfg)
    per_trial = {name: np.empty((cfg.trials, cfg.cycles)) for name in names}
    master = SeededRng(cfg.system.master_seed)

    for trial in range(cfg.trials):
        rng = master.derive(trial)
        link = build_link(cfg.system, rng.derive(0), cfg.unit_energy_codes)
        variance = cfg.system.noise_variance
        training = make_batch(link, cfg.cycles, variance, rng.derive(1))
        holdout = make_batch(link, cfg.holdout_blocks, variance, rng.derive(2))
        fitness_blocks = min(cfg.fitness_blocks, cfg.cycles)
        fitness_batch = TrainingBatch(
            received=training.received[:fitness_blocks],
            desired=training.desired[:fitness_blocks],
        )

        m = cfg.system.subcarriers
        adaptives = {
            names[0]: _AdaptiveState(
                lambda w, r, d: lms_step(w, r, d, cfg.lms_mu), zero_weights(m)
            )
        }
        for i, mu_c in enumerate(cfg.fast_lms_mu):
            adaptives[names[1 + i]] = _AdaptiveState(
                lambda p, r, d, mu=mu_c: fast_lms_step(p, r, d, mu), zero_pair(m)
            )

        for cycle in range(cfg.cycles):
            r_k = training.received[cycle]
            d_k = training.desired[cycle]
            for name, state in adaptives.items():
                state.update(r_k, d_k)
                per_trial[name][trial, cycle] = state.holdout_mse(holdout)

        ga_curve = per_trial["ga"][trial]

        def record(cycle, population, curve=ga_curve, batch=holdout):
            weights = expand_weights(population.best().pair())
            curve[cycle - 1] = min(full_cost(weights, batch), MSE_CLIP)

        ga_cfg = dataclasses.replace(
            with_seed(cfg.ga, int(rng.derive(3).raw64(1)[0])),
            max_cycles=cfg.cycles,
            mse_threshold=0.0,
        )
        run_ga(ga_cfg, fitness_batch, m, on_cycle=record)

        ref, _ = reference_weights(link, variance)
        per_trial["mmse"][trial, :] = min(full_cost(ref, holdout), MSE_CLIP)

    series = {name: np.median(values, axis=0) for name, values in per_trial.items()}
    return CurveData(
        x_label="training cycle",
        x_units="cycles",
        y_label="mean square error",
        y_units="mse",
        x=np.arange(1, cfg.cycles + 1, dtype=float),
        series=series,
        trials=cfg.trials,
        metadata=_base_metadata(cfg, "mse_vs_cycles"),
    )


def _train_receivers(cfg: ExperimentConfig, link: Link, variance: float, rng: SeededRng):
    """Train all adaptive receivers on one shared stream; returns
    {name: FullWeights} including the exact-model reference."""
    names = _receiver_names(cfg)
    training = make_batch(link, cfg.cycles, variance, rng.derive(0))
    fitness_blocks = min(cfg.fitness_blocks, cfg.cycles)
    fitness_batch = TrainingBatch(
        received=training.received[:fitness_blocks],
        desired=training.desired[:fitness_blocks],
    )
    m = cfg.system.subcarriers

    adaptives = {
        names[0]: _AdaptiveState(lambda w, r, d: lms_step(w, r, d, cfg.lms_mu), zero_weights(m))
    }
    for i, mu_c in enumerate(cfg.fast_lms_mu):
        adaptives[names[1 + i]] = _AdaptiveState(
            lambda p, r, d, mu=mu_c: fast_lms_step(p, r, d, mu), zero_pair(m)
        )
    for cycle in range(cfg.cycles):
        for state in adaptives.values():
            state.update(training.received[cycle], training.desired[cycle])

    ga_cfg = dataclasses.replace(
        with_seed(cfg.ga, int(rng.derive(1).raw64(1)[0])),
        max_cycles=cfg.cycles,
        mse_threshold=0.0,
    )
    best, _ = run_ga(ga_cfg, fitness_batch, m)

    weights = {name: state.weights() for name, state in adaptives.items()}
    weights["ga"] = expand_weights(best.pair())
    weights["mmse"], _ = reference_weights(link, variance)
    return weights


def measure_ber(
    link: Link,
    receivers: dict[str, FullWeights],
    variance: float,
    blocks: int,
    rng: SeededRng,
    chunk: int = 20000,
) -> dict[str, float]:
    """Bit error rate of user 1 over ``blocks`` payload blocks (4 bits each).

    All receivers decode the identical payload, so their error rates are
    directly comparable at each noise level.
    """
    users = link.system.users
    errors = {name: 0 for name in receivers}
    done = 0
    while done < blocks:
        n = min(chunk, blocks - done)
        bits = draw_symbol_bits(2 * n * users, rng).reshape(n, users, 2, 2)
        pairs = symbols_from_bits(bits).reshape(n, users, 2)
        noise = draw_noise(n, link.system.subcarriers, variance, rng)
        received = synthesize_batch(link.signatures, pairs, noise)
        sent = bits[:, 0, :, :]
        for name, weights in receivers.items():
            decided = detect_batch(weights, received)
            errors[name] += int(np.sum(decided != sent))
        done += n
    total_bits = 4 * blocks
    return {name: count / total_bits for name, count in errors.items()}


def run_ber_vs_snr(cfg: ExperimentConfig) -> CurveData:
    """Bit error rate of user 1 versus nominal SNR for every receiver.

    Per (trial, SNR point): train each receiver with the same budget of
    training blocks at the operating noise level, then measure BER over
    the payload. The exact-model receiver's measured BER serves as the
    floor no trained receiver should beat.
    """
    if len(cfg.snr_grid_db) == 0:
        raise ConfigError("snr_grid_db must not be empty")
    names = _receiver_names(cfg)
    grid = list(cfg.snr_grid_db)
    per_trial = {name: np.empty((cfg.trials, len(grid))) for name in names}
    master = SeededRng(cfg.system.master_seed)

    for trial in range(cfg.trials):
        rng = master.derive(trial)
        link = build_link(cfg.system, rng.derive(0), cfg.unit_energy_codes)
        for si, snr_db in enumerate(grid):
            variance = snr_to_noise_variance(snr_db)
            point_rng = rng.derive(100 + si)
            receivers = _train_receivers(cfg, link, variance, point_rng.derive(0))
            rates = measure_ber(
                link, receivers, variance, cfg.payload_blocks, point_rng.derive(1)
            )
            for name in names:
                per_trial[name][trial, si] = rates[name]

    series = {name: np.median(values, axis=0) for name, values in per_trial.items()}
    return CurveData(
        x_label="signal to noise ratio",
        x_units="dB",
        y_label="bit error rate",
        y_units="ber",
        x=np.array(grid, dtype=float),
        series=series,
        trials=cfg.trials,
        metadata=_base_metadata(cfg, "ber_vs_snr"),
    )


def emit_curves(data: CurveData, path) -> None:
    """Write the curve table as CSV plus a key-value metadata sidecar.

    The CSV has one header row naming each series with its units and one
    row per x value; the sidecar at ``<path>.meta`` records the run
    configuration, master seed, SNR convention and tool version. Output
    is byte-identical for identical inputs.
    """
    if not data.series:
        raise ConfigError("refusing to emit a curve file with no series")
    path = str(path)
    header = [f"{data.x_label} [{data.x_units}]"] + [
        f"{name} [{data.y_units}]" for name in data.series
    ]
    lines = [",".join(header)]
    columns = list(data.series.values())
    for i, x in enumerate(data.x):
        cells = [_format_number(x)] + [_format_number(col[i]) for col in columns]
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")

    meta_lines = [f"{key} = {value}" for key, value in data.metadata.items()]
    meta_lines.append(f"x_label = {data.x_label} [{data.x_units}]")
    meta_lines.append(f"y_label = {data.y_label} [{data.y_units}]")
    meta_lines.append("series = " + ", ".join(data.series))
    with open(path + ".meta", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(meta_lines) + "\n")


def _format_number(value: float) -> str:
    return format(float(value), ".12g")
