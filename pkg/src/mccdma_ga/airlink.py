"""Signal synthesis for the uplink multicarrier CDMA air interface.

Each user spreads two consecutive QPSK symbols over M subcarriers with a
per-antenna code pair and transmits them through a two-antenna orthogonal
block code: in the first symbol interval antenna A carries the odd symbol
and antenna B the even one; in the second interval A carries the negated
conjugate of the even symbol and B the conjugate of the odd one.

After the FFT the receiver stacks the first-interval observation on top
of the conjugated second-interval observation, giving a length-2M vector
that is linear in the two symbols:

    r(k) = sum_u [ odd_u * b_u(odd) + even_u * b_u(even) ] + n(k)

where ``odd_u = [a_u1; conj(a_u2)]``, ``even_u = [a_u2; -conj(a_u1)]``
and ``a_up`` is the elementwise product of the user's frequency response
and spreading code at antenna p. All randomness flows through
:class:`~mccdma_ga.numerics.SeededRng` so every draw is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, DomainError
from .numerics import SeededRng, gaussian_complex

QPSK_SCALE = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class SystemConfig:
    """Static parameters of one simulated uplink.

    subcarriers: number of subcarriers M, equal to the spreading-code
        length; must be a power of two.
    users: number of active users (user 1 is always the detected one).
    paths: multipath tap count of the Rayleigh channel.
    noise_variance: per-entry variance of the complex receiver noise.
    master_seed: root seed all per-trial generators derive from.
    """

    subcarriers: int = 32
    users: int = 20
    paths: int = 3
    noise_variance: float = 0.1
    master_seed: int = 0

    def __post_init__(self):
        m = self.subcarriers
        if m < 2 or (m & (m - 1)) != 0:
            raise ConfigError(f"subcarriers must be a power of two >= 2, got {m}")
        if self.users < 1:
            raise ConfigError(f"users must be at least 1, got {self.users}")
        if not 1 <= self.paths <= m:
            raise ConfigError(f"paths must be in [1, {m}], got {self.paths}")
        if self.noise_variance < 0:
            raise ConfigError(f"noise_variance must be non-negative, got {self.noise_variance}")


@dataclass(frozen=True)
class ChannelRealization:
    """Multipath taps and their M-point frequency response per (user, antenna).

    ``freq_response[u, p, m] = sum_l taps[u, p, l] * exp(-2j pi m l / M)``.
    """

    taps: np.ndarray  # (users, 2, paths) complex
    freq_response: np.ndarray  # (users, 2, M) complex

    @classmethod
    def from_taps(cls, taps: np.ndarray, subcarriers: int) -> "ChannelRealization":
        taps = np.asarray(taps, dtype=np.complex128)
        if taps.ndim != 3 or taps.shape[1] != 2:
            raise DimensionError(f"taps must have shape (users, 2, paths), got {taps.shape}")
        if taps.shape[2] > subcarriers:
            raise DimensionError("more taps than subcarriers")
        freq = np.fft.fft(taps, n=subcarriers, axis=-1)
        return cls(taps=taps, freq_response=freq)


@dataclass(frozen=True)
class SignatureSet:
    """Effective signatures through which each user's symbols reach r(k).

    antenna: per-(user, antenna) product of frequency response and code,
        shape (users, 2, M).
    odd / even: stacked length-2M vectors multiplying the odd and even
        symbol of each user in the stacked observation, shape (users, 2M).
    """

    antenna: np.ndarray
    odd: np.ndarray
    even: np.ndarray

    @property
    def users(self) -> int:
        return self.antenna.shape[0]

    @property
    def subcarriers(self) -> int:
        return self.antenna.shape[2]

    @classmethod
    def empty(cls, subcarriers: int) -> "SignatureSet":
        z2 = np.zeros((0, 2, subcarriers), dtype=np.complex128)
        z1 = np.zeros((0, 2 * subcarriers), dtype=np.complex128)
        return cls(antenna=z2, odd=z1, even=z1)


def generate_spreading_codes(cfg: SystemConfig, rng: SeededRng) -> np.ndarray:
    """Code pairs with chip components drawn fairly from {+1/sqrt2, -1/sqrt2}.

    Returns an array of shape (users, 2, M); every chip has unit magnitude
    so each code has squared norm M. Codes are drawn once per simulation
    and held fixed.
    """
    m, u = cfg.subcarriers, cfg.users
    bits = rng.raw64(u * 2 * m).reshape(u, 2, m)
    re = 1.0 - 2.0 * (bits & np.uint64(1)).astype(np.float64)
    im = 1.0 - 2.0 * ((bits >> np.uint64(1)) & np.uint64(1)).astype(np.float64)
    return QPSK_SCALE * (re + 1j * im)


def generate_channel(cfg: SystemConfig, rng: SeededRng) -> ChannelRealization:
    """Rayleigh multipath channel with unit total power per (user, antenna).

    Taps are i.i.d. circular complex Gaussian with per-tap variance
    1/paths (uniform power-delay profile); the frequency response is the
    M-point DFT of the zero-padded taps. Held fixed for a whole run.
    """
    m, u, p = cfg.subcarriers, cfg.users, cfg.paths
    taps = gaussian_complex(u * 2 * p, 1.0 / p, rng).reshape(u, 2, p)
    return ChannelRealization.from_taps(taps, m)


def build_signatures(
    cfg: SystemConfig, codes: np.ndarray, channel: ChannelRealization
) -> SignatureSet:
    """Combine codes and channel responses into the stacked signatures."""
    m, u = cfg.subcarriers, cfg.users
    codes = np.asarray(codes, dtype=np.complex128)
    if codes.shape != (u, 2, m):
        raise DimensionError(f"codes shape {codes.shape} does not match ({u}, 2, {m})")
    if channel.freq_response.shape != (u, 2, m):
        raise DimensionError(
            f"channel shape {channel.freq_response.shape} does not match ({u}, 2, {m})"
        )
    antenna = channel.freq_response * codes
    odd = np.concatenate([antenna[:, 0, :], np.conj(antenna[:, 1, :])], axis=1)
    even = np.concatenate([antenna[:, 1, :], -np.conj(antenna[:, 0, :])], axis=1)
    return SignatureSet(antenna=antenna, odd=odd, even=even)


def symbols_from_bits(bits: np.ndarray) -> np.ndarray:
    """Gray-mapped QPSK: bit 0 selects the positive half-axis.

    ``bits[..., 0]`` maps to the real part, ``bits[..., 1]`` to the
    imaginary part; each symbol has unit energy.
    """
    bits = np.asarray(bits)
    re = 1.0 - 2.0 * bits[..., 0]
    im = 1.0 - 2.0 * bits[..., 1]
    return QPSK_SCALE * (re + 1j * im)


def draw_symbol_bits(count: int, rng: SeededRng) -> np.ndarray:
    """Fair bits for ``count`` symbols, shape (count, 2)."""
    if count < 1:
        raise DomainError("count must be at least 1")
    words = rng.raw64(count)
    b0 = (words & np.uint64(1)).astype(np.uint8)
    b1 = ((words >> np.uint64(1)) & np.uint64(1)).astype(np.uint8)
    return np.stack([b0, b1], axis=-1)


def draw_symbols(count: int, rng: SeededRng) -> np.ndarray:
    """``count`` i.i.d. uniform QPSK symbol pairs, shape (count, 2).

    Column 0 holds the odd symbol of each pair, column 1 the even one.
    """
    if count < 1:
        raise DomainError("count must be at least 1")
    bits = draw_symbol_bits(2 * count, rng)
    return symbols_from_bits(bits).reshape(count, 2)


def synthesize_received(
    signatures: SignatureSet, pairs: np.ndarray, noise: np.ndarray
) -> np.ndarray:
    """Stacked received vector for one block of symbol pairs.

    ``pairs`` has shape (users, 2) with the odd symbol in column 0;
    ``noise`` is the length-2M stacked noise vector.
    """
    pairs = np.asarray(pairs, dtype=np.complex128)
    if pairs.shape != (signatures.users, 2):
        raise DimensionError(f"pairs shape {pairs.shape} does not match ({signatures.users}, 2)")
    noise = np.asarray(noise, dtype=np.complex128)
    n = 2 * signatures.subcarriers
    if noise.shape != (n,):
        raise DimensionError(f"noise shape {noise.shape} does not match ({n},)")
    return signatures.odd.T @ pairs[:, 0] + signatures.even.T @ pairs[:, 1] + noise


def synthesize_batch(
    signatures: SignatureSet, pairs: np.ndarray, noise: np.ndarray
) -> np.ndarray:
    """Vectorized form of :func:`synthesize_received`.

    ``pairs`` has shape (blocks, users, 2) and ``noise`` (blocks, 2M);
    returns (blocks, 2M).
    """
    pairs = np.asarray(pairs, dtype=np.complex128)
    return pairs[:, :, 0] @ signatures.odd + pairs[:, :, 1] @ signatures.even + noise


def two_interval_oracle(
    codes: np.ndarray,
    channel: ChannelRealization,
    pairs: np.ndarray,
    noise_first: np.ndarray,
    noise_second: np.ndarray,
) -> np.ndarray:
    """Simulate the two symbol intervals separately and stack the result.

    Interval 1: antenna A sends the odd symbol, B the even symbol.
    Interval 2: antenna A sends -conj(even), B sends conj(odd).
    The returned vector is [interval1; conj(interval2)], which must match
    :func:`synthesize_received` with the noise mapped the same way. This
    path deliberately avoids :class:`SignatureSet` so it can serve as an
    independent cross-check of the stacked model.
    """
    codes = np.asarray(codes, dtype=np.complex128)
    pairs = np.asarray(pairs, dtype=np.complex128)
    users = codes.shape[0]
    if pairs.shape != (users, 2):
        raise DimensionError(f"pairs shape {pairs.shape} does not match ({users}, 2)")
    freq = channel.freq_response
    gain_a = freq[:, 0, :] * codes[:, 0, :]
    gain_b = freq[:, 1, :] * codes[:, 1, :]
    odd, even = pairs[:, 0], pairs[:, 1]
    first = gain_a.T @ odd + gain_b.T @ even + noise_first
    second = gain_a.T @ (-np.conj(even)) + gain_b.T @ np.conj(odd) + noise_second
    return np.concatenate([first, np.conj(second)])


def snr_to_noise_variance(snr_db: float) -> float:
    """Per-entry noise variance for a nominal SNR in dB.

    Convention: SNR(dB) = 10*log10(E|b|^2 / noise_variance) with unit
    symbol energy and unit average channel gain.
    """
    return float(10.0 ** (-snr_db / 10.0))


def draw_noise(blocks: int, subcarriers: int, variance: float, rng: SeededRng) -> np.ndarray:
    """Stacked noise vectors for ``blocks`` blocks, shape (blocks, 2M)."""
    return gaussian_complex(blocks * 2 * subcarriers, variance, rng).reshape(
        blocks, 2 * subcarriers
    )
