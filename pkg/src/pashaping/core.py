"""Amplitude alphabets, Maxwell-Boltzmann targets, compositions and rate loss.

Everything here is a pure function of immutable values. Multinomial counts
are exact Python integers: at ``N = 3600`` they run to thousands of bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class ShapingError(ValueError):
    """Invalid input to a shaping primitive."""


class DecodeFailure(ShapingError):
    """A received amplitude sequence is not a codeword of the shaper."""


@dataclass(frozen=True)
class AmplitudeAlphabet:
    """The positive half ``{1, 3, ..., 2**m - 1}`` of a ``2**m``-PAM alphabet."""

    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ShapingError(f"bits per PAM symbol must be an integer >= 2, got {self.m!r}")

    @property
    def amplitudes(self) -> tuple[int, ...]:
        return tuple(range(1, 2**self.m, 2))

    @property
    def size(self) -> int:
        return 2 ** (self.m - 1)

    @property
    def energies(self) -> np.ndarray:
        return np.array(self.amplitudes, dtype=np.int64) ** 2

    @property
    def level_shifts(self) -> np.ndarray:
        """Compact trellis step per amplitude, ``(a*a - 1) // 8``."""
        return (self.energies - 1) // 8

    def index_of(self, amplitude: int) -> int:
        a = int(amplitude)
        if a < 1 or a % 2 == 0 or a >= 2**self.m:
            raise ShapingError(f"{amplitude!r} is not in the amplitude alphabet {self.amplitudes}")
        return (a - 1) // 2


@dataclass(frozen=True)
class AmplitudeDistribution:
    alphabet: AmplitudeAlphabet
    probabilities: tuple[float, ...]

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.shape != (self.alphabet.size,):
            raise ShapingError(f"need {self.alphabet.size} probabilities, got {p.shape}")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ShapingError("probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "probabilities", tuple(float(x) for x in p))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.probabilities)

    @property
    def mean_energy(self) -> float:
        return float(self.array @ self.alphabet.energies)

    @classmethod
    def from_weights(cls, alphabet: AmplitudeAlphabet, weights) -> "AmplitudeDistribution":
        w = np.asarray(weights, dtype=float)
        return cls(alphabet, tuple(w / w.sum()))

    @classmethod
    def uniform(cls, alphabet: AmplitudeAlphabet) -> "AmplitudeDistribution":
        return cls.from_weights(alphabet, np.ones(alphabet.size))


@dataclass(frozen=True)
class Composition:
    """Per-amplitude occurrence counts of a constant-composition codeword."""

    alphabet: AmplitudeAlphabet
    counts: tuple[int, ...]

    def __post_init__(self):
        c = tuple(int(x) for x in self.counts)
        if len(c) != self.alphabet.size or any(x < 0 for x in c):
            raise ShapingError(f"composition needs {self.alphabet.size} nonnegative counts")
        if sum(c) < 1:
            raise ShapingError("composition must have blocklength >= 1")
        object.__setattr__(self, "counts", c)

    @property
    def N(self) -> int:
        return sum(self.counts)

    @property
    def energy(self) -> int:
        return int(sum(c * a * a for c, a in zip(self.counts, self.alphabet.amplitudes)))

    def distribution(self) -> AmplitudeDistribution:
        return AmplitudeDistribution.from_weights(self.alphabet, self.counts)


@dataclass(frozen=True)
class RateLossReport:
    shaping_rate: float
    entropy: float
    rate_loss: float
    N: int
    k: int


def mb_distribution(alphabet: AmplitudeAlphabet, lam: float) -> AmplitudeDistribution:
    """Maxwell-Boltzmann law ``P(a) ~ exp(-lam * a**2)`` on the amplitudes."""
    if lam < 0:
        raise ShapingError("lambda must be nonnegative")
    e = alphabet.energies.astype(float)
    logw = -lam * (e - e[0])
    w = np.exp(logw - logw.max())
    return AmplitudeDistribution(alphabet, tuple(w / w.sum()))


def entropy(dist: AmplitudeDistribution) -> float:
    """Shannon entropy in bits, with ``0 log 0 = 0``."""
    p = dist.array
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def fit_mb_for_entropy(alphabet: AmplitudeAlphabet, target_entropy: float, tol: float = 1e-12) -> float:
    """Find ``lam`` such that the MB law on ``alphabet`` has the target entropy.

    Entropy is monotone decreasing in ``lam``, so plain bisection suffices.
    """
    hmax = alphabet.m - 1
    if not 0 < target_entropy <= hmax + 1e-15:
        raise ShapingError(f"target entropy must lie in (0, {hmax}], got {target_entropy}")
    if target_entropy >= hmax - 1e-15:
        return 0.0
    lo, hi = 0.0, 1.0
    while entropy(mb_distribution(alphabet, hi)) > target_entropy:
        hi *= 2.0
        if hi > 1e6:
            raise ShapingError("target entropy too small to fit")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if entropy(mb_distribution(alphabet, mid)) > target_entropy:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def rate_loss(dist: AmplitudeDistribution, k: int, N: int) -> RateLossReport:
    """Rate loss ``H(P_A) - k/N`` of a shaper emitting ``k`` bits per ``N`` amplitudes."""
    if k < 0 or N < 1:
        raise ShapingError("need k >= 0 and N >= 1")
    h = entropy(dist)
    rs = k / N
    return RateLossReport(shaping_rate=rs, entropy=h, rate_loss=h - rs, N=N, k=k)


def composition_from_distribution(dist: AmplitudeDistribution, N: int) -> Composition:
    """Quantise ``N * p`` to integer counts summing to ``N``.

    Counts start at ``floor(N * p)``; the leftover units go to the amplitudes
    with the largest fractional residual, ties to the lower-energy amplitude.
    """
    if N < 1:
        raise ShapingError("blocklength must be >= 1")
    target = np.round(N * dist.array, 9)
    base = np.floor(target).astype(np.int64)
    resid = target - base
    short = N - int(base.sum())
    order = sorted(range(len(base)), key=lambda i: (-resid[i], i))
    for i in order[:short]:
        base[i] += 1
    return Composition(dist.alphabet, tuple(int(x) for x in base))


def multinomial(counts: Sequence[int]) -> int:
    """Exact ``N! / prod(n_i!)``."""
    total = math.factorial(sum(counts))
    for c in counts:
        total //= math.factorial(c)
    return total


def ccdm_rate(comp: Composition) -> int:
    """Input bits ``floor(log2 multinomial)`` a constant-composition matcher can index."""
    return multinomial(comp.counts).bit_length() - 1


def int_to_bits(value: int, k: int) -> np.ndarray:
    """Big-endian ``k``-bit representation of ``value`` as a uint8 array."""
    if value < 0 or (k < value.bit_length()):
        raise ShapingError(f"{value} does not fit in {k} bits")
    if k == 0:
        return np.zeros(0, dtype=np.uint8)
    nbytes = (k + 7) // 8
    raw = np.frombuffer(value.to_bytes(nbytes, "big"), dtype=np.uint8)
    return np.unpackbits(raw)[nbytes * 8 - k :].copy()


def bits_to_int(bits) -> int:
    b = np.asarray(bits, dtype=np.uint8).ravel()
    if b.size == 0:
        return 0
    if np.any(b > 1):
        raise ShapingError("bit arrays may only contain 0 and 1")
    pad = (-b.size) % 8
    packed = np.packbits(np.concatenate([np.zeros(pad, dtype=np.uint8), b]))
    return int.from_bytes(packed.tobytes(), "big")
