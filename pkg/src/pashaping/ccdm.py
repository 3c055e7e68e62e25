"""Constant-composition distribution matching by exact multiset-permutation ranking.

A codeword is any arrangement of a fixed composition. Words are mapped to the
arrangement of equal lexicographic rank, which gives the same codebook as an
infinite-precision arithmetic coder but with exact round trips.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    AmplitudeAlphabet,
    AmplitudeDistribution,
    Composition,
    DecodeFailure,
    RateLossReport,
    ShapingError,
    bits_to_int,
    ccdm_rate,
    composition_from_distribution,
    entropy,
    fit_mb_for_entropy,
    int_to_bits,
    mb_distribution,
    multinomial,
    rate_loss,
)


class CompositionMismatch(DecodeFailure):
    """Received sequence does not have the code's composition."""


@dataclass(frozen=True, eq=False)
class CcdmCode:
    composition: Composition
    k: int = -1
    total: int = field(init=False, repr=False)

    def __post_init__(self):
        total = multinomial(self.composition.counts)
        object.__setattr__(self, "total", total)
        native = total.bit_length() - 1
        if self.k < 0:
            object.__setattr__(self, "k", native)
        elif self.k > native:
            raise ShapingError(f"k={self.k} exceeds floor(log2 {total}) = {native}")

    @property
    def N(self) -> int:
        return self.composition.N

    @property
    def alphabet(self) -> AmplitudeAlphabet:
        return self.composition.alphabet

    @property
    def shaping_rate(self) -> float:
        return self.k / self.N

    @property
    def energy(self) -> int:
        """Energy shared by every codeword."""
        return self.composition.energy

    def shape(self, bits) -> np.ndarray:
        return ccdm_encode(self, bits)

    def deshape(self, amplitudes) -> np.ndarray:
        return ccdm_decode(self, amplitudes)

    def distribution(self) -> AmplitudeDistribution:
        return ccdm_empirical_distribution(self)

    def rate_loss_report(self) -> RateLossReport:
        return rate_loss(self.distribution(), self.k, self.N)


_WINDOW = 256
_SLACK = 64
_CHUNK = 48


def unrank(counts, total: int, rank: int) -> list[int]:
    """Symbol indices of the multiset permutation with lexicographic ``rank``.

    With ``M`` the number of completions, the symbol choice only depends on
    the fraction ``x = rank / M``: symbol ``i`` owns ``[C_i/n, (C_i+c_i)/n)``
    with ``C_i`` the counts of smaller symbols. ``x`` is tracked as a
    ``_WINDOW``-bit fixed-point interval; the exact ``(rank, M)`` pair is only
    refreshed when the interval grows wide or straddles a boundary.
    """
    counts = list(counts)
    n = sum(counts)
    out: list[int] = []
    R, M = rank, total
    limit = 1 << (_WINDOW - _SLACK)
    while n:
        lo = (R << _WINDOW) // M
        hi = lo + 1
        # since the refresh: M_now = M*P/Q and R_now = R - M*S/Q, all exact
        P, Q, S = 1, 1, 0
        while n:
            ln = lo * n
            # the symbol only depends on the integer part of x*n
            top = ln >> _WINDOW
            cum = 0
            for i, c in enumerate(counts):
                if c and cum + c > top:
                    break
                cum += c
            if (hi * n - 1) >> _WINDOW >= cum + c:
                break  # interval straddles a boundary
            base = cum << _WINDOW
            lo = (ln - base) // c
            hi = -((base - hi * n) // c)
            S = S * n + P * cum
            P *= c
            Q *= n
            out.append(i)
            counts[i] -= 1
            n -= 1
            if hi - lo > limit:
                break
        if Q > 1:
            R -= M * S // Q
            M = M * P // Q
        elif n:
            # undecided on the first step: take one exact step
            q, r = divmod(M, n)
            for i, c in enumerate(counts):
                if not c:
                    continue
                sub = q * c + r * c // n
                if R < sub:
                    break
                R -= sub
            out.append(i)
            M = sub
            counts[i] -= 1
            n -= 1
    return out


def rank(counts, total: int, symbols) -> int:
    """Lexicographic rank of a multiset permutation (inverse of :func:`unrank`).

    Each contribution ``M_t * C_t / n_t`` is gathered over a chunk as
    ``M * S / Q`` with small-integer ``S`` and ``Q``, so the big multinomial
    is touched once per chunk.
    """
    counts = list(counts)
    n = sum(counts)
    M = total
    acc = 0
    P, Q, S = 1, 1, 0
    steps = 0
    for s in symbols:
        if s >= len(counts) or counts[s] == 0:
            raise CompositionMismatch("sequence does not match the composition")
        S = S * n + P * sum(counts[:s])
        P *= counts[s]
        Q *= n
        counts[s] -= 1
        n -= 1
        steps += 1
        if steps == _CHUNK:
            acc += M * S // Q
            M = M * P // Q
            P, Q, S, steps = 1, 1, 0, 0
    if steps:
        acc += M * S // Q
    return acc


def ccdm_encode(code: CcdmCode, word) -> np.ndarray:
    """Amplitude sequence whose rank equals the big-endian value of ``word``."""
    w = np.asarray(word, dtype=np.uint8).ravel()
    if w.size != code.k:
        raise ShapingError(f"word length {w.size} != k={code.k}")
    idx = unrank(code.composition.counts, code.total, bits_to_int(w))
    amps = np.asarray(code.alphabet.amplitudes, dtype=np.int64)
    return amps[np.asarray(idx, dtype=np.int64)]


def ccdm_decode(code: CcdmCode, sequence) -> np.ndarray:
    seq = np.asarray(sequence).ravel()
    if seq.size != code.N:
        raise ShapingError(f"sequence length {seq.size} != N={code.N}")
    a = seq.astype(np.int64)
    if np.any(a != seq) or np.any((a < 1) | (a % 2 == 0) | (a >= 2**code.alphabet.m)):
        raise ShapingError(f"sequence leaves the amplitude alphabet {code.alphabet.amplitudes}")
    idx = ((a - 1) // 2).tolist()
    hist = np.bincount(idx, minlength=code.alphabet.size)
    hist = tuple(int(x) for x in hist)
    if hist != code.composition.counts:
        raise CompositionMismatch(f"histogram {hist} != composition {code.composition.counts}")
    r = rank(code.composition.counts, code.total, idx)
    if r >> code.k:
        raise DecodeFailure(f"rank {r} is not below 2**{code.k}")
    return int_to_bits(r, code.k)


def ccdm_empirical_distribution(code: CcdmCode) -> AmplitudeDistribution:
    return code.composition.distribution()


def ccdm_composition_for_rate(alphabet: AmplitudeAlphabet, N: int, k: int, grid: int = 400) -> Composition:
    """Lowest-entropy MB-rounded composition that indexes at least ``k`` bits.

    Bisection on the target entropy brackets where the rounded composition
    stops carrying ``k`` bits; a fine scan just above that point then picks
    the feasible composition of least entropy (rounding makes the boundary
    ragged).
    """
    hmax = alphabet.m - 1
    if k > N * hmax:
        raise ShapingError(f"k={k} exceeds N*(m-1)")

    def comp_at(h):
        return composition_from_distribution(mb_distribution(alphabet, fit_mb_for_entropy(alphabet, h)), N)

    if ccdm_rate(comp_at(hmax)) < k:
        raise ShapingError(f"no composition of length {N} carries {k} bits")
    lo, hi = max(k / N - 1e-9, 1e-6), hmax
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ccdm_rate(comp_at(mid)) >= k:
            hi = mid
        else:
            lo = mid
    span = max(4.0 / N, 1e-4)
    best = None
    for h in np.linspace(max(lo - span, 1e-6), min(hi + span, hmax), grid):
        comp = comp_at(float(h))
        if ccdm_rate(comp) < k:
            continue
        key = (entropy(comp.distribution()), comp.counts)
        if best is None or key < best[0]:
            best = (key, comp)
    return best[1] if best else comp_at(hi)


def ccdm_code_for_rate(alphabet: AmplitudeAlphabet, N: int, shaping_rate: float) -> CcdmCode:
    """Matcher for ``ceil(shaping_rate * N)`` bits; ``k`` is its native ``floor(log2 |codebook|)``."""
    k = math.ceil(shaping_rate * N - 1e-9)
    return CcdmCode(ccdm_composition_for_rate(alphabet, N, k))
