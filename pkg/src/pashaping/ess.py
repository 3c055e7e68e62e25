"""Enumerative sphere shaping over a bounded-energy amplitude trellis.

The trellis stores ``T_n^e``, the number of ways to finish a sequence from
accumulated energy ``e`` at stage ``n`` without exceeding ``Emax``. Energies at
stage ``n`` are always ``n + 8*j``; only the level ``j`` is stored, in exact
Python integers.

Indexing is lexicographic: the index of a sequence is the number of in-sphere
sequences smaller than it, and shaping inverts that count stage by stage.
"""

from __future__ import annotations

import math
import operator
import os
import struct
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels
from .core import (
    AmplitudeAlphabet,
    AmplitudeDistribution,
    DecodeFailure,
    RateLossReport,
    ShapingError,
    bits_to_int,
    int_to_bits,
    rate_loss,
)

CACHE_ENV = "PASHAPING_CACHE_DIR"
_MAGIC = b"PSTR"
_VERSION = 1


class EnergyViolation(DecodeFailure):
    """Sequence energy exceeds the sphere radius."""


@dataclass(frozen=True, eq=False)
class EnumerativeTrellis:
    alphabet: AmplitudeAlphabet
    N: int
    Emax: int
    rows: tuple  # rows[n][j] == T_n^{n + 8j}

    @property
    def levels(self) -> int:
        """Number of stored energy levels per stage."""
        return len(self.rows[0])

    @property
    def size(self) -> int:
        """``T_0^0``: the number of sequences inside the sphere."""
        return self.rows[0][0]

    def count(self, n: int, e: int) -> int:
        """``T_n^e``, zero for energies the trellis cannot hold."""
        if not 0 <= n <= self.N or e < n or (e - n) % 8:
            return 0
        j = (e - n) // 8
        return self.rows[n][j] if j < self.levels else 0

    def reachable_states(self, n: int) -> list[tuple[int, int]]:
        """``(energy, T_n^e)`` for states hit by at least one in-sphere path."""
        shifts = [int(d) for d in self.alphabet.level_shifts]
        live = {0}
        for _ in range(n):
            live = {j + d for j in live for d in shifts if j + d < self.levels}
        return [(n + 8 * j, self.rows[n][j]) for j in sorted(live) if self.rows[n][j]]


def build_trellis(alphabet: AmplitudeAlphabet, N: int, Emax: int) -> EnumerativeTrellis:
    """Fill ``T_n^e`` backwards from ones at every final energy ``<= Emax``."""
    if N < 1:
        raise ShapingError("blocklength must be >= 1")
    if Emax < N:
        raise ShapingError(f"Emax={Emax} is below the minimum sequence energy {N}")
    J = (Emax - N) // 8 + 1
    shifts = [int(d) for d in alphabet.level_shifts]
    rows: list[list[int]] = [None] * (N + 1)  # type: ignore[list-item]
    rows[N] = [1] * J
    for n in range(N - 1, -1, -1):
        nxt = rows[n + 1]
        row = list(nxt)
        for d in shifts[1:]:
            if d < J:
                row[: J - d] = map(operator.add, row[: J - d], nxt[d:])
        rows[n] = row
    return EnumerativeTrellis(alphabet, int(N), int(Emax), tuple(rows))


def sphere_sizes(alphabet: AmplitudeAlphabet, N: int, levels: int) -> list[int]:
    """Exact ``|{a : sum a^2 <= N + 8j}|`` for ``j = 0 .. levels-1``."""
    shifts = [int(d) for d in alphabet.level_shifts]
    cur = [1] + [0] * (levels - 1)
    for _ in range(N):
        nxt = list(cur)
        for d in shifts[1:]:
            if d < levels:
                nxt[d:] = map(operator.add, nxt[d:], cur[: levels - d])
        cur = nxt
    out, acc = [], 0
    for c in cur:
        acc += c
        out.append(acc)
    return out


def _float_level_hint(alphabet: AmplitudeAlphabet, N: int, k: int) -> int:
    logc = _kernels.log_energy_counts(N, alphabet.level_shifts)
    with np.errstate(divide="ignore"):
        cum = np.logaddexp.accumulate(logc) / math.log(2)
    hit = np.nonzero(cum >= k - 1e-6)[0]
    return int(hit[0]) if hit.size else len(cum) - 1


def choose_emax_for_rate(alphabet: AmplitudeAlphabet, N: int, k: int) -> int:
    """Smallest ``Emax`` in ``{N, N+8, ...}`` whose sphere holds ``2**k`` sequences."""
    if N < 1 or k < 0:
        raise ShapingError("need N >= 1 and k >= 0")
    if k > N * (alphabet.m - 1):
        raise ShapingError(f"k={k} exceeds N*(m-1)={N * (alphabet.m - 1)}")
    target = 1 << k
    full = int(max(alphabet.level_shifts)) * N + 1
    cap = min(full, _float_level_hint(alphabet, N, k) + 4)
    while True:
        sizes = sphere_sizes(alphabet, N, cap)
        for j, s in enumerate(sizes):
            if s >= target:
                return N + 8 * j
        if cap == full:  # pragma: no cover - excluded by the k bound
            raise ShapingError("no sphere is large enough")
        cap = min(full, 2 * cap)


def _check_sequence(trellis: EnumerativeTrellis, sequence) -> list[int]:
    seq = [int(a) for a in np.asarray(sequence).ravel()]
    if len(seq) != trellis.N:
        raise ShapingError(f"sequence length {len(seq)} != N={trellis.N}")
    for a in seq:
        trellis.alphabet.index_of(a)
    energy = sum(a * a for a in seq)
    if energy > trellis.Emax:
        raise EnergyViolation(f"sequence energy {energy} exceeds Emax={trellis.Emax}")
    return seq


def ess_index_trace(trellis: EnumerativeTrellis, sequence: Sequence[int]) -> list[int]:
    """Running lexicographic index after each stage; the last entry is the index."""
    seq = _check_sequence(trellis, sequence)
    amps = trellis.alphabet.amplitudes
    idx, e, out = 0, 0, []
    for n, a in enumerate(seq, start=1):
        for b in amps:
            if b >= a:
                break
            idx += trellis.count(n, e + b * b)
        e += a * a
        out.append(idx)
    return out


def ess_index(trellis: EnumerativeTrellis, sequence: Sequence[int]) -> int:
    """Cover's enumerative index of an in-sphere amplitude sequence."""
    return ess_index_trace(trellis, sequence)[-1]


def ess_sequence(trellis: EnumerativeTrellis, index: int) -> np.ndarray:
    """Inverse of :func:`ess_index`."""
    if not 0 <= index < trellis.size:
        raise ShapingError(f"index {index} outside [0, {trellis.size})")
    amps = trellis.alphabet.amplitudes
    shifts = [int(d) for d in trellis.alphabet.level_shifts]
    rows, J = trellis.rows, trellis.levels
    out = np.empty(trellis.N, dtype=np.int64)
    j = 0
    for n in range(1, trellis.N + 1):
        row = rows[n]
        for a, d in zip(amps, shifts):
            t = row[j + d] if j + d < J else 0
            if index < t:
                out[n - 1] = a
                j += d
                break
            index -= t
    return out


@dataclass(frozen=True, eq=False)
class EssCode:
    """A trellis plus the number of input bits it indexes per block."""

    trellis: EnumerativeTrellis
    k: int

    def __post_init__(self):
        if self.k < 0 or (1 << self.k) > self.trellis.size:
            raise ShapingError(f"2**{self.k} exceeds the sphere size {self.trellis.size}")

    @classmethod
    def from_trellis(cls, trellis: EnumerativeTrellis) -> "EssCode":
        return cls(trellis, trellis.size.bit_length() - 1)

    @classmethod
    def for_rate(cls, alphabet: AmplitudeAlphabet, N: int, k: int, cache: bool = True) -> "EssCode":
        """Code with the smallest sphere carrying ``k`` bits per ``N`` amplitudes."""
        emax = choose_emax_for_rate(alphabet, N, k)
        trellis = cached_trellis(alphabet, N, emax) if cache else build_trellis(alphabet, N, emax)
        return cls(trellis, k)

    @property
    def N(self) -> int:
        return self.trellis.N

    @property
    def alphabet(self) -> AmplitudeAlphabet:
        return self.trellis.alphabet

    @property
    def shaping_rate(self) -> float:
        return self.k / self.N

    @property
    def log2_size(self) -> float:
        """Unfloored ``log2 T_0^0``, the rate the sphere could carry."""
        t = self.trellis.size
        shift = max(t.bit_length() - 64, 0)
        return math.log2(t >> shift) + shift

    def shape(self, bits) -> np.ndarray:
        return ess_shape(self, bits)

    def deshape(self, amplitudes) -> np.ndarray:
        return ess_deshape(self, amplitudes)

    def distribution(self) -> AmplitudeDistribution:
        return ess_induced_distribution(self.trellis)

    def rate_loss_report(self) -> RateLossReport:
        return rate_loss(self.distribution(), self.k, self.N)


def ess_shape(code: EssCode, word) -> np.ndarray:
    """Map a ``k``-bit word (big-endian) to the in-sphere sequence of that index."""
    w = np.asarray(word, dtype=np.uint8).ravel()
    if w.size != code.k:
        raise ShapingError(f"word length {w.size} != k={code.k}")
    return ess_sequence(code.trellis, bits_to_int(w))


def ess_deshape(code: EssCode, sequence) -> np.ndarray:
    """Recover the ``k``-bit word; indices past ``2**k`` raise :class:`DecodeFailure`."""
    idx = ess_index(code.trellis, sequence)
    if idx >> code.k:
        raise DecodeFailure(f"index {idx} is not below 2**{code.k}")
    return int_to_bits(idx, code.k)


def ess_induced_distribution(trellis: EnumerativeTrellis) -> AmplitudeDistribution:
    """Position-averaged amplitude marginal over all ``T_0^0`` sequences.

    Exact: ``P(a) = sum_n sum_e F_n^e T_{n+1}^{e+a^2} / (N T_0^0)`` with ``F``
    the forward path counts from the origin.
    """
    shifts = [int(d) for d in trellis.alphabet.level_shifts]
    J, rows = trellis.levels, trellis.rows
    weights = [0] * len(shifts)
    fwd = [1] + [0] * (J - 1)
    for n in range(trellis.N):
        nxt_t = rows[n + 1]
        nxt_f = [0] * J
        for i, d in enumerate(shifts):
            if d >= J:
                continue
            weights[i] += sum(map(operator.mul, fwd[: J - d], nxt_t[d:]))
            nxt_f[d:] = map(operator.add, nxt_f[d:], fwd[: J - d])
        fwd = nxt_f
    total = trellis.N * trellis.size
    probs = [float(Fraction(w, total)) for w in weights]
    return AmplitudeDistribution.from_weights(trellis.alphabet, probs)


# -- floating-point design path (large N) ------------------------------------


@dataclass(frozen=True)
class EssDesign:
    """Rate bookkeeping of an ESS code computed in log-domain floats."""

    alphabet: AmplitudeAlphabet
    N: int
    k: int
    Emax: int
    log2_size: float
    distribution: AmplitudeDistribution

    def rate_loss_report(self) -> RateLossReport:
        return rate_loss(self.distribution, self.k, self.N)


def ess_design(alphabet: AmplitudeAlphabet, N: int, k: int) -> EssDesign:
    """Sphere radius, size and induced marginal for ``k`` bits per ``N`` amplitudes.

    Uses the float kernels, so it scales to blocklengths where the exact
    trellis no longer fits in memory.
    """
    if k > N * (alphabet.m - 1):
        raise ShapingError(f"k={k} exceeds N*(m-1)={N * (alphabet.m - 1)}")
    shifts = alphabet.level_shifts
    j = _float_level_hint(alphabet, N, k)
    log_t = _kernels.log_backward_counts(N, j, shifts)
    probs = _kernels.log_marginals(log_t, shifts)
    return EssDesign(
        alphabet=alphabet,
        N=N,
        k=k,
        Emax=N + 8 * j,
        log2_size=float(log_t[0, 0] / math.log(2)),
        distribution=AmplitudeDistribution.from_weights(alphabet, probs),
    )


def ess_rate_loss(alphabet: AmplitudeAlphabet, N: int, shaping_rate: float) -> RateLossReport:
    """Rate loss of the smallest sphere carrying ``ceil(shaping_rate * N)`` bits."""
    k = math.ceil(shaping_rate * N - 1e-9)
    return ess_design(alphabet, N, k).rate_loss_report()


# -- binary export / import ---------------------------------------------------


def save_trellis(trellis: EnumerativeTrellis, path) -> None:
    """Write the versioned binary table: header, then row-major length-prefixed counts."""
    amps = trellis.alphabet.amplitudes
    header = struct.pack(
        f">4sHHH{len(amps)}IIQI",
        _MAGIC,
        _VERSION,
        trellis.alphabet.m,
        len(amps),
        *amps,
        trellis.N,
        trellis.Emax,
        trellis.levels,
    )
    parts = [header]
    for row in trellis.rows:
        for t in row:
            raw = t.to_bytes((t.bit_length() + 7) // 8, "big")
            parts.append(struct.pack(">I", len(raw)))
            parts.append(raw)
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(b"".join(parts))
    os.replace(tmp, path)


def load_trellis(path) -> EnumerativeTrellis:
    data = Path(path).read_bytes()
    magic, version, m, n_amp = struct.unpack_from(">4sHHH", data, 0)
    if magic != _MAGIC or version != _VERSION:
        raise ShapingError(f"{path}: not a version-{_VERSION} trellis file")
    off = 10
    amps = struct.unpack_from(f">{n_amp}I", data, off)
    off += 4 * n_amp
    N, emax, J = struct.unpack_from(">IQI", data, off)
    off += 16
    alphabet = AmplitudeAlphabet(m)
    if tuple(amps) != alphabet.amplitudes:
        raise ShapingError(f"{path}: alphabet mismatch")
    rows = []
    for _ in range(N + 1):
        row = []
        for _ in range(J):
            (ln,) = struct.unpack_from(">I", data, off)
            off += 4
            row.append(int.from_bytes(data[off : off + ln], "big"))
            off += ln
        rows.append(row)
    if off != len(data):
        raise ShapingError(f"{path}: trailing bytes")
    return EnumerativeTrellis(alphabet, N, emax, tuple(rows))


def cached_trellis(alphabet: AmplitudeAlphabet, N: int, Emax: int, cache_dir=None) -> EnumerativeTrellis:
    """Build a trellis, reusing a serialized copy from the cache directory if present."""
    cache_dir = cache_dir or os.environ.get(CACHE_ENV)
    if not cache_dir:
        return build_trellis(alphabet, N, Emax)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = cache_dir / f"ess_m{alphabet.m}_N{N}_E{Emax}.trellis"
    if path.exists():
        return load_trellis(path)
    trellis = build_trellis(alphabet, N, Emax)
    save_trellis(trellis, path)
    return trellis
