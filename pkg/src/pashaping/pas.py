"""Probabilistic amplitude shaping frames.

A frame carries ``N`` PAM symbols. The shaper turns ``k`` bits into ``N``
amplitudes, whose binary labels feed a systematic FEC together with ``gamma*N``
uncoded information bits. The sign of each symbol is taken from the sign
vector: the ``gamma*N`` information bits first, then the ``(1-gamma)*N``
parity bits.

Labels are binary reflected Gray codes over ``-(2**m - 1), ..., 2**m - 1`` in
increasing order, most significant bit first. The first bit is the sign
(``1`` for positive points) and the remaining ``m - 1`` bits name the
amplitude; the code is mirror-symmetric so ``+a`` and ``-a`` share them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Protocol

import numpy as np

from .core import AmplitudeAlphabet, ShapingError


@dataclass(frozen=True)
class PamConstellation:
    m: int
    points: np.ndarray = field(init=False, repr=False, compare=False)
    labels: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ShapingError(f"m must be an integer >= 2, got {self.m!r}")
        M = 2**self.m
        idx = np.arange(M)
        gray = idx ^ (idx >> 1)
        shifts = np.arange(self.m - 1, -1, -1)
        labels = ((gray[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
        object.__setattr__(self, "points", (2 * idx - (M - 1)).astype(np.int64))
        object.__setattr__(self, "labels", labels)
        self.points.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def alphabet(self) -> AmplitudeAlphabet:
        return AmplitudeAlphabet(self.m)

    @property
    def amplitude_labels(self) -> np.ndarray:
        """``(2**(m-1), m-1)`` label bits for amplitudes ``1, 3, ...``."""
        return self.labels[2 ** (self.m - 1) :, 1:]

    def amplitude_code(self) -> np.ndarray:
        """Lookup from the integer value of the amplitude bits to the amplitude."""
        w = 1 << np.arange(self.m - 2, -1, -1)
        table = np.zeros(2 ** (self.m - 1), dtype=np.int64)
        table[self.amplitude_labels.astype(np.int64) @ w] = self.alphabet.amplitudes
        return table

    def index_of_bits(self, bits: np.ndarray) -> np.ndarray:
        """Point index for each row of an ``(n, m)`` label array."""
        w = 1 << np.arange(self.m - 1, -1, -1)
        inv = np.empty(2**self.m, dtype=np.int64)
        inv[self.labels.astype(np.int64) @ w] = np.arange(2**self.m)
        return inv[np.asarray(bits, dtype=np.int64) @ w]

    def label_of(self, symbols) -> np.ndarray:
        """``(n, m)`` labels of PAM symbols."""
        s = np.asarray(symbols, dtype=np.int64)
        idx = (s + 2**self.m - 1) // 2
        if np.any((s % 2) == 0) or np.any(idx < 0) or np.any(idx >= 2**self.m):
            raise ShapingError("symbols outside the PAM alphabet")
        return self.labels[idx]


def brgc_labels(m: int) -> PamConstellation:
    return PamConstellation(m)


class SystematicFecInterface(Protocol):
    """Systematic encoder: the payload is sent as is and only parity is returned."""

    n_payload: int
    n_parity: int

    def encode(self, payload: np.ndarray) -> np.ndarray: ...


class RandomParityFec:
    """Stand-in systematic code: parity is a seeded random GF(2) matrix product.

    Deterministic and encode-only. It has the right shape for framing tests
    and gives sign bits that look uniform; it has no useful distance.
    """

    def __init__(self, n_payload: int, n_parity: int, seed: int = 0):
        if n_payload < 0 or n_parity < 0:
            raise ShapingError("FEC dimensions must be nonnegative")
        self.n_payload = int(n_payload)
        self.n_parity = int(n_parity)
        self.seed = seed
        rng = np.random.default_rng(seed)
        # float32 keeps the matmul on BLAS; sums stay far below 2**24
        self._matrix = rng.integers(0, 2, size=(self.n_payload, self.n_parity)).astype(np.float32)

    def encode(self, payload) -> np.ndarray:
        u = np.asarray(payload, dtype=np.float32)
        if u.shape[-1] != self.n_payload:
            raise ShapingError(f"payload length {u.shape[-1]} != {self.n_payload}")
        return (np.rint(u @ self._matrix).astype(np.int64) & 1).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class PasConfig:
    """PAS parameters. ``shaper`` is an :class:`~pashaping.ess.EssCode` or
    :class:`~pashaping.ccdm.CcdmCode`; ``gamma = 1`` (uncoded) is accepted
    for testing."""

    shaper: object
    m: int
    gamma: float = 0.0
    fec: SystematicFecInterface | None = None
    fec_seed: int = 0

    def __post_init__(self):
        if self.shaper.alphabet.m != self.m:
            raise ShapingError(f"shaper alphabet has m={self.shaper.alphabet.m}, config has m={self.m}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ShapingError(f"gamma must lie in [0, 1], got {self.gamma}")
        gN = self.gamma * self.N
        if abs(gN - round(gN)) > 1e-9:
            raise ShapingError(f"gamma*N = {gN} is not an integer")
        if self.fec is None:
            object.__setattr__(self, "fec", RandomParityFec(self.n_payload, self.n_parity, self.fec_seed))
        elif (self.fec.n_payload, self.fec.n_parity) != (self.n_payload, self.n_parity):
            raise ShapingError(
                f"FEC is ({self.fec.n_payload}, {self.fec.n_parity}), frame needs ({self.n_payload}, {self.n_parity})"
            )

    @property
    def N(self) -> int:
        return self.shaper.N

    @property
    def k(self) -> int:
        return self.shaper.k

    @property
    def n_info_signs(self) -> int:
        return round(self.gamma * self.N)

    @property
    def n_parity(self) -> int:
        return self.N - self.n_info_signs

    @property
    def n_payload(self) -> int:
        return self.n_info_signs + (self.m - 1) * self.N

    @property
    def n_info(self) -> int:
        return self.k + self.n_info_signs

    @property
    def code_rate(self) -> Fraction:
        """``(m - 1 + gamma) / m``, exact for the frame."""
        return Fraction(self.n_payload, self.m * self.N)

    @property
    def rate(self) -> Fraction:
        """Information bits per PAM symbol, ``k/N + gamma``."""
        return Fraction(self.n_info, self.N)


@dataclass(frozen=True, eq=False)
class PasFrame:
    amplitudes: np.ndarray
    sign_bits: np.ndarray
    symbols: np.ndarray
    bits: np.ndarray  # (N, m) labels as mapped
    n_shaped: int
    n_info_signs: int
    n_parity: int

    @property
    def N(self) -> int:
        return self.symbols.size

    @property
    def n_info(self) -> int:
        return self.n_shaped + self.n_info_signs


def pas_assemble(config: PasConfig, info_bits) -> PasFrame:
    u = np.asarray(info_bits, dtype=np.uint8).ravel()
    if u.size != config.n_info:
        raise ShapingError(f"need {config.n_info} info bits, got {u.size}")
    const = brgc_labels(config.m)
    amps = np.asarray(config.shaper.shape(u[: config.k]), dtype=np.int64)
    amp_bits = const.amplitude_labels[(amps - 1) // 2]
    extra = u[config.k :]
    payload = np.concatenate([extra, amp_bits.ravel()])
    parity = config.fec.encode(payload)
    signs = np.concatenate([extra, parity]).astype(np.uint8)
    symbols = np.where(signs == 1, amps, -amps)
    bits = np.column_stack([signs, amp_bits]).astype(np.uint8)
    return PasFrame(
        amplitudes=amps,
        sign_bits=signs,
        symbols=symbols,
        bits=bits,
        n_shaped=config.k,
        n_info_signs=config.n_info_signs,
        n_parity=config.n_parity,
    )


def pas_disassemble(config: PasConfig, decided_bits) -> np.ndarray:
    """Recover the ``k + gamma*N`` information bits from hard-decided labels.

    Only the amplitude bit planes and the information sign positions are
    read; parity is not checked. Raises the shaper's decode failure when the
    amplitude planes do not spell a codeword.
    """
    b = np.asarray(decided_bits, dtype=np.uint8)
    if b.size != config.N * config.m:
        raise ShapingError(f"need {config.N * config.m} decided bits, got {b.size}")
    b = b.reshape(config.N, config.m)
    amps = amplitudes_from_bits(b[:, 1:], config.m)
    shaped = config.shaper.deshape(amps)
    return np.concatenate([shaped, b[: config.n_info_signs, 0]]).astype(np.uint8)


def amplitudes_from_bits(amp_bits, m: int) -> np.ndarray:
    """Invert the amplitude bit planes alone (sign plane not needed)."""
    a = np.asarray(amp_bits, dtype=np.int64).reshape(-1, m - 1)
    w = 1 << np.arange(m - 2, -1, -1)
    return brgc_labels(m).amplitude_code()[a @ w]


def map_symbols(frame: PasFrame) -> np.ndarray:
    return frame.symbols


def uniform_map(bits, m: int) -> np.ndarray:
    """Map ``m`` bits per symbol straight to PAM points (no shaping)."""
    b = np.asarray(bits, dtype=np.uint8).ravel()
    if b.size % m:
        raise ShapingError(f"bit count {b.size} is not a multiple of m={m}")
    const = brgc_labels(m)
    return const.points[const.index_of_bits(b.reshape(-1, m))]


def pam_to_qam(pam) -> np.ndarray:
    """Pair consecutive PAM symbols as in-phase and quadrature components."""
    x = np.asarray(pam, dtype=float).ravel()
    if x.size % 2:
        raise ShapingError("need an even number of PAM symbols")
    return x[0::2] + 1j * x[1::2]


def qam_to_pam(qam) -> np.ndarray:
    z = np.asarray(qam).ravel()
    out = np.empty(2 * z.size)
    out[0::2] = z.real
    out[1::2] = z.imag
    return out


def write_frame_csv(frame: PasFrame, path) -> None:
    """Per-position dump: amplitude, sign bit, symbol and label."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["position", "amplitude", "sign", "symbol", "label"])
        for i in range(frame.N):
            w.writerow(
                [i, int(frame.amplitudes[i]), int(frame.sign_bits[i]), int(frame.symbols[i]),
                 "".join(str(int(x)) for x in frame.bits[i])]
            )


def pas_code_rate(m: int, gamma: float) -> float:
    return (m - 1 + gamma) / m


def gamma_for_code_rate(m: int, code_rate: float) -> float:
    """Fraction of sign bits left for information at FEC rate ``code_rate``."""
    g = m * code_rate - (m - 1)
    if not -1e-12 <= g <= 1 + 1e-12:
        raise ShapingError(f"code rate {code_rate} outside [(m-1)/m, 1]")
    return round(min(max(g, 0.0), 1.0), 12)
