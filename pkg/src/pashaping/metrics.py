"""Effective SNR, bitwise LLRs, the finite-length BMD rate and pre-FEC BER."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass

import numpy as np

from ._kernels import pam_llrs
from .core import AmplitudeDistribution, entropy
from .pas import PamConstellation


@dataclass(frozen=True)
class MetricReport:
    effective_snr: float  # dB
    air_n: float  # bits per 2D symbol
    rate_loss_used: float
    ber_pre: float
    sample_count: int

    def __post_init__(self):
        if self.sample_count <= 0:
            raise ValueError("sample_count must be positive")

    def as_row(self, **keys) -> dict:
        return {**keys, **asdict(self)}


def effective_snr(tx_symbols, rx_symbols) -> float:
    """``10 log10(E|X|^2 / E|Y - X|^2)``; ``inf`` when ``Y == X`` exactly."""
    x = np.asarray(tx_symbols).ravel()
    y = np.asarray(rx_symbols).ravel()
    if x.size != y.size or x.size == 0:
        raise ValueError("need equal, nonzero lengths")
    err = np.mean(np.abs(y - x) ** 2)
    sig = np.mean(np.abs(x) ** 2)
    if err == 0:
        return np.inf
    return float(10 * np.log10(sig / err))


def symbol_priors(constellation: PamConstellation, dist: AmplitudeDistribution | None = None) -> np.ndarray:
    """PAM point probabilities: amplitude law split evenly over both signs."""
    if dist is None:
        return np.full(2**constellation.m, 2.0**-constellation.m)
    pa = dist.array
    return 0.5 * np.concatenate([pa[::-1], pa])


def compute_llrs(rx, constellation: PamConstellation, priors, sigma2: float, scale: float = 1.0) -> np.ndarray:
    """Bitwise LLRs ``ln P(b=0|y)/P(b=1|y)`` for real PAM observations.

    ``rx`` is on the scale ``scale * points``; ``sigma2`` is the complex noise
    variance on that scale, so each real dimension sees ``sigma2 / 2``.
    Returns an ``(n, m)`` array.
    """
    if sigma2 <= 0:
        raise ValueError("noise variance must be positive")
    p = np.asarray(priors, dtype=float)
    with np.errstate(divide="ignore"):
        logp = np.log(p)
    y = np.asarray(rx, dtype=float).ravel()
    pts = constellation.points.astype(float) * scale
    return pam_llrs(y, pts, logp, constellation.labels, sigma2)


def conditional_entropy_bits(bits, llrs) -> np.ndarray:
    """Per-plane estimate of ``H(C_j | Y)`` as the mean of ``log2(1 + exp(-(1-2c) L))``."""
    c = np.asarray(bits, dtype=float)
    L = np.asarray(llrs, dtype=float)
    if c.shape != L.shape:
        raise ValueError(f"bit matrix {c.shape} and LLR matrix {L.shape} differ")
    return np.logaddexp(0.0, -(1 - 2 * c) * L).mean(axis=0) / np.log(2)


def label_entropy(dist: AmplitudeDistribution | None, m: int) -> float:
    """Entropy of a PAM label: uniform sign bit plus the amplitude law."""
    if dist is None:
        return float(m)
    return 1.0 + entropy(dist)


def air_n(bit_matrix, llr_matrix, rate_loss: float, label_bits_entropy: float) -> float:
    """Finite-length BMD rate in bits per 2D symbol.

    ``2 [H(C) - sum_j H(C_j|Y)] - 2 R_L`` with the per-PAM-symbol label
    entropy ``H(C)`` given by the caller and the conditional terms estimated
    from the record.
    """
    if rate_loss < -1e-12:
        raise ValueError("rate loss must be nonnegative")
    hc_y = conditional_entropy_bits(bit_matrix, llr_matrix).sum()
    return float(2 * (label_bits_entropy - hc_y) - 2 * rate_loss)


def ber(reference_bits, llr_or_decisions) -> float:
    """Fraction of wrong hard decisions; float input is read as LLRs (``L < 0`` means 1)."""
    ref = np.asarray(reference_bits).ravel()
    d = np.asarray(llr_or_decisions).ravel()
    if ref.size != d.size:
        raise ValueError("lengths differ")
    if d.dtype.kind == "f":
        d = (d < 0).astype(np.uint8)
    return float(np.mean(ref.astype(np.uint8) != d.astype(np.uint8)))


def gray_pam_ber(m: int, snr_db: float) -> float:
    """Nearest-neighbour approximation of Gray-labelled square QAM BER.

    ``snr_db`` is per 2D symbol for unit-energy ``2**(2m)``-QAM built from two
    ``2**m``-PAM.
    """
    M = 2**m
    s = np.sqrt(3 / (2 * (M * M - 1)))  # half spacing of the unit-energy grid
    sigma = np.sqrt(10 ** (-snr_db / 10) / 2)  # per real dimension
    q = 0.5 * math.erfc(s / sigma / np.sqrt(2))
    return float(2 * (1 - 1 / M) / m * q)


def report_csv(rows, fields=None) -> str:
    rows = list(rows)
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields or list(rows[0].keys()), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()
