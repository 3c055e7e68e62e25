"""Numeric inner loops: log-domain trellis counting and PAM soft demapping.

Every kernel has a ``_nb`` loop version (numba) and a ``_np`` vectorised
version; the public names dispatch on :data:`pashaping._backend.USE_NUMBA`.

Trellis kernels work on compact energy levels. At stage ``n`` the level ``j``
stands for the accumulated energy ``n + 8*j`` (odd amplitudes square to 1 mod
8), so an amplitude ``a`` moves a path from level ``j`` to ``j + (a*a - 1)//8``.
"""

from __future__ import annotations

import math

import numpy as np

from ._backend import USE_NUMBA, njit

NEG_INF = -np.inf


# -- backward path counts ---------------------------------------------------


@njit
def _log_backward_counts_nb(N, J, shifts):
    out = np.full((N + 1, J + 1), -np.inf)
    for j in range(J + 1):
        out[N, j] = 0.0
    for n in range(N - 1, -1, -1):
        for j in range(J + 1):
            m = -np.inf
            for d in shifts:
                if j + d <= J:
                    v = out[n + 1, j + d]
                    if v > m:
                        m = v
            if m == -np.inf:
                continue
            s = 0.0
            for d in shifts:
                if j + d <= J:
                    s += math.exp(out[n + 1, j + d] - m)
            out[n, j] = m + math.log(s)
    return out


def _log_backward_counts_np(N, J, shifts):
    out = np.full((N + 1, J + 1), NEG_INF)
    out[N, :] = 0.0
    stacked = np.full((len(shifts), J + 1), NEG_INF)
    with np.errstate(invalid="ignore"):
        for n in range(N - 1, -1, -1):
            nxt = out[n + 1]
            stacked.fill(NEG_INF)
            for i, d in enumerate(shifts):
                stacked[i, : J + 1 - d] = nxt[d:]
            out[n] = np.logaddexp.reduce(stacked, axis=0)
    return out


def log_backward_counts(N: int, J: int, shifts: np.ndarray) -> np.ndarray:
    """Natural log of ``T_n`` for every stage ``n`` and level ``0..J``.

    Entries with no path to the final stage are ``-inf``.
    """
    shifts = np.ascontiguousarray(shifts, dtype=np.int64)
    if USE_NUMBA:
        return _log_backward_counts_nb(int(N), int(J), shifts)
    return _log_backward_counts_np(int(N), int(J), shifts)


# -- forward pass and position-averaged marginal -----------------------------


@njit
def _log_marginals_nb(log_t, shifts):
    N = log_t.shape[0] - 1
    J = log_t.shape[1] - 1
    A = shifts.shape[0]
    fwd = np.full(J + 1, -np.inf)
    fwd[0] = 0.0
    acc = np.zeros(A)
    w = np.empty(A)
    for n in range(N):
        nxt = np.full(J + 1, -np.inf)
        for i in range(A):
            d = shifts[i]
            m = -np.inf
            for j in range(J + 1 - d):
                v = fwd[j] + log_t[n + 1, j + d]
                if v > m:
                    m = v
            s = 0.0
            if m > -np.inf:
                for j in range(J + 1 - d):
                    s += math.exp(fwd[j] + log_t[n + 1, j + d] - m)
                w[i] = m + math.log(s)
            else:
                w[i] = -np.inf
            for j in range(J + 1 - d):
                a = fwd[j]
                if a == -np.inf:
                    continue
                b = nxt[j + d]
                if b == -np.inf:
                    nxt[j + d] = a
                elif a > b:
                    nxt[j + d] = a + math.log1p(math.exp(b - a))
                else:
                    nxt[j + d] = b + math.log1p(math.exp(a - b))
        wm = w.max()
        tot = 0.0
        for i in range(A):
            tot += math.exp(w[i] - wm)
        for i in range(A):
            acc[i] += math.exp(w[i] - wm) / tot
        top = nxt.max()
        for j in range(J + 1):
            nxt[j] -= top
        fwd = nxt
    return acc / N


def _log_marginals_np(log_t, shifts):
    N = log_t.shape[0] - 1
    J = log_t.shape[1] - 1
    A = len(shifts)
    fwd = np.full(J + 1, NEG_INF)
    fwd[0] = 0.0
    acc = np.zeros(A)
    w = np.empty(A)
    stacked = np.full((A, J + 1), NEG_INF)
    with np.errstate(invalid="ignore"):
        for n in range(N):
            stacked.fill(NEG_INF)
            for i, d in enumerate(shifts):
                w[i] = np.logaddexp.reduce(fwd[: J + 1 - d] + log_t[n + 1, d:])
                stacked[i, d:] = fwd[: J + 1 - d]
            p = np.exp(w - w.max())
            acc += p / p.sum()
            nxt = np.logaddexp.reduce(stacked, axis=0)
            fwd = nxt - nxt.max()
    return acc / N


def log_marginals(log_t: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    """Position-averaged amplitude marginal over every path of the trellis."""
    shifts = np.ascontiguousarray(shifts, dtype=np.int64)
    log_t = np.ascontiguousarray(log_t, dtype=np.float64)
    if USE_NUMBA:
        return _log_marginals_nb(log_t, shifts)
    return _log_marginals_np(log_t, shifts)


# -- sphere sizes for every radius -------------------------------------------


@njit
def _log_energy_counts_nb(N, shifts):
    dmax = 0
    for d in shifts:
        if d > dmax:
            dmax = d
    L = dmax * N + 1
    cur = np.full(L, -np.inf)
    cur[0] = 0.0
    for n in range(N):
        hi = dmax * n
        nxt = np.full(L, -np.inf)
        for j in range(hi + 1):
            a = cur[j]
            if a == -np.inf:
                continue
            for d in shifts:
                b = nxt[j + d]
                if b == -np.inf:
                    nxt[j + d] = a
                elif a > b:
                    nxt[j + d] = a + math.log1p(math.exp(b - a))
                else:
                    nxt[j + d] = b + math.log1p(math.exp(a - b))
        cur = nxt
    return cur


def _log_energy_counts_np(N, shifts):
    dmax = int(max(shifts))
    L = dmax * N + 1
    cur = np.full(L, NEG_INF)
    cur[0] = 0.0
    stacked = np.full((len(shifts), L), NEG_INF)
    with np.errstate(invalid="ignore"):
        for _ in range(N):
            stacked.fill(NEG_INF)
            for i, d in enumerate(shifts):
                stacked[i, d:] = cur[: L - d]
            cur = np.logaddexp.reduce(stacked, axis=0)
    return cur


def log_energy_counts(N: int, shifts: np.ndarray) -> np.ndarray:
    """Log number of length-``N`` sequences at each final level (energy ``N + 8j``)."""
    shifts = np.ascontiguousarray(shifts, dtype=np.int64)
    if USE_NUMBA:
        return _log_energy_counts_nb(int(N), shifts)
    return _log_energy_counts_np(int(N), shifts)


# -- PAM soft demapper --------------------------------------------------------


@njit
def _pam_llrs_nb(y, points, log_priors, labels, sigma2):
    n = y.shape[0]
    M = points.shape[0]
    m = labels.shape[1]
    out = np.empty((n, m))
    met = np.empty(M)
    for t in range(n):
        for i in range(M):
            e = y[t] - points[i]
            met[i] = log_priors[i] - e * e / sigma2
        for b in range(m):
            m0 = -np.inf
            m1 = -np.inf
            for i in range(M):
                if labels[i, b] == 0:
                    if met[i] > m0:
                        m0 = met[i]
                elif met[i] > m1:
                    m1 = met[i]
            s0 = 0.0
            s1 = 0.0
            for i in range(M):
                if labels[i, b] == 0:
                    s0 += math.exp(met[i] - m0)
                else:
                    s1 += math.exp(met[i] - m1)
            l0 = m0 + math.log(s0) if m0 > -np.inf else -np.inf
            l1 = m1 + math.log(s1) if m1 > -np.inf else -np.inf
            out[t, b] = l0 - l1
    return out


def _pam_llrs_np(y, points, log_priors, labels, sigma2, chunk=1 << 17):
    n = y.shape[0]
    m = labels.shape[1]
    out = np.empty((n, m))
    zero = labels == 0
    for lo in range(0, n, chunk):
        yc = y[lo : lo + chunk]
        met = log_priors[None, :] - (yc[:, None] - points[None, :]) ** 2 / sigma2
        for b in range(m):
            l0 = np.logaddexp.reduce(np.where(zero[None, :, b], met, NEG_INF), axis=1)
            l1 = np.logaddexp.reduce(np.where(zero[None, :, b], NEG_INF, met), axis=1)
            out[lo : lo + chunk, b] = l0 - l1
    return out


def pam_llrs(y, points, log_priors, labels, sigma2: float) -> np.ndarray:
    """Exact bitwise LLRs ``ln P(b=0|y) / P(b=1|y)`` for a real PAM observation.

    The likelihood kernel is ``exp(-(y - x)**2 / sigma2)``; with ``sigma2`` the
    complex noise variance this is the per-quadrature Gaussian density.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    points = np.ascontiguousarray(points, dtype=np.float64)
    log_priors = np.ascontiguousarray(log_priors, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    if USE_NUMBA:
        return _pam_llrs_nb(y, points, log_priors, labels, float(sigma2))
    return _pam_llrs_np(y, points, log_priors, labels, float(sigma2))


# -- Kerr phase ---------------------------------------------------------------


@njit
def _kerr_phase_nb(u, coeff):
    for i in range(u.shape[0]):
        z = u[i]
        phi = coeff * (z.real * z.real + z.imag * z.imag)
        u[i] = z * complex(math.cos(phi), math.sin(phi))


def _kerr_phase_np(u, coeff):
    u *= np.exp(1j * coeff * (u.real**2 + u.imag**2))


def kerr_phase(u: np.ndarray, coeff: float) -> None:
    """In place ``u *= exp(1j * coeff * |u|**2)``."""
    if USE_NUMBA:
        _kerr_phase_nb(u, float(coeff))
    else:
        _kerr_phase_np(u, float(coeff))
