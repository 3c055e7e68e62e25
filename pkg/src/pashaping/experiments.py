"""Sweeps behind the command line: rate loss, AWGN and fiber rates, round trips.

Each sweep point gets its own generator seeded with ``master_seed ^ index``,
so points are independent and any point can be recomputed alone. Results
come back in grid order whatever the worker count.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .ccdm import ccdm_code_for_rate
from .channel import AwgnConfig, FiberLinkConfig, awgn, fiber_transmission
from .core import AmplitudeAlphabet, DecodeFailure, ShapingError, fit_mb_for_entropy, mb_distribution
from .ess import EssCode, build_trellis, choose_emax_for_rate, ess_rate_loss
from .metrics import MetricReport, air_n, ber, compute_llrs, effective_snr, label_entropy, symbol_priors
from .pas import brgc_labels, pam_to_qam, qam_to_pam

SCHEMES = ("uniform", "ess", "ccdm")

# exact ESS trellises past this many big integers do not fit in memory
ESS_CELL_LIMIT = 6_000_000


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: str = "ess"
    m: int = 3
    blocklength: int = 200
    shaping_rate: float = 1.85
    gamma: float = 0.0
    channel: str = "awgn"
    snr_grid: tuple = (14.0,)
    power_grid: tuple = (0.0,)
    spans: int = 10
    step_km: float = 0.1
    seed: int = 1
    symbols: int = 100_000  # 2D symbols per point
    workers: int = 1
    link: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ShapingError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.channel not in ("awgn", "fiber"):
            raise ShapingError(f"channel must be awgn or fiber, got {self.channel!r}")
        if self.m < 2 or self.blocklength < 1 or self.symbols < 1 or self.spans < 1:
            raise ShapingError("m >= 2 and positive blocklength, symbols and spans are required")
        if self.scheme != "uniform" and not 0 < self.shaping_rate <= self.m - 1:
            raise ShapingError(f"shaping rate must lie in (0, {self.m - 1}]")
        if not 0 <= self.gamma <= 1:
            raise ShapingError("gamma must lie in [0, 1]")
        object.__setattr__(self, "snr_grid", tuple(float(x) for x in self.snr_grid))
        object.__setattr__(self, "power_grid", tuple(float(x) for x in self.power_grid))
        if not self.grid:
            raise ShapingError("sweep grid is empty")

    @property
    def grid(self) -> tuple:
        return self.snr_grid if self.channel == "awgn" else self.power_grid

    def digest(self) -> str:
        """Hash of everything that affects results (worker count excluded)."""
        d = asdict(self)
        d.pop("workers")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    def fiber_link(self) -> FiberLinkConfig:
        return FiberLinkConfig(n_spans=self.spans, step_km=self.step_km, **self.link)


def point_seed(master_seed: int, index: int) -> int:
    return int(master_seed) ^ int(index)


# -- shapers ------------------------------------------------------------------


@lru_cache(maxsize=16)
def make_shaper(scheme: str, m: int, N: int, shaping_rate: float):
    """Shaper for ``ceil(shaping_rate * N)`` bits, or ``None`` for uniform signalling."""
    if scheme == "uniform":
        return None
    alphabet = AmplitudeAlphabet(m)
    if scheme == "ccdm":
        return ccdm_code_for_rate(alphabet, N, shaping_rate)
    if scheme != "ess":
        raise ShapingError(f"unknown scheme {scheme!r}")
    k = math.ceil(shaping_rate * N - 1e-9)
    # the sphere radius sits close to N times the mean energy of the matching
    # MB law; reject hopeless sizes before the exact radius search
    mb = mb_distribution(alphabet, fit_mb_for_entropy(alphabet, min(k / N, alphabet.m - 1)))
    guess = (N + 1) * (N * (float(np.dot(mb.array, np.square(alphabet.amplitudes))) - 1) / 8 + 1)
    if guess > 1.25 * ESS_CELL_LIMIT:
        raise ShapingError(f"an exact ESS trellis for N={N} needs ~{int(guess)} big integers; use ccdm")
    emax = choose_emax_for_rate(alphabet, N, k)
    cells = (N + 1) * ((emax - N) // 8 + 1)
    if cells > ESS_CELL_LIMIT:
        raise ShapingError(f"an exact ESS trellis for N={N} needs ~{cells} big integers; use ccdm")
    return EssCode.for_rate(alphabet, N, k)


@lru_cache(maxsize=16)
def shaper_statistics(scheme: str, m: int, N: int, shaping_rate: float) -> tuple:
    """``(amplitude law or None, rate loss)`` of the configured shaper."""
    shaper = make_shaper(scheme, m, N, shaping_rate)
    if shaper is None:
        return None, 0.0
    rep = shaper.rate_loss_report()
    return shaper.distribution(), max(rep.rate_loss, 0.0)


def shaped_amplitudes(shaper, n_frames: int, rng: np.random.Generator) -> np.ndarray:
    """Concatenated shaper outputs for ``n_frames`` uniformly random words."""
    words = rng.integers(0, 2, size=(n_frames, shaper.k), dtype=np.uint8)
    return np.concatenate([shaper.shape(w) for w in words])


def pam_record(scheme: str, m: int, N: int, shaping_rate: float, n_pam: int, rng):
    """Integer PAM points and their ``(n, m)`` labels for one record.

    Shaped records are whole shaper blocks cut to ``n_pam``. Signs are drawn
    uniformly, standing in for the parity of a systematic code.
    """
    const = brgc_labels(m)
    if scheme == "uniform":
        idx = rng.integers(0, 2**m, size=n_pam)
        return const.points[idx], const.labels[idx]
    shaper = make_shaper(scheme, m, N, shaping_rate)
    amps = shaped_amplitudes(shaper, -(-n_pam // N), rng)[:n_pam]
    signs = rng.integers(0, 2, size=n_pam)
    pts = np.where(signs == 1, amps, -amps)
    return pts, const.label_of(pts)


def qam_record(cfg: ExperimentConfig, rng):
    """Unit-energy QAM symbols, the labels behind them, and the PAM-to-QAM scale."""
    pts, labels = pam_record(cfg.scheme, cfg.m, cfg.blocklength, cfg.shaping_rate, 2 * cfg.symbols, rng)
    x = pam_to_qam(pts)
    scale = 1.0 / np.sqrt(np.mean(np.abs(x) ** 2))
    return x * scale, labels, scale


def evaluate_record(x, y, labels, scale: float, m: int, dist, rate_loss: float) -> MetricReport:
    """Metrics for unit-energy QAM ``x`` received as ``y``.

    The demapper assumes circular Gaussian noise with the measured error
    variance and uses the shaper's amplitude law as prior.
    """
    const = brgc_labels(m)
    sigma2 = float(np.mean(np.abs(y - x) ** 2)) or 1e-12
    llrs = compute_llrs(qam_to_pam(y), const, symbol_priors(const, dist), sigma2, scale=scale)
    return MetricReport(
        effective_snr=effective_snr(x, y),
        air_n=air_n(labels, llrs, rate_loss, label_entropy(dist, m)),
        rate_loss_used=rate_loss,
        ber_pre=ber(labels, llrs),
        sample_count=int(x.size),
    )


# -- sweeps -------------------------------------------------------------------


def _awgn_point(cfg: ExperimentConfig, index: int) -> dict:
    snr = cfg.snr_grid[index]
    rng = np.random.default_rng(point_seed(cfg.seed, index))
    dist, rl = shaper_statistics(cfg.scheme, cfg.m, cfg.blocklength, cfg.shaping_rate)
    x, labels, scale = qam_record(cfg, rng)
    y = awgn(x, AwgnConfig.from_snr_db(snr), rng)
    rep = evaluate_record(x, y, labels, scale, cfg.m, dist, rl)
    return rep.as_row(scheme=cfg.scheme, N=cfg.blocklength, snr_db=snr, seed=point_seed(cfg.seed, index))


def _fiber_point(cfg: ExperimentConfig, index: int) -> dict:
    p = cfg.power_grid[index]
    rng = np.random.default_rng(point_seed(cfg.seed, index))
    dist, rl = shaper_statistics(cfg.scheme, cfg.m, cfg.blocklength, cfg.shaping_rate)
    x, labels, scale = qam_record(cfg, rng)
    block = cfg.blocklength // 2 if cfg.scheme != "uniform" else None
    run = fiber_transmission(x, cfg.fiber_link(), p, rng, derotation_block=block)
    rep = evaluate_record(run.tx, run.rx, labels, scale, cfg.m, dist, rl)
    return rep.as_row(scheme=cfg.scheme, N=cfg.blocklength, power_dbm=p, seed=point_seed(cfg.seed, index))


def _run_point(args):
    cfg, index = args
    return _fiber_point(cfg, index) if cfg.channel == "fiber" else _awgn_point(cfg, index)


def run_sweep(cfg: ExperimentConfig) -> list[dict]:
    """Evaluate every grid point; rows come back in grid order."""
    jobs = [(cfg, i) for i in range(len(cfg.grid))]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_run_point, jobs))
    else:
        rows = [_run_point(j) for j in jobs]
    h = cfg.digest()
    return [{"config": h, **r} for r in rows]


def rate_loss_sweep(m: int, shaping_rate: float, blocklengths) -> list[dict]:
    """ESS and CCDM rate loss over a blocklength grid at a fixed shaping rate."""
    alphabet = AmplitudeAlphabet(m)
    rows = []
    for N in blocklengths:
        e = ess_rate_loss(alphabet, int(N), shaping_rate)
        c = ccdm_code_for_rate(alphabet, int(N), shaping_rate).rate_loss_report()
        rows.append(
            {
                "N": int(N),
                "k_ess": e.k,
                "entropy_ess": e.entropy,
                "rate_loss_ess": e.rate_loss,
                "k_ccdm": c.k,
                "entropy_ccdm": c.entropy,
                "rate_loss_ccdm": c.rate_loss,
            }
        )
    return rows


def blocklength_at_rate_loss(blocklengths, rate_losses, target: float) -> float:
    """First blocklength where the rate loss falls to ``target``, by log-log interpolation."""
    N = np.asarray(blocklengths, dtype=float)
    R = np.asarray(rate_losses, dtype=float)
    for i in range(len(N)):
        if R[i] <= target:
            if i == 0:
                return float(N[0])
            x0, x1 = np.log(N[i - 1]), np.log(N[i])
            y0, y1 = np.log(R[i - 1]), np.log(R[i])
            t = (np.log(target) - y0) / (y1 - y0)
            return float(np.exp(x0 + t * (x1 - x0)))
    return float("nan")


def trellis_table(m: int, N: int, Emax: int) -> str:
    """Text table of the path counts: one line per stage, one ``e:T`` cell per reachable energy."""
    t = build_trellis(AmplitudeAlphabet(m), N, Emax)
    lines = [f"m={m} N={N} Emax={Emax} size={t.size}"]
    for n in range(N + 1):
        cells = " ".join(f"{e}:{c}" for e, c in t.reachable_states(n))
        lines.append(f"n={n} {cells}")
    return "\n".join(lines)


@dataclass
class RoundTripSummary:
    scheme: str
    N: int
    k: int
    trials: int
    passed: int = 0
    wrong_payload: int = 0
    decode_failures: int = 0

    @property
    def ok(self) -> bool:
        return self.passed == self.trials


def roundtrip(scheme: str, m: int, N: int, trials: int, seed: int, shaping_rate: float = 1.85, corrupt: bool = False):
    """Shape and deshape ``trials`` random words.

    With ``corrupt=True`` one amplitude per block is moved to a neighbouring
    amplitude before deshaping, and outcomes are tallied instead of asserted.
    """
    shaper = make_shaper(scheme, m, N, shaping_rate)
    if shaper is None:
        raise ShapingError("round trips need a shaper, not uniform signalling")
    rng = np.random.default_rng(seed)
    top = 2**m - 1
    out = RoundTripSummary(scheme, N, shaper.k, trials)
    for _ in range(trials):
        w = rng.integers(0, 2, size=shaper.k, dtype=np.uint8)
        a = shaper.shape(w)
        if corrupt:
            i = int(rng.integers(N))
            a = a.copy()
            a[i] = a[i] + 2 if a[i] < top else a[i] - 2
        try:
            back = shaper.deshape(a)
        except DecodeFailure:
            out.decode_failures += 1
            continue
        if np.array_equal(back, w):
            out.passed += 1
        else:
            out.wrong_payload += 1
    return out
