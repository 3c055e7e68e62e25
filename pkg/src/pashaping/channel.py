"""AWGN and single-polarization fiber channels with the usual coherent receiver.

Every waveform is treated as one period of a periodic signal. Pulse shaping,
matched filtering, resampling and the split-step solver are all FFT based,
so a record has no edges and no filter transients to trim.

Units are SI throughout (seconds, metres, watts); link parameters are given
in the customary units and converted on use.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict, dataclass, replace

import numpy as np

from ._kernels import kerr_phase

PLANCK = 6.62607015e-34
LIGHT_SPEED = 299_792_458.0

RRC_SPAN = 64  # symbols covered by the truncated filter
RRC_TAPER = 4  # symbols of raised-cosine taper at each end


class ChannelError(RuntimeError):
    """Numerical failure while propagating a waveform."""


@dataclass(frozen=True)
class SignalWaveform:
    samples: np.ndarray
    sample_rate: float
    symbol_rate: float = 45e9

    @property
    def oversampling(self) -> int:
        sps = self.sample_rate / self.symbol_rate
        if abs(sps - round(sps)) > 1e-9:
            raise ValueError(f"non-integer oversampling {sps}")
        return int(round(sps))

    @property
    def power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))

    def with_samples(self, samples) -> "SignalWaveform":
        return replace(self, samples=samples)


@dataclass(frozen=True)
class FiberLinkConfig:
    alpha_db_km: float = 0.2
    D_ps_nm_km: float = 17.0
    gamma_nl: float = 1.3  # 1/(W km)
    span_length_km: float = 80.0
    n_spans: int = 10
    edfa_gain_db: float = 16.0
    edfa_nf_db: float = 5.0
    center_wavelength_nm: float = 1550.0
    step_km: float = 0.1
    ase: bool = True

    def __post_init__(self):
        for name in ("alpha_db_km", "D_ps_nm_km", "gamma_nl", "span_length_km", "edfa_gain_db", "step_km"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.n_spans < 1:
            raise ValueError("need at least one span")
        if not 0 < self.step_km <= 1.0:
            raise ValueError("step must lie in (0, 1] km")

    @property
    def alpha(self) -> float:
        """Power attenuation in 1/m."""
        return self.alpha_db_km / (10 * np.log10(np.e)) / 1e3

    @property
    def beta2(self) -> float:
        """Group-velocity dispersion in s^2/m."""
        lam = self.center_wavelength_nm * 1e-9
        D = self.D_ps_nm_km * 1e-6  # s/m^2
        return -D * lam**2 / (2 * np.pi * LIGHT_SPEED)

    @property
    def gamma(self) -> float:
        return self.gamma_nl / 1e3

    @property
    def frequency(self) -> float:
        return LIGHT_SPEED / (self.center_wavelength_nm * 1e-9)

    @property
    def length(self) -> float:
        return self.n_spans * self.span_length_km * 1e3

    def ase_psd(self) -> float:
        """ASE power spectral density per amplifier, W/Hz."""
        return ase_psd(self.edfa_gain_db, self.edfa_nf_db, self.frequency)

    def analytic_snr_db(self, launch_power_w: float, symbol_rate: float) -> float:
        """Linear-regime SNR: launch power over ASE accumulated in the symbol bandwidth."""
        noise = self.n_spans * self.ase_psd() * symbol_rate
        return float(10 * np.log10(launch_power_w / noise))

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class AwgnConfig:
    """Complex AWGN with variance ``sigma2``, or set from an SNR per 2D symbol."""

    sigma2: float

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValueError("noise variance must be nonnegative")

    @classmethod
    def from_snr_db(cls, snr_db: float, signal_energy: float = 1.0) -> "AwgnConfig":
        return cls(signal_energy / 10 ** (snr_db / 10))

    def snr_db(self, signal_energy: float = 1.0) -> float:
        return float(10 * np.log10(signal_energy / self.sigma2)) if self.sigma2 > 0 else np.inf


def complex_noise(rng: np.random.Generator, n: int, variance: float) -> np.ndarray:
    """Circular Gaussian samples with ``E|n|^2 = variance``."""
    s = np.sqrt(variance / 2)
    z = rng.standard_normal((2, n))
    return s * (z[0] + 1j * z[1])


def awgn(symbols, config: AwgnConfig, rng: np.random.Generator) -> np.ndarray:
    x = np.asarray(symbols, dtype=complex)
    if config.sigma2 == 0:
        return x.copy()
    return x + complex_noise(rng, x.size, config.sigma2).reshape(x.shape)


# -- pulse shaping ------------------------------------------------------------


def rrc_taps(rolloff: float, oversampling: int, span: int = RRC_SPAN, taper: int = RRC_TAPER) -> np.ndarray:
    """Root-raised-cosine impulse response over ``span`` symbols, unit energy.

    The outer ``taper`` symbols on each side are multiplied by a half
    raised-cosine window. Length is ``span * oversampling + 1``.
    """
    if not 0 < rolloff <= 1:
        raise ValueError("roll-off must lie in (0, 1]")
    b = rolloff
    half = span * oversampling // 2
    t = np.arange(-half, half + 1) / oversampling
    h = np.empty_like(t)
    at0 = np.isclose(t, 0.0)
    sing = np.isclose(np.abs(t), 1 / (4 * b))
    reg = ~(at0 | sing)
    tr = t[reg]
    h[reg] = (np.sin(np.pi * tr * (1 - b)) + 4 * b * tr * np.cos(np.pi * tr * (1 + b))) / (
        np.pi * tr * (1 - (4 * b * tr) ** 2)
    )
    h[at0] = 1 - b + 4 * b / np.pi
    h[sing] = b / np.sqrt(2) * ((1 + 2 / np.pi) * np.sin(np.pi / (4 * b)) + (1 - 2 / np.pi) * np.cos(np.pi / (4 * b)))
    edge = span / 2 - taper
    w = np.ones_like(t)
    outer = np.abs(t) > edge
    w[outer] = 0.5 * (1 + np.cos(np.pi * (np.abs(t[outer]) - edge) / taper))
    h *= w
    return h / np.sqrt(np.sum(h**2))


def _cyclic_filter(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    n = x.size
    if taps.size > n:
        raise ValueError(f"record of {n} samples is shorter than the {taps.size}-tap filter")
    half = taps.size // 2
    kernel = np.zeros(n, dtype=complex)
    kernel[: taps.size - half] = taps[half:]
    kernel[n - half :] = taps[:half]
    return np.fft.ifft(np.fft.fft(x) * np.fft.fft(kernel))


def rrc_shape(symbols, rolloff: float = 0.1, oversampling: int = 16, symbol_rate: float = 45e9) -> SignalWaveform:
    """Upsample and filter; mean sample power is ``E|x|^2 / oversampling``."""
    x = np.asarray(symbols, dtype=complex).ravel()
    up = np.zeros(x.size * oversampling, dtype=complex)
    up[::oversampling] = x
    y = _cyclic_filter(up, rrc_taps(rolloff, oversampling))
    return SignalWaveform(y, symbol_rate * oversampling, symbol_rate)


def rrc_matched_filter(waveform: SignalWaveform, rolloff: float = 0.1) -> SignalWaveform:
    taps = rrc_taps(rolloff, waveform.oversampling)
    return waveform.with_samples(_cyclic_filter(waveform.samples, taps[::-1].conj()))


def downsample(waveform: SignalWaveform, offset: int = 0) -> np.ndarray:
    """One sample per symbol."""
    return waveform.samples[offset :: waveform.oversampling].copy()


def resample(waveform: SignalWaveform, oversampling: int) -> SignalWaveform:
    """Change samples per symbol by cutting or zero-padding the spectrum.

    Exact for a periodic record whose spectrum fits the smaller band.
    """
    src = waveform.oversampling
    if oversampling == src:
        return waveform
    n_sym = waveform.samples.size // src
    n_new = n_sym * oversampling
    X = np.fft.fftshift(np.fft.fft(waveform.samples))
    n_old = X.size
    if n_new < n_old:
        lo = (n_old - n_new) // 2
        Y = X[lo : lo + n_new]
    else:
        Y = np.zeros(n_new, dtype=complex)
        lo = (n_new - n_old) // 2
        Y[lo : lo + n_old] = X
    y = np.fft.ifft(np.fft.ifftshift(Y)) * (n_new / n_old)
    return SignalWaveform(y, waveform.symbol_rate * oversampling, waveform.symbol_rate)


def occupied_bandwidth(waveform: SignalWaveform, fraction: float = 0.999) -> float:
    """Smallest centred band holding ``fraction`` of the signal power, Hz."""
    S = np.abs(np.fft.fftshift(np.fft.fft(waveform.samples))) ** 2
    f = np.fft.fftshift(np.fft.fftfreq(S.size, 1 / waveform.sample_rate))
    order = np.argsort(np.abs(f), kind="stable")
    cum = np.cumsum(S[order]) / S.sum()
    i = int(np.searchsorted(cum, fraction))
    return float(2 * np.abs(f[order[min(i, S.size - 1)]]))


# -- fiber --------------------------------------------------------------------


def ase_psd(gain_db: float, nf_db: float, frequency: float) -> float:
    """``(G - 1) n_sp h nu`` with ``n_sp = NF / 2`` (linear)."""
    G = 10 ** (gain_db / 10)
    n_sp = 10 ** (nf_db / 10) / 2
    return (G - 1) * n_sp * PLANCK * frequency


def edfa_amplify(waveform: SignalWaveform, gain_db: float, nf_db: float, rng, frequency: float = LIGHT_SPEED / 1550e-9):
    """Scale the field by ``sqrt(G)`` and add ASE over the simulation bandwidth.

    ``rng=None`` gives a noiseless amplifier.
    """
    G = 10 ** (gain_db / 10)
    if G < 1:
        raise ValueError("EDFA gain must be >= 0 dB")
    y = waveform.samples * np.sqrt(G)
    if rng is not None:
        var = ase_psd(gain_db, nf_db, frequency) * waveform.sample_rate
        y = y + complex_noise(rng, y.size, var)
    return waveform.with_samples(y)


def _omega(waveform: SignalWaveform) -> np.ndarray:
    return 2 * np.pi * np.fft.fftfreq(waveform.samples.size, 1 / waveform.sample_rate)


def ssfm_propagate(waveform: SignalWaveform, link: FiberLinkConfig, rng=None) -> SignalWaveform:
    """Symmetric split-step solution of the scalar NLSE over every span.

    Each step is half dispersion and loss, a Kerr phase with the loss-aware
    effective length, then the other half. Adjacent half steps are merged.
    After each span an EDFA restores the power; ``rng=None`` or
    ``link.ase=False`` switch its noise off.
    """
    w2 = _omega(waveform) ** 2
    L = link.span_length_km * 1e3
    n_steps = max(1, int(np.ceil(link.span_length_km / link.step_km - 1e-9)))
    dz = L / n_steps
    a, b2, g = link.alpha, link.beta2, link.gamma
    half = np.exp((-a / 2 + 0.5j * b2 * w2) * dz / 2)
    full = half * half
    dz_eff = 2 * np.sinh(a * dz / 2) / a if a > 0 else dz
    u = waveform.samples.astype(complex)
    for _ in range(link.n_spans):
        U = np.fft.fft(u) * half
        for s in range(n_steps):
            u = np.fft.ifft(U)
            kerr_phase(u, g * dz_eff)
            U = np.fft.fft(u) * (full if s < n_steps - 1 else half)
        u = np.fft.ifft(U)
        if not np.all(np.isfinite(u)):
            raise ChannelError("non-finite samples during propagation")
        amp = edfa_amplify(
            waveform.with_samples(u), link.edfa_gain_db, link.edfa_nf_db, rng if link.ase else None, link.frequency
        )
        u = amp.samples
    return waveform.with_samples(u)


def cd_compensate(waveform: SignalWaveform, link: FiberLinkConfig) -> SignalWaveform:
    """Undo the dispersion accumulated over the whole link."""
    H = np.exp(-0.5j * link.beta2 * _omega(waveform) ** 2 * link.length)
    return waveform.with_samples(np.fft.ifft(np.fft.fft(waveform.samples) * H))


def phase_derotate(rx_symbols, tx_symbols, block: int | None = None) -> np.ndarray:
    """Data-aided removal of a common phase per block of ``block`` symbols."""
    y = np.asarray(rx_symbols, dtype=complex).ravel()
    x = np.asarray(tx_symbols, dtype=complex).ravel()
    if y.size != x.size:
        raise ValueError("rx and tx lengths differ")
    block = block or y.size
    out = np.empty_like(y)
    for lo in range(0, y.size, block):
        ys, xs = y[lo : lo + block], x[lo : lo + block]
        out[lo : lo + block] = ys * np.exp(-1j * np.angle(np.vdot(xs, ys)))
    return out


@dataclass(frozen=True)
class FiberRun:
    tx: np.ndarray
    rx: np.ndarray
    launch_power_w: float


def fiber_transmission(
    qam_symbols,
    link: FiberLinkConfig,
    launch_power_dbm: float,
    rng=None,
    *,
    symbol_rate: float = 45e9,
    rolloff: float = 0.1,
    tx_oversampling: int = 16,
    sim_oversampling: int = 4,
    derotation_block: int | None = None,
) -> FiberRun:
    """Transmitter, link and receiver DSP for one record of QAM symbols.

    The symbols are scaled to unit mean energy, shaped at ``tx_oversampling``,
    set to the launch power and resampled to ``sim_oversampling`` for
    propagation (the signal band fits, so this is lossless). The receiver
    compensates dispersion, matched-filters, samples once per symbol, undoes
    the known launch scaling and removes a common phase per block.
    """
    x = np.asarray(qam_symbols, dtype=complex).ravel()
    x = x / np.sqrt(np.mean(np.abs(x) ** 2))
    P = 1e-3 * 10 ** (launch_power_dbm / 10)
    wf = rrc_shape(x, rolloff, tx_oversampling, symbol_rate)
    scale = np.sqrt(P * tx_oversampling)
    wf = resample(wf.with_samples(wf.samples * scale), sim_oversampling)
    wf = ssfm_propagate(wf, link, rng)
    wf = cd_compensate(wf, link)
    wf = rrc_matched_filter(wf, rolloff)
    y = downsample(wf) / (scale * np.sqrt(sim_oversampling / tx_oversampling))
    y = phase_derotate(y, x, derotation_block)
    return FiberRun(tx=x, rx=y, launch_power_w=P)


# -- waveform snapshots -------------------------------------------------------

_SNAP_MAGIC = b"PSWF"


def save_waveform(waveform: SignalWaveform, path, config_hash: str = "") -> None:
    """Header (rates, config hash) then interleaved float64 real/imag."""
    h = config_hash.encode()[:64]
    with open(path, "wb") as fh:
        fh.write(struct.pack(">4sddQB", _SNAP_MAGIC, waveform.sample_rate, waveform.symbol_rate, waveform.samples.size, len(h)))
        fh.write(h)
        fh.write(np.asarray(waveform.samples, dtype="<c16").tobytes())


def load_waveform(path) -> tuple[SignalWaveform, str]:
    with open(path, "rb") as fh:
        raw = fh.read()
    head = struct.calcsize(">4sddQB")
    magic, fs, rs, n, hl = struct.unpack(">4sddQB", raw[:head])
    if magic != _SNAP_MAGIC:
        raise ValueError("not a waveform snapshot")
    h = raw[head : head + hl].decode()
    data = np.frombuffer(raw[head + hl :], dtype="<c16")
    if data.size != n:
        raise ValueError("truncated waveform snapshot")
    return SignalWaveform(data.copy(), fs, rs), h
