"""Time the numba and numpy versions of every hot kernel.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both paths are called directly, so the environment flag does not matter here.
The first numba call per kernel compiles (or loads from cache) and is not timed.
"""

import argparse
import timeit

import numpy as np

from pashaping import _kernels as K
from pashaping._backend import HAVE_NUMBA
from pashaping.core import AmplitudeAlphabet
from pashaping.pas import brgc_labels


def cases():
    shifts = AmplitudeAlphabet(3).level_shifts
    rng = np.random.default_rng(0)
    log_t = K._log_backward_counts_np(1000, 1500, shifts)

    const = brgc_labels(3)
    pts = const.points.astype(float)
    logp = np.log(np.full(8, 1 / 8))
    y = rng.normal(0, 4, 1_000_000)

    u = rng.normal(size=1 << 20) + 1j * rng.normal(size=1 << 20)

    return [
        ("trellis counts N=1000", lambda f: f(1000, 1500, shifts), K._log_backward_counts_nb, K._log_backward_counts_np),
        ("amplitude marginals N=1000", lambda f: f(log_t, shifts), K._log_marginals_nb, K._log_marginals_np),
        ("energy histogram N=2000", lambda f: f(2000, shifts), K._log_energy_counts_nb, K._log_energy_counts_np),
        ("8-PAM LLRs, 1e6 samples", lambda f: f(y, pts, logp, const.labels, 0.5), K._pam_llrs_nb, K._pam_llrs_np),
        ("Kerr phase, 2^20 samples", lambda f: f(u.copy(), 1e-3), K._kerr_phase_nb, K._kerr_phase_np),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba is not installed; only the numpy path can run")
    print(f"{'kernel':30s} {'numba ms':>10s} {'numpy ms':>10s} {'speed-up':>9s}")
    for name, call, nb, np_ in cases():
        t_np = min(timeit.repeat(lambda: call(np_), number=1, repeat=args.repeat)) * 1e3
        if HAVE_NUMBA:
            call(nb)  # compile
            t_nb = min(timeit.repeat(lambda: call(nb), number=1, repeat=args.repeat)) * 1e3
            print(f"{name:30s} {t_nb:10.2f} {t_np:10.2f} {t_np / t_nb:8.1f}x")
        else:
            print(f"{name:30s} {'-':>10s} {t_np:10.2f}")


if __name__ == "__main__":
    main()
