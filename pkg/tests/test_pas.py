import csv
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pashaping.ccdm import CcdmCode
from pashaping.core import Composition, DecodeFailure, ShapingError
from pashaping.ess import EssCode, build_trellis
from pashaping.pas import (
    PamConstellation,
    PasConfig,
    RandomParityFec,
    amplitudes_from_bits,
    brgc_labels,
    gamma_for_code_rate,
    pam_to_qam,
    pas_assemble,
    pas_code_rate,
    pas_disassemble,
    qam_to_pam,
    uniform_map,
    write_frame_csv,
)


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_brgc_invariants(m):
    c = brgc_labels(m)
    M = 2**m
    assert c.points.tolist() == list(range(-(M - 1), M, 2))
    # gray: neighbours differ in one bit
    assert np.all(np.sum(c.labels[1:] != c.labels[:-1], axis=1) == 1)
    # all labels distinct
    assert len({tuple(r) for r in c.labels}) == M
    # sign bit first; +a and -a share the amplitude bits
    assert np.all(c.labels[: M // 2, 0] == 0) and np.all(c.labels[M // 2 :, 0] == 1)
    assert np.array_equal(c.labels[: M // 2, 1:][::-1], c.labels[M // 2 :, 1:])


def test_brgc_m2_table():
    c = brgc_labels(2)
    assert c.labels.tolist() == [[0, 0], [0, 1], [1, 1], [1, 0]]


def test_brgc_amplitude_bits_are_a_bijection():
    c = brgc_labels(3)
    code = c.amplitude_code()
    assert sorted(code.tolist()) == [1, 3, 5, 7]
    for a, bits in zip(c.alphabet.amplitudes, c.amplitude_labels):
        assert amplitudes_from_bits(bits, 3)[0] == a


def test_constellation_rejects_small_m():
    with pytest.raises(ShapingError):
        PamConstellation(1)


def test_label_lookup_round_trip():
    c = brgc_labels(3)
    assert np.array_equal(c.points[c.index_of_bits(c.label_of(c.points))], c.points)
    with pytest.raises(ShapingError):
        c.label_of([2])
    with pytest.raises(ShapingError):
        c.label_of([9])


# -- configuration ------------------------------------------------------------


def test_example_bookkeeping(ess200):
    cfg = PasConfig(ess200, 3, gamma=0.4)
    assert (cfg.k, cfg.n_info_signs, cfg.n_parity) == (370, 80, 120)
    assert cfg.rate == Fraction(9, 4)
    assert cfg.code_rate == Fraction(4, 5)
    assert cfg.n_payload + cfg.n_parity == cfg.m * cfg.N
    assert gamma_for_code_rate(3, 0.8) == pytest.approx(0.4)
    assert pas_code_rate(3, 0.4) == pytest.approx(0.8)


def test_gamma_zero_all_signs_are_parity(ess200, rng):
    cfg = PasConfig(ess200, 3)
    assert cfg.code_rate == Fraction(2, 3)
    u = rng.integers(0, 2, cfg.n_info, dtype=np.uint8)
    f = pas_assemble(cfg, u)
    assert f.n_info_signs == 0 and f.n_parity == 200
    payload = f.bits[:, 1:].ravel()
    assert np.array_equal(f.sign_bits, cfg.fec.encode(payload))


def test_gamma_one_is_uncoded(a3, rng):
    code = EssCode(build_trellis(a3, 4, 60), 6)
    cfg = PasConfig(code, 3, gamma=1.0)
    assert cfg.n_parity == 0 and cfg.code_rate == 1
    u = rng.integers(0, 2, cfg.n_info, dtype=np.uint8)
    f = pas_assemble(cfg, u)
    assert np.array_equal(f.sign_bits, u[6:])


def test_config_validation(ess200, a2):
    with pytest.raises(ShapingError):
        PasConfig(ess200, 4)
    with pytest.raises(ShapingError):
        PasConfig(ess200, 3, gamma=1.5)
    with pytest.raises(ShapingError):
        PasConfig(ess200, 3, gamma=0.333)
    with pytest.raises(ShapingError):
        PasConfig(ess200, 3, gamma=0.4, fec=RandomParityFec(10, 10))


# -- framing ------------------------------------------------------------------


@pytest.mark.parametrize("gamma", [0.0, 0.4])
@pytest.mark.parametrize("shaper", ["ess200", "ccdm200"])
def test_round_trip(request, shaper, gamma, rng):
    cfg = PasConfig(request.getfixturevalue(shaper), 3, gamma=gamma)
    for _ in range(20):
        u = rng.integers(0, 2, cfg.n_info, dtype=np.uint8)
        f = pas_assemble(cfg, u)
        assert np.array_equal(f.symbols, np.where(f.sign_bits == 1, f.amplitudes, -f.amplitudes))
        assert f.n_info + f.n_parity == cfg.n_info + cfg.n_parity
        assert f.bits.size == cfg.N * cfg.m
        assert np.array_equal(brgc_labels(3).label_of(f.symbols), f.bits)
        assert np.array_equal(pas_disassemble(cfg, f.bits.ravel()), u)


def test_flipped_amplitude_bit_never_crashes(ess200, ccdm200, rng):
    for shaper in (ess200, ccdm200):
        cfg = PasConfig(shaper, 3, gamma=0.4)
        outcomes = set()
        for _ in range(100):
            u = rng.integers(0, 2, cfg.n_info, dtype=np.uint8)
            bits = pas_assemble(cfg, u).bits.copy()
            bits[rng.integers(cfg.N), 1 + rng.integers(2)] ^= 1
            try:
                got = pas_disassemble(cfg, bits.ravel())
            except DecodeFailure:
                outcomes.add("failure")
            else:
                assert not np.array_equal(got, u)
                outcomes.add("wrong")
        assert outcomes


def test_length_errors(ess200):
    cfg = PasConfig(ess200, 3, gamma=0.4)
    with pytest.raises(ShapingError):
        pas_assemble(cfg, np.zeros(cfg.n_info - 1, dtype=np.uint8))
    with pytest.raises(ShapingError):
        pas_disassemble(cfg, np.zeros(599, dtype=np.uint8))
    with pytest.raises(ShapingError):
        cfg.fec.encode(np.zeros(3))


def test_separability(ccdm200, rng):
    cfg = PasConfig(ccdm200, 3)
    f = pas_assemble(cfg, rng.integers(0, 2, cfg.n_info, dtype=np.uint8))
    assert np.array_equal(amplitudes_from_bits(f.bits[:, 1:], 3), f.amplitudes)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 4), st.integers(0, 2**32 - 1))
def test_rate_identity(gamma_tenths, seed):
    a = brgc_labels(3).alphabet
    code = CcdmCode(Composition(a, (4, 3, 2, 1)))
    cfg = PasConfig(code, 3, gamma=gamma_tenths / 10)
    u = np.random.default_rng(seed).integers(0, 2, cfg.n_info, dtype=np.uint8)
    f = pas_assemble(cfg, u)
    assert Fraction(f.n_info, f.N) == Fraction(code.k, 10) + Fraction(gamma_tenths, 10)
    # every mapped bit is accounted for: shaped-amplitude planes, info signs, parity signs
    assert (cfg.m - 1) * f.N + f.n_info_signs + f.n_parity == f.bits.size


def test_sign_bits_look_uniform(ess200, rng):
    cfg = PasConfig(ess200, 3, gamma=0.4)
    signs = np.concatenate(
        [pas_assemble(cfg, rng.integers(0, 2, cfg.n_info, dtype=np.uint8)).sign_bits for _ in range(200)]
    )
    p = signs.mean()
    assert abs(p - 0.5) < 3 * np.sqrt(0.25 / signs.size)


def test_fec_is_deterministic():
    a, b = RandomParityFec(30, 10, seed=7), RandomParityFec(30, 10, seed=7)
    u = np.random.default_rng(0).integers(0, 2, 30)
    assert np.array_equal(a.encode(u), b.encode(u))
    assert not np.array_equal(a._matrix, RandomParityFec(30, 10, seed=8)._matrix)


# -- mapping ------------------------------------------------------------------


def test_all_zero_bits_map_to_label_zero():
    s = uniform_map(np.zeros(300, dtype=np.uint8), 3)
    assert np.all(s == -7)


def test_uniform_map_histogram(rng):
    n = 80000
    s = uniform_map(rng.integers(0, 2, 3 * n), 3)
    counts = np.array([np.sum(s == p) for p in range(-7, 8, 2)])
    sigma = np.sqrt(n * (1 / 8) * (7 / 8))
    assert np.all(np.abs(counts - n / 8) < 3 * sigma)
    with pytest.raises(ShapingError):
        uniform_map(np.zeros(4), 3)


def test_ess_frames_follow_induced_distribution(ess200, rng):
    cfg = PasConfig(ess200, 3)
    frames = 400
    share = np.empty((frames, 4))
    for i in range(frames):
        amps = pas_assemble(cfg, rng.integers(0, 2, cfg.n_info, dtype=np.uint8)).amplitudes
        share[i] = np.bincount((amps - 1) // 2, minlength=4) / 200
    want = np.array(ess200.distribution().probabilities)
    # positions within a frame are dependent, so use the frame-to-frame spread
    se = share.std(axis=0, ddof=1) / np.sqrt(frames)
    assert np.all(np.abs(share.mean(axis=0) - want) < 3 * se)


def test_qam_pairs_round_trip(rng):
    x = rng.integers(-3, 4, 100) * 2 + 1
    q = pam_to_qam(x)
    assert q.size == 50 and q[0] == x[0] + 1j * x[1]
    assert np.array_equal(qam_to_pam(q), x)
    with pytest.raises(ShapingError):
        pam_to_qam(x[:3])


def test_frame_csv(ess200, rng, tmp_path):
    cfg = PasConfig(ess200, 3, gamma=0.4)
    f = pas_assemble(cfg, rng.integers(0, 2, cfg.n_info, dtype=np.uint8))
    p = tmp_path / "frame.csv"
    write_frame_csv(f, p)
    rows = list(csv.DictReader(p.open()))
    assert len(rows) == 200
    assert int(rows[5]["symbol"]) == f.symbols[5]
    assert rows[5]["label"] == "".join(map(str, f.bits[5]))
