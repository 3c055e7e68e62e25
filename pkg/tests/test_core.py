import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pashaping.core import (
    AmplitudeAlphabet,
    AmplitudeDistribution,
    Composition,
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


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_alphabet_is_positive_odd_half(m):
    a = AmplitudeAlphabet(m)
    amps = a.amplitudes
    assert len(amps) == 2 ** (m - 1) == a.size
    assert all(x % 2 == 1 and x > 0 for x in amps)
    assert list(amps) == sorted(set(amps))
    assert all(a.index_of(x) == i for i, x in enumerate(amps))


@pytest.mark.parametrize("bad", [1, 0, 2.5])
def test_alphabet_rejects_bad_m(bad):
    with pytest.raises(ShapingError):
        AmplitudeAlphabet(bad)


def test_index_of_rejects_foreign_amplitudes(a3):
    for x in (0, 2, 9, -1):
        with pytest.raises(ShapingError):
            a3.index_of(x)


def test_distribution_must_sum_to_one(a3):
    with pytest.raises(ShapingError):
        AmplitudeDistribution(a3, (0.5, 0.5, 0.5, 0.0))
    with pytest.raises(ShapingError):
        AmplitudeDistribution(a3, (1.2, -0.2, 0.0, 0.0))
    with pytest.raises(ShapingError):
        AmplitudeDistribution(a3, (1.0,))


def test_mb_zero_lambda_is_uniform(a3):
    assert mb_distribution(a3, 0.0).probabilities == pytest.approx((0.25,) * 4, abs=1e-15)


def test_mb_large_lambda_concentrates_on_one(a3):
    assert mb_distribution(a3, 50.0).probabilities[0] == pytest.approx(1.0, abs=1e-12)


def test_mb_rejects_negative_lambda(a3):
    with pytest.raises(ShapingError):
        mb_distribution(a3, -0.1)


def test_mb_entropy_monotone_in_lambda(a3):
    h = [entropy(mb_distribution(a3, lam)) for lam in np.linspace(0, 2, 201)]
    assert all(x >= y - 1e-15 for x, y in zip(h, h[1:]))


def test_entropy_reference_values(a3):
    assert entropy(AmplitudeDistribution.uniform(a3)) == pytest.approx(2.0, abs=1e-15)
    assert entropy(AmplitudeDistribution(a3, (1.0, 0.0, 0.0, 0.0))) == 0.0


def test_fit_mb_full_entropy_gives_zero(a3):
    assert fit_mb_for_entropy(a3, 2.0) == 0.0


def test_fit_mb_hits_target(a3):
    lam = fit_mb_for_entropy(a3, 1.85)
    assert lam > 0
    assert entropy(mb_distribution(a3, lam)) == pytest.approx(1.85, abs=1e-9)


@pytest.mark.parametrize("target", [2.1, 0.0, -1.0])
def test_fit_mb_rejects_out_of_range(a3, target):
    with pytest.raises(ShapingError):
        fit_mb_for_entropy(a3, target)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 1.999))
def test_fit_mb_property(target):
    a = AmplitudeAlphabet(3)
    assert entropy(mb_distribution(a, fit_mb_for_entropy(a, target))) == pytest.approx(target, abs=1e-9)


def test_rate_loss_uniform_full_rate(a3):
    rep = rate_loss(AmplitudeDistribution.uniform(a3), 2 * 50, 50)
    assert rep.rate_loss == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=4, max_size=4), st.integers(1, 500), st.data())
def test_rate_loss_algebra(weights, N, data):
    a = AmplitudeAlphabet(3)
    k = data.draw(st.integers(0, 2 * N))
    rep = rate_loss(AmplitudeDistribution.from_weights(a, weights), k, N)
    assert rep.entropy - rep.shaping_rate - rep.rate_loss == pytest.approx(0.0, abs=1e-12)
    assert (rep.N, rep.k) == (N, k)


def test_rate_loss_rejects_bad_args(a3):
    u = AmplitudeDistribution.uniform(a3)
    with pytest.raises(ShapingError):
        rate_loss(u, -1, 4)
    with pytest.raises(ShapingError):
        rate_loss(u, 1, 0)


def _rounding_oracle(p, N):
    # search every floor/ceil choice for the one keeping the largest residuals,
    # ties to the lexicographically smallest set of indices
    t = [round(N * x, 9) for x in p]
    base = [math.floor(x) for x in t]
    short = N - sum(base)
    best = None
    for pick in itertools.combinations(range(len(p)), short):
        key = (-sum(t[i] - base[i] for i in pick), pick)
        if best is None or key < best[0]:
            best = (key, pick)
    out = list(base)
    for i in best[1]:
        out[i] += 1
    return tuple(out)


def test_composition_uniform(a3):
    assert composition_from_distribution(AmplitudeDistribution.uniform(a3), 4).counts == (1, 1, 1, 1)


def test_composition_tie_goes_to_lower_energy(a3):
    d = AmplitudeDistribution(a3, (0.5, 0.3, 0.15, 0.05))
    got = composition_from_distribution(d, 10).counts
    assert got == _rounding_oracle(d.probabilities, 10) == (5, 3, 2, 0)


def test_composition_mb_3600_entropy(a3):
    d = mb_distribution(a3, fit_mb_for_entropy(a3, 1.85))
    comp = composition_from_distribution(d, 3600)
    assert comp.N == 3600
    assert entropy(comp.distribution()) == pytest.approx(1.85, abs=5e-3)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=4, max_size=4).filter(lambda w: sum(w) > 0.01), st.integers(1, 64))
def test_composition_sums_and_matches_rule(weights, N):
    a = AmplitudeAlphabet(3)
    d = AmplitudeDistribution.from_weights(a, weights)
    comp = composition_from_distribution(d, N)
    assert sum(comp.counts) == N
    assert all(abs(c - N * p) < 1 + 1e-9 for c, p in zip(comp.counts, d.probabilities))
    assert comp.counts == _rounding_oracle(d.probabilities, N)


def test_composition_validation(a3):
    with pytest.raises(ShapingError):
        Composition(a3, (1, 2, 3))
    with pytest.raises(ShapingError):
        Composition(a3, (1, -1, 0, 0))
    with pytest.raises(ShapingError):
        Composition(a3, (0, 0, 0, 0))


def test_composition_energy(a3):
    assert Composition(a3, (2, 1, 1, 0)).energy == 2 + 9 + 25


def _count_arrangements(counts):
    items = [i for i, c in enumerate(counts) for _ in range(c)]
    return len(set(itertools.permutations(items)))


@pytest.mark.parametrize("counts", [(3, 0, 0, 0), (2, 1, 1, 0), (1, 1, 1, 1), (2, 2, 1, 1), (4, 2, 0, 1)])
def test_multinomial_matches_enumeration(counts):
    assert multinomial(counts) == _count_arrangements(counts)


def test_ccdm_rate_examples(a3, a2):
    assert ccdm_rate(Composition(a3, (7, 0, 0, 0))) == 0
    assert ccdm_rate(Composition(a3, (2, 1, 1, 0))) == 3
    assert ccdm_rate(Composition(a2, (1, 1))) == 1


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 40), min_size=4, max_size=4).filter(lambda c: sum(c) > 0))
def test_ccdm_rate_never_beats_entropy(counts):
    comp = Composition(AmplitudeAlphabet(3), tuple(counts))
    assert ccdm_rate(comp) <= comp.N * entropy(comp.distribution()) + 1e-9


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**300), st.integers(0, 40))
def test_bits_round_trip(value, extra):
    k = value.bit_length() + extra
    bits = int_to_bits(value, k)
    assert bits.size == k and bits.dtype == np.uint8
    assert bits_to_int(bits) == value


def test_bits_big_endian():
    assert int_to_bits(6, 4).tolist() == [0, 1, 1, 0]
    assert bits_to_int([1, 0, 0]) == 4
    assert int_to_bits(0, 0).size == 0


def test_bits_errors():
    with pytest.raises(ShapingError):
        int_to_bits(8, 3)
    with pytest.raises(ShapingError):
        bits_to_int([0, 2])
