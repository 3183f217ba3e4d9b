import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from discsbl import DiscreteSignal, FiniteAlphabet, quantize, sample_signal, unit_circle_alphabet
from discsbl.errors import InvalidArgument


def test_unit_circle_small_cases():
    a1 = unit_circle_alphabet(1)
    assert a1.symbols.tolist() == [1 + 0j] and a1.probs.tolist() == [1.0]
    a4 = unit_circle_alphabet(4)
    assert a4.symbols.tolist() == [1, 1j, -1, -1j]
    assert a4.probs.tolist() == [0.25] * 4


def test_unit_circle_conjugate_symmetry():
    for L in range(2, 17):
        f = unit_circle_alphabet(L).symbols
        assert all(f[L - l] == np.conj(f[l]) for l in range(1, L))


def test_random_simplex_probs():
    a = unit_circle_alphabet(8, "random-simplex", np.random.default_rng(3))
    assert np.allclose(np.abs(a.symbols), 1.0, atol=1e-12)
    total = 0.0
    for p in a.probs:
        assert p >= 0
        total += p
    assert abs(total - 1.0) <= 1e-12


def test_random_simplex_is_flat_dirichlet_on_average():
    rng = np.random.default_rng(0)
    draws = np.array([unit_circle_alphabet(3, "random-simplex", rng).probs for _ in range(4000)])
    # flat Dirichlet(1,1,1): mean 1/3, variance 1/18 for each coordinate
    assert np.allclose(draws.mean(axis=0), 1 / 3, atol=0.02)
    assert np.allclose(draws.var(axis=0), 1 / 18, atol=0.005)


@pytest.mark.parametrize(
    "symbols, probs",
    [([], []), ([1, 2], [1.0]), ([1, 1], [0.5, 0.5]), ([1, 2], [0.7, 0.7]), ([1, 2], [1.5, -0.5]), ([np.nan], [1.0])],
)
def test_alphabet_validation(symbols, probs):
    with pytest.raises(InvalidArgument):
        FiniteAlphabet(symbols, probs)


def test_unit_circle_rejects_bad_args():
    with pytest.raises(InvalidArgument):
        unit_circle_alphabet(0)
    with pytest.raises(InvalidArgument):
        unit_circle_alphabet(4, "random-simplex")
    with pytest.raises(InvalidArgument):
        unit_circle_alphabet(4, "zipf")


def test_alphabet_is_immutable():
    a = unit_circle_alphabet(4)
    with pytest.raises(ValueError):
        a.symbols[0] = 5
    with pytest.raises(AttributeError):
        a.probs = np.ones(4) / 4


def test_json_round_trip():
    a = unit_circle_alphabet(5, "random-simplex", np.random.default_rng(1))
    data = json.loads(a.to_json())
    assert set(data) == {"symbols", "probs"}
    assert all(len(pair) == 2 for pair in data["symbols"])
    assert FiniteAlphabet.from_json(a.to_json()) == a
    with pytest.raises(InvalidArgument):
        FiniteAlphabet.from_dict({"symbols": [[1, 0]]})


def test_sample_signal_degenerate_cases():
    rng = np.random.default_rng(0)
    s = sample_signal(unit_circle_alphabet(1), 5, rng)
    assert s.values.tolist() == [1 + 0j] * 5
    s = sample_signal(FiniteAlphabet([1, -1], [1.0, 0.0]), 100, rng)
    assert np.all(s.indices == 0)


def test_sample_signal_frequencies():
    s = sample_signal(unit_circle_alphabet(4), 100_000, np.random.default_rng(5))
    freq = np.bincount(s.indices, minlength=4) / 100_000
    assert np.all(np.abs(freq - 0.25) < 0.01)
    # chi-square with 3 dof, 0.999 quantile is 16.27
    counts = np.bincount(s.indices, minlength=4)
    assert np.sum((counts - 25_000) ** 2 / 25_000) < 16.27


def test_signal_values_match_indices():
    a = unit_circle_alphabet(6)
    s = DiscreteSignal.from_indices([5, 0, 3], a)
    assert np.array_equal(s.values, a.symbols[[5, 0, 3]])
    with pytest.raises(InvalidArgument):
        DiscreteSignal.from_indices([6], a)


def test_quantize_examples():
    a = unit_circle_alphabet(4)
    assert quantize([a.symbols[2]], a).indices.tolist() == [2]
    assert quantize([0.9 + 0.1j], a).indices.tolist() == [0]
    assert quantize([0.0], a).indices.tolist() == [0]


complex_vals = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)


@settings(max_examples=200, deadline=None)
@given(st.lists(complex_vals, min_size=1, max_size=20), st.integers(1, 9))
def test_quantize_is_nearest_and_idempotent(xs, L):
    a = unit_circle_alphabet(L)
    q = quantize(xs, a)
    for x, idx in zip(xs, q.indices):
        d2 = [(x.real - f.real) ** 2 + (x.imag - f.imag) ** 2 for f in map(complex, a.symbols)]
        assert d2[idx] == min(d2) and idx == d2.index(min(d2))
    assert np.array_equal(quantize(q.values, a).indices, q.indices)
