"""Finite alphabets, discrete signals, and projection onto an alphabet."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

PROB_MODES = ("uniform", "random-simplex")


@dataclass(frozen=True)
class FiniteAlphabet:
    """Ordered symbol set ``f_1..f_L`` with prior probabilities ``rho_1..rho_L``.

    Both arrays are stored read-only; build a new alphabet rather than
    editing one in place.
    """

    symbols: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        symbols = np.array(self.symbols, dtype=complex).reshape(-1)
        probs = np.array(self.probs, dtype=float).reshape(-1)
        if symbols.size == 0:
            raise InvalidArgument("alphabet needs at least one symbol")
        if symbols.shape != probs.shape:
            raise InvalidArgument(
                f"{symbols.size} symbols but {probs.size} probabilities"
            )
        if not np.all(np.isfinite(symbols)) or not np.all(np.isfinite(probs)):
            raise InvalidArgument("alphabet entries must be finite")
        if np.any(probs < 0):
            raise InvalidArgument("probabilities must be nonnegative")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise InvalidArgument(f"probabilities sum to {probs.sum()!r}, not 1")
        if symbols.size > 1:
            gaps = np.abs(symbols[:, None] - symbols[None, :])
            np.fill_diagonal(gaps, np.inf)
            if gaps.min() <= 0:
                raise InvalidArgument("symbols must be pairwise distinct")
        symbols.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "probs", probs)

    @property
    def L(self) -> int:
        return self.symbols.size

    def with_uniform_probs(self) -> FiniteAlphabet:
        """Same symbols, non-informative prior 1/L."""
        return FiniteAlphabet(self.symbols, np.full(self.L, 1.0 / self.L))

    def to_dict(self) -> dict:
        return {
            "symbols": [[float(s.real), float(s.imag)] for s in self.symbols],
            "probs": [float(p) for p in self.probs],
        }

    @classmethod
    def from_dict(cls, data: dict) -> FiniteAlphabet:
        try:
            symbols = [complex(re, im) for re, im in data["symbols"]]
            probs = [float(p) for p in data["probs"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidArgument(f"malformed alphabet: {exc}") from exc
        return cls(symbols, probs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> FiniteAlphabet:
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, FiniteAlphabet):
            return NotImplemented
        return np.array_equal(self.symbols, other.symbols) and np.array_equal(
            self.probs, other.probs
        )

    def __hash__(self):
        return hash((self.symbols.tobytes(), self.probs.tobytes()))


@dataclass(frozen=True)
class DiscreteSignal:
    """A length-N signal given by 0-based alphabet indices and their symbols."""

    indices: np.ndarray
    values: np.ndarray

    @classmethod
    def from_indices(cls, indices, alphabet: FiniteAlphabet) -> DiscreteSignal:
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        if idx.size and (idx.min() < 0 or idx.max() >= alphabet.L):
            raise InvalidArgument("signal index outside the alphabet")
        return cls(idx, alphabet.symbols[idx])

    def __len__(self):
        return self.indices.size


def unit_circle_alphabet(L: int, prob_mode: str = "uniform", rng=None) -> FiniteAlphabet:
    """L symbols ``exp(2j*pi*l/L)`` evenly spaced on the unit circle.

    ``prob_mode="random-simplex"`` draws the prior uniformly from the
    probability simplex (normalized i.i.d. standard exponentials) using ``rng``.
    """
    if not isinstance(L, (int, np.integer)) or L < 1:
        raise InvalidArgument(f"L must be a positive integer, got {L!r}")
    if prob_mode not in PROB_MODES:
        raise InvalidArgument(f"prob_mode must be one of {PROB_MODES}, got {prob_mode!r}")
    symbols = np.exp(2j * np.pi * np.arange(L) / L)
    # exact values at the quarter points keep L=4 free of 1e-16 residue
    symbols = np.round(symbols.real, 15) + 1j * np.round(symbols.imag, 15)
    # mirror the upper half so f_{L-l} is exactly conj(f_l)
    for l in range(1, (L + 1) // 2):
        symbols[L - l] = np.conj(symbols[l])
    if prob_mode == "uniform":
        probs = np.full(L, 1.0 / L)
    else:
        if rng is None:
            raise InvalidArgument("random-simplex probabilities need an rng")
        e = rng.standard_exponential(L)
        probs = e / e.sum()
    return FiniteAlphabet(symbols, probs)


def sample_signal(alphabet: FiniteAlphabet, N: int, rng) -> DiscreteSignal:
    """Draw N i.i.d. entries with category probabilities ``alphabet.probs``."""
    if N < 1:
        raise InvalidArgument(f"N must be positive, got {N}")
    idx = rng.choice(alphabet.L, size=N, p=alphabet.probs)
    return DiscreteSignal.from_indices(idx, alphabet)


def quantize(x, alphabet: FiniteAlphabet) -> DiscreteSignal:
    """Map each entry of ``x`` to its nearest symbol (ties go to the lowest index)."""
    x = np.asarray(x, dtype=complex).reshape(-1)
    diff = x[:, None] - alphabet.symbols[None, :]
    # squared distance avoids hypot, whose last bit varies between code paths
    dist = diff.real * diff.real + diff.imag * diff.imag
    # argmin returns the first minimizer, which is the tie-break we want
    return DiscreteSignal.from_indices(np.argmin(dist, axis=1), alphabet)
