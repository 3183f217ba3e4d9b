"""Measurement matrices, noisy observations and problem instances."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .alphabet import DiscreteSignal, FiniteAlphabet, sample_signal
from .errors import InvalidArgument, NotPSDError
from .special import bessel_j0

MATRIX_KINDS = ("iid-gaussian", "correlated")

# eigenvalues down to this are treated as rounding noise and clamped to zero
PSD_TOLERANCE = 1e-8


def gen_iid_gaussian(M: int, N: int, rng) -> np.ndarray:
    """M x N matrix of i.i.d. CN(0, 1/M) entries."""
    if M < 1 or N < 1:
        raise InvalidArgument(f"matrix dimensions must be positive, got {M}x{N}")
    scale = np.sqrt(0.5 / M)
    re = rng.standard_normal((M, N))
    im = rng.standard_normal((M, N))
    return scale * (re + 1j * im)


def correlation_matrix(K: int) -> np.ndarray:
    """K x K Toeplitz matrix with entries J0(|i - j| * pi)."""
    if K < 1:
        raise InvalidArgument(f"K must be positive, got {K}")
    lags = np.array([bessel_j0(k * np.pi) for k in range(K)])
    i = np.arange(K)
    return lags[np.abs(i[:, None] - i[None, :])]


def matrix_sqrt_psd(R) -> np.ndarray:
    """Symmetric square root of a real symmetric PSD matrix.

    Tiny negative eigenvalues (>= -1e-8) are clamped to zero; anything more
    negative raises :class:`NotPSDError`.
    """
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise InvalidArgument(f"expected a square matrix, got shape {R.shape}")
    w, V = np.linalg.eigh(R)
    if w.min() < -PSD_TOLERANCE:
        raise NotPSDError(f"smallest eigenvalue {w.min():.3e} is below -{PSD_TOLERANCE}")
    S = (V * np.sqrt(np.maximum(w, 0.0))) @ V.T
    return 0.5 * (S + S.T)


@lru_cache(maxsize=64)
def _correlation_sqrt(K: int) -> np.ndarray:
    S = matrix_sqrt_psd(correlation_matrix(K))
    S.setflags(write=False)
    return S


def gen_correlated(M: int, N: int, rng, sqrt_RM=None, sqrt_RN=None) -> np.ndarray:
    """``R_M^{1/2} A_iid R_N^{1/2}`` with Bessel-J0 Toeplitz correlations.

    ``sqrt_RM`` / ``sqrt_RN`` override the default square-root factors.
    """
    A = gen_iid_gaussian(M, N, rng)
    SM = _correlation_sqrt(M) if sqrt_RM is None else np.asarray(sqrt_RM)
    SN = _correlation_sqrt(N) if sqrt_RN is None else np.asarray(sqrt_RN)
    return SM @ A @ SN


def gen_matrix(kind: str, M: int, N: int, rng) -> np.ndarray:
    if kind == "iid-gaussian":
        return gen_iid_gaussian(M, N, rng)
    if kind == "correlated":
        return gen_correlated(M, N, rng)
    raise InvalidArgument(f"matrix kind must be one of {MATRIX_KINDS}, got {kind!r}")


@dataclass
class ProblemInstance:
    A: np.ndarray
    x_true: DiscreteSignal
    y: np.ndarray
    sigma2: float
    snr_db: float | None  # None means noise-free
    matrix_kind: str
    alphabet: FiniteAlphabet

    @property
    def M(self) -> int:
        return self.A.shape[0]

    @property
    def N(self) -> int:
        return self.A.shape[1]

    @property
    def noise_free(self) -> bool:
        return self.snr_db is None

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "N": self.N,
            "matrix_kind": self.matrix_kind,
            "snr_db": self.snr_db,
            "sigma2": self.sigma2,
            "alphabet": self.alphabet.to_dict(),
            "x_indices": [int(i) for i in self.x_true.indices],
            "A": [[[float(v.real), float(v.imag)] for v in row] for row in self.A],
            "y": [[float(v.real), float(v.imag)] for v in self.y],
        }

    @classmethod
    def from_dict(cls, data: dict) -> ProblemInstance:
        try:
            alphabet = FiniteAlphabet.from_dict(data["alphabet"])
            A = np.array([[complex(re, im) for re, im in row] for row in data["A"]])
            y = np.array([complex(re, im) for re, im in data["y"]])
            x = DiscreteSignal.from_indices(data["x_indices"], alphabet)
            inst = cls(
                A=A.reshape(int(data["M"]), int(data["N"])),
                x_true=x,
                y=y,
                sigma2=float(data["sigma2"]),
                snr_db=None if data["snr_db"] is None else float(data["snr_db"]),
                matrix_kind=data["matrix_kind"],
                alphabet=alphabet,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidArgument(f"malformed instance bundle: {exc}") from exc
        if inst.y.shape != (inst.M,) or len(inst.x_true) != inst.N:
            raise InvalidArgument("instance bundle has inconsistent dimensions")
        return inst

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def measurement_count(N: int, delta: float) -> int:
    if not 0 < delta <= 1:
        raise InvalidArgument(f"delta must lie in (0, 1], got {delta!r}")
    M = int(round(delta * N))
    if M < 1:
        raise InvalidArgument(f"delta*N = {delta * N} rounds to zero measurements")
    return M


def make_instance(
    alphabet: FiniteAlphabet,
    N: int,
    delta: float,
    matrix_kind: str,
    snr_db: float | None,
    rng,
) -> ProblemInstance:
    """Sample x, build A, and observe ``y = A x + v``.

    ``snr_db=None`` is the noise-free case. Otherwise the noise variance is
    calibrated on this very instance, ``sigma2 = |Ax|^2 / (M 10^(snr/10))``,
    so every instance has exactly the requested SNR.
    """
    if N < 1:
        raise InvalidArgument(f"N must be positive, got {N}")
    M = measurement_count(N, delta)
    x = sample_signal(alphabet, N, rng)
    A = gen_matrix(matrix_kind, M, N, rng)
    z = A @ x.values
    if snr_db is None:
        return ProblemInstance(A, x, z, 0.0, None, matrix_kind, alphabet)
    snr_db = float(snr_db)
    if not np.isfinite(snr_db):
        raise InvalidArgument(f"snr_db must be finite, got {snr_db}")
    sigma2 = float(np.vdot(z, z).real) / (M * 10.0 ** (snr_db / 10.0))
    v = np.sqrt(0.5 * sigma2) * (rng.standard_normal(M) + 1j * rng.standard_normal(M))
    return ProblemInstance(A, x, z + v, sigma2, snr_db, matrix_kind, alphabet)
