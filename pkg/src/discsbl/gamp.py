"""GAMP-based solver that uses the exact finite-alphabet prior.

The noise precision is re-estimated between GAMP sweeps from the output
posterior moments, and each sweep runs one GAMP iteration. The
per-coordinate scalar channels are

* output: ``y_m = z_m + v_m`` with ``v_m ~ CN(0, 1/alpha)``, a Gaussian
  posterior in closed form;
* input: ``x_n`` uniform over the alphabet with weights ``rho``, so its
  posterior is a categorical distribution over the symbols.

All work per sweep is a handful of matrix-vector products, O(MN).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .alphabet import DiscreteSignal, FiniteAlphabet
from .errors import InvalidArgument, NumericalFailure


@dataclass(frozen=True)
class GampConfig:
    a: float = 1e-10
    b: float = 1e-10
    max_iters: int = 100
    tol: float = 1e-6
    tau_floor: float = 1e-12
    damping: float = 1.0
    inner_iters: int = 1
    trace: bool = False

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.tau_floor > 0):
            raise InvalidArgument("a, b and tau_floor must be positive")
        if not 0 < self.damping <= 1:
            raise InvalidArgument(f"damping must lie in (0, 1], got {self.damping}")
        if self.max_iters < 1 or self.inner_iters < 1:
            raise InvalidArgument("iteration counts must be at least 1")
        if self.tol < 0:
            raise InvalidArgument("tol must be nonnegative")


@dataclass
class GampState:
    mu_x: np.ndarray
    tau_x: np.ndarray
    mu_s: np.ndarray
    tau_s: np.ndarray
    mu_p: np.ndarray
    tau_p: np.ndarray
    mu_z: np.ndarray
    tau_z: np.ndarray
    mu_r: np.ndarray
    tau_r: np.ndarray
    p_x: np.ndarray
    hat_alpha: float
    abs2: np.ndarray  # |a_mn|^2, cached
    iteration: int = 0


@dataclass
class GampResult:
    x_hat: DiscreteSignal
    p_x: np.ndarray
    mu_x: np.ndarray
    mse_history: list = field(default_factory=list)
    alpha_history: list = field(default_factory=list)
    iterations_used: int = 0
    converged: bool = False
    state: Optional[GampState] = None
    trace: list = field(default_factory=list)


def output_channel(mu_p, tau_p, y, hat_alpha):
    """Posterior mean/variance of ``z`` given ``z ~ CN(mu_p, tau_p)`` and ``y ~ CN(z, 1/alpha)``."""
    mu_p = np.asarray(mu_p, dtype=complex)
    tau_p = np.asarray(tau_p, dtype=float)
    y = np.asarray(y, dtype=complex)
    if np.isinf(hat_alpha):
        return np.array(y, copy=True), np.zeros_like(tau_p)
    gain = 1.0 + hat_alpha * tau_p
    return (hat_alpha * tau_p * y + mu_p) / gain, tau_p / gain


def input_channel(mu_r, tau_r, alphabet: FiniteAlphabet):
    """Categorical posterior of ``x`` over the alphabet given ``CN(mu_r, tau_r)`` evidence.

    Returns ``(p_x, mu_x, tau_x)``; works on scalars or length-N vectors.
    """
    scalar = np.ndim(mu_r) == 0
    mu_r = np.atleast_1d(np.asarray(mu_r, dtype=complex))
    tau_r = np.atleast_1d(np.asarray(tau_r, dtype=float))
    f = alphabet.symbols
    with np.errstate(divide="ignore"):
        logits = np.log(alphabet.probs)[None, :] - np.abs(f[None, :] - mu_r[:, None]) ** 2 / tau_r[:, None]
    logits -= logits.max(axis=1, keepdims=True)
    p = np.exp(logits)
    p /= p.sum(axis=1, keepdims=True)
    mu_x = p @ f
    tau_x = np.sum(np.abs(f[None, :] - mu_x[:, None]) ** 2 * p, axis=1)
    if scalar:
        return p[0], mu_x[0], tau_x[0]
    return p, mu_x, tau_x


def update_alpha_gamp(state: GampState, y, config: GampConfig | None = None) -> float:
    config = config or GampConfig()
    M = y.shape[0]
    denom = config.b + float(np.sum(np.abs(y - state.mu_z) ** 2 + state.tau_z))
    if not (denom > 0 and np.isfinite(denom)):
        raise NumericalFailure(f"noise-precision denominator {denom}", state.iteration)
    return (config.a + M) / denom


def gamp_init(A, y, alphabet: FiniteAlphabet, config: GampConfig | None = None) -> GampState:
    config = config or GampConfig()
    A = np.asarray(A, dtype=complex)
    y = np.asarray(y, dtype=complex).reshape(-1)
    if A.ndim != 2 or y.shape[0] != A.shape[0]:
        raise InvalidArgument(f"A of shape {A.shape} does not match y of length {y.shape[0]}")
    M, N = A.shape
    mu_x = np.linalg.solve(A.conj().T @ A + np.eye(N), A.conj().T @ y)
    state = GampState(
        mu_x=mu_x,
        tau_x=np.ones(N),
        mu_s=np.zeros(M, dtype=complex),
        tau_s=np.zeros(M),
        mu_p=np.zeros(M, dtype=complex),
        tau_p=np.zeros(M),
        mu_z=A @ mu_x,
        tau_z=np.zeros(M),
        mu_r=np.zeros(N, dtype=complex),
        tau_r=np.zeros(N),
        p_x=np.tile(alphabet.probs, (N, 1)),
        hat_alpha=1.0,
        abs2=np.abs(A) ** 2,
    )
    state.hat_alpha = update_alpha_gamp(state, y, config)
    return state


def gamp_sweep(state: GampState, A, y, alphabet: FiniteAlphabet, config: GampConfig | None = None) -> GampState:
    """One GAMP iteration: output linear/nonlinear, then input linear/nonlinear steps."""
    config = config or GampConfig()
    floor = config.tau_floor
    abs2 = state.abs2

    tau_p = np.maximum(abs2 @ state.tau_x, floor)
    mu_p = A @ state.mu_x - tau_p * state.mu_s

    mu_z, tau_z = output_channel(mu_p, tau_p, y, state.hat_alpha)
    tau_z = np.maximum(tau_z, floor)
    mu_s = (mu_z - mu_p) / tau_p
    # can dip below zero through rounding; keep it a valid precision
    tau_s = np.maximum((1.0 - tau_z / tau_p) / tau_p, floor)

    tau_r = np.maximum(1.0 / (abs2.T @ tau_s), floor)
    mu_r = state.mu_x + tau_r * (A.conj().T @ mu_s)

    p_x, mu_x, tau_x = input_channel(mu_r, tau_r, alphabet)
    tau_x = np.maximum(tau_x, floor)

    d = config.damping
    if d < 1.0:
        mu_x = d * mu_x + (1 - d) * state.mu_x
        tau_x = d * tau_x + (1 - d) * state.tau_x
        mu_s = d * mu_s + (1 - d) * state.mu_s

    for name, arr in (("mu_x", mu_x), ("tau_x", tau_x), ("mu_z", mu_z), ("mu_r", mu_r), ("p_x", p_x)):
        if not np.all(np.isfinite(arr)):
            raise NumericalFailure(f"non-finite {name} in GAMP sweep", state.iteration)

    return replace(
        state,
        mu_x=mu_x,
        tau_x=tau_x,
        mu_s=mu_s,
        tau_s=tau_s,
        mu_p=mu_p,
        tau_p=tau_p,
        mu_z=mu_z,
        tau_z=tau_z,
        mu_r=mu_r,
        tau_r=tau_r,
        p_x=p_x,
    )


def gamp_run(A, y, alphabet: FiniteAlphabet, config: GampConfig | None = None, x_true=None, callback=None) -> GampResult:
    """Alternate the noise-precision update with ``inner_iters`` GAMP sweeps.

    Stops when the relative change of ``mu_x`` drops below ``tol`` or after
    ``max_iters`` outer iterations. ``x_hat`` picks the most probable symbol
    of each ``p_x`` row.
    """
    config = config or GampConfig()
    A = np.asarray(A, dtype=complex)
    y = np.asarray(y, dtype=complex).reshape(-1)
    N = A.shape[1]
    truth = None
    if x_true is not None:
        truth = np.asarray(getattr(x_true, "values", x_true), dtype=complex).reshape(-1)
        if truth.size != N:
            raise InvalidArgument(f"x_true has length {truth.size}, expected {N}")

    state = gamp_init(A, y, alphabet, config)
    result = GampResult(x_hat=None, p_x=None, mu_x=None)
    converged = False
    for it in range(1, config.max_iters + 1):
        mu_old = state.mu_x
        state.iteration = it
        state.hat_alpha = update_alpha_gamp(state, y, config)
        for _ in range(config.inner_iters):
            state = gamp_sweep(state, A, y, alphabet, config)
        result.alpha_history.append(state.hat_alpha)
        row = {"iteration": it, "hat_alpha": state.hat_alpha}
        if truth is not None:
            mse = float(np.mean(np.abs(state.mu_x - truth) ** 2))
            result.mse_history.append(mse)
            row["mse"] = mse
        if config.trace:
            result.trace.append(row)
        if callback is not None:
            callback(state)
        change = np.linalg.norm(state.mu_x - mu_old) / max(np.linalg.norm(mu_old), 1e-30)
        if change < config.tol:
            converged = True
            break

    result.x_hat = DiscreteSignal.from_indices(np.argmax(state.p_x, axis=1), alphabet)
    result.p_x = state.p_x
    result.mu_x = state.mu_x
    result.iterations_used = state.iteration
    result.converged = converged
    result.state = state
    return result
