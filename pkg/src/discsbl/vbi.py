"""Variational Bayesian inference with the discretization-enforcing prior.

Model (complex, i.i.d. over entries)::

    y | x, alpha      ~ CN(A x, alpha^-1 I)
    x_n | g_n, gamma_n ~ CN(f_l, gamma_n^-1)   when g_n = e_l
    g_n               ~ Categorical(rho)
    alpha, gamma_n    ~ Gamma(a, b)

The posterior is approximated by ``q(alpha) q(x) q(gamma) q(G)`` and the four
factors are refreshed in turn, each by its closed-form optimum given the
other three. Every refresh is an exact block minimizer of the variational
free energy, so :func:`free_energy` never increases along a run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .alphabet import DiscreteSignal, FiniteAlphabet
from .errors import InvalidArgument, NumericalFailure
from .special import digamma


@dataclass(frozen=True)
class VbiConfig:
    a: float = 1e-10
    b: float = 1e-10
    max_iters: int = 100
    tol: float = 1e-6
    use_woodbury: Optional[bool] = None  # None: Woodbury when M < N/2
    track_free_energy: bool = False
    trace: bool = False

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise InvalidArgument("hyperparameters a and b must be positive")
        if self.max_iters < 1:
            raise InvalidArgument("max_iters must be at least 1")
        if self.tol < 0:
            raise InvalidArgument("tol must be nonnegative")


@dataclass
class VbiState:
    """Parameters of the four factor posteriors.

    ``q(x) = CN(mu, Sigma)``, ``q(alpha) = Gamma(a + M, b_alpha)``,
    ``q(gamma_n) = Gamma(a + 1, b_n)`` and ``q(g_n = e_l) = phi[n, l]``.
    ``chi[n, l]`` caches ``E|x_n - f_l|^2`` under ``q(x)``.
    """

    mu: np.ndarray
    Sigma: np.ndarray
    hat_alpha: float
    b_alpha: float
    hat_gamma: np.ndarray
    ln_gamma_hat: np.ndarray
    b_n: np.ndarray
    phi: np.ndarray
    chi: np.ndarray
    iteration: int = 0


@dataclass
class VbiResult:
    x_hat: DiscreteSignal
    phi_final: np.ndarray
    mu_final: np.ndarray
    mse_history: list = field(default_factory=list)
    # index 0 holds the value at initialization, then one entry per sweep
    free_energy_history: list = field(default_factory=list)
    iterations_used: int = 0
    converged: bool = False
    state: Optional[VbiState] = None
    trace: list = field(default_factory=list)


def _check_inputs(A, y, alphabet):
    A = np.asarray(A, dtype=complex)
    y = np.asarray(y, dtype=complex).reshape(-1)
    if A.ndim != 2:
        raise InvalidArgument(f"A must be a matrix, got shape {A.shape}")
    if y.shape[0] != A.shape[0]:
        raise InvalidArgument(f"y has length {y.shape[0]} but A has {A.shape[0]} rows")
    if not isinstance(alphabet, FiniteAlphabet):
        raise InvalidArgument("alphabet must be a FiniteAlphabet")
    return A, y


def _chi(mu, Sigma, symbols):
    return np.abs(mu[:, None] - symbols[None, :]) ** 2 + np.real(np.diag(Sigma))[:, None]


def _row_softmax(nu):
    top = nu.max(axis=1, keepdims=True)
    if not np.all(np.isfinite(top)):
        return None
    w = np.exp(nu - top)
    return w / w.sum(axis=1, keepdims=True)


def _log_probs(alphabet):
    with np.errstate(divide="ignore"):
        return np.log(alphabet.probs)


def _residual_energy(state, A, y, gram=None):
    """``||y - A mu||^2 + tr(A Sigma A^H)``."""
    r = y - A @ state.mu
    if gram is None:
        spread = np.sum(np.real((A @ state.Sigma) * A.conj()))
    else:
        spread = np.sum(np.real(state.Sigma * gram.T))
    return float(np.vdot(r, r).real + spread)


def vbi_init(A, y, alphabet: FiniteAlphabet, config: VbiConfig | None = None) -> VbiState:
    """Regularized least-squares start, ``q(gamma_n) = Gamma(a+1, b+1)``, flat ``phi``."""
    config = config or VbiConfig()
    A, y = _check_inputs(A, y, alphabet)
    M, N = A.shape
    Sigma = np.linalg.inv(A.conj().T @ A + np.eye(N))
    Sigma = 0.5 * (Sigma + Sigma.conj().T)
    mu = Sigma @ (A.conj().T @ y)
    b_n = np.full(N, config.b + 1.0)
    state = VbiState(
        mu=mu,
        Sigma=Sigma,
        hat_alpha=1.0,
        b_alpha=1.0,
        hat_gamma=(config.a + 1.0) / b_n,
        ln_gamma_hat=digamma(config.a + 1.0) - np.log(b_n),
        b_n=b_n,
        phi=np.full((N, alphabet.L), 1.0 / alphabet.L),
        chi=_chi(mu, Sigma, alphabet.symbols),
    )
    return update_alpha(state, A, y, config)


def update_alpha(state: VbiState, A, y, config: VbiConfig | None = None, gram=None) -> VbiState:
    config = config or VbiConfig()
    M = A.shape[0]
    b_alpha = config.b + _residual_energy(state, A, y, gram)
    if not (b_alpha > 0 and math.isfinite(b_alpha)):
        raise NumericalFailure(f"noise rate b_alpha = {b_alpha}", state.iteration)
    return replace(state, b_alpha=b_alpha, hat_alpha=(config.a + M) / b_alpha)


def _sigma_direct(A, hat_alpha, prec_diag, gram):
    if gram is None:
        gram = A.conj().T @ A
    P = hat_alpha * gram
    P[np.diag_indices_from(P)] += prec_diag
    return np.linalg.inv(P)


def _sigma_woodbury(A, hat_alpha, prec_diag):
    # Sigma = D - D A^H (I/alpha + A D A^H)^-1 A D  with D = diag(1/prec_diag)
    M = A.shape[0]
    d = 1.0 / prec_diag
    AD = A * d[None, :]
    K = AD @ A.conj().T
    K[np.diag_indices(M)] += 1.0 / hat_alpha
    Sigma = -AD.conj().T @ np.linalg.solve(K, AD)
    Sigma[np.diag_indices_from(Sigma)] += d
    return Sigma


def update_x(
    state: VbiState,
    A,
    y,
    alphabet: FiniteAlphabet,
    use_woodbury: bool | None = None,
    gram=None,
    Ahy=None,
) -> VbiState:
    """Gaussian factor: precision ``alpha A^H A + sum_l Q_l``, ``Q_l = diag(phi[:, l] * gamma)``."""
    M, N = A.shape
    if use_woodbury is None:
        use_woodbury = M < N / 2
    weights = state.phi * state.hat_gamma[:, None]
    prec_diag = weights.sum(axis=1)
    prior_pull = weights @ alphabet.symbols
    if Ahy is None:
        Ahy = A.conj().T @ y
    if use_woodbury:
        Sigma = _sigma_woodbury(A, state.hat_alpha, prec_diag)
    else:
        Sigma = _sigma_direct(A, state.hat_alpha, prec_diag, gram)
    Sigma = 0.5 * (Sigma + Sigma.conj().T)
    mu = Sigma @ (state.hat_alpha * Ahy + prior_pull)
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(Sigma))):
        raise NumericalFailure("non-finite posterior of x", state.iteration)
    return replace(state, mu=mu, Sigma=Sigma, chi=_chi(mu, Sigma, alphabet.symbols))


def update_gamma(state: VbiState, config: VbiConfig | None = None) -> VbiState:
    config = config or VbiConfig()
    b_n = config.b + np.sum(state.phi * state.chi, axis=1)
    if not np.all(b_n > 0):
        raise NumericalFailure("nonpositive precision rate b_n", state.iteration)
    return replace(
        state,
        b_n=b_n,
        hat_gamma=(config.a + 1.0) / b_n,
        ln_gamma_hat=digamma(config.a + 1.0) - np.log(b_n),
    )


def update_g(state: VbiState, alphabet: FiniteAlphabet) -> VbiState:
    """Assignment posterior ``phi ∝ exp(<ln gamma> - <gamma> chi + ln rho)``.

    Zero-probability symbols get ``ln rho = -inf`` and hence ``phi = 0``.
    """
    # <ln gamma_n> is constant along each row and cancels in the softmax;
    # leaving it out keeps phi bitwise invariant to per-row shifts
    nu = _log_probs(alphabet)[None, :] - state.hat_gamma[:, None] * state.chi
    phi = _row_softmax(nu)
    if phi is None:
        raise NumericalFailure("assignment row with no admissible symbol", state.iteration)
    return replace(state, phi=phi)


def _gamma_entropy(shape, rate):
    return shape - np.log(rate) + math.lgamma(shape) + (1.0 - shape) * digamma(shape)


def free_energy(state: VbiState, A, y, alphabet: FiniteAlphabet, config: VbiConfig | None = None) -> float:
    """Variational free energy ``E_q[ln q] - E_q[ln p(y, Omega)]``.

    Terms that do not depend on the variational parameters (powers of pi,
    ``a ln b - ln Gamma(a)``) are dropped, so only differences are meaningful.
    """
    config = config or VbiConfig()
    a, b = config.a, config.b
    M, N = A.shape
    shape_alpha = a + M
    shape_gamma = a + 1.0
    ln_alpha = digamma(shape_alpha) - math.log(state.b_alpha)
    # q(gamma) moments straight from b_n so the value is a function of the state only
    hat_gamma = shape_gamma / state.b_n
    ln_gamma = digamma(shape_gamma) - np.log(state.b_n)

    log_lik = M * ln_alpha - state.hat_alpha * _residual_energy(state, A, y)
    phi = state.phi
    mass = phi.sum(axis=1)
    log_px = float(np.sum(mass * ln_gamma - hat_gamma * np.sum(phi * state.chi, axis=1)))
    log_palpha = (a - 1.0) * ln_alpha - b * state.hat_alpha
    log_pgamma = float(np.sum((a - 1.0) * ln_gamma - b * hat_gamma))
    logrho = _log_probs(alphabet)
    with np.errstate(invalid="ignore"):
        log_pg = float(np.sum(np.where(phi > 0, phi * logrho[None, :], 0.0)))
        neg_ent_g = float(np.sum(np.where(phi > 0, phi * np.log(np.where(phi > 0, phi, 1.0)), 0.0)))

    _, logdet = np.linalg.slogdet(state.Sigma)
    neg_ent_x = -float(logdet)
    neg_ent_alpha = -_gamma_entropy(shape_alpha, state.b_alpha)
    neg_ent_gamma = -float(np.sum(_gamma_entropy(shape_gamma, state.b_n)))

    expected_log_joint = log_lik + log_px + log_palpha + log_pgamma + log_pg
    return float(neg_ent_x + neg_ent_alpha + neg_ent_gamma + neg_ent_g - expected_log_joint)


def vbi_run(
    A,
    y,
    alphabet: FiniteAlphabet,
    config: VbiConfig | None = None,
    x_true=None,
    callback: Callable[[VbiState], None] | None = None,
) -> VbiResult:
    """Run the alternating updates until ``mu`` settles or ``max_iters`` is hit.

    Each sweep refreshes q(alpha), q(x), q(gamma), q(G) in that order. The
    decision ``x_hat`` is the row-wise argmax of ``phi``. When ``x_true`` is
    given, ``mse_history`` holds ``|mu - x_true|^2 / N`` after every sweep.
    ``callback`` is called with the state after every sweep.
    """
    config = config or VbiConfig()
    A, y = _check_inputs(A, y, alphabet)
    M, N = A.shape
    truth = None
    if x_true is not None:
        truth = np.asarray(getattr(x_true, "values", x_true), dtype=complex).reshape(-1)
        if truth.size != N:
            raise InvalidArgument(f"x_true has length {truth.size}, expected {N}")
    use_woodbury = config.use_woodbury
    if use_woodbury is None:
        use_woodbury = M < N / 2
    gram = A.conj().T @ A
    Ahy = A.conj().T @ y

    state = vbi_init(A, y, alphabet, config)
    result = VbiResult(x_hat=None, phi_final=None, mu_final=None)
    if config.track_free_energy:
        result.free_energy_history.append(free_energy(state, A, y, alphabet, config))

    converged = False
    for it in range(1, config.max_iters + 1):
        mu_old = state.mu
        state = replace(state, iteration=it)
        state = update_alpha(state, A, y, config, gram)
        state = update_x(state, A, y, alphabet, use_woodbury, gram, Ahy)
        state = update_gamma(state, config)
        state = update_g(state, alphabet)

        row = {"iteration": it, "b_alpha": state.b_alpha}
        if truth is not None:
            mse = float(np.mean(np.abs(state.mu - truth) ** 2))
            result.mse_history.append(mse)
            row["mse"] = mse
        if config.track_free_energy:
            fe = free_energy(state, A, y, alphabet, config)
            result.free_energy_history.append(fe)
            row["free_energy"] = fe
        if config.trace:
            result.trace.append(row)
        if callback is not None:
            callback(state)

        change = np.linalg.norm(state.mu - mu_old) / max(np.linalg.norm(mu_old), 1e-30)
        if change < config.tol:
            converged = True
            break

    result.x_hat = DiscreteSignal.from_indices(np.argmax(state.phi, axis=1), alphabet)
    result.phi_final = state.phi
    result.mu_final = state.mu
    result.iterations_used = state.iteration
    result.converged = converged
    result.state = state
    return result
