import cmath
import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import small_instance
from discsbl import (
    FiniteAlphabet,
    GampConfig,
    gamp_init,
    gamp_run,
    gamp_sweep,
    input_channel,
    output_channel,
    unit_circle_alphabet,
    update_alpha_gamp,
)
from discsbl.errors import InvalidArgument
from oracles import brute_force_map


def test_config_validation():
    for kw in ({"damping": 0}, {"damping": 1.5}, {"tau_floor": 0}, {"max_iters": 0}, {"inner_iters": 0}, {"a": -1}):
        with pytest.raises(InvalidArgument):
            GampConfig(**kw)


def test_output_channel_examples():
    mz, tz = output_channel(0.0, 1.0, 2.0, 1.0)
    assert mz == pytest.approx(1.0) and tz == pytest.approx(0.5)
    mz, tz = output_channel(0.3 + 1j, 0.7, 2.0, 0.0)
    assert mz == 0.3 + 1j and tz == 0.7
    mz, tz = output_channel(0.3, 0.7, 2.0 - 1j, 1e14)
    assert mz == pytest.approx(2.0 - 1j, abs=1e-12) and tz < 1e-13
    mz, tz = output_channel(np.array([0.3]), np.array([0.7]), np.array([2.0]), np.inf)
    assert mz[0] == 2.0 and tz[0] == 0.0


def test_input_channel_two_point():
    alph = FiniteAlphabet([1, -1], [0.5, 0.5])
    p, m, t = input_channel(0.5, 1.0, alph)
    expect = 1 / (1 + math.exp(0.25 - 2.25))
    assert p[0] == pytest.approx(expect, rel=1e-12)
    assert m == pytest.approx(2 * expect - 1, rel=1e-12)
    assert t == pytest.approx(1 - (2 * expect - 1) ** 2, rel=1e-12)


def test_input_channel_limits():
    alph = unit_circle_alphabet(4, "random-simplex", np.random.default_rng(0))
    p, m, t = input_channel(alph.symbols[1], 1e-300, alph)
    assert np.array_equal(p, [0, 1, 0, 0]) and t == 0
    p, m, t = input_channel(0.4 + 0.2j, 1e300, alph)
    assert np.allclose(p, alph.probs, rtol=1e-12)


def test_input_channel_moments_consistent():
    alph = unit_circle_alphabet(5, "random-simplex", np.random.default_rng(1))
    rng = np.random.default_rng(2)
    mu_r = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    tau_r = rng.uniform(0.01, 3, 50)
    p, m, t = input_channel(mu_r, tau_r, alph)
    assert np.allclose(p.sum(axis=1), 1, atol=1e-12)
    assert np.allclose(m, p @ alph.symbols)
    assert np.allclose(t, (np.abs(alph.symbols[None, :] - m[:, None]) ** 2 * p).sum(axis=1))


def test_update_alpha_examples():
    cfg = GampConfig()
    s = gamp_init(np.eye(2), np.array([1.0, 1.0]), unit_circle_alphabet(2))
    s.mu_z = np.array([1.0, 1.0]) + 0j
    s.tau_z = np.zeros(2)
    assert update_alpha_gamp(s, np.array([1.0, 1.0]), cfg) == pytest.approx((cfg.a + 2) / cfg.b)
    s.mu_z = np.array([0.0, 2.0]) + 0j
    assert update_alpha_gamp(s, np.array([1.0, 1.0]), cfg) == pytest.approx(1.0, rel=1e-9)
    s.mu_z = np.array([-1.0, 3.0]) + 0j
    assert update_alpha_gamp(s, np.array([1.0, 1.0]), cfg) == pytest.approx(0.25, rel=1e-9)


def test_init():
    y = np.array([2.0, 1j])
    s = gamp_init(np.eye(2), y, unit_circle_alphabet(4))
    assert np.allclose(s.mu_x, y / 2) and np.all(s.tau_x == 1)
    assert np.all(s.mu_s == 0) and np.array_equal(s.mu_z, np.eye(2) @ s.mu_x)
    assert np.all(s.tau_z == 0)
    with pytest.raises(InvalidArgument):
        gamp_init(np.eye(2), np.ones(3), unit_circle_alphabet(4))


def _scalar_chain(a, y, symbols, probs, cfg):
    """One init + alpha update + sweep written out with plain complex arithmetic."""
    aa = abs(a) ** 2
    mu_x = a.conjugate() * y / (aa + 1)
    mu_z = a * mu_x
    alpha = (cfg.a + 1) / (cfg.b + abs(y - mu_z) ** 2)  # from init, tau_z = 0
    alpha = (cfg.a + 1) / (cfg.b + abs(y - mu_z) ** 2)  # outer step: same state
    tau_x, mu_s = 1.0, 0j
    tau_p = aa * tau_x
    mu_p = a * mu_x - tau_p * mu_s
    mu_z = (alpha * tau_p * y + mu_p) / (1 + alpha * tau_p)
    tau_z = tau_p / (1 + alpha * tau_p)
    mu_s = (mu_z - mu_p) / tau_p
    tau_s = (1 - tau_z / tau_p) / tau_p
    tau_r = 1 / (aa * tau_s)
    mu_r = mu_x + tau_r * a.conjugate() * mu_s
    w = [p * math.exp(-abs(f - mu_r) ** 2 / tau_r) for f, p in zip(symbols, probs)]
    p_x = [v / sum(w) for v in w]
    new_mu_x = sum(f * p for f, p in zip(symbols, p_x))
    new_tau_x = max(sum(abs(f - new_mu_x) ** 2 * p for f, p in zip(symbols, p_x)), cfg.tau_floor)
    return dict(alpha=alpha, tau_p=tau_p, mu_p=mu_p, mu_z=mu_z, tau_z=tau_z, mu_s=mu_s, tau_s=tau_s,
                tau_r=tau_r, mu_r=mu_r, p_x=p_x, mu_x=new_mu_x, tau_x=new_tau_x)


@pytest.mark.parametrize("symbols, probs", [([0.5 - 0.25j], [1.0]), ([1, -1], [0.3, 0.7])])
def test_scalar_sweep_matches_hand_chain(symbols, probs):
    cfg = GampConfig()
    a, y = 0.8 - 0.6j, 1.1 + 0.4j
    alph = FiniteAlphabet(symbols, probs)
    ref = _scalar_chain(a, y, symbols, probs, cfg)
    A, yv = np.array([[a]]), np.array([y])
    s = gamp_init(A, yv, alph, cfg)
    s.hat_alpha = update_alpha_gamp(s, yv, cfg)
    s = gamp_sweep(s, A, yv, alph, cfg)
    assert s.hat_alpha == pytest.approx(ref["alpha"], rel=1e-12)
    for key in ("tau_p", "mu_p", "mu_z", "tau_z", "mu_s", "tau_s", "tau_r", "mu_r", "mu_x", "tau_x"):
        got = getattr(s, key)[0]
        assert cmath.isclose(got, ref[key], rel_tol=1e-10, abs_tol=1e-13), key
    assert np.allclose(s.p_x[0], ref["p_x"], rtol=1e-10)


def test_degenerate_variance_guard():
    inst = small_instance(0)
    cfg = GampConfig()
    s = gamp_init(inst.A, inst.y, inst.alphabet, cfg)
    s.tau_x = np.zeros_like(s.tau_x)
    s = gamp_sweep(s, inst.A, inst.y, inst.alphabet, cfg)
    assert np.all(s.tau_p == cfg.tau_floor)
    for arr in (s.mu_x, s.tau_x, s.mu_r, s.tau_r, s.p_x):
        assert np.all(np.isfinite(arr))
    assert s.mu_s.shape == (inst.M,) and s.mu_r.shape == (inst.N,) and s.p_x.shape == (inst.N, inst.alphabet.L)


def test_invariants_after_every_sweep():
    inst = small_instance(4, N=40, delta=0.7, snr_db=12.0)
    alph, floor = inst.alphabet, GampConfig().tau_floor

    def check(s):
        assert np.allclose(s.p_x.sum(axis=1), 1, atol=1e-10)
        assert np.allclose(s.mu_x, s.p_x @ alph.symbols, rtol=0, atol=1e-12)
        tx = (np.abs(alph.symbols[None, :] - s.mu_x[:, None]) ** 2 * s.p_x).sum(axis=1)
        assert np.allclose(s.tau_x, np.maximum(tx, floor), rtol=1e-10, atol=1e-15)
        for t in (s.tau_x, s.tau_p, s.tau_z, s.tau_r, s.tau_s):
            assert np.all(t >= floor)

    gamp_run(inst.A, inst.y, alph, GampConfig(max_iters=30, tol=0), callback=check)


def test_identity_noise_free_exact():
    alph = unit_circle_alphabet(4)
    idx = np.array([3, 1, 0, 2, 2, 1])
    r = gamp_run(np.eye(6), alph.symbols[idx], alph, x_true=alph.symbols[idx])
    assert np.array_equal(r.x_hat.indices, idx) and r.iterations_used <= 10
    assert r.mse_history[-1] < 1e-20


def test_brute_force_map_oracle():
    alph = FiniteAlphabet([1, -1], [0.5, 0.5])
    rng = np.random.default_rng(2024)
    agree = total = 0
    while total < 100:
        A = (rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))) / np.sqrt(6)
        idx = rng.integers(0, 2, 4)
        y = A @ alph.symbols[idx]
        best, r0, r1 = brute_force_map(A, y, alph.symbols)
        if r1 < 0.05 or np.linalg.cond(A) > 20:
            continue
        total += 1
        agree += np.array_equal(gamp_run(A, y, alph).x_hat.indices, best)
    assert agree >= 95


def test_fig1a_style_convergence():
    rng = np.random.default_rng(8)
    from discsbl import make_instance, vbi_run

    alph = unit_circle_alphabet(8, "random-simplex", rng)
    inst = make_instance(alph, 100, 0.7, "iid-gaussian", 30.0, rng)
    g = gamp_run(inst.A, inst.y, alph, x_true=inst.x_true)
    v = vbi_run(inst.A, inst.y, alph.with_uniform_probs(), x_true=inst.x_true)
    assert g.converged and g.iterations_used <= 20
    assert g.mse_history[-1] <= v.mse_history[-1]


def test_correlated_terminates_cleanly():
    for seed in range(10):
        inst = small_instance(seed, N=60, delta=0.7, snr_db=30.0, kind="correlated")
        r = gamp_run(inst.A, inst.y, inst.alphabet, x_true=inst.x_true)
        assert np.all(np.isfinite(r.mu_x)) and np.all(np.isfinite(r.p_x))
        assert 1 <= r.iterations_used <= 100


def test_damping_blends_messages():
    inst = small_instance(6, N=30)
    cfg = GampConfig(damping=0.5)
    s0 = gamp_init(inst.A, inst.y, inst.alphabet, cfg)
    full = gamp_sweep(s0, inst.A, inst.y, inst.alphabet, GampConfig())
    half = gamp_sweep(s0, inst.A, inst.y, inst.alphabet, cfg)
    assert np.allclose(half.mu_x, 0.5 * full.mu_x + 0.5 * s0.mu_x)
    assert np.allclose(half.mu_s, 0.5 * full.mu_s + 0.5 * s0.mu_s)


def test_deterministic_and_trace():
    inst = small_instance(9, N=30)
    cfg = GampConfig(trace=True)
    r1 = gamp_run(inst.A, inst.y, inst.alphabet, cfg, x_true=inst.x_true)
    r2 = gamp_run(inst.A, inst.y, inst.alphabet, cfg, x_true=inst.x_true)
    assert np.array_equal(r1.p_x, r2.p_x) and r1.mse_history == r2.mse_history
    assert set(r1.trace[0]) == {"iteration", "hat_alpha", "mse"}
    assert len(r1.alpha_history) == r1.iterations_used


def _sweep_time(N, reps=30):
    inst = small_instance(0, N=N, delta=0.5, snr_db=20.0)
    s = gamp_init(inst.A, inst.y, inst.alphabet)
    best = []
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(reps):
            gamp_sweep(s, inst.A, inst.y, inst.alphabet)
        best.append((time.perf_counter() - t0) / reps)
    return min(best)


def test_sweep_cost_scales_with_matrix_size():
    # doubling N at fixed delta quadruples MN
    ratio = _sweep_time(1000) / _sweep_time(500)
    assert 1.5 <= ratio <= 5.0, ratio


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6), st.sampled_from(["iid-gaussian", "correlated"]))
def test_p_x_rows_on_simplex(seed, L, kind):
    inst = small_instance(seed, N=10, L=L, snr_db=10.0, kind=kind)
    r = gamp_run(inst.A, inst.y, inst.alphabet, GampConfig(max_iters=15))
    assert np.allclose(r.p_x.sum(axis=1), 1, atol=1e-10)
