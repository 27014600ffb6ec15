"""End-to-end acceptance checks, one PASS/FAIL line per criterion.

Run with pytest (lines appear in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.
"""
import sys
import time

import numpy as np
import pytest
from scipy import stats

from hmcstate import bb84, chsh, hmc
from hmcstate import parameterization as par
from hmcstate.diagnostics import integrated_autocorr_time
from hmcstate.leapfrog import TrajectoryConfig, trajectory
from hmcstate.targets import (POMS, SPACES, finite_difference_gradient, primitive_qubit_target,
                              trine_posterior_target)

RESULTS = []
SEED = 20240611


def report(number, ok, detail):
    line = f"CRITERION {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line, file=sys.__stdout__, flush=True)
    assert ok, line


_cache = {}


def primitive_run():
    if "prim" not in _cache:
        target = primitive_qubit_target()
        cfg = hmc.HmcConfig.for_samples(50_000, burn_in=1000, seed=SEED)
        start = time.perf_counter()
        s = hmc.run_chain(target, cfg)
        bloch = np.array([par.bloch_from_angles(t) for t in s.points])
        _cache["prim"] = (s, bloch, time.perf_counter() - start)
    return _cache["prim"]


def ball_z_cdf(z):
    return (2 + 3 * z - z ** 3) / 4


def test_criterion_01_acceptance_rate():
    s, _, wall = primitive_run()
    rate = s.acceptance_rate
    report(1, rate >= 0.90, f"primitive-prior acceptance {rate:.4f} (>= 0.90), {wall:.0f} s")


def test_criterion_02_uniform_ball():
    _, b, _ = primitive_run()
    means = b.mean(axis=0)
    r2 = np.mean(np.sum(b * b, axis=1))
    z = b[:, 2]
    lag = int(np.ceil(integrated_autocorr_time(z)))
    zt = z[::lag]
    edges = np.array([-1.0] + [float(v) for v in _ball_z_quantiles(20)] + [1.0])
    observed, _ = np.histogram(zt, bins=edges)
    expected = np.full(20, zt.size / 20)
    pval = stats.chisquare(observed, expected).pvalue
    ok = np.all(np.abs(means) <= 0.01) and abs(r2 - 0.6) <= 0.01 and pval > 0.01
    report(2, ok, f"E[x,y,z]=({means[0]:+.4f},{means[1]:+.4f},{means[2]:+.4f}) "
                  f"E[r^2]={r2:.4f} (0.600+-0.010) z-GOF p={pval:.3f} on {zt.size} thinned points")


def _ball_z_quantiles(k):
    qs = np.arange(1, k) / k
    return [_bisect(lambda z, q=q: ball_z_cdf(z) - q, -1, 1) for q in qs]


def _bisect(f, lo, hi):
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _force_error(target, rng, n=100, box=(-3, 3)):
    worst, used = 0.0, 0
    while used < n:
        t = rng.uniform(*box, target.dim)
        if not np.isfinite(target.log_w(t)):
            continue
        f = target.force(t)
        if not np.all(np.isfinite(f)):
            continue
        fd = finite_difference_gradient(target.log_w, t, h=1e-6)
        worst = max(worst, np.max(np.abs(f - fd)) / max(1.0, np.max(np.abs(f))))
        used += 1
    return worst


def test_criterion_03_gradients():
    rng = np.random.default_rng(SEED)
    errs = {
        "primitive": _force_error(primitive_qubit_target(), rng),
        "trine(8,5,11)": _force_error(trine_posterior_target([8, 5, 11]), rng),
        "bb84": _force_error(bb84.bb84_target(np.round(64 * _singlet_probs())), rng,
                             box=(0, 2 * np.pi)),
    }
    ok = all(e < 1e-6 for e in errs.values())
    report(3, ok, "max relative force error " +
           ", ".join(f"{k} {v:.1e}" for k, v in errs.items()) + " (< 1e-6, 100 points each)")


def test_criterion_04_integrator():
    rng = np.random.default_rng(SEED)
    prim = primitive_qubit_target()

    def harmonic(t):
        return -t

    rev = 0.0
    for force, start in ((harmonic, np.array([0.4, -1.2])), (prim.force, np.array([0.6, 0.5, 0.3]))):
        for _ in range(50):
            m = 0.5 * rng.normal(size=start.size)
            t1, m1 = trajectory(start, m, 0.02, 20, force)
            t0, m0 = trajectory(t1, m1, 0.02, 20, force)
            rev = max(rev, np.max(np.abs(t0 - start)), np.max(np.abs(m0 - m)))

    def dh(force, energy, start, mom, tau, total=0.4):
        t1, m1 = trajectory(start, mom, tau, int(round(total / tau)), force)
        return abs(energy(t1, m1) - energy(start, mom))

    def e_harm(t, m):
        return 0.5 * (m @ m + t @ t)

    def e_prim(t, m):
        return 0.5 * m @ m - prim.log_w(t)

    cases = [(harmonic, e_harm, np.array([1.0, -0.5]), np.array([0.3, 0.8])),
             (prim.force, e_prim, np.array([0.6, 0.5, 0.3]), np.array([0.2, -0.1, 0.4]))]
    ratios = [dh(f, e, s, m, 0.02) / dh(f, e, s, m, 0.01) for f, e, s, m in cases]

    vol = 0.0
    for _ in range(5):
        z0 = np.concatenate([rng.uniform(0.3, 1.2, 3), 0.3 * rng.normal(size=3)])

        def flow(z):
            t, m = trajectory(z[:3], z[3:], 0.1, 20, prim.force)
            return np.concatenate([t, m])

        vol = max(vol, abs(par.numeric_jacobian(flow, z0, h=1e-6) - 1))
    ok = rev < 1e-9 and all(3.5 <= r <= 4.5 for r in ratios) and vol < 1e-6
    report(4, ok, f"round trip {rev:.1e} (< 1e-9), dH ratios {ratios[0]:.3f}/{ratios[1]:.3f} "
                  f"(in [3.5, 4.5]), |det - 1| {vol:.1e} (< 1e-6)")


def test_criterion_05_metropolis_form():
    records = []
    cfg = hmc.HmcConfig.for_samples(10_000, burn_in=0, seed=SEED)
    hmc.run_chain(primitive_qubit_target(), cfg, records=records)
    worst, checked = 0.0, 0
    for r in records:
        if r.momentum_star is None:
            continue
        alt = hmc.mh_acceptance(r.log_w_start, r.log_w_end,
                                hmc.momentum_log_ratio(r.momentum, r.momentum_star))
        worst = max(worst, abs(alt - r.acceptance))
        checked += 1
    report(5, worst <= 1e-12 and checked >= 9_900,
           f"energy vs Metropolis-Hastings acceptance max diff {worst:.1e} over {checked} proposals")


def _trine_grid_means(counts, n=2000):
    g = (np.arange(n) + 0.5) / n * 2 - 1
    x, y = np.meshgrid(g, g, indexing="ij")
    inside = x * x + y * y <= 1
    p = POMS["trine"].offset[:, None] + POMS["trine"].directions[:, :2] @ np.vstack([x[inside], y[inside]])
    logw = np.sum(np.asarray(counts, float)[:, None] * np.log(np.clip(p, 1e-300, None)), axis=0)
    w = np.exp(logw - logw.max())
    return np.sum(w * x[inside]) / w.sum(), np.sum(w * y[inside]) / w.sum()


def test_criterion_06_trine_posterior():
    counts = [8, 5, 11]
    gx, gy = _trine_grid_means(counts)
    target = trine_posterior_target(counts)
    s = hmc.run_chain(target, hmc.HmcConfig.for_samples(50_000, burn_in=1000, seed=SEED))
    b = np.array([SPACES["equatorial"].bloch(t) for t in s.points])
    hx, hy = b[:, 0].mean(), b[:, 1].mean()
    ok = abs(hx - gx) < 0.01 and abs(hy - gy) < 0.01
    report(6, ok, f"HMC means ({hx:+.4f},{hy:+.4f}) vs grid ({gx:+.4f},{gy:+.4f}) (within 0.01), "
                  f"acceptance {s.acceptance_rate:.3f}")


def _singlet_probs():
    return bb84.born_probs(bb84.to_reconstruction_basis(bb84.true_state("singlet"))).ravel()


def test_criterion_07_q_bounds():
    rng = np.random.default_rng(SEED)
    uni = bb84.q_bounds(np.full((4, 4), 1 / 16))
    uni_err = max(abs(uni.q_min + 1), abs(uni.q_max - 1))
    inside, agree = True, 0.0
    for _ in range(200):
        p, q = bb84.nine_angle_map(rng.uniform(0, 2 * np.pi, 9))
        a, b = bb84.q_bounds(p), bb84.q_bounds_quartic(p)
        inside &= a.q_min - 1e-12 <= q <= a.q_max + 1e-12
        agree = max(agree, abs(a.q_min - b.q_min), abs(a.q_max - b.q_max))
    sing = bb84.q_bounds(_singlet_probs())
    sing_ok = sing.width < 1e-6 and abs(sing.q_min + 1) < 1e-6
    ok = uni_err < 1e-9 and inside and agree < 1e-7 and sing_ok
    report(7, ok, f"uniform [-1,1] err {uni_err:.1e}; 200 states q inside: {inside}; "
                  f"bisection vs quartic {agree:.1e} (< 1e-7); singlet width {sing.width:.1e} "
                  f"at {sing.q_min:+.7f}")


def test_criterion_08_chsh_equivalence():
    rng = np.random.default_rng(SEED)
    eq = 0.0
    for _ in range(100):
        p, q = bb84.nine_angle_map(rng.uniform(0, 2 * np.pi, 9))
        rho = bb84.from_reconstruction_basis(bb84.rho_of_q(p, q))
        eq = max(eq, abs(chsh.chsh_from_probs(p).S - chsh.chsh_fixed(rho).S))
    s_rho = chsh.chsh_fixed(bb84.true_state("singlet")).S
    s_p = chsh.chsh_from_probs(_singlet_probs()).S
    sing = max(abs(s_rho - 2 * np.sqrt(2)), abs(s_p - 2 * np.sqrt(2)))
    opt = 0.0
    for _ in range(50):
        p, q = bb84.nine_angle_map(rng.uniform(0, 2 * np.pi, 9))
        rho = bb84.from_reconstruction_basis(bb84.rho_of_q(p, q))
        best, _ = chsh.maximize_chsh(rho)
        opt = max(opt, abs(best - chsh.chsh_optimized(rho).S))
    ok = eq < 1e-10 and sing < 1e-10 and opt < 1e-6
    report(8, ok, f"probability vs operator form {eq:.1e} (< 1e-10); singlet 2sqrt2 err {sing:.1e}; "
                  f"direct maximization vs closed form {opt:.1e} (< 1e-6)")


def test_criterion_09_singlet_posterior_chsh():
    counts = np.round(64 * _singlet_probs())
    target = bb84.bb84_target(counts)
    cfg = hmc.HmcConfig.for_samples(50_000, burn_in=1000, seed=SEED,
                                    trajectory=TrajectoryConfig(0.05, 20))
    start = time.perf_counter()
    s = bb84.reweight_marginal(hmc.run_chain(target, cfg))
    wall = time.perf_counter() - start
    summary = chsh.chsh_sample_summary(s)
    w = s.weights / s.weights.sum()
    frac = float(np.sum(w[summary.values > 2]))
    report(9, frac > 0.8, f"weighted fraction S > 2 = {frac:.3f} (> 0.8), weighted median "
                          f"{summary.median:.3f}, Kish ESS {1 / np.sum(w ** 2):.0f}, acceptance "
                          f"{s.acceptance_rate:.3f}, {wall:.0f} s")


def test_criterion_10_random_walk_baseline():
    _, b, _ = primitive_run()
    target = primitive_qubit_target()
    scale = hmc.tune_rw_step(target, goal=0.6, seed=SEED)
    rw = hmc.rw_metropolis_chain(target, scale, hmc.HmcConfig.for_samples(50_000, burn_in=1000,
                                                                          seed=SEED))
    x_rw = np.array([par.bloch_from_angles(t)[0] for t in rw.points])
    tau_h = integrated_autocorr_time(b[:, 0])
    tau_r = integrated_autocorr_time(x_rw)
    report(10, tau_r >= 3 * tau_h,
           f"IAT of x: HMC {tau_h:.2f}, random walk {tau_r:.2f} at acceptance "
           f"{rw.acceptance_rate:.3f} (ratio {tau_r / tau_h:.1f} >= 3)")


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
