import numpy as np
import pytest

from hmcstate import bb84, hmc
from hmcstate.errors import ConstraintViolation, NotPhysical
from hmcstate.leapfrog import TrajectoryConfig
from hmcstate.targets import finite_difference_gradient

from conftest import random_density

PX = np.array([[0, 1], [1, 0]], dtype=complex)
PY = np.array([[0, -1j], [1j, 0]])
PZ = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2)
# crosshair outcomes +x, +y, -x, -y in the computational basis
CROSSHAIR_STD = [(I2 + PX) / 4, (I2 + PY) / 4, (I2 - PX) / 4, (I2 - PY) / 4]
# in-plane directions of the four outcomes
U = np.array([[1, 0], [0, 1], [-1, 0], [0, -1]], dtype=float)


def std_probs(rho_std):
    """Joint probabilities straight from the computational basis."""
    return np.array([[np.trace(rho_std @ np.kron(a, b)).real for b in CROSSHAIR_STD]
                     for a in CROSSHAIR_STD])


def probs_from_correlations(a, b, c):
    return (1 + (U @ a)[:, None] + (U @ b)[None, :] + U @ c @ U.T) / 16


def random_nine_angle_states(rng, n):
    return [bb84.nine_angle_map(rng.uniform(0, 2 * np.pi, 9)) for _ in range(n)]


def test_effects_form_a_measurement():
    total = bb84.JOINT_EFFECTS.sum(axis=(0, 1))
    np.testing.assert_allclose(total, np.eye(4), atol=1e-14)
    for e in bb84.JOINT_EFFECTS.reshape(16, 4, 4):
        assert np.linalg.eigvalsh(e)[0] > -1e-14


def test_basis_change_maps_paulis():
    for std, rec in ((PX, bb84.SX), (PY, bb84.SY), (PZ, bb84.SZ)):
        np.testing.assert_allclose(bb84.to_reconstruction_basis(np.kron(std, I2)),
                                   bb84.pair_operator(rec, I2), atol=1e-14)
        np.testing.assert_allclose(bb84.to_reconstruction_basis(np.kron(I2, std)),
                                   bb84.pair_operator(I2, rec), atol=1e-14)
    np.testing.assert_allclose(bb84.to_reconstruction_basis(np.kron(PZ, PZ)), bb84.SIGMA,
                               atol=1e-14)


def test_born_probabilities_agree_across_bases(rng):
    for _ in range(20):
        rho = random_density(rng, 4)
        p = bb84.born_probs(bb84.to_reconstruction_basis(rho))
        np.testing.assert_allclose(p, std_probs(rho), atol=1e-14)
        np.testing.assert_allclose(bb84.from_reconstruction_basis(bb84.to_reconstruction_basis(rho)),
                                   rho, atol=1e-14)


def test_singlet_table():
    p = std_probs(bb84.true_state("singlet"))
    want = np.array([[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]]) / 16
    np.testing.assert_allclose(p, want, atol=1e-15)
    np.testing.assert_allclose(std_probs(bb84.true_state("mixed")), np.full((4, 4), 1 / 16))


def test_noise_mixes_towards_identity():
    rho = bb84.true_state("triplet", noise=0.25)
    assert np.linalg.eigvalsh(rho)[0] == pytest.approx(0.25 / 4)
    with pytest.raises(ValueError):
        bb84.true_state("triplet", noise=1.5)
    with pytest.raises(ValueError):
        bb84.true_state("bell")


def test_probability_constraints(rng):
    for _ in range(20):
        p = bb84.born_probs(bb84.to_reconstruction_basis(random_density(rng, 4)))
        assert bb84.probabilities_valid(p)
    bad = np.full((4, 4), 1 / 16)
    bad[0, 0] += 0.01
    bad[0, 1] -= 0.01
    assert not bb84.probabilities_valid(bad)
    with pytest.raises(ConstraintViolation):
        bb84.check_probabilities(bad)
    with pytest.raises(ConstraintViolation):
        bb84.check_probabilities(np.ones(15) / 15)


def test_rho_of_q_reproduces_probabilities_and_q(rng):
    for _ in range(20):
        rho = bb84.to_reconstruction_basis(random_density(rng, 4)).real
        rho = (rho + rho.T) / 2
        rho /= np.trace(rho)
        p = bb84.born_probs(rho)
        q = float(np.sum(rho * bb84.SIGMA))
        rebuilt = bb84.rho_of_q(p, q)
        np.testing.assert_allclose(bb84.born_probs(rebuilt), p, atol=1e-14)
        assert np.sum(rebuilt * bb84.SIGMA) == pytest.approx(q, abs=1e-14)


def test_real_part_is_what_the_probabilities_fix(rng):
    # the crosshair probabilities only see the real part in the reconstruction basis
    for _ in range(10):
        rho = bb84.to_reconstruction_basis(random_density(rng, 4))
        np.testing.assert_allclose(bb84.born_probs(rho), bb84.born_probs(rho.real), atol=1e-14)


def test_quartic_coefficients(rng):
    for p, _ in random_nine_angle_states(rng, 20):
        c = bb84.det_quartic(p)
        for q in rng.uniform(-1.5, 1.5, 5):
            assert np.polyval(c[::-1], q) == pytest.approx(np.linalg.det(bb84.rho_of_q(p, q)),
                                                           abs=1e-14)
        np.testing.assert_allclose(bb84.quartic_from_traces(p), c, atol=1e-13)
        assert c[4] == pytest.approx(1 / 256)
        assert c[3] == pytest.approx(0.0, abs=1e-14)


def test_q_bounds_uniform_and_singlet():
    iv = bb84.q_bounds(np.full((4, 4), 1 / 16))
    assert iv.q_min == pytest.approx(-1.0, abs=1e-9) and iv.q_max == pytest.approx(1.0, abs=1e-9)
    p = bb84.born_probs(bb84.to_reconstruction_basis(bb84.true_state("singlet")))
    iv = bb84.q_bounds(p)
    assert iv.width < 1e-6 and abs(iv.q_min + 1) < 1e-6


def test_q_bounds_bracket_positivity(rng):
    for p, q in random_nine_angle_states(rng, 50):
        iv = bb84.q_bounds(p)
        assert q in iv or min(abs(q - iv.q_min), abs(q - iv.q_max)) < 1e-12
        for end, step in ((iv.q_min, -1e-6), (iv.q_max, 1e-6)):
            assert np.linalg.eigvalsh(bb84.rho_of_q(p, end))[0] > -1e-12
            if -1 < end + step < 1:
                assert np.linalg.eigvalsh(bb84.rho_of_q(p, end + step))[0] < 0


def test_bisection_and_quartic_roots_agree(rng):
    worst = 0.0
    for p, _ in random_nine_angle_states(rng, 200):
        a, b = bb84.q_bounds(p), bb84.q_bounds_quartic(p)
        worst = max(worst, abs(a.q_min - b.q_min), abs(a.q_max - b.q_max))
    assert worst < 1e-7


def test_batch_matches_single(rng):
    states = random_nine_angle_states(rng, 30)
    ps = np.array([p for p, _ in states])
    lo, hi, ok = bb84.q_bounds_batch(ps)
    assert ok.all()
    for p, l, h in zip(ps, lo, hi):
        iv = bb84.q_bounds(p)
        assert (iv.q_min, iv.q_max) == pytest.approx((l, h), abs=1e-14)
    lo2, hi2, _ = bb84.q_bounds_batch(ps, q_inside=[q for _, q in states])
    np.testing.assert_allclose(lo2, lo, atol=1e-12)
    np.testing.assert_allclose(hi2, hi, atol=1e-12)


def test_physicality_check():
    assert bb84.physicality_check(np.full((4, 4), 1 / 16))
    # correlations beyond the quantum set: perfect x-x and y-y correlation plus anticorrelated
    # marginals is still a valid table but no state reproduces it
    p = probs_from_correlations(np.zeros(2), np.zeros(2), np.array([[1.0, 1.0], [1.0, -1.0]]))
    p = np.clip(p, 0, None)
    p /= p.sum()
    if bb84.probabilities_valid(p):
        assert not bb84.physicality_check(p)
        with pytest.raises(NotPhysical):
            bb84.q_bounds(p)
    assert not bb84.physicality_check(np.full(16, 1 / 15))


def test_independent_coordinates_have_full_rank(rng):
    for _ in range(10):
        theta = rng.uniform(0.2, 1.3, 9)

        def coords(t):
            p, q = bb84.nine_angle_map(t)
            return bb84.independent_coordinates(p, q)

        jac = np.array([finite_difference_gradient(lambda t: coords(t)[i], theta) for i in range(9)])
        assert np.linalg.matrix_rank(jac, tol=1e-8) == 9


def test_target_force_matches_differences(rng):
    counts = rng.integers(0, 6, 16)
    target = bb84.bb84_target(counts)
    worst = 0.0
    for _ in range(30):
        th = rng.uniform(0, 2 * np.pi, 9)
        if not np.isfinite(target.log_w(th)):
            continue
        f = target.force(th)
        fd = finite_difference_gradient(target.log_w, th, h=1e-6)
        worst = max(worst, np.max(np.abs(f - fd)) / max(1.0, np.max(np.abs(f))))
    assert worst < 1e-6


def test_analytic_measure_matches_numeric_jacobian(rng):
    counts = np.arange(16) % 3
    analytic = bb84.bb84_target(counts)
    numeric = bb84.bb84_target(counts, numeric=True)
    diffs = []
    for _ in range(15):
        th = rng.uniform(0.2, 1.3, 9)
        diffs.append(analytic.log_w(th) - numeric.log_w(th))
    assert np.ptp(diffs) < 1e-5


def _rejection_prior(rng, n):
    """Uniform draws over physical joint probabilities.

    The probabilities are affine in the eight in-plane correlations, so a box
    proposal accepted by the physicality test is uniform in p as well.
    """
    kept = []
    while sum(len(k) for k in kept) < n:
        v = rng.uniform(-1, 1, (20000, 8))
        ps = np.array([probs_from_correlations(x[:2], x[2:4], x[4:].reshape(2, 2)) for x in v])
        nonneg = np.all(ps >= 0, axis=(1, 2))
        _, _, ok = bb84.q_bounds_batch(ps[nonneg])
        kept.append(v[nonneg][ok])
    return np.vstack(kept)[:n]


def test_reweighted_prior_matches_rejection_sampler(rng):
    ref = _rejection_prior(rng, 3000)
    ref_a2 = np.mean(ref[:, :4] ** 2)
    ref_c2 = np.mean(ref[:, 4:] ** 2)

    target = bb84.bb84_target()
    cfg = hmc.HmcConfig.for_samples(6000, burn_in=500, seed=2, trajectory=TrajectoryConfig(0.05, 20))
    s = bb84.reweight_marginal(hmc.run_chain(target, cfg))
    w = s.weights / s.weights.sum()
    p = s.probs.reshape(-1, 4, 4)
    rows, cols = p.sum(axis=2), p.sum(axis=1)
    a = 2 * np.column_stack([rows[:, 0] - rows[:, 2], rows[:, 1] - rows[:, 3],
                             cols[:, 0] - cols[:, 2], cols[:, 1] - cols[:, 3]])
    c = 4 * np.einsum("ia,nab,jb->nij", U.T, p, U.T).reshape(-1, 4)
    assert np.sum(w[:, None] * a ** 2) / 4 == pytest.approx(ref_a2, abs=0.01)
    assert np.sum(w[:, None] * c ** 2) / 4 == pytest.approx(ref_c2, abs=0.01)
    ref_p11 = np.array([probs_from_correlations(x[:2], x[2:4], x[4:].reshape(2, 2))[0, 0]
                        for x in ref])
    kish = 1 / np.sum(w ** 2)
    se = np.hypot(ref_p11.std() / np.sqrt(ref_p11.size), ref_p11.std() / np.sqrt(kish))
    assert abs(np.sum(w * p[:, 0, 0]) - ref_p11.mean()) < 3 * se
    assert s.metadata["auxiliary"] == "q"
    assert s.metadata["degenerate_weights"] == 0


def test_reweight_weights_are_inverse_widths(rng):
    states = random_nine_angle_states(rng, 20)
    pts = np.zeros((20, 9))
    s = hmc.SampleSet(pts, np.array([p.ravel() for p, _ in states]), np.ones(20), {},
                      aux=np.array([q for _, q in states]))
    r = bb84.reweight_marginal(s)
    for (p, _), w in zip(states, r.weights):
        width = bb84.q_bounds(p).width
        if width < 1e-9:
            assert w == bb84.MAX_WEIGHT
        else:
            # the two bisections start from different points; compare widths absolutely
            assert 1 / w == pytest.approx(width, abs=1e-13)


def test_reweight_clamps_degenerate_intervals():
    p = bb84.born_probs(bb84.to_reconstruction_basis(bb84.true_state("singlet")))
    s = hmc.SampleSet(np.zeros((2, 9)), np.array([p.ravel()] * 2), np.ones(2), {},
                      aux=np.array([-1.0, -1.0]))
    r = bb84.reweight_marginal(s)
    assert np.all(r.weights == bb84.MAX_WEIGHT)
    assert r.metadata["degenerate_weights"] == 2


def test_uniform_probabilities_give_maximally_mixed_rho0():
    p = np.full((4, 4), 1 / 16)
    np.testing.assert_allclose(bb84.rho0_from_probs(p), np.eye(4) / 4, atol=1e-15)
    np.testing.assert_allclose(np.linalg.eigvalsh(bb84.rho_of_q(p, 1.0)), [0, 0, 0.5, 0.5],
                               atol=1e-15)
    np.testing.assert_allclose(bb84.det_quartic(p), np.array([1, 0, -2, 0, 1]) / 256, atol=1e-15)


def test_rho0_has_unit_trace(rng):
    for p, _ in random_nine_angle_states(rng, 20):
        assert np.trace(bb84.rho0_from_probs(p)) == pytest.approx(1.0, abs=1e-12)
        assert 4 * (p[0, 0] + p[2, 0] + p[0, 2] + p[2, 2]) == pytest.approx(1.0, abs=1e-12)


def test_product_state_interval_contains_zero():
    v = np.array([1, 1]) / np.sqrt(2)
    psi = np.kron(v, v)
    rho = np.outer(psi, psi).astype(complex)
    p = std_probs(rho)
    iv = bb84.q_bounds(p)
    q_true = np.trace(rho @ np.kron(PZ, PZ)).real
    # a pure product state pins q: the interval collapses onto the true value
    assert iv.q_min - 1e-9 <= q_true <= iv.q_max + 1e-9
    assert iv.q_max - iv.q_min < 1e-6
    assert q_true == pytest.approx(0.0, abs=1e-15)


def test_first_angle_zero_gives_plus_x_pair(rng):
    theta = np.concatenate([[0.0], rng.uniform(0, 3, 8)])
    p, q = bb84.nine_angle_map(theta)
    one = np.array([0.5, 0.25, 0.0, 0.25])
    np.testing.assert_allclose(p, np.outer(one, one), atol=1e-15)
    assert (p[0, 0], p[0, 1], p[1, 1]) == pytest.approx((1 / 4, 1 / 8, 1 / 16))
    assert q == pytest.approx(0.0, abs=1e-15)


def test_nine_angle_round_trip(rng):
    for _ in range(50):
        theta = rng.uniform(-5, 5, 9)
        p, q = bb84.nine_angle_map(theta)
        from hmcstate.parameterization import build_density
        np.testing.assert_allclose(bb84.rho_of_q(p, q), build_density(theta, real=True), atol=1e-12)


def test_sampled_states_are_all_physical(rng):
    states = random_nine_angle_states(rng, 1000)
    lo, hi, ok = bb84.q_bounds_batch(np.array([p for p, _ in states]))
    q = np.array([q for _, q in states])
    assert ok.all()
    assert np.all((q >= lo - 1e-8) & (q <= hi + 1e-8))


@pytest.mark.parametrize("scale", [1.2, 1.05, 1.5])
def test_scaled_singlet_is_not_physical(scale):
    singlet = std_probs(bb84.true_state("singlet"))
    t = 16 * singlet - 1
    p = (1 + scale * t) / 16
    p = p / p.sum()
    assert not bb84.physicality_check(p)
    grid = np.linspace(-1, 1, 2001)
    rho0 = bb84._rho0_batch(p.reshape(4, 4))
    lam = [np.linalg.eigvalsh(rho0 + 0.25 * q * bb84.SIGMA)[0] for q in grid]
    assert max(lam) < 0


def test_uniform_point_weight_is_one_half():
    s = hmc.SampleSet(np.zeros((1, 9)), np.full((1, 16), 1 / 16), np.ones(1), {}, aux=np.zeros(1))
    assert bb84.reweight_marginal(s).weights[0] == pytest.approx(0.5)


def test_numeric_target_force_is_step_consistent(rng):
    target = bb84.bb84_target(np.arange(16) % 4, numeric=True)
    th = rng.uniform(0.3, 1.2, 9)
    f1 = finite_difference_gradient(target.log_w, th, h=1e-4)
    f2 = finite_difference_gradient(target.log_w, th, h=5e-5)
    assert np.max(np.abs(f1 - f2)) / np.max(np.abs(f2)) < 1e-4
