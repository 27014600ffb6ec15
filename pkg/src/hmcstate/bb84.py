"""Two-qubit double-crosshair (BB84) reconstruction.

Both parties measure the four-outcome crosshair POM (+x, +y, -x, -y), giving
16 joint probabilities ``p[j, k]`` (first index: first qubit; 0-based here,
so ``p[0, 0]`` is the +x/+x outcome).  Eight of them are independent.
They fix a real symmetric 4x4 matrix ``rho0`` up to the unmeasured
correlation ``q = <sigma_z (x) sigma_z>``:

    rho(q) = rho0(p) + q/4 * SIGMA

All matrices in this module are written in the *reconstruction basis*: the
sigma_x eigenbasis of each qubit with phases chosen so that

    sigma_x -> diag(1, -1),  sigma_y -> [[0, 1], [1, 0]],  sigma_z -> [[0, -i], [i, 0]],

and with the first qubit as the fast index (basis order ++, -+, +-, --).
In this basis the crosshair effects are real and SIGMA is sigma_z (x)
sigma_z.  Use :func:`to_reconstruction_basis` / :func:`from_reconstruction_basis`
to move to and from the standard computational basis.
"""
from dataclasses import dataclass

import numpy as np

from . import parameterization as par
from .errors import ConstraintViolation, NotPhysical, SingularMap
from .hmc import SampleSet
from .targets import TargetDensity, finite_difference_gradient, prior_counts

__all__ = [
    "SIGMA",
    "SX",
    "SY",
    "SZ",
    "pair_operator",
    "JOINT_EFFECTS",
    "to_reconstruction_basis",
    "from_reconstruction_basis",
    "born_probs",
    "true_state",
    "probabilities_valid",
    "check_probabilities",
    "QInterval",
    "rho0_from_probs",
    "rho_of_q",
    "det_quartic",
    "quartic_from_traces",
    "q_bounds",
    "q_bounds_batch",
    "q_bounds_quartic",
    "physicality_check",
    "independent_coordinates",
    "nine_angle_map",
    "bb84_target",
    "reweight_marginal",
]

SX = np.diag([1.0, -1.0])
SY = np.array([[0.0, 1.0], [1.0, 0.0]])
SZ = np.array([[0.0, -1j], [1j, 0.0]])
SIGMA = np.array([
    [0.0, 0.0, 0.0, -1.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0, 0.0],
])

MAX_WEIGHT = 1e9
EIG_TOL = 0.0
INFEASIBLE_TOL = 1e-6


def pair_operator(first, second):
    """Matrix of ``first (x) second`` with the first qubit as the fast index."""
    return np.kron(second, first)


_CROSSHAIR = np.array([
    (np.eye(2) + SX) / 4,
    (np.eye(2) + SY) / 4,
    (np.eye(2) - SX) / 4,
    (np.eye(2) - SY) / 4,
])
JOINT_EFFECTS = np.array([[pair_operator(a, b) for b in _CROSSHAIR] for a in _CROSSHAIR])
_EFFECTS_FLAT = JOINT_EFFECTS.reshape(16, 16)

# columns: |+x>, -i|-x> in the computational basis
_V = np.array([[1.0, -1j], [1.0, 1j]]) / np.sqrt(2)
_W = np.kron(_V, _V)[:, [0, 2, 1, 3]]


def to_reconstruction_basis(rho_std):
    return _W.conj().T @ np.asarray(rho_std) @ _W


def from_reconstruction_basis(rho):
    return _W @ np.asarray(rho) @ _W.conj().T


def born_probs(rho):
    """``p[j, k] = tr(rho E_jk)`` for a reconstruction-basis density matrix."""
    rho = np.asarray(rho)
    return np.einsum("jkab,ba->jk", JOINT_EFFECTS, rho).real


def true_state(name, noise=0.0):
    """Named two-qubit state in the computational basis, optionally depolarized.

    ``singlet`` and ``triplet`` are ``(|10> -+ |01>)/sqrt 2``; ``mixed`` is the
    identity over four.  ``noise`` mixes in ``identity/4`` with that weight.
    """
    if not 0 <= noise <= 1:
        raise ValueError("noise must lie in [0, 1]")
    if name == "mixed":
        rho = np.eye(4) / 4
    elif name in ("singlet", "triplet"):
        sign = -1.0 if name == "singlet" else 1.0
        psi = np.zeros(4)
        psi[2], psi[1] = 1 / np.sqrt(2), sign / np.sqrt(2)
        rho = np.outer(psi, psi)
    else:
        raise ValueError(f"unknown state {name!r}")
    return ((1 - noise) * rho + noise * np.eye(4) / 4).astype(complex)


def probabilities_valid(p, tol=1e-10):
    """Nonnegativity, normalization and the crosshair marginal constraints."""
    p = np.asarray(p, dtype=float).reshape(4, 4)
    if np.any(p < -tol) or abs(p.sum() - 1) > tol:
        return False
    cols = p[0] + p[2] - p[1] - p[3]
    rows = p[:, 0] + p[:, 2] - p[:, 1] - p[:, 3]
    return bool(np.all(np.abs(cols) <= tol) and np.all(np.abs(rows) <= tol))


def check_probabilities(p, tol=1e-10):
    p = np.asarray(p, dtype=float)
    if p.size != 16:
        raise ConstraintViolation(f"need 16 joint probabilities, got {p.size}")
    if not probabilities_valid(p, tol):
        raise ConstraintViolation("joint probabilities violate the double-crosshair constraints")
    return p.reshape(4, 4)


@dataclass(frozen=True)
class QInterval:
    q_min: float
    q_max: float

    @property
    def width(self):
        return self.q_max - self.q_min

    def __contains__(self, q):
        return self.q_min <= q <= self.q_max


def _rho0_batch(p):
    """``rho0`` for probabilities of shape ``(..., 4, 4)``; no validation."""
    p = np.asarray(p, dtype=float)
    diag = 4 * np.stack([p[..., 0, 0], p[..., 2, 0], p[..., 0, 2], p[..., 2, 2]], axis=-1)
    a = 2 * (p[..., 1, 0] - p[..., 3, 0])
    b = 2 * (p[..., 0, 1] - p[..., 0, 3])
    c = 2 * (p[..., 2, 1] - p[..., 2, 3])
    e = 2 * (p[..., 1, 2] - p[..., 3, 2])
    even = p[..., 1, 1] - p[..., 1, 3] - p[..., 3, 1] + p[..., 3, 3]
    out = np.zeros(p.shape[:-2] + (4, 4))
    idx = np.arange(4)
    out[..., idx, idx] = diag
    for (i, j), v in {(0, 1): a, (0, 2): b, (0, 3): even, (1, 2): even,
                      (1, 3): c, (2, 3): e}.items():
        out[..., i, j] = v
        out[..., j, i] = v
    return out


def rho0_from_probs(p):
    """Real symmetric ``rho0`` built from the 16 joint probabilities."""
    return _rho0_batch(check_probabilities(p))


def rho_of_q(p, q):
    return rho0_from_probs(p) + 0.25 * q * SIGMA


def det_quartic(p):
    """Coefficients ``c0..c4`` (ascending) of ``det rho(q)``.

    Obtained by interpolating the determinant at five nodes, which is exact
    for a quartic.
    """
    rho0 = rho0_from_probs(p)
    nodes = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
    vals = np.array([np.linalg.det(rho0 + 0.25 * q * SIGMA) for q in nodes])
    return np.linalg.solve(np.vander(nodes, 5, increasing=True), vals)


def quartic_from_traces(p):
    """Closed-form quartic coefficients in terms of traces of ``rho0``.

    With ``t = q/4``: ``det = t^4 - tr((rho0 SIGMA)^2)/2 t^2
    + tr((rho0^2 - rho0^3) SIGMA) t + det rho0`` (the cubic term carries
    ``tr(rho0 SIGMA)``, which vanishes).
    """
    r = rho0_from_probs(p)
    rs = r @ SIGMA
    t4 = 1.0
    t3 = np.trace(rs)
    t2 = -0.5 * np.trace(rs @ rs)
    t1 = np.trace((r @ r - r @ r @ r) @ SIGMA)
    t0 = np.linalg.det(r)
    return np.array([t0, t1 / 4, t2 / 16, t3 / 64, t4 / 256])


def _gmin(rho0, q):
    return np.linalg.eigvalsh(rho0 + 0.25 * q[..., None, None] * SIGMA)[..., 0]


def _golden_max(rho0, iters):
    """Maximizer of the concave ``g(q)`` on [-1, 1], one per row."""
    n = rho0.shape[0]
    lo, hi = np.full(n, -1.0), np.full(n, 1.0)
    r = (np.sqrt(5) - 1) / 2
    x1, x2 = hi - r * (hi - lo), lo + r * (hi - lo)
    g1, g2 = _gmin(rho0, x1), _gmin(rho0, x2)
    for _ in range(iters):
        left = g1 < g2
        lo = np.where(left, x1, lo)
        hi = np.where(left, hi, x2)
        nx1 = np.where(left, x2, hi - r * (hi - lo))
        nx2 = np.where(left, lo + r * (hi - lo), x1)
        ng1 = np.where(left, g2, 0.0)
        ng2 = np.where(left, 0.0, g1)
        if (~left).any():
            ng1[~left] = _gmin(rho0[~left], nx1[~left])
        if left.any():
            ng2[left] = _gmin(rho0[left], nx2[left])
        x1, x2, g1, g2 = nx1, nx2, ng1, ng2
    return 0.5 * (lo + hi)


def q_bounds_batch(p, q_inside=None, tol=EIG_TOL, iters=52):
    """Vectorized feasible-q intervals for probabilities of shape ``(N, 4, 4)``.

    ``g(q) = lambda_min(rho(q))`` is concave (minimum eigenvalue of an affine
    matrix pencil).  Starting from a point with ``g >= -tol`` (``q_inside``
    when it qualifies, else the golden-section maximizer of ``g``), the ends
    are found by bisection towards -1 and +1.  The default ``tol = 0`` makes
    the bisection track the sign change of ``g`` itself: near-pure states have
    very flat ``g`` and any slack would move the ends noticeably.

    Returns ``(q_min, q_max, physical)``; a row is physical when
    ``max g >= -1e-6`` and non-physical rows carry NaN bounds.
    """
    rho0 = _rho0_batch(np.asarray(p, dtype=float).reshape(-1, 4, 4))
    n = rho0.shape[0]
    if q_inside is None:
        start = np.zeros(n)
        good = np.zeros(n, dtype=bool)
    else:
        start = np.asarray(q_inside, dtype=float).reshape(n).copy()
        good = _gmin(rho0, start) >= -tol
    if not good.all():
        start[~good] = _golden_max(rho0[~good], iters)
    g_star = _gmin(rho0, start)
    physical = g_star >= -INFEASIBLE_TOL
    feasible = g_star >= -tol

    ends = np.array([-1.0, 1.0])
    g_ends = _gmin(np.repeat(rho0, 2, axis=0), np.tile(ends, n)).reshape(n, 2)
    bounds = []
    for side in (0, 1):
        end = ends[side]
        done = g_ends[:, side] >= -tol
        inside, outside = start.copy(), np.full(n, end)
        todo = ~done & feasible
        for _ in range(iters):
            if not todo.any():
                break
            mid = 0.5 * (inside[todo] + outside[todo])
            ok = _gmin(rho0[todo], mid) >= -tol
            inside[todo] = np.where(ok, mid, inside[todo])
            outside[todo] = np.where(ok, outside[todo], mid)
        b = np.where(done, end, inside)
        bounds.append(np.where(feasible, b, start))
    q_min = np.where(physical, bounds[0], np.nan)
    q_max = np.where(physical, bounds[1], np.nan)
    return q_min, q_max, physical


def q_bounds(p):
    """Permissible interval of the unmeasured correlation ``q``.

    Raises :class:`NotPhysical` when no ``q`` makes ``rho(q)`` positive.
    """
    check_probabilities(p)
    q_min, q_max, ok = q_bounds_batch(p)
    if not ok[0]:
        raise NotPhysical("no value of q yields a positive semidefinite matrix")
    return QInterval(float(q_min[0]), float(q_max[0]))


def _local_quartic_roots(rho0, center, scale):
    u = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
    vals = np.array([np.linalg.det(rho0 + 0.25 * (center + scale * x) * SIGMA) for x in u])
    coeffs = np.linalg.solve(np.vander(u, 5, increasing=True), vals)
    return center + scale * np.roots(coeffs[::-1])


def q_bounds_quartic(p, imag_tol=1e-4, refine=4):
    """Interval from the second and third real roots of ``det rho(q)``.

    Near-pure states put all four roots within a tiny window, and the
    coefficients interpolated on [-1, 1] lose them to rounding.  Each
    refinement pass re-interpolates the determinant on nodes centred between
    the middle roots and scaled to the root spread, then re-solves via the
    companion matrix.
    """
    rho0 = rho0_from_probs(p)
    roots = np.roots(det_quartic(p)[::-1] * 256)
    for _ in range(refine + 1):
        real = np.sort(roots[np.abs(roots.imag) <= imag_tol * max(1.0, np.ptp(roots.real))].real)
        if real.size != 4:
            raise NotPhysical(f"expected four real roots, found {real.size}")
        if _ == refine:
            break
        scale = max(min(real[3] - real[1], real[2] - real[0]), 1e-9)
        roots = _local_quartic_roots(rho0, 0.5 * (real[1] + real[2]), scale)
    return QInterval(float(np.clip(real[1], -1, 1)), float(np.clip(real[2], -1, 1)))


def physicality_check(p):
    """True iff some ``q`` makes ``rho(q)`` positive semidefinite."""
    try:
        q_bounds(p)
    except (NotPhysical, ConstraintViolation):
        return False
    return True


def independent_coordinates(p, q):
    """Nine coordinates that fix ``rho(q)`` linearly: eight from ``p`` plus ``q``."""
    p = np.asarray(p, dtype=float).reshape(4, 4)
    return np.array([
        p[0, 0], p[2, 0], p[0, 2],
        p[1, 0] - p[3, 0], p[0, 1] - p[0, 3], p[2, 1] - p[2, 3], p[1, 2] - p[3, 2],
        p[1, 1] - p[1, 3] - p[3, 1] + p[3, 3],
        q,
    ])


def nine_angle_map(theta):
    """Joint probabilities (4x4) and ``q`` for the real nine-angle state."""
    rho = par.build_density(theta, real=True)
    return born_probs(rho), float(np.sum(rho * SIGMA))


def _nine_angle_derivatives(theta):
    a = par.build_factor(theta, real=True)
    da = par.build_factor_derivatives(theta, real=True)
    rho = a.T @ a
    term = np.matmul(np.swapaxes(da, -1, -2), a)
    drho = term + np.swapaxes(term, -1, -2)
    p = _EFFECTS_FLAT @ rho.ravel()
    dp = drho.reshape(drho.shape[0], 16) @ _EFFECTS_FLAT.T
    return p, dp


def bb84_target(counts=None, prior="primitive", mock=None, numeric=False):
    """Nine-angle posterior over ``(p, q)`` with density flat in ``q``.

    The measure is the flat volume element of real trace-one 4x4 states in
    the nine angles (closed form from
    :func:`~hmcstate.parameterization.log_volume_element`), which equals the
    Jacobian to the independent ``(p, q)`` coordinates up to a constant.
    ``numeric=True`` instead takes that Jacobian by central differences and the
    force by differencing the log-density; it is much slower and is kept as a
    cross-check.
    """
    raw = np.zeros(16) if counts is None else np.asarray(counts, dtype=float).ravel()
    n = prior_counts(raw, prior, mock)
    if n.shape != (16,):
        raise ValueError("double-crosshair data need 16 counts")
    active = n != 0
    n_act = n[active]

    def probs(theta):
        return nine_angle_map(theta)[0].ravel()

    def aux(theta):
        return nine_angle_map(theta)[1]

    if numeric:
        def coords(theta):
            pj, q = nine_angle_map(theta)
            return independent_coordinates(pj, q)

        def log_w(theta):
            p = probs(theta)
            if np.any(p[active] <= 0):
                return -np.inf
            try:
                jac = par.numeric_jacobian(coords, theta, floor=0.0)
            except SingularMap:
                return -np.inf
            return float(np.log(jac) + np.sum(n_act * np.log(p[active])))

        def force(theta):
            return finite_difference_gradient(log_w, theta, h=1e-5)

        return TargetDensity(9, log_w, force, "bb84-numeric", probs=probs, aux=aux,
                             pom_id="bb84-double-crosshair")

    def log_w(theta):
        lv, _ = par.log_volume_element(theta, real=True)
        if not np.isfinite(lv):
            return -np.inf
        p = _EFFECTS_FLAT @ par.build_density(theta, real=True).ravel()
        if np.any(p[active] <= 0):
            return -np.inf
        return float(lv + np.sum(n_act * np.log(p[active])))

    def force(theta):
        _, gv = par.log_volume_element(theta, real=True)
        p, dp = _nine_angle_derivatives(theta)
        if np.any(p[active] <= 0):
            return np.full(9, np.nan)
        return gv + dp[:, active] @ (n_act / p[active])

    return TargetDensity(9, log_w, force, f"bb84/{prior}", probs=probs, aux=aux,
                         pom_id="bb84-double-crosshair")


def reweight_marginal(samples):
    """Importance weights ``1 / (q_max - q_min)`` that marginalize out ``q``.

    Intervals narrower than 1e-9 get the clamp weight 1e9 and are counted in
    ``metadata['degenerate_weights']``.
    """
    if samples.probs is None:
        raise ValueError("sample set carries no joint probabilities")
    q_min, q_max, ok = q_bounds_batch(samples.probs, q_inside=samples.aux)
    if not ok.all():
        raise NotPhysical(f"{np.sum(~ok)} sample points are not physical")
    width = q_max - q_min
    degenerate = width < 1e-9
    weights = np.where(degenerate, MAX_WEIGHT, 1.0 / np.where(degenerate, 1.0, width))
    return samples.with_weights(
        weights,
        degenerate_weights=int(degenerate.sum()),
        auxiliary="q",
        weighting="1/(q_max - q_min)",
    )
