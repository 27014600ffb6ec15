"""Angle parameterization of density matrices.

A d-level state is written as ``rho = A^H A`` with ``A`` upper triangular,
real on the diagonal and of unit Frobenius norm.  The moduli of the d(d+1)/2
upper-triangle entries are hyperspherical Cartesian coordinates of
``n = (d+2)(d-1)/2`` angles; the remaining ``d(d-1)/2`` angles are phases of
the off-diagonal entries.  Altogether ``S = d**2 - 1`` unconstrained real
angles, and every angle vector gives a valid state.

Entry layout (1-based, as in the usual displayed matrices)::

    d = 2        d = 3                      d = 4
    C1 C2E3      C1 C2E6 C4E7               C1 C2E10 C4E11 C7E13
    0  S2        0  C3   C5E8               0  C3    C5E12 C8E14
                 0  0    S5                 0  0     C6    C9E15
                                            0  0     0     S9

with ``E_k = exp(-i theta_k)``.
"""
from functools import lru_cache

import numpy as np

from .errors import BadDimension, SingularMap

__all__ = [
    "n_sphere_angles",
    "dim_from_angles",
    "spherical_cartesian",
    "spherical_cartesian_jacobian",
    "factor_layout",
    "build_factor",
    "build_factor_derivatives",
    "build_density",
    "build_density_derivatives",
    "bloch_from_angles",
    "bloch_jacobian",
    "jacobian_qubit_full",
    "jacobian_equatorial",
    "jacobian_hemisphere",
    "log_volume_element",
    "numeric_jacobian",
]


def n_sphere_angles(d):
    """Number of hyperspherical angles, (d+2)(d-1)/2."""
    return (d + 2) * (d - 1) // 2


def dim_from_angles(n_angles, real=False):
    """Recover d from the angle count (d**2 - 1, or (d+2)(d-1)/2 if real)."""
    for d in range(1, 65):
        count = n_sphere_angles(d) if real else d * d - 1
        if count == n_angles:
            return d
        if count > n_angles:
            break
    kind = "real" if real else "complex"
    raise BadDimension(f"{n_angles} angles do not parameterize any {kind} d x d state")


def spherical_cartesian(angles):
    """Cartesian coordinates ``(C_1, ..., C_n, S_n)`` of n hyperspherical angles.

    ``C_1 = cos t_1``, ``S_1 = sin t_1``, ``C_k = S_{k-1} cos t_k``,
    ``S_k = S_{k-1} sin t_k``.  The squares always sum to one.
    """
    t = np.atleast_1d(np.asarray(angles, dtype=float))
    if t.ndim != 1 or t.size < 1:
        raise ValueError("need at least one angle")
    s_prev = np.concatenate(([1.0], np.cumprod(np.sin(t))))
    out = np.empty(t.size + 1)
    out[:-1] = s_prev[:-1] * np.cos(t)
    out[-1] = s_prev[-1]
    return out


def spherical_cartesian_jacobian(angles):
    """Derivatives ``J[s, k] = d out_k / d t_s`` of :func:`spherical_cartesian`.

    Built from explicit products so that it stays finite where some sine
    vanishes.
    """
    t = np.asarray(angles, dtype=float)
    n = t.size
    sin, cos = np.sin(t), np.cos(t)
    # row s: the sine factors with sin t_s swapped for its derivative cos t_s
    fac = np.tile(sin, (n, 1))
    fac[np.arange(n), np.arange(n)] = cos
    prefix = np.ones((n, n + 1))
    prefix[:, 1:] = np.cumprod(fac, axis=1)
    tail = np.append(cos, 1.0)
    jac = np.triu(prefix * tail, k=1)
    s_prev = np.concatenate(([1.0], np.cumprod(sin)))[:n]
    jac[np.arange(n), np.arange(n)] = -s_prev * sin
    return jac


@lru_cache(maxsize=None)
def factor_layout(d):
    """Index layout of the triangular factor.

    Returns ``(diag, offdiag)``: ``diag[k]`` is the 0-based Cartesian index for
    ``A[k, k]``; ``offdiag`` lists ``(j, k, m, phase)`` with 0-based row/column,
    Cartesian index ``m`` and 0-based phase-angle index.
    """
    n = n_sphere_angles(d)
    diag = []
    for k in range(1, d + 1):
        diag.append(k * (k + 1) // 2 - 1 if k < d else n)
    offdiag = []
    for k in range(1, d + 1):
        for j in range(1, k):
            m = k * (k - 1) // 2 + j
            shift = n - (k - 1)
            offdiag.append((j - 1, k - 1, m - 1, m + shift - 1))
    return tuple(diag), tuple(offdiag)


def _split(theta, real):
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1:
        raise BadDimension("angle vector must be one-dimensional")
    d = dim_from_angles(theta.size, real=real)
    n = n_sphere_angles(d)
    return theta, d, n


@lru_cache(maxsize=None)
def _layout_arrays(d):
    """Flat index arrays ``(rows, cols, cart_idx, phase_idx)`` over the upper triangle.

    Diagonal entries come first and carry phase index -1.
    """
    diag, offdiag = factor_layout(d)
    rows = [k for k in range(d)] + [j for j, _, _, _ in offdiag]
    cols = [k for k in range(d)] + [k for _, k, _, _ in offdiag]
    cart = list(diag) + [m for _, _, m, _ in offdiag]
    phase = [-1] * d + [ph for _, _, _, ph in offdiag]
    return tuple(np.array(x) for x in (rows, cols, cart, phase))


def build_factor(theta, real=False):
    """Upper-triangular factor ``A`` with ``rho = A^H A``.

    With ``real=True`` the angle vector holds only the ``(d+2)(d-1)/2``
    hyperspherical angles and all phases are pinned to zero, so ``A`` is real.
    """
    theta, d, n = _split(theta, real)
    cart = spherical_cartesian(theta[:n])
    rows, cols, idx, phase = _layout_arrays(d)
    a = np.zeros((d, d), dtype=float if real else complex)
    vals = cart[idx]
    if not real:
        vals = vals * np.where(phase >= 0, np.exp(-1j * theta[phase]), 1.0)
    a[rows, cols] = vals
    return a


def build_factor_derivatives(theta, real=False):
    """Stack ``dA[s] = dA / d theta_s`` with shape ``(S, d, d)``."""
    theta, d, n = _split(theta, real)
    jcart = spherical_cartesian_jacobian(theta[:n])
    rows, cols, idx, phase = _layout_arrays(d)
    da = np.zeros((theta.size, d, d), dtype=float if real else complex)
    if real:
        da[:n, rows, cols] = jcart[:, idx]
        return da
    cart = spherical_cartesian(theta[:n])
    ph = np.where(phase >= 0, np.exp(-1j * theta[phase]), 1.0)
    da[:n, rows, cols] = jcart[:, idx] * ph
    off = phase >= 0
    da[phase[off], rows[off], cols[off]] = -1j * cart[idx[off]] * ph[off]
    return da


def build_density(theta, real=False):
    """Density matrix ``A^H A``; physical for every finite angle vector."""
    a = build_factor(theta, real=real)
    return a.conj().T @ a


def build_density_derivatives(theta, real=False):
    """``d rho / d theta_s`` stacked as ``(S, d, d)``."""
    a = build_factor(theta, real=real)
    da = build_factor_derivatives(theta, real=real)
    term = np.einsum("sji,jk->sik", da.conj(), a)
    return term + np.swapaxes(term.conj(), -1, -2)


def bloch_from_angles(theta):
    """Bloch vector (x, y, z) of the qubit state with angles ``theta``."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (3,):
        raise BadDimension("qubit angle vector must have three entries")
    t1, t2, t3 = theta
    s = np.sin(2 * t1) * np.cos(t2)
    return np.array([s * np.cos(t3), s * np.sin(t3), np.cos(2 * t1)])


def bloch_jacobian(theta):
    """``J[s, i] = d b_i / d theta_s`` for the qubit Bloch vector."""
    t1, t2, t3 = np.asarray(theta, dtype=float)
    s2, c2 = np.sin(2 * t1), np.cos(2 * t1)
    ct2, st2 = np.cos(t2), np.sin(t2)
    ct3, st3 = np.cos(t3), np.sin(t3)
    return np.array([
        [2 * c2 * ct2 * ct3, 2 * c2 * ct2 * st3, -2 * s2],
        [-s2 * st2 * ct3, -s2 * st2 * st3, 0.0],
        [-s2 * ct2 * st3, s2 * ct2 * ct3, 0.0],
    ])


def jacobian_qubit_full(theta1, theta2):
    """|sin(2 t1)^3 sin(2 t2)|: dx dy dz in terms of the three qubit angles."""
    return abs(np.sin(2 * theta1) ** 3 * np.sin(2 * theta2))


def jacobian_equatorial(theta2):
    """|sin(2 t2)|: dx dy on the equatorial disk (t1 pinned at pi/4)."""
    return abs(np.sin(2 * theta2))


def jacobian_hemisphere(theta1):
    """|sin(4 t1)|: dx dy on the upper hemisphere (t2 pinned at 0)."""
    return abs(np.sin(4 * theta1))


@lru_cache(maxsize=None)
def _volume_exponents(d, real):
    """Exponents of |sin t_k| and |cos t_k| in the state-space volume element.

    The measure induced on the trace-one states combines three pieces: the
    Cholesky-type Jacobian ``prod_k |A_kk|**e_k`` of ``A -> A^H A`` (``e_k =
    2(d-k)+1`` complex, ``d-k+1`` real), a factor ``|C_m|`` per complex
    off-diagonal entry (polar coordinates), and the hyperspherical surface
    element ``prod_k |sin t_k|**(N-1-k)`` of the ``N = d(d+1)/2`` moduli.
    Every Cartesian coordinate is a product of sines and one cosine, so the
    whole thing collapses to two exponent vectors.
    """
    n = n_sphere_angles(d)
    n_cart = n + 1
    sin_exp = np.zeros(n)
    cos_exp = np.zeros(n)

    def add_cart(idx, power):
        sin_exp[:idx] += power
        if idx < n:
            cos_exp[idx] += power

    diag, offdiag = factor_layout(d)
    for k, idx in enumerate(diag, start=1):
        add_cart(idx, (d - k + 1) if real else 2 * (d - k) + 1)
    if not real:
        for _, _, m, _ in offdiag:
            add_cart(m, 1)
    sin_exp += np.arange(n_cart - 2, n_cart - 2 - n, -1)
    sin_exp.setflags(write=False)
    cos_exp.setflags(write=False)
    return sin_exp, cos_exp


def log_volume_element(theta, real=False):
    """Log of the flat state-space measure in angle coordinates, and its gradient.

    Up to a constant factor this is the Lebesgue measure on the
    ``d**2 - 1`` (or ``d(d+1)/2 - 1`` for real states) independent entries of
    ``rho``; for ``d = 2`` it reduces to ``|sin(2 t1)^3 sin(2 t2)|``.
    Returns ``(-inf, nan-gradient)`` on the measure-zero singular set.
    """
    theta, d, n = _split(theta, real)
    sin_exp, cos_exp = _volume_exponents(d, real)
    t = theta[:n]
    s, c = np.sin(t), np.cos(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sum(sin_exp * np.log(np.abs(s))) + np.sum(cos_exp * np.log(np.abs(c)))
        grad = np.zeros(theta.size)
        grad[:n] = sin_exp * c / s - cos_exp * s / c
    if not np.isfinite(val):
        return -np.inf, np.full(theta.size, np.nan)
    return float(val), grad


def numeric_jacobian(func, theta, h=None, floor=1e-14):
    """|det| of the central-difference Jacobian of ``func`` at ``theta``.

    ``func`` must map the S angles to exactly S independent coordinates.  The
    default step per coordinate is ``1e-6 * (1 + |theta_s|)``.  Raises
    :class:`SingularMap` when the determinant is below ``floor``; two-qubit
    maps are legitimately tiny near pure states, so callers there pass a
    smaller floor.
    """
    theta = np.asarray(theta, dtype=float)
    size = theta.size
    if h is None:
        steps = 1e-6 * (1.0 + np.abs(theta))
    else:
        if np.any(np.asarray(h) <= 0):
            raise ValueError("finite-difference step must be positive")
        steps = np.broadcast_to(np.asarray(h, dtype=float), theta.shape)
    jac = np.empty((size, size))
    for s in range(size):
        e = np.zeros(size)
        e[s] = steps[s]
        col = (np.asarray(func(theta + e), dtype=float) - np.asarray(func(theta - e), dtype=float))
        if col.shape != (size,):
            raise BadDimension(f"map returned {col.shape}, expected ({size},)")
        jac[:, s] = col / (2 * steps[s])
    det = abs(np.linalg.det(jac))
    if det < floor or det == 0:
        raise SingularMap(f"Jacobian determinant {det:.3g} below {floor:g}")
    return float(det)
