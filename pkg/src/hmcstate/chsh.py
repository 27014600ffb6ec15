"""CHSH quantity for two-qubit states and for weighted samples.

``S = E(A1,B1) + E(A2,B1) + E(A1,B2) - E(A2,B2)`` with in-plane observables
``A_i = sigma_x cos phi_i + sigma_y sin phi_i`` (``B_j`` likewise with
``psi_j``).  Density matrices here are in the standard computational basis
with ``kron(A, B)`` ordering; use
:func:`hmcstate.bb84.from_reconstruction_basis` for reconstruction-basis states.
"""
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "ChshSetting",
    "ChshValue",
    "FIXED_SETTING",
    "correlation",
    "in_plane_correlations",
    "correlations_from_probs",
    "chsh_fixed",
    "chsh_from_probs",
    "chsh_optimized",
    "chsh_optimized_from_probs",
    "maximize_chsh",
    "ChshSummary",
    "summarize_values",
    "chsh_sample_summary",
]

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]])
PAULI_Z = np.diag([1.0, -1.0]).astype(complex)

TSIRELSON = 2 * np.sqrt(2)
# histogram range padded so that values at the bound survive round-off
_EDGE = TSIRELSON + 1e-9


@dataclass(frozen=True)
class ChshSetting:
    phi1: float
    phi2: float
    psi1: float
    psi2: float

    def __post_init__(self):
        if not np.all(np.isfinite([self.phi1, self.phi2, self.psi1, self.psi2])):
            raise ValueError("measurement angles must be finite")

    def as_array(self):
        return np.array([self.phi1, self.phi2, self.psi1, self.psi2])


@dataclass(frozen=True)
class ChshValue:
    S: float

    @property
    def squared_quarter(self):
        """``S**2 / 4``; above one indicates entanglement."""
        return self.S * self.S / 4

    def __float__(self):
        return self.S


FIXED_SETTING = ChshSetting(0.0, np.pi / 2, 5 * np.pi / 4, 3 * np.pi / 4)


def _in_plane(angle):
    return np.cos(angle) * PAULI_X + np.sin(angle) * PAULI_Y


def correlation(rho, a, b):
    """``tr(rho A (x) B)``, real part (the imaginary part is round-off for hermitian inputs)."""
    return float(np.trace(np.asarray(rho) @ np.kron(a, b)).real)


def in_plane_correlations(rho):
    """2x2 matrix ``T[i, j] = <sigma_i (x) sigma_j>`` for ``i, j`` in ``{x, y}``."""
    paulis = (PAULI_X, PAULI_Y)
    return np.array([[correlation(rho, a, b) for b in paulis] for a in paulis])


def _s_from_correlations(t, angles):
    """CHSH combination for correlation matrices ``t`` of shape (..., 2, 2)."""
    phi1, phi2, psi1, psi2 = angles
    u1 = np.array([np.cos(phi1), np.sin(phi1)])
    u2 = np.array([np.cos(phi2), np.sin(phi2)])
    v1 = np.array([np.cos(psi1), np.sin(psi1)])
    v2 = np.array([np.cos(psi2), np.sin(psi2)])

    def e(u, v):
        return np.einsum("i,...ij,j->...", u, t, v)

    return e(u1, v1) + e(u2, v1) + e(u1, v2) - e(u2, v2)


def chsh_fixed(rho, setting=FIXED_SETTING):
    a1, a2 = _in_plane(setting.phi1), _in_plane(setting.phi2)
    b1, b2 = _in_plane(setting.psi1), _in_plane(setting.psi2)
    s = (correlation(rho, a1, b1) + correlation(rho, a2, b1)
         + correlation(rho, a1, b2) - correlation(rho, a2, b2))
    return ChshValue(float(s))


def correlations_from_probs(p):
    """In-plane correlations from double-crosshair probabilities.

    ``p`` has shape ``(..., 16)`` or ``(..., 4, 4)`` with outcome order
    +x, +y, -x, -y on each side.  Since ``E_+x - E_-x = sigma_x / 2``,
    ``<sigma_x sigma_x> = 4 (p11 - p13 - p31 + p33)`` and so on.
    """
    p = np.asarray(p, dtype=float)
    p = p.reshape(p.shape[:-1] + (4, 4)) if p.shape[-1] == 16 else p
    sign = np.array([[1, 0, -1, 0], [0, 1, 0, -1]], dtype=float)
    return 4 * np.einsum("ia,...ab,jb->...ij", sign, p, sign)


def chsh_from_probs(p):
    """CHSH at the fixed setting straight from the joint probabilities.

    ``S = 8 sqrt2 (p12 + p13 + p21 + p23 + p31 + p32 - 2 p22) - 2 sqrt2``
    (1-based outcome labels).  Accepts a single 16-vector / 4x4 array or a
    stack of them; returns a float or an array.
    """
    p = np.asarray(p, dtype=float)
    p = p.reshape(p.shape[:-1] + (4, 4)) if p.shape[-1] == 16 else p
    combo = (p[..., 0, 1] + p[..., 0, 2] + p[..., 1, 0] + p[..., 1, 2]
             + p[..., 2, 0] + p[..., 2, 1] - 2 * p[..., 1, 1])
    s = 8 * np.sqrt(2) * combo - TSIRELSON
    return ChshValue(float(s)) if np.ndim(s) == 0 else s


def chsh_optimized(rho):
    """In-plane optimum ``2 sqrt(sum_ij <sigma_i sigma_j>^2)`` over ``i, j`` in {x, y}."""
    t = in_plane_correlations(rho)
    return ChshValue(float(2 * np.sqrt(np.sum(t * t))))


def chsh_optimized_from_probs(p):
    t = correlations_from_probs(p)
    return 2 * np.sqrt(np.sum(t * t, axis=(-2, -1)))


def _golden(f, lo, hi, iters=60):
    g = (np.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return (a + b) / 2


def maximize_chsh(rho, starts=8, sweeps=40, seed=0, tol=1e-12):
    """Direct numerical maximum of ``|S|`` over the four in-plane angles.

    Coordinate-wise golden-section sweeps from several random starts.  Each
    one-dimensional slice of ``S`` is a sinusoid, so the sweep bracket only
    needs to cover one period.  Returns ``(best |S|, best angles)``.
    """
    t = in_plane_correlations(rho)
    rng = np.random.default_rng(seed)
    best, best_x = -np.inf, None
    for sign in (1.0, -1.0):
        for _ in range(starts // 2 or 1):
            x = rng.uniform(0, 2 * np.pi, 4)
            val = sign * _s_from_correlations(t, x)
            for _ in range(sweeps):
                prev = val
                for k in range(4):
                    def f(a, k=k):
                        y = x.copy()
                        y[k] = a
                        return sign * _s_from_correlations(t, y)
                    x[k] = _golden(f, x[k] - np.pi, x[k] + np.pi)
                val = sign * _s_from_correlations(t, x)
                if val - prev < tol:
                    break
            if val > best:
                best, best_x = val, x.copy()
    return float(best), best_x


@dataclass(frozen=True)
class ChshSummary:
    bin_edges: np.ndarray
    density: np.ndarray
    mean: float
    median: float
    quantiles: dict
    frac_abs_gt_2: float
    frac_sq_gt_1: float
    values: np.ndarray

    def histogram_rows(self):
        return list(zip(self.bin_edges[:-1], self.bin_edges[1:], self.density))


def _weighted_quantile(x, w, qs):
    order = np.argsort(x, kind="stable")
    xs, ws = x[order], w[order]
    cw = np.cumsum(ws)
    cw = (cw - 0.5 * ws) / cw[-1]
    return np.interp(qs, cw, xs)


def summarize_values(values, weights=None, bins=60, value_range=(-_EDGE, _EDGE)):
    """Weighted histogram and summary statistics of CHSH values."""
    s = np.asarray(values, dtype=float)
    if s.size == 0:
        raise ValueError("no values to summarize")
    w = np.ones_like(s) if weights is None else np.asarray(weights, dtype=float)
    w = w / w.sum()
    density, edges = np.histogram(s, bins=bins, range=value_range, weights=w, density=True)
    qs = np.array([0.05, 0.25, 0.5, 0.75, 0.95])
    quant = dict(zip(qs.tolist(), _weighted_quantile(s, w, qs).tolist()))
    return ChshSummary(
        bin_edges=edges,
        density=density,
        mean=float(np.sum(w * s)),
        median=quant[0.5],
        quantiles=quant,
        frac_abs_gt_2=float(np.sum(w[np.abs(s) > 2])),
        frac_sq_gt_1=float(np.sum(w[s * s / 4 > 1])),
        values=s,
    )


def chsh_sample_summary(samples, setting=FIXED_SETTING, optimized=False, bins=60):
    """Weighted CHSH distribution of a double-crosshair sample.

    Uses the joint probabilities stored with the sample, so ``q`` plays no
    role.  ``optimized=True`` summarizes the in-plane optimum instead of the
    given setting.
    """
    if samples.probs is None or samples.probs.shape[-1] != 16:
        raise ValueError("sample set carries no double-crosshair probabilities")
    t = correlations_from_probs(samples.probs)
    if optimized:
        s = 2 * np.sqrt(np.sum(t * t, axis=(-2, -1)))
        rng = (0.0, _EDGE)
    else:
        s = _s_from_correlations(t, setting.as_array())
        rng = (-_EDGE, _EDGE)
    return summarize_values(s, samples.weights, bins=bins, value_range=rng)
