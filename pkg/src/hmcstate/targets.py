"""Target densities in angle coordinates.

A :class:`TargetDensity` bundles the log-density ``log w(theta)`` (defined up
to an additive constant) and its gradient, the force ``u(theta)``.  Targets
are built from three ingredients:

* a probability map, the Born rule for a qubit POM (tetrahedron, Pauli, trine,
  crosshair), written as ``p = offset + directions @ b`` in the Bloch vector
  ``b``;
* a reconstruction space, i.e. which angles are free: ``full`` (all three),
  ``equatorial`` (``t1 = pi/4``, free ``t2, t3``) or ``hemisphere``
  (``t2 = 0``, free ``t1, t3``), each with its primitive-prior measure;
* counts ``n_k`` entering the multinomial likelihood ``prod p_k**n_k``.

The Jeffreys prior is reached with offsets of -1/2 per outcome and conjugate
priors with mock counts; see :func:`prior_counts`.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import parameterization as par
from .errors import BadDimension

__all__ = [
    "TargetDensity",
    "QubitPom",
    "POMS",
    "POM_IDS",
    "tetrahedron_probs",
    "pauli_probs",
    "trine_probs",
    "crosshair_probs",
    "QubitSpace",
    "SPACES",
    "prior_counts",
    "finite_difference_gradient",
    "primitive_qubit_target",
    "trine_posterior_target",
    "qubit_posterior_target",
    "generic_posterior_target",
    "validate_constraints",
]

SQRT3 = np.sqrt(3.0)
POM_IDS = ("tetrahedron", "pauli", "trine", "crosshair", "bb84-double-crosshair")


@dataclass(frozen=True)
class TargetDensity:
    """Log-density and force over an S-dimensional angle space.

    ``probs`` maps an angle vector to the outcome probabilities recorded with
    each sample; ``aux`` (optional) returns auxiliary per-point values such as
    the unmeasured two-qubit correlation.
    """

    dim: int
    log_w: Callable[[np.ndarray], float]
    force: Callable[[np.ndarray], np.ndarray]
    label: str
    probs: Optional[Callable[[np.ndarray], np.ndarray]] = None
    aux: Optional[Callable[[np.ndarray], float]] = None
    pom_id: Optional[str] = None
    initial: Optional[tuple] = None
    log_w_and_force: Optional[Callable] = field(default=None, repr=False)


@dataclass(frozen=True)
class QubitPom:
    name: str
    offset: np.ndarray
    directions: np.ndarray

    @property
    def n_outcomes(self):
        return self.offset.size

    def probs(self, b):
        return self.offset + self.directions @ np.asarray(b, dtype=float)

    def effects(self):
        """Effects as 2x2 matrices, ``Pi_k = offset_k 1 + d_k . sigma``."""
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        sy = np.array([[0, -1j], [1j, 0]])
        sz = np.diag([1.0, -1.0]).astype(complex)
        return np.array([
            o * np.eye(2) + dx * sx + dy * sy + dz * sz
            for o, (dx, dy, dz) in zip(self.offset, self.directions)
        ])


def _trine_dirs():
    # outcome k pairs with t3 - delta_k in the equatorial angles
    deltas = np.array([0.0, 2 * np.pi / 3, -2 * np.pi / 3])
    return np.column_stack([np.cos(deltas), np.sin(deltas), np.zeros(3)]) / 3


POMS = {
    "tetrahedron": QubitPom(
        "tetrahedron",
        np.full(4, 0.25),
        np.array([[1, -1, -1], [-1, 1, -1], [-1, -1, 1], [1, 1, 1]]) / (4 * SQRT3),
    ),
    "pauli": QubitPom(
        "pauli",
        np.full(6, 1 / 6),
        np.vstack([np.eye(3), -np.eye(3)]) / 6,
    ),
    "trine": QubitPom("trine", np.full(3, 1 / 3), _trine_dirs()),
    "crosshair": QubitPom(
        "crosshair",
        np.full(4, 0.25),
        np.array([[1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]]) / 4,
    ),
}


def tetrahedron_probs(b):
    return POMS["tetrahedron"].probs(b)


def pauli_probs(b):
    return POMS["pauli"].probs(b)


def trine_probs(x, y):
    return POMS["trine"].probs((x, y, 0.0))


def crosshair_probs(x, y):
    return POMS["crosshair"].probs((x, y, 0.0))


@dataclass(frozen=True)
class QubitSpace:
    """A set of free qubit angles together with its primitive-prior measure."""

    name: str
    free: tuple
    fixed: dict

    @property
    def dim(self):
        return len(self.free)

    def full_angles(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise BadDimension(f"space {self.name!r} expects {self.dim} angles")
        full = np.empty(3)
        for idx, val in self.fixed.items():
            full[idx] = val
        full[list(self.free)] = theta
        return full

    def bloch(self, theta):
        return par.bloch_from_angles(self.full_angles(theta))

    def bloch_jacobian(self, theta):
        return par.bloch_jacobian(self.full_angles(theta))[list(self.free)]

    def log_measure(self, theta):
        """Log primitive-prior measure and its gradient (``-inf`` where it vanishes)."""
        t = self.full_angles(theta)
        with np.errstate(divide="ignore"):
            if self.name == "full":
                s1, s2 = np.sin(2 * t[0]), np.sin(2 * t[1])
                val = 3 * np.log(abs(s1)) + np.log(abs(s2))
                grad = np.array([6 * np.cos(2 * t[0]) / s1, 2 * np.cos(2 * t[1]) / s2, 0.0])
            elif self.name == "equatorial":
                s2 = np.sin(2 * t[1])
                val = np.log(abs(s2))
                grad = np.array([2 * np.cos(2 * t[1]) / s2, 0.0])
            else:
                s4 = np.sin(4 * t[0])
                val = np.log(abs(s4))
                grad = np.array([4 * np.cos(4 * t[0]) / s4, 0.0])
        return float(val), grad


SPACES = {
    "full": QubitSpace("full", (0, 1, 2), {}),
    "equatorial": QubitSpace("equatorial", (1, 2), {0: np.pi / 4}),
    "hemisphere": QubitSpace("hemisphere", (0, 2), {1: 0.0}),
}


def prior_counts(counts, prior="primitive", mock=None):
    """Effective exponents for the multinomial likelihood under a prior.

    ``primitive`` leaves the counts alone, ``jeffreys`` subtracts 1/2 from each
    and ``conjugate`` adds the mock counts ``mock``.
    """
    n = np.asarray(counts, dtype=float)
    if prior == "primitive":
        out = n.copy()
    elif prior == "jeffreys":
        out = n - 0.5
    elif prior == "conjugate":
        if mock is None:
            raise ValueError("conjugate prior needs mock counts")
        mock = np.asarray(mock, dtype=float)
        if mock.shape != n.shape:
            raise ValueError("mock counts must match the number of outcomes")
        out = n + mock
    else:
        raise ValueError(f"unknown prior {prior!r}")
    if np.any(out < -0.5) or not np.all(np.isfinite(out)):
        raise ValueError("effective counts must be finite and >= -1/2")
    return out


def finite_difference_gradient(func, theta, h=None):
    """Central-difference gradient of a scalar function."""
    theta = np.asarray(theta, dtype=float)
    steps = 1e-6 * (1.0 + np.abs(theta)) if h is None else np.broadcast_to(h, theta.shape)
    grad = np.empty(theta.size)
    for s in range(theta.size):
        e = np.zeros(theta.size)
        e[s] = steps[s]
        grad[s] = (func(theta + e) - func(theta - e)) / (2 * steps[s])
    return grad


def _from_pair(size, pair, label, probs=None, aux=None, pom_id=None, initial=None):
    def log_w(theta):
        return pair(theta)[0]

    def force(theta):
        return pair(theta)[1]

    return TargetDensity(size, log_w, force, label, probs=probs, aux=aux,
                         pom_id=pom_id, initial=initial, log_w_and_force=pair)


def primitive_qubit_target(pom="tetrahedron"):
    """Uniform Bloch-ball prior: ``w = |sin(2 t1)^3 sin(2 t2)|``.

    The same density serves the tetrahedron and Pauli POMs; ``pom`` only picks
    the probability map attached to the samples.
    """
    space = SPACES["full"]
    pom_obj = POMS[pom]

    def pair(theta):
        t1, t2 = theta[0], theta[1]
        s1, s2 = np.sin(2 * t1), np.sin(2 * t2)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.log(abs(s1 ** 3 * s2))
            f = np.array([6 * np.cos(2 * t1) / s1, 2 * np.cos(2 * t2) / s2, 0.0])
        return float(val), f

    return _from_pair(3, pair, f"primitive-prior/{pom}",
                      probs=lambda th: pom_obj.probs(space.bloch(th)), pom_id=pom)


def trine_posterior_target(counts):
    """Trine posterior on the equatorial disk, angles ``(t2, t3)``.

    ``w = |sin 2t2| prod_k (1 + cos t2 cos(t3 - delta_k))**n_k`` with
    ``delta = (0, 2pi/3, -2pi/3)`` subtracted from ``t3``; counts may carry
    -1/2 offsets (Jeffreys) or mock counts.
    """
    n = np.asarray(counts, dtype=float)
    if n.shape != (3,):
        raise BadDimension("trine counts need three entries")
    shifts = np.array([0.0, -2 * np.pi / 3, 2 * np.pi / 3])
    space = SPACES["equatorial"]
    pom = POMS["trine"]

    def pair(theta):
        t2, t3 = theta
        t3k = t3 + shifts
        ct2, st2 = np.cos(t2), np.sin(t2)
        fac = 1 + ct2 * np.cos(t3k)
        s = np.sin(2 * t2)
        with np.errstate(divide="ignore", invalid="ignore"):
            active = n != 0
            if np.any(fac[active] <= 0) or s == 0:
                return -np.inf, np.full(2, np.nan)
            val = np.log(abs(s)) + np.sum(n[active] * np.log(fac[active]))
            u2 = 2 * np.cos(2 * t2) / s - np.sum(n * st2 * np.cos(t3k) / fac)
            u3 = -np.sum(n * ct2 * np.sin(t3k) / fac)
        return float(val), np.array([u2, u3])

    return _from_pair(2, pair, f"trine-posterior/{tuple(n.tolist())}",
                      probs=lambda th: pom.probs(space.bloch(th)), pom_id="trine")


def qubit_posterior_target(pom, space="full", counts=None, prior="primitive", mock=None):
    """Posterior for any qubit POM on a chosen reconstruction space.

    The force is analytic: the measure gradient plus
    ``sum_k n_k (d_k . db/dtheta) / p_k``.
    """
    pom_obj = POMS[pom] if isinstance(pom, str) else pom
    space_obj = SPACES[space] if isinstance(space, str) else space
    if pom_obj.name in ("trine", "crosshair") and space_obj.name == "full":
        raise ValueError(f"{pom_obj.name} is not informationally complete; pick a reduced space")
    raw = np.zeros(pom_obj.n_outcomes) if counts is None else counts
    n = prior_counts(raw, prior, mock)
    if n.shape != (pom_obj.n_outcomes,):
        raise BadDimension(f"{pom_obj.name} needs {pom_obj.n_outcomes} counts")
    active = n != 0

    def pair(theta):
        if not active.any():
            return space_obj.log_measure(theta)
        lm, gm = space_obj.log_measure(theta)
        b = space_obj.bloch(theta)
        p = pom_obj.probs(b)
        if not np.isfinite(lm) or np.any(p[active] <= 0):
            return -np.inf, np.full(space_obj.dim, np.nan)
        val = lm + np.sum(n[active] * np.log(p[active]))
        dp = space_obj.bloch_jacobian(theta) @ pom_obj.directions.T
        grad = gm + dp[:, active] @ (n[active] / p[active])
        return float(val), grad

    return _from_pair(space_obj.dim, pair,
                      f"{prior}-posterior/{pom_obj.name}/{space_obj.name}",
                      probs=lambda th: pom_obj.probs(space_obj.bloch(th)),
                      pom_id=pom_obj.name,
                      # pi/4 sits on a zero of |sin 4 t1|
                      initial=(np.pi / 8, np.pi / 4) if space_obj.name == "hemisphere" else None)


def generic_posterior_target(pom_map, measure, counts, gradient=None, label="generic",
                             dim=None, pom_id=None):
    """Compose ``log measure(theta) + sum_k n_k log p_k(theta)``.

    ``measure`` returns the (non-logarithmic) Jacobian factor, e.g. one of the
    ``jacobian_*`` functions or a :func:`~hmcstate.parameterization.numeric_jacobian`
    wrapper.  Without an analytic ``gradient`` the force comes from central
    finite differences of the log-density.
    """
    n = np.asarray(counts, dtype=float)
    active = n != 0

    def log_w(theta):
        with np.errstate(divide="ignore"):
            jac = measure(theta)
            if not jac > 0:
                return -np.inf
            p = np.asarray(pom_map(theta), dtype=float)
            if np.any(p[active] <= 0):
                return -np.inf
            return float(np.log(jac) + np.sum(n[active] * np.log(p[active])))

    if gradient is None:
        def force(theta):
            return finite_difference_gradient(log_w, theta)
    else:
        force = gradient
    if dim is None:
        raise ValueError("dim is required")
    return TargetDensity(dim, log_w, force, label, probs=pom_map, pom_id=pom_id)


def validate_constraints(p, pom_id, tol=1e-10):
    """Check the basic and quantum constraints a POM imposes on ``p``."""
    p = np.asarray(p, dtype=float)
    if pom_id == "bb84-double-crosshair":
        from .bb84 import physicality_check, probabilities_valid
        return probabilities_valid(p, tol) and physicality_check(p)
    if np.any(p < -tol):
        return False
    if pom_id == "tetrahedron":
        return p.size == 4 and abs(p.sum() - 1) <= tol and np.sum(p ** 2) <= 1 / 3 + tol
    if pom_id == "pauli":
        if p.size != 6:
            return False
        pairs = p[:3] + p[3:]
        return bool(np.all(np.abs(pairs - 1 / 3) <= tol)
                    and np.sum((p[:3] - p[3:]) ** 2) <= 1 / 9 + tol)
    if pom_id == "trine":
        return p.size == 3 and abs(p.sum() - 1) <= tol and np.sum(p ** 2) <= 0.5 + tol
    if pom_id == "crosshair":
        if p.size != 4:
            return False
        pairs = p[:2] + p[2:]
        return bool(np.all(np.abs(pairs - 0.5) <= tol)
                    and (p[0] - p[2]) ** 2 + (p[1] - p[3]) ** 2 <= 0.25 + tol)
    raise ValueError(f"unknown POM {pom_id!r}")
