"""Leapfrog integration of the fictitious Hamiltonian dynamics.

Positions are angles, momenta are unit-mass conjugates, and the force is the
gradient of the target log-density.  One leapfrog jump of duration ``tau`` is
drift(tau/2), kick(tau), drift(tau/2); a trajectory of ``L`` jumps merges the
adjacent half drifts, so it costs exactly ``L`` force evaluations.
"""
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteForce

__all__ = ["TrajectoryConfig", "Rejected", "leapfrog_step", "trajectory", "jitter"]


@dataclass(frozen=True)
class TrajectoryConfig:
    """Base step size and step count, with fractional uniform jitter."""

    tau: float = 0.1
    steps: int = 20
    jitter_tau: float = 0.1
    jitter_L: float = 0.1

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.steps < 1:
            raise ValueError("need at least one leapfrog step")
        for j in (self.jitter_tau, self.jitter_L):
            if not 0 <= j <= 0.5:
                raise ValueError("jitter half-widths must lie in [0, 0.5]")


@dataclass(frozen=True)
class Rejected:
    """A trajectory that hit a non-finite force; carries the starting point."""

    theta: np.ndarray
    momentum: np.ndarray


def _checked(force, theta):
    u = np.asarray(force(theta), dtype=float)
    if not np.all(np.isfinite(u)):
        raise NonFiniteForce(f"force is not finite at {theta}")
    return u


def leapfrog_step(theta, momentum, tau, force):
    """Advance ``(theta, momentum)`` by one jump of duration ``tau``.

    Uses the force once, at the half-drifted position
    ``theta + tau/2 * momentum``.
    """
    theta = np.asarray(theta, dtype=float)
    momentum = np.asarray(momentum, dtype=float)
    u = _checked(force, theta + 0.5 * tau * momentum)
    return theta + tau * momentum + 0.5 * tau * tau * u, momentum + tau * u


def trajectory(theta0, momentum0, tau, steps, force):
    """Integrate ``steps`` jumps and negate the final momentum.

    Returns ``(theta*, momentum*)`` or a :class:`Rejected` marker when the force
    is not finite somewhere along the way.  Running the map again from the
    output returns to the start (up to round-off).
    """
    theta = np.asarray(theta0, dtype=float) + 0.5 * tau * np.asarray(momentum0, dtype=float)
    mom = np.array(momentum0, dtype=float)
    try:
        for j in range(1, 2 * steps):
            if j % 2:
                mom = mom + tau * _checked(force, theta)
            else:
                theta = theta + tau * mom
    except NonFiniteForce:
        return Rejected(np.asarray(theta0, dtype=float), np.asarray(momentum0, dtype=float))
    return theta + 0.5 * tau * mom, -mom


def jitter(cfg, rng):
    """Draw ``(tau, L)`` for one trajectory.

    ``tau`` is uniform on ``tau(1 +- jitter_tau)``; ``L`` is a uniform integer in
    ``[ceil(L(1-jitter_L)), floor(L(1+jitter_L))]``, never below one.
    """
    tau = cfg.tau
    if cfg.jitter_tau > 0:
        tau = rng.uniform(cfg.tau * (1 - cfg.jitter_tau), cfg.tau * (1 + cfg.jitter_tau))
    lo = max(1, int(np.ceil(cfg.steps * (1 - cfg.jitter_L) - 1e-12)))
    hi = max(lo, int(np.floor(cfg.steps * (1 + cfg.jitter_L) + 1e-12)))
    steps = lo if hi == lo else int(rng.integers(lo, hi + 1))
    return float(tau), steps
