"""Hamiltonian Monte Carlo chains and a random-walk Metropolis baseline.

One HMC transition, in the order random numbers are consumed:

1. draw a standard-normal momentum for every angle;
2. draw the jittered step size and step count;
3. integrate the trajectory and negate the final momentum;
4. compute ``a = min(exp(H_start - H_end), 1)``;
5. draw ``b ~ U(0, 1)`` and accept iff ``a > b``.

Random streams: chain ``i`` of master seed ``s`` uses
``Generator(PCG64(SeedSequence(s, spawn_key=(i,))))``, the same streams that
``SeedSequence(s).spawn(k)`` hands out.  Output is bit-for-bit reproducible
from ``(seed, config, target)``.
"""
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import BadInitialPoint
from .leapfrog import Rejected, TrajectoryConfig, jitter, trajectory

__all__ = [
    "RNG_ALGORITHM",
    "make_rng",
    "HmcConfig",
    "SampleSet",
    "StepRecord",
    "hamiltonian",
    "hmc_step",
    "mh_acceptance",
    "momentum_log_ratio",
    "run_chain",
    "run_chains",
    "rw_metropolis_chain",
    "tune_rw_step",
]

RNG_ALGORITHM = "numpy.random.PCG64/SeedSequence(seed, spawn_key=(chain,))"


def make_rng(seed, chain=0):
    """Independent generator for one chain of a master seed."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(chain),))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class HmcConfig:
    chain_length: int = 51000
    burn_in: int = 1000
    thinning: int = 1
    seed: int = 0
    initial: Optional[tuple] = None
    trajectory: TrajectoryConfig = field(default_factory=TrajectoryConfig)

    def __post_init__(self):
        if self.chain_length <= self.burn_in:
            raise ValueError("chain_length must exceed burn_in")
        if self.burn_in < 0 or self.thinning < 1:
            raise ValueError("burn_in must be >= 0 and thinning >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @classmethod
    def for_samples(cls, n, burn_in=1000, thinning=1, **kw):
        """Config that keeps exactly ``n`` points after burn-in and thinning."""
        return cls(chain_length=burn_in + n * thinning, burn_in=burn_in, thinning=thinning, **kw)


@dataclass(frozen=True)
class SampleSet:
    """Kept chain points with derived probabilities and optional weights."""

    points: np.ndarray
    probs: Optional[np.ndarray]
    weights: np.ndarray
    metadata: dict
    aux: Optional[np.ndarray] = None

    def __post_init__(self):
        for arr in (self.points, self.probs, self.weights, self.aux):
            if arr is not None:
                arr.setflags(write=False)

    def __len__(self):
        return self.points.shape[0]

    @property
    def acceptance_rate(self):
        return self.metadata.get("acceptance_rate")

    def with_weights(self, weights, **meta):
        w = np.array(weights, dtype=float)
        return replace(self, weights=w, metadata={**self.metadata, **meta})


@dataclass(frozen=True)
class StepRecord:
    """Everything needed to audit one proposal."""

    theta: np.ndarray
    accepted: bool
    acceptance: float
    momentum: np.ndarray
    momentum_star: Optional[np.ndarray]
    log_w_start: float
    log_w_end: float
    tau: float
    steps: int


def hamiltonian(theta, momentum, target, log_w=None):
    """``H = |momentum|^2 / 2 - log w(theta)``; ``+inf`` off the support."""
    lw = target.log_w(theta) if log_w is None else log_w
    if not np.isfinite(lw):
        return np.inf
    return 0.5 * float(np.dot(momentum, momentum)) - lw


def momentum_log_ratio(momentum, momentum_star):
    """Log proposal ratio ``log J(theta|theta*) / J(theta*|theta)`` of an HMC move."""
    return 0.5 * (float(np.dot(momentum, momentum)) - float(np.dot(momentum_star, momentum_star)))


def mh_acceptance(log_w_old, log_w_new, log_proposal_ratio=0.0):
    """Metropolis-Hastings acceptance ``min(w' J(x|x') / (w J(x'|x)), 1)``."""
    if not np.isfinite(log_w_new):
        return 0.0
    return min(np.exp(log_w_new - log_w_old + log_proposal_ratio), 1.0)


def hmc_step(theta, target, cfg, rng, log_w_current=None):
    """One HMC transition from ``theta``; never raises on singular proposals."""
    theta = np.asarray(theta, dtype=float)
    lw0 = target.log_w(theta) if log_w_current is None else log_w_current
    momentum = rng.standard_normal(theta.size)
    tau, steps = jitter(cfg.trajectory if isinstance(cfg, HmcConfig) else cfg, rng)
    out = trajectory(theta, momentum, tau, steps, target.force)
    if isinstance(out, Rejected):
        theta_star, mom_star, lw1, a = None, None, -np.inf, 0.0
    else:
        theta_star, mom_star = out
        lw1 = target.log_w(theta_star)
        h0 = 0.5 * float(np.dot(momentum, momentum)) - lw0
        h1 = hamiltonian(theta_star, mom_star, target, log_w=lw1)
        a = 0.0 if not np.isfinite(h1) else min(np.exp(h0 - h1), 1.0)
    b = rng.random()
    accepted = a > b
    return StepRecord(
        theta=theta_star if accepted else theta,
        accepted=bool(accepted),
        acceptance=float(a),
        momentum=momentum,
        momentum_star=mom_star,
        log_w_start=float(lw0),
        log_w_end=float(lw1),
        tau=tau,
        steps=steps,
    )


def _initial(target, cfg):
    if cfg.initial is not None:
        theta = np.asarray(cfg.initial, dtype=float)
    elif getattr(target, "initial", None) is not None:
        theta = np.asarray(target.initial, dtype=float)
    else:
        theta = np.full(target.dim, np.pi / 4)
    if theta.shape != (target.dim,):
        raise BadInitialPoint(f"initial point needs {target.dim} angles")
    lw = target.log_w(theta)
    if not np.isfinite(lw):
        raise BadInitialPoint(f"log-density is -inf at the initial point {theta}")
    return theta, lw


def _collect(target, kept, n_acc, n_prop, cfg, sampler, extra):
    points = np.array(kept)
    probs = np.array([target.probs(t) for t in points]) if target.probs is not None else None
    aux = np.array([target.aux(t) for t in points]) if target.aux is not None else None
    meta = {
        "sampler": sampler,
        "label": target.label,
        "seed": cfg.seed,
        "rng": RNG_ALGORITHM,
        "chain_length": cfg.chain_length,
        "burn_in": cfg.burn_in,
        "thinning": cfg.thinning,
        "acceptance_rate": n_acc / n_prop if n_prop else 0.0,
        **extra,
    }
    return SampleSet(points, probs, np.ones(len(points)), meta, aux=aux)


def run_chain(target, cfg, chain=0, records=None):
    """Run HMC for ``cfg.chain_length`` transitions and keep the thinned tail.

    If ``records`` is a list, every :class:`StepRecord` is appended to it.
    """
    rng = make_rng(cfg.seed, chain)
    theta, lw = _initial(target, cfg)
    kept, n_acc, n_prop = [], 0, 0
    for j in range(cfg.chain_length):
        rec = hmc_step(theta, target, cfg, rng, log_w_current=lw)
        if records is not None:
            records.append(rec)
        if rec.accepted:
            theta, lw = rec.theta, rec.log_w_end
        if j >= cfg.burn_in:
            n_prop += 1
            n_acc += rec.accepted
            if (j - cfg.burn_in) % cfg.thinning == 0:
                kept.append(theta)
    tcfg = cfg.trajectory
    extra = {"chain": chain, "tau": tcfg.tau, "steps": tcfg.steps,
             "jitter_tau": tcfg.jitter_tau, "jitter_L": tcfg.jitter_L}
    return _collect(target, kept, n_acc, n_prop, cfg, "hmc", extra)


def run_chains(target, cfg, n_chains, sampler=run_chain, **kw):
    """Independent chains, one stream each, run one after another."""
    return [sampler(target, cfg, chain=i, **kw) for i in range(n_chains)]


def rw_metropolis_chain(target, step_scale, cfg, chain=0):
    """Random-walk Metropolis with isotropic Gaussian proposals."""
    rng = make_rng(cfg.seed, chain)
    theta, lw = _initial(target, cfg)
    kept, n_acc, n_prop = [], 0, 0
    for j in range(cfg.chain_length):
        prop = theta + step_scale * rng.standard_normal(theta.size)
        lw_new = target.log_w(prop)
        a = mh_acceptance(lw, lw_new)
        accepted = a > rng.random()
        if accepted:
            theta, lw = prop, lw_new
        if j >= cfg.burn_in:
            n_prop += 1
            n_acc += accepted
            if (j - cfg.burn_in) % cfg.thinning == 0:
                kept.append(theta)
    return _collect(target, kept, n_acc, n_prop, cfg, "rw-metropolis",
                    {"chain": chain, "step_scale": step_scale})


def tune_rw_step(target, goal=0.6, seed=0, pilot=3000, rounds=14, lo=1e-3, hi=10.0):
    """Bisect the log step scale until a pilot run accepts at about ``goal``."""
    for r in range(rounds):
        mid = np.sqrt(lo * hi)
        cfg = HmcConfig(chain_length=pilot + 200, burn_in=200, seed=seed + r)
        rate = rw_metropolis_chain(target, mid, cfg).acceptance_rate
        if rate > goal:
            lo = mid
        else:
            hi = mid
    return float(np.sqrt(lo * hi))
