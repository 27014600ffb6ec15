"""Command-line front end.

    python3 -m hmcstate sample --pom tetrahedron --n 50000 --seed 7 --out s.csv
    python3 -m hmcstate simulate-data --state singlet --pom bb84-double-crosshair --shots 64 --out c.csv
    python3 -m hmcstate analyze --input s.csv --analysis histogram --column z --out h.csv
    python3 -m hmcstate check-physical --input p.txt

Data go to files only; messages go to stderr.  Exit codes: 0 success,
1 ``check-physical`` found a non-physical input, 2 configuration or malformed
input, 3 bad initial point, 4 I/O failure.

Chains: ``--chains k`` runs chains ``0..k-1`` one after another; chain ``i``
uses the stream ``SeedSequence(seed, spawn_key=(i,))``.
"""
import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from . import bb84, chsh, targets
from .diagnostics import diagnostics
from .errors import BadInitialPoint, HmcStateError, MalformedFile
from .hmc import RNG_ALGORITHM, HmcConfig, make_rng, run_chain
from .io import (read_counts, read_manifest, read_probabilities, read_samples,
                 write_counts, write_histogram, write_manifest, write_samples)
from .leapfrog import TrajectoryConfig

EXIT_OK, EXIT_NOT_PHYSICAL, EXIT_CONFIG, EXIT_INITIAL, EXIT_IO = 0, 1, 2, 3, 4
BB84 = "bb84-double-crosshair"
DEFAULT_SPACE = {"tetrahedron": "full", "pauli": "full", "trine": "equatorial",
                 "crosshair": "equatorial"}
# keys of the sample subcommand that a manifest records and replays
SAMPLE_KEYS = ("pom", "space", "prior", "counts", "mock", "n", "burn_in", "thinning", "seed",
               "tau", "steps", "jitter_tau", "jitter_steps", "chains", "initial", "format")


class ConfigError(HmcStateError):
    pass


def _floats(text):
    if text is None:
        return None
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _n_outcomes(pom):
    return 16 if pom == BB84 else targets.POMS[pom].n_outcomes


def build_target(cfg):
    pom = cfg["pom"]
    counts = cfg["counts"]
    k = _n_outcomes(pom)
    if counts is not None and len(counts) != k:
        raise ConfigError(f"{pom} has {k} outcomes but {len(counts)} counts were given")
    mock = cfg["mock"]
    if cfg["prior"] == "conjugate" and mock is None:
        raise ConfigError("--prior conjugate needs --mock")
    try:
        if pom == BB84:
            return bb84.bb84_target(counts, cfg["prior"], mock)
        return targets.qubit_posterior_target(pom, cfg["space"], counts, cfg["prior"], mock)
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from None


def _resolve_sample_config(args):
    cfg = {}
    if args.from_manifest:
        cfg.update(read_manifest(args.from_manifest)["config"])
    for key in SAMPLE_KEYS:
        val = getattr(args, key)
        if val is not None:
            cfg[key] = val
    defaults = {"pom": "tetrahedron", "prior": "primitive", "n": 50000, "burn_in": 1000,
                "thinning": 1, "seed": 0, "steps": 20, "jitter_tau": 0.1,
                "jitter_steps": 0.1, "chains": 1, "format": "csv"}
    # the nine-angle posterior is much stiffer than the qubit targets
    defaults["tau"] = 0.05 if cfg.get("pom") == BB84 else 0.1
    for key, val in defaults.items():
        cfg.setdefault(key, val)
    for key in ("counts", "mock", "initial"):
        if isinstance(cfg.get(key), str):
            cfg[key] = _floats(cfg[key])
        cfg.setdefault(key, None)
    if args.counts_file:
        cfg["counts"] = read_counts(args.counts_file).tolist()
    if cfg["pom"] != BB84:
        cfg.setdefault("space", DEFAULT_SPACE[cfg["pom"]])
        if cfg.get("space") is None:
            cfg["space"] = DEFAULT_SPACE[cfg["pom"]]
    else:
        cfg["space"] = "nine-angle"
    return cfg


def cmd_sample(args):
    cfg = _resolve_sample_config(args)
    target = build_target(cfg)
    try:
        traj = TrajectoryConfig(cfg["tau"], int(cfg["steps"]), cfg["jitter_tau"], cfg["jitter_steps"])
        hcfg = HmcConfig.for_samples(int(cfg["n"]), burn_in=int(cfg["burn_in"]),
                                     thinning=int(cfg["thinning"]), seed=int(cfg["seed"]),
                                     initial=None if cfg["initial"] is None else tuple(cfg["initial"]),
                                     trajectory=traj)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if int(cfg["chains"]) < 1:
        raise ConfigError("--chains must be at least 1")
    start = time.perf_counter()
    sets = []
    for c in range(int(cfg["chains"])):
        s = run_chain(target, hcfg, chain=c)
        if cfg["pom"] == BB84:
            s = bb84.reweight_marginal(s)
        sets.append(s)
        print(f"chain {c}: acceptance {s.acceptance_rate:.3f}", file=sys.stderr)
    wall = time.perf_counter() - start
    write_samples(args.out, sets, weighted=cfg["pom"] == BB84, fmt=cfg["format"])
    rates = [s.acceptance_rate for s in sets]
    manifest = {
        "tool": "hmcstate",
        "version": __version__,
        "config": cfg,
        "target": target.label,
        "seed": int(cfg["seed"]),
        "rng": RNG_ALGORITHM,
        "acceptance_rate": float(np.mean(rates)),
        "acceptance_rate_per_chain": rates,
        "wall_time_s": wall,
        "n_points": sum(len(s) for s in sets),
        "degenerate_weights": sum(s.metadata.get("degenerate_weights", 0) for s in sets),
        "sample_file": args.out,
    }
    write_manifest(args.manifest or args.out + ".manifest.json", manifest)
    return EXIT_OK


def _true_probs(args):
    if args.pom == BB84:
        if args.bloch is not None:
            raise ConfigError("--bloch applies to single-qubit POMs")
        rho = bb84.to_reconstruction_basis(bb84.true_state(args.state, args.noise))
        return bb84.born_probs(rho).ravel()
    if args.bloch is not None:
        b = np.array(_floats(args.bloch))
        if b.shape != (3,) or b @ b > 1 + 1e-12:
            raise ConfigError("--bloch needs a vector x,y,z of length at most one")
    elif args.state == "mixed":
        b = np.zeros(3)
    else:
        raise ConfigError(f"state {args.state!r} is two-qubit; use --bloch for qubit POMs")
    return targets.POMS[args.pom].probs((1 - args.noise) * b)


def cmd_simulate_data(args):
    if args.shots < 0:
        raise ConfigError("--shots must be nonnegative")
    try:
        p = _true_probs(args)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    p = np.clip(p, 0.0, None)
    rng = make_rng(args.seed)
    counts = rng.multinomial(args.shots, p / p.sum())
    write_counts(args.out, counts)
    return EXIT_OK


def _bloch_columns(s, pom):
    pom_obj = targets.POMS[pom]
    b = (s.probs - pom_obj.offset) @ np.linalg.pinv(pom_obj.directions).T
    return {"x": b[:, 0], "y": b[:, 1], "z": b[:, 2]}


def _physical_columns(s, pom):
    """Series worth diagnosing: Bloch components for qubits, probabilities and
    CHSH for two qubits.  Raw angles wander over many periods and are skipped."""
    if s.probs is None:
        return None
    if pom == BB84:
        cols = {f"p_{i + 1}": s.probs[:, i] for i in range(16)}
        cols["chsh"] = chsh.chsh_from_probs(s.probs)
        if s.aux is not None:
            cols["q"] = s.aux
        return cols
    return _bloch_columns(s, pom)


def _guess_pom(path, k):
    try:
        return read_manifest(path + ".manifest.json")["config"]["pom"]
    except (OSError, ValueError, KeyError):
        pass
    by_size = {16: BB84, 6: "pauli", 3: "trine"}
    if k in by_size:
        return by_size[k]
    raise ConfigError(f"cannot tell which POM has {k} outcomes; pass --pom")


def _merge(sets):
    from .hmc import SampleSet
    probs = None if sets[0].probs is None else np.vstack([s.probs for s in sets])
    aux = None if sets[0].aux is None else np.concatenate([s.aux for s in sets])
    return SampleSet(np.vstack([s.points for s in sets]), probs,
                     np.concatenate([s.weights for s in sets]), {"chains": len(sets)}, aux=aux)


def _summary_dict(summary):
    return {
        "mean": summary.mean,
        "median": summary.median,
        "quantiles": {str(k): v for k, v in summary.quantiles.items()},
        "fraction_abs_gt_2": summary.frac_abs_gt_2,
        "fraction_sq_over_4_gt_1": summary.frac_sq_gt_1,
        "n_points": int(summary.values.size),
    }


def cmd_analyze(args):
    sets = read_samples(args.input)
    s = _merge(sets)
    k = 0 if s.probs is None else s.probs.shape[1]
    report_path = args.report or args.out + ".json"
    if args.analysis == "diagnostics":
        manifest_rate = None
        try:
            manifest_rate = read_manifest(args.input + ".manifest.json").get("acceptance_rate")
        except (OSError, ValueError):
            pass
        reports = {}
        pom = args.pom or _guess_pom(args.input, k)
        for part in sets:
            if manifest_rate is not None:
                part = part.with_weights(part.weights, acceptance_rate=manifest_rate)
            reports[f"chain_{part.metadata['chain']}"] = diagnostics(
                part, max_lag=args.max_lag, columns=_physical_columns(part, pom)).to_dict()
        for name, rep in reports.items():
            for w in rep["warnings"]:
                print(f"{name}: {w}", file=sys.stderr)
        with open(args.out, "w") as fh:
            json.dump(reports, fh, indent=2)
            fh.write("\n")
        return EXIT_OK
    pom = args.pom or _guess_pom(args.input, k)
    if args.analysis in ("chsh-fixed", "chsh-optimized"):
        if pom != BB84:
            raise ConfigError("CHSH analysis needs a double-crosshair sample")
        setting = chsh.FIXED_SETTING if args.setting is None else chsh.ChshSetting(*_floats(args.setting))
        summary = chsh.chsh_sample_summary(s, setting, optimized=args.analysis == "chsh-optimized",
                                           bins=args.bins)
    else:
        cols = {f"theta_{i + 1}": s.points[:, i] for i in range(s.points.shape[1])}
        if k:
            cols.update({f"p_{i + 1}": s.probs[:, i] for i in range(k)})
        if s.aux is not None:
            cols["q"] = s.aux
        if pom != BB84:
            cols.update(_bloch_columns(s, pom))
        else:
            cols["chsh"] = chsh.chsh_from_probs(s.probs)
        if args.column not in cols:
            raise ConfigError(f"unknown column {args.column!r}; choose from {', '.join(cols)}")
        values = cols[args.column]
        lo, hi = (values.min(), values.max()) if args.range is None else _floats(args.range)
        if hi <= lo:
            hi = lo + 1.0
        summary = chsh.summarize_values(values, s.weights, bins=args.bins, value_range=(lo, hi))
    write_histogram(args.out, summary.bin_edges, summary.density)
    with open(report_path, "w") as fh:
        json.dump({"analysis": args.analysis, **_summary_dict(summary)}, fh, indent=2)
        fh.write("\n")
    return EXIT_OK


def cmd_check_physical(args):
    p = read_probabilities(args.input)
    if p.size != 16:
        raise MalformedFile(f"{args.input}: need 16 probabilities, found {p.size}")
    try:
        p = bb84.check_probabilities(p, tol=args.tol)
    except bb84.ConstraintViolation as exc:
        print(f"not physical: {exc}", file=sys.stderr)
        return EXIT_NOT_PHYSICAL
    ok = bb84.physicality_check(p)
    result = {"physical": ok}
    if ok:
        iv = bb84.q_bounds(p)
        result.update(q_min=iv.q_min, q_max=iv.q_max)
    if args.out:
        write_manifest(args.out, result)
    print("physical" if ok else "not physical", file=sys.stderr)
    return EXIT_OK if ok else EXIT_NOT_PHYSICAL


def build_parser():
    parser = argparse.ArgumentParser(prog="hmcstate", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", help="run HMC chains and write a sample file")
    sp.add_argument("--pom", choices=targets.POM_IDS)
    sp.add_argument("--space", choices=tuple(targets.SPACES))
    sp.add_argument("--prior", choices=("primitive", "jeffreys", "conjugate"))
    sp.add_argument("--counts", help="comma-separated counts, one per outcome")
    sp.add_argument("--counts-file", help="outcome,count CSV (overrides --counts)")
    sp.add_argument("--mock", help="comma-separated mock counts for the conjugate prior")
    sp.add_argument("--n", type=int, help="points kept after burn-in and thinning")
    sp.add_argument("--burn-in", type=int)
    sp.add_argument("--thinning", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--tau", type=float)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--jitter-tau", type=float)
    sp.add_argument("--jitter-steps", type=float)
    sp.add_argument("--chains", type=int)
    sp.add_argument("--initial", help="comma-separated starting angles")
    sp.add_argument("--format", choices=("csv", "jsonl"))
    sp.add_argument("--from-manifest", help="replay the configuration recorded in a manifest")
    sp.add_argument("--out", required=True)
    sp.add_argument("--manifest", help="manifest path (default: OUT.manifest.json)")
    sp.set_defaults(func=cmd_sample)

    sd = sub.add_parser("simulate-data", help="draw multinomial counts from a true state")
    sd.add_argument("--state", choices=("singlet", "triplet", "mixed"), default="mixed")
    sd.add_argument("--bloch", help="x,y,z of a qubit true state (single-qubit POMs)")
    sd.add_argument("--noise", type=float, default=0.0,
                    help="weight of white noise mixed into the true state")
    sd.add_argument("--pom", choices=targets.POM_IDS, default=BB84)
    sd.add_argument("--shots", type=int, required=True)
    sd.add_argument("--seed", type=int, default=0)
    sd.add_argument("--out", required=True)
    sd.set_defaults(func=cmd_simulate_data)

    an = sub.add_parser("analyze", help="diagnostics, CHSH summaries or histograms of a sample file")
    an.add_argument("--input", required=True)
    an.add_argument("--analysis", required=True,
                    choices=("diagnostics", "chsh-fixed", "chsh-optimized", "histogram"))
    an.add_argument("--pom", choices=targets.POM_IDS)
    an.add_argument("--column", default="z", help="histogram column (x, y, z, theta_s, p_k, q, chsh)")
    an.add_argument("--bins", type=int, default=60)
    an.add_argument("--range", help="lo,hi histogram range")
    an.add_argument("--setting", help="phi1,phi2,psi1,psi2 for chsh-fixed")
    an.add_argument("--max-lag", type=int, default=200)
    an.add_argument("--out", required=True)
    an.add_argument("--report", help="summary JSON path (default: OUT.json)")
    an.set_defaults(func=cmd_analyze)

    cp = sub.add_parser("check-physical", help="test 16 double-crosshair probabilities for physicality")
    cp.add_argument("--input", required=True)
    cp.add_argument("--tol", type=float, default=1e-10)
    cp.add_argument("--out")
    cp.set_defaults(func=cmd_check_physical)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BadInitialPoint as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INITIAL
    except (ConfigError, MalformedFile, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
