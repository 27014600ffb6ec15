"""Plain-text interchange: sample CSVs, count files and run manifests.

Sample files have the header ``[chain,]theta_1..theta_S,p_1..p_K[,q][,weight]``
with one row per kept point.  Floats are written with 17 significant digits,
which round-trips float64 exactly.
"""
import csv
import json
import re

import numpy as np

from .errors import MalformedFile
from .hmc import SampleSet

__all__ = [
    "sample_header",
    "write_samples",
    "read_samples",
    "write_counts",
    "read_counts",
    "read_probabilities",
    "write_manifest",
    "read_manifest",
    "write_histogram",
]

FLOAT_FMT = "%.17g"


def sample_header(dim, n_probs, has_q=False, has_weight=False, has_chain=False):
    cols = ["chain"] if has_chain else []
    cols += [f"theta_{s + 1}" for s in range(dim)]
    cols += [f"p_{k + 1}" for k in range(n_probs)]
    if has_q:
        cols.append("q")
    if has_weight:
        cols.append("weight")
    return cols


def _blocks(samples):
    n = len(samples)
    probs = np.zeros((n, 0)) if samples.probs is None else samples.probs.reshape(n, -1)
    return samples.points, probs


def write_samples(path, sample_sets, weighted=None, fmt="csv"):
    """Write one or more sample sets; several sets get a leading chain column.

    ``weighted`` defaults to whether any set carries non-unit weights.
    """
    if isinstance(sample_sets, SampleSet):
        sample_sets = [sample_sets]
    first = sample_sets[0]
    dim = first.points.shape[1]
    k = 0 if first.probs is None else first.probs.reshape(len(first), -1).shape[1]
    has_q = first.aux is not None
    if weighted is None:
        weighted = any(not np.all(s.weights == 1.0) for s in sample_sets)
    has_chain = len(sample_sets) > 1
    header = sample_header(dim, k, has_q, weighted, has_chain)
    rows = []
    for c, s in enumerate(sample_sets):
        pts, probs = _blocks(s)
        parts = [pts, probs]
        if has_q:
            parts.append(np.asarray(s.aux, dtype=float).reshape(-1, 1))
        if weighted:
            parts.append(s.weights.reshape(-1, 1))
        block = np.hstack(parts)
        chain_id = s.metadata.get("chain", c)
        for row in block:
            vals = [FLOAT_FMT % v for v in row]
            rows.append(([str(chain_id)] if has_chain else []) + vals)
    with open(path, "w", newline="") as fh:
        if fmt == "csv":
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        elif fmt == "jsonl":
            # json writes floats with repr, which also round-trips exactly
            for row in rows:
                fh.write(json.dumps(dict(zip(header, [float(v) if h != "chain" else int(v)
                                                      for h, v in zip(header, row)]))) + "\n")
        else:
            raise ValueError(f"unknown format {fmt!r}")


def _split_header(header):
    cols = list(header)
    has_chain = bool(cols) and cols[0] == "chain"
    body = cols[1:] if has_chain else cols
    thetas = [c for c in body if re.fullmatch(r"theta_\d+", c)]
    probs = [c for c in body if re.fullmatch(r"p_\d+", c)]
    rest = body[len(thetas) + len(probs):]
    expected = sample_header(len(thetas), len(probs), "q" in rest, "weight" in rest, has_chain)
    if not thetas or cols != expected:
        raise MalformedFile(f"unexpected sample header: {','.join(cols)}")
    return has_chain, len(thetas), len(probs), "q" in rest, "weight" in rest


def read_samples(path):
    """Parse a sample file back into a list of SampleSets (one per chain)."""
    with open(path, newline="") as fh:
        text = fh.read()
    if not text.strip():
        raise MalformedFile(f"{path}: empty sample file")
    if text.lstrip().startswith("{"):
        records = [json.loads(line) for line in text.splitlines() if line.strip()]
        header = list(records[0].keys())
        table = [[str(r[h]) for h in header] for r in records]
    else:
        reader = csv.reader(text.splitlines())
        header = next(reader)
        table = [row for row in reader if row]
    has_chain, dim, k, has_q, has_w = _split_header(header)
    if not table:
        raise MalformedFile(f"{path}: sample file has no rows")
    try:
        data = np.array([[float(v) for v in row] for row in table])
    except ValueError as exc:
        raise MalformedFile(f"{path}: non-numeric entry ({exc})") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise MalformedFile(f"{path}: rows do not match the header width")
    chains = data[:, 0].astype(int) if has_chain else np.zeros(len(data), dtype=int)
    data = data[:, 1:] if has_chain else data
    out = []
    for c in np.unique(chains):
        block = data[chains == c]
        col = dim + k
        aux = block[:, col].copy() if has_q else None
        col += has_q
        weights = block[:, col].copy() if has_w else np.ones(len(block))
        probs = block[:, dim:dim + k].copy() if k else None
        out.append(SampleSet(block[:, :dim].copy(), probs, weights, {"chain": int(c)}, aux=aux))
    return out


def write_counts(path, counts):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["outcome", "count"])
        for k, n in enumerate(counts, start=1):
            w.writerow([k, int(n)])


def read_counts(path):
    """Counts from an ``outcome,count`` CSV, ordered by outcome id."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["outcome", "count"]:
        raise MalformedFile(f"{path}: expected header 'outcome,count'")
    try:
        pairs = sorted((int(a), float(b)) for a, b in rows[1:] if a.strip())
    except ValueError as exc:
        raise MalformedFile(f"{path}: {exc}") from None
    if [a for a, _ in pairs] != list(range(1, len(pairs) + 1)):
        raise MalformedFile(f"{path}: outcome ids must run 1..K")
    return np.array([b for _, b in pairs])


def read_probabilities(path):
    """Numbers from a probability file: either ``outcome,probability`` rows or
    bare numbers separated by commas or whitespace."""
    with open(path) as fh:
        text = fh.read()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if lines and re.match(r"\s*outcome\s*,", lines[0]):
        try:
            return np.array([float(ln.split(",")[1]) for ln in lines[1:]])
        except (ValueError, IndexError) as exc:
            raise MalformedFile(f"{path}: {exc}") from None
    try:
        return np.array([float(v) for v in re.split(r"[,\s]+", text.strip()) if v])
    except ValueError as exc:
        raise MalformedFile(f"{path}: {exc}") from None


def write_manifest(path, manifest):
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path):
    with open(path) as fh:
        return json.load(fh)


def write_histogram(path, edges, density):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_left", "bin_right", "weighted_density"])
        for lo, hi, d in zip(edges[:-1], edges[1:], density):
            w.writerow([FLOAT_FMT % lo, FLOAT_FMT % hi, FLOAT_FMT % d])
