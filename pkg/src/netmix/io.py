"""Text file formats: populations, traces, ground truth, estimates, raw contact logs.

Population file::

    n N
    graph 0 m_0
    i j
    ...            (m_0 lines, 0 <= i < j < n)
    graph 1 m_1
    ...

Traces are JSON lines: a header record echoing the chain configuration,
then one record per kept sample.  Floats are written with ``repr`` (the
shortest string that reads back to the same double), so a round trip is
exact.
"""

from __future__ import annotations

import csv
import json
import re
from pathlib import Path

import numpy as np

from .estimators import ModeEstimate
from .gibbs import ChainConfig, Trace, TraceSample
from .graph import Graph, Population, decode_keys
from .model import Assignment, Params

TRACE_FORMAT = "netmix-trace"
TRUTH_FORMAT = "netmix-truth"
FORMAT_VERSION = 1


class FormatError(ValueError):
    """Malformed input file.  ``lineno`` is 1-based when known."""

    def __init__(self, msg: str, path=None, lineno: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}"
            if lineno is not None:
                where += f":{lineno}"
            where += ": "
        super().__init__(where + msg)
        self.path = path
        self.lineno = lineno


# --- populations ---------------------------------------------------------

def _ints(line: str, k: int, path, lineno: int) -> list[int]:
    parts = line.split()
    if len(parts) != k:
        raise FormatError(f"expected {k} integers, got {line.strip()!r}", path, lineno)
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise FormatError(f"expected integers, got {line.strip()!r}", path, lineno) from None


def parse_population(text: str, path=None) -> Population:
    lines = [(i + 1, ln) for i, ln in enumerate(text.splitlines()) if ln.strip()]
    if not lines:
        raise FormatError("empty file", path)
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(lines):
            raise FormatError("unexpected end of file", path, lines[-1][0])
        item = lines[pos]
        pos += 1
        return item

    lineno, line = take()
    n, N = _ints(line, 2, path, lineno)
    if n < 1 or N < 0:
        raise FormatError("header must be 'n N' with n >= 1 and N >= 0", path, lineno)
    graphs = []
    for t in range(N):
        lineno, line = take()
        parts = line.split()
        if len(parts) != 3 or parts[0] != "graph":
            raise FormatError(f"expected 'graph {t} <m>', got {line.strip()!r}", path, lineno)
        bt, m = _ints(" ".join(parts[1:]), 2, path, lineno)
        if bt != t:
            raise FormatError(f"expected block for graph {t}, got {bt}", path, lineno)
        if m < 0:
            raise FormatError("negative edge count", path, lineno)
        seen = set()
        for _ in range(m):
            lineno, line = take()
            i, j = _ints(line, 2, path, lineno)
            if not (0 <= i < n and 0 <= j < n):
                raise FormatError(f"node index out of range [0, {n})", path, lineno)
            if i >= j:
                raise FormatError(f"pair ({i}, {j}) is not canonical (need i < j)", path, lineno)
            if (i, j) in seen:
                raise FormatError(f"duplicate pair ({i}, {j})", path, lineno)
            seen.add((i, j))
        graphs.append(Graph(n, sorted(seen)))
    if pos != len(lines):
        raise FormatError(f"expected {N} graph blocks, found trailing content", path, lines[pos][0])
    return Population(graphs, n=n)


def read_population(path) -> Population:
    return parse_population(Path(path).read_text(), path)


def format_population(pop: Population) -> str:
    out = [f"{pop.n} {pop.N}"]
    for t, g in enumerate(pop):
        out.append(f"graph {t} {g.m}")
        out.extend(f"{i} {j}" for i, j in g.edge_list())
    return "\n".join(out) + "\n"


def write_population(pop: Population, path) -> None:
    Path(path).write_text(format_population(pop))


# --- traces --------------------------------------------------------------

def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def _sample_record(s: TraceSample) -> dict:
    return {
        "sweep": int(s.sweep),
        "log_posterior": float(s.log_posterior),
        "log_likelihood": float(s.log_likelihood),
        "g": s.g.tolist(),
        "alpha": s.params.alpha.tolist(),
        "beta": s.params.beta.tolist(),
        "pi": s.params.pi.tolist(),
        "rho": float(s.params.rho),
        "modes": [[list(e) for e in a.edge_list()] for a in s.modes],
    }


def write_trace(trace: Trace, path) -> None:
    with open(path, "w") as fh:
        header = {"format": TRACE_FORMAT, "version": FORMAT_VERSION, "n": trace.n,
                  "S": len(trace), "config": trace.config.to_dict()}
        fh.write(_dumps(header) + "\n")
        for s in trace:
            fh.write(_dumps(_sample_record(s)) + "\n")


def _graph_from_pairs(n: int, pairs) -> Graph:
    return Graph(n, [tuple(p) for p in pairs])


def read_trace(path) -> Trace:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError("empty trace file", path)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise FormatError(f"bad header: {e}", path, 1) from None
    if header.get("format") != TRACE_FORMAT:
        raise FormatError("not a trace file", path, 1)
    if header.get("version") != FORMAT_VERSION:
        raise FormatError(f"unsupported trace version {header.get('version')}", path, 1)
    n = int(header["n"])
    cfg = ChainConfig.from_dict(header["config"])
    samples = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            r = json.loads(line)
            samples.append(TraceSample(
                sweep=r["sweep"],
                modes=[_graph_from_pairs(n, m) for m in r["modes"]],
                g=np.asarray(r["g"], dtype=np.int64),
                params=Params(r["alpha"], r["beta"], r["pi"], r["rho"]),
                log_posterior=r["log_posterior"],
                log_likelihood=r["log_likelihood"],
            ))
        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as e:
            raise FormatError(f"bad trace record: {e}", path, lineno) from None
    if "S" in header and header["S"] != len(samples):
        raise FormatError(f"header announces {header['S']} samples, found {len(samples)}", path)
    return Trace(samples, cfg, n)


# --- ground truth sidecar -------------------------------------------------

def write_truth(path, modes, g: Assignment, params: Params) -> None:
    doc = {
        "format": TRUTH_FORMAT, "version": FORMAT_VERSION,
        "n": modes[0].n, "K": len(modes),
        "g": g.labels.tolist(),
        "alpha": params.alpha.tolist(), "beta": params.beta.tolist(),
        "pi": params.pi.tolist(), "rho": params.rho,
        "modes": [[list(e) for e in a.edge_list()] for a in modes],
    }
    Path(path).write_text(_dumps(doc) + "\n")


def read_truth(path):
    """Return ``(modes, assignment, params)`` from a ground-truth sidecar."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise FormatError(f"bad truth file: {e}", path) from None
    if doc.get("format") != TRUTH_FORMAT or doc.get("version") != FORMAT_VERSION:
        raise FormatError("not a supported ground-truth file", path)
    n, K = doc["n"], doc["K"]
    modes = [_graph_from_pairs(n, m) for m in doc["modes"]]
    return modes, Assignment(doc["g"], K), Params(doc["alpha"], doc["beta"], doc["pi"], doc["rho"])


# --- estimates -----------------------------------------------------------

def write_estimate(directory, modes: ModeEstimate, params: Params, g: Assignment,
                   sigma: np.ndarray | None = None) -> None:
    """``mode_<u>.csv`` per mode, ``params.json`` and ``assignment.csv``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for u in range(modes.K):
        i, j = decode_keys(modes.n, modes.keys[u])
        with open(d / f"mode_{u}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["i", "j", "prob", "count"])
            for row in zip(i.tolist(), j.tolist(), modes.probs(u).tolist(), modes.counts[u].tolist()):
                w.writerow(row)
    doc = {
        "n": modes.n, "K": modes.K, "S": modes.S,
        "alpha": params.alpha.tolist(), "beta": params.beta.tolist(),
        "pi": params.pi.tolist(), "rho": params.rho,
    }
    if sigma is not None:
        doc["sigma"] = [None if not np.isfinite(x) else float(x) for x in sigma]
    (d / "params.json").write_text(json.dumps(doc, indent=1) + "\n")
    with open(d / "assignment.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "label"])
        for t, lab in enumerate(g.labels.tolist()):
            w.writerow([t, lab])


def read_estimate(directory):
    """Return ``(ModeEstimate, Params, Assignment)`` written by :func:`write_estimate`."""
    d = Path(directory)
    try:
        doc = json.loads((d / "params.json").read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise FormatError(f"cannot read params.json: {e}", d) from None
    n, K, S = doc["n"], doc["K"], doc["S"]
    keys, counts = [], []
    for u in range(K):
        with open(d / f"mode_{u}.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        i = np.array([int(r["i"]) for r in rows], dtype=np.int64)
        j = np.array([int(r["j"]) for r in rows], dtype=np.int64)
        keys.append(i * n + j)
        counts.append(np.array([int(r["count"]) for r in rows], dtype=np.int64))
    with open(d / "assignment.csv", newline="") as fh:
        labels = [int(r["label"]) for r in csv.DictReader(fh)]
    return (ModeEstimate(n, S, keys, counts),
            Params(doc["alpha"], doc["beta"], doc["pi"], doc["rho"]),
            Assignment(labels, K))


# --- raw contact logs ----------------------------------------------------

_SPLIT = re.compile(r"[,\s]+")


def read_registry(path) -> dict[str, int]:
    ids: dict[str, int] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        name = line.strip()
        if not name or name.startswith("#"):
            continue
        if name in ids:
            raise FormatError(f"duplicate node identifier {name!r}", path, lineno)
        ids[name] = len(ids)
    if not ids:
        raise FormatError("node registry is empty", path)
    return ids


def ingest_daily_snapshots(directory, registry) -> Population:
    """One network per day file: an edge joins two registered nodes seen in contact that day.

    Day files are read in lexicographic filename order.  Each non-blank,
    non-comment line starts with two node identifiers separated by commas
    or whitespace; further columns (timestamps, signal strength) are
    ignored.  Repeated contacts collapse to one edge and self-contacts are
    dropped.
    """
    ids = read_registry(registry)
    d = Path(directory)
    reg = Path(registry).resolve()
    files = sorted(p for p in d.iterdir() if p.is_file() and p.resolve() != reg)
    if not files:
        raise FormatError("no day files found", d)
    n = len(ids)
    graphs = []
    for path in files:
        pairs = set()
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p for p in _SPLIT.split(line) if p]
            if len(parts) < 2:
                raise FormatError("expected two node identifiers", path, lineno)
            a, b = parts[0], parts[1]
            for x in (a, b):
                if x not in ids:
                    raise FormatError(f"unknown node identifier {x!r}", path, lineno)
            i, j = ids[a], ids[b]
            if i != j:
                pairs.add((min(i, j), max(i, j)))
        graphs.append(Graph(n, sorted(pairs)))
    return Population(graphs, n=n)

