"""Reading TNTP network/trip files and writing result tables.

Files use 1-based node numbers; everything in memory is 0-based and every
table written back to disk is 1-based again.
"""
from __future__ import annotations

import csv
import os
import re
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .link_cost import LinkParams

__all__ = [
    "TNTPParseError",
    "Network",
    "TripTable",
    "DemandSpec",
    "parse_net",
    "parse_trips",
    "read_net",
    "read_trips",
    "format_net",
    "marginals",
    "write_tables",
    "sioux_falls_paths",
]

_DATA = Path(__file__).parent / "data"


def sioux_falls_paths():
    """Return the bundled Sioux Falls ``(net, trips)`` file paths."""
    return _DATA / "SiouxFalls_net.tntp", _DATA / "SiouxFalls_trips.tntp"


class TNTPParseError(ValueError):
    """Malformed TNTP input; ``lineno`` is 1-based (0 when not line-specific)."""

    def __init__(self, message, lineno=0):
        self.lineno = lineno
        if lineno:
            message = f"line {lineno}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class Network:
    """Directed road network with per-link BPR parameters.

    ``tail`` and ``head`` are 0-based node ids.  Nodes numbered below
    ``first_thru_node`` (1-based, TNTP convention) are zone centroids and are
    never used as intermediate nodes of a shortest path.
    """

    node_count: int
    tail: np.ndarray
    head: np.ndarray
    links: LinkParams
    zone_count: int = 0
    first_thru_node: int = 1

    def __post_init__(self):
        tail = np.asarray(self.tail, dtype=np.intp)
        head = np.asarray(self.head, dtype=np.intp)
        object.__setattr__(self, "tail", tail)
        object.__setattr__(self, "head", head)
        if tail.shape != head.shape or tail.size != len(self.links):
            raise ValueError("tail, head and links must have equal length")
        if tail.size and (min(tail.min(), head.min()) < 0
                          or max(tail.max(), head.max()) >= self.node_count):
            raise ValueError("link endpoint out of range")
        if np.any(tail == head):
            raise ValueError("self-loops are not allowed")
        if not self.zone_count:
            object.__setattr__(self, "zone_count", self.node_count)

    @property
    def link_count(self) -> int:
        return self.tail.size

    @cached_property
    def out_links(self):
        """Per-node tuples of outgoing link ids, in link order."""
        adj = [[] for _ in range(self.node_count)]
        for e, u in enumerate(self.tail.tolist()):
            adj[u].append(e)
        return tuple(tuple(a) for a in adj)

    def is_centroid(self, node: int) -> bool:
        return node + 1 < self.first_thru_node

    def with_overrides(self, kappa=None, power=None) -> "Network":
        """Copy with global ``kappa`` / ``power`` replacing the per-link values."""
        p = self.links
        links = LinkParams(p.free_flow_time, p.capacity,
                           p.kappa if kappa is None else np.full(len(p), float(kappa)),
                           p.power if power is None else np.full(len(p), float(power)))
        return Network(self.node_count, self.tail, self.head, links,
                       self.zone_count, self.first_thru_node)


@dataclass(frozen=True)
class TripTable:
    """Dense zone-by-zone trip matrix (0-based) and its total."""

    matrix: np.ndarray
    total: float
    declared_total: float | None = None


@dataclass(frozen=True, eq=False)
class DemandSpec:
    """Origin/destination totals and the OD pair set.

    ``origins`` and ``destinations`` are 0-based zone ids; ``pairs`` is a
    boolean ``(len(origins), len(destinations))`` mask of admissible pairs.
    ``l`` and ``w`` are in vehicle units and sum to ``total``.
    """

    origins: np.ndarray
    destinations: np.ndarray
    pairs: np.ndarray
    l: np.ndarray
    w: np.ndarray
    total: float
    reference: np.ndarray | None = None

    @property
    def shape(self):
        return self.pairs.shape

    @property
    def pair_count(self) -> int:
        return int(self.pairs.sum())


_META = re.compile(r"<\s*([^>]+?)\s*>\s*(.*)")


def _metadata(lines):
    meta, body_start = {}, None
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("~"):
            continue
        m = _META.match(line)
        if not m:
            raise TNTPParseError("expected metadata before <END OF METADATA>", lineno)
        key = m.group(1).upper()
        if key == "END OF METADATA":
            body_start = lineno
            break
        meta[key] = (m.group(2).strip(), lineno)
    if body_start is None:
        raise TNTPParseError("missing <END OF METADATA>")
    return meta, body_start


def _meta_number(meta, key, cast=int, required=True):
    if key not in meta:
        if required:
            raise TNTPParseError(f"missing metadata <{key}>")
        return None
    text, lineno = meta[key]
    try:
        return cast(float(text)) if cast is int else cast(text)
    except ValueError:
        raise TNTPParseError(f"non-numeric value for <{key}>: {text!r}", lineno) from None


def parse_net(text: str, kappa=None, power=None) -> Network:
    """Parse a TNTP ``_net`` file.

    ``kappa`` and ``power``, when given, override the per-link ``b`` and
    ``power`` columns for every link.
    """
    lines = text.splitlines()
    meta, body_start = _metadata(lines)
    n_nodes = _meta_number(meta, "NUMBER OF NODES")
    n_links = _meta_number(meta, "NUMBER OF LINKS")
    first_thru = _meta_number(meta, "FIRST THRU NODE")
    n_zones = _meta_number(meta, "NUMBER OF ZONES", required=False) or 0

    rows = []
    for lineno in range(body_start + 1, len(lines) + 1):
        line = lines[lineno - 1].split("~", 1)[0].strip()
        if not line:
            continue
        fields = line.rstrip(";").split()
        if len(fields) < 7:
            raise TNTPParseError(f"expected at least 7 columns, got {len(fields)}", lineno)
        try:
            init, term = int(fields[0]), int(fields[1])
            cap, _length, fft, b, pw = (float(x) for x in fields[2:7])
        except ValueError:
            raise TNTPParseError(f"non-numeric link field in {line!r}", lineno) from None
        if not (1 <= init <= n_nodes and 1 <= term <= n_nodes):
            raise TNTPParseError(f"node id out of range 1..{n_nodes}", lineno)
        if init == term:
            raise TNTPParseError("self-loop link", lineno)
        if not cap > 0:
            raise TNTPParseError("capacity must be > 0", lineno)
        if not fft > 0:
            raise TNTPParseError("free flow time must be > 0", lineno)
        if b < 0 or pw < 1:
            raise TNTPParseError("b must be >= 0 and power >= 1", lineno)
        rows.append((init - 1, term - 1, cap, fft, b, pw))

    if len(rows) != n_links:
        raise TNTPParseError(
            f"<NUMBER OF LINKS> is {n_links} but {len(rows)} link rows were found",
            meta["NUMBER OF LINKS"][1])
    if rows:
        tail, head, cap, fft, b, pw = (np.array(c) for c in zip(*rows))
    else:
        tail = head = np.zeros(0, dtype=np.intp)
        cap = fft = b = pw = np.zeros(0)
    if kappa is not None:
        b = np.full(len(rows), float(kappa))
    if power is not None:
        pw = np.full(len(rows), float(power))
    return Network(n_nodes, tail, head, LinkParams(fft, cap, b, pw),
                   zone_count=n_zones or n_nodes, first_thru_node=first_thru)


_TRIP_ENTRY = re.compile(r"^\s*(\d+)\s*:\s*([^;\s]+)\s*$")


def parse_trips(text: str, zone_count=None) -> TripTable:
    """Parse a TNTP ``_trips`` file into a dense trip matrix."""
    lines = text.splitlines()
    meta, body_start = _metadata(lines)
    zones = zone_count or _meta_number(meta, "NUMBER OF ZONES", required=False)
    declared = _meta_number(meta, "TOTAL OD FLOW", cast=float, required=False)

    entries = []
    origin = None
    for lineno in range(body_start + 1, len(lines) + 1):
        line = lines[lineno - 1].split("~", 1)[0].strip()
        if not line:
            continue
        if line.lower().startswith("origin"):
            try:
                origin = int(line.split()[1])
            except (IndexError, ValueError):
                raise TNTPParseError(f"bad origin header {line!r}", lineno) from None
            continue
        if origin is None:
            raise TNTPParseError("trip entry before any 'Origin' header", lineno)
        for token in line.split(";"):
            if not token.strip():
                continue
            m = _TRIP_ENTRY.match(token)
            if not m:
                raise TNTPParseError(f"malformed entry {token.strip()!r}", lineno)
            try:
                value = float(m.group(2))
            except ValueError:
                raise TNTPParseError(f"non-numeric trips {m.group(2)!r}", lineno) from None
            if value < 0 or not np.isfinite(value):
                raise TNTPParseError("trips must be finite and >= 0", lineno)
            entries.append((origin, int(m.group(1)), value, lineno))

    if zones is None:
        zones = max((max(o, d) for o, d, _, _ in entries), default=0)
    matrix = np.zeros((zones, zones))
    for o, d, v, lineno in entries:
        if not (1 <= o <= zones and 1 <= d <= zones):
            raise TNTPParseError(f"zone id out of range 1..{zones}", lineno)
        matrix[o - 1, d - 1] += v
    total = float(matrix.sum())
    if declared is not None and abs(total - declared) > 5e-3 * max(abs(declared), 1e-300):
        warnings.warn(f"trip entries sum to {total:g} but <TOTAL OD FLOW> is {declared:g}",
                      stacklevel=2)
    return TripTable(matrix, total, declared)


def read_net(path, **kwargs) -> Network:
    return parse_net(Path(path).read_text(), **kwargs)


def read_trips(path, **kwargs) -> TripTable:
    return parse_trips(Path(path).read_text(), **kwargs)


def format_net(network: Network) -> str:
    """Serialize ``network`` as TNTP text that :func:`parse_net` reads back."""
    p = network.links
    out = [f"<NUMBER OF ZONES> {network.zone_count}",
           f"<NUMBER OF NODES> {network.node_count}",
           f"<FIRST THRU NODE> {network.first_thru_node}",
           f"<NUMBER OF LINKS> {network.link_count}",
           "<END OF METADATA>", "",
           "~ init term capacity length fftime b power speed toll type ;"]
    for e in range(network.link_count):
        fft = _fmt(p.free_flow_time[e])
        out.append(f"\t{network.tail[e] + 1}\t{network.head[e] + 1}\t{_fmt(p.capacity[e])}"
                   f"\t{fft}\t{fft}\t{_fmt(p.kappa[e])}\t{_fmt(p.power[e])}\t0\t0\t1\t;")
    return "\n".join(out) + "\n"


def marginals(trips) -> DemandSpec:
    """Build a :class:`DemandSpec` from a trip matrix.

    Origins are the zones with positive row sums, destinations those with
    positive column sums; the pair set is every origin/destination pair of
    distinct zones.
    """
    matrix = trips.matrix if isinstance(trips, TripTable) else np.asarray(trips, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("trip matrix must be square")
    if np.any(matrix < 0) or not np.all(np.isfinite(matrix)):
        raise ValueError("trip matrix must be finite and non-negative")
    rows, cols = matrix.sum(axis=1), matrix.sum(axis=0)
    origins = np.flatnonzero(rows > 0)
    destinations = np.flatnonzero(cols > 0)
    if origins.size == 0:
        raise ValueError("trip matrix has no demand")
    pairs = origins[:, None] != destinations[None, :]
    ref = matrix[np.ix_(origins, destinations)]
    return DemandSpec(origins, destinations, pairs, rows[origins], cols[destinations],
                      float(matrix.sum()), reference=ref)


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_tables(result, network: Network, demand: DemandSpec, out_dir):
    """Write ``flows.csv``, ``demand.csv`` and ``convergence.csv``.

    Returns a dict mapping table name to path.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")
    paths = {name: out / f"{name}.csv" for name in ("flows", "demand", "convergence")}

    t0 = network.links.free_flow_time
    with open(paths["flows"], "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["link_id", "tail", "head", "flow", "time", "time_ratio"])
        for e in range(network.link_count):
            wr.writerow([e + 1, network.tail[e] + 1, network.head[e] + 1,
                         _fmt(result.flows[e]), _fmt(result.times[e]),
                         _fmt(result.times[e] / t0[e])])

    trips = result.demand * result.total
    with open(paths["demand"], "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["origin", "dest", "trips"])
        for a, i in enumerate(demand.origins):
            for b, j in enumerate(demand.destinations):
                if demand.pairs[a, b]:
                    wr.writerow([i + 1, j + 1, _fmt(trips[a, b])])

    h = result.history
    with open(paths["convergence"], "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["iter", "F", "gap", "L_estimate", "sinkhorn_iters", "elapsed_ms"])
        for k in range(len(h)):
            wr.writerow([h.iteration[k], _fmt(h.value[k]), _fmt(h.gap[k]),
                         _fmt(h.lipschitz[k]), h.sinkhorn_sweeps[k],
                         _fmt(h.elapsed[k] * 1e3)])
    return paths
