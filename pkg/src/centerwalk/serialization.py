"""JSON wire formats for graphs, decompositions and reports, plus CSV traces.

Graph files:          {"vertices": [...], "edges": [{"src", "dst", "w"}]}
Decomposition files:  {"cycles": [{"vertices": [...], "weight": "p/q"}]}

Weights are exact fraction strings ("2/3") when rational, JSON numbers when
not.  Vertex labels are ints, strings, or (nested) lists standing for tuples.
Report payloads serialize canonically (sorted keys, fixed separators) so
identical runs produce byte-identical output.
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Sequence

from .errors import InputParseError
from .markov_graph import Cycle, CycleDecomposition, Kernel
from .weights import format_weight, parse_weight

ARTIFACT_VERSION = "0.1.0"


def encode_vertex(v):
    if isinstance(v, tuple):
        return [encode_vertex(x) for x in v]
    return v


def decode_vertex(v):
    if isinstance(v, list):
        return tuple(decode_vertex(x) for x in v)
    return v


def kernel_to_obj(kernel: Kernel) -> dict:
    edges = [
        {"src": encode_vertex(x), "dst": encode_vertex(y), "w": format_weight(w)}
        for x, y, w in sorted(kernel.edges(), key=lambda e: (repr(e[0]), repr(e[1])))
    ]
    vertices = [encode_vertex(v) for v in kernel.sorted_vertices()]
    obj = {"vertices": vertices, "edges": edges}
    if kernel.substochastic:
        obj["substochastic"] = True
    return obj


def kernel_from_obj(obj: Mapping) -> Kernel:
    try:
        vertices = [decode_vertex(v) for v in obj["vertices"]]
        rows: Dict[object, Dict[object, object]] = {v: {} for v in vertices}
        for e in obj["edges"]:
            src = decode_vertex(e["src"])
            dst = decode_vertex(e["dst"])
            w = parse_weight(e["w"])
            if src not in rows:
                raise InputParseError(f"edge source {e['src']!r} not among the vertices")
            rows[src][dst] = rows[src].get(dst, 0) + w
    except (KeyError, TypeError) as exc:
        raise InputParseError(f"malformed graph object: {exc!r}") from exc
    return Kernel(rows, substochastic=bool(obj.get("substochastic", False)))


def decomposition_to_obj(dec: CycleDecomposition) -> dict:
    return {
        "cycles": [
            {"vertices": [encode_vertex(v) for v in cycle.vertices], "weight": format_weight(w)}
            for cycle, w in dec
        ]
    }


def decomposition_from_obj(obj: Mapping) -> CycleDecomposition:
    from .errors import StructuralError

    try:
        entries = tuple(
            (Cycle(tuple(decode_vertex(v) for v in c["vertices"])), parse_weight(c["weight"]))
            for c in obj["cycles"]
        )
        return CycleDecomposition(entries)
    except (KeyError, TypeError, StructuralError) as exc:
        raise InputParseError(f"malformed decomposition object: {exc!r}") from exc


def flow_from_obj(obj: Mapping) -> Dict[tuple, object]:
    try:
        return {
            (decode_vertex(e["src"]), decode_vertex(e["dst"])): parse_weight(e["w"])
            for e in obj["edges"]
        }
    except (KeyError, TypeError) as exc:
        raise InputParseError(f"malformed flow object: {exc!r}") from exc


def load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputParseError(f"cannot read JSON file {path}: {exc}") from exc


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {_key(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and (obj != obj or obj in (float("inf"), float("-inf"))):
        return repr(obj)
    return obj


def _key(k) -> str:
    if isinstance(k, str):
        return k
    if isinstance(k, tuple):
        return json.dumps([_jsonable(x) for x in k])
    return json.dumps(_jsonable(k))


def canonical_json_bytes(obj) -> bytes:
    """Deterministic serialization: sorted keys, fixed separators, UTF-8."""
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":")).encode()


def make_report(command: str, config: Mapping, results, wall_time_s: float) -> dict:
    return {
        "command": command,
        "config": _jsonable(dict(config)),
        "results": _jsonable(results),
        "version": ARTIFACT_VERSION,
        "wall_time_s": wall_time_s,
    }


def csv_bytes(header: Sequence[str], rows: Iterable[Sequence]) -> bytes:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_weight(v) if isinstance(v, Fraction) else v for v in row])
    return buf.getvalue().encode()
