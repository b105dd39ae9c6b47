"""File formats and canonical JSON.

Canonical output sorts keys, prints floats with 17 significant digits and
writes rationals as ``"p/q"`` strings, so emitted files read back to
identical values and re-emit byte-for-byte.
"""

from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .amodel import AModel
from .errors import InputError
from .markov import TmcParam, TransitionGraph
from .reversible import ReversibleParam


def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x}")
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _plain(obj: Any) -> Any:
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_plain(x) for x in obj.tolist()] if obj.dtype != object else [_plain(x) for x in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (frozenset, set)):
        return sorted(_plain(x) for x in obj)
    if isinstance(obj, tuple):
        return [_plain(x) for x in obj]
    return obj


def dumps(obj: Any, indent: int = 2) -> str:
    """Canonical JSON text (trailing newline included)."""

    def enc(o: Any, level: int) -> str:
        o = _plain(o)
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if o is None or isinstance(o, bool):
            return json.dumps(o)
        if isinstance(o, int):
            return str(o)
        if isinstance(o, float):
            return format_float(o)
        if isinstance(o, str):
            return json.dumps(o, ensure_ascii=False)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = sorted((str(k), v) for k, v in o.items())
            body = ",\n".join(f"{pad}{json.dumps(k, ensure_ascii=False)}: {enc(v, level + 1)}" for k, v in items)
            return "{\n" + body + "\n" + end + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            if all(not isinstance(_plain(x), (list, dict)) for x in o):
                return "[" + ", ".join(enc(x, level + 1) for x in o) + "]"
            return "[\n" + ",\n".join(pad + enc(x, level + 1) for x in o) + "\n" + end + "]"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(obj, 0) + "\n"


def read_json(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None


def read_csv_matrix(path: str | Path) -> list[list[str]]:
    rows = [r for r in csv.reader(io.StringIO(Path(path).read_text())) if r and any(c.strip() for c in r)]
    return [[c.strip() for c in r] for r in rows]


def _num(x) -> float:
    if isinstance(x, str):
        return float(Fraction(x))
    return float(x)


# ---------------------------------------------------------------------------
# models


def model_from_obj(obj: dict) -> AModel:
    try:
        rows = obj["rows"]
    except (KeyError, TypeError):
        raise InputError("model JSON needs a 'rows' field") from None
    return AModel(
        rows,
        mu=tuple(obj.get("mu") or ()),
        row_labels=tuple(str(x) for x in obj.get("row_labels") or ()),
        col_labels=tuple(str(x) for x in obj.get("col_labels") or ()),
    )


def model_to_obj(model: AModel) -> dict:
    return {
        "rows": [list(r) for r in model.A],
        "mu": [str(m) for m in model.mu],
        "row_labels": list(model.row_labels),
        "col_labels": list(model.col_labels),
    }


def load_model(path: str | Path, fmt: str = "json") -> AModel:
    if fmt == "csv":
        return AModel([[int(c) for c in r] for r in read_csv_matrix(path)])
    return model_from_obj(read_json(path))


# ---------------------------------------------------------------------------
# graphs and TMC parameters


def graph_from_obj(obj: dict) -> TransitionGraph:
    try:
        return TransitionGraph(obj["vertices"], [tuple(a) for a in obj.get("arcs", [])], obj.get("loops", []))
    except (KeyError, TypeError):
        raise InputError("graph JSON needs 'vertices', 'arcs' and 'loops'") from None
    except ValueError as exc:
        raise InputError(str(exc)) from None


def graph_to_obj(graph: TransitionGraph) -> dict:
    return {"vertices": list(graph.vertices), "arcs": [list(a) for a in graph.arcs], "loops": graph.loops}


def load_graph(path: str | Path) -> TransitionGraph:
    return graph_from_obj(read_json(path))


def arc_key(v, w) -> str:
    return f"{v}->{w}"


def tmc_param_from_obj(graph: TransitionGraph, obj: dict) -> TmcParam:
    """Flat map: ``t0``, one key per vertex label, one ``"v->w"`` key per transition.

    Missing entries default to 1.
    """
    known = {"t0"} | {str(v) for v in graph.vertices}
    known |= {arc_key(graph.vertices[i], graph.vertices[j]) for i, j in graph.transitions}
    unknown = set(map(str, obj)) - known
    if unknown:
        raise InputError(f"unknown parameter keys: {sorted(unknown)}")
    n = len(graph)
    initial = np.array([_num(obj.get(str(v), 1)) for v in graph.vertices])
    T = np.zeros((n, n))
    for i, j in graph.transitions:
        T[i, j] = _num(obj.get(arc_key(graph.vertices[i], graph.vertices[j]), 1))
    try:
        return TmcParam.make(graph, T, initial, _num(obj.get("t0", 1)))
    except ValueError as exc:
        raise InputError(str(exc)) from None


def tmc_param_to_obj(graph: TransitionGraph, t: TmcParam) -> dict:
    obj: dict[str, Any] = {"t0": float(t.t0)}
    for v, x in zip(graph.vertices, t.initial):
        obj[str(v)] = float(x)
    for i, j in graph.transitions:
        obj[arc_key(graph.vertices[i], graph.vertices[j])] = float(t.T[i, j])
    return obj


# ---------------------------------------------------------------------------
# square matrices with vertex labels


def matrix_from_obj(obj: dict, key: str = "P") -> tuple[list, list]:
    if isinstance(obj, list):
        M = obj
        vertices = list(range(len(M)))
    else:
        names = [key] + [k for k in ("P", "Q", "N") if k != key]
        found = [k for k in names if isinstance(obj, dict) and k in obj]
        if not found:
            raise InputError(f"matrix JSON needs a '{key}' field")
        M = obj[found[0]]
        vertices = list(obj.get("vertices") or range(len(M)))
    if any(len(r) != len(M) for r in M) or len(vertices) != len(M):
        raise InputError("matrix must be square and match its vertex list")
    return vertices, M


def load_matrix(path: str | Path, fmt: str = "json", key: str = "P", exact: bool = False):
    """``(vertices, M)`` with ``M`` a float array, or ``Fraction`` entries if ``exact``."""
    if fmt == "csv":
        raw = read_csv_matrix(path)
        vertices = list(range(len(raw)))
        if any(len(r) != len(raw) for r in raw):
            raise InputError("matrix must be square")
    else:
        vertices, raw = matrix_from_obj(read_json(path), key)
    conv = _exact if exact else _num
    try:
        M = np.array([[conv(x) for x in r] for r in raw], dtype=object if exact else float)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad matrix entry ({exc})") from None
    return vertices, M


def _exact(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def count_matrix(graph: TransitionGraph, path: str | Path, fmt: str = "json") -> np.ndarray:
    """Counts as a full matrix or as a ``{"v->w": n}`` map."""
    if fmt == "json":
        obj = read_json(path)
        if isinstance(obj, dict) and "N" not in obj:
            N = np.zeros((len(graph), len(graph)), dtype=np.int64)
            for k, x in obj.items():
                v, _, w = str(k).partition("->")
                ix = {str(u): i for i, u in enumerate(graph.vertices)}
                if v not in ix or w not in ix:
                    raise InputError(f"unknown transition {k!r}")
                N[ix[v], ix[w]] = int(x)
            return N
        _, M = matrix_from_obj(obj, "N")
    else:
        M = read_csv_matrix(path)
    try:
        return np.array([[int(x) for x in r] for r in M], dtype=np.int64)
    except ValueError as exc:
        raise InputError(f"counts must be integers ({exc})") from None


# ---------------------------------------------------------------------------
# reversible parameters


def rev_param_to_obj(vertices: Sequence, rp: ReversibleParam, loops: Sequence | None = None) -> dict:
    pos = list(vertices)
    return {
        "vertices": pos,
        "s": [[float(x) for x in row] for row in rp.s],
        "cuts": [[pos[i] for i in sorted(B)] for B in rp.cuts],
        "t": [float(x) for x in rp.t],
        "loops": list(vertices) if loops is None else list(loops),
    }


def rev_param_from_obj(obj: dict) -> tuple[TransitionGraph, ReversibleParam]:
    """Parameters plus the transition graph they live on.

    Edges are the positive off-diagonal entries of ``s``; loops default to
    every vertex.
    """
    try:
        vertices = list(obj["vertices"])
        s = np.array([[_num(x) for x in r] for r in obj["s"]], dtype=float)
        t = [_num(x) for x in obj["t"]]
    except (KeyError, TypeError):
        raise InputError("reversible parameters need 'vertices', 's' and 't'") from None
    ix = {str(v): i for i, v in enumerate(vertices)}
    cuts = obj.get("cuts")
    try:
        cut_idx = None if cuts is None else [[ix[str(v)] for v in B] for B in cuts]
    except KeyError as exc:
        raise InputError(f"cut mentions unknown vertex {exc.args[0]!r}") from None
    loops = obj.get("loops", vertices)
    arcs = [(vertices[i], vertices[j]) for i, j in zip(*np.nonzero(s)) if i != j]
    try:
        graph = TransitionGraph(vertices, arcs, loops)
        rp = ReversibleParam.make(s, t, cut_idx)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return graph, rp


def parse_list(text: str, conv=float) -> list:
    """Comma-separated list, or a JSON array."""
    text = text.strip()
    if text.startswith("["):
        return [conv(x) for x in json.loads(text)]
    return [conv(x) for x in text.split(",") if x.strip()]


def parse_trajectory(text: str, graph: TransitionGraph) -> tuple:
    """States by label; JSON arrays keep label types, comma lists match by string."""
    text = text.strip()
    if text.startswith("["):
        return tuple(json.loads(text))
    ix = {str(v): v for v in graph.vertices}
    try:
        return tuple(ix[s.strip()] for s in text.split(",") if s.strip())
    except KeyError as exc:
        raise InputError(f"unknown state {exc.args[0]!r}") from None
