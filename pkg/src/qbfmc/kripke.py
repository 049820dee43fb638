"""Kripke structures: data model, .kri text format, graph algorithms.

A structure is a finite directed graph with a total edge relation (every
state has at least one successor), per-state proposition labels and a
distinguished initial state.  State declaration order is significant: it
fixes the index used for QBF variable naming and for bit-vector state
numbers, so it is preserved exactly through serialization round-trips.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import networkx as nx

__all__ = [
    "KripkeError",
    "KriParseError",
    "KripkeStructure",
    "parse_kripke",
    "serialize_kripke",
    "vertex_connectivity",
]

ID_RE = r"[A-Za-z_][A-Za-z0-9_]*"


class KripkeError(ValueError):
    """Structural invariant violation (totality, undeclared state, ...)."""


class KriParseError(ValueError):
    """Syntax error in .kri input, with 1-based line/column position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


def _is_ident(tok: str) -> bool:
    return bool(tok) and (tok[0].isalpha() or tok[0] == "_") and all(
        c.isalnum() or c == "_" for c in tok
    )


@dataclass(frozen=True)
class KripkeStructure:
    """Immutable total Kripke structure.

    states: declaration order, no duplicates.
    edges: set of (src, dst) pairs over declared states.
    labels: state -> set of propositions (every state has an entry).
    initial: the distinguished initial state.
    """

    states: tuple[str, ...]
    edges: frozenset[tuple[str, str]]
    labels: Mapping[str, frozenset[str]]
    initial: str

    # lazily computed, guarded by _lock (structures are shared read-only)
    _cache: dict = field(default_factory=dict, compare=False, repr=False)
    _lock: threading.Lock = field(
        default_factory=threading.Lock, compare=False, repr=False
    )

    def __post_init__(self):
        seen = set()
        for s in self.states:
            if s in seen:
                raise KripkeError(f"duplicate state {s!r}")
            seen.add(s)
        if self.initial not in seen:
            raise KripkeError(f"initial state {self.initial!r} not declared")
        for (a, b) in self.edges:
            if a not in seen or b not in seen:
                raise KripkeError(f"edge ({a},{b}) uses undeclared state")
        labels = dict(self.labels)
        for s in labels:
            if s not in seen:
                raise KripkeError(f"label entry for undeclared state {s!r}")
        for s in self.states:
            labels.setdefault(s, frozenset())
            labels[s] = frozenset(labels[s])
        object.__setattr__(self, "labels", labels)
        out = {s: False for s in self.states}
        for (a, _) in self.edges:
            out[a] = True
        for s in self.states:
            if not out[s]:
                raise KripkeError(f"state {s!r} has no outgoing edge (not total)")

    # -- basic views -------------------------------------------------------

    @property
    def index(self) -> dict[str, int]:
        with self._lock:
            if "index" not in self._cache:
                self._cache["index"] = {s: i for i, s in enumerate(self.states)}
            return self._cache["index"]

    @property
    def props(self) -> frozenset[str]:
        with self._lock:
            if "props" not in self._cache:
                acc: set[str] = set()
                for ps in self.labels.values():
                    acc |= ps
                self._cache["props"] = frozenset(acc)
            return self._cache["props"]

    def _succ_table(self) -> dict[str, tuple[str, ...]]:
        with self._lock:
            if "succ" not in self._cache:
                tab: dict[str, list[str]] = {s: [] for s in self.states}
                idx = {s: i for i, s in enumerate(self.states)}
                for (a, b) in sorted(self.edges, key=lambda e: (idx[e[0]], idx[e[1]])):
                    tab[a].append(b)
                self._cache["succ"] = {s: tuple(v) for s, v in tab.items()}
            return self._cache["succ"]

    def _pred_table(self) -> dict[str, tuple[str, ...]]:
        with self._lock:
            if "pred" not in self._cache:
                tab: dict[str, list[str]] = {s: [] for s in self.states}
                idx = {s: i for i, s in enumerate(self.states)}
                for (a, b) in sorted(self.edges, key=lambda e: (idx[e[0]], idx[e[1]])):
                    tab[b].append(a)
                self._cache["pred"] = {s: tuple(v) for s, v in tab.items()}
            return self._cache["pred"]

    def _check_state(self, x: str) -> None:
        if x not in self.index:
            raise KripkeError(f"unknown state {x!r}")

    def successors(self, x: str) -> frozenset[str]:
        self._check_state(x)
        return frozenset(self._succ_table()[x])

    def successors_ordered(self, x: str) -> tuple[str, ...]:
        """Successors sorted by state declaration index (stable emission order)."""
        self._check_state(x)
        return self._succ_table()[x]

    def predecessors(self, x: str) -> frozenset[str]:
        self._check_state(x)
        return frozenset(self._pred_table()[x])

    def reachable_closure(self, x: str) -> frozenset[str]:
        """States reachable from x through E*, reflexively (always contains x)."""
        self._check_state(x)
        with self._lock:
            memo = self._cache.setdefault("closure", {})
            if x in memo:
                return memo[x]
        succ = self._succ_table()
        seen = {x}
        stack = [x]
        while stack:
            for t in succ[stack.pop()]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        res = frozenset(seen)
        with self._lock:
            self._cache["closure"][x] = res
        return res

    def closure_ordered(self, x: str) -> tuple[str, ...]:
        """reachable_closure(x) sorted by declaration index."""
        idx = self.index
        return tuple(sorted(self.reachable_closure(x), key=idx.__getitem__))

    # -- bitmask views (declaration order, bit i = state i) ----------------

    def succ_masks(self) -> list[int]:
        with self._lock:
            if "succ_masks" not in self._cache:
                idx = {s: i for i, s in enumerate(self.states)}
                masks = [0] * len(self.states)
                for (a, b) in self.edges:
                    masks[idx[a]] |= 1 << idx[b]
                self._cache["succ_masks"] = masks
            return self._cache["succ_masks"]

    def label_mask(self, prop: str) -> int:
        mask = 0
        for i, s in enumerate(self.states):
            if prop in self.labels[s]:
                mask |= 1 << i
        return mask

    def closure_mask(self, x: str) -> int:
        idx = self.index
        mask = 0
        for s in self.reachable_closure(x):
            mask |= 1 << idx[s]
        return mask


# -- .kri text format -------------------------------------------------------


def parse_kripke(text: str) -> KripkeStructure:
    """Parse the line-oriented .kri format (see serialize_kripke)."""
    states: list[str] = []
    initial: str | None = None
    labels: dict[str, set[str]] = {}
    edges: set[tuple[str, str]] = set()
    seen_sections: set[str] = set()

    def err(msg: str, lineno: int, col: int = 1):
        raise KriParseError(msg, lineno, col)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if ":" not in line:
            err("expected '<section>: ...'", lineno)
        key, rest = line.split(":", 1)
        key = key.strip()
        if key == "states":
            if "states" in seen_sections:
                err("duplicate states section", lineno)
            seen_sections.add("states")
            for tok in rest.split():
                if not _is_ident(tok):
                    err(f"bad state id {tok!r}", lineno, raw.find(tok) + 1)
                states.append(tok)
        elif key == "init":
            if "init" in seen_sections:
                err("duplicate init section", lineno)
            seen_sections.add("init")
            toks = rest.split()
            if len(toks) != 1:
                err("init takes exactly one state", lineno)
            initial = toks[0]
        elif key == "labels":
            seen_sections.add("labels")
            for group in rest.split(";"):
                group = group.strip()
                if not group:
                    continue
                if ":" not in group:
                    err(f"bad label group {group!r} (want '<state>: <props>')", lineno)
                st, props = group.split(":", 1)
                st = st.strip()
                if not _is_ident(st):
                    err(f"bad state id {st!r}", lineno)
                bucket = labels.setdefault(st, set())
                for p in props.split():
                    if not _is_ident(p):
                        err(f"bad proposition {p!r}", lineno)
                    bucket.add(p)
        elif key == "edges":
            seen_sections.add("edges")
            for tok in rest.split():
                if "->" not in tok:
                    err(f"bad edge {tok!r} (want 'a->b')", lineno, raw.find(tok) + 1)
                a, b = tok.split("->", 1)
                if not _is_ident(a) or not _is_ident(b):
                    err(f"bad edge {tok!r}", lineno, raw.find(tok) + 1)
                edges.add((a, b))
        else:
            err(f"unknown section {key!r}", lineno)

    if "states" not in seen_sections:
        raise KriParseError("missing states section", 1, 1)
    if initial is None:
        raise KriParseError("missing init section", 1, 1)
    try:
        return KripkeStructure(
            states=tuple(states),
            edges=frozenset(edges),
            labels={s: frozenset(ps) for s, ps in labels.items()},
            initial=initial,
        )
    except KripkeError:
        raise


def serialize_kripke(k: KripkeStructure) -> str:
    """Emit .kri text: states in declaration order, edges sorted, stable bytes."""
    lines = ["states: " + " ".join(k.states), f"init: {k.initial}"]
    groups = []
    for s in k.states:
        ps = sorted(k.labels[s])
        if ps:
            groups.append(f"{s}: " + " ".join(ps))
    if groups:
        lines.append("labels: " + " ; ".join(groups))
    lines.append("edges: " + " ".join(f"{a}->{b}" for a, b in sorted(k.edges)))
    return "\n".join(lines) + "\n"


# -- vertex connectivity -----------------------------------------------------


def vertex_connectivity(k: KripkeStructure, src: str, dst: str) -> float:
    """Max number of internally vertex-disjoint src-dst paths, undirected view.

    Adjacent endpoints admit arbitrarily many internally disjoint paths
    (the edge itself has no internal vertex), so math.inf is returned.
    Otherwise: max-flow on the split-vertex graph (Menger).
    """
    k._check_state(src)
    k._check_state(dst)
    if src == dst:
        raise KripkeError("src and dst must differ")
    und = set()
    for (a, b) in k.edges:
        und.add((a, b))
        und.add((b, a))
    if (src, dst) in und:
        return math.inf
    g = nx.DiGraph()
    for s in k.states:
        if s in (src, dst):
            continue
        g.add_edge(f"{s}#in", f"{s}#out", capacity=1)
    big = len(k.states) + 1

    def tail(s: str) -> str:
        return s if s in (src, dst) else f"{s}#out"

    def head(s: str) -> str:
        return s if s in (src, dst) else f"{s}#in"

    for (a, b) in und:
        if a == b:
            continue
        g.add_edge(tail(a), head(b), capacity=big)
    if dst not in g or src not in g:
        return 0.0
    return float(nx.maximum_flow_value(g, src, dst))
