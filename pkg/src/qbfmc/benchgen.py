"""Deterministic generators for the four benchmark families.

Every instance carries an expected verdict derived from a family law or a
small-scale combinatorial oracle, never asserted blindly; generators with a
structural contract (the connectivity family) assert it before returning.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

from . import qctl as q
from .kripke import KripkeStructure, serialize_kripke, vertex_connectivity

__all__ = [
    "BenchInstance", "GeneratorError",
    "gen_reset", "gen_kconn", "gen_nim", "gen_resources",
    "write_instance", "read_instance",
]


class GeneratorError(ValueError):
    pass


@dataclass(frozen=True)
class BenchInstance:
    name: str
    structure: KripkeStructure
    formula: q.Formula
    expected: bool | None  # None: could not be determined at this scale
    provenance: str
    params: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.structure.states)


# -- reset property ------------------------------------------------------------


def gen_reset(n: int, k: int, m: int) -> BenchInstance:
    """Root plus n cycles of length k; the formula marks m states and asks
    that every reachable state can reach a marked one.  Holds iff m >= n:
    the cycles are mutually unreachable, so each needs its own mark."""
    if n < 1 or k < 1 or m < 1:
        raise GeneratorError("need n, k, m >= 1")
    states = ["r"]
    edges = set()
    for i in range(1, n + 1):
        cyc = [f"q{i}_{j}" for j in range(1, k + 1)]
        states += cyc
        edges.add(("r", cyc[0]))
        for a, b in zip(cyc, cyc[1:]):
            edges.add((a, b))
        edges.add((cyc[-1], cyc[0]))
    struct = KripkeStructure(tuple(states), frozenset(edges), {}, "r")
    props = [f"p{i}" for i in range(1, m + 1)]
    body = q.AG(q.EF(q.big_or([q.Atom(p) for p in props])))
    phi = body
    for p in reversed(props):
        phi = q.Exists1(p, phi)
    return BenchInstance(
        name=f"reset_n{n}_k{k}_m{m}",
        structure=struct, formula=phi, expected=m >= n,
        provenance="family law: valid iff m >= n (one mark per cycle)",
        params={"n": n, "k": k, "m": m})


# -- k-connectivity -------------------------------------------------------------


def _grid(prefix: str, n: int) -> tuple[list[str], set[tuple[str, str]]]:
    names = [f"{prefix}{i}_{j}" for i in range(1, n + 1) for j in range(1, n + 1)]
    edges: set[tuple[str, str]] = set()

    def at(i, j):
        return f"{prefix}{i}_{j}"

    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if j < n:
                edges.add((at(i, j), at(i, j + 1)))
            if i < n:
                edges.add((at(i, j), at(i + 1, j)))
    return names, edges


def gen_kconn(n: int, m: int, k: int, variant: str = "psi") -> BenchInstance:
    """Two n-by-n undirected grids joined by m connector edges; the formula
    asks for k internally disjoint paths between the fanned corners, so it
    holds iff k <= m (Menger).  The generator refuses to emit unless the
    split-vertex max-flow between the corners is exactly m."""
    if not (n >= m >= 1) or n < 2 or k < 1:
        raise GeneratorError("need n >= m >= 1, n >= 2, k >= 1")
    if variant not in ("psi", "phi"):
        raise GeneratorError("variant must be psi or phi")
    qn, qe = _grid("q", n)
    rn, re_ = _grid("r", n)
    und = qe | re_
    src, dst = "q1_1", f"r{n}_{n}"
    # corner fans: src to its whole first row/column, dst to its last ones
    for j in range(2, n + 1):
        und.add((src, f"q1_{j}"))
        und.add((src, f"q{j}_1"))
    for j in range(1, n):
        und.add((f"r{n}_{j}", dst))
        und.add((f"r{j}_{n}", dst))
    # m connectors; the index runs on through the second family so endpoint
    # rows/columns never collide
    half = math.ceil(m / 2)
    for i in range(1, half + 1):
        und.add((f"q{i}_{n}", f"r1_{i}"))
    for i in range(half + 1, m + 1):
        und.add((f"q{n}_{i}", f"r{i}_1"))
    edges = set()
    for a, b in und:
        edges.add((a, b))
        edges.add((b, a))
    struct = KripkeStructure(tuple(qn + rn), frozenset(edges),
                             {dst: frozenset(("y",))}, src)
    conn = vertex_connectivity(struct, src, dst)
    if conn != m:
        raise GeneratorError(
            f"connector layout gives connectivity {conn}, wanted {m}")
    props = [f"p{i}" for i in range(1, k)]
    avoid_all = q.big_and([q.Not(q.Atom(p)) for p in props])
    if variant == "psi":
        phi = q.EX(q.EU(avoid_all, q.Atom("y")))
        for p in reversed(props):
            phi = q.Forall1(p, phi)
    else:
        marked = [
            q.EX(q.EU(q.big_and([q.Atom(props[i])] +
                                [q.Not(q.Atom(props[j]))
                                 for j in range(k - 1) if j != i]),
                      q.Atom("y")))
            for i in range(k - 1)
        ]
        phi = q.big_and(marked + [q.EX(q.EU(avoid_all, q.Atom("y")))])
        for p in reversed(props):
            phi = q.Exists(p, phi)
    return BenchInstance(
        name=f"kconn_n{n}_m{m}_k{k}_{variant}",
        structure=struct, formula=phi, expected=k <= m,
        provenance=f"Menger: valid iff k <= max-flow = {m} (asserted)",
        params={"n": n, "m": m, "k": k, "variant": variant})


# -- nim ------------------------------------------------------------------------


def _nim_succs(cfg: tuple[int, ...]) -> list[tuple[int, ...]]:
    out = set()
    for i, h in enumerate(cfg):
        for take in range(1, h + 1):
            rest = list(cfg[:i] + cfg[i + 1:])
            if h - take > 0:
                rest.append(h - take)
            out.add(tuple(sorted(rest)))
    return sorted(out)


def _cfg_id(cfg: tuple[int, ...], turn: int) -> str:
    body = "_".join(map(str, cfg)) if cfg else "0"
    return f"c{body}__t{turn}"


def gen_nim(heaps: list[int], player: int = 1) -> BenchInstance:
    """Take-away game graph.  Configuration states are all (sub-multiset,
    turn) pairs of the initial heaps; moves of the chosen player pass
    through pair-keyed intermediary states so that marking an intermediary
    selects one concrete move.  The first player to move wins iff the heap
    xor is nonzero, which fixes the expected verdict."""
    if not heaps or any(h < 1 for h in heaps):
        raise GeneratorError("heaps must be non-empty positive counts")
    if player not in (1, 2):
        raise GeneratorError("player must be 1 or 2")
    init = tuple(sorted(heaps))
    cfgs = sorted(
        {tuple(sorted(x for x in combo if x > 0))
         for combo in itertools.product(*[range(0, h + 1) for h in init])},
        key=lambda c: (-sum(c), c))
    states: list[str] = []
    edges: set[tuple[str, str]] = set()
    labels: dict[str, frozenset[str]] = {}
    for cfg in cfgs:
        for turn in (1, 2):
            states.append(_cfg_id(cfg, turn))
    for cfg in cfgs:
        for turn in (1, 2):
            sid = _cfg_id(cfg, turn)
            lab = {f"t{turn}"}
            if not cfg:
                lab.add("w1" if turn == 2 else "w2")
                edges.add((sid, sid))
                labels[sid] = frozenset(lab)
                continue
            labels[sid] = frozenset(lab)
            nturn = 2 if turn == 1 else 1
            for nxt in _nim_succs(cfg):
                tgt = _cfg_id(nxt, nturn)
                if turn == player:
                    mid = f"i{sid[1:]}__{tgt[1:]}"
                    states.append(mid)
                    labels[mid] = frozenset(("int",))
                    edges.add((sid, mid))
                    edges.add((mid, tgt))
                else:
                    edges.add((sid, tgt))
    struct = KripkeStructure(tuple(states), frozenset(edges), labels,
                             _cfg_id(init, 1))
    w, t = f"w{player}", f"t{player}"
    phi = q.Exists("m", q.And(
        q.AG(q.Implies(q.Atom(t), q.EX(q.Atom("m")))),
        q.AF(q.Or(q.Atom(w), q.And(q.Atom("int"), q.Not(q.Atom("m")))))))
    xor = 0
    for h in heaps:
        xor ^= h
    expected = (xor != 0) if player == 1 else (xor == 0)
    return BenchInstance(
        name=f"nim_{'-'.join(map(str, heaps))}_p{player}",
        structure=struct, formula=phi, expected=expected,
        provenance="xor criterion: the player to move wins iff xor != 0",
        params={"heaps": list(heaps), "player": player,
                "config_states": 2 * len(cfgs)})


# -- resources distribution -------------------------------------------------------


def gen_resources(n: int, m: int, k: int, d: int,
                  cover_budget: int = 200_000) -> BenchInstance:
    """Column-cyclic grid: every state reaches the whole next column.  The
    formula picks at most k target states and asks that every state reaches
    a target within d steps.  Expected verdict by exhaustive target search
    at desk scale, by the cyclic column-cover law above it."""
    if min(n, m, k, d) < 1:
        raise GeneratorError("need n, m, k, d >= 1")
    states = [f"q{i}_{j}" for j in range(1, m + 1) for i in range(1, n + 1)]
    edges = set()
    for j in range(1, m + 1):
        nxt = j + 1 if j < m else 1
        for i in range(1, n + 1):
            for i2 in range(1, n + 1):
                edges.add((f"q{i}_{j}", f"q{i2}_{nxt}"))
    struct = KripkeStructure(tuple(states), frozenset(edges), {}, "q1_1")
    props = [f"c{i}" for i in range(1, k + 1)]
    targets = q.big_or([q.Atom(p) for p in props])
    body = targets
    for _ in range(d):
        body = q.Or(targets, q.EX(body))
    phi = q.AG(body)
    for p in reversed(props):
        phi = q.Exists1(p, phi)
    expected, prov = _resources_expected(n, m, k, d, struct, cover_budget)
    return BenchInstance(
        name=f"resources_n{n}_m{m}_k{k}_d{d}",
        structure=struct, formula=phi, expected=expected, provenance=prov,
        params={"n": n, "m": m, "k": k, "d": d})


def _resources_expected(n: int, m: int, k: int, d: int,
                        struct: KripkeStructure, budget: int):
    nv = len(struct.states)
    kk = min(k, nv)
    if math.comb(nv, kk) <= budget:
        return (_cover_search(struct, kk, d),
                "exhaustive k-center cover search within radius d")
    if k < n:
        # with fewer targets than rows, each column needs a target column at
        # forward distance 1..d; cyclic arcs of length d cover m columns
        # iff k >= ceil(m/d)
        return (math.ceil(m / d) <= k,
                "cyclic column-cover law (k < n): valid iff k >= ceil(m/d)")
    return None, "too large for the cover oracle; no law applies (k >= n)"


def _cover_search(struct: KripkeStructure, k: int, d: int) -> bool:
    names = struct.states
    dist = []
    for s in names:
        dd = {s: 0}
        frontier = [s]
        step = 0
        while frontier and step < d:
            step += 1
            nxt = []
            for a in frontier:
                for b in struct.successors_ordered(a):
                    if b not in dd:
                        dd[b] = step
                        nxt.append(b)
            frontier = nxt
        dist.append(dd)
    reach = struct.reachable_closure(struct.initial)
    need = [i for i, s in enumerate(names) if s in reach]
    k = min(k, len(need))
    for targets in itertools.combinations(need, k):
        if all(any(names[i] in dist[t] for t in targets) for i in need):
            return True
    return False


# -- instance files ---------------------------------------------------------------


def write_instance(inst: BenchInstance, outdir) -> list[str]:
    """Write <name>.kri, <name>.qctl and <name>.expected.json; returns paths."""
    from pathlib import Path

    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    kri = out / f"{inst.name}.kri"
    fml = out / f"{inst.name}.qctl"
    exp = out / f"{inst.name}.expected.json"
    kri.write_text(serialize_kripke(inst.structure), encoding="utf-8")
    fml.write_text(q.unparse(inst.formula) + "\n", encoding="utf-8")
    verdict = {True: "valid", False: "invalid", None: "unknown"}[inst.expected]
    exp.write_text(json.dumps({
        "name": inst.name,
        "params": inst.params,
        "states": inst.size,
        "expected": verdict,
        "provenance": inst.provenance,
    }, indent=2) + "\n", encoding="utf-8")
    return [str(kri), str(fml), str(exp)]


def read_instance(stem) -> tuple[KripkeStructure, q.Formula, dict]:
    """Load the three files written by write_instance given their shared stem."""
    from pathlib import Path

    from .kripke import parse_kripke

    stem = Path(stem)
    struct = parse_kripke(stem.with_suffix(".kri").read_text(encoding="utf-8"))
    phi = q.parse_qctl(stem.with_suffix(".qctl").read_text(encoding="utf-8"))
    meta = json.loads(stem.with_suffix(".expected.json").read_text(encoding="utf-8"))
    return struct, phi, meta
