"""Ground-truth evaluators: direct QCTL semantics by enumeration, a naive
closed-QBF evaluator, and direct sabotage-logic semantics.

These are the desk-scale arbiters everything else is tested against; they
never share code with the reduction pipeline.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from . import qctl as q
from .kripke import KripkeStructure
from .qbf import (CTRUE, CFALSE, CAnd, CNode, CNot, COr, CQuant, CVar,
                  QbfCircuit, _CConst)

__all__ = [
    "BudgetExceeded", "OracleTimeout",
    "Environment", "mc_qctl", "holds", "eval_qbf", "mc_sml",
]


class BudgetExceeded(RuntimeError):
    """The instance is too large for exhaustive evaluation."""


class OracleTimeout(RuntimeError):
    pass


Environment = dict[str, frozenset[str]]  # prop -> labelled states


# -- QCTL semantics by enumeration --------------------------------------------


def mc_qctl(k: KripkeStructure, phi: q.Formula, env: Environment | None = None,
            budget: int = 2_000_000) -> frozenset[str]:
    """Exact satisfaction set of phi, quantifiers by labelling enumeration.

    env maps already-quantified propositions to state sets; propositions
    outside env are read from the structure's labelling.  budget bounds the
    number of internal Sat computations (plain quantifiers cost 2^|V| each).
    """
    n = len(k.states)
    full = (1 << n) - 1
    idx = k.index
    succ = k.succ_masks()
    closures = [k.closure_mask(s) for s in k.states]
    pred_of_mask_cache: dict[int, int] = {}

    def pre_exists(mask: int) -> int:
        got = pred_of_mask_cache.get(mask)
        if got is None:
            got = 0
            for i in range(n):
                if succ[i] & mask:
                    got |= 1 << i
            pred_of_mask_cache[mask] = got
        return got

    def pre_forall(mask: int) -> int:
        out = 0
        for i in range(n):
            if succ[i] & ~mask == 0:
                out |= 1 << i
        return out

    def eu(phi_m: int, psi_m: int) -> int:
        cur = psi_m
        while True:
            nxt = cur | (phi_m & pre_exists(cur))
            if nxt == cur:
                return cur
            cur = nxt

    def au(phi_m: int, psi_m: int) -> int:
        cur = psi_m
        while True:
            nxt = cur | (phi_m & pre_forall(cur))
            if nxt == cur:
                return cur
            cur = nxt

    def uniq_mask(labelled: int) -> int:
        # states from which exactly one labelled state is reachable
        out = 0
        for i in range(n):
            reach = closures[i] & labelled
            if reach and reach & (reach - 1) == 0:
                out |= 1 << i
        return out

    calls = 0
    free_cache: dict[int, frozenset[str]] = {}

    def free_props(f: q.Formula) -> frozenset[str]:
        got = free_cache.get(id(f))
        if got is None:
            got = q.atoms_of(f)
            free_cache[id(f)] = got
        return got

    memo: dict[tuple, int] = {}

    def sat(f: q.Formula, e: dict[str, int]) -> int:
        nonlocal calls
        calls += 1
        if calls > budget:
            raise BudgetExceeded(f"oracle budget of {budget} Sat computations hit")
        key = (id(f), tuple(sorted((p, m) for p, m in e.items()
                                   if p in free_props(f))))
        got = memo.get(key)
        if got is not None:
            return got
        res = _sat(f, e)
        memo[key] = res
        return res

    def _sat(f: q.Formula, e: dict[str, int]) -> int:
        if isinstance(f, q.Atom):
            if f.name in e:
                return e[f.name]
            return k.label_mask(f.name)
        if isinstance(f, q.TrueF):
            return full
        if isinstance(f, q.FalseF):
            return 0
        if isinstance(f, q.Uniq):
            if f.prop in e:
                return uniq_mask(e[f.prop])
            return uniq_mask(k.label_mask(f.prop))
        if isinstance(f, q.Not):
            return full & ~sat(f.arg, e)
        if isinstance(f, q.And):
            return sat(f.left, e) & sat(f.right, e)
        if isinstance(f, q.Or):
            return sat(f.left, e) | sat(f.right, e)
        if isinstance(f, q.Implies):
            return (full & ~sat(f.left, e)) | sat(f.right, e)
        if isinstance(f, q.Iff):
            a, b = sat(f.left, e), sat(f.right, e)
            return full & ~(a ^ b)
        if isinstance(f, q.EX):
            return pre_exists(sat(f.arg, e))
        if isinstance(f, q.AX):
            return pre_forall(sat(f.arg, e))
        if isinstance(f, q.EF):
            return eu(full, sat(f.arg, e))
        if isinstance(f, q.AF):
            return au(full, sat(f.arg, e))
        if isinstance(f, q.EG):
            return full & ~au(full, full & ~sat(f.arg, e))
        if isinstance(f, q.AG):
            return full & ~eu(full, full & ~sat(f.arg, e))
        if isinstance(f, q.EU):
            return eu(sat(f.left, e), sat(f.right, e))
        if isinstance(f, q.AU):
            return au(sat(f.left, e), sat(f.right, e))
        if isinstance(f, q.EW):
            # E l W r == not A (~r) U (~r & ~l)
            l, r = sat(f.left, e), sat(f.right, e)
            return full & ~au(full & ~r, full & ~r & ~l)
        if isinstance(f, q.AW):
            l, r = sat(f.left, e), sat(f.right, e)
            return full & ~eu(full & ~r, full & ~r & ~l)
        if isinstance(f, q.Exists):
            out = 0
            for mask in range(1 << n):
                e2 = dict(e)
                e2[f.prop] = mask
                out |= sat(f.body, e2)
                if out == full:
                    break
            return out
        if isinstance(f, q.Forall):
            out = full
            for mask in range(1 << n):
                e2 = dict(e)
                e2[f.prop] = mask
                out &= sat(f.body, e2)
                if out == 0:
                    break
            return out
        if isinstance(f, q.Exists1):
            # restricting to singleton labellings is sound: truth at x only
            # depends on labels inside closure(x), where the uniq guard pins
            # exactly one labelled state
            out = 0
            for i in range(n):
                e2 = dict(e)
                e2[f.prop] = 1 << i
                reachers = 0
                for j in range(n):
                    if closures[j] >> i & 1:
                        reachers |= 1 << j
                out |= reachers & sat(f.body, e2)
                if out == full:
                    break
            return out
        if isinstance(f, q.Forall1):
            out = full
            for i in range(n):
                e2 = dict(e)
                e2[f.prop] = 1 << i
                reachers = 0
                for j in range(n):
                    if closures[j] >> i & 1:
                        reachers |= 1 << j
                out &= (full & ~reachers) | sat(f.body, e2)
                if out == 0:
                    break
            return out
        raise TypeError(f"unknown node {f!r}")

    env_masks: dict[str, int] = {}
    for p, states in (env or {}).items():
        m = 0
        for s in states:
            m |= 1 << idx[s]
        env_masks[p] = m
    res = sat(phi, env_masks)
    return frozenset(s for i, s in enumerate(k.states) if res >> i & 1)


def holds(k: KripkeStructure, x: str, phi: q.Formula,
          env: Environment | None = None, budget: int = 2_000_000) -> bool:
    k._check_state(x)
    return x in mc_qctl(k, phi, env, budget)


# -- naive closed-QBF evaluation ----------------------------------------------


class _Hc:
    """Hash-consed rebuild of a circuit so equal subcircuits share identity."""

    def __init__(self):
        self.table: dict[tuple, CNode] = {}

    def mk(self, key: tuple, build) -> CNode:
        got = self.table.get(key)
        if got is None:
            got = build()
            self.table[key] = got
        return got

    def var(self, name: str) -> CNode:
        return self.mk(("v", name), lambda: CVar(name))

    def not_(self, a: CNode) -> CNode:
        if a is CTRUE:
            return CFALSE
        if a is CFALSE:
            return CTRUE
        if isinstance(a, CNot):
            return a.arg
        return self.mk(("n", id(a)), lambda: CNot(a))

    def and_(self, args: list[CNode]) -> CNode:
        flat: list[CNode] = []
        seen: set[int] = set()
        for a in args:
            if a is CFALSE:
                return CFALSE
            if a is CTRUE:
                continue
            if isinstance(a, CAnd):
                for b in a.args:
                    if id(b) not in seen:
                        seen.add(id(b))
                        flat.append(b)
            elif id(a) not in seen:
                seen.add(id(a))
                flat.append(a)
        for a in flat:
            if isinstance(a, CNot) and id(a.arg) in seen:
                return CFALSE
        if not flat:
            return CTRUE
        if len(flat) == 1:
            return flat[0]
        key = ("a",) + tuple(sorted(id(x) for x in flat))
        return self.mk(key, lambda: CAnd(tuple(flat)))

    def or_(self, args: list[CNode]) -> CNode:
        flat: list[CNode] = []
        seen: set[int] = set()
        for a in args:
            if a is CTRUE:
                return CTRUE
            if a is CFALSE:
                continue
            if isinstance(a, COr):
                for b in a.args:
                    if id(b) not in seen:
                        seen.add(id(b))
                        flat.append(b)
            elif id(a) not in seen:
                seen.add(id(a))
                flat.append(a)
        for a in flat:
            if isinstance(a, CNot) and id(a.arg) in seen:
                return CTRUE
        if not flat:
            return CFALSE
        if len(flat) == 1:
            return flat[0]
        key = ("o",) + tuple(sorted(id(x) for x in flat))
        return self.mk(key, lambda: COr(tuple(flat)))

    def quant(self, kind: str, names: tuple[str, ...], body: CNode) -> CNode:
        if body is CTRUE or body is CFALSE or not names:
            return body
        key = ("q", kind, names, id(body))
        return self.mk(key, lambda: CQuant(kind, names, body))


class _Evaluator:
    def __init__(self, deadline: float | None):
        self.hc = _Hc()
        self.deadline = deadline
        self.solve_memo: dict[int, bool] = {}
        self.kind_of: dict[str, str] = {}

    def intern(self, node: CNode) -> CNode:
        """Hash-consed negation normal form: negation only on variables,
        quantifier kinds flipped when a negation crosses them."""
        memo: dict[tuple[int, bool], CNode] = {}

        def go(nd: CNode, neg: bool) -> CNode:
            key = (id(nd), neg)
            got = memo.get(key)
            if got is not None:
                return got
            if isinstance(nd, CVar):
                v = self.hc.var(nd.name)
                out = self.hc.not_(v) if neg else v
            elif isinstance(nd, _CConst):
                out = CFALSE if nd.value == neg else CTRUE
            elif isinstance(nd, CNot):
                out = go(nd.arg, not neg)
            elif isinstance(nd, CAnd):
                kids = [go(a, neg) for a in nd.args]
                out = self.hc.or_(kids) if neg else self.hc.and_(kids)
            elif isinstance(nd, COr):
                kids = [go(a, neg) for a in nd.args]
                out = self.hc.and_(kids) if neg else self.hc.or_(kids)
            elif isinstance(nd, CQuant):
                kind = nd.kind
                if neg:
                    kind = "forall" if kind == "exists" else "exists"
                for v in nd.vars:
                    self.kind_of[v] = kind
                out = self.make_quant(kind, nd.vars, go(nd.body, neg))
            else:
                raise TypeError(f"unknown node {nd!r}")
            memo[key] = out
            return out

        return go(node, False)

    def make_quant(self, kind: str, names, body: CNode) -> CNode:
        """Quantifier gate with local literal elimination.

        A root conjunct literal over a bound variable forces it (for the
        existential kind) or falsifies the gate (universal); a root disjunct
        literal satisfies the gate (existential) or lets the universal side
        pick the falsifying value.  Elimination cascades: substituting one
        variable can expose the next literal of a constraint chain.
        """
        live = [v for v in names if v in self.vars_of(body)]
        while live and body not in (CTRUE, CFALSE):
            bound = set(live)
            hit = None
            for name, val in _root_literals(body, CAnd).items():
                if name in bound:
                    hit = (name, val, "and")
                    break
            if hit is None:
                for name, val in _root_literals(body, COr).items():
                    if name in bound:
                        hit = (name, val, "or")
                        break
            if hit is None:
                break
            name, val, where = hit
            if where == "and":
                if kind == "forall":
                    return CFALSE
                body = self.cofactor(body, name, val)
            else:
                if kind == "exists":
                    return CTRUE
                body = self.cofactor(body, name, not val)
            live = [v for v in live if v in self.vars_of(body)]
        if body in (CTRUE, CFALSE) or not live:
            return body
        return self.hc.quant(kind, tuple(live), body)

    def vars_of(self, node: CNode) -> frozenset[str]:
        cache = getattr(self, "_vars_cache", None)
        if cache is None:
            cache = self._vars_cache = {}
        got = cache.get(id(node))
        if got is not None:
            return got
        if isinstance(node, CVar):
            out = frozenset((node.name,))
        elif isinstance(node, _CConst):
            out = frozenset()
        elif isinstance(node, CNot):
            out = self.vars_of(node.arg)
        elif isinstance(node, (CAnd, COr)):
            out = frozenset().union(*(self.vars_of(a) for a in node.args))
        else:
            out = self.vars_of(node.body) | frozenset(node.vars)
        cache[id(node)] = out
        return out

    def cofactor(self, node: CNode, var: str, val: bool) -> CNode:
        memo: dict[int, CNode] = {}
        hc = self.hc

        def go(nd: CNode) -> CNode:
            if var not in self.vars_of(nd):
                return nd
            got = memo.get(id(nd))
            if got is not None:
                return got
            if isinstance(nd, CVar):
                out = CTRUE if val else CFALSE
            elif isinstance(nd, CNot):
                out = hc.not_(go(nd.arg))
            elif isinstance(nd, CAnd):
                out = hc.and_([go(a) for a in nd.args])
            elif isinstance(nd, COr):
                out = hc.or_([go(a) for a in nd.args])
            else:
                out = self.make_quant(nd.kind, nd.vars, go(nd.body))
            memo[id(nd)] = out
            return out

        return go(node)

    def _check_time(self):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise OracleTimeout("naive QBF evaluation timed out")

    def solve(self, node: CNode) -> bool:
        """Validity of a closed interned circuit."""
        if node is CTRUE:
            return True
        if node is CFALSE:
            return False
        got = self.solve_memo.get(id(node))
        if got is not None:
            return got
        self._check_time()
        res = self._solve(node)
        self.solve_memo[id(node)] = res
        return res

    def _solve(self, node: CNode) -> bool:
        # peel the top quantifier chain
        blocks: list[tuple[str, list[str]]] = []
        matrix = node
        while isinstance(matrix, CQuant):
            live = [v for v in matrix.vars if v in self.vars_of(matrix.body)]
            if live:
                blocks.append((matrix.kind, live))
            matrix = matrix.body
        if matrix is CTRUE:
            return True
        if matrix is CFALSE:
            return False
        if not blocks:
            # closed but not constant: every remaining variable sits under an
            # inner quantifier; evaluate maximal quantifier subnodes
            return self.solve(self._collapse_inner(matrix))

        # unit propagation on root-level conjunct/disjunct literals
        units = _root_literals(matrix, CAnd)
        if units:
            for name, val in units.items():
                if self.kind_of.get(name) == "forall":
                    return False  # a universal literal forced by a conjunct
                matrix = self.cofactor(matrix, name, val)
            return self.solve(self._requant(blocks, matrix))
        for name, val in _root_literals(matrix, COr).items():
            if self.kind_of.get(name) == "exists":
                return True  # an existential can satisfy the disjunction alone
            # a universal disjunct: the adversary falsifies it outright
            matrix = self.cofactor(matrix, name, not val)
            return self.solve(self._requant(blocks, matrix))

        kind, names = blocks[0]
        var = self._pick(names, matrix)
        rest_names = [v for v in names if v != var]
        rest = ([(kind, rest_names)] if rest_names else []) + blocks[1:]
        lo = self.solve(self._requant(rest, self.cofactor(matrix, var, False)))
        if kind == "exists" and lo:
            return True
        if kind == "forall" and not lo:
            return False
        return self.solve(self._requant(rest, self.cofactor(matrix, var, True)))

    def _requant(self, blocks: list[tuple[str, list[str]]], matrix: CNode) -> CNode:
        out = matrix
        for kind, names in reversed(blocks):
            out = self.make_quant(kind, names, out)
        return out

    def _pick(self, names: list[str], matrix: CNode) -> str:
        if len(names) == 1:
            return names[0]
        counts: dict[str, int] = {v: 0 for v in names}
        pool = set(names)
        seen: set[int] = set()
        stack = [matrix]
        while stack:
            nd = stack.pop()
            if id(nd) in seen:
                continue
            seen.add(id(nd))
            if isinstance(nd, CVar):
                if nd.name in pool:
                    counts[nd.name] += 1
            elif isinstance(nd, CNot):
                stack.append(nd.arg)
            elif isinstance(nd, (CAnd, COr)):
                stack.extend(nd.args)
            elif isinstance(nd, CQuant):
                stack.append(nd.body)
        return max(names, key=lambda v: counts[v])

    def _collapse_inner(self, matrix: CNode) -> CNode:
        """Replace maximal inner quantifier nodes by their solved constants."""
        memo: dict[int, CNode] = {}
        hc = self.hc

        def go(nd: CNode) -> CNode:
            got = memo.get(id(nd))
            if got is not None:
                return got
            if isinstance(nd, CQuant):
                out = CTRUE if self.solve(nd) else CFALSE
            elif isinstance(nd, CNot):
                out = hc.not_(go(nd.arg))
            elif isinstance(nd, CAnd):
                out = hc.and_([go(a) for a in nd.args])
            elif isinstance(nd, COr):
                out = hc.or_([go(a) for a in nd.args])
            elif isinstance(nd, CVar):
                raise ValueError(f"free variable {nd.name!r} in closed circuit")
            else:
                out = nd
            memo[id(nd)] = out
            return out

        return go(matrix)


def _root_literals(matrix: CNode, cls) -> dict[str, bool]:
    """Literal children of a root and()/or() node, or the root literal itself.

    Conflicting literal pairs cannot occur here: the hash-consing builders
    fold v & ~v / v | ~v to a constant.
    """
    out: dict[str, bool] = {}
    args: tuple[CNode, ...]
    if isinstance(matrix, (CVar, CNot)):
        args = (matrix,)
    elif isinstance(matrix, cls):
        args = matrix.args
    else:
        return out
    for a in args:
        if isinstance(a, CVar):
            out[a.name] = True
        elif isinstance(a, CNot) and isinstance(a.arg, CVar):
            out[a.arg.name] = False
    return out


def eval_qbf(circuit: QbfCircuit, var_cap: int = 24,
             timeout: float | None = None) -> bool:
    """Validity of a closed circuit by recursive quantifier expansion.

    Propagates forced literals and memoizes on hash-consed subcircuits, so
    structured instances collapse far below the 2^vars worst case.  var_cap
    bounds the number of *occurring* quantified variables.
    """
    circuit.check_closed()
    ev = _Evaluator(time.monotonic() + timeout if timeout else None)
    root = ev.intern(circuit.root)
    occupied = ev.vars_of(root)
    if len(occupied) > var_cap:
        raise BudgetExceeded(
            f"{len(occupied)} variables exceed the configured cap of {var_cap}")
    return ev.solve(root)


# -- sabotage modal logic ------------------------------------------------------


def mc_sml(k: KripkeStructure, x: str, phi, deleted: frozenset = frozenset()) -> bool:
    """Direct recursive SML semantics; deleted edges are removed from E.

    Totality may break under deletion; a diamond over a dead end is simply
    false, its box dual true.
    """
    from . import sml as s

    k._check_state(x)
    edges = frozenset(k.edges) - deleted

    def ev(state: str, f, es: frozenset) -> bool:
        if isinstance(f, s.SAtom):
            return f.name in k.labels[state]
        if isinstance(f, s.STrue):
            return True
        if isinstance(f, s.SNot):
            return not ev(state, f.arg, es)
        if isinstance(f, s.SAnd):
            return ev(state, f.left, es) and ev(state, f.right, es)
        if isinstance(f, s.SDiamond):
            return any(ev(b, f.arg, es) for (a, b) in es if a == state)
        if isinstance(f, s.SBox):
            return all(ev(b, f.arg, es) for (a, b) in es if a == state)
        if isinstance(f, s.SSabDiamond):
            return any(ev(state, f.arg, es - {e}) for e in es)
        if isinstance(f, s.SSabBox):
            return all(ev(state, f.arg, es - {e}) for e in es)
        if isinstance(f, s.SLocalSabDiamond):
            return any(ev(state, f.arg, es - {e}) for e in es if e[0] == state)
        if isinstance(f, s.SLocalSabBox):
            return all(ev(state, f.arg, es - {e}) for e in es if e[0] == state)
        raise TypeError(f"unknown SML node {f!r}")

    return ev(x, phi, edges)
