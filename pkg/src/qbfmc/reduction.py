"""The five QCTL-to-QBF reduction strategies.

Shared final step: hat_translate, the state-by-state unfolding of the
structure (disjunction over successors for EX, reachability closure for
EF/AG, visited-set recursion for the until modalities, one QBF variable per
quantified proposition and state).  The strategies differ only in the
formula preprocessing:

  uu   - no preprocessing (until unfolding may blow up factorially)
  fp   - fixpoint characterization of the until family
  fpf  - Boolean-scope prenexing + equivalence flattening, then fixpoints
  pnf  - NNF + implication flattening + chi-based least-fixpoint rewrite
         (prenex output)
  fbv  - NNF + implication flattening + distance bit vectors (prenex output,
         no quantifier alternation added)

Variable naming contract (bit-exact files depend on it):
  quantified prop p at state index i  ->  p__s<i>
  bit j of a vector marker           ->   p__b<j>__s<i>
  bit j of a uniq bit vector         ->   p__bv<j>
  least-fixpoint labelling           ->   chi__s<i>
  fresh markers                      ->   k1, k2, ...
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

from . import qctl as q
from .kripke import KripkeStructure
from .qbf import (CFALSE, CTRUE, CNode, QbfCircuit, cand, ciff, cimp, cnot,
                  cor, cquant, CVar)

__all__ = [
    "ReductionConfig", "ShapeError", "VarNamer",
    "UNIQ_QCTL", "UNIQ_DISJ", "UNIQ_BITVEC", "STRATEGIES",
    "hat_translate", "fpc", "replace_uw", "replace_uw2",
    "bitvec_eq", "bitvec_lt", "encode_uniq",
    "met_uu", "met_fp", "met_fpf", "met_pnf", "met_fbv", "reduce_to_qbf",
]

sys.setrecursionlimit(max(sys.getrecursionlimit(), 100_000))

UNIQ_QCTL = "qctl_definition"
UNIQ_DISJ = "explicit_disjunction"
UNIQ_BITVEC = "bitvector"
_UNIQ_MODES = (UNIQ_QCTL, UNIQ_DISJ, UNIQ_BITVEC)

STRATEGIES = ("uu", "fp", "fpf", "pnf", "fbv")


class ShapeError(ValueError):
    """Input does not have the flattened form a transform requires."""


@dataclass(frozen=True)
class ReductionConfig:
    strategy: str = "pnf"
    uniq_encoding: str = UNIQ_BITVEC
    fbv_bound: int | None = None  # None = |V| (exact); smaller = bounded mode

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.uniq_encoding not in _UNIQ_MODES:
            raise ValueError(f"unknown uniq encoding {self.uniq_encoding!r}")
        if self.fbv_bound is not None and self.fbv_bound < 1:
            raise ValueError("fbv_bound must be >= 1")


class VarNamer:
    """Deterministic, injective QBF variable naming."""

    @staticmethod
    def prop_at(prop: str, state_index: int) -> str:
        return f"{prop}__s{state_index}"

    @staticmethod
    def vector_bit(prop: str, bit: int) -> str:
        return f"{prop}__b{bit}"

    @staticmethod
    def uniq_bit(prop: str, bit: int) -> str:
        return f"{prop}__bv{bit}"


def _kbv(n: int) -> int:
    """Bits needed to encode 0..n."""
    return max(1, math.ceil(math.log2(n + 1)))


# -- bit-vector comparators (formula level, over per-state bit markers) -------


def bitvec_eq(name: str, d: int, k_bv: int) -> q.Formula:
    """[vector = d] as a conjunction of bit literals, bit 0 least significant."""
    if not 0 <= d < (1 << k_bv):
        raise ValueError(f"value {d} out of range for {k_bv} bits")
    parts = []
    for j in range(k_bv):
        bit = q.Atom(VarNamer.vector_bit(name, j))
        parts.append(bit if d >> j & 1 else q.Not(bit))
    return q.big_and(parts)


def bitvec_lt(name: str, d: int, k_bv: int) -> q.Formula:
    """[vector < d]: some bit position m has vector_m=0, d_m=1 and equal
    higher bits.  Empty disjunction (d = 0) is false."""
    if not 0 <= d < (1 << k_bv) + 1:
        raise ValueError(f"value {d} out of range for {k_bv} bits")
    terms = []
    for m in range(k_bv):
        if not d >> m & 1:
            continue
        conj = [q.Not(q.Atom(VarNamer.vector_bit(name, m)))]
        for j in range(m + 1, k_bv):
            bit = q.Atom(VarNamer.vector_bit(name, j))
            conj.append(bit if d >> j & 1 else q.Not(bit))
        terms.append(q.big_and(conj))
    return q.big_or(terms)


# -- the final translation (Table of state-by-state rules) ---------------------


_Scope = frozenset  # of (prop, variable-base) pairs


class _Hat:
    """Carries the memo table and the quantifier instantiation counters.

    A quantifier nested under a temporal modality is instantiated once per
    reachable state; each instantiation after the first renames its variable
    base (p, p__e1, p__e2, ...) so no QBF variable is ever bound twice.
    The scope maps each proposition in quantifier scope to its current base.
    """

    def __init__(self, k: KripkeStructure, bitvec_props: dict[str, int]):
        self.k = k
        self.idx = k.index
        self.bitvec = bitvec_props
        self.memo: dict[tuple, CNode] = {}
        self.inst: dict[int, dict] = {}

    def state_number_eq(self, base: str, prop: str, number: int) -> CNode:
        parts = []
        for j in range(self.bitvec[prop]):
            v = CVar(VarNamer.uniq_bit(base, j))
            parts.append(v if number >> j & 1 else cnot(v))
        return cand(parts)

    def uniq_circuit(self, prop: str, x: str, scope: _Scope) -> CNode:
        base = dict(scope).get(prop)
        if base is None:
            raise ShapeError(f"uniq over unquantified proposition {prop!r}")
        if prop in self.bitvec:
            return cor([self.state_number_eq(base, prop, self.idx[y])
                        for y in self.k.closure_ordered(x)])
        var = lambda s: CVar(VarNamer.prop_at(base, self.idx[s]))
        terms = []
        for y in self.k.closure_ordered(x):
            lits = [var(y)]
            lits += [cnot(var(z)) for z in self.k.states if z != y]
            terms.append(cand(lits))
        return cor(terms)

    def go(self, f: q.Formula, x: str, scope: _Scope) -> CNode:
        key = (id(f), x, scope)
        got = self.memo.get(key)
        if got is None:
            got = self._go(f, x, scope)
            self.memo[key] = got
        return got

    def _go(self, f: q.Formula, x: str, scope: _Scope) -> CNode:
        k = self.k
        if isinstance(f, q.Atom):
            base = dict(scope).get(f.name)
            if base is not None:
                if f.name in self.bitvec:
                    return self.state_number_eq(base, f.name, self.idx[x])
                return CVar(VarNamer.prop_at(base, self.idx[x]))
            return CTRUE if f.name in k.labels[x] else CFALSE
        if isinstance(f, q.TrueF):
            return CTRUE
        if isinstance(f, q.FalseF):
            return CFALSE
        if isinstance(f, q.Uniq):
            return self.uniq_circuit(f.prop, x, scope)
        if isinstance(f, q.Not):
            return cnot(self.go(f.arg, x, scope))
        if isinstance(f, q.And):
            return cand([self.go(f.left, x, scope), self.go(f.right, x, scope)])
        if isinstance(f, q.Or):
            return cor([self.go(f.left, x, scope), self.go(f.right, x, scope)])
        if isinstance(f, q.Implies):
            return cimp(self.go(f.left, x, scope), self.go(f.right, x, scope))
        if isinstance(f, q.Iff):
            return ciff(self.go(f.left, x, scope), self.go(f.right, x, scope))
        if isinstance(f, q.EX):
            return cor([self.go(f.arg, y, scope)
                        for y in k.successors_ordered(x)])
        if isinstance(f, q.AX):
            return cand([self.go(f.arg, y, scope)
                         for y in k.successors_ordered(x)])
        if isinstance(f, q.EF):
            return cor([self.go(f.arg, y, scope) for y in k.closure_ordered(x)])
        if isinstance(f, q.AG):
            return cand([self.go(f.arg, y, scope) for y in k.closure_ordered(x)])
        if isinstance(f, q.EU):
            return self.eu(f, x, scope, frozenset((x,)))
        if isinstance(f, q.AU):
            return self.au(f, x, scope, frozenset((x,)))
        if isinstance(f, (q.Exists, q.Forall)):
            kind = "exists" if isinstance(f, q.Exists) else "forall"
            sites = self.inst.setdefault(id(f), {})
            ordinal = sites.setdefault((x, scope), len(sites))
            base = f.prop if ordinal == 0 else f"{f.prop}__e{ordinal}"
            if f.prop in self.bitvec:
                names = [VarNamer.uniq_bit(base, j)
                         for j in range(self.bitvec[f.prop])]
            else:
                names = [VarNamer.prop_at(base, i)
                         for i in range(len(k.states))]
            inner = scope | {(f.prop, base)}
            inner -= {(p, b) for p, b in scope if p == f.prop and b != base}
            return cquant(kind, names, self.go(f.body, x, inner))
        if isinstance(f, (q.Exists1, q.Forall1, q.EW, q.AW, q.EG, q.AF)):
            raise ShapeError(
                f"{type(f).__name__} must be rewritten before translation")
        raise TypeError(f"unknown node {f!r}")

    def eu(self, f: q.EU, x: str, scope: _Scope, X: frozenset[str]) -> CNode:
        key = (id(f), x, scope, X)
        got = self.memo.get(key)
        if got is not None:
            return got
        step = [self.eu(f, y, scope, X | {y})
                for y in self.k.successors_ordered(x) if y not in X]
        res = cor([self.go(f.right, x, scope),
                   cand([self.go(f.left, x, scope), cor(step)])])
        self.memo[key] = res
        return res

    def au(self, f: q.AU, x: str, scope: _Scope, X: frozenset[str]) -> CNode:
        key = (id(f), x, scope, X)
        got = self.memo.get(key)
        if got is not None:
            return got
        succs = self.k.successors_ordered(x)
        if any(y in X for y in succs):
            # a loop closes here: along that path the right side must hold now
            res = self.go(f.right, x, scope)
        else:
            step = [self.au(f, y, scope, X | {y}) for y in succs]
            res = cor([self.go(f.right, x, scope),
                       cand([self.go(f.left, x, scope), cand(step)])])
        self.memo[key] = res
        return res


def hat_translate(phi: q.Formula, x: str, k: KripkeStructure,
                  quantified: frozenset[str] = frozenset(),
                  bitvec_props: dict[str, int] | None = None) -> CNode:
    """State-by-state translation of phi at x.

    Propositions in `quantified` translate to per-state variables, those in
    bitvec_props to state-number comparisons over a shared bit vector;
    everything else is evaluated against the structure's labelling.
    """
    k._check_state(x)
    scope = frozenset((p, p) for p in quantified)
    return _Hat(k, bitvec_props or {}).go(phi, x, scope)


# -- uniq handling -------------------------------------------------------------

_RESERVED_PROPS = frozenset({"chi"})


def _used_names(k: KripkeStructure, phi: q.Formula) -> set[str]:
    return set(k.props) | set(q.atoms_of(phi)) | set(_RESERVED_PROPS)


def _inline_uniq(phi: q.Formula) -> q.Formula:
    """Rewrite exists1/forall1 locally: E1 p.f -> E p.(uniq(p) & f)."""

    def go(f: q.Formula) -> q.Formula:
        if isinstance(f, q.Exists1):
            return q.Exists(f.prop, q.And(q.Uniq(f.prop), go(f.body)))
        if isinstance(f, q.Forall1):
            return q.Forall(f.prop, q.Implies(q.Uniq(f.prop), go(f.body)))
        return q._map_children(f, go)

    return go(phi)


def _expand_uniq_leaves(phi: q.Formula, used: set[str]) -> q.Formula:
    """Replace each uniq leaf by its counting-macro definition (encoding 1)."""

    def go(f: q.Formula) -> q.Formula:
        if isinstance(f, q.Uniq):
            fresh = q.fresh_name("u", used)
            return q.build_unique_F(q.Atom(f.prop), fresh)
        return q._map_children(f, go)

    return go(phi)


def _uniq_bitvec_props(phi: q.Formula, k: KripkeStructure) -> dict[str, int]:
    """Props bound by exists1/forall1 (after freshen, names are unambiguous)."""
    kb = _kbv(len(k.states))
    return {f.prop: kb for f in q.subformulas(phi)
            if isinstance(f, (q.Exists1, q.Forall1))}


def encode_uniq(prop: str, mode: str, k: KripkeStructure, *,
                state: str | None = None,
                quantified: frozenset[str] = frozenset(),
                fresh: str = "u") -> q.Formula | CNode:
    """The three encodings of `exactly one reachable state is labelled prop`.

    Mode 1 returns a formula (the counting macro); modes 2 and 3 return the
    circuit at `state`.  Mode 3 is only sound for propositions introduced by
    a uniq quantifier: the bit vector can name at most one state.
    """
    if mode == UNIQ_QCTL:
        return q.build_unique_F(q.Atom(prop), fresh)
    if state is None:
        raise ValueError("modes 2 and 3 need the evaluation state")
    if mode == UNIQ_DISJ:
        return _Hat(k, {}).uniq_circuit(prop, state, quantified | {prop})
    if mode == UNIQ_BITVEC:
        if prop in quantified:
            raise ShapeError(
                f"{prop!r} is also plainly quantified; bit vectors cannot "
                "encode multi-state labellings")
        return _Hat(k, {prop: _kbv(len(k.states))}).uniq_circuit(prop, state,
                                                                 frozenset())
    raise ValueError(f"unknown uniq mode {mode!r}")


# -- fixpoint characterization --------------------------------------------------


def fpc(phi: q.Formula, alloc: q.KappaAllocator | None = None) -> q.Formula:
    """Replace the until family by universally quantified fixpoint markers.

    E l U r becomes forall z.(AG(z <-> (r | (l & EX z))) -> z); likewise AU
    with AX.  EF/AF are the true-left cases, EG/EW/AW go through their
    until duals.  Output temporal operators: EX, AX, AG only.
    """
    if alloc is None:
        alloc = q.KappaAllocator(q.atoms_of(phi))

    def fix(kind, inner: q.Formula, left: q.Formula | None) -> q.Formula:
        name = alloc.fresh()
        z = q.Atom(name)
        step = kind(z)
        body = q.Or(inner, step) if left is None else q.Or(inner, q.And(left, step))
        return q.Forall(name, q.Implies(q.AG(q.Iff(z, body)), z))

    def go(f: q.Formula) -> q.Formula:
        if isinstance(f, q.EU):
            return fix(q.EX, go(f.right), go(f.left))
        if isinstance(f, q.AU):
            return fix(q.AX, go(f.right), go(f.left))
        if isinstance(f, q.EF):
            return fix(q.EX, go(f.arg), None)
        if isinstance(f, q.AF):
            return fix(q.AX, go(f.arg), None)
        if isinstance(f, q.EG):
            return q.Not(fix(q.AX, q.Not(go(f.arg)), None))
        if isinstance(f, q.EW):
            l, r = go(f.left), go(f.right)
            return q.Not(fix(q.AX, q.And(q.Not(r), q.Not(l)), q.Not(r)))
        if isinstance(f, q.AW):
            l, r = go(f.left), go(f.right)
            return q.Not(fix(q.EX, q.And(q.Not(r), q.Not(l)), q.Not(r)))
        return q._map_children(f, go)

    return go(phi)


# -- flattened-shape destructuring ----------------------------------------------


@dataclass
class _FlatShape:
    prefix: q.QuantifierPrefix  # original quantifiers, before the markers
    kappas: list[str]  # marker block, in binding order
    phi0: q.Formula
    clauses: list[tuple[str, q.Formula]]  # (kappa, theta)


_UNTIL_FAMILY = (q.EU, q.AU, q.EF)
_THETA_TYPES = (q.EX, q.AX, q.EU, q.AU, q.EW, q.AW, q.EF, q.AG)


def _conjuncts(f: q.Formula) -> list[q.Formula]:
    if isinstance(f, q.And):
        return _conjuncts(f.left) + _conjuncts(f.right)
    return [f]


def _flat_height(f: q.Formula) -> int:
    """Temporal nesting with uniq leaves counted flat (shape checks only)."""
    if isinstance(f, (q.Atom, q.TrueF, q.FalseF, q.Uniq)):
        return 0
    if isinstance(f, q.Not):
        return _flat_height(f.arg)
    if isinstance(f, (q.And, q.Or, q.Implies, q.Iff)):
        return max(_flat_height(f.left), _flat_height(f.right))
    if isinstance(f, (q.EX, q.AX, q.EF, q.AF, q.EG, q.AG)):
        return 1 + _flat_height(f.arg)
    if isinstance(f, (q.EU, q.AU, q.EW, q.AW)):
        return 1 + max(_flat_height(f.left), _flat_height(f.right))
    raise ShapeError(f"quantifier inside flattened body: {f!r}")


def _destructure_flat(psi: q.Formula) -> _FlatShape:
    """Split a flat2-style formula into prefix, marker block, Phi0, clauses."""
    prefix, body = q.prenex_boolean(psi)
    conj = _conjuncts(body)
    clauses: list[tuple[str, q.Formula]] = []
    names: set[str] = set()
    rest: list[q.Formula] = []
    trailing_exists: set[str] = set()
    for kind, p in reversed(prefix):
        if kind != "E":
            break
        trailing_exists.add(p)
    for part in conj:
        if (isinstance(part, q.AG) and isinstance(part.arg, q.Implies)
                and isinstance(part.arg.left, q.Atom)
                and part.arg.left.name in trailing_exists
                and isinstance(part.arg.right, _THETA_TYPES)):
            clauses.append((part.arg.left.name, part.arg.right))
            names.add(part.arg.left.name)
        else:
            rest.append(part)
    kappas = [p for _, p in prefix if p in names]
    outer = tuple((k, p) for k, p in prefix if p not in names)
    phi0 = q.big_and(rest)
    for f in q.subformulas(phi0):
        if isinstance(f, (q.EU, q.AU, q.EW, q.AW, q.EG, q.AF)):
            raise ShapeError(f"{type(f).__name__} outside a marker clause")
    if _flat_height(phi0) > 1:
        raise ShapeError("top part of the flattening is not height <= 1")
    for name, theta in clauses:
        if _flat_height(theta) > 1:
            raise ShapeError(f"clause for {name} is not a basic formula")
    return _FlatShape(outer, kappas, phi0, clauses)


# -- chi rewrite (prenex strategy) ----------------------------------------------


def replace_uw(psi: q.Formula) -> q.Formula:
    """Rewrite the until clauses of a flat2 output into EX/AX/EF/AG form.

    Weak-until clauses unroll onto their own marker; until clauses get the
    least-fixpoint test against one shared, universally quantified labelling
    chi.  chi is only introduced when some until clause needs it.
    """
    shape = _destructure_flat(psi)
    used = q.atoms_of(psi)
    chi_name = "chi"
    n = 1
    while chi_name in used:
        chi_name = f"chi_{n}"
        n += 1
    chi = q.Atom(chi_name)
    needs_chi = False
    parts: list[q.Formula] = [shape.phi0]
    for name, theta in shape.clauses:
        kap = q.Atom(name)
        if isinstance(theta, (q.EX, q.AX)):
            parts.append(q.AG(q.Implies(kap, theta)))
        elif isinstance(theta, q.EW):
            parts.append(q.AG(q.Implies(
                kap, q.Or(theta.right, q.And(theta.left, q.EX(kap))))))
        elif isinstance(theta, q.AW):
            parts.append(q.AG(q.Implies(
                kap, q.Or(theta.right, q.And(theta.left, q.AX(kap))))))
        elif isinstance(theta, q.AG):
            # AG a == A a W false: greatest fixpoint, unrolls onto the marker
            parts.append(q.AG(q.Implies(kap, q.And(theta.arg, q.AX(kap)))))
        elif isinstance(theta, (q.EU, q.AU, q.EF)):
            needs_chi = True
            if isinstance(theta, q.EF):
                left, right, step = None, theta.arg, q.EX(chi)
            elif isinstance(theta, q.EU):
                left, right, step = theta.left, theta.right, q.EX(chi)
            else:
                left, right, step = theta.left, theta.right, q.AX(chi)
            body = q.Or(right, step) if left is None else \
                q.Or(right, q.And(left, step))
            parts.append(q.Or(q.EF(q.And(body, q.Not(chi))),
                              q.AG(q.Implies(kap, chi))))
        else:
            raise ShapeError(f"unsupported clause {theta!r}")
    out = q.big_and(parts)
    if needs_chi:
        out = q.Forall(chi_name, out)
    for name in reversed(shape.kappas):
        out = q.Exists(name, out)
    return q.requantify(shape.prefix, out)


# -- distance bit vectors (no alternation) ----------------------------------------


def replace_uw2(psi: q.Formula, n_bound: int) -> q.Formula:
    """Rewrite the until clauses of a flat2 output with distance bit vectors.

    Exact for structures with at most n_bound states; smaller bounds give a
    one-sided bounded check.  Vector markers replace their Boolean marker in
    the rest of the formula by [vector < n_bound].
    """
    if n_bound < 1:
        raise ValueError("bound must be >= 1")
    shape = _destructure_flat(psi)
    kb = _kbv(n_bound)
    vector = {name for name, theta in shape.clauses
              if isinstance(theta, _UNTIL_FAMILY)}

    def subst(f: q.Formula) -> q.Formula:
        if isinstance(f, q.Atom) and f.name in vector:
            return bitvec_lt(f.name, n_bound, kb)
        return q._map_children(f, subst)

    parts: list[q.Formula] = [subst(shape.phi0)]
    for name, theta in shape.clauses:
        kap = q.Atom(name)
        if isinstance(theta, (q.EX, q.AX)):
            parts.append(q.AG(q.Implies(kap, type(theta)(subst(theta.arg)))))
        elif isinstance(theta, q.EW):
            parts.append(q.AG(q.Implies(kap, q.Or(
                subst(theta.right), q.And(subst(theta.left), q.EX(kap))))))
        elif isinstance(theta, q.AW):
            parts.append(q.AG(q.Implies(kap, q.Or(
                subst(theta.right), q.And(subst(theta.left), q.AX(kap))))))
        elif isinstance(theta, q.AG):
            parts.append(q.AG(q.Implies(kap, q.And(subst(theta.arg), q.AX(kap)))))
        elif isinstance(theta, _UNTIL_FAMILY):
            if isinstance(theta, q.EF):
                left, right = None, subst(theta.arg)
            else:
                left, right = subst(theta.left), subst(theta.right)
            layers = [q.Implies(bitvec_eq(name, 0, kb), right)]
            for d in range(1, n_bound):
                nxt = q.EX(bitvec_eq(name, d - 1, kb)) if not isinstance(theta, q.AU) \
                    else q.AX(bitvec_lt(name, d, kb))
                reach = nxt if left is None else q.And(left, nxt)
                layers.append(q.Implies(bitvec_eq(name, d, kb), reach))
            parts.append(q.AG(q.big_and(layers)))
        else:
            raise ShapeError(f"unsupported clause {theta!r}")
    out = q.big_and(parts)
    binder_names: list[str] = []
    for name, theta in shape.clauses:
        if name in vector:
            binder_names.extend(VarNamer.vector_bit(name, j) for j in range(kb))
        else:
            binder_names.append(name)
    for name in reversed(binder_names):
        out = q.Exists(name, out)
    return q.requantify(shape.prefix, out)


# -- strategy pipelines -----------------------------------------------------------


def _prepare(k: KripkeStructure, phi: q.Formula, cfg: ReductionConfig,
             gather: bool) -> tuple[q.Formula, dict[str, int]]:
    """freshen, then route the uniq quantifiers per the configured encoding.

    gather=True keeps the formula prenex (guarded body); otherwise the
    rewrite is local to each quantifier.
    """
    used = _used_names(k, phi)
    phi = q.freshen(phi, frozenset(k.props) | _RESERVED_PROPS)
    bitvec = _uniq_bitvec_props(phi, k) if cfg.uniq_encoding == UNIQ_BITVEC else {}
    phi = q.gather_uniq(phi) if gather else _inline_uniq(phi)
    if cfg.uniq_encoding == UNIQ_QCTL:
        phi = _expand_uniq_leaves(phi, set(q.atoms_of(phi)) | used)
    return phi, bitvec


def _circuit(root: CNode, prenex: bool, strategy: str, k: KripkeStructure,
             x: str, exact: bool = True) -> QbfCircuit:
    c = QbfCircuit(root=root, prenex=prenex,
                   meta={"strategy": strategy, "state": x,
                         "states": len(k.states), "exact": exact})
    c.check_closed()
    if prenex and not c.is_prenex():
        raise ShapeError(f"{strategy} produced a non-prenex circuit")
    return c


def met_uu(k: KripkeStructure, x: str, phi: q.Formula,
           cfg: ReductionConfig | None = None) -> QbfCircuit:
    """Direct translation, no preprocessing."""
    cfg = cfg or ReductionConfig(strategy="uu")
    psi, bitvec = _prepare(k, phi, cfg, gather=False)
    psi = q.normalize_core(psi)
    root = hat_translate(psi, x, k, q.quantified_props(psi), bitvec)
    return _circuit(root, False, "uu", k, x)


def met_fp(k: KripkeStructure, x: str, phi: q.Formula,
           cfg: ReductionConfig | None = None) -> QbfCircuit:
    """Fixpoint characterization of the until family, then translation."""
    cfg = cfg or ReductionConfig(strategy="fp")
    psi, bitvec = _prepare(k, phi, cfg, gather=False)
    psi = fpc(psi)
    root = hat_translate(psi, x, k, q.quantified_props(psi), bitvec)
    return _circuit(root, False, "fp", k, x)


def met_fpf(k: KripkeStructure, x: str, phi: q.Formula,
            cfg: ReductionConfig | None = None) -> QbfCircuit:
    """Equivalence flattening, then fixpoints: height stays bounded."""
    cfg = cfg or ReductionConfig(strategy="fpf")
    psi, bitvec = _prepare(k, phi, cfg, gather=True)
    psi = q.flat1(psi)
    psi = fpc(psi)
    root = hat_translate(psi, x, k, q.quantified_props(psi), bitvec)
    return _circuit(root, False, "fpf", k, x)


def met_pnf(k: KripkeStructure, x: str, phi: q.Formula,
            cfg: ReductionConfig | None = None) -> QbfCircuit:
    """Implication flattening + chi rewrite; the circuit is prenex."""
    cfg = cfg or ReductionConfig(strategy="pnf")
    psi, bitvec = _prepare(k, phi, cfg, gather=True)
    psi = replace_uw(q.flat2(q.to_nnf(psi)))
    root = hat_translate(psi, x, k, q.quantified_props(psi), bitvec)
    return _circuit(root, True, "pnf", k, x)


def met_fbv(k: KripkeStructure, x: str, phi: q.Formula,
            cfg: ReductionConfig | None = None) -> QbfCircuit:
    """Implication flattening + distance bit vectors; prenex, no added
    alternation.  A bound below |V| makes the verdict one-sided."""
    cfg = cfg or ReductionConfig(strategy="fbv")
    n_bound = cfg.fbv_bound if cfg.fbv_bound is not None else len(k.states)
    psi, bitvec = _prepare(k, phi, cfg, gather=True)
    psi = replace_uw2(q.flat2(q.to_nnf(psi)), n_bound)
    root = hat_translate(psi, x, k, q.quantified_props(psi), bitvec)
    return _circuit(root, True, "fbv", k, x, exact=n_bound >= len(k.states))


_STRATEGY_FN = {"uu": met_uu, "fp": met_fp, "fpf": met_fpf,
                "pnf": met_pnf, "fbv": met_fbv}


def reduce_to_qbf(k: KripkeStructure, x: str, phi: q.Formula,
                  cfg: ReductionConfig | None = None) -> QbfCircuit:
    cfg = cfg or ReductionConfig()
    return _STRATEGY_FN[cfg.strategy](k, x, phi, cfg)
