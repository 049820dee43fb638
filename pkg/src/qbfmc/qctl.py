"""QCTL formulas: AST, surface syntax, normal forms, structural metrics,
counting macros and the flattening transforms used by the reductions.

Surface syntax (see README): atoms, `true`/`false`, `~ & | -> <->`,
modalities `E X` `A X` `E F` `A F` `E G` `A G` and bracketed
`E [ a U b ]` / `A [ a W b ]`, quantifiers `exists p.` `forall p.`
`exists1 p.` `forall1 p.` extending maximally to the right, and `uniq(p)`
for the exactly-one-reachable-state operator.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator

__all__ = [
    "Formula", "Atom", "TrueF", "FalseF", "Not", "And", "Or", "Implies", "Iff",
    "EX", "AX", "EF", "AF", "EG", "AG", "EU", "AU", "EW", "AW",
    "Exists", "Forall", "Exists1", "Forall1", "Uniq",
    "TRUE", "FALSE",
    "QctlParseError", "NotPrenexable",
    "parse_qctl", "unparse",
    "formula_size", "temporal_height", "temporal_depth",
    "atoms_of", "quantified_props", "subformulas",
    "freshen", "fresh_name", "to_nnf", "is_nnf", "normalize_core",
    "big_and", "big_or",
    "build_unique_F", "build_unique_X", "build_atleast_k_X", "build_exactly_k_X",
    "QuantifierPrefix", "prenex_boolean", "requantify",
    "flat1", "flat2", "gather_uniq", "KappaAllocator",
]


@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class EX(Formula):
    arg: Formula


@dataclass(frozen=True)
class AX(Formula):
    arg: Formula


@dataclass(frozen=True)
class EF(Formula):
    arg: Formula


@dataclass(frozen=True)
class AF(Formula):
    arg: Formula


@dataclass(frozen=True)
class EG(Formula):
    arg: Formula


@dataclass(frozen=True)
class AG(Formula):
    arg: Formula


@dataclass(frozen=True)
class EU(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class AU(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class EW(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class AW(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Exists(Formula):
    prop: str
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    prop: str
    body: Formula


@dataclass(frozen=True)
class Exists1(Formula):
    prop: str
    body: Formula


@dataclass(frozen=True)
class Forall1(Formula):
    prop: str
    body: Formula


@dataclass(frozen=True)
class Uniq(Formula):
    """Exactly one state reachable from the current one is labelled prop.

    Semantically the counting macro built by build_unique_F; kept as a leaf
    so the reductions can pick their own encoding for it.
    """

    prop: str


TRUE = TrueF()
FALSE = FalseF()

_UNARY_TEMPORAL = (EX, AX, EF, AF, EG, AG)
_BINARY_TEMPORAL = (EU, AU, EW, AW)
_QUANT = (Exists, Forall, Exists1, Forall1)
_BINARY_BOOL = (And, Or, Implies, Iff)


class QctlParseError(ValueError):
    def __init__(self, message: str, pos: int, text: str = ""):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"line {line}, col {col}: {message}")
        self.pos = pos


class NotPrenexable(ValueError):
    """A quantifier sits under a temporal modality (or inside an <->)."""

    def __init__(self, message: str, path: tuple[int, ...]):
        super().__init__(f"{message} (at path {'.'.join(map(str, path)) or 'root'})")
        self.path = path


# -- helpers -----------------------------------------------------------------


def big_and(parts: list[Formula]) -> Formula:
    """Left-folded conjunction; empty list is true."""
    if not parts:
        return TRUE
    acc = parts[0]
    for p in parts[1:]:
        acc = And(acc, p)
    return acc


def big_or(parts: list[Formula]) -> Formula:
    if not parts:
        return FALSE
    acc = parts[0]
    for p in parts[1:]:
        acc = Or(acc, p)
    return acc


def subformulas(phi: Formula) -> Iterator[Formula]:
    yield phi
    if isinstance(phi, Not):
        yield from subformulas(phi.arg)
    elif isinstance(phi, _BINARY_BOOL + _BINARY_TEMPORAL):
        yield from subformulas(phi.left)
        yield from subformulas(phi.right)
    elif isinstance(phi, _UNARY_TEMPORAL):
        yield from subformulas(phi.arg)
    elif isinstance(phi, _QUANT):
        yield from subformulas(phi.body)


def atoms_of(phi: Formula) -> frozenset[str]:
    """Every proposition name occurring in phi (bound, free or uniq)."""
    acc: set[str] = set()
    for f in subformulas(phi):
        if isinstance(f, Atom):
            acc.add(f.name)
        elif isinstance(f, Uniq):
            acc.add(f.prop)
        elif isinstance(f, _QUANT):
            acc.add(f.prop)
    return frozenset(acc)


def quantified_props(phi: Formula) -> frozenset[str]:
    return frozenset(f.prop for f in subformulas(phi) if isinstance(f, _QUANT))


def _map_children(phi: Formula, fn) -> Formula:
    if isinstance(phi, (Atom, TrueF, FalseF, Uniq)):
        return phi
    if isinstance(phi, Not):
        return Not(fn(phi.arg))
    if isinstance(phi, _BINARY_BOOL + _BINARY_TEMPORAL):
        return type(phi)(fn(phi.left), fn(phi.right))
    if isinstance(phi, _UNARY_TEMPORAL):
        return type(phi)(fn(phi.arg))
    if isinstance(phi, _QUANT):
        return type(phi)(phi.prop, fn(phi.body))
    raise TypeError(f"unknown node {phi!r}")


# -- surface syntax ----------------------------------------------------------

_RESERVED = {
    "true", "false", "exists", "forall", "exists1", "forall1", "uniq",
    "E", "A", "X", "F", "G", "U", "W",
}

_TOKEN_RE = re.compile(r"\s*(?:(<->|->|[~&|()\[\].])|([A-Za-z_][A-Za-z0-9_]*))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            rest = text[pos:].lstrip()
            if not rest:
                break
            bad_at = len(text) - len(rest)
            raise QctlParseError(f"unexpected character {rest[0]!r}", bad_at, text)
        if m.group(1):
            toks.append(("op", m.group(1), m.start(1)))
        else:
            toks.append(("id", m.group(2), m.start(2)))
        pos = m.end()
    toks.append(("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value: str):
        kind, val, pos = self.next()
        if val != value:
            raise QctlParseError(f"expected {value!r}, got {val or 'end of input'!r}",
                                 pos, self.text)

    def fail(self, msg: str):
        raise QctlParseError(msg, self.peek()[2], self.text)

    # precedence: iff < implies < or < and < unary; quantifiers maximal right
    def parse(self) -> Formula:
        phi = self.parse_iff()
        kind, val, pos = self.peek()
        if kind != "eof":
            raise QctlParseError(f"unexpected {val!r}", pos, self.text)
        return phi

    def parse_quantifier(self):
        kind, val, _ = self.peek()
        if kind == "id" and val in ("exists", "forall", "exists1", "forall1"):
            self.next()
            pk, prop, ppos = self.next()
            if pk != "id" or prop in _RESERVED:
                raise QctlParseError(f"expected proposition after {val!r}", ppos,
                                     self.text)
            self.expect(".")
            body = self.parse_iff()
            cls = {"exists": Exists, "forall": Forall,
                   "exists1": Exists1, "forall1": Forall1}[val]
            return cls(prop, body)
        return None

    def parse_iff(self) -> Formula:
        q = self.parse_quantifier()
        if q is not None:
            return q
        left = self.parse_implies()
        if self.peek()[1] == "<->":
            self.next()
            return Iff(left, self.parse_iff())
        return left

    def parse_implies(self) -> Formula:
        left = self.parse_or()
        if self.peek()[1] == "->":
            self.next()
            q = self.parse_quantifier()
            right = q if q is not None else self.parse_implies()
            return Implies(left, right)
        return left

    def parse_or(self) -> Formula:
        left = self.parse_and()
        while self.peek()[1] == "|":
            self.next()
            q = self.parse_quantifier()
            right = q if q is not None else self.parse_and()
            left = Or(left, right)
        return left

    def parse_and(self) -> Formula:
        left = self.parse_unary()
        while self.peek()[1] == "&":
            self.next()
            q = self.parse_quantifier()
            right = q if q is not None else self.parse_unary()
            left = And(left, right)
        return left

    def parse_unary(self) -> Formula:
        kind, val, pos = self.peek()
        if val == "~":
            self.next()
            return Not(self.parse_unary())
        if kind == "id" and val in ("E", "A"):
            return self.parse_temporal()
        q = self.parse_quantifier()
        if q is not None:
            return q
        return self.parse_primary()

    def parse_temporal(self) -> Formula:
        _, path, pos = self.next()  # E or A
        kind, val, vpos = self.peek()
        if val == "[":
            self.next()
            left = self.parse_iff()
            k2, op, opos = self.next()
            if op not in ("U", "W"):
                raise QctlParseError("expected U or W inside [...]", opos, self.text)
            right = self.parse_iff()
            self.expect("]")
            table = {("E", "U"): EU, ("A", "U"): AU, ("E", "W"): EW, ("A", "W"): AW}
            return table[(path, op)](left, right)
        if kind == "id" and val in ("X", "F", "G"):
            self.next()
            arg = self.parse_unary()
            table = {("E", "X"): EX, ("A", "X"): AX, ("E", "F"): EF,
                     ("A", "F"): AF, ("E", "G"): EG, ("A", "G"): AG}
            return table[(path, val)](arg)
        raise QctlParseError(f"expected X, F, G or [ after {path}", vpos, self.text)

    def parse_primary(self) -> Formula:
        kind, val, pos = self.next()
        if val == "(":
            phi = self.parse_iff()
            self.expect(")")
            return phi
        if kind == "id":
            if val == "true":
                return TRUE
            if val == "false":
                return FALSE
            if val == "uniq":
                self.expect("(")
                pk, prop, ppos = self.next()
                if pk != "id" or prop in _RESERVED:
                    raise QctlParseError("expected proposition in uniq(...)", ppos,
                                         self.text)
                self.expect(")")
                return Uniq(prop)
            if val in _RESERVED:
                raise QctlParseError(f"{val!r} is reserved", pos, self.text)
            return Atom(val)
        raise QctlParseError(f"unexpected {val or 'end of input'!r}", pos, self.text)


def parse_qctl(text: str) -> Formula:
    """Parse surface syntax into a formula tree.

    `->` and `<->` stay as nodes; their semantics and all metrics follow the
    usual definitions (not-or, resp. both implications).
    """
    stripped = "\n".join(ln.split("#", 1)[0] for ln in text.splitlines())
    return _Parser(stripped).parse()


_PREC = {"iff": 1, "implies": 2, "or": 3, "and": 4, "unary": 5}


def unparse(phi: Formula) -> str:
    """Surface-syntax text that parses back to the same tree."""

    def go(f: Formula, prec: int) -> str:
        if isinstance(f, Atom):
            return f.name
        if isinstance(f, TrueF):
            return "true"
        if isinstance(f, FalseF):
            return "false"
        if isinstance(f, Uniq):
            return f"uniq({f.prop})"
        if isinstance(f, Not):
            return "~" + go(f.arg, _PREC["unary"] + 1)
        if isinstance(f, _QUANT):
            kw = {Exists: "exists", Forall: "forall",
                  Exists1: "exists1", Forall1: "forall1"}[type(f)]
            s = f"{kw} {f.prop}. {go(f.body, 0)}"
            return f"({s})" if prec > 0 else s
        if isinstance(f, _UNARY_TEMPORAL):
            name = type(f).__name__  # EX -> "E X"
            s = f"{name[0]} {name[1]} {go(f.arg, _PREC['unary'] + 1)}"
            return s
        if isinstance(f, _BINARY_TEMPORAL):
            name = type(f).__name__  # EU -> "E [ l U r ]"
            return f"{name[0]} [ {go(f.left, 0)} {name[1]} {go(f.right, 0)} ]"
        table = {And: ("&", "and"), Or: ("|", "or"),
                 Implies: ("->", "implies"), Iff: ("<->", "iff")}
        sym, level = table[type(f)]
        p = _PREC[level]
        if isinstance(f, (And, Or)):  # left-assoc
            s = f"{go(f.left, p)} {sym} {go(f.right, p + 1)}"
        else:  # right-assoc
            s = f"{go(f.left, p + 1)} {sym} {go(f.right, p)}"
        return f"({s})" if prec > p else s

    return go(phi, 0)


# -- metrics ----------------------------------------------------------------


def formula_size(phi: Formula) -> int:
    """Node count after desugaring the derived operators."""
    if isinstance(phi, (Atom, TrueF, FalseF)):
        return 1
    if isinstance(phi, Not):
        return 1 + formula_size(phi.arg)
    if isinstance(phi, (And, Or)):
        return 1 + formula_size(phi.left) + formula_size(phi.right)
    if isinstance(phi, Implies):  # ~l | r
        return 2 + formula_size(phi.left) + formula_size(phi.right)
    if isinstance(phi, Iff):  # (~l | r) & (~r | l)
        return 5 + 2 * formula_size(phi.left) + 2 * formula_size(phi.right)
    if isinstance(phi, (EX, AX)):  # AX = ~EX~
        extra = 0 if isinstance(phi, EX) else 2
        return 1 + extra + formula_size(phi.arg)
    if isinstance(phi, (EU, AU)):
        return 1 + formula_size(phi.left) + formula_size(phi.right)
    if isinstance(phi, (EF, AF)):  # E true U _
        return 2 + formula_size(phi.arg)
    if isinstance(phi, EG):  # ~ A F ~_
        return 4 + formula_size(phi.arg)
    if isinstance(phi, AG):  # ~ E F ~_
        return 4 + formula_size(phi.arg)
    if isinstance(phi, (EW, AW)):  # ~ A/E ~r U (~r & ~l)
        return 5 + formula_size(phi.left) + 2 * formula_size(phi.right)
    if isinstance(phi, (Exists, Forall)):
        extra = 0 if isinstance(phi, Exists) else 2
        return 1 + extra + formula_size(phi.body)
    if isinstance(phi, (Exists1, Forall1)):
        # exists p.(uniq(p) op phi); uniq measured via its macro definition
        uniq_size = formula_size(build_unique_F(Atom(phi.prop), fresh="z"))
        op = 2 if isinstance(phi, Exists1) else 4  # & vs ~(...)|, via forall
        return 1 + op + uniq_size + formula_size(phi.body)
    if isinstance(phi, Uniq):
        return formula_size(build_unique_F(Atom(phi.prop), fresh="z"))
    raise TypeError(f"unknown node {phi!r}")


def temporal_height(phi: Formula) -> int:
    """Maximum number of nested temporal modalities."""
    if isinstance(phi, (Atom, TrueF, FalseF)):
        return 0
    if isinstance(phi, Uniq):
        return temporal_height(build_unique_F(Atom(phi.prop), fresh="z"))
    if isinstance(phi, Not):
        return temporal_height(phi.arg)
    if isinstance(phi, _BINARY_BOOL):
        return max(temporal_height(phi.left), temporal_height(phi.right))
    if isinstance(phi, _UNARY_TEMPORAL):
        return 1 + temporal_height(phi.arg)
    if isinstance(phi, _BINARY_TEMPORAL):
        return 1 + max(temporal_height(phi.left), temporal_height(phi.right))
    if isinstance(phi, (Exists, Forall)):
        return temporal_height(phi.body)
    if isinstance(phi, (Exists1, Forall1)):
        # the uniq guard itself nests two modalities
        gh = temporal_height(build_unique_F(Atom(phi.prop), fresh="z"))
        return max(gh, temporal_height(phi.body))
    raise TypeError(f"unknown node {phi!r}")


def temporal_depth(root: Formula, path: tuple[int, ...]) -> int:
    """Number of temporal modalities scoping over the subformula at path.

    path items: child index (0 for unary/body, 0/1 for binaries).
    """
    depth = 0
    node = root
    for step in path:
        if isinstance(node, _UNARY_TEMPORAL + _BINARY_TEMPORAL):
            depth += 1
        if isinstance(node, Not):
            node = node.arg
        elif isinstance(node, _BINARY_BOOL + _BINARY_TEMPORAL):
            node = (node.left, node.right)[step]
        elif isinstance(node, _UNARY_TEMPORAL):
            node = node.arg
        elif isinstance(node, _QUANT):
            node = node.body
        else:
            raise ValueError(f"path leaves the formula at {step}")
    return depth


# -- fresh names and alpha renaming ------------------------------------------


def fresh_name(base: str, used: set[str]) -> str:
    if base not in used:
        used.add(base)
        return base
    n = 1
    while f"{base}_{n}" in used:
        n += 1
    name = f"{base}_{n}"
    used.add(name)
    return name


def freshen(phi: Formula, avoid: Iterator[str] | frozenset[str] = frozenset()) -> Formula:
    """Alpha-rename bound propositions so every quantifier binds a name
    distinct from all other binders, from free atoms and from `avoid`
    (typically the structure's propositions)."""
    used = set(avoid) | atoms_of(phi)
    bound_seen: set[str] = set()

    def go(f: Formula, env: dict[str, str]) -> Formula:
        if isinstance(f, Atom):
            return Atom(env.get(f.name, f.name))
        if isinstance(f, Uniq):
            return Uniq(env.get(f.prop, f.prop))
        if isinstance(f, _QUANT):
            p = f.prop
            if p in bound_seen or p in avoid:
                p2 = fresh_name(p, used)
            else:
                p2 = p
            bound_seen.add(p2)
            env2 = dict(env)
            env2[f.prop] = p2
            return type(f)(p2, go(f.body, env2))
        return _map_children(f, lambda c: go(c, env))

    return go(phi, {})


# -- negation normal form ----------------------------------------------------


def normalize_core(phi: Formula) -> Formula:
    """Rewrite EG/AF/EW/AW into EU/AU with negations; keep EX/AX/EF/AG.

    The result only uses modalities the state-by-state translation has rules
    for.  Boolean nodes are untouched.
    """
    f = _map_children(phi, normalize_core)
    if isinstance(f, AF):
        return AU(TRUE, f.arg)
    if isinstance(f, EG):
        return Not(AU(TRUE, Not(f.arg)))
    if isinstance(f, EW):
        return Not(AU(Not(f.right), And(Not(f.right), Not(f.left))))
    if isinstance(f, AW):
        return Not(EU(Not(f.right), And(Not(f.right), Not(f.left))))
    return f


def to_nnf(phi: Formula) -> Formula:
    """Push negations to the literals.

    Output operators: and/or, the four quantifiers, EX AX EF AG EU AU EW AW,
    and literals over atoms and uniq leaves.  EG and AF are normalized away
    (EG = EW false, AF = AU over true); EF and AG are kept since they are
    their own duals and the later passes want them primitive.
    """

    def pos(f: Formula) -> Formula:
        if isinstance(f, (Atom, TrueF, FalseF, Uniq)):
            return f
        if isinstance(f, Not):
            return neg(f.arg)
        if isinstance(f, Implies):
            return Or(neg(f.left), pos(f.right))
        if isinstance(f, Iff):
            return And(Or(neg(f.left), pos(f.right)), Or(neg(f.right), pos(f.left)))
        if isinstance(f, EG):
            return EW(pos(f.arg), FALSE)
        if isinstance(f, AF):
            return AU(TRUE, pos(f.arg))
        return _map_children(f, pos)

    def neg(f: Formula) -> Formula:
        if isinstance(f, Atom):
            return Not(f)
        if isinstance(f, Uniq):
            return Not(f)
        if isinstance(f, TrueF):
            return FALSE
        if isinstance(f, FalseF):
            return TRUE
        if isinstance(f, Not):
            return pos(f.arg)
        if isinstance(f, And):
            return Or(neg(f.left), neg(f.right))
        if isinstance(f, Or):
            return And(neg(f.left), neg(f.right))
        if isinstance(f, Implies):
            return And(pos(f.left), neg(f.right))
        if isinstance(f, Iff):
            return Or(And(pos(f.left), neg(f.right)), And(neg(f.left), pos(f.right)))
        if isinstance(f, EX):
            return AX(neg(f.arg))
        if isinstance(f, AX):
            return EX(neg(f.arg))
        if isinstance(f, EF):
            return AG(neg(f.arg))
        if isinstance(f, AG):
            return EF(neg(f.arg))
        if isinstance(f, EG):
            return AU(TRUE, neg(f.arg))
        if isinstance(f, AF):
            return EW(neg(f.arg), FALSE)
        if isinstance(f, EU):
            return AW(neg(f.right), And(Not_(f.right), Not_(f.left)))
        if isinstance(f, AU):
            return EW(neg(f.right), And(Not_(f.right), Not_(f.left)))
        if isinstance(f, EW):
            return AU(neg(f.right), And(Not_(f.right), Not_(f.left)))
        if isinstance(f, AW):
            return EU(neg(f.right), And(Not_(f.right), Not_(f.left)))
        if isinstance(f, Exists):
            return Forall(f.prop, neg(f.body))
        if isinstance(f, Forall):
            return Exists(f.prop, neg(f.body))
        if isinstance(f, Exists1):
            return Forall1(f.prop, neg(f.body))
        if isinstance(f, Forall1):
            return Exists1(f.prop, neg(f.body))
        raise TypeError(f"unknown node {f!r}")

    def Not_(f: Formula) -> Formula:
        # negated-and-normalized subterm for the weak-until duals
        return neg(f)

    return pos(phi)


def is_nnf(phi: Formula) -> bool:
    for f in subformulas(phi):
        if isinstance(f, (Implies, Iff, EG, AF)):
            return False
        if isinstance(f, Not) and not isinstance(f.arg, (Atom, Uniq)):
            return False
    return True


# -- counting macros ---------------------------------------------------------


def build_unique_F(phi: Formula, fresh: str) -> Formula:
    """Exactly one reachable state satisfies phi:
    EF phi & forall p.(EF(p & phi) -> AG(phi -> p))."""
    p = Atom(fresh)
    return And(EF(phi),
               Forall(fresh, Implies(EF(And(p, phi)), AG(Implies(phi, p)))))


def build_unique_X(phi: Formula, fresh: str) -> Formula:
    """Exactly one immediate successor satisfies phi."""
    p = Atom(fresh)
    return And(EX(phi),
               Forall(fresh, Implies(EX(And(phi, p)), AX(Implies(phi, p)))))


def build_atleast_k_X(k: int, phi: Formula, fresh: list[str]) -> Formula:
    """At least k successors satisfy phi, via k pairwise-exclusive markers."""
    if k < 1 or len(fresh) < k:
        raise ValueError("need k >= 1 fresh propositions")
    names = fresh[:k]
    marks = [Atom(p) for p in names]
    picks = [
        EX(big_and([marks[i]] + [Not(marks[j]) for j in range(k) if j != i]))
        for i in range(k)
    ]
    body = And(big_and(picks), AX(Implies(big_or(list(marks)), phi)))
    out = body
    for p in reversed(names):
        out = Exists(p, out)
    return out


def build_exactly_k_X(k: int, phi: Formula, fresh: list[str]) -> Formula:
    """Exactly k successors satisfy phi (at-least-k and not at-least-k+1)."""
    if len(fresh) < 2 * k + 1:
        raise ValueError("need 2k+1 fresh propositions")
    return And(build_atleast_k_X(k, phi, fresh[:k]),
               Not(build_atleast_k_X(k + 1, phi, fresh[k:])))


# -- prenexing through the Boolean skeleton -----------------------------------

QuantifierPrefix = tuple[tuple[str, str], ...]  # (kind in {E,A,E1,A1}, prop)

_KIND_OF = {Exists: "E", Forall: "A", Exists1: "E1", Forall1: "A1"}
_FLIP = {"E": "A", "A": "E", "E1": "A1", "A1": "E1"}
_CLS_OF = {"E": Exists, "A": Forall, "E1": Exists1, "A1": Forall1}


def _has_quantifier(phi: Formula) -> bool:
    return any(isinstance(f, _QUANT) for f in subformulas(phi))


def prenex_boolean(phi: Formula) -> tuple[QuantifierPrefix, Formula]:
    """Hoist quantifiers through the Boolean connectives only.

    Negation flips quantifier kinds; -> flips on the left.  A quantifier
    under a temporal modality or inside <-> raises NotPrenexable (those
    inputs need the non-prenex strategies instead).  Input must be
    freshened: the hoisting relies on binders not capturing anything.
    """

    def go(f: Formula, path: tuple[int, ...]) -> tuple[list[tuple[str, str]], Formula]:
        if isinstance(f, _QUANT):
            inner, body = go(f.body, path + (0,))
            return [(_KIND_OF[type(f)], f.prop)] + inner, body
        if isinstance(f, Not):
            inner, body = go(f.arg, path + (0,))
            return [(_FLIP[k], p) for k, p in inner], Not(body)
        if isinstance(f, (And, Or)):
            li, lb = go(f.left, path + (0,))
            ri, rb = go(f.right, path + (1,))
            return li + ri, type(f)(lb, rb)
        if isinstance(f, Implies):
            li, lb = go(f.left, path + (0,))
            ri, rb = go(f.right, path + (1,))
            return [(_FLIP[k], p) for k, p in li] + ri, Implies(lb, rb)
        if isinstance(f, Iff):
            if _has_quantifier(f.left) or _has_quantifier(f.right):
                raise NotPrenexable("quantifier inside <->", path)
            return [], f
        if _has_quantifier(f):
            raise NotPrenexable("quantifier under a temporal modality", path)
        return [], f

    prefix, body = go(phi, ())
    return tuple(prefix), body


def requantify(prefix: QuantifierPrefix, body: Formula) -> Formula:
    out = body
    for kind, prop in reversed(prefix):
        out = _CLS_OF[kind](prop, out)
    return out


# -- flattening ---------------------------------------------------------------


class KappaAllocator:
    """Fresh marker names k1, k2, ... skipping anything already in use."""

    def __init__(self, used: Iterator[str] | frozenset[str] = frozenset()):
        self.used = set(used)
        self.n = 0

    def fresh(self) -> str:
        while True:
            self.n += 1
            name = f"k{self.n}"
            if name not in self.used:
                self.used.add(name)
                return name


def _extract(body: Formula, keep_top, alloc: KappaAllocator
             ) -> tuple[Formula, list[tuple[str, Formula]]]:
    """Shared flattening engine.

    Walks bottom-up, innermost-leftmost first; every temporal node whose
    arguments are already flat is either kept in place (keep_top decides,
    only for nodes not under another temporal operator) or replaced by a
    fresh marker kappa_i, recording AG-clause material (kappa_i, theta_i).
    Identical extracted subformulas share one marker.
    """
    clauses: list[tuple[str, Formula]] = []
    cache: dict[Formula, str] = {}

    def go(f: Formula, under_temporal: bool) -> Formula:
        if isinstance(f, (Atom, TrueF, FalseF, Uniq)):
            return f
        if isinstance(f, Not):
            return Not(go(f.arg, under_temporal))
        if isinstance(f, _BINARY_BOOL):
            return type(f)(go(f.left, under_temporal),
                           go(f.right, under_temporal))
        if isinstance(f, _UNARY_TEMPORAL + _BINARY_TEMPORAL):
            if isinstance(f, _UNARY_TEMPORAL):
                flat = type(f)(go(f.arg, True))
            else:
                flat = type(f)(go(f.left, True), go(f.right, True))
            if not under_temporal and keep_top(flat):
                return flat
            if flat in cache:
                return Atom(cache[flat])
            name = alloc.fresh()
            cache[flat] = name
            clauses.append((name, flat))
            return Atom(name)
        raise NotPrenexable("quantifier in flattening body", ())

    return go(body, False), clauses


def flat1(phi: Formula) -> Formula:
    """Equivalence-based flattening: Q. exists k1..km. (Phi0 & AND AG(ki <-> thetai)).

    Phi0 is a Boolean combination of height-1 temporal formulas, every
    theta_i has height 1, markers are introduced innermost-leftmost.
    """
    prefix, body = prenex_boolean(phi)
    alloc = KappaAllocator(atoms_of(phi))
    phi0, clauses = _extract(body, lambda f: True, alloc)
    out = big_and([phi0] + [AG(Iff(Atom(k), th)) for k, th in clauses])
    for k, _ in reversed(clauses):
        out = Exists(k, out)
    return requantify(prefix, out)


_FLAT2_TOP = (EX, AX, EF, AG)


def flat2(phi: Formula) -> Formula:
    """Implication-based flattening of an NNF formula.

    Only EX/AX/EF/AG survive in the top part; every until-family modality
    moves into a clause AG(ki -> thetai), so each marker occurs negatively
    exactly once.
    """
    if not is_nnf(phi):
        raise ValueError("flat2 needs NNF input")
    prefix, body = prenex_boolean(phi)
    alloc = KappaAllocator(atoms_of(phi))
    phi0, clauses = _extract(body, lambda f: isinstance(f, _FLAT2_TOP), alloc)
    out = big_and([phi0] + [AG(Implies(Atom(k), th)) for k, th in clauses])
    for k, _ in reversed(clauses):
        out = Exists(k, out)
    return requantify(prefix, out)


def gather_uniq(phi: Formula) -> Formula:
    """Downgrade exists1/forall1 in a prenexable formula to plain quantifiers,
    guarding the body with uniq leaves:
    Q.((AND uniq(p_univ)) -> ((AND uniq(p_exis)) & body)).

    The result is always in prenex form (quantifier-free body), even when no
    uniq quantifier occurs.
    """
    prefix, body = prenex_boolean(phi)
    if not any(k in ("E1", "A1") for k, _ in prefix):
        return requantify(prefix, body)
    exis = [p for k, p in prefix if k == "E1"]
    univ = [p for k, p in prefix if k == "A1"]
    plain = tuple((("E" if k == "E1" else "A" if k == "A1" else k), p)
                  for k, p in prefix)
    rhs = body
    if exis:
        rhs = And(big_and([Uniq(p) for p in exis]), body)
    if univ:
        rhs = Implies(big_and([Uniq(p) for p in univ]), rhs)
    return requantify(plain, rhs)
