"""Sabotage modal logic: parser, structure expansion, reduction to QCTL.

The edge-deleting modalities are reduced to quantification: intermediary
states split every original edge, deleted edges are marked by labelling
their midpoint with a fresh del<i> proposition chosen by a uniq quantifier,
and the structure is completed so a deletion can happen anywhere.

Surface syntax: atoms, `true`, `~ & | ->`, diamond `<>`, box `[]`,
global sabotage `<~>` / `[~]`, local sabotage `<~l>` / `[~l]`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import qctl as q
from .kripke import KripkeStructure

__all__ = [
    "SmlFormula", "SAtom", "STrue", "SNot", "SAnd",
    "SDiamond", "SBox", "SSabDiamond", "SSabBox",
    "SLocalSabDiamond", "SLocalSabBox",
    "SmlParseError", "parse_sml", "unparse_sml", "sabotage_height",
    "INTER_PROP", "del_prop", "expand_structure", "translate_sml",
]

INTER_PROP = "inter"
_DEL_RE = re.compile(r"del\d+$")


def del_prop(depth: int) -> str:
    return f"del{depth}"


def _reserved(name: str) -> bool:
    return name == INTER_PROP or bool(_DEL_RE.match(name))


@dataclass(frozen=True)
class SmlFormula:
    pass


@dataclass(frozen=True)
class SAtom(SmlFormula):
    name: str


@dataclass(frozen=True)
class STrue(SmlFormula):
    pass


@dataclass(frozen=True)
class SNot(SmlFormula):
    arg: SmlFormula


@dataclass(frozen=True)
class SAnd(SmlFormula):
    left: SmlFormula
    right: SmlFormula


@dataclass(frozen=True)
class SDiamond(SmlFormula):
    arg: SmlFormula


@dataclass(frozen=True)
class SBox(SmlFormula):
    arg: SmlFormula


@dataclass(frozen=True)
class SSabDiamond(SmlFormula):
    arg: SmlFormula


@dataclass(frozen=True)
class SSabBox(SmlFormula):
    arg: SmlFormula


@dataclass(frozen=True)
class SLocalSabDiamond(SmlFormula):
    arg: SmlFormula


@dataclass(frozen=True)
class SLocalSabBox(SmlFormula):
    arg: SmlFormula


_UNARY = (SNot, SDiamond, SBox, SSabDiamond, SSabBox,
          SLocalSabDiamond, SLocalSabBox)


def sabotage_height(phi: SmlFormula) -> int:
    """Maximum nesting of sabotage modalities (global or local)."""
    if isinstance(phi, (SAtom, STrue)):
        return 0
    if isinstance(phi, SAnd):
        return max(sabotage_height(phi.left), sabotage_height(phi.right))
    h = sabotage_height(phi.arg)
    if isinstance(phi, (SSabDiamond, SSabBox, SLocalSabDiamond, SLocalSabBox)):
        return 1 + h
    return h


class SmlParseError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"position {pos}: {message}")
        self.pos = pos


_SML_TOKEN = re.compile(
    r"\s*(?:(<~l>|\[~l\]|<~>|\[~\]|<>|\[\]|->|[~&|()])|([A-Za-z_][A-Za-z0-9_]*))")


def parse_sml(text: str) -> SmlFormula:
    toks: list[tuple[str, int]] = []
    pos = 0
    while pos < len(text):
        m = _SML_TOKEN.match(text, pos)
        if not m or m.end() == pos:
            rest = text[pos:].lstrip()
            if not rest:
                break
            raise SmlParseError(f"unexpected character {rest[0]!r}",
                                len(text) - len(rest))
        toks.append((m.group(1) or m.group(2), m.start()))
        pos = m.end()
    toks.append(("", len(text)))
    i = 0

    def peek():
        return toks[i][0]

    def advance():
        nonlocal i
        t = toks[i]
        i += 1
        return t

    def parse_implies() -> SmlFormula:
        left = parse_or()
        if peek() == "->":
            advance()
            right = parse_implies()
            return SNot(SAnd(left, SNot(right)))
        return left

    def parse_or() -> SmlFormula:
        left = parse_and()
        while peek() == "|":
            advance()
            left = SNot(SAnd(SNot(left), SNot(parse_and())))
        return left

    def parse_and() -> SmlFormula:
        left = parse_unary()
        while peek() == "&":
            advance()
            left = SAnd(left, parse_unary())
        return left

    def parse_unary() -> SmlFormula:
        tok, at = advance()
        table = {"<>": SDiamond, "[]": SBox, "<~>": SSabDiamond,
                 "[~]": SSabBox, "<~l>": SLocalSabDiamond, "[~l]": SLocalSabBox}
        if tok == "~":
            return SNot(parse_unary())
        if tok in table:
            return table[tok](parse_unary())
        if tok == "(":
            f = parse_implies()
            tok2, at2 = advance()
            if tok2 != ")":
                raise SmlParseError("expected ')'", at2)
            return f
        if tok == "true":
            return STrue()
        if tok and (tok[0].isalpha() or tok[0] == "_"):
            if _reserved(tok):
                raise SmlParseError(f"{tok!r} is reserved for the reduction", at)
            return SAtom(tok)
        raise SmlParseError(f"unexpected {tok or 'end of input'!r}", at)

    f = parse_implies()
    tok, at = toks[i]
    if tok:
        raise SmlParseError(f"unexpected {tok!r}", at)
    return f


def unparse_sml(phi: SmlFormula) -> str:
    if isinstance(phi, SAtom):
        return phi.name
    if isinstance(phi, STrue):
        return "true"
    if isinstance(phi, SNot):
        return "~" + unparse_sml(phi.arg)
    if isinstance(phi, SAnd):
        return f"({unparse_sml(phi.left)} & {unparse_sml(phi.right)})"
    sym = {SDiamond: "<>", SBox: "[]", SSabDiamond: "<~>", SSabBox: "[~]",
           SLocalSabDiamond: "<~l>", SLocalSabBox: "[~l]"}[type(phi)]
    return sym + " " + unparse_sml(phi.arg)


# -- reduction ----------------------------------------------------------------


def midpoint_name(a: str, b: str) -> str:
    return f"v__{a}__{b}"


def expand_structure(k: KripkeStructure) -> KripkeStructure:
    """Split every edge through a fresh inter-labelled midpoint and add the
    complete relation (self-loops included) over the original states."""
    for s in k.states:
        for p in k.labels[s]:
            if _reserved(p):
                raise ValueError(f"proposition {p!r} is reserved for the reduction")
    states = list(k.states)
    idx = k.index
    mids = [(a, b) for (a, b) in sorted(k.edges, key=lambda e: (idx[e[0]], idx[e[1]]))]
    states += [midpoint_name(a, b) for a, b in mids]
    edges: set[tuple[str, str]] = set()
    labels: dict[str, frozenset[str]] = {s: k.labels[s] for s in k.states}
    for a, b in mids:
        m = midpoint_name(a, b)
        labels[m] = frozenset((INTER_PROP,))
        edges.add((a, m))
        edges.add((m, b))
    for a in k.states:
        for b in k.states:
            edges.add((a, b))
    return KripkeStructure(states=tuple(states), edges=frozenset(edges),
                           labels=labels, initial=k.initial)


def translate_sml(phi: SmlFormula, depth: int = 0) -> q.Formula:
    """QCTL formula over the expanded structure, at the given sabotage depth.

    Diamonds step through a midpoint that is not marked deleted; sabotage
    picks the deleted midpoint with a uniq quantifier.  Boxes go through
    negation duality.
    """
    live = [q.Not(q.Atom(del_prop(i))) for i in range(depth)]
    if isinstance(phi, SAtom):
        return q.Atom(phi.name)
    if isinstance(phi, STrue):
        return q.TRUE
    if isinstance(phi, SNot):
        return q.Not(translate_sml(phi.arg, depth))
    if isinstance(phi, SAnd):
        return q.And(translate_sml(phi.left, depth),
                     translate_sml(phi.right, depth))
    if isinstance(phi, SDiamond):
        inner = q.big_and([q.Atom(INTER_PROP)] + live
                          + [q.EX(translate_sml(phi.arg, depth))])
        return q.EX(inner)
    if isinstance(phi, SBox):
        return q.Not(translate_sml(SDiamond(SNot(phi.arg)), depth))
    if isinstance(phi, (SSabDiamond, SLocalSabDiamond)):
        d = del_prop(depth)
        mark = q.big_and([q.Atom(INTER_PROP)] + live + [q.Atom(d)])
        hit = q.EX(q.EX(mark)) if isinstance(phi, SSabDiamond) else q.EX(mark)
        return q.Exists1(d, q.And(hit, translate_sml(phi.arg, depth + 1)))
    if isinstance(phi, SSabBox):
        return q.Not(translate_sml(SSabDiamond(SNot(phi.arg)), depth))
    if isinstance(phi, SLocalSabBox):
        return q.Not(translate_sml(SLocalSabDiamond(SNot(phi.arg)), depth))
    raise TypeError(f"unknown SML node {phi!r}")
