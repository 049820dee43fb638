"""Seeded random instances for the strategy-agreement suite.

Structures are small total digraphs; formulas are depth-bounded random
trees with a bounded number of quantifiers.  The prenex variant puts all
quantifiers up front so every strategy applies.
"""

from __future__ import annotations

import random

from . import qctl as q
from .kripke import KripkeStructure

__all__ = ["random_structure", "random_formula", "random_instances"]

_STRUCT_PROPS = ("a", "b", "c")


def random_structure(rng: random.Random, max_states: int = 4,
                     max_props: int = 3) -> KripkeStructure:
    n = rng.randint(2, max_states)
    names = tuple(f"x{i}" for i in range(n))
    edges = set()
    for s in names:
        out = rng.sample(names, rng.randint(1, n))
        for t in out:
            edges.add((s, t))
    props = _STRUCT_PROPS[:rng.randint(1, max_props)]
    labels = {}
    for s in names:
        labels[s] = frozenset(p for p in props if rng.random() < 0.5)
    return KripkeStructure(names, frozenset(edges), labels, names[0])


def _random_body(rng: random.Random, props: list[str], height: int,
                 depth: int) -> q.Formula:
    leaves = [lambda: q.Atom(rng.choice(props)), lambda: q.TRUE, lambda: q.FALSE]
    if height <= 0 or depth <= 0:
        return rng.choice(leaves)()
    roll = rng.random()
    if roll < 0.18:
        return rng.choice(leaves)()
    if roll < 0.30:
        return q.Not(_random_body(rng, props, height, depth - 1))
    if roll < 0.52:
        cls = rng.choice((q.And, q.Or, q.Implies, q.Iff))
        return cls(_random_body(rng, props, height, depth - 1),
                   _random_body(rng, props, height, depth - 1))
    un = (q.EX, q.AX, q.EF, q.AF, q.EG, q.AG)
    bi = (q.EU, q.AU, q.EW, q.AW)
    if roll < 0.80:
        return rng.choice(un)(_random_body(rng, props, height - 1, depth - 1))
    cls = rng.choice(bi)
    return cls(_random_body(rng, props, height - 1, depth - 1),
               _random_body(rng, props, height - 1, depth - 1))


def random_formula(rng: random.Random, struct_props: list[str],
                   quantifiers: int = 2, height: int = 3,
                   prenex: bool = True, uniq_quants: bool = True) -> q.Formula:
    """Random formula over the structure's propositions plus quantified ones.

    prenex=True puts the quantifier block up front (what the flat
    strategies need); otherwise quantifiers may also appear at one Boolean
    split below the root.
    """
    nq = rng.randint(0, quantifiers)
    qprops = [f"p{i}" for i in range(1, nq + 1)]
    props = list(struct_props) + qprops or ["a"]
    kinds = [q.Exists, q.Forall] + ([q.Exists1, q.Forall1] if uniq_quants else [])
    body = _random_body(rng, props, height, height + 2)
    if prenex or nq == 0:
        out = body
        for p in reversed(qprops):
            out = rng.choice(kinds)(p, out)
        return out
    inner = body
    for p in reversed(qprops[1:]):
        inner = rng.choice(kinds)(p, inner)
    side = _random_body(rng, props[:len(struct_props)], height, 2)
    joined = rng.choice((q.And, q.Or))(side, inner)
    return rng.choice(kinds)(qprops[0], joined)


def random_instances(seed: int, count: int, prenex: bool = True,
                     max_states: int = 4, quantifiers: int = 2,
                     height: int = 3):
    """Yield (structure, formula) pairs, reproducible from the seed."""
    rng = random.Random(seed)
    for _ in range(count):
        k = random_structure(rng, max_states)
        phi = random_formula(rng, sorted(k.props), quantifiers, height, prenex)
        yield k, phi
