"""QBF circuits: DAG representation, QCIR-G14 and SMT-LIB2 emitters, QCIR parser.

Circuits are immutable node DAGs.  Negation is a node here but becomes a
literal polarity in QCIR (the format has no not-gate).  Empty and() is true
and empty or() is false, per the usual QCIR convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

__all__ = [
    "CNode", "CVar", "CNot", "CAnd", "COr", "CQuant", "CTRUE", "CFALSE",
    "cand", "cor", "cnot", "cimp", "ciff", "cquant",
    "QbfCircuit", "CircuitError", "QcirParseError",
    "emit_qcir", "parse_qcir", "emit_smt",
]


class CircuitError(ValueError):
    pass


class CQuantKind:
    EXISTS = "exists"
    FORALL = "forall"


@dataclass(frozen=True)
class CNode:
    pass


@dataclass(frozen=True)
class CVar(CNode):
    name: str


@dataclass(frozen=True, eq=False)
class CNot(CNode):
    arg: CNode


@dataclass(frozen=True, eq=False)
class CAnd(CNode):
    args: tuple[CNode, ...]


@dataclass(frozen=True, eq=False)
class COr(CNode):
    args: tuple[CNode, ...]


@dataclass(frozen=True, eq=False)
class CQuant(CNode):
    kind: str  # "exists" | "forall"
    vars: tuple[str, ...]
    body: CNode


@dataclass(frozen=True)
class _CConst(CNode):
    value: bool


CTRUE = _CConst(True)
CFALSE = _CConst(False)


def cand(args: Iterable[CNode]) -> CNode:
    """Conjunction with constant folding; order of live arguments preserved."""
    out: list[CNode] = []
    for a in args:
        if a is CFALSE:
            return CFALSE
        if a is CTRUE:
            continue
        out.append(a)
    if not out:
        return CTRUE
    if len(out) == 1:
        return out[0]
    return CAnd(tuple(out))


def cor(args: Iterable[CNode]) -> CNode:
    out: list[CNode] = []
    for a in args:
        if a is CTRUE:
            return CTRUE
        if a is CFALSE:
            continue
        out.append(a)
    if not out:
        return CFALSE
    if len(out) == 1:
        return out[0]
    return COr(tuple(out))


def cnot(a: CNode) -> CNode:
    if a is CTRUE:
        return CFALSE
    if a is CFALSE:
        return CTRUE
    if isinstance(a, CNot):
        return a.arg
    return CNot(a)


def cimp(a: CNode, b: CNode) -> CNode:
    return cor([cnot(a), b])


def ciff(a: CNode, b: CNode) -> CNode:
    if a is CTRUE:
        return b
    if a is CFALSE:
        return cnot(b)
    if b is CTRUE:
        return a
    if b is CFALSE:
        return cnot(a)
    return cand([cor([cnot(a), b]), cor([cnot(b), a])])


def cquant(kind: str, names: Iterable[str], body: CNode) -> CNode:
    names = tuple(names)
    if not names or body is CTRUE or body is CFALSE:
        return body
    return CQuant(kind, names, body)


def _walk(root: CNode):
    """Postorder DAG traversal (each node once), iterative."""
    seen: set[int] = set()
    stack: list[tuple[CNode, bool]] = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            yield node
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        if isinstance(node, CNot):
            stack.append((node.arg, False))
        elif isinstance(node, (CAnd, COr)):
            for a in reversed(node.args):
                stack.append((a, False))
        elif isinstance(node, CQuant):
            stack.append((node.body, False))


@dataclass
class QbfCircuit:
    """A closed QBF circuit plus emission metadata.

    prenex: quantifiers are promised to form a single top chain over a
    quantifier-free matrix (checked structurally by is_prenex()).
    meta: free-form info (strategy name, instance, exactness flag, ...).
    """

    root: CNode
    prenex: bool = False
    meta: dict = field(default_factory=dict)

    def free_vars(self) -> frozenset[str]:
        bound: set[str] = set()
        free: set[str] = set()
        for node in _walk(self.root):
            if isinstance(node, CVar):
                free.add(node.name)
            elif isinstance(node, CQuant):
                bound |= set(node.vars)
        return frozenset(free - bound)

    def bound_vars(self) -> list[str]:
        out: list[str] = []
        for node in _walk(self.root):
            if isinstance(node, CQuant):
                out.extend(node.vars)
        return out

    def check_closed(self) -> None:
        bound = self.bound_vars()
        if len(bound) != len(set(bound)):
            dupes = sorted({v for v in bound if bound.count(v) > 1})
            raise CircuitError(f"variable bound more than once: {dupes}")
        free = self.free_vars()
        if free:
            raise CircuitError(f"free variables: {sorted(free)}")

    def var_count(self) -> int:
        return len(self.bound_vars())

    def gate_count(self) -> int:
        """Number of and/or/quantifier gates in the DAG (QCIR gate lines)."""
        n = 0
        root = _strip_prefix(self.root)[1] if self.prenex else self.root
        for node in _walk(root):
            if isinstance(node, (CAnd, COr, CQuant)):
                n += 1
        if not isinstance(root, (CAnd, COr, CQuant)):
            n += 1  # emitters wrap a bare literal/constant output in a gate
        return n

    def is_prenex(self) -> bool:
        blocks, matrix = _strip_prefix(self.root)
        return all(not isinstance(n, CQuant) for n in _walk(matrix))

    def prefix_blocks(self) -> list[tuple[str, tuple[str, ...]]]:
        return _strip_prefix(self.root)[0]


def _strip_prefix(root: CNode) -> tuple[list[tuple[str, tuple[str, ...]]], CNode]:
    blocks = []
    node = root
    while isinstance(node, CQuant):
        blocks.append((node.kind, node.vars))
        node = node.body
    return blocks, node


# -- QCIR-G14 ----------------------------------------------------------------


def emit_qcir(circuit: QbfCircuit) -> str:
    """QCIR-G14 text.  Prenex circuits get prefix lines; otherwise quantifier
    gates.  Gate numbering is the postorder DAG position, so output is
    deterministic down to the byte."""
    circuit.check_closed()
    if circuit.prenex and not circuit.is_prenex():
        raise CircuitError("circuit flagged prenex but has inner quantifiers")
    lines = ["#QCIR-G14"]
    body = circuit.root
    if circuit.prenex:
        blocks, body = _strip_prefix(circuit.root)
        for kind, names in blocks:
            lines.append(f"{kind}({', '.join(names)})")

    gate_names: dict[int, str] = {}
    gate_lines: list[str] = []
    counter = 0

    def lit(node: CNode) -> str:
        if isinstance(node, CVar):
            return node.name
        if isinstance(node, CNot):
            inner = lit(node.arg)
            if inner.startswith("-"):
                return inner[1:]
            return "-" + inner
        return gate_names[id(node)]

    for node in _walk(body):
        if isinstance(node, (CAnd, COr)):
            counter += 1
            name = f"g{counter}"
            gate_names[id(node)] = name
            op = "and" if isinstance(node, CAnd) else "or"
            gate_lines.append(f"{name} = {op}({', '.join(lit(a) for a in node.args)})")
        elif isinstance(node, CQuant):
            counter += 1
            name = f"g{counter}"
            gate_names[id(node)] = name
            gate_lines.append(
                f"{name} = {node.kind}({', '.join(node.vars)}; {lit(node.body)})")
        elif isinstance(node, _CConst):
            counter += 1
            name = f"g{counter}"
            gate_names[id(node)] = name
            gate_lines.append(f"{name} = and()" if node.value else f"{name} = or()")

    if isinstance(body, (CVar, CNot)):
        counter += 1
        gate_lines.append(f"g{counter} = and({lit(body)})")
        out = f"g{counter}"
    else:
        out = lit(body)
    lines.append(f"output({out})")
    lines.extend(gate_lines)
    return "\n".join(lines) + "\n"


class QcirParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def parse_qcir(text: str) -> QbfCircuit:
    """Parse QCIR-G14 (and/or gates, quantifier gates or prefix lines)."""
    lines = text.splitlines()
    prefix: list[tuple[str, tuple[str, ...]]] = []
    output_lit: str | None = None
    gates: dict[str, tuple] = {}  # name -> ("and"|"or", args) | (kind, vars, lit)
    order: list[str] = []

    def split_args(blob: str, lineno: int) -> list[str]:
        blob = blob.strip()
        if not blob:
            return []
        return [a.strip() for a in blob.split(",")]

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            m = _match_call(line)
            if not m:
                raise QcirParseError(f"cannot parse {line!r}", lineno)
            head, blob = m
            if head in ("exists", "forall"):
                if output_lit is not None:
                    raise QcirParseError("prefix after output", lineno)
                prefix.append((head, tuple(split_args(blob, lineno))))
            elif head == "output":
                args = split_args(blob, lineno)
                if len(args) != 1:
                    raise QcirParseError("output takes one literal", lineno)
                output_lit = args[0]
            elif head == "free":
                if split_args(blob, lineno):
                    raise QcirParseError("free variables unsupported", lineno)
            else:
                raise QcirParseError(f"unknown statement {head!r}", lineno)
            continue
        name, rhs = line.split("=", 1)
        name = name.strip()
        m = _match_call(rhs.strip())
        if not m:
            raise QcirParseError(f"cannot parse gate {line!r}", lineno)
        head, blob = m
        if name in gates:
            raise QcirParseError(f"gate {name!r} redefined", lineno)
        if head in ("and", "or"):
            gates[name] = (head, split_args(blob, lineno))
        elif head in ("exists", "forall"):
            if ";" not in blob:
                raise QcirParseError("quantifier gate needs 'vars; literal'", lineno)
            vpart, lpart = blob.split(";", 1)
            gates[name] = (head, split_args(vpart, lineno), lpart.strip())
        else:
            raise QcirParseError(f"unsupported gate type {head!r}", lineno)
        order.append(name)

    if output_lit is None:
        raise QcirParseError("missing output(...)", len(lines))

    building: set[str] = set()
    built: dict[str, CNode] = {}

    def resolve(tok: str) -> CNode:
        neg = tok.startswith("-")
        if neg:
            tok = tok[1:]
        if tok in gates:
            node = build(tok)
        else:
            node = CVar(tok)
        return cnot(node) if neg else node

    def build(name: str) -> CNode:
        if name in built:
            return built[name]
        if name in building:
            raise QcirParseError(f"cycle through gate {name!r}", 0)
        building.add(name)
        spec = gates[name]
        if spec[0] == "and":
            node: CNode = CAnd(tuple(resolve(t) for t in spec[1])) if spec[1] else CTRUE
        elif spec[0] == "or":
            node = COr(tuple(resolve(t) for t in spec[1])) if spec[1] else CFALSE
        else:
            node = CQuant(spec[0], tuple(spec[1]), resolve(spec[2]))
        building.discard(name)
        built[name] = node
        return node

    root = resolve(output_lit)
    for kind, names in reversed(prefix):
        root = cquant(kind, names, root)
    circuit = QbfCircuit(root=root, prenex=bool(prefix))
    circuit.check_closed()
    return circuit


def _match_call(s: str) -> tuple[str, str] | None:
    if not s.endswith(")") or "(" not in s:
        return None
    head, blob = s.split("(", 1)
    return head.strip(), blob[:-1]


# -- SMT-LIB2 ----------------------------------------------------------------


def emit_smt(circuit: QbfCircuit) -> str:
    """SMT-LIB2 text whose check-sat answer equals circuit validity.

    The closed formula is asserted with nested exists/forall binders over
    Bool constants; shared gates are expanded (tree form), which is fine for
    the circuit shapes the reductions produce.
    """
    circuit.check_closed()
    memo: dict[int, str] = {}

    def go(node: CNode) -> str:
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, CVar):
            s = node.name
        elif isinstance(node, _CConst):
            s = "true" if node.value else "false"
        elif isinstance(node, CNot):
            s = f"(not {go(node.arg)})"
        elif isinstance(node, CAnd):
            s = "(and " + " ".join(go(a) for a in node.args) + ")" if node.args else "true"
        elif isinstance(node, COr):
            s = "(or " + " ".join(go(a) for a in node.args) + ")" if node.args else "false"
        elif isinstance(node, CQuant):
            binds = " ".join(f"({v} Bool)" for v in node.vars)
            s = f"({node.kind} ({binds}) {go(node.body)})"
        else:
            raise CircuitError(f"unknown node {node!r}")
        memo[key] = s
        return s

    return "\n".join([
        "(set-logic UF)",
        f"(assert {go(circuit.root)})",
        "(check-sat)",
    ]) + "\n"
