"""Frequency-chain description language and exact evaluator.

A chain is a line-oriented document, one node per line, nodes defined before
use::

    source ld1 192.1THz
    shift  ld2 ld1 +3.284GHz
    beat   nu12 ld1 ld2
    check  nu12 3.284GHz tol=1Hz

Every edge carries a set of frequency components held as integer millihertz,
so sums, differences, doublings and the divider checks are exact.
Optical carriers can be given in ``nm``; they are converted with the exact
speed of light and rounded to the nearest millihertz. Only differences are
ever checked, so the absolute optical value does not matter.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from importlib import resources
from typing import Iterable, Optional

from .constants import SPEED_OF_LIGHT

MAX_COMPONENTS = 64

_UNIT_MHZ = {
    "mHz": 1,
    "Hz": 10**3,
    "kHz": 10**6,
    "MHz": 10**9,
    "GHz": 10**12,
    "THz": 10**15,
}
_WAVELENGTH_UNITS = {"nm": Fraction(1, 10**9), "um": Fraction(1, 10**6)}
_LITERAL = re.compile(
    r"^(?P<sign>[+-])?(?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)"
    r"(?P<unit>THz|GHz|MHz|kHz|mHz|Hz|nm|um)$"
)


class ChainError(ValueError):
    """Problem in a chain document or in evaluating it."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


class ChainParseError(ChainError):
    pass


class ChainConfigError(ChainError):
    pass


@dataclass(frozen=True)
class ChainNode:
    id: str
    kind: str
    inputs: tuple[str, ...] = ()
    freq_mhz: Optional[int] = None  # source/vco freq, shift delta, sideband offset, lowpass cutoff
    orders: Optional[tuple[int, ...]] = None
    n: Optional[int] = None
    line: Optional[int] = None

    def __post_init__(self):
        if self.kind == "divide" and (self.n is None or self.n < 1):
            raise ChainError(f"divide '{self.id}': n must be >= 1", self.line)
        if self.kind == "lowpass" and not (self.freq_mhz and self.freq_mhz > 0):
            raise ChainError(f"lowpass '{self.id}': cutoff must be > 0", self.line)
        if self.kind in ("source", "vco") and (self.freq_mhz is None or self.freq_mhz < 0):
            raise ChainError(f"{self.kind} '{self.id}': frequency must be >= 0", self.line)

    def to_text(self) -> str:
        f = _format_mhz(self.freq_mhz) if self.freq_mhz is not None else None
        if self.kind in ("source", "vco"):
            return f"{self.kind} {self.id} {f}"
        if self.kind == "double":
            return f"double {self.id} {self.inputs[0]}"
        if self.kind == "shift":
            sign = "+" if self.freq_mhz >= 0 else ""
            return f"shift {self.id} {self.inputs[0]} {sign}{f}"
        if self.kind == "sideband":
            orders = ",".join(str(k) for k in self.orders)
            return f"sideband {self.id} {self.inputs[0]} {f} orders={orders}"
        if self.kind in ("beat", "mix"):
            return f"{self.kind} {self.id} {self.inputs[0]} {self.inputs[1]}"
        if self.kind == "lowpass":
            return f"lowpass {self.id} {self.inputs[0]} {f}"
        if self.kind == "divide":
            return f"divide {self.id} {self.inputs[0]} {self.n}"
        raise ChainError(f"unknown node kind {self.kind!r}")


@dataclass(frozen=True)
class FreqCheck:
    node_id: str
    expected_mhz: int
    tol_mhz: int
    line: Optional[int] = None

    def to_text(self) -> str:
        return f"check {self.node_id} {_format_mhz(self.expected_mhz)} tol={_format_mhz(self.tol_mhz)}"


@dataclass(frozen=True)
class FreqChain:
    nodes: tuple[ChainNode, ...]
    checks: tuple[FreqCheck, ...] = ()

    def __post_init__(self):
        seen: dict[str, ChainNode] = {}
        for node in self.nodes:
            if node.id in seen:
                raise ChainParseError(
                    f"duplicate id '{node.id}' (first defined on line {seen[node.id].line})",
                    node.line,
                )
            for ref in node.inputs:
                if ref not in seen:
                    raise ChainParseError(f"'{node.id}' references undefined node '{ref}'", node.line)
            seen[node.id] = node

    def __len__(self):
        return len(self.nodes)

    def node(self, node_id: str) -> ChainNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def replace_node(self, new: ChainNode) -> "FreqChain":
        nodes = tuple(new if n.id == new.id else n for n in self.nodes)
        return FreqChain(nodes, self.checks)

    def to_text(self) -> str:
        lines = [n.to_text() for n in self.nodes] + [c.to_text() for c in self.checks]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class FreqSet:
    """Sorted, de-duplicated frequency components in millihertz."""

    components_mhz: tuple[int, ...] = field(default_factory=tuple)

    @classmethod
    def of(cls, values: Iterable[int]) -> "FreqSet":
        vals = sorted(set(int(v) for v in values))
        if any(v < 0 for v in vals):
            raise ChainError("negative frequency component")
        return cls(tuple(vals))

    @property
    def hz(self) -> list[float]:
        return [v / 1000 for v in self.components_mhz]

    def __len__(self):
        return len(self.components_mhz)

    def __iter__(self):
        return iter(self.components_mhz)

    def __contains__(self, item):
        return item in self.components_mhz

    def nearest(self, target_mhz: int) -> Optional[int]:
        if not self.components_mhz:
            return None
        return min(self.components_mhz, key=lambda v: (abs(v - target_mhz), v))


def _format_mhz(value: int) -> str:
    for unit in ("THz", "GHz", "MHz", "kHz", "Hz"):
        scale = _UNIT_MHZ[unit]
        if value % scale == 0 and abs(value) >= scale:
            return f"{value // scale}{unit}"
    for unit in ("GHz", "MHz", "kHz", "Hz"):
        scale = _UNIT_MHZ[unit]
        if abs(value) >= scale:
            return f"{Decimal(value) / Decimal(scale)}{unit}"
    return f"{value}mHz"


def parse_frequency(text: str, line: Optional[int] = None, column: Optional[int] = None,
                    signed: bool = False) -> int:
    """Parse a literal like ``160MHz``, ``-60MHz`` or ``780nm`` into millihertz."""
    m = _LITERAL.match(text)
    if not m:
        raise ChainParseError(f"malformed frequency literal {text!r}", line, column)
    sign = -1 if m.group("sign") == "-" else 1
    if m.group("sign") and not signed:
        raise ChainParseError(f"unexpected sign in frequency literal {text!r}", line, column)
    try:
        num = Fraction(Decimal(m.group("num")))
    except InvalidOperation:  # pragma: no cover - regex already guards this
        raise ChainParseError(f"malformed frequency literal {text!r}", line, column)
    unit = m.group("unit")
    if unit in _WAVELENGTH_UNITS:
        if num == 0:
            raise ChainParseError("wavelength must be non-zero", line, column)
        freq = Fraction(int(SPEED_OF_LIGHT) * 1000) / (num * _WAVELENGTH_UNITS[unit])
        return sign * round(freq)
    value = num * _UNIT_MHZ[unit]
    if value.denominator != 1:
        raise ChainParseError(
            f"frequency literal {text!r} is not a whole number of millihertz", line, column
        )
    return sign * int(value)


_ARITY = {
    "source": ("freq",),
    "vco": ("freq",),
    "double": ("in",),
    "shift": ("in", "sfreq"),
    "sideband": ("in", "freq", "orders"),
    "beat": ("in", "in"),
    "mix": ("in", "in"),
    "lowpass": ("in", "freq"),
    "divide": ("in", "int"),
}


def _tokens(line: str) -> list[tuple[str, int]]:
    return [(m.group(0), m.start() + 1) for m in re.finditer(r"\S+", line)]


def parse_chain(text: str) -> FreqChain:
    nodes: list[ChainNode] = []
    checks: list[FreqCheck] = []
    defined: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = _tokens(line)
        if not toks:
            continue
        kind, kcol = toks[0]
        if kind == "check":
            checks.append(_parse_check(toks, lineno))
            continue
        if kind not in _ARITY:
            raise ChainParseError(f"unknown node kind {kind!r}", lineno, kcol)
        spec = _ARITY[kind]
        if len(toks) != 2 + len(spec):
            raise ChainParseError(
                f"'{kind}' takes {len(spec) + 1} arguments, got {len(toks) - 1}", lineno, kcol
            )
        node_id, icol = toks[1]
        if not re.fullmatch(r"[A-Za-z_][\w.\-]*", node_id):
            raise ChainParseError(f"invalid node id {node_id!r}", lineno, icol)
        if node_id in defined:
            raise ChainParseError(
                f"duplicate id '{node_id}' (lines {defined[node_id]} and {lineno})", lineno, icol
            )
        inputs, freq, orders, n = [], None, None, None
        for role, (tok, col) in zip(spec, toks[2:]):
            if role == "in":
                if tok not in defined:
                    raise ChainParseError(f"reference to undefined node '{tok}'", lineno, col)
                inputs.append(tok)
            elif role == "freq":
                freq = parse_frequency(tok, lineno, col)
            elif role == "sfreq":
                freq = parse_frequency(tok, lineno, col, signed=True)
            elif role == "int":
                if not re.fullmatch(r"\d+", tok) or int(tok) < 1:
                    raise ChainParseError(f"divider must be a positive integer, got {tok!r}", lineno, col)
                n = int(tok)
            elif role == "orders":
                m = re.fullmatch(r"orders=([+-]?\d+(?:,[+-]?\d+)*)", tok)
                if not m:
                    raise ChainParseError(f"expected orders=<k,k,...>, got {tok!r}", lineno, col)
                orders = tuple(int(k) for k in m.group(1).split(","))
        try:
            node = ChainNode(node_id, kind, tuple(inputs), freq, orders, n, lineno)
        except ChainError as exc:
            raise ChainParseError(exc.message, lineno, icol) from None
        nodes.append(node)
        defined[node_id] = lineno
    return FreqChain(tuple(nodes), tuple(checks))


def _parse_check(toks, lineno: int) -> FreqCheck:
    if len(toks) not in (3, 4):
        raise ChainParseError("check takes <id> <freq> [tol=<freq>]", lineno, toks[0][1])
    node_id = toks[1][0]
    expected = parse_frequency(toks[2][0], lineno, toks[2][1])
    tol = 0
    if len(toks) == 4:
        tok, col = toks[3]
        if not tok.startswith("tol="):
            raise ChainParseError(f"expected tol=<freq>, got {tok!r}", lineno, col)
        tol = parse_frequency(tok[4:], lineno, col + 4)
    return FreqCheck(node_id, expected, tol, lineno)


def load_bundled(name: str) -> str:
    """Text of a chain file shipped with the package (e.g. ``cooling_chain.fc``)."""
    return resources.files("atomnav").joinpath("chains").joinpath(name).read_text(encoding="utf-8")


def _eval_node(node: ChainNode, values: dict[str, FreqSet]) -> FreqSet:
    ins = [values[i].components_mhz for i in node.inputs]
    k = node.kind
    if k in ("source", "vco"):
        out = [node.freq_mhz]
    elif k == "double":
        out = [2 * f for f in ins[0]]
    elif k == "shift":
        out = [max(0, f + node.freq_mhz) for f in ins[0]]
    elif k == "sideband":
        out = [f + order * node.freq_mhz for f in ins[0] for order in node.orders]
        out = [f for f in out if f >= 0]
    elif k == "beat":
        out = [abs(a - b) for a in ins[0] for b in ins[1]]
    elif k == "mix":
        out = [v for a in ins[0] for b in ins[1] for v in (abs(a - b), a + b)]
    elif k == "lowpass":
        out = [f for f in ins[0] if f < node.freq_mhz]
    elif k == "divide":
        # round half to even on the rare non-integral mHz result
        out = [round(Fraction(f, node.n)) for f in ins[0]]
    else:  # pragma: no cover - guarded by the parser
        raise ChainError(f"unknown node kind {k!r}", node.line)
    result = FreqSet.of(out)
    if len(result) > MAX_COMPONENTS:
        raise ChainError(
            f"node '{node.id}' produced {len(result)} components (cap {MAX_COMPONENTS})", node.line
        )
    return result


def evaluate(chain: FreqChain) -> dict[str, FreqSet]:
    values: dict[str, FreqSet] = {}
    for node in chain.nodes:
        values[node.id] = _eval_node(node, values)
    return values


@dataclass(frozen=True)
class CheckResult:
    node_id: str
    expected_mhz: int
    tol_mhz: int
    nearest_mhz: Optional[int]
    passed: bool

    @property
    def expected_hz(self) -> float:
        return self.expected_mhz / 1000

    @property
    def nearest_hz(self) -> Optional[float]:
        return None if self.nearest_mhz is None else self.nearest_mhz / 1000

    def to_dict(self) -> dict:
        return {
            "id": self.node_id,
            "expected_hz": self.expected_hz,
            "nearest_hz": self.nearest_hz,
            "tolerance_hz": self.tol_mhz / 1000,
            "pass": self.passed,
        }


def check_locks(chain: FreqChain, values: Optional[dict[str, FreqSet]] = None) -> list[CheckResult]:
    ids = {n.id for n in chain.nodes}
    for chk in chain.checks:
        if chk.node_id not in ids:
            raise ChainConfigError(f"check references unknown node '{chk.node_id}'", chk.line)
    if values is None:
        values = evaluate(chain)
    results = []
    for chk in chain.checks:
        nearest = values[chk.node_id].nearest(chk.expected_mhz)
        ok = nearest is not None and abs(nearest - chk.expected_mhz) <= chk.tol_mhz
        results.append(CheckResult(chk.node_id, chk.expected_mhz, chk.tol_mhz, nearest, ok))
    return results


def report_json(results: list[CheckResult]) -> str:
    return json.dumps([r.to_dict() for r in results], indent=2)
