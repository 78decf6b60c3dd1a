"""Logical-form AST, parser, canonical serializer and property classifier.

The grammar is event-centric. A form is either a single medical event or two
sub-forms joined by a connective; connectives are OR, AND, or a named
relation (e.g. ``given``, ``conducted/reveals``). Events carry one argument
(a ``|type|`` placeholder, the answer variable ``x``, or a literal entity)
and an optional bracketed attribute list. Attributes bind ``x`` or a literal
and may be wrapped by one of four operators: compare, range, sort, null-check.

Concrete surface syntax::

    MedicationEvent (|medication|) [dosage=x]
    MedicationEvent (|medication|) given {ConditionEvent (x) OR SymptomEvent (x)}
    LabEvent (x) [date=x, (result=x)>lab.refhigh]
    LabEvent (|test|) [sort(date=x, desc), result=x]
    LabEvent (|test|) [range(date=x, 2115-12-14, 2115-12-14), result=x]

OR/AND bind tighter than named relations; named relations are
left-associative. Serialization is canonical: single spaces, composite
operands braced, attribute lists comma+space separated. ``parse_lf``
inverts ``serialize_lf`` exactly.
"""

from __future__ import annotations

import random
import string
from dataclasses import dataclass, field

__all__ = [
    "AnswerVar",
    "AttributeSlot",
    "Composite",
    "Compare",
    "EventNode",
    "KbRef",
    "LfProperties",
    "LfSyntaxError",
    "Literal",
    "LogicalForm",
    "NullCheck",
    "Placeholder",
    "Range",
    "Sort",
    "UnbalancedDelimiterError",
    "classify_lf",
    "lf_equal",
    "parse_lf",
    "random_lf",
    "serialize_lf",
]

ANSWER_TOKEN = "x"

COMPARE_RELATIONS = ("<=", ">=", "<", ">", "=")
_COMPARE_ALIASES = {"≤": "<=", "≥": ">="}


class LfSyntaxError(ValueError):
    """Parse failure with position and the tokens that would have been legal."""

    def __init__(self, message: str, position: int, expected: tuple[str, ...] = ()):
        self.position = position
        self.expected = expected
        detail = f"{message} at position {position}"
        if expected:
            detail += " (expected " + " or ".join(expected) + ")"
        super().__init__(detail)


class UnbalancedDelimiterError(LfSyntaxError):
    """An opening (, [ or { was never closed (or a closer appears unopened)."""


# --- argument / binding values -------------------------------------------

@dataclass(frozen=True)
class Placeholder:
    entity_type: str

    def surface(self) -> str:
        return f"|{self.entity_type}|"


@dataclass(frozen=True)
class AnswerVar:
    def surface(self) -> str:
        return ANSWER_TOKEN


@dataclass(frozen=True)
class Literal:
    text: str

    def surface(self) -> str:
        return self.text


EventArg = Placeholder | AnswerVar | Literal
Binding = AnswerVar | Literal


@dataclass(frozen=True)
class KbRef:
    """Dotted reference into an external knowledge base, e.g. lab.refhigh."""

    path: str

    def __post_init__(self) -> None:
        if len(self.path.split(".")) < 2:
            raise ValueError(f"kb ref needs >=2 dotted segments: {self.path!r}")

    def surface(self) -> str:
        return self.path


Operand = Literal | KbRef


# --- operators ------------------------------------------------------------

@dataclass(frozen=True)
class Compare:
    relation: str  # one of < > <= >= =
    operand: Operand

    def __post_init__(self) -> None:
        if self.relation not in COMPARE_RELATIONS:
            raise ValueError(f"bad compare relation {self.relation!r}")


@dataclass(frozen=True)
class Range:
    lo: Operand | None
    hi: Operand | None

    def __post_init__(self) -> None:
        if self.lo is None and self.hi is None:
            raise ValueError("range needs at least one bound")


@dataclass(frozen=True)
class Sort:
    direction: str  # asc | desc

    def __post_init__(self) -> None:
        if self.direction not in ("asc", "desc"):
            raise ValueError(f"bad sort direction {self.direction!r}")


@dataclass(frozen=True)
class NullCheck:
    keep_missing: bool = False  # null(...) keeps absent values, notnull(...) present


Operator = Compare | Range | Sort | NullCheck


@dataclass(frozen=True)
class AttributeSlot:
    name: str
    binding: Binding = field(default_factory=AnswerVar)
    operator: Operator | None = None


@dataclass(frozen=True)
class EventNode:
    event_name: str
    argument: EventArg
    attributes: tuple[AttributeSlot, ...] = ()

    def __post_init__(self) -> None:
        names = [a.name for a in self.attributes]
        if len(names) != len(set(names)):
            raise ValueError(f"duplicate attribute names on {self.event_name}")


OR = "OR"
AND = "AND"


@dataclass(frozen=True)
class Composite:
    left: "LfNode"
    connective: str  # OR, AND, or a relation name
    right: "LfNode"

    @property
    def is_relation(self) -> bool:
        return self.connective not in (OR, AND)


LfNode = EventNode | Composite


@dataclass(frozen=True)
class LogicalForm:
    root: LfNode

    def events(self) -> list[EventNode]:
        return _collect_events(self.root)

    def placeholders(self) -> list[Placeholder]:
        """Placeholders in left-to-right traversal order."""
        out: list[Placeholder] = []
        for ev in self.events():
            if isinstance(ev.argument, Placeholder):
                out.append(ev.argument)
        return out

    def has_answer_var(self) -> bool:
        for ev in self.events():
            if isinstance(ev.argument, AnswerVar):
                return True
            for attr in ev.attributes:
                if isinstance(attr.binding, AnswerVar):
                    return True
        return False


def _collect_events(node: LfNode) -> list[EventNode]:
    if isinstance(node, EventNode):
        return [node]
    return _collect_events(node.left) + _collect_events(node.right)


@dataclass(frozen=True)
class LfProperties:
    fine_grained_answer: bool
    coarse_grained_answer: bool
    has_operator: bool
    needs_kb: bool
    relation_count: int


# --- parser ----------------------------------------------------------------

_IDENT_START = set(string.ascii_letters + "_")
_IDENT_BODY = set(string.ascii_letters + string.digits + "_")

# keywords opening the function-style operator forms inside [...]
_OPERATOR_KEYWORDS = ("sort", "range", "null", "notnull")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    # -- low level ---------------------------------------------------------

    def error(self, message: str, expected: tuple[str, ...] = (), pos: int | None = None):
        raise LfSyntaxError(message, self.pos if pos is None else pos, expected)

    def at_end(self) -> bool:
        return self.pos >= len(self.text)

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def expect(self, ch: str) -> None:
        if self.peek() != ch:
            got = repr(self.peek()) if not self.at_end() else "end of input"
            self.error(f"found {got}", expected=(repr(ch),))
        self.pos += 1

    def read_ident(self, allow_sep: str = "") -> str:
        """Identifier; ``allow_sep`` chars may join further segments
        (``/`` for relation names, ``.`` for kb paths)."""
        start = self.pos
        if self.peek() not in _IDENT_START:
            got = repr(self.peek()) if not self.at_end() else "end of input"
            self.error(f"found {got}", expected=("identifier",))
        while self.peek() in _IDENT_BODY:
            self.pos += 1
        while self.peek() in allow_sep and not self.at_end():
            nxt = self.pos + 1
            if nxt >= len(self.text) or self.text[nxt] not in _IDENT_START | set(string.digits):
                break
            self.pos += 1
            while self.peek() in _IDENT_BODY:
                self.pos += 1
        return self.text[start:self.pos]

    def read_until_balanced(self, closers: str, opener_pos: int) -> str:
        """Raw text up to the next closer in ``closers`` at depth 0.

        Nested (), [], {} inside the scanned text are allowed and skipped.
        """
        start = self.pos
        depth = {"(": 0, "[": 0, "{": 0}
        pairs = {")": "(", "]": "[", "}": "{"}
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch in "([{":
                depth[ch] += 1
            elif ch in ")]}":
                if ch in closers and depth[pairs[ch]] == 0:
                    return self.text[start:self.pos]
                if depth[pairs[ch]] == 0:
                    raise UnbalancedDelimiterError(
                        f"unmatched {ch!r}", self.pos)
                depth[pairs[ch]] -= 1
            elif ch in closers and all(v == 0 for v in depth.values()):
                return self.text[start:self.pos]
            self.pos += 1
        raise UnbalancedDelimiterError(
            "unclosed delimiter", opener_pos,
            expected=tuple(repr(c) for c in closers))

    # -- grammar -----------------------------------------------------------

    def parse(self) -> LogicalForm:
        self.skip_ws()
        if self.at_end():
            self.error("empty input", expected=("event", "'{'"))
        root = self.parse_form()
        self.skip_ws()
        if not self.at_end():
            self.error(f"unexpected trailing input {self.text[self.pos:self.pos+12]!r}")
        return LogicalForm(root)

    def parse_form(self) -> LfNode:
        # named relations, left-associative, looser than OR/AND
        node = self.parse_junction()
        while True:
            self.skip_ws()
            if self.peek() not in _IDENT_START:
                return node
            mark = self.pos
            name = self.read_ident(allow_sep="/")
            if name in (OR, AND):
                self.pos = mark  # junction level handles these
                return node
            right = self.parse_junction()
            node = Composite(node, name, right)

    def parse_junction(self) -> LfNode:
        node = self.parse_atom()
        while True:
            self.skip_ws()
            if self.peek() not in _IDENT_START:
                return node
            mark = self.pos
            name = self.read_ident(allow_sep="/")
            if name not in (OR, AND):
                self.pos = mark
                return node
            right = self.parse_atom()
            node = Composite(node, name, right)

    def parse_atom(self) -> LfNode:
        self.skip_ws()
        if self.peek() == "{":
            opener = self.pos
            self.pos += 1
            node = self.parse_form()
            self.skip_ws()
            if self.peek() != "}":
                raise UnbalancedDelimiterError("unclosed '{'", opener, expected=("'}'",))
            self.pos += 1
            return node
        if self.peek() not in _IDENT_START:
            got = repr(self.peek()) if not self.at_end() else "end of input"
            self.error(f"found {got}", expected=("event name", "'{'"))
        return self.parse_event()

    def parse_event(self) -> EventNode:
        name = self.read_ident()
        self.skip_ws()
        opener = self.pos
        self.expect("(")
        argument = self.parse_event_arg(opener)
        self.skip_ws()
        self.expect(")")
        self.skip_ws()
        attributes: tuple[AttributeSlot, ...] = ()
        if self.peek() == "[":
            attributes = self.parse_attr_list()
        return EventNode(name, argument, attributes)

    def parse_event_arg(self, opener: int) -> EventArg:
        self.skip_ws()
        if self.peek() == "|":
            self.pos += 1
            etype = self.read_ident()
            self.expect("|")
            return Placeholder(etype)
        raw = self.read_until_balanced(")", opener).strip()
        if not raw:
            self.error("empty event argument", expected=("'|type|'", "'x'", "entity text"))
        if raw == ANSWER_TOKEN:
            return AnswerVar()
        return Literal(raw)

    def parse_attr_list(self) -> tuple[AttributeSlot, ...]:
        opener = self.pos
        self.expect("[")
        slots: list[AttributeSlot] = []
        while True:
            self.skip_ws()
            if self.at_end():
                raise UnbalancedDelimiterError("unclosed '['", opener, expected=("']'",))
            slots.append(self.parse_attr())
            self.skip_ws()
            if self.peek() == ",":
                self.pos += 1
                continue
            if self.peek() == "]":
                self.pos += 1
                names = [s.name for s in slots]
                for n in names:
                    if names.count(n) > 1:
                        self.error(f"duplicate attribute {n!r}")
                return tuple(slots)
            got = repr(self.peek()) if not self.at_end() else "end of input"
            self.error(f"found {got}", expected=("','", "']'"))

    def parse_attr(self) -> AttributeSlot:
        self.skip_ws()
        if self.peek() == "(":
            return self.parse_compare_attr()
        name = self.read_ident()
        self.skip_ws()
        if name in _OPERATOR_KEYWORDS and self.peek() == "(":
            return self.parse_operator_attr(name)
        if self.peek() != "=":
            self.error("found " + (repr(self.peek()) if not self.at_end() else "end of input"),
                       expected=("'='",), pos=self.pos)
        self.pos += 1
        binding = self.parse_binding(",]")
        return AttributeSlot(name, binding)

    def parse_compare_attr(self) -> AttributeSlot:
        opener = self.pos
        self.expect("(")
        name = self.read_ident()
        self.skip_ws()
        self.expect("=")
        binding = self.parse_binding(")")
        if self.peek() != ")":
            raise UnbalancedDelimiterError("unclosed '('", opener, expected=("')'",))
        self.pos += 1
        self.skip_ws()
        relation = self.read_compare_relation()
        self.skip_ws()
        raw = self.read_until_balanced(",]", opener).strip()
        if not raw:
            self.error("missing compare operand", expected=("number", "kb ref", "literal"))
        return AttributeSlot(name, binding, Compare(relation, _operand(raw)))

    def read_compare_relation(self) -> str:
        two = self.text[self.pos:self.pos + 2]
        if two in ("<=", ">="):
            self.pos += 2
            return two
        ch = self.peek()
        if ch in _COMPARE_ALIASES:
            self.pos += 1
            return _COMPARE_ALIASES[ch]
        if ch and ch in "<>=":
            self.pos += 1
            return ch
        got = repr(ch) if not self.at_end() else "end of input"
        self.error(f"found {got}", expected=tuple(COMPARE_RELATIONS))
        raise AssertionError("unreachable")

    def parse_operator_attr(self, keyword: str) -> AttributeSlot:
        opener = self.pos
        self.expect("(")
        name = self.read_ident()
        self.skip_ws()
        self.expect("=")
        if keyword in ("null", "notnull"):
            binding = self.parse_binding(")")
            if self.peek() != ")":
                raise UnbalancedDelimiterError("unclosed '('", opener, expected=("')'",))
            self.pos += 1
            return AttributeSlot(name, binding, NullCheck(keep_missing=keyword == "null"))
        binding = self.parse_binding(",")
        self.expect(",")
        self.skip_ws()
        if keyword == "sort":
            direction = self.read_ident()
            if direction not in ("asc", "desc"):
                self.error(f"bad sort direction {direction!r}", expected=("asc", "desc"))
            self.skip_ws()
            if self.peek() != ")":
                raise UnbalancedDelimiterError("unclosed '('", opener, expected=("')'",))
            self.pos += 1
            return AttributeSlot(name, binding, Sort(direction))
        # range
        lo_raw = self.read_until_balanced(",", opener).strip()
        self.expect(",")
        self.skip_ws()
        hi_raw = self.read_until_balanced(")", opener).strip()
        self.expect(")")
        lo = None if lo_raw == "*" else _operand(lo_raw)
        hi = None if hi_raw == "*" else _operand(hi_raw)
        if lo is None and hi is None:
            self.error("range needs at least one bound", pos=opener)
        return AttributeSlot(name, binding, Range(lo, hi))

    def parse_binding(self, closers: str) -> Binding:
        self.skip_ws()
        raw = self.read_until_balanced(closers, self.pos).strip()
        if not raw:
            self.error("empty binding", expected=("'x'", "literal"))
        if raw == ANSWER_TOKEN:
            return AnswerVar()
        return Literal(raw)


def _operand(raw: str) -> Operand:
    parts = raw.split(".")
    if len(parts) >= 2 and all(p and p[0] in _IDENT_START and set(p) <= _IDENT_BODY for p in parts):
        return KbRef(raw)
    return Literal(raw)


def parse_lf(text: str) -> LogicalForm:
    """Parse a logical-form surface string into its AST.

    Raises :class:`LfSyntaxError` (with position and expected-token set) on
    malformed input; unbalanced delimiters raise the
    :class:`UnbalancedDelimiterError` subclass.
    """
    if not isinstance(text, str):
        raise TypeError("parse_lf expects a string")
    if not text.strip():
        raise LfSyntaxError("empty input", 0, expected=("event", "'{'"))
    return _Parser(text).parse()


# --- serializer -------------------------------------------------------------

def _serialize_operand(op: Operand) -> str:
    return op.surface()


def _serialize_attr(attr: AttributeSlot) -> str:
    base = f"{attr.name}={attr.binding.surface()}"
    op = attr.operator
    if op is None:
        return base
    if isinstance(op, Compare):
        return f"({base}){op.relation}{_serialize_operand(op.operand)}"
    if isinstance(op, Sort):
        return f"sort({base}, {op.direction})"
    if isinstance(op, Range):
        lo = "*" if op.lo is None else _serialize_operand(op.lo)
        hi = "*" if op.hi is None else _serialize_operand(op.hi)
        return f"range({base}, {lo}, {hi})"
    if isinstance(op, NullCheck):
        kw = "null" if op.keep_missing else "notnull"
        return f"{kw}({base})"
    raise TypeError(f"unknown operator {op!r}")


def _serialize_node(node: LfNode) -> str:
    if isinstance(node, EventNode):
        out = f"{node.event_name} ({node.argument.surface()})"
        if node.attributes:
            out += " [" + ", ".join(_serialize_attr(a) for a in node.attributes) + "]"
        return out
    left = _serialize_node(node.left)
    right = _serialize_node(node.right)
    if isinstance(node.left, Composite):
        left = "{" + left + "}"
    if isinstance(node.right, Composite):
        right = "{" + right + "}"
    return f"{left} {node.connective} {right}"


def serialize_lf(lf: LogicalForm) -> str:
    """Canonical surface string; ``parse_lf(serialize_lf(lf))`` equals ``lf``."""
    return _serialize_node(lf.root)


def lf_equal(a: LogicalForm, b: LogicalForm) -> bool:
    """Literal equality of canonical serializations.

    OR/AND operands are not reordered: ``A OR B`` differs from ``B OR A``.
    """
    return serialize_lf(a) == serialize_lf(b)


# --- property classification -------------------------------------------------

def classify_lf(lf: LogicalForm) -> LfProperties:
    fine = False
    coarse = False
    has_op = False
    needs_kb = False
    for ev in lf.events():
        if isinstance(ev.argument, AnswerVar):
            coarse = True
        for attr in ev.attributes:
            if isinstance(attr.binding, AnswerVar):
                fine = True
            if attr.operator is not None:
                has_op = True
                needs_kb = needs_kb or _operator_needs_kb(attr.operator)
    return LfProperties(
        fine_grained_answer=fine,
        coarse_grained_answer=coarse,
        has_operator=has_op,
        needs_kb=needs_kb,
        relation_count=_count_relations(lf.root),
    )


def _operator_needs_kb(op: Operator) -> bool:
    if isinstance(op, Compare):
        return isinstance(op.operand, KbRef)
    if isinstance(op, Range):
        return isinstance(op.lo, KbRef) or isinstance(op.hi, KbRef)
    return False


def _count_relations(node: LfNode) -> int:
    if isinstance(node, EventNode):
        return 0
    own = 1 if node.is_relation else 0
    return own + _count_relations(node.left) + _count_relations(node.right)


# --- grammar sampler ----------------------------------------------------------

_SAMPLE_EVENTS = (
    "MedicationEvent", "LabEvent", "ProcedureEvent", "ConditionEvent", "SymptomEvent",
)
_SAMPLE_ATTRS = ("dosage", "date", "result", "enddate", "startdate", "frequency", "status")
_SAMPLE_TYPES = ("problem", "test", "treatment", "mode", "medication")
_SAMPLE_RELATIONS = ("given", "conducted/reveals", "improves/worsens/causes", "conducted")
_SAMPLE_KB = ("lab.refhigh", "lab.reflow")
_SAMPLE_WORDS = ("aspirin", "insulin", "warfarin", "ldl", "hba1c", "chest pain", "40mg", "100")


def random_lf(rng: random.Random, max_depth: int = 4) -> LogicalForm:
    """Sample a random AST obeying the grammar; used for round-trip fuzzing.

    Literals are drawn from a canonical-safe pool (no delimiters, no bare
    ``x``), matching what instantiated templates actually contain.
    """
    return LogicalForm(_random_node(rng, max_depth))


def _random_node(rng: random.Random, depth: int) -> LfNode:
    if depth <= 1 or rng.random() < 0.4:
        return _random_event(rng)
    conn = rng.choice((OR, AND) + _SAMPLE_RELATIONS)
    return Composite(_random_node(rng, depth - 1), conn, _random_node(rng, depth - 1))


def _random_event(rng: random.Random) -> EventNode:
    name = rng.choice(_SAMPLE_EVENTS)
    roll = rng.random()
    if roll < 0.4:
        arg: EventArg = Placeholder(rng.choice(_SAMPLE_TYPES))
    elif roll < 0.7:
        arg = AnswerVar()
    else:
        arg = Literal(rng.choice(_SAMPLE_WORDS))
    n_attrs = rng.randint(0, 3)
    names = rng.sample(_SAMPLE_ATTRS, n_attrs)
    attrs = tuple(_random_attr(rng, n) for n in names)
    return EventNode(name, arg, attrs)


def _random_attr(rng: random.Random, name: str) -> AttributeSlot:
    binding: Binding = AnswerVar() if rng.random() < 0.7 else Literal(rng.choice(_SAMPLE_WORDS))
    roll = rng.random()
    if roll < 0.55:
        return AttributeSlot(name, binding)
    if roll < 0.75:
        operand = KbRef(rng.choice(_SAMPLE_KB)) if rng.random() < 0.5 \
            else Literal(str(rng.randint(0, 500)))
        return AttributeSlot(name, binding, Compare(rng.choice(COMPARE_RELATIONS), operand))
    if roll < 0.85:
        return AttributeSlot(name, binding, Sort(rng.choice(("asc", "desc"))))
    if roll < 0.95:
        lo: Operand | None = Literal(str(rng.randint(0, 100)))
        hi: Operand | None = Literal(str(rng.randint(100, 500)))
        drop = rng.random()
        if drop < 0.2:
            lo = None
        elif drop < 0.4:
            hi = None
        return AttributeSlot(name, binding, Range(lo, hi))
    return AttributeSlot(name, binding, NullCheck(keep_missing=rng.random() < 0.5))
