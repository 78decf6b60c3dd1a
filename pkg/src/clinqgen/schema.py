"""Ontology schema: event types, attributes, relations, entity mapping.

The schema is what logical forms are validated against, and what ties the
placeholder entity types of question templates to event types. It also
carries the alignment from corpus relation-annotation types to LF relation
names, so the generator can pick relation edges for a relation LF without
per-dataset wiring.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from clinqgen.lf import Compare, KbRef, LogicalForm, Placeholder, Range

__all__ = ["Schema", "SchemaError", "load_schema", "default_schema", "validate_lf"]

SECTIONS = ("events", "relations", "entity_map", "kb", "relation_map")


class SchemaError(ValueError):
    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Schema:
    events: dict[str, frozenset[str]]           # event name -> allowed attribute names
    relations: frozenset[str]                   # LF relation names
    entity_map: dict[str, frozenset[str]]       # placeholder type -> event names
    kb_paths: frozenset[str]                    # allowed KbRef paths
    relation_map: dict[str, str] = field(default_factory=dict)  # corpus rel type -> LF relation

    def events_for_entity(self, entity_type: str) -> frozenset[str]:
        return self.entity_map.get(entity_type, frozenset())

    def entity_types_for_event(self, event_name: str) -> frozenset[str]:
        return frozenset(t for t, evs in self.entity_map.items() if event_name in evs)

    def corpus_relation_types(self, lf_relation: str) -> frozenset[str]:
        """Corpus annotation relation types aligned to one LF relation name."""
        return frozenset(k for k, v in self.relation_map.items() if v == lf_relation)


def load_schema(source: str | Path) -> Schema:
    """Load a schema file (line-oriented sections, ``name: a,b,c`` entries).

    Sections: [events], [relations], [entity_map], [kb], [relation_map].
    ``#`` starts a comment. Duplicate definitions are errors.
    """
    path = Path(source)
    return parse_schema(path.read_text(encoding="utf-8"))


def parse_schema(text: str) -> Schema:
    events: dict[str, frozenset[str]] = {}
    relations: list[str] = []
    entity_map: dict[str, frozenset[str]] = {}
    kb_paths: list[str] = []
    relation_map: dict[str, str] = {}
    section = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise SchemaError(f"unknown section [{section}]", line_no)
            continue
        if section is None:
            raise SchemaError("entry before any section header", line_no)
        if section == "events":
            name, values = _split_entry(line, line_no)
            if name in events:
                raise SchemaError(f"duplicate event {name}", line_no)
            events[name] = frozenset(values)
        elif section == "relations":
            for name in _split_values(line):
                if name in relations:
                    raise SchemaError(f"duplicate relation {name}", line_no)
                relations.append(name)
        elif section == "entity_map":
            name, values = _split_entry(line, line_no)
            if name in entity_map:
                raise SchemaError(f"duplicate entity type {name}", line_no)
            if not values:
                raise SchemaError(f"entity type {name} maps to no events", line_no)
            entity_map[name] = frozenset(values)
        elif section == "kb":
            for p in _split_values(line):
                if len(p.split(".")) < 2:
                    raise SchemaError(f"kb path needs >=2 segments: {p}", line_no)
                if p in kb_paths:
                    raise SchemaError(f"duplicate kb path {p}", line_no)
                kb_paths.append(p)
        elif section == "relation_map":
            name, values = _split_entry(line, line_no)
            if name in relation_map:
                raise SchemaError(f"duplicate relation_map entry {name}", line_no)
            if len(values) != 1:
                raise SchemaError(f"relation_map entry {name} must name one LF relation", line_no)
            relation_map[name] = values[0]
    if not events:
        raise SchemaError("schema has no events")
    unknown = [v for v in relation_map.values() if v not in relations]
    if unknown:
        raise SchemaError(f"relation_map targets undeclared relations: {', '.join(sorted(set(unknown)))}")
    return Schema(
        events=events,
        relations=frozenset(relations),
        entity_map=entity_map,
        kb_paths=frozenset(kb_paths),
        relation_map=relation_map,
    )


def _split_entry(line: str, line_no: int) -> tuple[str, list[str]]:
    if ":" not in line:
        raise SchemaError(f"expected 'name: values' entry, got {line!r}", line_no)
    name, _, rest = line.partition(":")
    name = name.strip()
    if not name:
        raise SchemaError("empty entry name", line_no)
    return name, _split_values(rest)


def _split_values(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def default_schema() -> Schema:
    """The schema shipped with the package (five core events, core relations)."""
    data = resources.files("clinqgen.data").joinpath("default.schema").read_text("utf-8")
    return parse_schema(data)


def validate_lf(schema: Schema, lf: LogicalForm) -> list[str]:
    """Check every name in ``lf`` against the schema; violations are data.

    Empty result means every event name, attribute name, relation name,
    placeholder entity type and kb path is declared.
    """
    violations: list[str] = []
    for ev in lf.events():
        attrs = schema.events.get(ev.event_name)
        if attrs is None:
            violations.append(f"unknown event {ev.event_name}")
            attrs = frozenset()
        if isinstance(ev.argument, Placeholder):
            etype = ev.argument.entity_type
            mapped = schema.entity_map.get(etype)
            if mapped is None:
                violations.append(f"unknown entity type {etype}")
            elif ev.event_name in schema.events and ev.event_name not in mapped:
                violations.append(
                    f"entity type {etype} not allowed on {ev.event_name}")
        for slot in ev.attributes:
            if ev.event_name in schema.events and slot.name not in attrs:
                violations.append(f"unknown attribute {slot.name} on {ev.event_name}")
            for path in _kb_paths_of(slot.operator):
                if path not in schema.kb_paths:
                    violations.append(f"unknown kb path {path}")
    for name in _relation_names(lf.root):
        if name not in schema.relations:
            violations.append(f"unknown relation {name}")
    return violations


def _kb_paths_of(operator) -> list[str]:
    if operator is None:
        return []
    if isinstance(operator, Compare) and isinstance(operator.operand, KbRef):
        return [operator.operand.path]
    if isinstance(operator, Range):
        return [b.path for b in (operator.lo, operator.hi) if isinstance(b, KbRef)]
    return []


def _relation_names(node) -> list[str]:
    from clinqgen.lf import Composite

    if not isinstance(node, Composite):
        return []
    own = [node.connective] if node.is_relation else []
    return _relation_names(node.left) + own + _relation_names(node.right)
