"""Two-step rule validation: fact curation, then condition evaluation.

Facts are attribute lookups over extraction results, bound by (class,
attribute). Conditions are a small boolean DSL over fact names; keeping the
evaluation deterministic makes every determination verifiable. When a fact
occurs in several sections, a comparison holds only if every occurrence
satisfies it; ``exists`` needs at least one.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from docpipe.errors import ExpressionError, ParseError, ValidationError
from docpipe.extraction import ExtractionResult
from docpipe.segmentation import Section

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<op>==|!=|<=|>=|<|>|\(|\))"
    r"|(?P<number>-?\d+(?:\.\d+)?)"
    r"|(?P<string>'[^']*'|\"[^\"]*\")"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*))"
)

_KEYWORDS = {"and", "or", "not", "contains", "exists"}


@dataclass(frozen=True)
class FactBinding:
    name: str
    class_name: str
    attribute: str


@dataclass(frozen=True)
class Fact:
    fact_name: str
    value: object
    source: tuple[str, str]  # (section_id, attribute)
    confidence: float = 1.0

    def __post_init__(self):
        if self.value is None:
            raise ValidationError(f"fact {self.fact_name}: value must not be null")

    def to_dict(self) -> dict:
        return {
            "fact_name": self.fact_name,
            "value": self.value,
            "source": list(self.source),
            "confidence": self.confidence,
        }


@dataclass(frozen=True)
class Determination:
    status: str  # pass | fail | information_not_found
    evidence: tuple[Fact, ...]
    reasoning: str
    recommendations: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "evidence": [f.to_dict() for f in self.evidence],
            "reasoning": self.reasoning,
            "recommendations": list(self.recommendations),
        }


# --- condition expressions -----------------------------------------------------

@dataclass(frozen=True)
class _Literal:
    value: object


@dataclass(frozen=True)
class _FactRef:
    name: str


@dataclass(frozen=True)
class _Cmp:
    op: str
    lhs: object
    rhs: object


@dataclass(frozen=True)
class _Exists:
    name: str


@dataclass(frozen=True)
class _Not:
    inner: object


@dataclass(frozen=True)
class _Bool:
    op: str  # and | or
    parts: tuple


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None or match.end() == pos:
            rest = text[pos:].strip()
            if not rest:
                break
            raise ExpressionError(f"cannot tokenize condition at {rest[:20]!r}")
        pos = match.end()
        for kind in ("op", "number", "string", "name"):
            value = match.group(kind)
            if value is not None:
                if kind == "name" and value in _KEYWORDS:
                    tokens.append((value, value))
                else:
                    tokens.append((kind, value))
                break
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, str]]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> tuple[str, str] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, kind: str | None = None) -> tuple[str, str]:
        tok = self.peek()
        if tok is None:
            raise ExpressionError("unexpected end of condition")
        if kind is not None and tok[0] != kind:
            raise ExpressionError(f"expected {kind}, got {tok[1]!r}")
        self.pos += 1
        return tok

    def parse(self):
        expr = self.or_expr()
        if self.peek() is not None:
            raise ExpressionError(f"unexpected trailing tokens near {self.peek()[1]!r}")
        return expr

    def or_expr(self):
        parts = [self.and_expr()]
        while self.peek() and self.peek()[0] == "or":
            self.take()
            parts.append(self.and_expr())
        return parts[0] if len(parts) == 1 else _Bool("or", tuple(parts))

    def and_expr(self):
        parts = [self.unary()]
        while self.peek() and self.peek()[0] == "and":
            self.take()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else _Bool("and", tuple(parts))

    def unary(self):
        tok = self.peek()
        if tok and tok[0] == "not":
            self.take()
            return _Not(self.unary())
        return self.atom()

    def atom(self):
        tok = self.peek()
        if tok is None:
            raise ExpressionError("unexpected end of condition")
        if tok == ("op", "("):
            self.take()
            inner = self.or_expr()
            closing = self.take("op")
            if closing[1] != ")":
                raise ExpressionError("expected closing parenthesis")
            return inner
        if tok[0] == "exists":
            self.take()
            opening = self.take("op")
            if opening[1] != "(":
                raise ExpressionError("exists requires parentheses: exists(fact)")
            name = self.take("name")[1]
            closing = self.take("op")
            if closing[1] != ")":
                raise ExpressionError("expected closing parenthesis")
            return _Exists(name)
        return self.comparison()

    def operand(self):
        kind, value = self.take()
        if kind == "number":
            number = float(value)
            return _Literal(int(number) if number.is_integer() else number)
        if kind == "string":
            return _Literal(value[1:-1])
        if kind == "name":
            return _FactRef(value)
        raise ExpressionError(f"expected a value or fact name, got {value!r}")

    def comparison(self):
        lhs = self.operand()
        tok = self.peek()
        if tok is None or (tok[0] not in ("op", "contains")) or tok[1] in ("(", ")"):
            raise ExpressionError("expected a comparison operator")
        op = self.take()[1]
        rhs = self.operand()
        return _Cmp(op, lhs, rhs)


def parse_condition(text: str, declared: set[str] | None = None):
    """Parse a condition; with declared fact names given, reject strays."""
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError("condition must be a nonempty string")
    expr = _Parser(_tokenize(text)).parse()
    if declared is not None:
        for name in _referenced(expr):
            if name not in declared:
                raise ExpressionError(f"condition references undeclared fact {name!r}")
    return expr


def _referenced(expr) -> set[str]:
    if isinstance(expr, _FactRef):
        return {expr.name}
    if isinstance(expr, _Exists):
        return {expr.name}
    if isinstance(expr, _Cmp):
        return _referenced(expr.lhs) | _referenced(expr.rhs)
    if isinstance(expr, _Not):
        return _referenced(expr.inner)
    if isinstance(expr, _Bool):
        out = set()
        for part in expr.parts:
            out |= _referenced(part)
        return out
    return set()


def _compare(op: str, a, b) -> bool:
    try:
        if op == "==":
            return a == b
        if op == "!=":
            return a != b
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        if op == ">=":
            return a >= b
        if op == "contains":
            if isinstance(a, str):
                return str(b) in a
            if isinstance(a, (list, tuple)):
                return b in a
            raise ExpressionError(f"contains needs a string or list, got {a!r}")
    except TypeError as exc:
        raise ExpressionError(f"cannot compare {a!r} {op} {b!r}: {exc}") from exc
    raise ExpressionError(f"unknown operator {op!r}")


def _operand_values(node, env: dict) -> list:
    if isinstance(node, _Literal):
        return [node.value]
    return env.get(node.name, [])


def _evaluate(expr, env: dict) -> bool:
    if isinstance(expr, _Bool):
        if expr.op == "and":
            return all(_evaluate(p, env) for p in expr.parts)
        return any(_evaluate(p, env) for p in expr.parts)
    if isinstance(expr, _Not):
        return not _evaluate(expr.inner, env)
    if isinstance(expr, _Exists):
        return len(env.get(expr.name, [])) > 0
    if isinstance(expr, _Cmp):
        lhs = _operand_values(expr.lhs, env)
        rhs = _operand_values(expr.rhs, env)
        # Universal semantics: true only if every occurrence pair satisfies.
        return all(_compare(expr.op, a, b) for a in lhs for b in rhs)
    raise ExpressionError(f"cannot evaluate node {expr!r}")


def _format_value(value) -> str:
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    if isinstance(value, str):
        return f"'{value}'"
    return str(value)


def _render_operand(node, env: dict) -> str:
    if isinstance(node, _Literal):
        return _format_value(node.value)
    values = env.get(node.name, [])
    if not values:
        return f"{node.name}?"
    if len(values) == 1:
        return _format_value(values[0])
    return "[" + ", ".join(_format_value(v) for v in values) + "]"


def _render(expr, env: dict) -> str:
    if isinstance(expr, _Bool):
        joiner = f" {expr.op} "
        return "(" + joiner.join(_render(p, env) for p in expr.parts) + ")"
    if isinstance(expr, _Not):
        return f"not {_render(expr.inner, env)}"
    if isinstance(expr, _Exists):
        return f"exists({expr.name})"
    if isinstance(expr, _Cmp):
        return f"{_render_operand(expr.lhs, env)} {expr.op} {_render_operand(expr.rhs, env)}"
    return "?"


# --- rule specs ------------------------------------------------------------------

@dataclass(frozen=True)
class RuleSpec:
    rule_id: str
    description: str = ""
    required_facts: tuple[FactBinding, ...] = ()
    condition: str = ""
    recommendations: tuple[str, ...] = ()
    expression: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        declared = {b.name for b in self.required_facts}
        if len(declared) != len(self.required_facts):
            raise ValidationError(f"rule {self.rule_id}: duplicate fact names")
        expr = parse_condition(self.condition, declared)
        object.__setattr__(self, "expression", expr)


# --- operations ------------------------------------------------------------------

def curate_facts(
    rule: RuleSpec, sections: list[tuple[Section, ExtractionResult]]
) -> list[Fact]:
    """Collect every occurrence of each required fact, in section order."""
    facts: list[Fact] = []
    for binding in rule.required_facts:
        for section, result in sections:
            if section.class_name != binding.class_name or result.status != "ok":
                continue
            attr = result.attribute(binding.attribute)
            if attr is None or attr.value is None:
                continue
            facts.append(
                Fact(
                    fact_name=binding.name,
                    value=attr.value,
                    source=(section.section_id, binding.attribute),
                    confidence=attr.confidence,
                )
            )
    return facts


def consolidate(rule: RuleSpec, facts: list[Fact]) -> Determination:
    """Evaluate the rule condition over curated facts.

    Any required fact with zero occurrences short-circuits to
    information_not_found; otherwise the rendered, value-substituted
    condition decides pass or fail.
    """
    env: dict[str, list] = {}
    for fact in facts:
        env.setdefault(fact.fact_name, []).append(fact.value)
    missing = [b.name for b in rule.required_facts if not env.get(b.name)]
    if missing:
        return Determination(
            status="information_not_found",
            evidence=tuple(facts),
            reasoning=f"required facts not found: {', '.join(missing)}",
            recommendations=(),
        )
    expr = rule.expression if rule.expression is not None else parse_condition(rule.condition)
    try:
        outcome = _evaluate(expr, env)
    except ExpressionError:
        raise
    except Exception as exc:  # defensive: malformed conditions are caught at load
        raise ExpressionError(f"rule {rule.rule_id}: evaluation failed: {exc}") from exc
    rendered = _render(expr, env)
    return Determination(
        status="pass" if outcome else "fail",
        evidence=tuple(facts),
        reasoning=f"{rendered} is {'true' if outcome else 'false'}",
        recommendations=() if outcome else tuple(rule.recommendations),
    )


def validate_all(
    rules: list[RuleSpec], sections: list[tuple[Section, ExtractionResult]]
) -> list[tuple[str, Determination]]:
    """One determination per rule, in rule order; failed extractions excluded."""
    usable = [(s, r) for s, r in sections if r.status == "ok"]
    out = []
    for rule in rules:
        facts = curate_facts(rule, usable)
        out.append((rule.rule_id, consolidate(rule, facts)))
    return out


# --- rule config loading ------------------------------------------------------------

def parse_rules(text: str | bytes) -> list[RuleSpec]:
    try:
        data = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError, TypeError, ValueError) as exc:
        raise ParseError(f"rule config: not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("rules"), list):
        raise ParseError("rule config: expected {\"rules\": [...]}")
    rules = []
    seen = set()
    for i, raw in enumerate(data["rules"]):
        path = f"rules[{i}]"
        if not isinstance(raw, dict):
            raise ValidationError(f"{path}: expected an object")
        rule_id = raw.get("rule_id")
        if not isinstance(rule_id, str) or not rule_id:
            raise ValidationError(f"{path}.rule_id: required")
        if rule_id in seen:
            raise ValidationError(f"{path}.rule_id: duplicate {rule_id!r}")
        seen.add(rule_id)
        bindings = []
        for j, fact in enumerate(raw.get("facts") or []):
            fpath = f"{path}.facts[{j}]"
            if not isinstance(fact, dict):
                raise ValidationError(f"{fpath}: expected an object")
            for key in ("name", "class", "attribute"):
                if not isinstance(fact.get(key), str) or not fact[key]:
                    raise ValidationError(f"{fpath}.{key}: required")
            bindings.append(
                FactBinding(name=fact["name"], class_name=fact["class"], attribute=fact["attribute"])
            )
        try:
            rules.append(
                RuleSpec(
                    rule_id=rule_id,
                    description=raw.get("description") or "",
                    required_facts=tuple(bindings),
                    condition=raw.get("condition") or "",
                    recommendations=tuple(raw.get("recommendations") or ()),
                )
            )
        except ExpressionError as exc:
            raise ValidationError(f"{path}.condition: {exc}") from exc
    return rules


def load_rules(path: str | Path) -> list[RuleSpec]:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ParseError(f"rule config {path}: cannot read: {exc}") from exc
    return parse_rules(raw)
