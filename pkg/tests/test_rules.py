"""Rule validation: curation, the condition DSL, and determinations."""
from __future__ import annotations

import json
import random

import pytest

from docpipe.errors import ExpressionError, ValidationError
from docpipe.extraction import AttributeValue, ExtractionResult
from docpipe.rules import (
    Fact,
    FactBinding,
    RuleSpec,
    consolidate,
    curate_facts,
    parse_condition,
    parse_rules,
    validate_all,
)
from docpipe.segmentation import Section


def rule_with(condition: str, facts=(("total", "invoice", "total"), ("limit", "invoice", "limit"))):
    return RuleSpec(
        rule_id="r1",
        description="test rule",
        required_facts=tuple(FactBinding(*f) for f in facts),
        condition=condition,
        recommendations=("Escalate to finance.",),
    )


def fact(name, value):
    return Fact(fact_name=name, value=value, source=("s0", name))


def section_result(section_id, class_name, values: dict, status="ok"):
    section = Section(section_id=section_id, class_name=class_name, page_indices=(0,))
    if status == "ok":
        result = ExtractionResult(
            section_id=section_id,
            class_name=class_name,
            status="ok",
            attributes=tuple(AttributeValue(name=n, value=v) for n, v in values.items()),
        )
    else:
        result = ExtractionResult(
            section_id=section_id, class_name=class_name, status="failed", failure_reason="x"
        )
    return section, result


def test_consolidate_pass():
    rule = rule_with("total <= limit")
    determination = consolidate(rule, [fact("total", 120), fact("limit", 500)])
    assert determination.status == "pass"
    assert [f.fact_name for f in determination.evidence] == ["total", "limit"]
    assert "120 <= 500 is true" in determination.reasoning
    assert determination.recommendations == ()


def test_consolidate_fail_shows_substitution():
    rule = rule_with("total <= limit")
    determination = consolidate(rule, [fact("total", 900), fact("limit", 500)])
    assert determination.status == "fail"
    assert "900 <= 500 is false" in determination.reasoning
    assert determination.recommendations == ("Escalate to finance.",)


def test_consolidate_information_not_found():
    rule = rule_with("total <= limit")
    determination = consolidate(rule, [fact("total", 120)])
    assert determination.status == "information_not_found"
    assert "limit" in determination.reasoning


def test_consolidate_every_required_fact_in_evidence():
    rule = rule_with("exists(total)")
    determination = consolidate(rule, [fact("total", 120), fact("limit", 500)])
    assert determination.status == "pass"
    assert {f.fact_name for f in determination.evidence} == {"total", "limit"}


def test_universal_semantics_multi_occurrence():
    rule = rule_with("total <= 500", facts=(("total", "invoice", "total"),))
    both_ok = consolidate(rule, [fact("total", 100), fact("total", 200)])
    assert both_ok.status == "pass"
    one_over = consolidate(rule, [fact("total", 100), fact("total", 900)])
    assert one_over.status == "fail"
    assert "[100, 900] <= 500 is false" in one_over.reasoning


def test_exists_and_connectives():
    rule = rule_with("exists(total) and (limit > 0 or not exists(total))")
    determination = consolidate(rule, [fact("total", 1), fact("limit", 2)])
    assert determination.status == "pass"


def test_contains_operator():
    rule = rule_with("vendor contains 'Acme'", facts=(("vendor", "invoice", "vendor"),))
    assert consolidate(rule, [fact("vendor", "Acme Supplies")]).status == "pass"
    assert consolidate(rule, [fact("vendor", "Globex")]).status == "fail"


def test_string_rendering_quotes():
    rule = rule_with("vendor == 'Acme'", facts=(("vendor", "invoice", "vendor"),))
    determination = consolidate(rule, [fact("vendor", "Acme")])
    assert "'Acme' == 'Acme' is true" in determination.reasoning


def test_parse_condition_rejects_unknown_fact():
    with pytest.raises(ExpressionError, match="undeclared"):
        parse_condition("ghost > 5", declared={"total"})


def test_parse_condition_rejects_garbage():
    for bad in ("total <=", "total ?? 5", "(total > 1", "", "and and"):
        with pytest.raises(ExpressionError):
            parse_condition(bad, declared={"total"})


def test_rule_spec_validates_condition_at_load():
    with pytest.raises(ExpressionError):
        rule_with("bogus_fact > 5")


def test_curate_facts_single_and_order():
    rule = rule_with("total <= 500", facts=(("total", "invoice", "total"),))
    pairs = [
        section_result("s0", "invoice", {"total": 120}),
        section_result("s1", "w2", {"wages": 5}),
        section_result("s2", "invoice", {"total": 80}),
    ]
    facts = curate_facts(rule, pairs)
    assert [(f.fact_name, f.value, f.source[0]) for f in facts] == [
        ("total", 120, "s0"),
        ("total", 80, "s2"),
    ]


def test_curate_facts_no_matching_class():
    rule = rule_with("total <= 500", facts=(("total", "invoice", "total"),))
    facts = curate_facts(rule, [section_result("s0", "w2", {"wages": 5})])
    assert facts == []


def test_validate_all_order_and_failed_exclusion():
    rules = [
        rule_with("total <= 500", facts=(("total", "invoice", "total"),)),
        rule_with("wages > 0", facts=(("wages", "w2", "wages"),)),
    ]
    rules[1] = RuleSpec(
        rule_id="r2",
        required_facts=(FactBinding("wages", "w2", "wages"),),
        condition="wages > 0",
    )
    pairs = [
        section_result("s0", "invoice", {"total": 100}),
        section_result("s1", "w2", {}, status="failed"),
    ]
    outcomes = validate_all(rules, pairs)
    assert [rule_id for rule_id, _ in outcomes] == ["r1", "r2"]
    assert outcomes[0][1].status == "pass"
    # The failed w2 extraction contributes no facts.
    assert outcomes[1][1].status == "information_not_found"


def test_validate_all_empty():
    assert validate_all([], []) == []


def test_negation_coherence_random():
    rng = random.Random(41)
    ops = ["==", "!=", "<", "<=", ">", ">="]
    for _ in range(100):
        op = rng.choice(ops)
        condition = f"total {op} limit"
        rule = rule_with(condition)
        negated = rule_with(f"not ({condition})")
        facts = [fact("total", rng.randint(0, 5)), fact("limit", rng.randint(0, 5))]
        outcome = consolidate(rule, facts)
        flipped = consolidate(negated, facts)
        assert {outcome.status, flipped.status} == {"pass", "fail"}


def test_determinism():
    rule = rule_with("total <= limit")
    facts = [fact("total", 120), fact("limit", 500)]
    assert consolidate(rule, facts) == consolidate(rule, facts)


def test_parse_rules_round_trip(default_rules):
    assert [r.rule_id for r in default_rules] == ["invoice_total_limit", "balance_nonnegative"]
    assert default_rules[0].recommendations


def test_parse_rules_errors():
    with pytest.raises(ValidationError, match="condition"):
        parse_rules(json.dumps({"rules": [{"rule_id": "x", "condition": "a >"}]}))
    with pytest.raises(ValidationError, match="duplicate"):
        parse_rules(
            json.dumps(
                {
                    "rules": [
                        {"rule_id": "x", "condition": "1 == 1"},
                        {"rule_id": "x", "condition": "1 == 1"},
                    ]
                }
            )
        )


def test_mixed_type_comparison_raises_expression_error():
    rule = rule_with("total < limit")
    with pytest.raises(ExpressionError):
        consolidate(rule, [fact("total", "abc"), fact("limit", 5)])
