from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import read
from raftgen.trl import (
    And,
    AtomicClause,
    Boolean,
    Category,
    Comparator,
    Not,
    Number,
    Or,
    Rule,
    RuleSet,
    String,
    StringList,
    Time,
    TimeRange,
    TimeRangeSet,
    atoms,
    base_key,
    canonical_rule,
    canonicalize,
    classify_key,
    parse_rules,
    render_expr,
    render_rule,
    render_rules,
    tokenize,
)


def atom(key, cmp, value, modulus=None):
    return AtomicClause(key, Comparator(cmp), value, modulus)


def parse_one(text, **kw):
    rules, diags = parse_rules(text, **kw)
    assert not [d for d in diags if d.is_error], diags
    assert len(rules) == 1
    return rules.rules[0]


# -- parsing ---------------------------------------------------------------


def test_minimal_rule():
    r = parse_one("rule 1\nif Quantity >= 1000 then Result = Success")
    assert r == Rule(1, atom("Quantity", ">=", Number(1000)), atom("Result", "=", String("Success")))


def test_example_two_has_ten_condition_atoms(symbols):
    rules, diags = parse_rules(read("example2.trl"), symbols)
    (r,) = rules.rules
    assert len(atoms(r.condition)) == 10
    assert len(atoms(r.outcome)) == 1
    # OperationTarget is outside the vocabulary: lenient mode only warns
    assert [d.severity for d in diags] == ["warning"]
    assert "OperationTarget" in diags[0].message


def test_strict_keys_rejects_unknown_key(symbols):
    rules, diags = parse_rules(read("example2.trl"), symbols, strict_keys=True)
    assert len(rules) == 0
    assert any(d.is_error and "OperationTarget" in d.message for d in diags)


def test_modulo_clause():
    r = parse_one("rule 1\nif Quantity % 1000 = 0 and Quantity >= 100000 then Result = Success")
    mod, ge = atoms(r.condition)
    assert mod.modulus == Decimal(1000) and mod.comparator is Comparator.EQ and mod.value == Number(0)
    assert ge.modulus is None and ge.comparator is Comparator.GE and ge.value == Number(100000)


def test_example_one_parses_with_modulo():
    rules, diags = parse_rules(read("example1.trl"))
    assert not diags
    assert [r.id for r in rules] == list(range(1, 8))
    assert all(any(a.modulus is not None for a in atoms(r.condition)) for r in rules if r.id != 2)


def test_keywords_case_insensitive():
    upper = parse_one("RULE 3\nIF Quantity > 1 AND Price < 2 THEN Result = Success")
    lower = parse_one("rule 3\nif Quantity > 1 and Price < 2 then Result = Success")
    assert upper == lower


def test_quoted_and_bare_strings_agree():
    a = parse_one('rule 1\nif Actor = "Member" then Result = Success')
    b = parse_one("rule 1\nif Actor = Member then Result = Success")
    assert a == b


def test_comment_and_blank_lines_ignored():
    r = parse_one("# header\n\nrule 1  # trailing\n\nif Quantity > 1 # c\nthen Result = Success\n")
    assert r.id == 1


def test_exact_decimals():
    r = parse_one("rule 1\nif Price >= 12345678901234567890.000000001 then Result = Success")
    assert r.condition.value.value == Decimal("12345678901234567890.000000001")


@pytest.mark.parametrize(
    "outcome",
    ["Result = Success or Result = Failure", "not Result = Success", "(Result = A or ResultStatus = B)"],
)
def test_outcome_restricted_to_conjunction(outcome):
    rules, diags = parse_rules(f"rule 1\nif Quantity > 1 then {outcome}")
    assert len(rules) == 0
    assert diags and diags[0].is_error
    assert "and" in diags[0].message.lower()


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("rule 1\nif Quantity >= then Result = Success", "value"),
        ("rule 1\nif Quantity 5 then Result = Success", "comparator"),
        ("rule 1\nif (Quantity > 5 then Result = Success", ")"),
        ("rule 1\nif Quantity > 5 then", "outcome"),
    ],
)
def test_malformed_rules_produce_located_diagnostics(text, fragment):
    rules, diags = parse_rules(text)
    assert len(rules) == 0
    (d,) = diags
    assert d.is_error and d.line >= 1 and d.column >= 1
    assert fragment in (d.message + " " + " ".join(d.expected)).lower()


def test_one_bad_rule_does_not_abort_the_file():
    text = "rule 1\nif Quantity >= then Result = Success\nrule 2\nif Price > 1 then Result = Success\n"
    rules, diags = parse_rules(text)
    assert [r.id for r in rules] == [2]
    assert len(diags) == 1 and diags[0].line == 2


def test_duplicate_rule_id():
    text = "rule 1\nif Price > 1 then Result = Success\nrule 1\nif Price > 2 then Result = Success\n"
    rules, diags = parse_rules(text)
    assert len(rules) == 1
    assert "duplicate" in diags[0].message and diags[0].line == 3


def test_in_requires_list_value():
    rules, diags = parse_rules("rule 1\nif Action in Buy then Result = Success")
    assert len(rules) == 0 and diags[0].is_error


def test_modulo_rejects_ordering_comparator():
    rules, diags = parse_rules("rule 1\nif Quantity % 100 > 3 then Result = Success")
    assert len(rules) == 0 and diags[0].is_error


def test_invalid_time_literal():
    rules, diags = parse_rules("rule 1\nif Time >= 25:00 then Result = Success")
    assert len(rules) == 0 and diags[0].is_error


def test_overlapping_time_ranges_rejected():
    rules, diags = parse_rules("rule 1\nif Time in [09:00-11:00, 10:00-12:00] then Result = Success")
    assert len(rules) == 0 and diags[0].is_error


def test_source_span():
    rules, _ = parse_rules("\nrule 1\nif Price > 1\nthen Result = Success\nrule 2\nif Price > 2 then Result = Success")
    assert rules.rules[0].source_span == (2, 4)
    assert rules.rules[1].source_span == (5, 6)


def test_bytes_input():
    rules, _ = parse_rules("rule 1\nif Actor = Käufer then Result = Success".encode())
    assert rules.rules[0].condition.value == String("Käufer")


# -- grammar coverage ------------------------------------------------------


def _walk(expr):
    yield expr
    if isinstance(expr, Not):
        yield from _walk(expr.child)
    elif isinstance(expr, (And, Or)):
        for c in expr.children:
            yield from _walk(c)


def test_grammar_fixture_exercises_every_production():
    text = read("grammar.trl")
    rules, diags = parse_rules(text)
    assert not diags and len(rules) == 6
    nodes = [n for r in rules for side in (r.condition, r.outcome) for n in _walk(side)]
    all_atoms = [n for n in nodes if isinstance(n, AtomicClause)]
    assert {a.comparator for a in all_atoms} == set(Comparator)
    kinds = {type(a.value) for a in all_atoms}
    assert kinds == {String, Number, Boolean, Time, TimeRangeSet, StringList}
    assert any(isinstance(n, Or) for n in nodes)
    assert any(isinstance(n, Not) and isinstance(n.child, AtomicClause) for n in nodes)
    assert any(isinstance(n, Not) and isinstance(n.child, Or) for n in nodes)
    assert any(isinstance(r.outcome, And) for r in rules)
    assert any(a.modulus is not None and a.comparator is Comparator.EQ for a in all_atoms)
    assert any(a.modulus is not None and a.comparator is Comparator.NEQ for a in all_atoms)
    assert any(isinstance(a.value, Number) and a.value.value != a.value.value.to_integral_value() for a in all_atoms)
    assert any(isinstance(a.value, String) and " " in a.value.text for a in all_atoms)
    # uppercase keywords, a parenthesized outcome and seconds in a time literal
    assert "IF " in text and "(Result = Success and" in text and "09:15:00" in text
    # precondition, operation and result keys all appear
    lexicon = {a.key for a in all_atoms}
    assert {"Actor", "Time", "Event", "Action", "Quantity", "Price", "Status", "Result", "ResultStatus"} <= lexicon


# -- printing and canonical form ------------------------------------------


def test_render_minimal_rule():
    r = Rule(1, atom("Quantity", ">=", Number(1000)), atom("Result", "=", String("Success")))
    assert render_rule(r) == "rule 1\nif Quantity >= 1000\nthen Result = Success"


def test_render_negated_disjunction():
    a, b = atom("Action", "=", String("Buy")), atom("Action", "=", String("Sell"))
    assert render_expr(Not(Or((a, b)))) == "not (Action = Buy or Action = Sell)"
    assert render_expr(And((Or((a, b)), a))) == "(Action = Buy or Action = Sell) and Action = Buy"


def test_render_quotes_when_needed():
    assert render_expr(atom("Actor", "=", String("two words"))) == 'Actor = "two words"'
    assert render_expr(atom("Actor", "=", String("and"))) == 'Actor = "and"'
    assert render_expr(atom("Price", "=", Number(Decimal("1.50")))) == "Price = 1.5"


@pytest.mark.parametrize("name", ["example1.trl", "example2.trl", "grammar.trl", "generation_30.trl", "mixed_50.trl"])
def test_round_trip(name):
    rules, _ = parse_rules(read(name))
    again, diags = parse_rules(render_rules(rules))
    assert not [d for d in diags if d.is_error]
    assert [canonical_rule(r) for r in again] == [canonical_rule(r) for r in rules]
    assert render_rules(again) == render_rules(rules)


def test_canonicalize_examples():
    a, b, c = (atom(k, "=", String("X")) for k in ("Actor", "Action", "Event"))
    assert canonicalize(And((And((a, b)), c))) == And((b, a, c))
    assert canonicalize(And((b, a))) == canonicalize(And((a, b)))
    assert canonicalize(Not(Not(a))) == a
    assert canonicalize(And((a, a))) == a


def test_classify_key(symbols):
    assert classify_key("Quantity", symbols) is Category.OPERATION
    assert classify_key("Time2", symbols) is Category.PRECONDITION
    assert classify_key("FooBar", symbols) is Category.UNKNOWN
    assert classify_key("Constraint", symbols) is Category.PRECONDITION
    assert classify_key("Result", symbols) is Category.EXPECTED_RESULT


def test_base_key():
    assert base_key("Time2") == "Time"
    assert base_key("Action13") == "Action"
    assert base_key("Quantity") == "Quantity"


def test_model_invariants():
    with pytest.raises(ValueError):
        atom("quantity", ">", Number(1))
    with pytest.raises(ValueError):
        atom("Quantity", ">", Number(1), modulus=Decimal(0))
    with pytest.raises(ValueError):
        And((atom("Price", ">", Number(1)),))
    with pytest.raises(ValueError):
        Rule(1, atom("Price", ">", Number(1)), Not(atom("Result", "=", String("Success"))))
    with pytest.raises(ValueError):
        TimeRange(Time(10, 0), Time(9, 0))
    r = Rule(1, atom("Price", ">", Number(1)), atom("Result", "=", String("Success")))
    with pytest.raises(ValueError):
        RuleSet((r, r))


# -- properties ------------------------------------------------------------

KEYS = st.sampled_from(["Actor", "Action", "Action2", "Quantity", "Price", "Time", "TradingMethod"])


def _values():
    numbers = st.decimals(min_value=0, max_value=10**9, places=2, allow_nan=False).map(Number)
    words = st.sampled_from(["Buy", "Sell", "Member", "two words", "Bond"]).map(String)
    times = st.builds(Time, st.integers(0, 23), st.integers(0, 59))
    return st.one_of(numbers, words, times, st.booleans().map(Boolean))


@st.composite
def atoms_st(draw):
    v = draw(_values())
    if isinstance(v, Number):
        cmp = draw(st.sampled_from([c for c in Comparator if c is not Comparator.IN]))
    elif isinstance(v, Time):
        cmp = draw(st.sampled_from([Comparator.GE, Comparator.LT, Comparator.EQ]))
    else:
        cmp = draw(st.sampled_from([Comparator.EQ, Comparator.NEQ]))
    return AtomicClause(draw(KEYS), cmp, v)


exprs = st.recursive(
    atoms_st(),
    lambda inner: st.one_of(
        st.lists(inner, min_size=2, max_size=3).map(lambda xs: And(tuple(xs))),
        st.lists(inner, min_size=2, max_size=3).map(lambda xs: Or(tuple(xs))),
        inner.map(Not),
    ),
    max_leaves=8,
)


@settings(max_examples=200, deadline=None)
@given(exprs)
def test_canonicalize_idempotent(e):
    once = canonicalize(e)
    assert canonicalize(once) == once


@settings(max_examples=200, deadline=None)
@given(exprs, st.lists(atoms_st(), min_size=1, max_size=3))
def test_render_parse_round_trip(cond, outs):
    outcome = outs[0] if len(outs) == 1 else And(tuple(outs))
    r = Rule(7, cond, outcome)
    rules, diags = parse_rules(render_rule(r))
    assert not diags
    assert canonical_rule(rules.rules[0]) == canonical_rule(r)


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=300))
def test_parser_total_on_bytes(data):
    rules, diags = parse_rules(data)
    assert isinstance(rules, RuleSet)
    assert all(d.line >= 1 and d.column >= 1 for d in diags)


TRL_ALPHABET = st.sampled_from(
    ["rule", " ", "\n", "1", "if", "then", "and", "or", "not", "(", ")", "[", "]", "Quantity", "=", ">=", "%",
     "in", ",", "-", "09:30", '"', "#", "Result", "Success", "3.5", "!=", "true"]
)


@settings(max_examples=300, deadline=None)
@given(st.lists(TRL_ALPHABET, max_size=40).map(" ".join))
def test_parser_total_on_token_soup(text):
    rules, diags = parse_rules(text)
    lines = text.split("\n")
    for d in diags:
        assert 1 <= d.line <= len(lines)
        assert 1 <= d.column <= len(lines[d.line - 1]) + 1
    for r in rules:
        again, _ = parse_rules(render_rule(r))
        assert canonical_rule(again.rules[0]) == canonical_rule(r)


def test_lexer_never_raises():
    toks = tokenize('rule 1 @ "unterminated\n§')
    assert any(t.kind == "error" for t in toks) or any(t.kind == "unterminated" for t in toks)
