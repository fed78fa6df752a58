import json
from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import read
from raftgen.testgen.suite import observed_values
from raftgen.testgen import (
    Domains,
    GenerationError,
    PartitionError,
    Strategy,
    build_scenarios,
    case_record,
    diagram_text,
    edge_list,
    generate_cases,
    generate_suite,
    negate_outcome,
    partition_atom,
    read_cases,
    rule_links,
    suite_json,
    to_dnf,
    write_suite,
)
from raftgen.trl import (
    AtomicClause,
    Comparator,
    Not,
    Number,
    String,
    Time,
    TimeRangeSet,
    TimeRange,
    parse_rules,
    satisfies,
)


def rule(text):
    rules, diags = parse_rules(text)
    assert not [d for d in diags if d.is_error], diags
    return rules.rules[0]


def ruleset(text):
    rules, diags = parse_rules(text)
    assert not [d for d in diags if d.is_error], diags
    return rules


def num(*xs):
    return tuple(Number(Decimal(str(x))) for x in xs)


def A(key, cmp, value):
    return AtomicClause(key, Comparator(cmp), value)


# -- partitions ------------------------------------------------------------


def test_partition_ge():
    p = partition_atom(A("Quantity", ">=", Number(100000)))
    assert set(p.valid_reps) == set(num(100000, 100001))
    assert p.invalid_reps == num(99999)
    assert p.boundary_reps == num(100000)


def test_partition_gt_lt_le_eq():
    assert partition_atom(A("Quantity", ">", Number(10))).valid_reps == num(11)
    assert partition_atom(A("Quantity", ">", Number(10))).invalid_reps == num(10)
    assert partition_atom(A("Quantity", "<", Number(10))).valid_reps == num(9)
    assert set(partition_atom(A("Quantity", "<=", Number(10))).valid_reps) == set(num(9, 10))
    eq = partition_atom(A("Quantity", "=", Number(10)))
    assert eq.valid_reps == num(10) and set(eq.invalid_reps) == set(num(9, 11))


def test_partition_price_step():
    p = partition_atom(A("Price", ">=", Number(Decimal("10"))))
    assert p.invalid_reps == num("9.99")


def test_partition_modulo_with_bound():
    mod = AtomicClause("Quantity", Comparator.EQ, Number(0), Decimal(1000))
    ge = A("Quantity", ">=", Number(100000))
    p = partition_atom(mod, companions=[ge])
    assert p.valid_reps == num(100000, 101000)
    assert p.invalid_reps == num(100001)
    for v in p.valid_reps:
        assert satisfies(mod, {"Quantity": v}) and satisfies(ge, {"Quantity": v})
    for v in p.invalid_reps:
        assert not satisfies(mod, {"Quantity": v})


def test_partition_modulo_without_bound_avoids_zero():
    mod = AtomicClause("Quantity", Comparator.EQ, Number(0), Decimal(100))
    assert partition_atom(mod).valid_reps[0] == Number(100)


def test_partition_enum_declared_domain():
    d = Domains(enums={"TradingMethod": ("BlockTrading", "AuctionTrading")})
    p = partition_atom(A("TradingMethod", "=", String("BlockTrading")), domains=d)
    assert p.valid_reps == (String("BlockTrading"),)
    assert p.invalid_reps == (String("AuctionTrading"),)


def test_partition_enum_sentinel():
    p = partition_atom(A("TradingMethod", "=", String("BlockTrading")))
    assert p.invalid_reps == (String("NOT_BlockTrading"),)


def test_partition_time_range():
    ranges = TimeRangeSet((TimeRange(Time(9, 30), Time(11, 30)),))
    p = partition_atom(A("Time", "in", ranges))
    assert set(p.valid_reps) == {Time(9, 30), Time(11, 30), Time(10, 30)}
    assert set(p.invalid_reps) == {Time(9, 29), Time(11, 31)}


def test_partition_negated_swaps():
    p = partition_atom(Not(A("Quantity", ">=", Number(10))))
    assert p.valid_reps == num(9)


def test_partition_unsatisfiable():
    with pytest.raises(PartitionError, match="Quantity < 0"):
        partition_atom(A("Quantity", "<", Number(0)))
    with pytest.raises(PartitionError):
        partition_atom(A("Quantity", ">", Number(10)), domains=Domains(bounds={"Quantity": (0, 5)}))


# -- cases -----------------------------------------------------------------


def test_four_case_example():
    r = rule("rule 1\nif TradingMethod = BlockTrading and Quantity >= 50000 then Result = Success")
    d = Domains(enums={"TradingMethod": ("BlockTrading", "AuctionTrading")})
    cases = generate_cases(r, domains=d)
    assert [c.polarity for c in cases] == ["positive", "boundary", "negative", "negative"]
    assert [c.inputs for c in cases] == [
        {"TradingMethod": String("BlockTrading"), "Quantity": Number(50001)},
        {"TradingMethod": String("BlockTrading"), "Quantity": Number(50000)},
        {"TradingMethod": String("AuctionTrading"), "Quantity": Number(50001)},
        {"TradingMethod": String("BlockTrading"), "Quantity": Number(49999)},
    ]
    assert all(dict(c.expected) == {"Result": String("Failure")} for c in cases if c.polarity == "negative")
    assert all(dict(c.expected) == {"Result": String("Success")} for c in cases if c.polarity != "negative")


def test_single_boolean_atom():
    cases = generate_cases(rule("rule 1\nif Constraint = true then Result = Success"))
    assert [c.polarity for c in cases] == ["positive", "negative"]


def test_or_branches_expanded_and_deduplicated():
    r = rule("rule 1\nif (Action = Buy or Action = Sell) and Quantity > 5 then Result = Success")
    variants = to_dnf(r.condition)
    assert len(variants) == 2
    cases = generate_cases(r)
    assert {c.variant for c in cases} == set(variants)
    assert len({c.signature for c in cases}) == len(cases)
    positives = [c.inputs["Action"] for c in cases if c.polarity == "positive"]
    assert positives == [String("Buy"), String("Sell")]


def test_repeated_keys_get_suffixes():
    r = rule(read("example2.trl"))
    (pos,) = [c for c in generate_cases(r) if c.polarity == "positive"]
    keys = list(pos.inputs)
    assert keys[:3] == ["Actor", "Actor2", "Action"]
    assert {"Action2", "Action3", "OperationPart2"} <= set(keys)


def test_negate_outcome():
    S, F = String("Success"), String("Failure")
    assert negate_outcome({"Result": S}) == (("Result", F),)
    assert negate_outcome({"Result": F}) == (("Result", S),)
    assert negate_outcome({"Result": S, "ResultStatus": String("TransactionSuccess")}) == (("Result", F),)
    assert negate_outcome({"ResultStatus": String("Done")}) == (("Result", F),)


def test_no_expected_result():
    with pytest.raises(GenerationError):
        generate_cases(rule("rule 1\nif Quantity > 1 then Result != Success"))


def test_unsatisfiable_rule_raises():
    with pytest.raises((GenerationError, PartitionError)):
        generate_cases(rule("rule 1\nif Quantity < 0 then Result = Success"))


def test_exhaustive_negatives_cover_every_invalid_value():
    r = rule("rule 1\nif TradingMethod = BlockTrading then Result = Success")
    d = Domains(enums={"TradingMethod": ("BlockTrading", "AuctionTrading", "Matching")})
    one = generate_cases(r, domains=d)
    every = generate_cases(r, domains=d, strategy=Strategy(negatives="exhaustive"))
    assert sum(c.polarity == "negative" for c in one) == 1
    assert sum(c.polarity == "negative" for c in every) == 2


def test_pairwise_adds_two_literal_mutations():
    r = rule("rule 1\nif Action = Buy and Quantity > 5 and Price < 3 then Result = Success")
    cases = generate_cases(r, strategy=Strategy(negatives="pairwise"))
    doubles = [c for c in cases if len(c.mutated) == 2]
    assert len(doubles) == 3
    for c in doubles:
        assert all(not satisfies(m, c.inputs) for m in c.mutated)


def test_strategy_validation():
    with pytest.raises(ValueError):
        Strategy(negatives="random")
    r = rule(
        "rule 1\nif (Action = A or Action = B) and (Price > 1 or Price < 0) and (Actor = X or Actor = Y)\n"
        "then Result = Success"
    )
    assert len(to_dnf(r.condition)) == 8
    with pytest.raises(GenerationError):
        to_dnf(r.condition, max_variants=4)


def literal_holds(lit, inputs):
    return satisfies(lit, inputs)


def check_soundness(rules, cases):
    by_id = {r.id: r for r in rules}
    for c in cases:
        r = by_id[c.rule_id]
        if c.polarity in ("positive", "boundary"):
            assert satisfies(r.condition, c.inputs), c
        else:
            assert not satisfies(r.condition, c.inputs), c
            (m,) = c.mutated
            assert not literal_holds(m, c.inputs), c
            for lit in c.variant:
                if lit is not m and lit != m:
                    assert literal_holds(lit, c.inputs), (c, lit)


@pytest.mark.parametrize("name", ["generation_30.trl", "example1.trl", "example2.trl", "grammar.trl"])
def test_soundness_against_reference_evaluator(name):
    rules, _ = parse_rules(read(name))
    suite = generate_suite(rules)
    assert not suite.errors
    check_soundness(rules, suite.cases)
    for r in rules:
        mine = suite.for_rule(r.id)
        assert any(c.polarity == "positive" for c in mine)
        assert any(c.polarity == "negative" for c in mine)


# -- properties ------------------------------------------------------------

NUMERIC = st.sampled_from(["Quantity", "Price"])
CMP = st.sampled_from([">=", ">", "<=", "<", "=", "!="])


@st.composite
def numeric_atoms(draw):
    return AtomicClause(draw(NUMERIC), Comparator(draw(CMP)), Number(Decimal(draw(st.integers(1, 10**6)))))


@st.composite
def enum_atoms(draw):
    return AtomicClause(
        draw(st.sampled_from(["Action", "Actor", "TradingMethod"])),
        Comparator(draw(st.sampled_from(["=", "!="]))),
        String(draw(st.sampled_from(["Buy", "Sell", "Member", "Block"]))),
    )


@st.composite
def random_rules(draw):
    lits = draw(st.lists(st.one_of(numeric_atoms(), enum_atoms()), min_size=1, max_size=5))
    text = " and ".join(
        f"{a.key} {a.comparator.symbol} {a.value.value if isinstance(a.value, Number) else a.value.text}" for a in lits
    )
    return f"rule 1\nif {text}\nthen Result = Success"


@settings(max_examples=150, deadline=None)
@given(random_rules())
def test_generated_cases_are_sound(text):
    r = rule(text)
    try:
        cases = generate_cases(r)
    except (GenerationError, PartitionError):
        # contradictory conjunctions such as Quantity < 5 and Quantity > 9
        return
    check_soundness([r], cases)
    assert [c.polarity for c in cases][0] == "positive"


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**7), st.sampled_from([">=", ">", "<=", "<", "="]))
def test_partition_reps_classified_correctly(v, cmp):
    atom = A("Quantity", cmp, Number(v))
    try:
        p = partition_atom(atom)
    except PartitionError:
        assert cmp == "<" and v == 0
        return
    for x in p.valid_reps + p.boundary_reps:
        assert satisfies(atom, {"Quantity": x})
    for x in p.invalid_reps:
        assert not satisfies(atom, {"Quantity": x})


# -- scenarios -------------------------------------------------------------


def test_status_link():
    rs = ruleset(
        "rule 1\nif Actor = Member and Action = Submit then Result = Success and Status = Matched\n"
        "rule 2\nif Actor = Member and Action = Confirm and Status = Matched then Result = Success\n"
    )
    (s,) = build_scenarios(rs)
    assert s.member_rules == (1, 2) and len(s.links) == 1 and not s.cyclic
    (link,) = rule_links(rs)
    assert (link.producer, link.consumer, link.key, link.value) == (1, 2, "Status", "Matched")


def test_unrelated_rules_are_singletons():
    rs = ruleset("rule 1\nif Action = Buy then Result = Success\nrule 2\nif Action = Sell then Result = Success\n")
    assert [s.member_rules for s in build_scenarios(rs)] == [(1,), (2,)]


def test_cycle_flagged_in_document_order():
    rs = ruleset(
        "rule 5\nif Status = B then Result = Success and Status = A\n"
        "rule 3\nif Status = A then Result = Success and Status = B\n"
    )
    (s,) = build_scenarios(rs)
    assert s.member_rules == (5, 3) and s.cyclic
    assert s.to_dict()["cyclic"] is True


def test_scenarios_partition_rules():
    rules, _ = parse_rules(read("generation_30.trl"))
    scenarios = build_scenarios(rules)
    members = [rid for s in scenarios for rid in s.member_rules]
    assert sorted(members) == sorted(r.id for r in rules)
    assert any(len(s.member_rules) > 1 for s in scenarios)


# -- suites ----------------------------------------------------------------


def test_empty_ruleset():
    suite = generate_suite([])
    assert suite.cases == [] and suite.scenarios == []
    assert json.loads(suite_json(suite)) == []


def test_positive_wins_over_colliding_negative():
    rs = ruleset(
        "rule 1\nif Action = Submit and TradingDirection = Sell then Result = Success\n"
        "rule 2\nif Action = Submit and TradingDirection = Buy then Result = Failure\n"
    )
    suite = generate_suite(rs)
    for rid in (1, 2):
        assert any(c.polarity == "positive" for c in suite.for_rule(rid))
    assert len({c.signature for c in suite.cases}) == len(suite.cases)


def test_duplicate_rules_not_duplicated():
    text = "if Action = Buy and Quantity > 5 then Result = Success"
    rs = ruleset(f"rule 1\n{text}\nrule 2\n{text}\n")
    suite = generate_suite(rs)
    assert len(suite.cases) == len(generate_cases(rs.rules[0]))
    assert suite.for_rule(2) == []


def test_example_one_totals():
    rules, _ = parse_rules(read("example1.trl"))
    suite = generate_suite(rules)
    observed = observed_values(rules)
    per_rule = {r.id: generate_cases(r, observed=observed) for r in rules}
    assert all(len(cs) >= 2 for cs in per_rule.values())
    distinct = {c.signature for cs in per_rule.values() for c in cs}
    assert len(suite.cases) == len(distinct)
    assert sum(map(len, per_rule.values())) >= len(suite.cases)


def test_suite_errors_are_recorded():
    rs = ruleset("rule 1\nif Quantity < 0 then Result = Success\nrule 2\nif Action = Buy then Result = Success\n")
    suite = generate_suite(rs)
    assert set(suite.errors) == {1}
    assert {c.rule_id for c in suite.cases} == {2}


def test_suite_deterministic_across_workers():
    rules, _ = parse_rules(read("generation_30.trl"))
    a = suite_json(generate_suite(rules))
    b = suite_json(generate_suite(rules, workers=4))
    assert a == b
    cases, scenarios = generate_suite(rules)
    assert [c.id for c in cases] == list(range(1, len(cases) + 1))


def test_case_record_format():
    r = rule("rule 1\nif Time in [09:30-11:30] and Price >= 1.5 and Quantity > 10 and Constraint = true\nthen Result = Success")
    rec = case_record(generate_cases(r)[0])
    assert list(rec)[0] == "id" and list(rec)[-1] == "Result"
    assert rec["Time"] == "10:30" and rec["Price"] == 1.51 and rec["Quantity"] == 11 and rec["Constraint"] is True


def test_expected_key_collision_prefixed():
    r = rule("rule 1\nif Status = Open and Action = Buy then Result = Success and Status = Matched")
    rec = case_record(generate_cases(r)[0])
    assert rec["Status"] == "Open" and rec["ExpectedStatus"] == "Matched"


def test_write_and_read_suite(tmp_path):
    rules, _ = parse_rules(read("generation_30.trl"))
    suite = generate_suite(rules)
    write_suite(suite, tmp_path)
    assert {p.name for p in tmp_path.iterdir()} == {"cases.json", "cases.meta.json", "scenarios.txt", "scenarios.puml"}
    back = read_cases(tmp_path / "cases.json")
    assert back == json.loads(suite_json(suite))
    edges = [l for l in edge_list(suite.scenarios).splitlines() if not l.startswith("#")]
    assert edges == ["8 9 Status Matched", "8 26 Status Matched", "9 10 Status Confirmed"]
    assert diagram_text(suite.scenarios).startswith("@startuml")
