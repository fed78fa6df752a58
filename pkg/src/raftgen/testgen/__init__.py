"""Test-case generation from formal rules."""

from .cases import (
    GenerationError,
    Strategy,
    TestCase,
    condition_holds,
    generate_cases,
    negate_literal,
    negate_outcome,
    to_dnf,
)
from .partition import Domains, Partition, PartitionError, partition_atom
from .scenarios import Link, Scenario, build_scenarios, rule_links
from .suite import (
    Suite,
    case_record,
    diagram_text,
    edge_list,
    generate_suite,
    metadata_json,
    read_cases,
    suite_json,
    write_suite,
)

__all__ = [
    "Link",
    "Scenario",
    "Suite",
    "build_scenarios",
    "case_record",
    "diagram_text",
    "edge_list",
    "generate_suite",
    "metadata_json",
    "read_cases",
    "rule_links",
    "suite_json",
    "write_suite",
    "Domains",
    "GenerationError",
    "Partition",
    "PartitionError",
    "Strategy",
    "TestCase",
    "condition_holds",
    "generate_cases",
    "negate_literal",
    "negate_outcome",
    "partition_atom",
    "to_dnf",
]
