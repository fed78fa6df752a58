"""Command-line pipeline: explicate, formalize, assess, generate, evaluate.

Every subcommand writes into one output directory::

    pack/       knowledge pack (meta-model, representation, constraints)
    rules/      formal rules and per-block diagnostics
    verdicts/   testability verdicts, exclusion report, testable rules
    suite/      test cases, case metadata, scenario exports
    eval/       evaluation report
    raw_llm/    every prompt and completion, by stage and provider
    manifest.json

Exit codes: 0 success, 1 input error, 2 provider quorum failure,
3 evaluation threshold not met.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import re
import sys
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from decimal import Decimal
from pathlib import Path
from typing import Any, Sequence

import yaml

from .knowledge import (
    KnowledgePack,
    aggregate_constraints,
    aggregate_representations,
    bucket_others,
    copy_finance_sources,
    finance_pack,
    k_purify,
    load_pack,
    to_plantuml,
)
from .knowledge.io import constraints_to_dict, dumps, representation_to_dict
from .llm import (
    AuditLog,
    ExplicationError,
    ProviderConfig,
    ProviderError,
    UsageLedger,
    build_index,
    explicate,
    formalize_with_feedback,
    judge_and_refine,
    make_provider,
    retrieve,
)
from .llm.providers import UsageStats, sum_usage
from .metrics import MatchConfig, evaluate
from .testability import assess, exclusion_report, testable_fraction, verdicts_to_jsonl
from .testgen import Domains, Strategy, build_scenarios, generate_suite, read_cases, write_suite
from .trl import Rule, RuleSet, parse_rules, render_rules

log = logging.getLogger("raftgen")

EXIT_OK, EXIT_INPUT, EXIT_QUORUM, EXIT_THRESHOLD = 0, 1, 2, 3
METRIC_NAMES = ("precision", "recall", "f1", "bsc")


class InputError(Exception):
    pass


class QuorumError(Exception):
    pass


class ThresholdError(Exception):
    pass


@dataclass
class PipelineConfig:
    out: str = "raftgen-out"
    k: int = 2
    n: int = 3
    max_refine_iters: int = 3
    strict_keys: bool = False
    builtin_pack: str | None = None
    pack: str | None = None
    documents: list[str] = field(default_factory=list)
    cases: list[str] = field(default_factory=list)
    rules: str | None = None
    truth: str | None = None
    providers: list[ProviderConfig] = field(default_factory=list)
    use_providers: list[str] | None = None
    mock_fixtures: str | None = None
    thresholds: dict[str, float] = field(default_factory=dict)
    negatives: str = "one-factor"
    deltas: dict[str, str] = field(default_factory=dict)
    enums: dict[str, list[str]] = field(default_factory=dict)
    bounds: dict[str, list] = field(default_factory=dict)
    segmentation: str = "paragraph"
    top_k: int = 3
    match_mode: str = "exact"

    def validate(self) -> None:
        if self.segmentation not in ("paragraph", "document"):
            raise InputError(f"unknown segmentation {self.segmentation!r}")
        if self.builtin_pack not in (None, "finance"):
            raise InputError(f"unknown built-in pack {self.builtin_pack!r}")
        if self.max_refine_iters < 1:
            raise InputError("max_refine_iters must be at least 1")
        if self.negatives not in ("one-factor", "exhaustive", "pairwise"):
            raise InputError(f"unknown negative strategy {self.negatives!r}")
        unknown = set(self.thresholds) - set(METRIC_NAMES)
        if unknown:
            raise InputError(f"unknown threshold metrics {sorted(unknown)}")

    def active_providers(self) -> list[ProviderConfig]:
        provs = list(self.providers)
        if self.use_providers is not None:
            known = {p.name: p for p in provs}
            provs = [known.get(name) or ProviderConfig(name, kind="mock") for name in self.use_providers]
        if self.mock_fixtures:
            provs = [replace(p, kind="mock") for p in provs]
        return provs

    def domains(self) -> Domains:
        return Domains(
            enums={k: tuple(v) for k, v in self.enums.items()},
            bounds={k: tuple(v) for k, v in self.bounds.items()},
            deltas={k: Decimal(str(v)) for k, v in self.deltas.items()},
        )

    def digest_view(self) -> dict:
        d = asdict(self)
        del d["out"]  # where results go is not an input
        d["providers"] = [p.name for p in self.active_providers()]
        return d


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    try:
        data = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError(f"config {path} must be a mapping")
    return data


def make_config(file_values: dict, overrides: dict) -> PipelineConfig:
    values = {**file_values, **{k: v for k, v in overrides.items() if v is not None}}
    known = set(PipelineConfig.__dataclass_fields__)
    extra = set(values) - known
    if extra:
        raise InputError(f"unknown config keys {sorted(extra)}")
    try:
        provs = [p if isinstance(p, ProviderConfig) else ProviderConfig.from_dict(p) for p in values.pop("providers", [])]
        cfg = PipelineConfig(**values, providers=provs)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    cfg.validate()
    return cfg


def parse_thresholds(text: str) -> dict[str, float]:
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        name, _, value = part.partition("=")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise InputError(f"bad threshold {part!r}; expected name=value") from None
    return out


# ---------------------------------------------------------------------------
# run context and manifest


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def read_text(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


class Run:
    """Output directory, usage ledger, audit log and manifest of one invocation."""

    def __init__(self, cfg: PipelineConfig, command: str):
        self.cfg = cfg
        self.out = Path(cfg.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.ledger = UsageLedger()
        self.audit = AuditLog(self.out / "raw_llm")
        self.stages: dict[str, dict] = {}
        self.inputs: dict[str, str] = {}
        self.pack_digests: dict[str, str] = {}
        self.command = command
        self.started = datetime.now(timezone.utc).isoformat()
        self.status = "running"
        self._providers = None

    def providers(self):
        if self._providers is None:
            self._providers = [make_provider(p, self.cfg.mock_fixtures) for p in self.cfg.active_providers()]
        return self._providers

    def note_input(self, path: str | Path) -> None:
        try:
            self.inputs[str(path)] = sha256_file(Path(path))
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc}") from exc

    def run_id(self) -> str:
        payload = json.dumps(
            {"command": self.command, "config": self.cfg.digest_view(), "inputs": self.inputs},
            sort_keys=True,
            default=str,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def usage(self) -> dict:
        records = self.ledger.records
        first = {}
        for r in records:
            first.setdefault(r.stage, len(first))
        # calls from concurrent providers interleave; order them stably
        records = sorted(records, key=lambda r: (first[r.stage], r.provider))
        calls = [
            {
                "provider": r.provider,
                "stage": r.stage,
                "prompt_tokens": r.usage.prompt_tokens,
                "completion_tokens": r.usage.completion_tokens,
                "fingerprint": r.fingerprint,
            }
            for r in records
        ]
        by_provider: dict[str, UsageStats] = {}
        for r in records:
            by_provider[r.provider] = by_provider.get(r.provider, UsageStats()) + r.usage
        return {
            "total": sum_usage(r.usage for r in records).to_dict(),
            "by_provider": {k: v.to_dict() for k, v in sorted(by_provider.items())},
            "calls": calls,
        }

    def write_manifest(self) -> Path:
        manifest = {
            "run_id": self.run_id(),
            "command": self.command,
            "status": self.status,
            "timestamps": {"started": self.started, "finished": datetime.now(timezone.utc).isoformat()},
            "inputs": dict(sorted(self.inputs.items())),
            "pack": dict(sorted(self.pack_digests.items())),
            "providers": [p.name for p in self.cfg.active_providers()],
            "stages": self.stages,
            "usage": self.usage(),
        }
        path = self.out / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        return path


# ---------------------------------------------------------------------------
# stages


def _save_pack(run: Run, pack: KnowledgePack) -> KnowledgePack:
    run.pack_digests = pack.save(run.out / "pack")
    return pack


def cmd_explicate(run: Run) -> KnowledgePack:
    """Build the knowledge pack: built-in, loaded from disk, or by provider consensus."""
    cfg = run.cfg
    if cfg.builtin_pack:
        pack = finance_pack()
        copy_finance_sources(run.out / "pack" / "source")
        run.stages["explicate"] = {"status": "ok", "source": f"builtin:{cfg.builtin_pack}"}
        return _save_pack(run, pack)
    if cfg.pack:
        try:
            pack = load_pack(cfg.pack)
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot load knowledge pack {cfg.pack}: {exc}") from exc
        run.stages["explicate"] = {"status": "ok", "source": str(cfg.pack)}
        return _save_pack(run, pack)

    if not 1 < cfg.k <= cfg.n:
        raise InputError(f"need 1 < k <= n, got k={cfg.k}, n={cfg.n}")
    providers = run.providers()
    if len(providers) < cfg.n:
        raise QuorumError(f"explication needs {cfg.n} providers, {len(providers)} configured")
    providers = providers[: cfg.n]
    if not cfg.documents:
        raise InputError("explication needs at least one regulatory document")
    docs = {}
    for d in cfg.documents:
        docs[Path(d).name] = read_text(d)
        run.note_input(d)
    cases = {}
    for c in cfg.cases:
        cases[Path(c).name] = read_text(c)
        run.note_input(c)
    stage: dict[str, Any] = {"status": "running", "failures": {}}
    run.stages["explicate"] = stage
    raw = run.out / "pack" / "providers"

    def gather(kind, knowledge=None):
        try:
            res = explicate(providers, kind, docs, cases, knowledge=knowledge, ledger=run.ledger, audit=run.audit)
        except ExplicationError as exc:
            stage["failures"][kind] = exc.failures
            raise QuorumError(f"no provider produced a usable {kind}") from exc
        if res.failures:
            stage["failures"][kind] = res.failures
        return res

    metas = gather("metamodel")
    for name, m in metas.artifacts:
        (raw / name).mkdir(parents=True, exist_ok=True)
        (raw / name / "metamodel.puml").write_text(to_plantuml(m), encoding="utf-8")
    if len(metas.artifacts) < cfg.k:
        raise QuorumError(f"only {len(metas.artifacts)} usable meta-models, k={cfg.k}")
    purified = k_purify(metas.values, cfg.k)
    metamodel = bucket_others(purified, purified.candidates)

    reps = gather("representation", {"metamodel": metamodel})
    for name, r in reps.artifacts:
        (raw / name).mkdir(parents=True, exist_ok=True)
        (raw / name / "representation.json").write_text(dumps(representation_to_dict(r)), encoding="utf-8")
    representation = aggregate_representations(reps.values)

    cons = gather("constraints", {"metamodel": metamodel, "representation": representation})
    for name, c in cons.artifacts:
        (raw / name).mkdir(parents=True, exist_ok=True)
        (raw / name / "constraints.json").write_text(dumps(constraints_to_dict(c)), encoding="utf-8")
    constraints = aggregate_constraints(cons.values)

    stage.update(
        status="ok",
        source="explicated",
        metamodel_providers=[n for n, _ in metas.artifacts],
        elements=len(metamodel.elements),
        candidates=len(purified.candidates),
        symbols=len(representation.symbols.all_keys()),
        constraints=len(constraints.constraints),
    )
    return _save_pack(run, KnowledgePack(metamodel, representation, constraints))


def obtain_pack(run: Run) -> KnowledgePack:
    """The pack a later stage works with, without calling providers."""
    cfg = run.cfg
    if cfg.builtin_pack:
        return finance_pack()
    where = cfg.pack or (run.out / "pack")
    try:
        return load_pack(where)
    except (OSError, ValueError) as exc:
        raise InputError(f"no knowledge pack: {exc}; pass --builtin-pack finance or run explicate") from exc


_ITEM = re.compile(r"^\s*(?:\(\s*\d+\s*\)|（\s*\d+\s*）|\d+[.)、]|[a-z][.)])\s*")


def segment(text: str, mode: str = "paragraph") -> list[str]:
    """Rule blocks of a document: blank-line paragraphs, with numbered items
    folded into the paragraph that introduces them."""
    text = text.replace("\r\n", "\n").strip()
    if not text:
        return []
    if mode == "document":
        return [text]
    paras = [p.strip() for p in re.split(r"\n\s*\n", text) if p.strip()]
    blocks: list[str] = []
    for p in paras:
        if blocks and _ITEM.match(p):
            blocks[-1] += "\n" + p
        else:
            blocks.append(p)
    return blocks


def cmd_formalize(run: Run, pack: KnowledgePack) -> RuleSet:
    cfg = run.cfg
    if not cfg.documents:
        raise InputError("formalize needs at least one document")
    providers = run.providers()
    if not providers:
        raise InputError("formalize needs a provider")
    provider = providers[0]
    texts = {}
    for d in cfg.documents:
        texts[Path(d).name] = read_text(d)
        run.note_input(d)
    history = {Path(c).name: read_text(c) for c in cfg.cases}
    index = build_index({**texts, **history})
    rules: list[Rule] = []
    report = []
    failed = 0
    for doc_name, text in texts.items():
        for i, block in enumerate(segment(text, cfg.segmentation), 1):
            entry: dict[str, Any] = {"document": doc_name, "block": i, "text": block}
            chunks = [c for c in retrieve(index, block, cfg.top_k) if c.text.strip() != block]
            try:
                parsed, diags, usage = formalize_with_feedback(
                    provider,
                    pack,
                    block,
                    cfg.max_refine_iters,
                    retrieved=chunks,
                    strict_keys=cfg.strict_keys,
                    ledger=run.ledger,
                    audit=run.audit,
                    source_name=f"{doc_name}#{i}",
                )
            except ProviderError as exc:
                failed += 1
                entry.update(status="provider-error", error=str(exc))
                report.append(entry)
                continue
            ids = []
            for r in parsed:
                new = Rule(len(rules) + 1, r.condition, r.outcome)
                rules.append(new)
                ids.append(new.id)
            errors = [str(d) for d in diags if d.is_error]
            entry.update(
                status="ok" if not errors else "errors",
                rules=ids,
                calls=usage.calls,
                diagnostics=[str(d) for d in diags],
            )
            report.append(entry)
    ruleset = RuleSet(tuple(rules), "formalized")
    d = run.out / "rules"
    d.mkdir(parents=True, exist_ok=True)
    (d / "rules.trl").write_text(render_rules(ruleset), encoding="utf-8")
    (d / "diagnostics.json").write_text(json.dumps(report, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    run.stages["formalize"] = {
        "status": "ok" if not failed else "partial",
        "blocks": len(report),
        "failed_blocks": failed,
        "rules": len(ruleset),
    }
    return ruleset


def load_rules(path: str | Path, pack: KnowledgePack, strict_keys: bool = False) -> RuleSet:
    text = read_text(path)
    rules, diags = parse_rules(text, pack.symbols, strict_keys, str(path))
    errors = [d for d in diags if d.is_error]
    if errors:
        raise InputError(f"{path}: " + "; ".join(str(d) for d in errors[:5]))
    return rules


def cmd_assess(run: Run, pack: KnowledgePack, rules: RuleSet, refine: bool = True) -> RuleSet:
    """Verdicts for every rule; returns the rules usable for generation."""
    cfg = run.cfg
    verdicts = assess(rules, pack.constraints, pack.symbols)
    providers = run.providers() if refine else []
    refined_count = 0
    if providers:
        provider = providers[0]
        by_id = {r.id: r for r in rules}

        def check(candidate: Rule):
            others = [r for r in rules if r.id != candidate.id]
            found = assess([*others, candidate], pack.constraints, pack.symbols)
            return list(found[-1].violations)

        out = []
        for v in verdicts:
            if v.testable:
                out.append(v)
                continue
            try:
                nv = judge_and_refine(
                    provider,
                    pack.constraints,
                    by_id[v.rule_id],
                    v.violations,
                    cfg.max_refine_iters,
                    knowledge=pack,
                    check=check,
                    ledger=run.ledger,
                    audit=run.audit,
                )
            except ProviderError as exc:
                nv = replace(v, notes=v.notes + (f"refinement unavailable: {exc}",))
            refined_count += nv.disposition == "refined"
            out.append(nv)
        verdicts = out
    usable = []
    by_id = {r.id: r for r in rules}
    for v in verdicts:
        if v.disposition == "accepted":
            usable.append(by_id[v.rule_id])
        elif v.disposition == "refined":
            usable.append(v.replacement)
    d = run.out / "verdicts"
    d.mkdir(parents=True, exist_ok=True)
    (d / "verdicts.jsonl").write_text(verdicts_to_jsonl(verdicts), encoding="utf-8")
    (d / "exclusions.txt").write_text(exclusion_report(verdicts, rules), encoding="utf-8")
    testable = RuleSet(tuple(usable), "testable")
    (d / "testable.trl").write_text(render_rules(testable), encoding="utf-8")
    run.stages["assess"] = {
        "status": "ok",
        "rules": len(verdicts),
        "testable": sum(v.testable for v in verdicts),
        "refined": refined_count,
        "excluded": sum(v.disposition == "excluded-for-review" for v in verdicts),
        "testable_fraction": testable_fraction(verdicts) if verdicts else None,
    }
    return testable


def cmd_generate(run: Run, pack: KnowledgePack, rules: RuleSet):
    cfg = run.cfg
    if not len(rules):
        log.warning("no testable rules; the suite is empty")
    suite = generate_suite(rules, pack.symbols, cfg.domains(), Strategy(negatives=cfg.negatives))
    write_suite(suite, run.out / "suite")
    run.stages["generate"] = {
        "status": "ok" if not suite.errors else "partial",
        "rules": len(rules),
        "cases": len(suite.cases),
        "scenarios": len(suite.scenarios),
        "errors": {str(k): v for k, v in sorted(suite.errors.items())},
        "by_polarity": {p: sum(c.polarity == p for c in suite.cases) for p in ("positive", "boundary", "negative")},
    }
    return suite


def cmd_evaluate(run: Run, generated: Sequence, truth_path: str, rules: RuleSet | None):
    try:
        truth = read_cases(truth_path)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read truth file {truth_path}: {exc}") from exc
    run.note_input(truth_path)
    scenarios = build_scenarios(rules) if rules is not None else []
    report = evaluate(generated, truth, rules or (), scenarios, MatchConfig(mode=run.cfg.match_mode))
    d = run.out / "eval"
    d.mkdir(parents=True, exist_ok=True)
    (d / "report.json").write_text(report.to_json(), encoding="utf-8")
    (d / "report.txt").write_text(report.table(), encoding="utf-8")
    scores = {"precision": report.precision, "recall": report.recall, "f1": report.f1, "bsc": report.bsc}
    failed = {
        name: {"required": need, "actual": scores[name]}
        for name, need in sorted(run.cfg.thresholds.items())
        if scores[name] is None or scores[name] < need
    }
    run.stages["evaluate"] = {"status": "ok" if not failed else "below-threshold", **scores, "threshold_failures": failed}
    if failed:
        raise ThresholdError(", ".join(f"{k} {v['actual']} < {v['required']}" for k, v in failed.items()))
    return report


def cmd_pipeline(cfg: PipelineConfig) -> tuple[int, Run]:
    """Run every stage; returns (exit code, run).  The manifest is always written."""
    run = Run(cfg, "pipeline")
    code = _guarded(run, lambda: _pipeline(run))
    return code, run


def _pipeline(run: Run) -> None:
    cfg = run.cfg
    pack = cmd_explicate(run)
    if cfg.rules:
        run.note_input(cfg.rules)
        rules = load_rules(cfg.rules, pack, cfg.strict_keys)
    else:
        rules = cmd_formalize(run, pack)
    testable = cmd_assess(run, pack, rules)
    suite = cmd_generate(run, pack, testable)
    if cfg.truth:
        cmd_evaluate(run, suite.cases, cfg.truth, testable)


def _guarded(run: Run, body) -> int:
    try:
        body()
        run.status = "complete"
        return EXIT_OK
    except InputError as exc:
        log.error("%s", exc)
        run.status = f"failed: {exc}"
        return EXIT_INPUT
    except QuorumError as exc:
        log.error("%s", exc)
        run.status = f"failed: {exc}"
        return EXIT_QUORUM
    except ThresholdError as exc:
        log.error("threshold not met: %s", exc)
        run.status = "complete; thresholds not met"
        return EXIT_THRESHOLD
    finally:
        for stage in run.stages.values():
            if stage.get("status") == "running":
                stage["status"] = "failed"
        run.write_manifest()


# ---------------------------------------------------------------------------
# argument parsing


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--config", help="YAML or JSON file with pipeline settings")
    g.add_argument("--out", help="output directory (default raftgen-out)")
    g.add_argument("--providers", help="comma-separated provider names to use")
    g.add_argument("--k", type=int, help="consensus threshold for meta-model purification")
    g.add_argument("--n", type=int, help="number of providers used for explication")
    g.add_argument("--max-refine-iters", type=int, dest="max_refine_iters")
    g.add_argument("--strict-keys", action="store_true", default=None, dest="strict_keys")
    g.add_argument("--builtin-pack", choices=["finance"], dest="builtin_pack")
    g.add_argument("--pack", help="directory of a saved knowledge pack")
    g.add_argument("--mock-fixtures", dest="mock_fixtures", help="answer every provider from <dir>/<provider>/")
    g.add_argument("--thresholds", help="minimum scores, e.g. f1=0.8,bsc=0.5")
    g.add_argument("--negatives", choices=["one-factor", "exhaustive", "pairwise"])
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="raftgen", description="Test cases from regulatory rules.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("explicate", parents=[common], help="build a knowledge pack")
    p.add_argument("documents", nargs="*")
    p.add_argument("--cases", nargs="*", default=None, help="historical test case files")

    p = sub.add_parser("formalize", parents=[common], help="turn documents into formal rules")
    p.add_argument("documents", nargs="+")

    p = sub.add_parser("assess", parents=[common], help="testability verdicts for a rule file")
    p.add_argument("rules")
    p.add_argument("--no-refine", action="store_true", help="local checks only")

    p = sub.add_parser("generate", parents=[common], help="test cases for a rule file")
    p.add_argument("rules")

    p = sub.add_parser("evaluate", parents=[common], help="score a suite against ground truth")
    p.add_argument("suite")
    p.add_argument("truth")
    p.add_argument("--rules", help="rule file used for scenario coverage")
    p.add_argument("--match-mode", choices=["exact", "subset"], dest="match_mode")

    p = sub.add_parser("pipeline", parents=[common], help="run every stage")
    p.add_argument("--documents", nargs="*", default=None)
    p.add_argument("--cases", nargs="*", default=None)
    p.add_argument("--rules", help="skip formalization and use this rule file")
    p.add_argument("--truth", help="ground-truth cases to evaluate against")
    return parser


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    over = {
        "out": args.out,
        "k": args.k,
        "n": args.n,
        "max_refine_iters": args.max_refine_iters,
        "strict_keys": args.strict_keys,
        "builtin_pack": args.builtin_pack,
        "pack": args.pack,
        "mock_fixtures": args.mock_fixtures,
        "negatives": args.negatives,
        "use_providers": args.providers.split(",") if args.providers else None,
        "thresholds": parse_thresholds(args.thresholds) if args.thresholds else None,
    }
    if args.command in ("explicate", "formalize"):
        over["documents"] = args.documents or None
    for name in ("documents", "cases", "truth", "match_mode"):
        if args.command != "formalize" and getattr(args, name, None) is not None:
            over[name] = getattr(args, name)
    if args.command == "pipeline" and args.rules:
        over["rules"] = args.rules
    return make_config(load_config(args.config), over)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
    except InputError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    if args.command == "pipeline":
        code, run = cmd_pipeline(cfg)
        _summary(run)
        return code
    run = Run(cfg, args.command)

    def body():
        if args.command == "explicate":
            cmd_explicate(run)
            return
        if args.command == "formalize":
            cmd_formalize(run, obtain_pack(run))
        elif args.command == "assess":
            run.note_input(args.rules)
            pack = obtain_pack(run)
            cmd_assess(run, pack, load_rules(args.rules, pack, cfg.strict_keys), refine=not args.no_refine)
        elif args.command == "generate":
            run.note_input(args.rules)
            pack = obtain_pack(run)
            cmd_generate(run, pack, load_rules(args.rules, pack, cfg.strict_keys))
        elif args.command == "evaluate":
            try:
                generated = read_cases(args.suite)
            except (OSError, ValueError) as exc:
                raise InputError(f"cannot read suite {args.suite}: {exc}") from exc
            run.note_input(args.suite)
            rules = None
            if args.rules:
                run.note_input(args.rules)
                rules = load_rules(args.rules, obtain_pack(run), cfg.strict_keys)
            report = cmd_evaluate(run, generated, args.truth, rules)
            sys.stdout.write(report.table())

    code = _guarded(run, body)
    _summary(run)
    return code


def _summary(run: Run) -> None:
    for name, stage in run.stages.items():
        brief = ", ".join(f"{k}={v}" for k, v in stage.items() if isinstance(v, (int, float, str)) and k != "status")
        print(f"{name}: {stage.get('status')}" + (f" ({brief})" if brief else ""), file=sys.stderr)
    print(f"manifest: {run.out / 'manifest.json'} [{run.status}]", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
