"""Command-line front end: ``cla-audit {test,welfare,power,axioms,oracle}``.

Exit codes: 0 success, 1 disagreement found, 2 invalid input, 64 usage.
Every report renders as text (rates rounded to two decimals) or as JSON
at full precision.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import axioms
from .core import ChoiceDataset, NotRationalizable, ThresholdProfile, ValidationError
from .io import SchemaError, StudyFile, load_profile, read_study
from .oracle import InstanceTooLarge, oracle_min_contour, oracle_rationalizable
from .power import (
    METHODS,
    DomainError,
    EmptyReferenceForBudget,
    MissingReference,
    Rate,
    run_power_study,
)
from .solver import default_jobs, solve_pairs
from .sweep import run_sweep
from .welfare import guaranteed_welfare_bound

EXIT_OK = 0
EXIT_DISAGREE = 1
EXIT_INVALID = 2
EXIT_USAGE = 64
REPORT_SCHEMA = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _k_list(text: str) -> list[int]:
    """``1..8``, ``1,2,5`` or a mix such as ``1..3,6``."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo, hi = _positive(lo), _positive(hi)
            if hi < lo:
                raise argparse.ArgumentTypeError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(_positive(part))
    return out


def _alpha(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return value


# Shared plumbing


@dataclass
class _Loaded:
    study: StudyFile
    datasets: list[ChoiceDataset]
    profiles: list[ThresholdProfile]


def _load(args, ks: Sequence[int] | None = None) -> _Loaded:
    study = read_study(args.study)
    if getattr(args, "profile", None):
        with open(args.profile, encoding="utf-8") as fh:
            profiles = [load_profile(fh.read(), len(study.design))]
    else:
        profiles = [ThresholdProfile.of(k) for k in (ks or [args.k])]
    return _Loaded(study, study.datasets(), profiles)


def _subject_profile(loaded: _Loaded, s: int, profile: ThresholdProfile) -> ThresholdProfile:
    return loaded.study.subject_profile(s, profile)


def _fmt(x: float | Fraction) -> str:
    return f"{float(x):.2f}"


def _rate_text(rate: Rate, paper_style: bool) -> str:
    text = _fmt(rate.value)
    if rate.ci is None or (paper_style and rate.successes in (0, rate.n)):
        return text
    return f"{text} ({_fmt(rate.ci[0])}; {_fmt(rate.ci[1])})"


def _rate_json(rate: Rate) -> dict:
    return {
        "successes": rate.successes,
        "n": rate.n,
        "rate": float(rate.value),
        "ci": list(rate.ci) if rate.ci else None,
    }


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(r[c])) for r in [header, *rows]) for c in range(len(header))]
    lines = ["  ".join(str(v).ljust(w) for v, w in zip(r, widths)).rstrip() for r in [header, *rows]]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _emit(args, payload: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps({"schema": REPORT_SCHEMA, **payload}, indent=2))
    else:
        print(text)


def _cycle_text(data: ChoiceDataset, cycle: Sequence[int]) -> str:
    labels = data.labels(cycle)
    return " > ".join(labels + labels[:1])


# test


def cmd_test(args) -> int:
    loaded = _load(args)
    profile = loaded.profiles[0]
    pairs = [(d, _subject_profile(loaded, s, profile)) for s, d in enumerate(loaded.datasets)]
    verdicts = solve_pairs(pairs, jobs=args.jobs, explain=True)
    for v in verdicts:
        if isinstance(v, Exception):
            raise v
    passed = sum(v.feasible for v in verdicts)
    n = len(verdicts)
    rate = Rate.of(passed, n, args.alpha) if n else None
    subjects = []
    rows = []
    for subj, data, v in zip(loaded.study.subjects, loaded.datasets, verdicts):
        entry = {"id": subj.id, "feasible": v.feasible}
        detail = ""
        if v.feasible:
            entry["witness"] = {
                "preference": data.labels(v.witness.preference.ranking),
                "attention": [data.labels(a) for a in v.witness.attention],
            }
        else:
            entry["conflict"] = list(v.conflict)
            entry["cycle"] = data.labels(v.cycle)
            parts = []
            if v.cycle:
                parts.append(f"cycle {_cycle_text(data, v.cycle)}")
            if v.conflict:
                parts.append("observations [" + ", ".join(str(i) for i in v.conflict) + "]")
            detail = "; ".join(parts)
        subjects.append(entry)
        rows.append((subj.id, "Feasible" if v.feasible else "Infeasible", detail))
    lines = [f"threshold {profile.describe()}", _table(("subject", "verdict", "detail"), rows), ""]
    if rate is None:
        lines.append("0 subjects")
    else:
        pct = f"{100 * float(rate.value):.0f}%"
        summary = f"{passed}/{n} pass ({pct})"
        if rate.ci and not (args.paper_style and passed in (0, n)):
            summary += f", {100 * (1 - args.alpha):g}% CI [{_fmt(rate.ci[0])}, {_fmt(rate.ci[1])}]"
        lines.append(summary)
    payload = {
        "command": "test",
        "profile": profile.describe(),
        "subjects": subjects,
        "pass_rate": _rate_json(rate) if rate else None,
        "alpha": args.alpha,
    }
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


# welfare


def _welfare_cell(cell):
    data, profile = cell
    try:
        return guaranteed_welfare_bound(data, profile)
    except NotRationalizable:
        return None


def _quartiles(values: Sequence[int]) -> list[float]:
    return [float(q) for q in np.percentile(values, [0, 25, 50, 75, 100])]


def cmd_welfare(args) -> int:
    loaded = _load(args, args.ks)
    cells = [
        (d, _subject_profile(loaded, s, p)) for p in loaded.profiles for s, d in enumerate(loaded.datasets)
    ]
    if args.jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(_welfare_cell, cells))
    else:
        reports = [_welfare_cell(c) for c in cells]
    n_sub = len(loaded.datasets)
    rows_json, agg_rows, blocks = [], [], []
    for p, profile in enumerate(loaded.profiles):
        mine = reports[p * n_sub:(p + 1) * n_sub]
        subj_json, detail_rows, infeasible = [], [], []
        for subj, data, rep in zip(loaded.study.subjects, loaded.datasets, mine):
            if rep is None:
                infeasible.append(subj.id)
                continue
            arg = data.label(rep.argmax_alternative)
            sizes = {data.label(r.alternative): r.size for r in rep.per_alternative}
            subj_json.append(
                {
                    "id": subj.id,
                    "W": rep.bound_W,
                    "argmax": arg,
                    "contours": {
                        data.label(r.alternative): {"size": r.size, "set": data.labels(r.lower_set)}
                        for r in rep.per_alternative
                    },
                }
            )
            detail_rows.append(
                (subj.id, str(rep.bound_W), arg, " ".join(f"{a}:{v}" for a, v in sizes.items()))
            )
        ws = [s["W"] for s in subj_json]
        stats = None
        if ws:
            sd = float(np.std(ws, ddof=1)) if len(ws) > 1 else 0.0
            stats = {"n": len(ws), "mean": float(np.mean(ws)), "sd": sd, "quartiles": _quartiles(ws)}
            agg_rows.append(
                (
                    profile.describe(),
                    str(len(ws)),
                    f"{_fmt(stats['mean'])} ({_fmt(sd)})",
                    *(f"{q:g}" for q in stats["quartiles"]),
                )
            )
        else:
            agg_rows.append((profile.describe(), "0", "-", "-", "-", "-", "-", "-"))
        rows_json.append(
            {"profile": profile.describe(), "subjects": subj_json, "infeasible": infeasible, "summary": stats}
        )
        block = [f"threshold {profile.describe()}"]
        if detail_rows:
            block.append(_table(("subject", "W", "argmax", "minimal lower contour sizes"), detail_rows))
        if infeasible:
            block.append("inconsistent (excluded): " + ", ".join(infeasible))
        blocks.append("\n".join(block))
    summary = _table(("threshold", "n", "mean (sd)", "min", "25%", "50%", "75%", "max"), agg_rows)
    text = "\n\n".join([*blocks, "guaranteed welfare bounds\n" + summary])
    _emit(args, {"command": "welfare", "rows": rows_json}, text)
    return EXIT_OK


# power


def cmd_power(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    loaded = _load(args, args.ks)
    if any(c is None for subj in loaded.study.subjects for c in subj.choices):
        raise DomainError("power studies need every subject observed on every design budget")
    methods = METHODS if args.method == "both" else (args.method,)
    report = run_power_study(
        loaded.datasets,
        loaded.study.design_budgets(),
        loaded.profiles,
        methods=methods,
        n_random=args.n,
        seed=args.seed,
        alpha=args.alpha,
        jobs=args.jobs,
    )
    header = ["threshold", "pass rate"]
    header += [f"{m} power" for m in methods] + [f"PSI {m}" for m in methods]
    rows = []
    for row in report.rows:
        cells = [row.profile.describe(), _rate_text(row.pass_rate, args.paper_style)]
        cells += [_rate_text(row.power[m], args.paper_style) for m in methods]
        cells += [_fmt(row.psi[m]) for m in methods]
        rows.append(cells)
    ci = f"{100 * (1 - args.alpha):g}%"
    text = "\n".join(
        [
            f"{report.n_real} subjects, {report.n_random} random subjects per method, seed {report.seed}",
            _table(header, rows),
            f"intervals: {ci} Clopper-Pearson",
        ]
    )
    payload = {"command": "power", **report.to_dict()}
    _emit(args, payload, text)
    return EXIT_OK


# axioms


def _violation_json(data: ChoiceDataset, v: axioms.AxiomViolation) -> dict:
    return {
        "axiom": v.axiom.value,
        "observations": list(v.witness_observations),
        "alternatives": data.labels(v.cycle_or_tuple),
        "message": v.describe(data),
    }


def cmd_axioms(args) -> int:
    loaded = _load(args)
    profile = loaded.profiles[0]
    subjects, lines = [], []
    disagreements = 0
    for s, (subj, data) in enumerate(zip(loaded.study.subjects, loaded.datasets)):
        sp = _subject_profile(loaded, s, profile)
        complete = data.is_complete()
        if sp.is_uniform:
            k = sp.uniform
            found = {
                "SARPk": axioms.check_sarp_k(data, k),
                "WARPLAk": axioms.check_warp_la_k(data, k),
                "NBC": axioms.check_nbc(data),
                "KContraction": axioms.check_k_contraction(data, k),
            }
        else:
            het = {v.axiom.value: v for v in axioms.check_heterogeneous(data, sp)}
            found = {"SARPhet": het.get("SARPhet"), "WARPLAhet": het.get("WARPLAhet")}
        entry = {
            "id": subj.id,
            "scope": "complete domain" if complete else "observed-domain restriction",
            "axioms": {name: (None if v is None else _violation_json(data, v)) for name, v in found.items()},
        }
        head = f"subject {subj.id}: axioms ({entry['scope']})"
        body = [
            f"  {name}: " + ("Ok" if v is None else v.describe(data)) for name, v in found.items()
        ]
        if args.complete_domain:
            if not complete:
                entry["equivalence"] = None
                body.append("  warning: domain incomplete; equivalence check skipped")
            elif not sp.is_uniform:
                entry["equivalence"] = None
                body.append("  warning: equivalence check needs a uniform threshold; skipped")
            else:
                verdict = solve_pairs([(data, sp)])[0].feasible
                t1 = found["SARPk"] is None and found["WARPLAk"] is None
                t3 = found["NBC"] is None and found["KContraction"] is None
                eq = {"solver": verdict, "sarp_warp": t1, "nbc_contraction": t3}
                entry["equivalence"] = eq
                body.append(f"  solver: {'Feasible' if verdict else 'Infeasible'}")
                for name, holds in (("SARPk + WARPLAk", t1), ("NBC + KContraction", t3)):
                    if holds == verdict:
                        body.append(f"  {name}: agrees with solver")
                    else:
                        disagreements += 1
                        body.append(f"  {name}: DISAGREES with solver")
        subjects.append(entry)
        lines.append("\n".join([head, *body]))
    _emit(
        args,
        {"command": "axioms", "profile": profile.describe(), "subjects": subjects, "disagreements": disagreements},
        "\n".join(lines),
    )
    return EXIT_DISAGREE if disagreements else EXIT_OK


# oracle


def _oracle_study(args) -> int:
    loaded = _load(args)
    profile = loaded.profiles[0]
    subjects, rows = [], []
    bad = 0
    for s, (subj, data) in enumerate(zip(loaded.study.subjects, loaded.datasets)):
        sp = _subject_profile(loaded, s, profile)
        solver = solve_pairs([(data, sp)])[0].feasible
        oracle = oracle_rationalizable(data, sp)
        contours = {}
        if solver and oracle:
            rep = guaranteed_welfare_bound(data, sp)
            for r in rep.per_alternative:
                contours[data.label(r.alternative)] = (r.size, oracle_min_contour(data, sp, r.alternative))
        agree = solver == oracle and all(a == b for a, b in contours.values())
        bad += not agree
        subjects.append(
            {
                "id": subj.id,
                "solver": solver,
                "oracle": oracle,
                "contours": {a: {"welfare": w, "oracle": o} for a, (w, o) in contours.items()},
                "agree": agree,
            }
        )
        rows.append((subj.id, str(solver), str(oracle), "agree" if agree else "DISAGREE"))
    text = _table(("subject", "solver", "oracle", "status"), rows)
    _emit(args, {"command": "oracle", "profile": profile.describe(), "subjects": subjects}, text)
    return EXIT_DISAGREE if bad else EXIT_OK


def cmd_oracle(args) -> int:
    if (args.sweep is None) == (args.study is None):
        raise UsageError("give either --sweep x3|x4 or a study file")
    if args.study is not None:
        if args.k is None and not args.profile:
            raise UsageError("give --k N or --profile FILE")
        return _oracle_study(args)
    n = int(args.sweep[1:])
    result = run_sweep(n)
    ks = result.ks
    k_text = "{" + ",".join(map(str, ks)) + "}" if len(ks) <= 3 else "{" + f"{ks[0]}..{ks[-1]}" + "}"
    lines = []
    checks = (("oracle", "solver vs oracle"), ("sarp_warp", "solver vs SARPk + WARPLAk"),
              ("nbc_contraction", "solver vs NBC + KContraction"))
    for key, name in checks:
        a, c = result.agree[key], result.compared[key]
        lines.append(f"  {name}: {a}/{c} agree")
    total_agree = sum(result.agree.values())
    total = sum(result.compared.values())
    head = f"{result.functions} choice functions × k∈{k_text}: "
    if result.all_agree(("oracle",)) and total_agree == total:
        head += f"{result.cases}/{result.cases} agree"
    else:
        head += "disagreement found"
    for key, (raw, k) in result.first_disagreement.items():
        lines.append(f"  first {key} disagreement at k={k}: {raw}")
    _emit(args, {"command": "oracle", "sweep": result.to_dict()}, "\n".join([head, *lines]))
    return EXIT_OK if result.all_agree() else EXIT_DISAGREE


# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cla-audit", description="Audit choice data under k-th order limited attention.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, study_required=True, threshold=True, multi_k=False):
        if study_required:
            p.add_argument("study", help="study file (.json or .csv)")
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--jobs", type=_positive, default=default_jobs(), help="worker processes")
        if threshold:
            group = p.add_mutually_exclusive_group(required=True)
            group.add_argument("--k", type=_positive, help="uniform attention threshold")
            if multi_k:
                group.add_argument("--ks", type=_k_list, help="thresholds, e.g. 1..8 or 1,2,4")
            group.add_argument("--profile", help="threshold profile file")

    p = sub.add_parser("test", help="rationalizability verdict per subject")
    common(p)
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--paper-style", action="store_true", help="omit intervals at rates 0 and 1")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("welfare", help="guaranteed welfare bounds")
    common(p, multi_k=True)
    p.set_defaults(func=cmd_welfare)

    p = sub.add_parser("power", help="pass rates, power and predictive success")
    common(p, threshold=False)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--ks", type=_k_list)
    group.add_argument("--k", type=_positive)
    group.add_argument("--profile")
    p.add_argument("--method", choices=("bronars", "bootstrap", "both"), default="both")
    p.add_argument("--n", type=int, default=1000, help="random subjects per method")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--paper-style", action="store_true", help="omit intervals at rates 0 and 1")
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("axioms", help="axiom checks")
    common(p)
    p.add_argument("--complete-domain", action="store_true", help="cross-check the axioms against the solver")
    p.set_defaults(func=cmd_axioms)

    p = sub.add_parser("oracle", help="brute-force cross-checks")
    p.add_argument("study", nargs="?", help="study file within oracle limits")
    p.add_argument("--sweep", choices=("x3", "x4"))
    p.add_argument("--format", choices=("text", "json"), default="text")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--k", type=_positive)
    group.add_argument("--profile")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"cla-audit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SchemaError, ValidationError, DomainError, MissingReference, EmptyReferenceForBudget) as exc:
        print(f"cla-audit: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except InstanceTooLarge as exc:
        print(f"cla-audit: instance too large: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"cla-audit: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
