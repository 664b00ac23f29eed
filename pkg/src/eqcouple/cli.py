"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 input error,
3 internal inconsistency.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

from .certificate import verify_minimizer
from .core import Instance, build_measure, build_space, dump_instance, load_instance
from .coupling import cost, coupling_from_json, dumps_17g, kl8_exact_law, kl8_plan, kl8_sample, optimal_coupling
from .errors import InputError, InternalInconsistencyError
from .oracle import TransportProblem, duality_check, load_cost_table, solve_transport
from .quotient import tv_invariant

COMMANDS = ("tv", "couple", "kl8", "sample", "verify", "certify", "ingest", "selftest")
CSV_COLUMNS = ("point_id", "class_label", "mu_count", "nu_count")

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


@dataclass(frozen=True)
class RunConfig:
    command: str
    instance_path: Path | None = None
    seed: int = 0
    samples: int = 100_000
    output_path: Path | None = None
    format: str = "json"
    workers: int = 1
    coupling_path: Path | None = None
    cost_path: Path | None = None
    csv_path: Path | None = None
    weighting: str = "counts"

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if self.samples < 1:
            raise InputError("--samples must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise InputError("--seed must be a 64-bit unsigned integer")
        if self.format not in ("json", "text"):
            raise InputError("--format must be json or text")


def ingest(csv_path: str | Path, weighting: str = "counts") -> Instance:
    """Empirical instance from a CSV of labeled counts; repeated point ids add up."""
    if weighting not in ("counts", "uniform"):
        raise InputError(f"unknown weighting {weighting!r}")
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(CSV_COLUMNS) - set(reader.fieldnames):
            raise InputError(f"CSV header must contain {', '.join(CSV_COLUMNS)}")
        labels: dict[str, str] = {}
        mu: dict[str, int] = {}
        nu: dict[str, int] = {}
        for lineno, row in enumerate(reader, start=2):
            x, label = (row["point_id"] or "").strip(), (row["class_label"] or "").strip()
            if not x or not label:
                raise InputError(f"line {lineno}: empty point_id or class_label")
            try:
                m, n = int(row["mu_count"]), int(row["nu_count"])
            except (TypeError, ValueError) as exc:
                raise InputError(f"line {lineno}: counts must be integers") from exc
            if m < 0 or n < 0:
                raise InputError(f"line {lineno}: negative count")
            if labels.setdefault(x, label) != label:
                raise InputError(f"line {lineno}: point {x!r} relabeled {labels[x]!r} -> {label!r}")
            mu[x] = mu.get(x, 0) + m
            nu[x] = nu.get(x, 0) + n
    if not labels:
        raise InputError("CSV has no rows")
    space = build_space(list(labels), labels)
    measures = []
    for name, counts in (("mu", mu), ("nu", nu)):
        if weighting == "uniform":
            counts = {x: int(c > 0) for x, c in counts.items()}
        total = sum(counts.values())
        if total == 0:
            raise InputError(f"{name} counts sum to zero")
        measures.append(build_measure(space, {x: Fraction(c, total) for x, c in counts.items()}, name))
    return Instance(space, *measures)


def _flatten(doc: Any, prefix: str = "") -> list[str]:
    if isinstance(doc, dict):
        if set(doc) >= {"x", "y"} and len(doc) == 3:
            (k, v), = ((k, v) for k, v in doc.items() if k not in ("x", "y"))
            return [f"{prefix}{doc['x']} -> {doc['y']}: {_scalar(v)}"]
        lines = []
        for k, v in doc.items():
            lines.extend(_flatten(v, f"{prefix}{k}."))
        return lines
    if isinstance(doc, list):
        if not doc:
            return [f"{prefix.rstrip('.')}: []"]
        if all(not isinstance(v, (dict, list)) for v in doc):
            return [f"{prefix.rstrip('.')}: {', '.join(_scalar(v) for v in doc)}"]
        lines = []
        for v in doc:
            lines.extend(_flatten(v, prefix))
        return lines
    return [f"{prefix.rstrip('.')}: {_scalar(doc)}"]


def _scalar(v: Any) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, bool):
        return str(v).lower()
    return "null" if v is None else str(v)


def render(doc: Any, fmt: str) -> str:
    if fmt == "text":
        return "\n".join(_flatten(doc)) + "\n"
    return dumps_17g(doc)


def _require_instance(cfg: RunConfig) -> Instance:
    if cfg.instance_path is None:
        raise InputError(f"{cfg.command} needs --instance")
    return load_instance(cfg.instance_path)


def _execute(cfg: RunConfig) -> tuple[Any, int]:
    cmd = cfg.command
    if cmd == "selftest":
        from .acceptance import run_all

        results = run_all()
        doc = {"criteria": [r.line() for r in results], "passed": all(r.passed for r in results)}
        return doc, EXIT_OK if doc["passed"] else EXIT_FAIL
    if cmd == "ingest":
        if cfg.csv_path is None:
            raise InputError("ingest needs --csv")
        return ingest(cfg.csv_path, cfg.weighting), EXIT_OK
    inst = _require_instance(cfg)
    mu, nu = inst.mu, inst.nu
    if cmd == "tv":
        return tv_invariant(mu, nu).to_json(), EXIT_OK
    if cmd == "couple":
        if cfg.cost_path is not None:
            table = load_cost_table(cfg.cost_path, inst.space)
            res = solve_transport(TransportProblem(table, mu, nu))
            return {"coupling": res.argmin.to_json(), "value": str(res.value), "iterations": res.iterations}, EXIT_OK
        P = optimal_coupling(mu, nu)
        return {"coupling": P.to_json(), "cost": str(cost(P))}, EXIT_OK
    if cmd == "kl8":
        plan = kl8_plan(mu, nu)
        law, nu0 = kl8_exact_law(plan, mu)
        doc = {
            "plan": plan.to_json(),
            "law": law.to_json(),
            "nu0": nu0.to_json(),
            "p_x_ne_y": str(law.mass_off_diagonal()),
            "p_not_E": str(1 - law.mass_on_relation()),
        }
        return doc, EXIT_OK
    if cmd == "sample":
        report = kl8_sample(kl8_plan(mu, nu), mu, cfg.samples, cfg.seed, cfg.workers)
        return report.to_json(), EXIT_OK
    if cmd == "verify":
        report = duality_check(mu, nu)
        return report.to_json(), EXIT_OK if report.ok else EXIT_FAIL
    if cmd == "certify":
        if cfg.coupling_path is None:
            raise InputError("certify needs --coupling")
        try:
            raw = json.loads(Path(cfg.coupling_path).read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{cfg.coupling_path}: invalid JSON ({exc})") from exc
        verdict = verify_minimizer(coupling_from_json(raw, mu, nu))
        doc = verdict.to_json()
        doc["result"] = "Certificate" if verdict.is_minimizer else "NotFound"
        return doc, EXIT_OK if verdict.is_minimizer else EXIT_FAIL
    raise InputError(f"unknown command {cmd!r}")


def run(cfg: RunConfig) -> int:
    try:
        doc, code = _execute(cfg)
    except InternalInconsistencyError as exc:
        print(f"internal inconsistency: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (InputError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if isinstance(doc, Instance):
        text = dump_instance(doc)
    elif cfg.command == "selftest" and cfg.format == "text":
        text = "\n".join(doc["criteria"]) + "\n"
    else:
        text = render(doc, cfg.format)
    if cfg.output_path is not None:
        cfg.output_path.write_text(text)
    else:
        sys.stdout.write(text)
    return code


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instance", type=Path, help="instance JSON file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=100_000)
    common.add_argument("--out", type=Path, help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "text"), default="json")

    parser = argparse.ArgumentParser(prog="eqcouple", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "tv": "total variation over class-invariant sets, with witness",
        "couple": "optimal coupling and its cost (or oracle solve with --cost)",
        "kl8": "two-stage maximal coupling plan, exact joint law and nu0",
        "sample": "Monte Carlo draws from the maximal coupling",
        "verify": "oracle value vs invariant total variation",
        "certify": "optimality certificate for a coupling file",
        "ingest": "build an instance file from a CSV of labeled counts",
        "selftest": "run the embedded acceptance suite",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=helps[name])
        if name == "sample":
            p.add_argument("--workers", type=int, default=1)
        if name == "certify":
            p.add_argument("--coupling", type=Path, help="coupling JSON file")
        if name == "couple":
            p.add_argument("--cost", type=Path, help="optional general cost table JSON")
        if name == "ingest":
            p.add_argument("--csv", type=Path, help="CSV with point_id,class_label,mu_count,nu_count")
            p.add_argument("--weighting", choices=("counts", "uniform"), default="counts")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(
            command=args.command,
            instance_path=args.instance,
            seed=args.seed,
            samples=args.samples,
            output_path=args.out,
            format=args.format,
            workers=getattr(args, "workers", 1),
            coupling_path=getattr(args, "coupling", None),
            cost_path=getattr(args, "cost", None),
            csv_path=getattr(args, "csv", None),
            weighting=getattr(args, "weighting", "counts"),
        )
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
