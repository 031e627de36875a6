"""Command-line entry point.

Exit codes: 0 success, 1 a check failed, 2 usage or spec error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from importlib import resources

import jsonschema
import numpy as np

from . import rng
from .coupling import couple_iag_ieg_approx_batch, couple_iag_ieg_exact_batch
from .distribution import GraphDistribution
from .errors import DegenerateCoupling, SamplerDiagnosticError, SpecError
from .exact import phi_pushforward, tv_distance, witness_events
from .graphs import format_code
from .models import ModelSpec, exact_model_distribution, realize, sample_spec
from .montecarlo import (
    approx_error_law_check,
    chernoff_xi_check,
    psi_increment_check,
    psi_tail_check,
    replicate_seeds,
    selection_batch,
)
from .report import VerdictReport
from .suites import SUITES, SuiteReport, run_suite

log = logging.getLogger("undirectify")

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2
SERIES_FIELDS = ["source", "n", "statistic", "estimate", "ci_low", "ci_high", "bound", "se", "passed"]
PAIRS = ("iag-ieg-exact", "iag-ieg-approx", "asrg-esrg")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- io -----------------------------------------------------------------------------


def load_schema(name: str) -> dict:
    return json.loads(resources.files("undirectify").joinpath("schemas", f"{name}.schema.json").read_text())


def read_json(path: str, schema: str | None = None):
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        raise SpecError(f"input file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise SpecError(f"malformed JSON in {path}: {exc}") from None
    if schema is not None:
        try:
            jsonschema.validate(obj, load_schema(schema))
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise SpecError(f"{path} fails the {schema} schema at {where}: {exc.message}") from None
    return obj


def write_atomic(path: str | None, text: str) -> None:
    """Write via a temp file in the target directory and rename into place."""
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def parse_seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer (decimal or 0x-hex), got {text!r}") from None
    if not 0 <= value <= rng.MASK64:
        raise argparse.ArgumentTypeError(f"seed must fit in unsigned 64 bits, got {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


# --- series ----------------------------------------------------------------------


def _checks_of(report) -> list[tuple[str, dict]]:
    if isinstance(report, SuiteReport):
        return [(report.suite, c.to_json()) for c in report.checks]
    if isinstance(report, list) and all(isinstance(r, SuiteReport) for r in report):
        return [pair for r in report for pair in _checks_of(r)]
    if isinstance(report, VerdictReport):
        return [("report", report.to_json())]
    if isinstance(report, dict):
        source = report.get("suite") or report.get("pair") or "report"
        return [(source, c) for c in report.get("checks", [])]
    return [("report", c.to_json() if isinstance(c, VerdictReport) else c) for c in report]


def emit_series(report) -> str:
    """One CSV row per check: n, statistic, estimate, CI, bound (floats in repr form)."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SERIES_FIELDS, lineterminator="\n")
    writer.writeheader()
    for source, c in _checks_of(report):
        ci = c.get("ci") or [None, None]
        writer.writerow({
            "source": source,
            "n": "" if c.get("n") is None else c["n"],
            "statistic": c["statistic"],
            "estimate": _num(c.get("estimate")),
            "ci_low": _num(ci[0]),
            "ci_high": _num(ci[1]),
            "bound": _num(c.get("bound")),
            "se": _num(c.get("se")),
            "passed": "" if c.get("passed") is None else str(bool(c["passed"])).lower(),
        })
    return buf.getvalue()


def _num(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def parse_series(text: str) -> list[dict]:
    """Inverse of :func:`emit_series`."""
    rows = []
    for row in csv.DictReader(io.StringIO(text)):
        out = {"source": row["source"], "statistic": row["statistic"], "n": int(row["n"]) if row["n"] else None}
        for key in ("estimate", "ci_low", "ci_high", "bound", "se"):
            out[key] = float(row[key]) if row[key] else None
        out["passed"] = None if row["passed"] == "" else row["passed"] == "true"
        rows.append(out)
    return rows


# --- subcommands --------------------------------------------------------------------


def _load_spec(path: str) -> ModelSpec:
    return ModelSpec.from_json(read_json(path, "model_spec"))


def cmd_generate(args) -> int:
    spec = _load_spec(args.spec)
    if args.validate_only:
        realize(spec, args.seed)
        log.info("spec %s is valid", args.spec)
        return EXIT_OK
    lines = []
    for k, s in enumerate(replicate_seeds(args.seed, args.count)):
        g = sample_spec(spec, int(s))
        obj = g.to_json()
        obj["code"] = format_code(g.code)
        obj["replicate"] = k
        lines.append(json.dumps(obj))
    write_atomic(args.out, "\n".join(lines) + ("\n" if lines else ""))
    return EXIT_OK


def cmd_phi(args) -> int:
    if args.dist:
        dist = GraphDistribution.from_json(read_json(args.dist, "distribution"))
    else:
        spec = _load_spec(args.spec)
        if not spec.directed:
            raise SpecError(f"phi needs a directed model, got class {spec.cls}")
        dist = exact_model_distribution(spec)
    if args.validate_only:
        return EXIT_OK
    write_atomic(args.out, dump(phi_pushforward(dist).to_json()))
    return EXIT_OK


def cmd_tv(args) -> int:
    a = GraphDistribution.from_json(read_json(args.a, "distribution"))
    b = GraphDistribution.from_json(read_json(args.b, "distribution"))
    if args.validate_only:
        return EXIT_OK
    value = tv_distance(a, b)
    if args.witness or args.out:
        plus, minus, gap = witness_events(a, b)
        obj = {"tv": value}
        if args.witness:
            obj.update({"q_plus": sorted(format_code(c) for c in plus),
                        "q_minus": sorted(format_code(c) for c in minus), "gap": gap})
        write_atomic(args.out, dump(obj))
    else:
        print(repr(value) if value else "0")
    return EXIT_OK


def cmd_couple(args) -> int:
    spec = _load_spec(args.spec)
    if args.pair in ("iag-ieg-exact", "iag-ieg-approx") and spec.cls != "IAG":
        raise SpecError(f"--pair {args.pair} needs an IAG spec, got {spec.cls}")
    if args.pair == "asrg-esrg" and spec.cls != "ASRG":
        raise SpecError(f"--pair asrg-esrg needs an ASRG spec, got {spec.cls}")
    real = realize(spec, args.seed)
    if args.validate_only:
        return EXIT_OK
    seeds = replicate_seeds(args.seed, args.replicates)
    checks: list[VerdictReport] = []
    aggregates: dict = {}
    if args.pair == "asrg-esrg":
        batch = selection_batch(real, args.replicates, args.seed)
        xi1, xi2 = batch.xi()
        ok = batch.ok
        checks += psi_increment_check(real, args.replicates, args.seed, batch=batch)
        checks.append(psi_tail_check(real, args.r, args.replicates, args.seed, batch=batch))
        aggregates["degenerate"] = int(batch.degenerate.sum())
        aggregates["rule_counts"] = dict(zip(("I", "II", "III"), (int(x) for x in batch.rule_counts[ok].sum(axis=0))))
        per = [{"replicate": k, "xi1": int(xi1[k]), "xi2": int(xi2[k]), "psi": batch.psi[k].tolist()}
               for k in range(min(args.keep, args.replicates))]
        xi1, xi2 = xi1[ok], xi2[ok]
    else:
        fn = couple_iag_ieg_exact_batch if args.pair == "iag-ieg-exact" else couple_iag_ieg_approx_batch
        batch = fn(real, seeds)
        xi1, xi2 = batch.xi1, batch.xi2
        if args.pair == "iag-ieg-exact":
            worst = int((xi1 + xi2).max(initial=0))
            checks.append(VerdictReport("exact-coupling-xi-zero", float(worst), 0.0, worst == 0, args.replicates,
                                        args.seed, bound_formula="max xi = 0"))
        else:
            checks += approx_error_law_check(real, args.replicates, args.seed)
            checks.append(chernoff_xi_check(real, args.omega, args.replicates, args.seed))
        per = [{"replicate": k, "xi1": int(xi1[k]), "xi2": int(xi2[k])} for k in range(min(args.keep, args.replicates))]
    aggregates.update({
        "xi1_mean": float(np.mean(xi1)) if len(xi1) else 0.0,
        "xi1_max": int(np.max(xi1, initial=0)),
        "xi2_mean": float(np.mean(xi2)) if len(xi2) else 0.0,
        "xi2_max": int(np.max(xi2, initial=0)),
    })
    passed = all(c.passed for c in checks if c.hard)
    report = {"pair": args.pair, "spec": spec.to_json(), "replicates": args.replicates, "seed": args.seed,
              "passed": passed, "aggregates": aggregates, "checks": [c.to_json() for c in checks],
              "replicate_sample": per}
    _emit(args, report)
    return EXIT_OK if passed else EXIT_CHECK


def cmd_verify(args) -> int:
    overrides = read_json(args.config, "suite_config") if args.config else {}
    names = list(SUITES) if args.suite == "all" else [args.suite]
    if args.validate_only:
        from .suites import suite_config

        for name in names:
            suite_config(name, overrides if args.suite != "all" else None, args.seed)
        return EXIT_OK
    reports = [run_suite(name, overrides if args.suite != "all" else None, seed=args.seed) for name in names]
    timing = not args.no_timing
    if len(reports) == 1:
        obj = reports[0].to_json(timing=timing)
    else:
        obj = {"passed": all(r.passed for r in reports),
               "checks": [c.to_json() for r in reports for c in r.checks],
               "suites": [r.to_json(timing=timing) for r in reports]}
    write_atomic(args.out, emit_series(reports) if args.format == "csv" else dump(obj))
    for r in reports:
        print(r.summary(), file=sys.stderr)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK


def _emit(args, report: dict) -> None:
    if args.format == "csv":
        write_atomic(args.out, emit_series(report))
    else:
        write_atomic(args.out, dump(report))


# --- parser --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=parse_seed, default=rng.DEFAULT_SEED,
                        help="64-bit base seed (default 0xDEADBEEF)")
    common.add_argument("--out", help="output path (stdout if omitted)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--validate-only", action="store_true", help="check inputs and exit")
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("-q", "--quiet", action="store_true")

    p = _Parser(prog="undirectify", description="Directed/undirected random graph models, couplings and checks.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    g = sub.add_parser("generate", parents=[common], help="sample graphs from a model spec")
    g.add_argument("--spec", required=True)
    g.add_argument("--count", type=_positive, default=1)
    g.set_defaults(func=cmd_generate)

    ph = sub.add_parser("phi", parents=[common], help="exact forgetful pushforward of a directed model")
    src = ph.add_mutually_exclusive_group(required=True)
    src.add_argument("--spec")
    src.add_argument("--dist", help="digraph distribution JSON instead of a spec")
    ph.set_defaults(func=cmd_phi)

    t = sub.add_parser("tv", parents=[common], help="total variation distance of two distributions")
    t.add_argument("--a", required=True)
    t.add_argument("--b", required=True)
    t.add_argument("--witness", action="store_true", help="also report the witness events")
    t.set_defaults(func=cmd_tv)

    c = sub.add_parser("couple", parents=[common], help="run a coupled sampler and check its error bounds")
    c.add_argument("--pair", choices=PAIRS, required=True)
    c.add_argument("--spec", required=True)
    c.add_argument("--replicates", type=_positive, default=10_000)
    c.add_argument("--keep", type=int, default=100, help="per-replicate rows kept in the report")
    c.add_argument("--omega", type=float, default=1.0, help="slack for the Chernoff check")
    c.add_argument("--r", type=float, default=1.0, help="rate for the Psi tail check")
    c.set_defaults(func=cmd_couple)

    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("--suite", choices=tuple(SUITES) + ("all",), required=True)
    v.add_argument("--config", help="JSON overrides of the suite defaults")
    v.add_argument("--no-timing", action="store_true", help="omit wall-clock fields (bit-identical reruns)")
    v.set_defaults(func=cmd_verify)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    level = logging.ERROR if args.quiet else (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SamplerDiagnosticError, DegenerateCoupling) as exc:
        print(f"sampler diagnostic: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())
