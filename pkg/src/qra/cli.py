"""Command line interface.

    qra validate <bundle>
    qra similarity <bundle>
    qra assess <bundle> [--mode strict|lenient] [--format markdown|csv|json]
                        [--confidence 0.95] [--precision N]
    qra partition <bundle> --by key[,key...] [--out-dir DIR] [--assess ...]

Exit status: 0 success, 1 validation failure, 2 comparability gate refusal,
3 I/O or parse error. Reports go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from . import __version__
from .assessment import LENIENT, STRICT, AssessmentOptions, assess_study, partition, similarity_profile
from .bundle import dump_bundle, load_bundle
from .errors import BundleSyntaxError, DomainError, GateRefusal, SchemaError, ValidationFailed
from .model import StudyBundle, validate_bundle
from .report import FORMATS, emit_report

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_GATE = 2
EXIT_IO = 3


def _err(*lines):
    for line in lines:
        print(line, file=sys.stderr)


def _profile_lines(qc, profile):
    yield f"[{qc}]"
    yield "  same: " + (", ".join(profile.same) or "-")
    if profile.different:
        yield "  different:"
        for key, values in profile.different:
            yield f"    {key}: " + " | ".join(map(str, values))
    else:
        yield "  different: -"
    yield "  not recorded everywhere: " + (", ".join(profile.coverage) or "-")


def _options(args) -> AssessmentOptions:
    return AssessmentOptions(mode=args.mode, confidence_level=args.confidence,
                             kappa=args.kappa, p_aggregation=args.p_aggregation,
                             p_exclude_ties=args.exclude_ties)


def _assess(bundle, args, out):
    try:
        assessment = assess_study(bundle, _options(args))
    except ValidationFailed as exc:
        _err("bundle failed validation:", *(f"  {f}" for f in exc.findings))
        return EXIT_INVALID
    except GateRefusal as exc:
        _err(f"comparability gate refused quality criterion {exc.qc!r} (strict mode):",
             *_profile_lines(exc.qc, exc.profile),
             "rerun with --mode lenient to assess with expectation-lowering caveats")
        return EXIT_GATE
    out.write(emit_report(assessment, args.format, args.precision))
    return EXIT_OK


def cmd_validate(bundle, args):
    findings = validate_bundle(bundle)
    if findings:
        _err(*(str(f) for f in findings))
        return EXIT_INVALID
    return EXIT_OK


def cmd_similarity(bundle, args):
    for qc in bundle.quality_criteria():
        profile = similarity_profile([e.properties for e in bundle.for_qc(qc)])
        if args.format == "json":
            print(json.dumps({qc: profile.to_dict()}, sort_keys=True, default=str))
        else:
            print("\n".join(_profile_lines(qc, profile)))
    return EXIT_OK


def cmd_assess(bundle, args):
    return _assess(bundle, args, sys.stdout)


def _slug(values) -> str:
    text = "-".join("none" if v is None else str(v) for v in values)
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text).strip("_") or "group"


def cmd_partition(bundle, args):
    keys = [k.strip() for k in args.by.split(",") if k.strip()]
    try:
        groups = partition(bundle.experiments, keys)
    except DomainError as exc:
        _err(str(exc))
        return EXIT_INVALID
    named = [(_slug(values), exps) for values, exps in groups if len(exps) > 1]
    singles = [exps[0] for _, exps in groups if len(exps) == 1]
    if singles and not args.keep_singletons:
        # experiments matching no other form one heterogeneous remainder group
        named.append(("mixed", singles))
    else:
        named += [(_slug(values), exps) for values, exps in groups if len(exps) == 1]

    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    for name, exps in named:
        print(f"group {name}: " + ", ".join(e.id for e in exps))
        sub = StudyBundle(f"{bundle.study_id}:{name}", bundle.systems, tuple(exps))
        if out_dir:
            (out_dir / f"{name}.yaml").write_text(dump_bundle(sub), encoding="utf-8")
        if args.assess:
            if len(exps) < 2:
                _err(f"group {name}: a single experiment cannot be assessed")
                continue
            print()
            code = _assess(sub, args, sys.stdout)
            print()
            status = max(status, code)
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qra", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_bundle(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("bundle", help="study bundle file (YAML)")
        return p

    def with_assess_flags(p):
        p.add_argument("--mode", choices=(STRICT, LENIENT), default=STRICT)
        p.add_argument("--format", choices=FORMATS, default="markdown")
        p.add_argument("--confidence", type=float, default=0.95,
                       help="confidence level for s* intervals (default 0.95)")
        p.add_argument("--precision", type=int, default=None,
                       help="display decimals for every measure (default: 2 for CV*, 3 otherwise)")
        p.add_argument("--kappa", choices=("cohen", "fleiss"), default="cohen",
                       help="kappa variant when two label experiments are compared")
        p.add_argument("--p-aggregation", choices=("pool", "mean"), default="pool",
                       help="study-level P: pool all differences or average per criterion")
        p.add_argument("--exclude-ties", action="store_true",
                       help="drop system pairs tied in either experiment from P")

    with_bundle("validate", "check a bundle's structure and property values")
    p = with_bundle("similarity", "compare experiment property sheets per quality criterion")
    p.add_argument("--format", choices=("text", "json"), default="text")
    with_assess_flags(with_bundle("assess", "run the full reproducibility assessment"))
    p = with_bundle("partition", "group experiments sharing property values")
    p.add_argument("--by", required=True, help="comma-separated property keys")
    p.add_argument("--out-dir", help="write one bundle file per group here")
    p.add_argument("--assess", action="store_true", help="assess every group of 2+ experiments")
    p.add_argument("--keep-singletons", action="store_true",
                   help="list single-experiment groups separately instead of pooling them")
    with_assess_flags(p)
    return parser


COMMANDS = {
    "validate": cmd_validate,
    "similarity": cmd_similarity,
    "assess": cmd_assess,
    "partition": cmd_partition,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if hasattr(args, "confidence") and not 0 < args.confidence < 1:
        build_parser().error("--confidence must lie strictly between 0 and 1")
    try:
        bundle = load_bundle(args.bundle)
    except OSError as exc:
        _err(f"cannot read {args.bundle}: {exc.strerror or exc}")
        return EXIT_IO
    except (BundleSyntaxError, SchemaError) as exc:
        _err(f"{args.bundle}: {exc}")
        return EXIT_IO
    return COMMANDS[args.command](bundle, args)


if __name__ == "__main__":
    sys.exit(main())
