"""Command-line interface: ``qostree {train,evaluate,cube,rank,synth}``.

Errors go to stderr as ``error[E-CODE]: message`` and the process exits
nonzero; text tables go to stdout and JSON only to ``--out``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .dataset import META_VERSION, DataError, load_dataset, write_csv, write_metadata
from .evaluation import REPORT_VERSION, EvaluationError, compare_learners
from .learners import DEFAULT_ROSTER, LearnerError, LearnerSpec
from .model_cube import CUBE_VERSION, CubeError, build_cube, load_candidates, load_cube, query
from .models import MODEL_VERSION, save_model
from .synth import PROFILES, generate

EXIT_CODES = {"E-ARGS": 2, "E-DATA": 3, "E-LEARNER": 4, "E-CUBE": 5, "E-IO": 6, "E-EVAL": 7}


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("E-ARGS", message)


def _spec(args) -> LearnerSpec:
    return LearnerSpec.parse(args.learner, args.param or [])


def _parse_subset(text: str, parameters) -> list[str]:
    if text.strip().lower() == "all":
        return list(parameters)
    names = [t.strip() for t in text.split(",") if t.strip()]
    if not names:
        raise CliError("E-ARGS", f"empty parameter subset {text!r}")
    return names


def _write_text(path: str, text: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_train(args) -> int:
    d = load_dataset(args.data)
    model = _spec(args).train(d, args.seed)
    if args.out:
        save_model(model, args.out)
    print(model.render().rstrip("\n"))
    return 0


def cmd_evaluate(args) -> int:
    if args.folds < 2:
        raise CliError("E-ARGS", f"--folds must be at least 2, got {args.folds}")
    d = load_dataset(args.data)
    names = []
    for item in args.learners or []:
        names.extend(n for n in item.split(",") if n.strip())
    if args.learner:
        names.extend(args.learner)
    if not names:
        names = list(DEFAULT_ROSTER)
    if args.param and len(names) != 1:
        raise CliError("E-ARGS", "--param applies to a single learner")
    specs = [LearnerSpec.parse(n, args.param or []) for n in names]
    comparison = compare_learners(d, specs, k=args.folds, seed=args.seed)
    print(comparison.render(), end="")
    if args.out:
        _write_text(args.out, comparison.to_json(args.normalize))
    return 1 if all(r.failed for r in comparison.reports) else 0


def cmd_cube(args) -> int:
    d = load_dataset(args.data)
    params = [a.name for a in d.features]
    subsets = "all" if not args.subset else [_parse_subset(s, params) for s in args.subset]
    cube = build_cube(d, subsets, _spec(args), seed=args.seed, store=args.out, jobs=args.jobs,
                      normalize=args.normalize)
    failed = [c for c in cube.cells.values() if not c.ok]
    print(f"cube: {len(cube)} cells ({len(failed)} failed) for {d.name}, fingerprint {cube.fingerprint}")
    for c in failed:
        print(f"  failed mask {c.mask}: {c.error}", file=sys.stderr)
    return 0


def cmd_rank(args) -> int:
    cube = load_cube(args.cube)
    subset = _parse_subset(args.subset, cube.parameters)
    spec = _spec(args)
    ids, services = load_candidates(args.candidates, id_column=args.id_column)
    try:
        cube.cell(subset, spec)
    except CubeError:
        if not args.build_missing:
            raise
        if not args.data:
            raise CliError("E-ARGS", "--build-missing needs --data") from None
        d = load_dataset(args.data)
        if d.fingerprint() != cube.fingerprint:
            raise CubeError("training data does not match the cube's fingerprint") from None
        cube = build_cube(d, [subset], spec, seed=args.seed, store=args.cube, cube=cube)
    result = query(cube, subset, spec, services, ids)
    print(result.render(), end="")
    if args.out:
        _write_text(args.out, json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n")
    return 0


def cmd_synth(args) -> int:
    d = generate(args.profile, args.seed)
    directory = os.path.dirname(args.out)
    if directory:
        os.makedirs(directory, exist_ok=True)
    write_csv(d, args.out)
    meta = write_metadata(d, args.out, seed=args.seed)
    print(f"wrote {len(d)} rows to {args.out} (metadata {meta})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qostree", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version",
                   version=f"qostree {__version__} (model format {MODEL_VERSION}, cube format {CUBE_VERSION}, "
                           f"report format {REPORT_VERSION}, dataset metadata {META_VERSION})")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def learner_flags(sp, default="jrip"):
        sp.add_argument("--learner", default=default, help="learner name (default: %(default)s)")
        sp.add_argument("--param", action="append", metavar="KEY=VALUE", help="learner parameter override")

    t = sub.add_parser("train", help="train one learner and save the model")
    t.add_argument("--data", required=True)
    learner_flags(t)
    t.add_argument("--seed", type=int, default=1)
    t.add_argument("--out", help="model file to write")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="stratified k-fold comparison of learners")
    e.add_argument("--data", required=True)
    e.add_argument("--learner", action="append", help="learner to include (repeatable)")
    e.add_argument("--learners", action="append", help="comma-separated learner names")
    e.add_argument("--param", action="append", metavar="KEY=VALUE")
    e.add_argument("--folds", type=int, default=10)
    e.add_argument("--seed", type=int, default=1)
    e.add_argument("--out", help="JSON report to write")
    e.add_argument("--normalize", action="store_true", help="omit build times from --out")
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("cube", help="pre-build models for parameter subsets")
    c.add_argument("--data", required=True)
    learner_flags(c)
    c.add_argument("--subset", action="append",
                   help="comma-separated parameters (repeatable); default all nonempty subsets")
    c.add_argument("--seed", type=int, default=1)
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--out", required=True, help="cube directory")
    c.add_argument("--normalize", action="store_true", help="omit timestamps and build times")
    c.set_defaults(func=cmd_cube)

    r = sub.add_parser("rank", help="rank candidate services with a cube cell")
    r.add_argument("--cube", required=True)
    r.add_argument("--subset", required=True, help="comma-separated parameters, or 'all'")
    r.add_argument("--candidates", required=True, help="CSV of services to rank")
    r.add_argument("--id-column", default="Service")
    learner_flags(r)
    r.add_argument("--seed", type=int, default=1)
    r.add_argument("--build-missing", action="store_true", help="train a missing cell on demand")
    r.add_argument("--data", help="training data for --build-missing")
    r.add_argument("--out", help="JSON ranking to write")
    r.set_defaults(func=cmd_rank)

    s = sub.add_parser("synth", help="write a seeded synthetic dataset")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--profile", default="qws364", choices=sorted(PROFILES))
    s.set_defaults(func=cmd_synth)
    return p


def _classify(exc: BaseException) -> str:
    if isinstance(exc, CliError):
        return exc.code
    if isinstance(exc, LearnerError):
        return "E-LEARNER"
    if isinstance(exc, CubeError):
        return "E-CUBE"
    if isinstance(exc, EvaluationError):
        return "E-EVAL"
    if isinstance(exc, (DataError, json.JSONDecodeError, UnicodeDecodeError)):
        return "E-DATA"
    if isinstance(exc, OSError):
        return "E-IO"
    return "E-DATA"


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (CliError, LearnerError, CubeError, EvaluationError, DataError, OSError, ValueError) as exc:
        code = _classify(exc)
        print(f"error[{code}]: {exc}", file=sys.stderr)
        return EXIT_CODES[code]


if __name__ == "__main__":
    sys.exit(main())
