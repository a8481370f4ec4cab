"""Command-line interface: certification, monodromy, table harness, replay.

Subcommands:
  certify        criterion at one rank (--k) or full descent from g-1
  monodromy      triangle-loop class count for a square case
  table          batch descent over a CSV of expected results
  replay-theorem rerun the bundled reference instance and compare

Exit codes: 0 success, 1 comparison mismatch, 2 configuration or input
error, 3 internal numerical failure.  Every run with a fixed --seed is
reproducible; JSON written through --json is byte-identical across runs.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .certify import certify_at_k, certify_descend, probe_defectivity
from .linalg import PrimeField
from .monodromy import (
    REALITY_SELF_CONJUGATE,
    canonicalize,
    run_monodromy,
)
from .polyspace import ProblemSpec
from .system import (
    ConfigurationError,
    SCHEMA_VERSION,
    point_from_dict,
    rank_info,
    spec_from_dict,
    spec_to_dict,
)
from .tracker import TrackOptions

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_TRACKER_FLAGS = [
    ("initial_step", float),
    ("min_step", float),
    ("max_step", float),
    ("newton_tol", float),
    ("max_corrector_iters", int),
    ("max_steps", int),
    ("shrink", float),
    ("grow", float),
    ("endpoint_refine_iters", int),
    ("divergence_norm", float),
]


def _parse_degrees(text: str) -> tuple[int, ...]:
    try:
        degs = tuple(sorted(int(part) for part in text.replace("|", ",").split(",")))
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse degrees from {text!r}")
    return degs


def _build_spec(args) -> ProblemSpec:
    if args.n is None or args.r is None or args.degrees is None:
        raise ConfigurationError("--n, --r and --degrees are required")
    return ProblemSpec(n=args.n, r=args.r, degrees=args.degrees)


def _tracker_options(args) -> TrackOptions:
    kwargs = {}
    for name, _ in _TRACKER_FLAGS:
        val = getattr(args, name, None)
        if val is not None:
            kwargs[name] = val
    return TrackOptions(**kwargs) if kwargs else TrackOptions()


def _write_json(path: str | None, doc: dict) -> None:
    if not path:
        return
    text = json.dumps(doc, sort_keys=True, indent=2)
    Path(path).write_text(text + "\n")


def _emit(args, doc: dict, human_lines: list[str]) -> None:
    if getattr(args, "format", "human") == "json":
        print(json.dumps(doc, sort_keys=True, indent=2))
    else:
        for line in human_lines:
            print(line)
    _write_json(getattr(args, "json", None), doc)


# ---------------------------------------------------------------------------
# certify


def cmd_certify(args) -> int:
    spec = _build_spec(args)
    info = rank_info(spec)
    field = PrimeField(args.prime) if args.prime else None
    if args.k is not None:
        if args.k >= info.generic_rank:
            probe = probe_defectivity(spec, args.k, seed=args.seed)
            doc = probe.to_dict()
            lines = [f"g={info.generic_rank}"]
            if probe.deficient:
                lines.append(
                    f"terracini-deficient at k={args.k}: observed rank "
                    f"{probe.ranks[0][1]} < expected {probe.expected_rank} "
                    f"(confirmed over {len(probe.ranks)} primes)"
                )
            else:
                lines.append(
                    f"no deficiency observed at k={args.k}: rank "
                    f"{probe.ranks[0][1]} = expected {probe.expected_rank}"
                )
            _emit(args, doc, lines)
            return EXIT_OK
        cert = certify_at_k(spec, args.k, seed=args.seed, field=field)
        doc = cert.to_dict()
        lines = [f"g={info.generic_rank}", f"{cert.verdict} at k={args.k}"]
        if cert.certified:
            lines[-1] = f"certified k={args.k}"
        _emit(args, doc, lines)
        return EXIT_OK
    run = certify_descend(spec, seed=args.seed, field=field)
    doc = run.to_dict()
    trace = ", ".join(f"k={k}: {v}" for k, v in run.trace)
    lines = [
        f"g={run.generic_rank}, certified k={run.max_certified_k}",
        f"descent: {trace}",
    ]
    _emit(args, doc, lines)
    return EXIT_OK


# ---------------------------------------------------------------------------
# monodromy


def _monodromy_lines(report) -> list[str]:
    by_tag: dict[str, int] = {}
    for c in report.classes:
        by_tag[c.reality] = by_tag.get(c.reality, 0) + 1
    breakdown = ", ".join(f"{v} {k}" for k, v in sorted(by_tag.items()))
    return [
        f"{report.count_complex} classes over ℂ ({breakdown})",
        f"loops={report.loops_run} failed_paths={report.paths_failed} "
        f"degenerate={report.degenerate_discarded} saturated={report.saturated}",
        f"verdict: {report.verdict}",
    ]


def cmd_monodromy(args) -> int:
    spec = _build_spec(args)
    if args.k is None:
        raise ConfigurationError("--k is required for monodromy")
    report = run_monodromy(
        spec,
        args.k,
        seed=args.seed,
        saturation=args.saturation,
        max_loops=args.loops,
        options=_tracker_options(args),
    )
    if not report.classes:
        print("no classes recovered: all paths failed", file=sys.stderr)
        return EXIT_NUMERICAL
    _emit(args, report.to_dict(), _monodromy_lines(report))
    return EXIT_OK


# ---------------------------------------------------------------------------
# table


def _bundled(name: str):
    return resources.files("waringid.data").joinpath(name)


def _read_table_rows(handle) -> list[dict]:
    reader = csv.DictReader(handle)
    required = {"r", "n", "degrees", "expected_g", "expected_k"}
    if reader.fieldnames is None or not required.issubset(set(reader.fieldnames)):
        raise ConfigurationError(
            f"table CSV needs columns {sorted(required)}, got {reader.fieldnames}"
        )
    rows = []
    for raw in reader:
        rows.append(
            {
                "r": int(raw["r"]),
                "n": int(raw["n"]),
                "degrees": _parse_degrees(raw["degrees"]),
                "expected_g": int(raw["expected_g"]),
                "expected_k": int(raw["expected_k"]),
            }
        )
    return rows


def _run_table_row(row: dict, seed: int) -> dict:
    spec = ProblemSpec(n=row["n"], r=row["r"], degrees=row["degrees"])
    info = rank_info(spec)
    run = certify_descend(spec, seed=seed)
    ok = (info.generic_rank == row["expected_g"]
          and run.max_certified_k == row["expected_k"])
    return {
        "r": row["r"],
        "n": row["n"],
        "degrees": list(row["degrees"]),
        "expected_g": row["expected_g"],
        "observed_g": info.generic_rank,
        "expected_k": row["expected_k"],
        "observed_k": run.max_certified_k,
        "match": ok,
    }


def cmd_table(args) -> int:
    if args.input:
        with open(args.input, newline="") as fh:
            rows = _read_table_rows(fh)
    else:
        name = f"table_{args.subset or 'full'}.csv"
        ref = _bundled(name)
        if not ref.is_file():
            raise ConfigurationError(f"no bundled table named {name!r}")
        with ref.open(newline="") as fh:
            rows = _read_table_rows(fh)

    if args.jobs > 1 and len(rows) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_table_row, rows, [args.seed] * len(rows)))
    else:
        results = [_run_table_row(row, args.seed) for row in rows]

    doc = {
        "schema_version": SCHEMA_VERSION,
        "seed": args.seed,
        "rows": results,
        "mismatches": sum(1 for r in results if not r["match"]),
    }
    lines = []
    header = f"{'r':>3} {'n':>3}  {'degrees':<18} {'g':>4} {'k':>5}  status"
    if args.format == "csv":
        lines.append("r,n,degrees,expected_g,observed_g,expected_k,observed_k,match")
        for r in results:
            lines.append(
                f"{r['r']},{r['n']},{'|'.join(map(str, r['degrees']))},"
                f"{r['expected_g']},{r['observed_g']},{r['expected_k']},"
                f"{r['observed_k']},{str(r['match']).lower()}"
            )
    else:
        lines.append(header)
        for r in results:
            status = "match" if r["match"] else (
                f"MISMATCH (got g={r['observed_g']}, k={r['observed_k']})"
            )
            degs = ",".join(map(str, r["degrees"]))
            lines.append(
                f"{r['r']:>3} {r['n']:>3}  ({degs:<16}) {r['expected_g']:>4} "
                f"{'<=' + str(r['expected_k']):>5}  {status}"
            )
        lines.append(f"{len(results)} rows, {doc['mismatches']} mismatches")
    _emit(args, doc, lines)
    return EXIT_OK if doc["mismatches"] == 0 else EXIT_MISMATCH


# ---------------------------------------------------------------------------
# replay-theorem


REPLAY_MATCH_RTOL = 1e-3


def _load_fixture(path: str | None) -> dict:
    if path:
        with open(path) as fh:
            return json.load(fh)
    with _bundled("theorem_instance.json").open() as fh:
        return json.load(fh)


def _best_block_match(recovered, expected) -> list[float]:
    """Greedy per-block relative deviations between two points."""
    rec = [np.array([complex(v) for v in list(s.linear) + list(s.weights)])
           for s in recovered.summands]
    exp = [np.array([complex(v) for v in list(s.linear) + list(s.weights)])
           for s in expected.summands]
    devs = []
    used = set()
    for e in exp:
        best, best_i = None, None
        for i, r in enumerate(rec):
            if i in used:
                continue
            # floor keeps printed noise entries (~1e-15) from dominating
            scale = np.maximum(np.abs(e), 1e-3)
            d = float((np.abs(r - e) / scale).max())
            if best is None or d < best:
                best, best_i = d, i
        used.add(best_i)
        devs.append(best)
    return devs


def cmd_replay_theorem(args) -> int:
    fixture = _load_fixture(args.fixture)
    try:
        spec = spec_from_dict(fixture["spec"])
        k = int(fixture["k"])
        start_point = point_from_dict(fixture["start_point"])
        expected = point_from_dict(fixture["expected_solution"])
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"malformed fixture: missing {exc}")

    from .polyspace import forward_map

    params = forward_map(spec, start_point.summands)
    if args.perturb:
        rng = np.random.default_rng(args.seed)
        params = params + args.perturb * rng.uniform(-1.0, 1.0, params.size)
    report = run_monodromy(
        spec, k, seed=args.seed,
        saturation=args.saturation, max_loops=args.loops,
        options=_tracker_options(args),
        start=(start_point, params),
    )

    lines = _monodromy_lines(report)
    sc = [c for c in report.classes if c.reality == REALITY_SELF_CONJUGATE]
    start_canon = canonicalize(start_point)
    has_start = any(
        np.abs(c.point.to_vector() - start_canon.to_vector()).max() < 1e-6
        for c in report.classes
    ) if not args.perturb else True

    structure_ok = (
        report.count_complex == 2
        and report.count_real == 1
        and len(sc) == 1
        and has_start
    )
    max_dev = None
    if sc:
        recovered = sc[0].point
        exp_canon = canonicalize(expected)
        lines.append("recovered self-conjugate class vs bundled expected values:")
        rec_blocks = recovered.summands
        exp_blocks = exp_canon.summands
        for i, (rb, eb) in enumerate(zip(rec_blocks, exp_blocks)):
            rv = ", ".join(f"{complex(v):.4g}" for v in list(rb.linear) + list(rb.weights))
            ev = ", ".join(f"{complex(v):.4g}" for v in list(eb.linear) + list(eb.weights))
            lines.append(f"  block {i + 1} recovered: [{rv}]")
            lines.append(f"  block {i + 1} expected:  [{ev}]")
        devs = _best_block_match(recovered, exp_canon)
        max_dev = max(devs)
        lines.append(
            f"per-block relative deviation (best matching): "
            + ", ".join(f"{d:.2e}" for d in devs)
        )

    values_ok = max_dev is not None and max_dev < REPLAY_MATCH_RTOL
    doc = {
        "schema_version": SCHEMA_VERSION,
        "spec": spec_to_dict(spec),
        "k": k,
        "seed": args.seed,
        "perturb": args.perturb,
        "report": report.to_dict(),
        "structure_ok": structure_ok,
        "max_relative_deviation": max_dev,
        "values_match": values_ok,
    }
    if args.perturb:
        # open-set probe: only the structure is asserted
        lines.append(f"structure under perturbation {args.perturb:g}: "
                     f"{'ok' if structure_ok else 'MISMATCH'}")
        _emit(args, doc, lines)
        return EXIT_OK if structure_ok else EXIT_MISMATCH
    lines.append(f"structure: {'ok' if structure_ok else 'MISMATCH'}")
    lines.append(
        f"values within {REPLAY_MATCH_RTOL:g} relative: "
        f"{'yes' if values_ok else 'NO'}"
    )
    _emit(args, doc, lines)
    return EXIT_OK if structure_ok and values_ok else EXIT_MISMATCH


# ---------------------------------------------------------------------------
# parser assembly


def _add_common(sub, *, spec_flags=True, tracker_flags=False):
    sub.add_argument("--seed", type=int, default=0, help="random seed")
    sub.add_argument("--json", metavar="PATH", help="write the JSON report here")
    sub.add_argument("--format", choices=("human", "json", "csv"), default="human",
                     help="stdout format")
    sub.add_argument("--config", metavar="PATH",
                     help="key = value file with defaults for any flag")
    if spec_flags:
        sub.add_argument("--n", type=int, help="number of variables minus one")
        sub.add_argument("--r", type=int, help="number of components")
        sub.add_argument("--degrees", type=_parse_degrees,
                         help="comma-separated component degrees (sorted ascending)")
    if tracker_flags:
        for name, typ in _TRACKER_FLAGS:
            sub.add_argument(f"--{name.replace('_', '-')}", type=typ, default=None,
                             dest=name, help=f"tracker option {name}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="waringid",
        description="Waring decompositions of polynomial vectors: monodromy "
                    "counting and exact identifiability certification.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("certify", help="identifiability criterion at sub-generic rank")
    _add_common(p)
    p.add_argument("--k", type=int, help="rank to test; omit to descend from g-1")
    p.add_argument("--prime", type=int, help="prime modulus override")
    p.set_defaults(func=cmd_certify)

    p = subs.add_parser("monodromy", help="triangle-loop decomposition count")
    _add_common(p, tracker_flags=True)
    p.add_argument("--k", type=int, help="number of summands (square case)")
    p.add_argument("--loops", type=int, default=50, help="loop budget")
    p.add_argument("--saturation", type=int, default=5,
                   help="stop after this many loops with no new class")
    p.set_defaults(func=cmd_monodromy)

    p = subs.add_parser("table", help="batch certification against expected results")
    _add_common(p, spec_flags=False)
    p.add_argument("--input", metavar="CSV",
                   help="CSV with columns r,n,degrees,expected_g,expected_k")
    p.add_argument("--subset", help="bundled table name (small or full)")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.set_defaults(func=cmd_table)

    p = subs.add_parser("replay-theorem",
                        help="rerun the bundled rank-6 reference instance")
    _add_common(p, spec_flags=False, tracker_flags=True)
    p.add_argument("--fixture", metavar="PATH",
                   help="fixture JSON (defaults to the bundled instance)")
    p.add_argument("--loops", type=int, default=50, help="loop budget")
    p.add_argument("--saturation", type=int, default=15,
                   help="stop after this many loops with no new class")
    p.add_argument("--perturb", type=float, default=0.0,
                   help="perturb the parameters by this amount (open-set probe)")
    p.set_defaults(func=cmd_replay_theorem)

    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Fold --config file values in as defaults for the chosen subcommand."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        parser.error("--config needs a path")
    path = argv[idx + 1]
    try:
        text = Path(path).read_text()
    except OSError as exc:
        parser.error(f"cannot read config file: {exc}")
    extra: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            parser.error(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        extra.extend([f"--{key.replace('_', '-')}", value])
    # config-provided flags come first so explicit flags win
    return extra + argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if argv:
            argv = [argv[0]] + _apply_config(parser, argv[1:])
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConfigurationError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
