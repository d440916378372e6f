"""``lrccache`` command line: gen, run, sweep, analyze.

Exit codes: 0 ok, 1 missing file, 2 usage error, 3 schema error,
4 simulation error. Failures print one line to stderr of the form
``lrccache: error code=N kind=NAME msg=TEXT``.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .errors import InvalidArgumentError, LrcError, SchemaError
from .policies import POLICIES
from .simulator import (CostModel, capacity_from_fraction, distance_csv, inactive_csv,
                        measure_inactive_fraction, measure_rank_percentiles, rank_csv,
                        read_trace, report_csv, run, run_multi_tenant, trace_csv)
from .workloads import FAMILIES, GeneratorParams, compose_tenants, dag_to_json, generate, load_dag

EXIT_MISSING, EXIT_USAGE, EXIT_SCHEMA, EXIT_SIM = 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_gen_flags(p):
    g = p.add_argument_group("generator")
    g.add_argument("--params", metavar="JSON", help="generator params file (flags override it)")
    g.add_argument("--family", choices=FAMILIES)
    g.add_argument("--iterations", type=int)
    g.add_argument("--blocks-per-stage", type=int)
    g.add_argument("--fan-in", type=int)
    g.add_argument("--static-reuse", dest="static_block_reuse", action=argparse.BooleanOptionalAction,
                   default=None)
    g.add_argument("--size-min", type=int)
    g.add_argument("--size-max", type=int)
    g.add_argument("--skip-edges", action=argparse.BooleanOptionalAction, default=None)
    g.add_argument("--static-size-factor", type=int)


def _add_sim_flags(p, single: bool):
    p.add_argument("--dag", action="append", required=True, metavar="PATH",
                   help="DAG file; repeat for tenants")
    p.add_argument("--policy", action="append", choices=POLICIES, required=True)
    cap = p.add_mutually_exclusive_group(required=True)
    cap.add_argument("--capacity", action="append", type=int, metavar="BYTES")
    cap.add_argument("--capacity-frac", action="append", type=float, metavar="F")
    p.add_argument("--hit-cost", type=float, default=1)
    p.add_argument("--miss-cost", type=float, default=25)
    p.add_argument("--compute-cost", type=float, default=5)
    p.add_argument("--mode", choices=("offline", "online"))
    p.add_argument("--tenants", type=int, help="compose this many tenants (copies of a single --dag)")
    p.add_argument("--seed", type=int, default=0, help="tenant interleaving seed")
    p.add_argument("--out", metavar="DIR")
    p.set_defaults(single=single)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lrccache", description="Reference-count-aware cache simulator.")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a workload DAG file")
    _add_gen_flags(g)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", metavar="PATH", help="output file (default stdout)")

    r = sub.add_parser("run", help="simulate one policy at one capacity")
    _add_sim_flags(r, single=True)

    s = sub.add_parser("sweep", help="simulate policies x capacities")
    _add_sim_flags(s, single=False)

    a = sub.add_parser("analyze", help="metrics from trace files")
    a.add_argument("--dag", required=True, metavar="PATH")
    a.add_argument("--trace", action="append", required=True, metavar="PATH")
    a.add_argument("--out", metavar="DIR", required=True)
    return ap


# helpers ---------------------------------------------------------------


def _read(path) -> str:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(path)
    return p.read_text(encoding="utf-8")


def _load(path):
    if not Path(path).is_file():
        raise FileNotFoundError(path)
    return load_dag(path)


def _write(out_dir: Path | None, name: str, text: str):
    if out_dir is None:
        sys.stdout.write(text)
        return
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(text, encoding="utf-8", newline="\n")


def _params(args) -> GeneratorParams:
    base = {}
    if args.params:
        text = _read(args.params)
        try:
            base = dataclasses.asdict(GeneratorParams.from_json(text))
        except InvalidArgumentError:
            raise
        except (ValueError, TypeError) as exc:
            raise SchemaError(f"{args.params}: {exc}") from None
    for f in dataclasses.fields(GeneratorParams):
        v = getattr(args, f.name, None)
        if v is not None:
            base[f.name] = v
    return GeneratorParams(**base)


def _tenants(args):
    dags = [_load(p) for p in args.dag]
    k = args.tenants
    if k is None:
        return dags, len(dags) > 1
    if k < 1:
        raise UsageError("--tenants must be >= 1")
    if len(dags) == 1:
        dags = dags * k
    elif len(dags) != k:
        raise UsageError(f"--tenants {k} does not match {len(dags)} --dag files")
    return dags, True


def _simulate(args):
    dags, multi = _tenants(args)
    if multi:
        if "min" in args.policy:
            raise UsageError("min is allowed only in offline single-trace mode")
        if args.mode == "offline":
            raise UsageError("multi-tenant runs are always online")
        dags = compose_tenants(dags)
        total = sum(d.total_bytes for d in dags)
    else:
        if args.mode == "online" and "min" in args.policy:
            raise UsageError("min is allowed only in offline single-trace mode")
        total = dags[0].total_bytes
    if args.capacity is not None:
        if any(c < 1 for c in args.capacity):
            raise UsageError("--capacity must be >= 1")
        caps = args.capacity
    else:
        if any(not 0 < f <= 1 for f in args.capacity_frac):
            raise UsageError("--capacity-frac must be in (0, 1]")
        caps = [capacity_from_fraction(total, f) for f in args.capacity_frac]
    policies = list(dict.fromkeys(args.policy))
    caps = sorted(set(caps))
    if args.single and (len(policies) != 1 or len(caps) != 1):
        raise UsageError("run takes exactly one --policy and one capacity; use sweep")
    try:
        cost = CostModel(args.hit_cost, args.miss_cost, args.compute_cost)
    except InvalidArgumentError as exc:
        raise UsageError(str(exc)) from None

    reports = []
    for pol in sorted(policies):
        for c in caps:
            if multi:
                reports.append(run_multi_tenant(dags, pol, c, cost, interleave_seed=args.seed))
            else:
                reports.append(run(dags[0], pol, c, cost, mode=args.mode or "offline"))
    return reports


def _monotonicity_warnings(reports):
    by_policy = {}
    for r in reports:
        by_policy.setdefault(r.policy, []).append(r)
    for pol, rs in by_policy.items():
        for a, b in zip(rs, rs[1:]):
            if b.hit_ratio < a.hit_ratio:
                print(f"lrccache: warning kind=non-monotone policy={pol} "
                      f"capacity={a.capacity_bytes}->{b.capacity_bytes} "
                      f"hit_ratio={a.hit_ratio:.6f}->{b.hit_ratio:.6f}", file=sys.stderr)


# commands --------------------------------------------------------------


def cmd_gen(args):
    text = dag_to_json(generate(_params(args)))
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def cmd_run(args):
    (rep,) = _simulate(args)
    out = Path(args.out) if args.out else None
    _write(out, "report.csv", report_csv([rep]))
    if out is not None:
        _write(out, "trace.csv", trace_csv(rep.trace))
        _write(out, "evictions.csv", rep.eviction_log.to_csv())
        if rep.per_tenant:
            rows = "tenant,hits,misses\n" + "".join(
                f"{t},{h},{m}\n" for t, (h, m) in sorted(rep.per_tenant.items(), key=lambda kv: int(kv[0])))
            _write(out, "per_tenant.csv", rows)


def cmd_sweep(args):
    reports = _simulate(args)
    _monotonicity_warnings(reports)
    _write(Path(args.out) if args.out else None, "sweep.csv", report_csv(reports))


def cmd_analyze(args):
    dag = _load(args.dag)
    out = Path(args.out)
    many = len(args.trace) > 1
    for path in args.trace:
        try:
            trace = read_trace(_read(path))
        except (KeyError, ValueError) as exc:
            raise SchemaError(f"{path}: {exc}") from None
        unknown = {e.block for e in trace if e.block and e.block not in dag.blocks}
        if unknown:
            raise SchemaError(f"{path}: blocks not in the DAG: {sorted(unknown)[:5]}")
        d = out / Path(path).stem if many else out
        _write(d, "inactive_fraction.csv", inactive_csv(measure_inactive_fraction(trace, dag)))
        _write(d, "rank_percentiles.csv", rank_csv(measure_rank_percentiles(trace, dag)))
        _write(d, "reference_distance.csv", distance_csv(trace, dag))


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "sweep": cmd_sweep, "analyze": cmd_analyze}


def _fail(code: int, kind: str, msg) -> int:
    text = " ".join(str(msg).split())
    print(f"lrccache: error code={code} kind={kind} msg={text}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        COMMANDS[args.cmd](args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", exc)
    except FileNotFoundError as exc:
        return _fail(EXIT_MISSING, "missing-file", exc.filename or exc)
    except SchemaError as exc:
        return _fail(EXIT_SCHEMA, "schema", exc)
    except InvalidArgumentError as exc:
        # bad generator params or flag values
        return _fail(EXIT_USAGE, "invalid-argument", exc)
    except LrcError as exc:
        return _fail(EXIT_SIM, type(exc).__name__, exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
