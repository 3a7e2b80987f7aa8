"""Command-line frontend: reproducible experiments with machine-readable
CSV/JSON reports.

Exit codes: 0 success, 2 configuration/validation error, 3 numerical
tolerance or verdict failure (so CI can gate on it).  Every output file
embeds the effective configuration, seed, and package version.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import __version__
from .charfn import RadialCharFn, StableParams, substream
from .errors import PrecisionError, ToleranceError
from .levy import (
    CfEvaluator,
    LevyExponent,
    classify_two_valued,
    invert_exponent,
    measure_mass,
)
from .limits import PRESETS, convergence_report
from .padic import PAdicNumber, format_padic, grid_points, parse_number
from .specs import (
    SpecValidationError,
    measure_from_spec,
    parse_rational,
    parse_set_literal,
    sampler_from_spec,
    scenario_from_spec,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TOLERANCE = 3


def _default_seed(args_seed) -> int:
    if args_seed is not None:
        return int(args_seed)
    env = os.environ.get("PADICPROB_SEED")
    return int(env) if env else 0


def _meta(seed: int | None, config: dict) -> dict:
    out = {"version": __version__, "config": config}
    if seed is not None:
        out["seed"] = seed
    return out


def _write_csv(path: Path, meta: dict, rows: list[dict]) -> None:
    fields: list[str] = []
    for r in rows:
        for k in r:
            if k not in fields:
                fields.append(k)
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True, default=str) + "\n")
        writer = csv.DictWriter(fh, fieldnames=fields, restval="")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v
                             for k, v in r.items()})


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2, default=str)
        fh.write("\n")


def _load_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _fmt_value(v: complex) -> str:
    if abs(v.imag) < 1e-14:
        return f"{v.real:.15g}"
    return f"{v.real:.15g}{v.imag:+.15g}j"


def _parse_kv(text: str) -> dict:
    out = {}
    for part in text.split(","):
        key, _, val = part.partition("=")
        if not _:
            raise SpecValidationError(f"expected key=value, got {part!r}")
        out[key.strip()] = val.strip()
    return out


def _cf_from_args(args) -> tuple[object, int]:
    """Build a transform evaluator from --stable/--measure flags."""
    if args.stable:
        kv = _parse_kv(args.stable)
        params = StableParams(float(kv["a"]), float(kv["alpha"]), int(kv["p"]))
        g = RadialCharFn.stable(params)
        return (lambda t: complex(g(t))), params.prime
    if args.measure:
        measure = measure_from_spec(_load_json(args.measure))
        return CfEvaluator(measure), measure.prime
    raise SpecValidationError("need --stable or --measure")


def _grid_from_arg(arg: str, p: int) -> list[PAdicNumber]:
    lo, _, hi = arg.partition(":")
    return grid_points(p, int(lo), int(hi))


def cmd_cf_eval(args) -> int:
    g, p = _cf_from_args(args)
    ts: list[PAdicNumber] = [parse_number(s) for s in args.t or []]
    if args.grid:
        ts.extend(_grid_from_arg(args.grid, p))
    if not ts:
        raise SpecValidationError("no evaluation points: pass --t or --grid")
    rows = []
    for t in ts:
        val = complex(g(t))
        rows.append(
            {"t": str(t.as_rational()), "abs_t": str(t.abs_value()),
             "re": val.real, "im": val.imag}
        )
        print(_fmt_value(val))
    if args.out:
        _write_csv(
            Path(args.out),
            _meta(None, {"command": "cf-eval", "stable": args.stable,
                         "measure": args.measure}),
            rows,
        )
    return EXIT_OK


def cmd_sample(args) -> int:
    spec = _load_json(args.sampler) if os.path.exists(args.sampler) else json.loads(args.sampler)
    sampler = sampler_from_spec(spec)
    seed = _default_seed(args.seed)
    rng = substream(seed, 0)
    draws = sampler.sample(rng, args.count)
    header = json.dumps(
        {
            "p": sampler.prime,
            "resolution": sampler.resolution,
            "seed": seed,
            "count": args.count,
            "sampler": spec,
            "version": __version__,
        },
        sort_keys=True,
    )
    lines = [format_padic(x) for x in draws]
    text = "# " + header + "\n" + "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_levy_exponent(args) -> int:
    measure = measure_from_spec(_load_json(args.measure))
    phi = LevyExponent(measure)
    ts: list[PAdicNumber] = [parse_number(s) for s in args.t or []]
    if args.grid:
        ts.extend(_grid_from_arg(args.grid, measure.prime))
    if not ts:
        raise SpecValidationError("no evaluation points: pass --t or --grid")
    rows = []
    for t in ts:
        val = phi(t)
        rows.append(
            {"t": str(t.as_rational()), "abs_t": str(t.abs_value()),
             "re": val.real, "im": val.imag}
        )
        print(_fmt_value(val))
    if args.out:
        _write_csv(
            Path(args.out),
            _meta(None, {"command": "levy-exponent", "measure": args.measure}),
            rows,
        )
    return EXIT_OK


def cmd_levy_invert(args) -> int:
    import re

    measure = measure_from_spec(_load_json(args.measure))
    p = measure.prime
    m = re.match(r"^\s*annulus\(\s*(-?\d+)\s*,\s*(-?\d+|inf)\s*\)\s*$", args.set)
    if not m:
        raise SpecValidationError(
            "inversion runs on annuli: use annulus(<i>,<l>) or annulus(<i>,inf)"
        )
    i = int(m.group(1))
    l = None if m.group(2) == "inf" else int(m.group(2))
    phi = LevyExponent(measure)
    recovered = invert_exponent(phi, i, l, p, tol=args.tol)
    region = parse_set_literal(args.set, p)
    exact = float(measure_mass(measure, region))
    resid = abs(recovered - exact) / max(abs(exact), 1e-30)
    print(f"recovered {recovered:.12g}")
    print(f"exact     {exact:.12g}")
    print(f"relative residual {resid:.3e}")
    if args.check is not None and resid > args.check:
        print(f"FAIL: residual exceeds {args.check:g}", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def cmd_classify(args) -> int:
    spec = args.cf.strip()
    p = args.p
    if spec == "omega0":
        spec = "omega:0"
    if spec.startswith("omega:"):
        if p is None:
            raise SpecValidationError("omega classification needs --p")
        g = RadialCharFn.indicator(p, int(spec.split(":", 1)[1]))
        ev = lambda t: complex(g(t))  # noqa: E731
    elif spec.startswith("delta:"):
        if p is None:
            raise SpecValidationError("delta classification needs --p")
        xi = parse_rational(spec.split(":", 1)[1])
        if xi:
            ev = lambda t: t.mul_rational(xi).character_phase().to_complex()  # noqa: E731
        else:
            ev = lambda t: complex(1.0, 0.0)  # noqa: E731
    elif spec.startswith("stable:"):
        kv = _parse_kv(spec.split(":", 1)[1])
        p = int(kv["p"])
        g = RadialCharFn.stable(
            StableParams(float(kv["a"]), float(kv["alpha"]), p)
        )
        ev = lambda t: complex(g(t))  # noqa: E731
    elif spec.startswith("measure:"):
        measure = measure_from_spec(_load_json(spec.split(":", 1)[1]))
        p = measure.prime
        ev = CfEvaluator(measure)
    else:
        raise SpecValidationError(f"unknown cf spec {spec!r}")
    form = classify_two_valued(
        ev, p, search_radius_exp=args.radius, probe_depth=args.depth
    )
    if form.kind == "delta":
        print(f"delta xi={form.xi.as_rational()}")
    elif form.kind == "haar_cutoff":
        print(f"haar_cutoff xi={form.xi.as_rational()} N={form.cutoff_exp}")
    else:
        print("not_two_valued")
    return EXIT_OK


def cmd_limit_verify(args) -> int:
    if args.preset:
        if args.preset not in PRESETS:
            raise SpecValidationError(
                f"unknown preset {args.preset!r}; choose from {sorted(PRESETS)}"
            )
        scenario = PRESETS[args.preset]()
        config = {"preset": args.preset}
    else:
        if not args.config:
            raise SpecValidationError("pass --config FILE or --preset NAME")
        config = _load_json(args.config)
        scenario = scenario_from_spec(config)
    if args.seed is not None:
        scenario.seed = int(args.seed)
    report = convergence_report(scenario, workers=args.workers)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    base = scenario.name.replace(" ", "_")
    meta = _meta(scenario.seed, config)
    meta["effective"] = report.effective
    _write_csv(out_dir / f"{base}.csv", meta, report.csv_rows())
    _write_json(
        out_dir / f"{base}.json",
        {**report.json_summary(), "version": __version__},
    )
    verdict = "PASS" if report.passed else "FAIL"
    print(f"{verdict} {scenario.name}: verdicts={report.verdicts}")
    print(f"wrote {out_dir / (base + '.csv')} and {out_dir / (base + '.json')}")
    return EXIT_OK if report.passed else EXIT_TOLERANCE


def cmd_selftest(args) -> int:
    from .selftest import DEFAULT_SEED, run_selftest

    seed = args.seed if args.seed is not None else int(
        os.environ.get("PADICPROB_SEED", DEFAULT_SEED)
    )
    results, report = run_selftest(
        filter_substr=args.filter,
        seed=seed,
        negative_control=args.negative_control,
        workers=args.workers,
    )
    for r in results:
        print(r.line())
    if args.out:
        _write_json(Path(args.out), report)
        print(f"wrote {args.out}")
    return EXIT_OK if report["all_passed"] else EXIT_TOLERANCE


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="padicprob",
        description="exact p-adic probability experiments",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    cf = sub.add_parser("cf-eval", help="evaluate a characteristic function")
    cf.add_argument("--stable", help="a=..,alpha=..,p=..")
    cf.add_argument("--measure", help="measure spec JSON file")
    cf.add_argument("--t", action="append", help="point literal (repeatable)")
    cf.add_argument("--grid", help="k_lo:k_hi sphere-exponent range")
    cf.add_argument("--out", help="CSV output path")
    cf.set_defaults(fn=cmd_cf_eval)

    sp = sub.add_parser("sample", help="draw from a sampler spec")
    sp.add_argument("--sampler", required=True, help="JSON file or inline JSON")
    sp.add_argument("--count", type=int, required=True)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_sample)

    le = sub.add_parser("levy-exponent", help="evaluate the jump exponent")
    le.add_argument("--measure", required=True)
    le.add_argument("--t", action="append")
    le.add_argument("--grid")
    le.add_argument("--out")
    le.set_defaults(fn=cmd_levy_exponent)

    li = sub.add_parser("levy-invert", help="recover a mass from the exponent")
    li.add_argument("--measure", required=True)
    li.add_argument("--set", required=True, help="annulus(<i>,<l>) or annulus(<i>,inf)")
    li.add_argument("--tol", type=float, default=1e-10)
    li.add_argument("--check", type=float, default=None,
                    help="exit 3 if the relative residual exceeds this")
    li.set_defaults(fn=cmd_levy_invert)

    cl = sub.add_parser("classify", help="two-valued classification of a transform")
    cl.add_argument("--cf", required=True,
                    help="omega0 | omega:<N> | delta:<rational> | "
                         "stable:a=..,alpha=..,p=.. | measure:<file>")
    cl.add_argument("--p", type=int)
    cl.add_argument("--radius", type=int, default=6)
    cl.add_argument("--depth", type=int, default=8)
    cl.set_defaults(fn=cmd_classify)

    lv = sub.add_parser("limit-verify", help="run a convergence scenario")
    lv.add_argument("--config", help="scenario JSON file")
    lv.add_argument("--preset", help="named preset scenario")
    lv.add_argument("--out", help="output directory")
    lv.add_argument("--seed", type=int)
    lv.add_argument("--workers", type=int, default=1)
    lv.set_defaults(fn=cmd_limit_verify)

    st = sub.add_parser("selftest", help="run the acceptance battery")
    st.add_argument("--filter", help="substring filter on criterion id or tags")
    st.add_argument("--seed", type=int)
    st.add_argument("--negative-control", action="store_true",
                    help="corrupt one tolerance to prove failures are detected")
    st.add_argument("--workers", type=int, default=1)
    st.add_argument("--out", help="JSON report path")
    st.set_defaults(fn=cmd_selftest)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (SpecValidationError, ValueError, KeyError, OSError,
            json.JSONDecodeError, PrecisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ToleranceError as exc:
        print(f"tolerance failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
