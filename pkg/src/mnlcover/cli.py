"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 size guard exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import re
import sys
from pathlib import Path

from . import io as jio
from .bench import SyntheticConfig, generate_synthetic, run_benchmark
from .calibrate import CalibrationConfig, calibrate, read_transactions
from .core import SizeGuardError, revenue
from .deterministic import (
    CardinalityParams,
    solve_daoc_approx,
    solve_daoc_cardinality,
    solve_daoc_exact,
    solve_daoc_tu,
)
from .framing import FramingInstance, solve_framing
from .multisegment import solve_mdaoc_general, solve_mdaoc_grid, solve_mraoc
from .randomized import customize_assortments, solve_raoc

MODES = [
    "daoc", "daoc-exact", "daoc-tu", "daoc-card", "raoc",
    "mdaoc-grid", "mdaoc-general", "mraoc", "customize", "framing",
]
EXIT_INVALID = 2
EXIT_GUARD = 3


def _ids(S) -> str:
    return " ".join(str(i + 1) for i in sorted(S))


def read_browse_probs(path) -> list[float]:
    text = Path(path).read_text().strip()
    if text.startswith("["):
        return [float(x) for x in json.loads(text)]
    return [float(x) for x in re.split(r"[\s,]+", text) if x]


def _solve(args) -> tuple[dict, list]:
    """Run one solve mode; returns the JSON payload and flat rows for csv/table output."""
    raw = jio.load_json(args.instance)
    mode = args.mode
    if mode in ("mdaoc-grid", "mdaoc-general", "mraoc"):
        ms = jio.multisegment_from_dict(raw)
        if mode == "mraoc":
            policies, value = solve_mraoc(ms)
            payload = {"policies": [jio.policy_to_dict(p, p.value(ms.segment(j))) for j, p in enumerate(policies)], "value": value}
            rows = [
                {"segment": j + 1, "assortment": _ids(S), "prob": p, "value": value}
                for j, pol in enumerate(policies) for S, p in pol.support
            ]
            return payload, rows
        a = solve_mdaoc_grid(ms, args.epsilon) if mode == "mdaoc-grid" else solve_mdaoc_general(ms)
        rows = [{"segment": j + 1, "assortment": _ids(S), "value": a.value} for j, S in enumerate(a.assortments)]
        return jio.assignment_to_dict(a), rows

    inst = jio.instance_from_dict(raw)
    if mode == "raoc":
        policy, value = solve_raoc(inst)
        rows = [{"assortment": _ids(S), "prob": p, "value": value} for S, p in policy.support]
        return jio.policy_to_dict(policy, value), rows
    if mode == "customize":
        if args.customers is None:
            raise ValueError("--customers is required for customize")
        out = customize_assortments(inst, args.customers)
        total = sum(revenue(inst, S) for S in out)
        rows = [{"customer": t + 1, "assortment": _ids(S), "revenue": revenue(inst, S)} for t, S in enumerate(out)]
        return {"assortments": [[i + 1 for i in sorted(S)] for S in out], "value": total}, rows
    if mode == "framing":
        G = args.positions if args.positions is not None else 3 * inst.n
        beta = read_browse_probs(args.browse_probs) if args.browse_probs else [1.0 / G] * G
        placement, value = solve_framing(FramingInstance(inst, G, beta))
        rows = [{"position": g + 1, "product": "" if i is None else i + 1} for g, i in enumerate(placement)]
        return jio.framing_to_dict(placement, value), rows

    if mode == "daoc":
        res = solve_daoc_approx(inst)
    elif mode == "daoc-exact":
        res = solve_daoc_exact(inst)
    elif mode == "daoc-tu":
        res = solve_daoc_tu(inst)
    else:
        if args.cap is None:
            raise ValueError("--cap is required for daoc-card")
        res = solve_daoc_cardinality(inst, CardinalityParams(args.cap, args.epsilon))
        if res is None:
            payload = {"assortment": None, "value": None, "method": "daoc-card",
                       "note": "every grid candidate exceeded the size limit; no certificate found"}
            return payload, [{"assortment": "", "value": "", "method": "daoc-card"}]
    return jio.result_to_dict(res), [{"assortment": _ids(res.assortment), "value": res.value, "method": res.method}]


def _render(payload, rows, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(payload, indent=2)
    if not rows:
        return ""
    cols = list(rows[0])
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue().rstrip("\n")
    cells = [[str(r[c]) for c in cols] for r in rows]
    width = [max(len(c), *(len(row[k]) for row in cells)) for k, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, width))]
    lines += ["  ".join(x.ljust(w) for x, w in zip(row, width)) for row in cells]
    return "\n".join(lines)


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_solve(args) -> None:
    payload, rows = _solve(args)
    _emit(_render(payload, rows, args.format), args.out)


def cmd_generate(args) -> None:
    inst = generate_synthetic(SyntheticConfig(args.n, args.K0, args.alpha_cat, args.beta, args.seed))
    _emit(jio.dump_json(jio.instance_to_dict(inst)), args.out)


def cmd_calibrate(args) -> None:
    df = read_transactions(args.transactions)
    config = CalibrationConfig(args.interval_days, args.alpha, args.min_brand_size)
    result = {}
    for ptype, (inst, ids) in calibrate(df, config, args.ell).items():
        d = jio.instance_to_dict(inst)
        d["products"] = ids
        result[str(ptype)] = d
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for ptype, d in result.items():
            name = re.sub(r"[^A-Za-z0-9_.-]+", "_", ptype)
            jio.dump_json(d, out / f"{name}.json")
        print(f"wrote {len(result)} instances to {out}")
    else:
        print(json.dumps(result, indent=2))


def cmd_bench(args) -> None:
    config = SyntheticConfig(args.n, args.K0, args.alpha_cat, args.beta, args.seed)
    report = run_benchmark(config, args.trials, exact_max_n=args.exact_max_n, randomized=not args.no_randomized)
    if args.format == "json":
        text = json.dumps({"rows": report.rows, "summary": report.summary()}, indent=2)
    elif args.format == "csv":
        text = report.to_csv().rstrip("\n")
    else:
        text = report.to_table()
    _emit(text, args.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mnlcover", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def synthetic_args(sp):
        sp.add_argument("--n", type=int, default=200)
        sp.add_argument("--K0", type=int, default=10)
        sp.add_argument("--alpha-cat", type=float, default=0.2)
        sp.add_argument("--beta", type=float, default=0.5)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out")

    g = sub.add_parser("generate", help="write a synthetic instance")
    synthetic_args(g)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve an instance file")
    s.add_argument("--mode", choices=MODES, required=True)
    s.add_argument("--instance", required=True)
    s.add_argument("--epsilon", type=float, default=0.1)
    s.add_argument("--cap", type=int)
    s.add_argument("--customers", type=int)
    s.add_argument("--positions", type=int)
    s.add_argument("--browse-probs")
    s.add_argument("--seed", type=int, default=0, help="accepted for symmetry; solvers are deterministic")
    s.add_argument("--format", choices=["json", "csv", "table"], default="json")
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("calibrate", help="fit instances from a purchase log CSV")
    c.add_argument("--transactions", required=True)
    c.add_argument("--alpha", type=float, default=0.1)
    c.add_argument("--interval-days", type=int, default=14)
    c.add_argument("--min-brand-size", type=int, default=10)
    c.add_argument("--ell", type=int, default=1)
    c.add_argument("--out", help="directory for one JSON file per product type")
    c.set_defaults(func=cmd_calibrate)

    b = sub.add_parser("bench", help="benchmark on synthetic instances")
    synthetic_args(b)
    b.add_argument("--trials", type=int, default=10)
    b.add_argument("--exact-max-n", type=int, default=20)
    b.add_argument("--no-randomized", action="store_true")
    b.add_argument("--format", choices=["json", "csv", "table"], default="table")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except SizeGuardError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_GUARD
    except (ValueError, KeyError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    return 0


if __name__ == "__main__":
    sys.exit(main())
