"""Command-line entry point.

Exit codes: 0 success, 2 config or model error, 3 enumeration budget
refusal, 4 bound-check failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from ..errors import BudgetExceeded, InvalidModelError
from ..hmm import Hmm, save_hmm, validate
from .config import ConfigError, ExperimentConfig, build_model
from .experiments import cmd_distinguish, cmd_sweep_samples, cmd_sweep_window, cmd_verify_bounds

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_BOUND = 0, 2, 3, 4
CSV_COLUMNS = ("model_id", "predictor", "seed", "ell", "T", "metric", "value", "stderr", "reference")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def rows_to_csv(rows) -> str:
    """Rows sorted by (model_id, ell, T, metric, predictor) as CSV text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in sorted(rows, key=lambda r: r.sort_key()):
        w.writerow([_fmt(float(v) if hasattr(v, "dtype") else v) for v in (
            r.model_id, r.predictor, r.seed, r.ell, r.T, r.metric, r.value, r.stderr, r.reference)])
    return buf.getvalue()


GNUPLOT = """\
# plot {metric} against ell for one predictor; columns follow the CSV header
set datafile separator ','
set xlabel 'ell'
set ylabel '{metric}'
set logscale y
plot '< grep ",{predictor},.*,{metric}," {csv}' using 4:7 with linespoints title '{predictor} {metric}', \\
     '' using 4:9 with lines dashtype 2 title 'bound'
"""


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_config(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("--config is required")
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.mode is not None:
        cfg.mode = args.mode
    if args.budget is not None:
        cfg.budget = args.budget
    if args.out is not None:
        cfg.out = args.out
    cfg.__post_init__()
    return cfg


def _run(args) -> int:
    if args.command == "validate-model":
        if not args.model:
            raise ConfigError("--model is required")
        try:
            doc = json.loads(Path(args.model).read_text())
            Hmm.from_dict(doc)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read model {args.model}: {exc}") from exc
        except InvalidModelError as exc:
            for p in exc.problems:
                print(f"invalid: {p}")
            return EXIT_CONFIG
        print("ok")
        return EXIT_OK

    cfg = _load_config(args)
    if args.command == "compile-model":
        doc = cfg.models[0] if args.model_id is None else next(
            (m for m in cfg.models if m.get("id") == args.model_id), None)
        if doc is None:
            raise ConfigError(f"no model with id {args.model_id!r}")
        entry = build_model(doc, cfg.seed, cfg.models.index(doc), cfg.base_dir, cfg.budget)
        res = validate(entry.hmm)
        if not res.ok:
            raise ConfigError("; ".join(res.problems))
        if cfg.out:
            save_hmm(entry.hmm, cfg.out)
        else:
            sys.stdout.write(json.dumps(entry.hmm.to_dict(), indent=1) + "\n")
        return EXIT_OK

    status = EXIT_OK
    if args.command == "sweep-window":
        rows = cmd_sweep_window(cfg)
    elif args.command == "sweep-samples":
        if cfg.mode != "mc":
            raise ConfigError("sweep-samples runs in mc mode")
        rows = cmd_sweep_samples(cfg)
    elif args.command == "verify-bounds":
        rows, checks = cmd_verify_bounds(cfg)
        for c in checks:
            print(
                f"{c.status:<12} {c.model_id} ell={c.ell} {c.formulation} "
                f"kl={c.kl:.6g} bound={c.kl_bound:.6g} margin={c.kl_margin:.3g} "
                f"l1={c.l1:.6g} bound={c.l1_bound:.6g} margin={c.l1_margin:.3g}",
                file=sys.stderr,
            )
        if any(c.status == "FAIL" for c in checks):
            status = EXIT_BOUND
    elif args.command == "distinguish":
        rows = cmd_distinguish(cfg)
    else:
        raise ConfigError(f"unknown command {args.command!r}")
    text = rows_to_csv(rows)
    _emit(text, cfg.out)
    if cfg.plot and cfg.out:
        Path(cfg.out + ".gp").write_text(GNUPLOT.format(metric="l1", predictor="window-optimal", csv=cfg.out))
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="markovwin", description="Window-length prediction experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("sweep-window", "losses of window predictors across ell"),
        ("sweep-samples", "n-gram losses across training lengths"),
        ("verify-bounds", "check window losses against I/ell"),
        ("distinguish", "planted-vs-uniform test accuracy"),
        ("compile-model", "write the HMM form of a config model"),
    ):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True)
        s.add_argument("--seed", type=int)
        s.add_argument("--out")
        s.add_argument("--mode", choices=("exact", "mc"))
        s.add_argument("--budget", type=int)
        if name == "compile-model":
            s.add_argument("--model-id")
    v = sub.add_parser("validate-model", help="check an HMM file")
    v.add_argument("--model", required=True)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except BudgetExceeded as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
