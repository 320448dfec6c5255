"""Command-line interface.

Subcommands: encode, train, evaluate, metrics, guide, synth, bench, report.
Stochastic commands require an explicit seed (from the config or --seed).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from xpop.eventlog import format_schema_config, parse_csv, parse_schema_config
from xpop.guidelines import QUESTION_ORDER, Questionnaire, interactive_guide, recommend
from xpop.harness import (
    BenchmarkConfig,
    load_config,
    load_log,
    prepare_matrices,
    render_report,
    run_benchmark,
    train_model,
)
from xpop.metrics import MetricsReport
from xpop.models import auc, export_model
from xpop.preprocess import aggregate_encode, extract_prefixes, fit_vocabulary
from xpop.synth import generate_log, synth_schema
from xpop.eventlog import serialize_csv


def _load_cfg(args) -> BenchmarkConfig:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = BenchmarkConfig(
            seed=args.seed, max_prefix=cfg.max_prefix, models=cfg.models,
            log_path=cfg.log_path, schema_path=cfg.schema_path, synth=cfg.synth,
            label_rule=cfg.label_rule, train_ratio=cfg.train_ratio,
            pi_repeats=cfg.pi_repeats, out_dir=cfg.out_dir, log_id=cfg.log_id,
        )
    if getattr(args, "out", None) is not None:
        cfg = BenchmarkConfig(
            seed=cfg.seed, max_prefix=cfg.max_prefix, models=cfg.models,
            log_path=cfg.log_path, schema_path=cfg.schema_path, synth=cfg.synth,
            label_rule=cfg.label_rule, train_ratio=cfg.train_ratio,
            pi_repeats=cfg.pi_repeats, out_dir=str(args.out), log_id=cfg.log_id,
        )
    return cfg


def cmd_synth(args) -> int:
    cfg = _load_cfg(args)
    if cfg.synth is None:
        print("config has no synth spec ([data] synth_rule / synth_cases)", file=sys.stderr)
        return 2
    log = generate_log(cfg.synth)
    out = Path(cfg.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / "log.csv").write_text(serialize_csv(log), encoding="utf-8")
    (out / "schema.cfg").write_text(
        format_schema_config(synth_schema(cfg.synth)), encoding="utf-8"
    )
    print(f"wrote {out / 'log.csv'} and {out / 'schema.cfg'}")
    return 0


def cmd_encode(args) -> int:
    schema = parse_schema_config(Path(args.schema).read_text(encoding="utf-8"))
    with open(args.log, "rb") as fh:
        log = parse_csv(fh, schema)
    vocab = fit_vocabulary(log)
    matrix = aggregate_encode(extract_prefixes(log, args.max_prefix), schema, vocab)
    text = matrix.export_csv(include_label=True)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out} ({matrix.n_rows} rows x {matrix.n_columns} columns)")
    else:
        sys.stdout.write(text)
    return 0


def cmd_train(args) -> int:
    cfg = _load_cfg(args)
    train_m, _ = prepare_matrices(cfg)
    out = Path(cfg.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    from xpop.seeds import derive_seed

    for idx, spec in enumerate(cfg.models):
        model = train_model(spec, train_m, derive_seed(cfg.seed, idx))
        path = out / f"{spec.name}.model.txt"
        path.write_text(export_model(model), encoding="utf-8")
        shown = "n/a" if model.training_auc is None else f"{model.training_auc:.6f}"
        print(f"{spec.name}: training AUC {shown}; exported to {path}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_cfg(args)
    train_m, test_m = prepare_matrices(cfg)
    from xpop.seeds import derive_seed

    for idx, spec in enumerate(cfg.models):
        try:
            model = train_model(spec, train_m, derive_seed(cfg.seed, idx))
            score = auc(test_m.labels, model.predict(test_m))
            print(f"{spec.name}: test AUC {score:.6f}")
        except Exception as exc:
            print(f"{spec.name}: error: {exc}")
    return 0


def cmd_metrics(args) -> int:
    cfg = _load_cfg(args)
    reports = run_benchmark(cfg)
    sys.stdout.write(render_report(reports, "table"))
    return 0


def cmd_bench(args) -> int:
    cfg = _load_cfg(args)
    reports = run_benchmark(cfg)
    csv_text = render_report(reports, "csv")
    if cfg.out_dir:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.csv").write_text(csv_text, encoding="utf-8")
        print(f"wrote {out / 'report.csv'}")
    sys.stdout.write(render_report(reports, "table"))
    return 0


def cmd_report(args) -> int:
    text = Path(args.input).read_text(encoding="utf-8")
    lines = [l for l in text.splitlines() if l]
    header = lines[0].split(",")
    rows = [l.split(",") for l in lines[1:]]
    widths = [
        max(len(header[i]), *(len(r[i]) for r in rows)) if rows else len(header[i])
        for i in range(len(header))
    ]
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip())
    print("  ".join("-" * w for w in widths))
    for r in rows:
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return 0


def cmd_guide(args) -> int:
    if args.answers:
        raw = [a.strip().lower() for a in args.answers.split(",")]
        if len(raw) != len(QUESTION_ORDER) or any(a not in ("y", "n") for a in raw):
            print(
                f"--answers needs {len(QUESTION_ORDER)} comma-separated y/n values",
                file=sys.stderr,
            )
            return 2
        q = Questionnaire(**{f: a == "y" for f, a in zip(QUESTION_ORDER, raw)})
        rec = recommend(q)
        print(f"Recommended model: {rec.model}")
        print(rec.rationale)
        return 0
    interactive_guide()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xpop", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", required=True, help="benchmark config file")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("synth", help="generate a synthetic log + schema pair")
    with_config(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("encode", help="encode a log into the matrix CSV")
    p.add_argument("--log", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--max-prefix", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("train", help="train configured models; dump parameters")
    with_config(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="train and report test AUC per model")
    with_config(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("metrics", help="full metric run, rendered as a table")
    with_config(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("bench", help="full benchmark; writes report.csv")
    with_config(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="render a report.csv as a table")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("guide", help="X-MOP model selection guide")
    p.add_argument(
        "--answers", default=None,
        help="batch mode: comma-separated y/n for all questions in order",
    )
    p.set_defaults(func=cmd_guide)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
