"""Command-line entry point.

Exit codes: 0 success, 1 usage or validation error, 2 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Optional, Sequence

from . import autotune, classifiers, plot
from .classifiers import serialize
from .datagen import Dataset, GenConfig, generate_dataset, label_rule, FeatureVector
from .evaluation import SplitConfig, benchmark, train_test_split
from .io import (
    CsvFormatError,
    RunConfig,
    algorithm_list,
    atomic_write,
    configs_for,
    dataset_to_csv,
    dump_json,
    load_run_config,
    parse_csv,
    parse_float_list,
    parse_int_list,
    read_text,
    sweep_to_csv,
    sweep_to_json,
)

log = logging.getLogger("hetbench")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _global_flags(default=None) -> argparse.ArgumentParser:
    # The subcommand copies use SUPPRESS so they do not overwrite values
    # given before the subcommand name.
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=default, help="run-config JSON file")
    p.add_argument("--out", default=default, help="output path")
    p.add_argument("--seed", type=int, default=default, help="dataset seed (also the random-search seed for optimize)")
    p.add_argument("--quiet", action="store_true", default=False if default is None else default,
                   help="suppress informational messages")
    return p


def _gen_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("dataset generation")
    g.add_argument("--n", type=int, help="number of rows (default 10000)")
    g.add_argument("--p-phi-one", type=float)
    g.add_argument("--p-betw-one", type=float)
    g.add_argument("--jitter-pixel-sd", type=float)
    g.add_argument("--jitter-grad-sd", type=float)
    g.add_argument("--p-flip", type=float)
    g.add_argument("--noiseless", action="store_true", help="zero all label noise")


def _split_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--test-size", type=float)
    p.add_argument("--random-state", type=int)
    p.add_argument("--stratified", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hetbench", description="Synthetic micropore dataset generator and classifier benchmark.", parents=[_global_flags()])
    common = _global_flags(argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", parents=[common], help="write a synthetic dataset CSV")
    _gen_flags(p)

    p = sub.add_parser("label", parents=[common], help="relabel a CSV with the rule labeler")
    p.add_argument("input")

    for name, help_text in (
        ("benchmark", "fit the classifiers on one split and report scores"),
        ("optimize", "tune one algorithm's hyperparameters"),
        ("sweep-split", "benchmark over several test sizes"),
        ("sweep-samples", "benchmark over several dataset sizes"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--data", help="dataset CSV (default: generate one)")
        _gen_flags(p)
        _split_flags(p)
        p.add_argument("--jobs", type=int, default=1, help="worker threads")
        if name == "optimize":
            p.add_argument("--algorithm", required=True, choices=classifiers.ALGORITHMS)
            p.add_argument("--budget", type=int)
            p.add_argument("--patience", type=int)
            p.add_argument("--strategy", choices=("grid", "random"), default="grid")
            p.add_argument("--search-seed", type=int)
            p.add_argument("--mode", choices=autotune.MODES, default="honest")
            p.add_argument("--objective", choices=autotune.OBJECTIVES, default="accuracy")
        else:
            p.add_argument("--algorithms", default=None, help="comma list or 'all' (default all)")
        if name == "benchmark":
            p.add_argument("--tune", choices=("none",) + autotune.MODES, default="none",
                           help="fill best accuracy by exhaustive tuning in this mode")
            p.add_argument("--markdown", help="Markdown table path (default: <out>.md)")
            p.add_argument("--save-models", metavar="DIR", help="write fitted default models as JSON")
        if name == "sweep-split":
            p.add_argument("--ratios", default="0.05,0.2,0.5")
        if name == "sweep-samples":
            p.add_argument("--sizes", default="200,2000,20000")

    p = sub.add_parser("plot", parents=[common], help="draw an SVG chart")
    p.add_argument("input", help="dataset CSV (scatter, histogram) or report JSON (bars)")
    p.add_argument("--kind", required=True)

    p = sub.add_parser("predict", parents=[common], help="label a CSV with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    return parser


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _run_config(args) -> RunConfig:
    return load_run_config(args.config) if args.config else RunConfig()


def _gen_config(args, rc: RunConfig) -> GenConfig:
    cfg = rc.gen or GenConfig()
    overrides = {
        "seed": args.seed,
        "n_samples": args.n,
        "p_phi_one": args.p_phi_one,
        "p_betw_one": args.p_betw_one,
        "jitter_pixel_sd": args.jitter_pixel_sd,
        "jitter_grad_sd": args.jitter_grad_sd,
        "p_flip": args.p_flip,
    }
    cfg = cfg.replace(**{k: v for k, v in overrides.items() if v is not None})
    return cfg.noiseless() if args.noiseless else cfg


def _split_config(args, rc: RunConfig) -> SplitConfig:
    base = rc.split or SplitConfig()
    return SplitConfig(
        base.test_size if args.test_size is None else args.test_size,
        base.random_state if args.random_state is None else args.random_state,
        base.stratified or args.stratified,
    )


def _load_dataset(path: str) -> Dataset:
    parsed = parse_csv(read_text(path))
    for w in parsed.warnings:
        log.warning("%s: %s", path, w)
    return parsed.to_dataset()


def _dataset(args, rc: RunConfig) -> Dataset:
    if args.data:
        return _load_dataset(args.data)
    return generate_dataset(_gen_config(args, rc))


def _configs(args, rc: RunConfig):
    if args.algorithms is None and rc.algorithms:
        return rc.algorithms
    return configs_for(algorithm_list(args.algorithms or "all"))


def _out(args, rc: RunConfig, key: str, default: Optional[str]) -> Optional[str]:
    return args.out or rc.outputs.get(key) or default


def _emit(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        atomic_write(path, text)
        log.info("wrote %s", path)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    rc = _run_config(args)
    cfg = _gen_config(args, rc)
    data = generate_dataset(cfg)
    out = _out(args, rc, "data", "dataset.csv")
    _emit(out, dataset_to_csv(data))
    if out != "-":
        _emit(out + ".json", dump_json(cfg.to_dict()))
    return 0


def cmd_label(args) -> int:
    parsed = parse_csv(read_text(args.input))
    for w in parsed.warnings:
        log.warning("%s: %s", args.input, w)
    labels = [int(label_rule(FeatureVector(*row))) for row in parsed.features]
    data = Dataset(parsed.features, labels, parsed.index)
    _emit(args.out or "-", dataset_to_csv(data))
    return 0


def cmd_benchmark(args) -> int:
    rc = _run_config(args)
    data = _dataset(args, rc)
    split = _split_config(args, rc)
    configs = _configs(args, rc)
    if args.tune == "none":
        report = benchmark(data, split, configs, n_jobs=args.jobs)
    else:
        report = autotune.tuned_benchmark(
            data, split, [c.name for c in configs], rc.search_space, mode=args.tune, n_jobs=args.jobs
        )
    out = _out(args, rc, "report", "report.json")
    _emit(out, report.to_json())
    md = args.markdown or rc.outputs.get("markdown") or (None if out == "-" else os.path.splitext(out)[0] + ".md")
    if md:
        _emit(md, report.to_markdown())
    if not args.quiet and out != "-":
        sys.stdout.write(report.to_markdown())
    if args.save_models:
        os.makedirs(args.save_models, exist_ok=True)
        train, _ = train_test_split(data, split)
        for config in configs:
            model = classifiers.fit(config, train)
            _emit(os.path.join(args.save_models, f"{config.name}.json"), serialize.dumps(model) + "\n")
    return 0


def cmd_optimize(args) -> int:
    rc = _run_config(args)
    data = _dataset(args, rc)
    split = _split_config(args, rc)
    space = rc.search_space.get(args.algorithm) or autotune.default_space(args.algorithm)
    size = len(space.grid())
    seed = args.search_seed if args.search_seed is not None else (args.seed or 0)
    result = autotune.optimize(
        args.algorithm, space, data, split,
        budget=args.budget or size,
        patience=args.patience or size,
        strategy=args.strategy,
        seed=seed,
        mode=args.mode,
        objective=args.objective,
        n_jobs=args.jobs,
    )
    _emit(_out(args, rc, "tune", "tune.json"), dump_json(result.to_dict()))
    return 0


def cmd_sweep_split(args) -> int:
    rc = _run_config(args)
    data = _dataset(args, rc)
    split = _split_config(args, rc)
    ratios = parse_float_list(args.ratios)
    for r in ratios:
        SplitConfig(r, split.random_state)
    rows = autotune.split_ratio_sweep(data, ratios, _configs(args, rc), split.random_state, n_jobs=args.jobs)
    out = _out(args, rc, "sweep", "sweep_split.csv")
    _emit(out, sweep_to_csv(rows, "test_size"))
    if out != "-":
        _emit(os.path.splitext(out)[0] + ".json", sweep_to_json(rows, "test_size"))
    return 0


def cmd_sweep_samples(args) -> int:
    rc = _run_config(args)
    gen = _gen_config(args, rc)
    split = _split_config(args, rc)
    rows = autotune.sample_size_sweep(gen, parse_int_list(args.sizes), split, _configs(args, rc), n_jobs=args.jobs)
    out = _out(args, rc, "sweep", "sweep_samples.csv")
    _emit(out, sweep_to_csv(rows, "n", with_train=False))
    if out != "-":
        _emit(os.path.splitext(out)[0] + ".json", sweep_to_json(rows, "n", with_train=False))
    return 0


def cmd_plot(args) -> int:
    if args.kind not in plot.KINDS:
        raise UsageError(f"unknown plot kind {args.kind!r}; expected one of {', '.join(plot.KINDS)}")
    if args.kind == "bars":
        source = plot.report_from_dict(json.loads(read_text(args.input)))
    else:
        source = _load_dataset(args.input)
    _emit(args.out or f"{args.kind}.svg", plot.render(args.kind, source))
    return 0


def cmd_predict(args) -> int:
    model = serialize.loads(read_text(args.model))
    parsed = parse_csv(read_text(args.data))
    data = Dataset(parsed.features, classifiers.predict_many(model, parsed.features), parsed.index)
    _emit(args.out or "-", dataset_to_csv(data))
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "label": cmd_label,
    "benchmark": cmd_benchmark,
    "optimize": cmd_optimize,
    "sweep-split": cmd_sweep_split,
    "sweep-samples": cmd_sweep_samples,
    "plot": cmd_plot,
    "predict": cmd_predict,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        return COMMANDS[args.command](args)
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return 2
    except (UsageError, CsvFormatError, ValueError, KeyError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
