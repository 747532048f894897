"""Command-line entry point: `synth`, `run`, and `compare` subcommands.

Configuration comes from YAML files with strict key checking (unknown keys
are an error, named in the diagnostic). Scalar config values can be
overridden by flags. Exit codes: 0 success, 1 usage or configuration error,
2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import yaml

from .comparison import ScoreTable, friedman_test, nemenyi
from .elimination import RfeConfig, RfeRule
from .errors import ConfigError, DataError
from .evaluation import derive_seed, results_grid
from .features import FeatureKey, IntegrationApproach, TREND_TRANSFORMS, build_matrix
from .ingest import CohortConfig, ControlIndexPolicy, FileFormat, build_cohort, parse_events
from .models import ClassifierKind, ClassifierSpec, gini_importances, train
from .synth import Effect, PlantedEffect, SynthConfig, generate

ENV_THREADS = "ADEPRED_THREADS"


class _Parser(argparse.ArgumentParser):
    """argparse reports usage problems via error(); route them to exit code 1."""

    def error(self, message):
        raise ConfigError(message)


def _load_yaml(path: Path) -> dict:
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return doc


def _take(section: str, mapping, required: tuple[str, ...], optional: tuple[str, ...]) -> dict:
    if not isinstance(mapping, dict):
        raise ConfigError(f"{section} must be a mapping")
    unknown = sorted(set(mapping) - set(required) - set(optional))
    if unknown:
        raise ConfigError(f"{section}: unknown key(s) {', '.join(unknown)}")
    missing = sorted(set(required) - set(mapping))
    if missing:
        raise ConfigError(f"{section}: missing required key(s) {', '.join(missing)}")
    return dict(mapping)


def _enum_value(section: str, key: str, enum_cls, raw):
    try:
        return enum_cls(raw)
    except ValueError:
        choices = ", ".join(e.value for e in enum_cls)
        raise ConfigError(
            f"{section}: {key} must be one of {choices}, got {raw!r}"
        ) from None


def _parse_synth_config(doc: dict) -> SynthConfig:
    fields = _take(
        "synth config",
        doc,
        required=(
            "n_patients",
            "positive_fraction",
            "n_lab_codes",
            "n_drug_codes",
            "n_diag_codes",
            "events_per_patient",
            "window_length_days",
            "informative",
            "seed",
        ),
        optional=("target_code", "background", "lab_noise_sd", "in_window_fraction"),
    )
    raw_informative = fields.pop("informative")
    if not isinstance(raw_informative, list):
        raise ConfigError("synth config: informative must be a list")
    informative = []
    for i, entry in enumerate(raw_informative):
        spec = _take(
            f"informative[{i}]",
            entry,
            required=("feature", "effect", "magnitude"),
            optional=(),
        )
        informative.append(
            PlantedEffect(
                key=FeatureKey.parse(str(spec["feature"])),
                effect=_enum_value(f"informative[{i}]", "effect", Effect, spec["effect"]),
                magnitude=float(spec["magnitude"]),
            )
        )
    return SynthConfig(informative=tuple(informative), **fields)


def _parse_cohort_config(doc) -> CohortConfig:
    fields = _take(
        "cohort",
        doc,
        required=("target_code", "window_length_days"),
        optional=(
            "control_index_policy",
            "include_index_day",
            "min_events_in_window",
            "seed",
        ),
    )
    if "control_index_policy" in fields:
        fields["control_index_policy"] = _enum_value(
            "cohort",
            "control_index_policy",
            ControlIndexPolicy,
            fields["control_index_policy"],
        )
    return CohortConfig(**fields)


def _parse_classifiers(doc) -> dict[str, ClassifierSpec]:
    if not isinstance(doc, list) or not doc:
        raise ConfigError("classifiers must be a non-empty list")
    specs: dict[str, ClassifierSpec] = {}
    for i, entry in enumerate(doc):
        fields = _take(
            f"classifiers[{i}]",
            entry,
            required=("kind",),
            optional=(
                "name",
                "n_trees",
                "max_depth",
                "min_samples_leaf",
                "features_per_split",
                "learning_rate",
                "l2_penalty",
                "class_weight",
            ),
        )
        kind = _enum_value(f"classifiers[{i}]", "kind", ClassifierKind, fields.pop("kind"))
        name = str(fields.pop("name", kind.value))
        if name in specs:
            raise ConfigError(f"classifiers[{i}]: duplicate name {name!r}")
        if any(c in name for c in ',"\n\r'):
            raise ConfigError(
                f"classifiers[{i}]: name {name!r} contains CSV metacharacters"
            )
        specs[name] = ClassifierSpec(kind=kind, **fields)
    return specs


def _parse_rfe_config(doc) -> RfeConfig:
    fields = _take(
        "rfe",
        doc,
        required=("k",),
        optional=("alpha", "beta", "step", "rule", "validation_fraction", "seed"),
    )
    if "rule" in fields:
        fields["rule"] = _enum_value("rfe", "rule", RfeRule, fields["rule"])
    if "beta" in fields:
        fields["beta"] = float(fields["beta"])
    return RfeConfig(**fields)


def load_synth_config(path) -> SynthConfig:
    """Parse and validate a synth config YAML file."""
    return _parse_synth_config(_load_yaml(Path(path)))


def _resolve_threads(flag_value, config_value) -> int:
    if flag_value is not None:
        return flag_value
    if config_value is not None:
        return int(config_value)
    env = os.environ.get(ENV_THREADS)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{ENV_THREADS} must be an integer, got {env!r}") from None
    return 1


def cmd_synth(args) -> int:
    config = load_synth_config(args.config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_bytes, manifest = generate(config)
    events_path = out_dir / "events.csv"
    manifest_path = out_dir / "manifest.json"
    events_path.write_bytes(csv_bytes)
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote {events_path}")
    print(f"wrote {manifest_path}")
    return 0


def cmd_run(args) -> int:
    config_path = Path(args.config)
    doc = _load_yaml(config_path)
    fields = _take(
        "run config",
        doc,
        required=(
            "events",
            "cohort",
            "approaches",
            "classifiers",
            "n_folds",
            "seed",
            "output_dir",
        ),
        optional=("format", "ade", "lab_transform", "rfe", "threads"),
    )

    base = config_path.parent
    events_path = Path(fields["events"])
    if not events_path.is_absolute():
        events_path = base / events_path
    if not events_path.exists():
        raise ConfigError(f"events file not found: {events_path}")

    fmt = _enum_value(
        "run config", "format", FileFormat, fields.get("format", "csv")
    )
    cohort_config = _parse_cohort_config(fields["cohort"])
    specs = _parse_classifiers(fields["classifiers"])

    raw_approaches = fields["approaches"]
    if not isinstance(raw_approaches, list) or not raw_approaches:
        raise ConfigError("run config: approaches must be a non-empty list")
    approaches = [
        _enum_value("run config", "approaches", IntegrationApproach, a)
        for a in raw_approaches
    ]
    if len(set(approaches)) != len(approaches):
        raise ConfigError("run config: duplicate approaches")

    rfe_config = _parse_rfe_config(fields["rfe"]) if "rfe" in fields else None
    if any(a.kbest for a in approaches) and rfe_config is None:
        raise ConfigError(
            "run config: approach LMD-kbest requires an rfe section"
        )

    lab_transform = str(fields.get("lab_transform", "slope"))
    if lab_transform not in TREND_TRANSFORMS:
        raise ConfigError(
            f"run config: lab_transform must be one of "
            f"{sorted(TREND_TRANSFORMS)}, got {lab_transform!r}"
        )

    n_folds = int(fields["n_folds"])
    seed = int(args.seed if args.seed is not None else fields["seed"])
    threads = _resolve_threads(args.threads, fields.get("threads"))
    out_dir = Path(args.output_dir if args.output_dir is not None else fields["output_dir"])
    if not out_dir.is_absolute():
        out_dir = base / out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    ade = str(fields.get("ade", cohort_config.target_code))

    parsed = parse_events(events_path.read_bytes(), fmt)
    for issue in parsed.issues:
        print(f"warning: {events_path.name} line {issue.line}: {issue.message}", file=sys.stderr)
    cohort = build_cohort(parsed.records, cohort_config)
    matrix = build_matrix(cohort, lab_transform)

    report, trace = results_grid(
        matrix,
        approaches,
        specs,
        n_folds=n_folds,
        seed=seed,
        ade=ade,
        rfe_config=rfe_config,
        threads=threads,
    )

    (out_dir / "folds.csv").write_text(report.to_fold_csv(), encoding="utf-8")
    (out_dir / "summary.csv").write_text(report.to_summary_csv(), encoding="utf-8")
    written = ["folds.csv", "summary.csv"]

    if trace is not None:
        (out_dir / "rfe_trace.csv").write_text(trace.to_csv(), encoding="utf-8")
        written.append("rfe_trace.csv")
    if report.kbest_features is not None:
        lines = ["feature"] + [k.name for k in report.kbest_features]
        (out_dir / "selected_features.csv").write_text(
            "\n".join(lines) + "\n", encoding="utf-8"
        )
        written.append("selected_features.csv")

    forest_spec = next((s for s in specs.values() if s.is_tree_based), None)
    if forest_spec is not None:
        final = train(
            forest_spec.with_seed(derive_seed(seed, "final-importances")), matrix
        )
        ranked = gini_importances(final).ranked()
        lines = ["feature,importance"]
        lines.extend(f"{key.name},{repr(value)}" for key, value in ranked)
        (out_dir / "importance.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append("importance.csv")

    for name in written:
        print(f"wrote {out_dir / name}")
    return 0


def cmd_compare(args) -> int:
    table_path = Path(args.table)
    if not table_path.exists():
        raise ConfigError(f"score table not found: {table_path}")
    table = ScoreTable.from_csv(table_path.read_text(encoding="utf-8"))
    friedman = friedman_test(table)
    posthoc = nemenyi(table, alpha=args.alpha)

    print(f"Friedman test over {table.n} datasets x {table.k} approaches")
    print(
        f"  chi-square = {friedman.chi_square:.5f} "
        f"(df {friedman.chi_square_df}), p = {friedman.chi_square_p:.4g}"
    )
    print(
        f"  Iman-Davenport F = {friedman.f_stat:.5f} "
        f"(df {friedman.f_df[0]}, {friedman.f_df[1]}), p = {friedman.f_p:.4g}"
    )
    ranked = sorted(zip(posthoc.approaches, posthoc.avg_ranks), key=lambda x: x[1])
    print("Average ranks: " + ", ".join(f"{a} {r:.2f}" for a, r in ranked))
    print(f"Nemenyi critical difference (alpha {args.alpha}) = {posthoc.cd:.4f}")
    flagged = [p for p in posthoc.pairs() if p[3]]
    if flagged:
        print("Significant pairs:")
        for a, b, diff, _ in flagged:
            print(f"  {a} vs {b} (rank diff {diff:.2f})")
    else:
        print("Significant pairs: none")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "friedman.csv").write_text(friedman.to_csv(), encoding="utf-8")
    (out_dir / "cd_diagram.csv").write_text(posthoc.to_cd_csv(), encoding="utf-8")
    (out_dir / "pairwise.csv").write_text(posthoc.to_pairs_csv(), encoding="utf-8")
    for name in ("friedman.csv", "cd_diagram.csv", "pairwise.csv"):
        print(f"wrote {out_dir / name}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="adepred",
        description=(
            "Adverse drug event prediction: synthesize cohorts, run the "
            "aggregate/eliminate/predict pipeline, compare approaches."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic event file")
    p_synth.add_argument("config", help="synth config YAML")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.set_defaults(func=cmd_synth)

    p_run = sub.add_parser("run", help="run the evaluation pipeline")
    p_run.add_argument("config", help="run config YAML")
    p_run.add_argument("--threads", type=int, default=None, help="worker processes")
    p_run.add_argument("--seed", type=int, default=None, help="override config seed")
    p_run.add_argument(
        "--output-dir", default=None, help="override config output_dir"
    )
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="Friedman/Nemenyi over a score table")
    p_cmp.add_argument("table", help="score table CSV")
    p_cmp.add_argument(
        "--alpha", type=float, default=0.05, help="significance level (0.05 or 0.10)"
    )
    p_cmp.add_argument("--out", default=".", help="report output directory")
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
