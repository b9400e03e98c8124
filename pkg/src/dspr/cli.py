"""Operator CLI: scenario generation, risk dumps, dataset builds, training,
comparison, evaluation, and report rendering.

Configuration comes from a TOML file (path via --config or the DSPR_CONFIG
environment variable); any flag given on the command line overrides the file.
Every run writes a manifest with the resolved configuration hash and seeds so
identical manifests give bit-identical numeric artifacts.

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import shutil
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from . import __version__, report
from .dataset import (
    ClassThresholds,
    DEFAULT_WINDOW,
    LabeledDataset,
    load_dataset,
    save_dataset,
)
from .learning import (
    ExternalClassifier,
    LearningError,
    ReferenceClassifier,
    SelfTrainConfig,
    TrainConfig,
    evaluate,
    load_model,
    metrics_from_predictions,
    save_model,
)
from .pipeline import (
    StudyConfig,
    build_dataset,
    risk_rows,
    risk_rows_batch,
    simulate_panels,
)
from .risk import DsprParams, write_risk_dump
from .scene import SceneError, load_panel, load_scenario, save_panel, save_scenario
from .synthetic import aggregate_risk, default_profiles, default_suite
from .ttc import DEFAULT_CAP

CONFIG_ENV = "DSPR_CONFIG"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class ConfigError(ValueError):
    """Bad configuration file or flag combination."""


@dataclass
class PipelineConfig:
    """Resolved run configuration (file values with flag overrides applied)."""

    params: DsprParams = field(default_factory=DsprParams)
    thresholds: ClassThresholds = field(default_factory=ClassThresholds)
    window: int = DEFAULT_WINDOW
    split_ratio: float = 0.7
    smote_k: int = 5
    augment_test: bool = False
    epsilon: float = 0.9
    iterations: int = 5
    model: str = "dspr"
    ttc_cap: float = DEFAULT_CAP
    threads: int = 1
    train: TrainConfig = field(default_factory=TrainConfig)
    # seeds
    suite_seed: int = 7
    panel_seed: int = 100
    split_seed: int = 11
    smote_seed: int = 12
    train_seed: int = 0
    # synthetic suite
    clips: int = 40
    raters: int = 12
    noise_sd: float = 0.3
    lag: int = 2
    cutpoints: tuple[float, float, float] = (5.0, 20.0, 60.0)
    min_duration: float = 8.0
    max_duration: float = 12.0

    def study_config(self) -> StudyConfig:
        return StudyConfig(
            params=self.params, thresholds=self.thresholds, window=self.window,
            split_ratio=self.split_ratio, smote_k=self.smote_k,
            augment_train=True, augment_test=self.augment_test,
            selftrain=SelfTrainConfig(epsilon=self.epsilon,
                                      iterations=self.iterations,
                                      seed=self.train_seed),
            train=replace(self.train, seed=self.train_seed),
            split_seed=self.split_seed, smote_seed=self.smote_seed,
            ttc_cap=self.ttc_cap,
        )

    def to_dict(self) -> dict:
        d = {
            "window": self.window, "split_ratio": self.split_ratio,
            "smote_k": self.smote_k, "augment_test": self.augment_test,
            "epsilon": self.epsilon, "iterations": self.iterations,
            "model": self.model, "ttc_cap": self.ttc_cap,
            "threads": self.threads,
            "params": {k: (list(v) if isinstance(v, tuple) else v)
                       for k, v in vars(self.params).items()},
            "thresholds": {str(k): v for k, v in self.thresholds.p_true.items()},
            "train": vars(self.train),
            "seeds": {"suite": self.suite_seed, "panel": self.panel_seed,
                      "split": self.split_seed, "smote": self.smote_seed,
                      "train": self.train_seed},
            "suite": {"clips": self.clips, "raters": self.raters,
                      "noise_sd": self.noise_sd, "lag": self.lag,
                      "cutpoints": list(self.cutpoints),
                      "min_duration": self.min_duration,
                      "max_duration": self.max_duration},
        }
        return d


def load_config(path: str | None) -> PipelineConfig:
    cfg = PipelineConfig()
    if path is None:
        path = os.environ.get(CONFIG_ENV)
    if not path:
        return cfg
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid config {path}: {exc}") from exc
    return apply_config_dict(cfg, raw)


def apply_config_dict(cfg: PipelineConfig, raw: dict) -> PipelineConfig:
    try:
        if "dspr" in raw:
            cfg.params = replace(cfg.params, **{
                k: (tuple(v) if k == "mu" else v) for k, v in raw["dspr"].items()})
        if "labels" in raw:
            p_true = {int(k): float(v) for k, v in raw["labels"].get("p_true", {}).items()}
            if p_true:
                cfg.thresholds = ClassThresholds(p_true=p_true)
        pl = raw.get("pipeline", {})
        for key in ("window", "split_ratio", "smote_k", "augment_test",
                    "epsilon", "iterations", "model", "ttc_cap", "threads"):
            if key in pl:
                setattr(cfg, key, pl[key])
        if "train" in raw:
            cfg.train = replace(cfg.train, **raw["train"])
        seeds = raw.get("seeds", {})
        for key, attr in (("suite", "suite_seed"), ("panel", "panel_seed"),
                          ("split", "split_seed"), ("smote", "smote_seed"),
                          ("train", "train_seed")):
            if key in seeds:
                setattr(cfg, attr, int(seeds[key]))
        suite = raw.get("suite", {})
        for key in ("clips", "raters", "noise_sd", "lag",
                    "min_duration", "max_duration"):
            if key in suite:
                setattr(cfg, key, suite[key])
        if "cutpoints" in suite:
            cfg.cutpoints = tuple(float(v) for v in suite["cutpoints"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad configuration value: {exc}") from exc
    return cfg


def apply_flag_overrides(cfg: PipelineConfig, args: argparse.Namespace) -> PipelineConfig:
    mapping = {
        "model": "model", "epsilon": "epsilon", "iterations": "iterations",
        "threads": "threads", "window": "window", "split_ratio": "split_ratio",
        "clips": "clips", "raters": "raters", "noise_sd": "noise_sd",
        "lag": "lag", "ttc_cap": "ttc_cap",
    }
    for flag, attr in mapping.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, attr, value)
    if getattr(args, "seed", None) is not None:
        cfg.suite_seed = args.seed
    if getattr(args, "augment_test", False):
        cfg.augment_test = True
    if getattr(args, "no_clamp_spatial", False):
        cfg.params = replace(cfg.params, clamp_spatial=False)
    return cfg


# ---------------------------------------------------------------------------
# Output session: manifest plus removal of partial artifacts on failure
# ---------------------------------------------------------------------------

class RunOutputs:
    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.created: list[Path] = []

    def path(self, *parts) -> Path:
        p = self.out_dir.joinpath(*parts)
        p.parent.mkdir(parents=True, exist_ok=True)
        self.created.append(p)
        return p

    def directory(self, *parts) -> Path:
        p = self.out_dir.joinpath(*parts)
        p.mkdir(parents=True, exist_ok=True)
        self.created.append(p)
        return p

    def cleanup(self) -> None:
        for p in reversed(self.created):
            try:
                if p.is_dir():
                    shutil.rmtree(p, ignore_errors=True)
                elif p.exists():
                    p.unlink()
            except OSError:
                pass

    def write_manifest(self, command: str, cfg: PipelineConfig,
                       extra: dict | None = None) -> None:
        config = cfg.to_dict()
        blob = json.dumps(config, sort_keys=True).encode()
        manifest = {
            "command": command,
            "config": config,
            "config_sha256": hashlib.sha256(blob).hexdigest(),
            "versions": {"dspr": __version__, "numpy": np.__version__,
                         "python": sys.version.split()[0]},
        }
        if extra:
            manifest.update(extra)
        self.path("manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _load_scene_dir(scenes_dir) -> list:
    scenes_dir = Path(scenes_dir)
    if scenes_dir.is_file():
        return [load_scenario(scenes_dir)]
    files = sorted(scenes_dir.glob("*.jsonl"))
    if not files:
        raise SceneError(f"no scene files in {scenes_dir}")
    return [load_scenario(f) for f in files]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_gen(args, cfg: PipelineConfig, run: RunOutputs) -> int:
    scenarios = default_suite(cfg.suite_seed, n_clips=cfg.clips,
                              min_duration=cfg.min_duration,
                              max_duration=cfg.max_duration)
    scene_dir = run.directory("scenes")
    for s in scenarios:
        save_scenario(scene_dir / f"{s.id}.jsonl", s)
    risk_by_clip = risk_rows_batch(scenarios, cfg.params, threads=cfg.threads)
    profiles = default_profiles(cfg.raters, cfg.noise_sd, cfg.lag, cfg.cutpoints)
    panel = simulate_panels(scenarios, risk_by_clip, profiles,
                            seed=cfg.panel_seed)
    save_panel(run.path("panel.csv"), panel)
    run.write_manifest("gen", cfg, {
        "scenarios": [s.id for s in scenarios],
        "frames_per_clip": [len(s.frames) for s in scenarios],
    })
    print(f"gen: wrote {len(scenarios)} scenario files and 1 panel file "
          f"to {run.out_dir}")
    return EXIT_OK


def cmd_risk(args, cfg: PipelineConfig, run: RunOutputs) -> int:
    scenarios = _load_scene_dir(args.scenes)
    for scenario in scenarios:
        rows, breakdowns = risk_rows(scenario, cfg.params, model=cfg.model,
                                     ttc_cap=cfg.ttc_cap)
        if cfg.model == "ttc":
            breakdowns = _ttc_breakdowns(rows)
        write_risk_dump(run.path(f"{scenario.id}.csv"), scenario, breakdowns,
                        model=cfg.model)
    run.write_manifest("risk", cfg, {"scenarios": [s.id for s in scenarios]})
    print(f"risk: dumped {len(scenarios)} scenario(s) with model={cfg.model}")
    return EXIT_OK


def _ttc_breakdowns(rows: np.ndarray):
    # Shape the 1/TTC rows into the shared dump schema: risk carries the
    # capped 1/TTC value, triggered marks closing pairs.
    from .risk import RiskBreakdown
    out = []
    for row in rows:
        frame_rows = []
        for slot, value in enumerate(row):
            if value > 0:
                frame_rows.append(RiskBreakdown(
                    slot=slot, triggered=True, tier=None,
                    t_r=(1.0 / value if value > 0 else None),
                    alpha_t=1.0, alpha_ss=1.0, alpha_ws=1.0, s_theta=1.0,
                    energy=value, risk=value))
        out.append(frame_rows)
    return out


def _build_dataset_from_args(args, cfg: PipelineConfig,
                             with_labels: bool) -> LabeledDataset:
    scenarios = _load_scene_dir(args.scenes)
    study = cfg.study_config()
    risk_by_clip = risk_rows_batch(scenarios, cfg.params, model=cfg.model,
                                   ttc_cap=cfg.ttc_cap, threads=cfg.threads)
    if not with_labels:
        from .pipeline import build_windows
        windows = []
        for scenario, rows in zip(scenarios, risk_by_clip):
            windows.extend(build_windows(scenario, rows, None,
                                         study.thresholds, study.window))
        empty = np.array([], dtype=int)
        return LabeledDataset(windows=windows, train_true=empty,
                              train_unlabeled=empty, test_true=empty,
                              test_unlabeled=empty,
                              split_ratio=float("nan"), seed=-1)
    panel = load_panel(args.panel)
    return build_dataset(scenarios, risk_by_clip, panel, study,
                         threads=cfg.threads)


def cmd_features(args, cfg: PipelineConfig, run: RunOutputs) -> int:
    dataset = _build_dataset_from_args(args, cfg, with_labels=False)
    save_dataset(run.out_dir, dataset)
    run.created.extend([run.out_dir / "windows.bin", run.out_dir / "index.csv"])
    run.write_manifest("features", cfg, {"windows": len(dataset.windows)})
    print(f"features: {len(dataset.windows)} windows -> {run.out_dir}")
    return EXIT_OK


def cmd_labels(args, cfg: PipelineConfig, run: RunOutputs) -> int:
    dataset = _build_dataset_from_args(args, cfg, with_labels=True)
    save_dataset(run.out_dir, dataset)
    run.created.extend([run.out_dir / "windows.bin", run.out_dir / "index.csv"])
    counts = {name: int(idx.size) for name, idx in dataset.partitions().items()}
    run.write_manifest("labels", cfg, {"partitions": counts})
    print(f"labels: {len(dataset.windows)} windows, partitions {counts}")
    return EXIT_OK


def cmd_train(args, cfg: PipelineConfig, run: RunOutputs) -> int:
    dataset = load_dataset(args.dataset)
    classifier = ReferenceClassifier(replace(cfg.train, seed=cfg.train_seed))
    if args.labels == "raw":
        # Majority-vote raw labels from the stored index; the panel-level
        # (per-participant) baseline lives in the study pipeline.
        train_idx = np.concatenate([dataset.train_true, dataset.train_unlabeled])
        train_idx = np.array([i for i in train_idx
                              if dataset.windows[i].raw_label is not None],
                             dtype=int)
        test_idx = np.concatenate([dataset.test_true, dataset.test_unlabeled])
        test_idx = np.array([i for i in test_idx
                             if dataset.windows[i].raw_label is not None],
                            dtype=int)
        if train_idx.size == 0 or test_idx.size == 0:
            raise LearningError("dataset carries no raw labels")
        model = classifier.train(dataset, train_idx,
                                 dataset.raw_labels_of(train_idx), cfg.train_seed)
        probs = classifier.predict_proba(model, dataset, test_idx)
        metrics = metrics_from_predictions(dataset.raw_labels_of(test_idx), probs)
    else:
        model = classifier.train(dataset, dataset.train_true,
                                 dataset.labels_of(dataset.train_true),
                                 cfg.train_seed)
        metrics = evaluate(classifier, model, dataset, dataset.test_true)
    save_model(run.path("model.bin"), model)
    report.write_metrics_json(run.path("metrics.json"), {"supervised": metrics})
    run.write_manifest("train", cfg, {"labels": args.labels})
    print(f"train({args.labels}): accuracy {metrics.accuracy:.4f}")
    return EXIT_OK


def _make_classifier(args, cfg: PipelineConfig, dataset_dir, workdir):
    if getattr(args, "classifier_cmd", None):
        import shlex
        return ExternalClassifier(shlex.split(args.classifier_cmd),
                                  dataset_dir, workdir)
    return ReferenceClassifier(replace(cfg.train, seed=cfg.train_seed))


def cmd_selftrain(args, cfg: PipelineConfig, run: RunOutputs) -> int:
    from .learning import self_train

    dataset = load_dataset(args.dataset)
    workdir = (run.directory("requests") if getattr(args, "classifier_cmd", None)
               else run.out_dir / "requests")
    classifier = _make_classifier(args, cfg, args.dataset, workdir)
    self_cfg = SelfTrainConfig(epsilon=cfg.epsilon, iterations=cfg.iterations,
                               seed=cfg.train_seed)
    result = self_train(dataset, classifier, self_cfg)
    if isinstance(result.model, dict):
        (run.path("model.json")).write_text(json.dumps(result.model, indent=2))
    else:
        save_model(run.path("model.bin"), result.model)
    run.path("audit.json").write_text(json.dumps(result.audit, indent=2) + "\n")
    if result.metrics is not None:
        report.write_metrics_json(run.path("metrics.json"),
                                  {"selftrain": result.metrics})
    run.write_manifest("selftrain", cfg)
    acc = result.metrics.accuracy if result.metrics else float("nan")
    print(f"selftrain: adopted {result.audit['pseudo_adopted']} pseudo-labels, "
          f"test accuracy {acc:.4f}")
    return EXIT_OK


def cmd_compare(args, cfg: PipelineConfig, run: RunOutputs) -> int:
    from .pipeline import compare_models

    scenarios = _load_scene_dir(args.scenes)
    panel = load_panel(args.panel)
    results = compare_models(scenarios, panel, cfg.study_config(),
                             models=args.models.split(","), threads=cfg.threads)
    metrics = {name: res.metrics for name, res in results.items()}
    report.write_metrics_json(run.path("metrics.json"), metrics)
    for name, res in results.items():
        run.path(f"audit_{name}.json").write_text(
            json.dumps(res.selftrain.audit, indent=2) + "\n")
    run.write_manifest("compare", cfg, {"models": list(results)})
    for name, m in metrics.items():
        print(f"compare[{name}]: accuracy {m.accuracy:.4f} "
              f"macro_f1 {m.macro_f1:.4f}")
    return EXIT_OK


def cmd_eval(args, cfg: PipelineConfig, run: RunOutputs) -> int:
    dataset = load_dataset(args.dataset)
    model = load_model(args.model_file)
    classifier = ReferenceClassifier(cfg.train)
    indices = getattr(dataset, args.partition)
    metrics = evaluate(classifier, model, dataset, indices)
    report.write_metrics_json(run.path("metrics.json"),
                              {args.partition: metrics})
    run.write_manifest("eval", cfg, {"partition": args.partition})
    print(f"eval[{args.partition}]: accuracy {metrics.accuracy:.4f}")
    return EXIT_OK


def cmd_report(args, cfg: PipelineConfig, run: RunOutputs) -> int:
    wrote = []
    if args.scenes:
        scenarios = _load_scene_dir(args.scenes)
        series = {}
        for scenario in scenarios[:args.max_series]:
            rows, _ = risk_rows(scenario, cfg.params, model=cfg.model,
                                ttc_cap=cfg.ttc_cap)
            series[scenario.id] = (scenario.timestamps, aggregate_risk(rows))
        report.write_risk_timeseries(run.path("risk_timeseries.csv"),
                                     run.path("risk_timeseries.png"), series)
        wrote.append("risk_timeseries")
    if args.audit:
        audit = json.loads(Path(args.audit).read_text())
        report.write_adoption(run.path("adoption_counts.csv"),
                              run.path("adoption_counts.png"),
                              audit["iterations"])
        wrote.append("adoption_counts")
        if audit.get("test_metrics"):
            report.write_confusion(run.path("confusion_matrix.csv"),
                                   run.path("confusion_matrix.png"),
                                   np.array(audit["test_metrics"]["confusion"]))
            run.path("metrics.json").write_text(
                json.dumps(audit["test_metrics"], indent=2) + "\n")
            wrote.append("confusion_matrix")
    if args.metrics:
        payload = json.loads(Path(args.metrics).read_text())
        run.path("metrics.json").write_text(json.dumps(payload, indent=2) + "\n")
        first = next(iter(payload.values()))
        if isinstance(first, dict) and "confusion" in first:
            report.write_confusion(run.path("confusion_matrix.csv"),
                                   run.path("confusion_matrix.png"),
                                   np.array(first["confusion"]))
        wrote.append("metrics")
    if not wrote:
        raise ConfigError("report needs at least one of --scenes/--audit/--metrics")
    run.write_manifest("report", cfg, {"artifacts": wrote})
    print(f"report: wrote {', '.join(wrote)} to {run.out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dspr",
        description="Perceived-risk engine: synthetic scenarios, risk dumps, "
                    "windowed datasets, and semi-supervised training.")
    parser.add_argument("--config", help=f"TOML config path (default ${CONFIG_ENV})")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default):
        p.add_argument("--out", default=out_default, help="output directory")
        p.add_argument("--threads", type=int, help="worker cap for scenario batches")
        p.add_argument("--model", choices=["dspr", "ttc"], help="risk model")

    p = sub.add_parser("gen", help="generate the synthetic scenario suite + panel")
    common(p, "out/suite")
    p.add_argument("--suite", default="default", choices=["default"])
    p.add_argument("--seed", type=int, help="suite seed")
    p.add_argument("--clips", type=int)
    p.add_argument("--raters", type=int)
    p.add_argument("--noise-sd", dest="noise_sd", type=float)
    p.add_argument("--lag", type=int)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("risk", help="per-frame risk dump CSVs")
    common(p, "out/risk")
    p.add_argument("--scenes", required=True, help="scene file or directory")
    p.add_argument("--ttc-cap", dest="ttc_cap", type=float)
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("features", help="window tensor without labels")
    common(p, "out/dataset")
    p.add_argument("--scenes", required=True)
    p.add_argument("--window", type=int)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("labels", help="labeled + partitioned dataset directory")
    common(p, "out/dataset")
    p.add_argument("--scenes", required=True)
    p.add_argument("--panel", required=True)
    p.add_argument("--window", type=int)
    p.add_argument("--split-ratio", dest="split_ratio", type=float)
    p.add_argument("--augment-test", dest="augment_test", action="store_true")
    p.set_defaults(func=cmd_labels)

    p = sub.add_parser("train", help="supervised reference training")
    common(p, "out/train")
    p.add_argument("--dataset", required=True)
    p.add_argument("--labels", choices=["raw", "true"], default="raw")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("selftrain", help="semi-supervised training loop")
    common(p, "out/selftrain")
    p.add_argument("--dataset", required=True)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--iterations", type=int)
    p.add_argument("--classifier-cmd", dest="classifier_cmd",
                   help="external classifier command (file contract)")
    p.set_defaults(func=cmd_selftrain)

    p = sub.add_parser("compare", help="identical pipeline per risk model")
    common(p, "out/compare")
    p.add_argument("--scenes", required=True)
    p.add_argument("--panel", required=True)
    p.add_argument("--models", default="dspr,ttc")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--iterations", type=int)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("eval", help="score a stored model on a dataset partition")
    common(p, "out/eval")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model-file", dest="model_file", required=True)
    p.add_argument("--partition", default="test_true",
                   choices=["train_true", "train_unlabeled",
                            "test_true", "test_unlabeled"])
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="metrics JSON, plot CSVs, and figures")
    common(p, "out/report")
    p.add_argument("--scenes", help="scene dir for the risk time-series chart")
    p.add_argument("--audit", help="selftrain audit.json for adoption chart")
    p.add_argument("--metrics", help="metrics.json to summarize")
    p.add_argument("--max-series", dest="max_series", type=int, default=10)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    run: RunOutputs | None = None
    try:
        cfg = load_config(args.config)
        cfg = apply_flag_overrides(cfg, args)
        run = RunOutputs(args.out)
        return args.func(args, cfg, run)
    except ConfigError as exc:
        if run:
            run.cleanup()
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SceneError, FileNotFoundError) as exc:
        if run:
            run.cleanup()
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except LearningError as exc:
        if run:
            run.cleanup()
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        if run:
            run.cleanup()
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
