"""Experiment configuration files (INI) and report bundles.

A config has four sections::

    [dataset]     kind = spirals | blobs | csv | idx, generator/loader options, split
    [training]    network, optimizer, early stopping, evaluation
    [schedule]    sp, ep, alpha, cl_stages
    [experiment]  methods, seed, repeats (or explicit seeds), output_dir

The full key list with defaults is in the README. ``dump_config`` writes
every key, so a dumped config (and the manifest, which embeds one) parses
back to an equal :class:`ExperimentConfig`.
"""
from __future__ import annotations

import configparser
import csv
import io
import os
import platform
import shutil
import tempfile
import time
from dataclasses import dataclass, field, fields

import numpy as np

from . import __version__
from .datasets import gen_blobs, gen_two_spirals, load_csv, load_idx, split
from .exceptions import ConfigError
from .selection import load_scores_csv, losses_to_scores, save_scores_csv
from .trainer import METHODS, TrainConfig

OUTPUT_ENV = "CCL_OUTPUT_DIR"

_DATASET_DEFAULTS = {
    "spirals": dict(n=2000, noise=0.2, seed=0, turns=1.0),
    "blobs": dict(n=600, classes=3, noise=1.0, seed=0),
    "csv": dict(path=None, label_column="label"),
    "idx": dict(images=None, labels=None),
}
_SPLIT_DEFAULTS = dict(val_fraction=0.1, test_fraction=0.2, split_seed=0, stratified=True)

# TrainConfig fields and the section they live in
_TRAINING_KEYS = ("hidden", "batch_size", "lr", "beta1", "beta2", "eps", "epoch_multiplier",
                  "patience", "monitor", "max_epochs", "eval_interval", "class_balanced",
                  "score_seed_offset", "diagnostics")
_SCHEDULE_KEYS = ("sp", "ep", "alpha", "cl_stages")


@dataclass
class ExperimentConfig:
    dataset: dict
    train: TrainConfig
    output_dir: str = "ccl_output"
    seed: int = 0
    repeats: int = 5
    scores_file: str | None = None
    explicit_seeds: tuple | None = field(default=None)

    @property
    def seeds(self):
        return self.train.seeds

    def __eq__(self, other):
        if not isinstance(other, ExperimentConfig):
            return NotImplemented
        return dump_config(self) == dump_config(other)


def _as_bool(value, key):
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def _as_int_list(value, key):
    try:
        return tuple(int(x) for x in str(value).replace(" ", "").split(",") if x)
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated integers, got {value!r}") from None


def _convert(name, raw, default):
    try:
        if name == "hidden":
            return _as_int_list(raw, name)
        if name == "eval_interval":
            return None if str(raw).strip().lower() in ("", "none", "epoch") else int(raw)
        if isinstance(default, bool):
            return _as_bool(raw, name)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return str(raw).strip()
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r}") from None


def _train_defaults():
    return {f.name: f.default for f in fields(TrainConfig)}


def parse_config(text, base_dir="."):
    """Parse INI text into an :class:`ExperimentConfig`; raises :class:`ConfigError`."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    for sec in cp.sections():
        if sec not in ("dataset", "training", "schedule", "experiment", "run"):
            raise ConfigError(f"unknown section [{sec}]")
    ds = dict(cp["dataset"]) if cp.has_section("dataset") else {}
    kind = ds.pop("kind", "spirals")
    if kind not in _DATASET_DEFAULTS:
        raise ConfigError(f"dataset.kind must be one of {sorted(_DATASET_DEFAULTS)}, got {kind!r}")
    dataset = {"kind": kind}
    allowed = {**_DATASET_DEFAULTS[kind], **_SPLIT_DEFAULTS}
    if kind == "idx":
        allowed.update(test_images=None, test_labels=None)
    for key, raw in ds.items():
        if key not in allowed:
            raise ConfigError(f"dataset: unknown key {key!r} for kind {kind!r}")
    for key, default in allowed.items():
        if key in ds:
            dataset[key] = _convert(key, ds[key], default) if default is not None else ds[key].strip()
        else:
            dataset[key] = default
    for key in ("path", "images", "labels", "test_images", "test_labels"):
        if key in dataset and dataset[key] is not None:
            p = dataset[key]
            dataset[key] = p if os.path.isabs(p) else os.path.normpath(os.path.join(base_dir, p))
    if kind == "csv" and not dataset["path"]:
        raise ConfigError("dataset.path is required for csv datasets")
    if kind == "idx" and not (dataset["images"] and dataset["labels"]):
        raise ConfigError("dataset.images and dataset.labels are required for idx datasets")
    if kind == "idx" and bool(dataset["test_images"]) != bool(dataset["test_labels"]):
        raise ConfigError("dataset.test_images and dataset.test_labels go together")

    defaults = _train_defaults()
    kwargs = {}
    for section, keys in (("training", _TRAINING_KEYS), ("schedule", _SCHEDULE_KEYS)):
        sec = dict(cp[section]) if cp.has_section(section) else {}
        extra = set(sec) - set(keys) - ({"scores_file"} if section == "training" else set())
        if extra:
            raise ConfigError(f"{section}: unknown keys {sorted(extra)}")
        for key in keys:
            if key in sec:
                kwargs[key] = _convert(key, sec[key], defaults[key])
    scores_file = cp.get("training", "scores_file", fallback=None) or None
    if scores_file and not os.path.isabs(scores_file):
        scores_file = os.path.normpath(os.path.join(base_dir, scores_file))

    exp = dict(cp["experiment"]) if cp.has_section("experiment") else {}
    extra = set(exp) - {"methods", "seed", "repeats", "seeds", "output_dir"}
    if extra:
        raise ConfigError(f"experiment: unknown keys {sorted(extra)}")
    methods = tuple(m.strip() for m in exp.get("methods", "vanilla,ccl").split(",") if m.strip())
    if not methods:
        raise ConfigError("experiment.methods must not be empty")
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ConfigError(f"experiment.methods: unknown {bad}; choose from {list(METHODS)}")
    seed = _convert("seed", exp.get("seed", "0"), 0)
    repeats = _convert("repeats", exp.get("repeats", "5"), 0)
    explicit = _as_int_list(exp["seeds"], "seeds") if exp.get("seeds") else None
    seeds = explicit if explicit else tuple(seed + i for i in range(repeats))
    output_dir = exp.get("output_dir") or os.environ.get(OUTPUT_ENV, "ccl_output")

    try:
        train = TrainConfig(methods=methods, seeds=seeds, **kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return ExperimentConfig(dataset, train, output_dir, seed, repeats, scores_file, explicit)


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, base_dir=os.path.dirname(os.path.abspath(path)))


def _fmt_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def config_sections(cfg):
    t = cfg.train
    sections = {
        "dataset": {k: _fmt_value(v) for k, v in cfg.dataset.items()},
        "training": {k: _fmt_value(getattr(t, k)) for k in _TRAINING_KEYS},
        "schedule": {k: _fmt_value(getattr(t, k)) for k in _SCHEDULE_KEYS},
        "experiment": {
            "methods": _fmt_value(t.methods),
            "seed": str(cfg.seed),
            "repeats": str(cfg.repeats),
            "seeds": _fmt_value(cfg.explicit_seeds) if cfg.explicit_seeds else "",
            "output_dir": cfg.output_dir,
        },
    }
    if t.eval_interval is None:
        sections["training"]["eval_interval"] = "epoch"
    if cfg.scores_file:
        sections["training"]["scores_file"] = cfg.scores_file
    return sections


def dump_config(cfg, extra=None):
    cp = configparser.ConfigParser(interpolation=None)
    for name, values in config_sections(cfg).items():
        cp[name] = {k: v for k, v in values.items() if v != "" or name == "dataset"}
    for name, values in (extra or {}).items():
        cp[name] = values
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def validate_paths(cfg):
    """Raise :class:`ConfigError` naming the first referenced file that is missing."""
    for key in ("path", "images", "labels", "test_images", "test_labels"):
        p = cfg.dataset.get(key)
        if p and not os.path.exists(p):
            raise ConfigError(f"dataset file not found: {p}")
    if cfg.scores_file and not os.path.exists(cfg.scores_file):
        raise ConfigError(f"scores file not found: {cfg.scores_file}")


def build_dataset(cfg):
    d = cfg.dataset
    kind = d["kind"]
    if kind == "spirals":
        ds = gen_two_spirals(d["n"], d["noise"], d["seed"], d["turns"])
    elif kind == "blobs":
        ds = gen_blobs(d["n"], d["classes"], d["noise"], d["seed"])
    elif kind == "csv":
        label = d["label_column"]
        ds = load_csv(d["path"], int(label) if str(label).isdigit() else label)
    else:
        ds = load_idx(d["images"], d["labels"])
        if d.get("test_images"):
            # native test split kept; val carved out of train
            return _with_native_test(ds, load_idx(d["test_images"], d["test_labels"]), d)
    return split(ds, d["val_fraction"], d["test_fraction"], d["split_seed"], d["stratified"])


def _with_native_test(train_ds, test_ds, d):
    from .datasets import Dataset

    rng = np.random.default_rng(d["split_seed"])
    n = len(train_ds)
    n_val = int(np.floor(n * d["val_fraction"] + 0.5))
    tags = np.full(n, "train", dtype="<U5")
    tags[rng.permutation(n)[:n_val]] = "val"
    C = max(train_ds.n_classes, test_ds.n_classes)
    X = np.vstack([train_ds.X, test_ds.X])
    y = np.concatenate([train_ds.y, test_ds.y])
    split_tags = np.concatenate([tags, np.full(len(test_ds), "test", dtype="<U5")])
    return Dataset.from_arrays(X, y, C, split_tags)


def _write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def write_bundle(cfg, report, started, output_dir=None):
    """Write traces, comparison table, scores and manifest; all-or-nothing.

    Files are staged in a temporary directory next to the target and moved
    into place only after everything has been written.
    """
    out = os.path.abspath(output_dir or cfg.output_dir)
    parent = os.path.dirname(out)
    os.makedirs(parent, exist_ok=True)
    stage = tempfile.mkdtemp(prefix=".ccl-stage-", dir=parent)
    written = []
    try:
        os.makedirs(os.path.join(stage, "runs"))
        for run in report.runs:
            rel = os.path.join("runs", f"{run.method}_{run.seed}.csv")
            rows = [["update", "accuracy"]] + [[u, "%.10g" % a] for u, a in run.trace]
            _write_csv(os.path.join(stage, rel), rows)
            written.append(rel)
        for seed, losses in report.losses.items():
            rel = os.path.join("runs", f"scores_{seed}.csv")
            save_scores_csv(os.path.join(stage, rel), losses_to_scores(losses))
            written.append(rel)
        _write_csv(os.path.join(stage, "comparison.csv"), report.table_rows())
        written.append("comparison.csv")
        run_info = {
            "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(started)),
            "wall_clock_seconds": "%.3f" % (time.time() - started),
            "seeds": ",".join(str(s) for s in cfg.seeds),
            "scoring_epochs": ",".join(f"{s}:{e}" for s, e in report.scoring_epochs.items()),
            "ccl_version": __version__,
            "numpy_version": np.__version__,
            "python_version": platform.python_version(),
            "files": ",".join(written),
        }
        with open(os.path.join(stage, "manifest.ini"), "w") as fh:
            fh.write(dump_config(cfg, extra={"run": run_info}))
        written.append("manifest.ini")

        os.makedirs(os.path.join(out, "runs"), exist_ok=True)
        for rel in written:
            os.replace(os.path.join(stage, rel), os.path.join(out, rel))
    finally:
        shutil.rmtree(stage, ignore_errors=True)
    return [os.path.join(out, rel) for rel in written]


def external_scores(cfg, n_train):
    if not cfg.scores_file:
        return None
    try:
        return load_scores_csv(cfg.scores_file, n=n_train)
    except ValueError as exc:
        raise ConfigError(f"{cfg.scores_file}: {exc}") from None
