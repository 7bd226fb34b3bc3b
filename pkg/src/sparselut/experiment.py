"""Experiment orchestration: config files, run matrix, reports, heatmaps.

A config is a flat JSON object (see DEFAULT_CONFIG for the full key set).
One experiment runs a list of (mode, seed) pairs through the two training
steps, writes the mask and per-run artifacts, and assembles a deterministic
report: rerunning the same config byte-identically reproduces report.csv,
trajectory.csv, and every mask file. Wall-clock times go to a separate
timing.csv, which is the one file excluded from that guarantee.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from sparselut.datasets import Dataset, load_csv_dataset, load_mnist_idx, synth_centered_blobs
from sparselut.errors import FormatError
from sparselut.maskfile import _atomic_write_text, write_mask
from sparselut.network import (
    ModelConfig,
    TrainedModel,
    derive_mask_traced,
    evaluate,
    retrain_traced,
)
from sparselut.numerics import RngStream
from sparselut.rewiring import FeatureMask, init_random_mask
from sparselut.presets import PRESETS

__all__ = [
    "DEFAULT_CONFIG",
    "load_config",
    "build_model_config",
    "build_dataset",
    "run_experiment",
    "parse_mode_list",
    "ExperimentReport",
    "heatmap_export",
    "save_model",
    "load_model",
]

DEFAULT_CONFIG = {
    # dataset
    "dataset": "blobs",            # blobs | mnist | csv
    "blobs_side": 16,
    "blobs_classes": 2,
    "blobs_samples": 5000,
    "blobs_seed": 1,
    "blobs_sites": 6,
    "mnist_train_images": "data/mnist/train-images-idx3-ubyte",
    "mnist_train_labels": "data/mnist/train-labels-idx1-ubyte",
    "mnist_test_images": "data/mnist/t10k-images-idx3-ubyte",
    "mnist_test_labels": "data/mnist/t10k-labels-idx1-ubyte",
    "csv_path": "",
    "csv_test_path": "",
    "csv_features": 16,
    "csv_classes": 5,
    # architecture
    "widths": [64, 32, 2],
    "fanin": 6,
    "beta": 2,
    "degree": 1,
    "input_bits": 2,
    # training protocol
    "mode": "sparselut",
    "seed": 0,
    "epochs": 300,
    "phase1_epochs": None,         # default: 80% of epochs
    "retrain_epochs": None,        # default: epochs
    "batch_size": 128,
    "lr": 0.01,
    "retrain_lr": 0.01,
    "bias_lr": 0.01,
    "alpha": 1e-5,
    "eps1": 1e-12,
    "eps2": 5e-5,
    "noise_std": 1e-3,
    "weight_decay": 1e-4,
    "fanin_init": None,
    # outputs
    "compile_rtl": False,
}


def load_config(path) -> dict:
    """Read a flat JSON config, applying an optional named preset first."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})")
    if not isinstance(raw, dict):
        raise FormatError(f"{path}: config must be a JSON object")
    return merge_config(raw, source=str(path))


def merge_config(raw: dict, source: str = "<dict>") -> dict:
    cfg = dict(DEFAULT_CONFIG)
    preset = raw.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ValueError(
                f"{source}: unknown preset {preset!r}; "
                f"available: {', '.join(sorted(PRESETS))}")
        cfg.update(PRESETS[preset])
    unknown = set(raw) - set(DEFAULT_CONFIG) - {"preset"}
    if unknown:
        raise ValueError(f"{source}: unknown config keys {sorted(unknown)}")
    cfg.update({k: v for k, v in raw.items() if k != "preset"})
    return cfg


def _dataset_input_dim(cfg) -> int:
    if cfg["dataset"] == "blobs":
        return cfg["blobs_side"] ** 2
    if cfg["dataset"] == "csv":
        return cfg["csv_features"]
    return 784


def build_model_config(cfg: dict, mode: str | None = None,
                       seed: int | None = None) -> ModelConfig:
    """ModelConfig for one run; dense mode widens every fan-in to n_in."""
    mode = mode or cfg["mode"]
    n_inputs = _dataset_input_dim(cfg)
    fanin = cfg["fanin"]
    if mode == "dense":
        dims = [n_inputs] + list(cfg["widths"])
        fanin = dims[:-1]
    return ModelConfig.from_widths(
        n_inputs=n_inputs,
        widths=cfg["widths"],
        fanin=fanin,
        act_bits=cfg["beta"],
        degree=cfg["degree"],
        input_bits=cfg["input_bits"],
        mode=mode,
        seed=cfg["seed"] if seed is None else seed,
        epochs=cfg["epochs"],
        phase1_epochs=cfg["phase1_epochs"],
        retrain_epochs=cfg["retrain_epochs"],
        batch_size=cfg["batch_size"],
        eta=cfg["lr"],
        retrain_lr=cfg["retrain_lr"],
        bias_lr=cfg["bias_lr"],
        alpha=cfg["alpha"],
        eps1=cfg["eps1"],
        eps2=cfg["eps2"],
        noise_std=cfg["noise_std"],
        weight_decay=cfg["weight_decay"],
        fanin_init=cfg["fanin_init"],
    )


def build_dataset(cfg: dict) -> Dataset:
    kind = cfg["dataset"]
    if kind == "blobs":
        return synth_centered_blobs(
            cfg["blobs_samples"], cfg["blobs_side"], cfg["blobs_classes"],
            RngStream(cfg["blobs_seed"]), sites=cfg["blobs_sites"])
    if kind == "mnist":
        train = load_mnist_idx(cfg["mnist_train_images"], cfg["mnist_train_labels"])
        test = load_mnist_idx(cfg["mnist_test_images"], cfg["mnist_test_labels"])
        return Dataset.from_splits(train, test)
    if kind == "csv":
        return load_csv_dataset(
            cfg["csv_path"], cfg["csv_features"], cfg["csv_classes"],
            test_path=cfg["csv_test_path"] or None)
    raise ValueError(f"unknown dataset kind {kind!r}")


@dataclass
class RunResult:
    mode: str
    seed: int
    accuracy: float
    best_epoch: int
    mask_sha256: str
    mask_path: str
    trajectory: list
    accuracy_history: list
    wall_time: float
    model: TrainedModel | None = None


@dataclass
class ExperimentReport:
    """All rows of one experiment plus where the artifacts went."""

    runs: list = field(default_factory=list)
    outdir: str = ""

    def accuracies(self) -> dict:
        out = {}
        for r in self.runs:
            out.setdefault(r.mode, []).append(r.accuracy)
        return out

    def report_csv(self) -> str:
        lines = ["mode,seed,accuracy,best_epoch,mask_sha256"]
        lines += [
            f"{r.mode},{r.seed},{r.accuracy!r},{r.best_epoch},{r.mask_sha256}"
            for r in self.runs
        ]
        return "\n".join(lines) + "\n"

    def trajectory_csv(self) -> str:
        lines = ["mode,seed,epoch,density"]
        for r in self.runs:
            lines += [
                f"{r.mode},{r.seed},{e},{d!r}"
                for e, d in enumerate(r.trajectory)
            ]
        return "\n".join(lines) + "\n"

    def timing_csv(self) -> str:
        lines = ["mode,seed,seconds"]
        lines += [f"{r.mode},{r.seed},{r.wall_time:.3f}" for r in self.runs]
        return "\n".join(lines) + "\n"


def parse_mode_list(modes: str, default_seeds: int = 1) -> list:
    """'random*3,sparselut' -> [(mode, replicates), ...].

    Modes without an explicit multiplicity get default_seeds replicates.
    """
    out = []
    for item in modes.split(","):
        item = item.strip()
        if not item:
            continue
        if "*" in item:
            name, _, count = item.partition("*")
            if not count.isdigit() or int(count) < 1:
                raise ValueError(f"bad mode multiplicity {item!r}")
            out.append((name.strip(), int(count)))
        else:
            out.append((item, default_seeds))
    if not out:
        raise ValueError("empty mode list")
    return out


def _derive_for_mode(config: ModelConfig, dataset: Dataset):
    if config.mode == "dense":
        mask = FeatureMask([
            np.ones((s.n_in, s.n_out), dtype=np.uint8) for s in config.layers
        ])
        return mask, [1.0] * config.epochs
    return derive_mask_traced(config, dataset)


def run_single(cfg: dict, dataset: Dataset, mode: str, seed: int,
               outdir: str, keep_model: bool = False) -> RunResult:
    started = time.perf_counter()
    config = build_model_config(cfg, mode=mode, seed=seed)
    mask, trajectory = _derive_for_mode(config, dataset)
    mask_path = os.path.join(outdir, f"{mode}_s{seed}.mask")
    write_mask(mask, mask_path)
    with open(mask_path, "rb") as f:
        digest = hashlib.sha256(f.read()).hexdigest()
    model, history = retrain_traced(config, mask, dataset)
    save_model(model, os.path.join(outdir, f"{mode}_s{seed}.model.npz"))
    if cfg["compile_rtl"]:
        from sparselut.rtl import write_rtl
        from sparselut.tables import compile_model, write_tables
        netlist, tabs = compile_model(model)
        rtl_dir = os.path.join(outdir, f"{mode}_s{seed}_rtl")
        write_tables(tabs, rtl_dir)
        write_rtl(netlist, tabs, rtl_dir)
    return RunResult(
        mode=mode, seed=seed,
        accuracy=model.best_accuracy, best_epoch=model.best_epoch,
        mask_sha256=digest, mask_path=mask_path,
        trajectory=trajectory, accuracy_history=history,
        wall_time=time.perf_counter() - started,
        model=model if keep_model else None)


def run_experiment(cfg: dict, mode_list=None, outdir="runs",
                   max_workers: int = 1, keep_models: bool = False) -> ExperimentReport:
    """Run every (mode, seed) pair and write report + artifacts under outdir.

    Fails fast on config problems (model validation runs for all modes
    before any training starts). Replicate i of a mode uses seed cfg.seed+i.
    Runs are independent, so max_workers > 1 executes them in worker
    threads without changing any output byte.
    """
    if mode_list is None:
        mode_list = [(cfg["mode"], 1)]
    pairs = []
    for mode, count in mode_list:
        for i in range(count):
            pairs.append((mode, cfg["seed"] + i))
    for mode, seed in pairs:
        build_model_config(cfg, mode=mode, seed=seed)  # validate before work
    dataset = build_dataset(cfg)

    os.makedirs(outdir, exist_ok=True)
    results = {}
    if max_workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            futures = {
                pool.submit(run_single, cfg, dataset, mode, seed, outdir,
                            keep_models): (mode, seed)
                for mode, seed in pairs
            }
            for fut, key in futures.items():
                results[key] = fut.result()
    else:
        for mode, seed in pairs:
            results[(mode, seed)] = run_single(cfg, dataset, mode, seed,
                                               outdir, keep_models)

    report = ExperimentReport(runs=[results[p] for p in pairs], outdir=outdir)
    _atomic_write_text(os.path.join(outdir, "report.csv"), report.report_csv())
    _atomic_write_text(os.path.join(outdir, "trajectory.csv"), report.trajectory_csv())
    _atomic_write_text(os.path.join(outdir, "timing.csv"), report.timing_csv())
    return report


# ---------------------------------------------------------------------------
# heatmaps


def _grid_side(n: int, side) -> int:
    if side is not None:
        if side * side != n:
            raise ValueError(f"side {side} does not square to {n} inputs")
        return int(side)
    root = math.isqrt(n)
    if root * root != n:
        raise ValueError(
            f"{n} inputs is not a perfect square; pass the grid side explicitly")
    return root


def heatmap_export(model_or_mask, path, side=None) -> np.ndarray:
    """First-layer heatmap as a side x side CSV grid; returns the grid.

    A mask yields the connectivity variant (count of connections per input
    pixel); a trained model yields the mean absolute linear weight per input
    pixel (degree-2 terms are ignored: connectivity is what the linear slots
    carry).
    """
    if isinstance(model_or_mask, FeatureMask):
        m = model_or_mask.layers[0]
        values = m.astype(np.float64).sum(axis=1)
    elif isinstance(model_or_mask, TrainedModel):
        w = model_or_mask.weight_matrix(0, model_or_mask.n_inputs)
        values = np.abs(w).mean(axis=1)
    else:
        raise ValueError(
            f"expected FeatureMask or TrainedModel, got {type(model_or_mask).__name__}")
    n = values.shape[0]
    s = _grid_side(n, side)
    grid = values.reshape(s, s)
    if path is not None:
        text = "\n".join(",".join(repr(float(v)) for v in row) for row in grid)
        _atomic_write_text(path, text + "\n")
    return grid


# ---------------------------------------------------------------------------
# model serialization


def save_model(model: TrainedModel, path) -> None:
    arrays = {
        "meta": np.frombuffer(json.dumps({
            "input_bits": model.input_bits,
            "n_inputs": model.n_inputs,
            "n_layers": len(model.layers),
            "degrees": [l.degree for l in model.layers],
            "act_bits": [l.act_bits for l in model.layers],
            "best_epoch": model.best_epoch,
            "best_accuracy": model.best_accuracy,
        }).encode("utf-8"), dtype=np.uint8),
    }
    for i, layer in enumerate(model.layers):
        arrays[f"idx_{i}"] = layer.idx
        arrays[f"coeffs_{i}"] = layer.coeffs
        arrays[f"bias_{i}"] = layer.bias
    np.savez(path, **arrays)


def load_model(path) -> TrainedModel:
    from sparselut.network import PolyLayer

    with np.load(path) as data:
        try:
            meta = json.loads(bytes(data["meta"]).decode("utf-8"))
            layers = []
            for i in range(meta["n_layers"]):
                layers.append(PolyLayer(
                    data[f"idx_{i}"], data[f"coeffs_{i}"], data[f"bias_{i}"],
                    meta["degrees"][i], meta["act_bits"][i],
                    is_output=(i == meta["n_layers"] - 1)))
        except KeyError as exc:
            raise FormatError(f"{path}: missing model field {exc}")
    return TrainedModel(
        input_bits=meta["input_bits"], n_inputs=meta["n_inputs"], layers=layers,
        best_epoch=meta["best_epoch"], best_accuracy=meta["best_accuracy"])
