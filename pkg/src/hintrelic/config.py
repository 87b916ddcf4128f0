"""Flat key=value run configuration.

A config file holds ``section.key=value`` lines (``#`` comments and
blank lines ignored).  Values stay strings until a :class:`RunConfig`
is built.  Precedence is flag > config file > built-in default; the
``HINTRELIC_SEED`` environment variable fills the master seed when
neither a flag nor a file sets it.
"""

from __future__ import annotations

import os
from pathlib import Path

from .seeding import SEED_ENV_VAR as ENV_SEED
from .training import RunConfig

DEFAULTS: "dict[str, str]" = {
    "run.algorithm": "",
    "run.mode": "relic",
    "run.batch_size": "16",
    "run.train_steps": "2000",
    "run.train_sizes": "4..8",
    "run.eval_size": "16",
    "run.seeds": "0",
    "run.master_seed": "",
    "run.eval_interval": "500",
    "model.hidden_dim": "32",
    "model.triplet_dim": "8",
    "opt.learning_rate": "1e-3",
    "opt.grad_clip": "1.0",
    "objective.include_positive": "false",
    "data.dir": "data",
    "data.train_count": "1000",
    "data.val_count": "64",
    "data.test_count": "64",
    "out.dir": "runs",
}


def parse_config_text(text: str, source: str = "<config>") -> "dict[str, str]":
    """Parse key=value lines; unknown keys and malformed lines raise."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in DEFAULTS:
            raise ValueError(f"{source}:{lineno}: unknown config key {key!r}")
        values[key] = value.strip()
    return values


def load_config_file(path: "str | Path") -> "dict[str, str]":
    path = Path(path)
    return parse_config_text(path.read_text(), source=str(path))


def merge_config(*layers: "dict[str, str]") -> "dict[str, str]":
    """Later layers win; call as merge_config(DEFAULTS, file, flags)."""
    merged = dict(DEFAULTS)
    for layer in layers:
        for key, value in layer.items():
            if key not in DEFAULTS:
                raise ValueError(f"unknown config key {key!r}")
            if value is not None:
                merged[key] = value
    return merged


def parse_sizes(text: str) -> "tuple[int, ...]":
    """``4..8`` (inclusive range) or ``4,6,8`` (explicit list)."""
    text = text.strip()
    if ".." in text:
        lo, _, hi = text.partition("..")
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise ValueError(f"empty size range {text!r}")
        return tuple(range(lo, hi + 1))
    return tuple(int(part) for part in text.split(",") if part.strip())


def parse_seed_list(text: str) -> "tuple[int, ...]":
    return tuple(int(part) for part in str(text).split(",") if part.strip())


def parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def resolve_master_seed(merged: "dict[str, str]", environ=None) -> int:
    """Flag/file value if set, else the environment fallback, else 0."""
    value = merged.get("run.master_seed", "")
    if value != "":
        return int(value)
    environ = os.environ if environ is None else environ
    env = environ.get(ENV_SEED, "")
    return int(env) if env != "" else 0


def build_run_config(merged: "dict[str, str]", environ=None) -> RunConfig:
    if not merged["run.algorithm"]:
        raise ValueError("run.algorithm must be set (flag or config file)")
    return RunConfig(
        algorithm=merged["run.algorithm"],
        ablation_mode=merged["run.mode"],
        batch_size=int(merged["run.batch_size"]),
        train_steps=int(merged["run.train_steps"]),
        train_sizes=parse_sizes(merged["run.train_sizes"]),
        eval_size=int(merged["run.eval_size"]),
        seeds=parse_seed_list(merged["run.seeds"]),
        learning_rate=float(merged["opt.learning_rate"]),
        grad_clip=float(merged["opt.grad_clip"]),
        hidden_dim=int(merged["model.hidden_dim"]),
        triplet_dim=int(merged["model.triplet_dim"]),
        master_seed=resolve_master_seed(merged, environ),
        eval_interval=int(merged["run.eval_interval"]),
        train_count=int(merged["data.train_count"]),
        val_count=int(merged["data.val_count"]),
        test_count=int(merged["data.test_count"]),
        include_positive=parse_bool(merged["objective.include_positive"]),
    )
