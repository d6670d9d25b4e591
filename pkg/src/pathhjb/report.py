"""Run directories, provenance and the files every command writes.

A run lives in ``<out>/<config_hash[:12]>/``. CSV tables start with a
``# config_hash=..., seed=...`` line and use 17 significant digits; JSON
documents carry a ``provenance`` object. Timings only appear in
``runtime_ms`` fields and in ``manifest.json``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from icecream import ic
from rose import get_logger
from rose.pather import path_relative, run_dir

_LOG_REPORT = {
    "name": "report",
    "file": "pathhjb.log",
    "level": logging.INFO,
}

VERSION = "0.1.0"
HASH_PREFIX = 12


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def config_hash(config: dict, seed: int) -> str:
    payload = canonical_json({"config": config, "seed": int(seed)})
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RunContext:
    config_hash: str
    seed: int
    path: Path

    @property
    def provenance(self) -> dict:
        return {"config_hash": self.config_hash, "seed": self.seed, "version": VERSION}


def prepare_run(out, config: dict, seed: int) -> RunContext:
    """
    创建本次运行的输出目录

    :param out: 输出根目录
    :param config: 完整配置，参与哈希
    :param seed: 随机种子，参与哈希
    :return: 运行上下文，目录名为哈希前缀
    """
    digest = config_hash(config, seed)
    return RunContext(digest, int(seed), run_dir(out, digest, HASH_PREFIX))


def write_csv(ctx: RunContext, name: str, frame: pd.DataFrame) -> Path:
    path = ctx.path / name
    with open(path, "w", encoding="utf-8", newline="") as f:
        # 首行写入溯源信息
        f.write(f"# config_hash={ctx.config_hash}, seed={ctx.seed}\n")
        # 17 位有效数字，读回后与原值逐位相等
        frame.to_csv(f, index=False, float_format="%.17g", lineterminator="\n")
    return path


def write_json(ctx: RunContext, name: str, payload: dict) -> Path:
    path = ctx.path / name
    document = _jsonable({**payload, "provenance": ctx.provenance})
    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f, sort_keys=True, indent=2, ensure_ascii=False)
        f.write("\n")
    return path


def read_csv(path) -> pd.DataFrame:
    """A table written by ``write_csv``, provenance line skipped."""
    return pd.read_csv(path, comment="#")


@dataclass
class RunManifest:
    config_hash: str
    seed: int
    command: str
    version: str = VERSION
    timings: dict[str, float] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "seed": self.seed,
            "command": self.command,
            "version": self.version,
            "timings": self.timings,
            "outputs": self.outputs,
        }


def write_run(
    ctx: RunContext,
    command: str,
    tables: dict[str, pd.DataFrame] | None = None,
    documents: dict[str, dict] | None = None,
    timings: dict[str, float] | None = None,
) -> RunManifest:
    """Write tables and documents, then ``manifest.json`` listing them."""
    written = [write_csv(ctx, name, frame) for name, frame in (tables or {}).items()]
    written += [write_json(ctx, name, doc) for name, doc in (documents or {}).items()]
    manifest = RunManifest(
        ctx.config_hash,
        ctx.seed,
        command,
        timings=dict(timings or {}),
        outputs=[str(path_relative(ctx.path, p)) for p in written],
    )
    with open(ctx.path / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(_jsonable(manifest.to_json()), f, sort_keys=True, indent=2)
        f.write("\n")
    logger = get_logger(**_LOG_REPORT)
    logger.info(f"{command}: wrote {manifest.outputs} to {ctx.path}")
    ic(f"All done. Check {ctx.path} for {len(written)} outputs.")
    return manifest
