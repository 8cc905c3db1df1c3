"""Run manifests: every file-producing command records its inputs, outputs,
seeds and content hashes so a rerun can be checked byte for byte."""
from __future__ import annotations

import datetime as dt
import hashlib
import json
import os


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True, default=str).encode()).hexdigest()[:16]


def write_manifest(
    run_dir: str,
    command: str,
    config: dict,
    inputs: list[str],
    outputs: list[str],
    seeds: dict | None = None,
) -> str:
    os.makedirs(run_dir, exist_ok=True)
    doc = {
        "command": command,
        "config_hash": config_hash(config),
        "config": config,
        "seeds": seeds or {},
        "inputs": {os.path.abspath(p): file_sha256(p) for p in inputs if os.path.exists(p)},
        "outputs": {os.path.abspath(p): file_sha256(p) for p in outputs},
        "timestamp": dt.datetime.now(dt.timezone.utc).isoformat(),
    }
    path = os.path.join(run_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=str)
    return path
