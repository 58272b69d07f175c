"""Run manifests and atomic artifact writes.

Every stage writes its outputs through a temp-file rename and records a
manifest of input/output content hashes plus the effective stage seed.
Manifests deliberately carry no timestamps so that re-running a stage with
unchanged inputs produces byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def canonical_json(payload) -> str:
    return json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n"


def atomic_write_bytes(path: str | Path, blob: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(blob)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def atomic_write_text(path: str | Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_json(path: str | Path, payload) -> None:
    atomic_write_text(path, canonical_json(payload))


def derive_seed(global_seed: int, stage: str) -> int:
    """Per-stage seed, stable across runs and independent of stage order."""
    digest = hashlib.sha256(f"{global_seed}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def write_manifest(
    out_dir: str | Path,
    stage: str,
    seed: int,
    inputs: dict[str, Path],
    outputs: dict[str, Path],
) -> Path:
    manifest = {
        "stage": stage,
        "seed": seed,
        "inputs": {name: sha256_file(path) for name, path in sorted(inputs.items())},
        "outputs": {name: sha256_file(path) for name, path in sorted(outputs.items())},
    }
    path = Path(out_dir) / "manifests" / f"{stage}.json"
    atomic_write_json(path, manifest)
    return path
