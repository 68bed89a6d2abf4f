"""Experiment runner: config in, manifest plus data files out.

Exit codes: 0 success, 2 invalid config or locked output directory,
3 completed with fit failures recorded in the manifest.  ``rerun``
re-executes a manifest's config echo and returns 1 on any checksum
mismatch.  A run writes every file under ``output_dir`` and finishes
with ``manifest.json``; the manifest's inventory lists the sha256 of
every other file so reruns can be compared byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from pathlib import Path

from .. import __version__
from .._parallel import ENV_VAR
from .config import ConfigError, load_config, validate_config
from .pipelines import PIPELINES

LOCK_NAME = ".spinprobe.lock"
MANIFEST_NAME = "manifest.json"


class RunError(RuntimeError):
    """Run could not start (lock contention, bad manifest)."""


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        while chunk := fh.read(1 << 16):
            h.update(chunk)
    return h.hexdigest()


def _inventory(out: Path) -> dict[str, str]:
    files = {}
    for p in sorted(out.rglob("*")):
        if p.is_file() and p.name not in (MANIFEST_NAME, LOCK_NAME):
            files[p.relative_to(out).as_posix()] = _sha256(p)
    return files


def _acquire_lock(out: Path) -> Path:
    lock = out / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RunError(f"output directory {out} is locked by another run "
                       f"(remove {lock} if stale)") from None
    with os.fdopen(fd, "w") as fh:
        fh.write(f"pid={os.getpid()}\n")
    return lock


def execute(cfg: dict, out: Path, *, workers: int | None = None) -> dict:
    """Run one validated config into ``out`` and write the manifest.

    Returns the manifest dict.  Worker-count precedence: the ``workers``
    argument, then ``cfg["workers"]``, then the environment, then 1.
    """
    out.mkdir(parents=True, exist_ok=True)
    lock = _acquire_lock(out)
    prev = os.environ.get(ENV_VAR)
    try:
        effective = workers if workers is not None else cfg.get("workers")
        if effective is not None:
            os.environ[ENV_VAR] = str(int(effective))
        t0 = time.perf_counter()
        report = PIPELINES[cfg["kind"]](cfg, out)
        manifest = {
            "toolkit_version": __version__,
            "kind": cfg["kind"],
            "seed": cfg["seed"],
            "config": cfg,
            "stages": report.stages,
            "fit_failures": report.fit_failures,
            "summary": report.summary,
            "wall_clock_s": round(time.perf_counter() - t0, 3),
            "inventory": _inventory(out),
        }
        with (out / MANIFEST_NAME).open("w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return manifest
    finally:
        lock.unlink(missing_ok=True)
        if prev is None:
            os.environ.pop(ENV_VAR, None)
        else:
            os.environ[ENV_VAR] = prev


def run(config_path, *, workers: int | None = None,
        output_dir=None) -> int:
    """Load, validate, and execute a YAML config.  Returns an exit code."""
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"error: {exc}")
        return 2
    out = Path(output_dir) if output_dir is not None else Path(cfg["output_dir"])
    try:
        manifest = execute(cfg, out, workers=workers)
    except RunError as exc:
        print(f"error: {exc}")
        return 2
    n_fail = len(manifest["fit_failures"])
    print(f"wrote {len(manifest['inventory'])} files to {out} "
          f"in {manifest['wall_clock_s']} s")
    if n_fail:
        for f in manifest["fit_failures"]:
            print(f"fit failure in stage {f['stage']}: {f['message']}")
        return 3
    return 0


def rerun(manifest_path, *, workers: int | None = None) -> int:
    """Re-execute a manifest's config echo and compare file checksums.

    Runs into a temporary directory, so the original outputs are never
    touched.  Returns 0 if every file matches, 1 otherwise.
    """
    manifest_path = Path(manifest_path)
    try:
        with manifest_path.open() as fh:
            manifest = json.load(fh)
        cfg = validate_config(manifest["config"])
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise RunError(f"cannot read manifest {manifest_path}: {exc}") from exc
    with tempfile.TemporaryDirectory(prefix="spinprobe_rerun_") as tmp:
        fresh = execute(cfg, Path(tmp), workers=workers)
    old, new = manifest["inventory"], fresh["inventory"]
    mismatched = sorted(set(old) ^ set(new))
    mismatched += sorted(k for k in set(old) & set(new) if old[k] != new[k])
    if mismatched:
        print(f"rerun MISMATCH ({len(mismatched)} files):")
        for name in mismatched:
            print(f"  {name}: {old.get(name, 'missing')} -> "
                  f"{new.get(name, 'missing')}")
        return 1
    print(f"rerun reproduced all {len(new)} files bit for bit")
    return 0
