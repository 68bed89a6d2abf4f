"""Drive a shipped experiment config through the batch runner.

Same entry points the CLI uses: validate, execute into an output
directory, verify the manifest, and show that the worker count cannot
change a byte of output.
"""

import json
import tempfile
from pathlib import Path

from spinprobe.harness.config import load_config, validate_config
from spinprobe.harness.runner import execute

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "hahn.yaml"

cfg = validate_config(load_config(CONFIG))
print(f"config {CONFIG.name}: kind={cfg['kind']} seed={cfg['seed']}")
print(f"defaults filled in: readout={cfg['readout']}")

with tempfile.TemporaryDirectory() as tmp:
    out_a = Path(tmp) / "serial"
    out_b = Path(tmp) / "pooled"
    manifest = execute(cfg, out_a, workers=1)
    print(f"\nstages: {[s['name'] for s in manifest['stages']]}")
    print(f"summary: {json.dumps(manifest['summary'], sort_keys=True)[:120]}...")
    print("outputs:")
    for path, digest in sorted(manifest["inventory"].items()):
        print(f"  {path}  sha256:{digest[:12]}...")

    again = execute(cfg, out_b, workers=2)
    same = manifest["inventory"] == again["inventory"]
    print(f"\nworkers=1 vs workers=2 inventories identical: {same}")
