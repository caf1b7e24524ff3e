"""Reproducible run manifests: inputs hashed, effective config echoed."""

import hashlib
import json
import os
import time

__all__ = ["sha256_file", "write_manifest", "load_manifest"]

LIBRARY_VERSION = "0.1.0"


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, command, config, seed, inputs, artifacts, started):
    """Write manifest.json atomically into the output directory.

    ``inputs`` maps labels to paths (hashed byte for byte); ``artifacts``
    lists paths relative to the output directory.
    """
    doc = {
        "command": command,
        "config": config,
        "seed": seed,
        "inputs": {
            label: {"path": str(path), "sha256": sha256_file(path)}
            for label, path in inputs.items()
        },
        "artifacts": sorted(str(a) for a in artifacts),
        "wall_clock_seconds": round(time.monotonic() - started, 3),
        "library_version": LIBRARY_VERSION,
    }
    target = os.path.join(out_dir, "manifest.json")
    tmp = target + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, target)
    return target


def load_manifest(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def verify_manifest(manifest):
    """Re-hash every recorded input; returns a {label: ok} map."""
    out = {}
    for label, rec in manifest.get("inputs", {}).items():
        try:
            out[label] = sha256_file(rec["path"]) == rec["sha256"]
        except OSError:
            out[label] = False
    return out
