"""CSV output and run manifests.

CSV files: optional ``# manifest-sha256: <hex>`` comment line, a header row,
then one record per line; floats use 17 significant digits (``%.17g``) so
they round-trip exactly; LF line endings.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from spinwire.errors import ManifestError

MANIFEST_VERSION = 1
HASH_PREFIX = "# manifest-sha256: "


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        return "nan" if math.isnan(x) else format(x, ".17g")
    return str(v)


def render_csv(header, rows, manifest_hash: str | None = None) -> str:
    buf = io.StringIO()
    if manifest_hash:
        buf.write(f"{HASH_PREFIX}{manifest_hash}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(format_value(v) for v in row) + "\n")
    return buf.getvalue()


def write_text(path, text: str) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def read_csv(path) -> tuple[list[str], list[list[str]], str | None]:
    """Header, data rows (as strings) and the embedded manifest hash, if any."""
    lines = Path(path).read_text().splitlines()
    digest = None
    body = []
    for line in lines:
        if line.startswith(HASH_PREFIX):
            digest = line[len(HASH_PREFIX):].strip()
        elif line.startswith("#") or not line.strip():
            continue
        else:
            body.append(line)
    if not body:
        raise ValueError(f"{path}: no header row")
    return body[0].split(","), [line.split(",") for line in body[1:]], digest


@dataclass
class RunConfig:
    """Everything needed to rerun one CLI invocation; ``seed`` is mandatory."""

    command: str
    seed: int
    params: dict = field(default_factory=dict)

    def canonical(self) -> str:
        doc = {"version": MANIFEST_VERSION, "command": self.command, "seed": self.seed, "params": self.params}
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def to_text(self) -> str:
        doc = json.loads(self.canonical())
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"manifest parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
        if not isinstance(doc, dict):
            raise ManifestError("manifest must be a JSON object")
        for key in ("command", "seed", "params"):
            if key not in doc:
                raise ManifestError(f"manifest missing field '{key}'")
        seed = doc["seed"]
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ManifestError(f"manifest field 'seed' must be a non-negative integer, got {seed!r}")
        if not isinstance(doc["params"], dict):
            raise ManifestError("manifest field 'params' must be an object")
        if doc.get("version", MANIFEST_VERSION) != MANIFEST_VERSION:
            raise ManifestError(f"unsupported manifest version {doc.get('version')!r}")
        return cls(str(doc["command"]), seed, doc["params"])

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_text(Path(path).read_text())
