"""Run manifests: the reproducibility envelope every command writes.

Manifests of two runs over identical inputs and configuration differ only
in run_id and timestamps; output files are recorded by out-dir-relative
name with content digests, and the config snapshot omits the output
directory itself.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path


def new_run_id() -> str:
    return uuid.uuid4().hex[:12]


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_jsonl(path: str | Path, records: list[dict]) -> None:
    atomic_write_text(
        path, "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    )


def atomic_write_json(path: str | Path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


@dataclass
class RunManifest:
    run_id: str
    command: str
    started: str
    config_snapshot: dict
    input_digests: dict[str, str] = field(default_factory=dict)
    versions: dict[str, str] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    notes: dict = field(default_factory=dict)
    finished: str = ""

    @classmethod
    def start(cls, command: str, config_snapshot: dict) -> "RunManifest":
        return cls(
            run_id=new_run_id(),
            command=command,
            started=utc_now(),
            config_snapshot=config_snapshot,
        )

    def add_input(self, path: str | Path) -> None:
        # Keyed by filename, not full path, so manifests of identical runs
        # in different out dirs stay comparable; the digest is the identity.
        self.input_digests[Path(path).name] = sha256_file(path)

    def add_output(self, out_dir: Path, name: str) -> None:
        self.outputs[name] = sha256_file(out_dir / name)

    def finish(self, out_dir: str | Path) -> Path:
        """Digest outputs are expected to be registered already; writes
        manifest.json into out_dir and returns its path."""
        self.finished = utc_now()
        out_dir = Path(out_dir)
        path = out_dir / "manifest.json"
        atomic_write_json(path, self.to_record())
        return path

    def to_record(self) -> dict:
        return {
            "run_id": self.run_id,
            "command": self.command,
            "started": self.started,
            "finished": self.finished,
            "config_snapshot": self.config_snapshot,
            "input_digests": self.input_digests,
            "versions": self.versions,
            "counts": self.counts,
            "outputs": self.outputs,
            "notes": self.notes,
        }
