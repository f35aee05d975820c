from __future__ import annotations

import csv
import io
import json
import os
import tempfile
import threading
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

from pydantic import BaseModel

from peptide_modeler.app.models.run import RunLogEntry
from peptide_modeler.app.services.sequences.io import format_number
from peptide_modeler.app.services.storage.base import ArtifactStore

RUN_LOG = "run_log.jsonl"


def jsonencoder(o: Any) -> Any:
    if isinstance(o, datetime):
        return o.isoformat()
    return str(o)


def jsonl_append(path: Path, obj: Dict[str, Any]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8") as f:
        f.write(json.dumps(obj, default=jsonencoder) + "\n")


def format_cell(value: Any) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, float)):
        return format_number(value)
    return str(value)


class FileArtifactStore(ArtifactStore):
    """Writes artifacts under one output directory; every file lands atomically."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.written: List[str] = []
        self._lock = threading.Lock()

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def write_text(self, name: str, text: str) -> Path:
        target = self.path(name)
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            os.replace(tmp, target)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        with self._lock:
            if name not in self.written:
                self.written.append(name)
        return target

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]], footer: Optional[str] = None) -> Path:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])
        if footer is not None:
            buf.write(f"# {footer}\n")
        return self.write_text(name, buf.getvalue())

    def write_document(self, name: str, document: BaseModel) -> Path:
        return self.write_text(name, document.model_dump_json(indent=2) + "\n")

    def log(self, record: RunLogEntry) -> None:
        with self._lock:
            jsonl_append(self.path(RUN_LOG), record.model_dump(mode="json"))
