"""Small file-writing helpers shared by the library and the CLI."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

__all__ = ["atomic_write_text", "canonical_json"]


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a temp file in the target directory plus rename, so readers
    never observe a half-written file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _CanonicalEncoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.integer):
            return int(o)
        return super().default(o)


def canonical_json(doc) -> str:
    """Sorted keys, two-space indent, trailing newline, floats via repr.

    The same document always serializes to the same bytes, which is what
    makes checkpoint and report files safely comparable across runs.
    """
    return json.dumps(doc, sort_keys=True, indent=2, cls=_CanonicalEncoder) + "\n"
