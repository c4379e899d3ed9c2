"""Session-scoped temp media: placement under the shared temp root and cleanup.

Every media object a session produces lives under <tmp>/alive/<session_id>/
and is tracked in the session's TempResourceRegistry; cleanup removes every
registered object plus the session directory, and is safe to repeat.
"""

from __future__ import annotations

import logging
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

logger = logging.getLogger(__name__)

TEMP_ROOT_NAME = "alive"


def default_temp_root() -> Path:
    return Path(tempfile.gettempdir()) / TEMP_ROOT_NAME


@dataclass
class TempResourceRegistry:
    """Per-session record of temp media objects that must be deleted."""

    session_id: str
    session_dir: Path | None = None
    paths: set[Path] = field(default_factory=set)

    def register(self, path: Path) -> None:
        self.paths.add(Path(path))


@dataclass
class CleanupReport:
    deleted: list[str] = field(default_factory=list)
    already_absent: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def _unlink_with_retry(path: Path, report: CleanupReport) -> None:
    for attempt in (1, 2):
        try:
            path.unlink()
            report.deleted.append(str(path))
            return
        except FileNotFoundError:
            report.already_absent.append(str(path))
            return
        except OSError as exc:
            if attempt == 2:
                message = f"{path}: {exc}"
                logger.warning("cleanup could not delete %s", message)
                report.warnings.append(message)


def cleanup_session(registry: TempResourceRegistry) -> CleanupReport:
    """Delete all registered objects and the session directory; idempotent.

    Already-absent entries are reported, not errors; an undeletable object is
    retried once and then surfaced as a warning without blocking the rest.
    """
    report = CleanupReport()
    for path in sorted(registry.paths):
        _unlink_with_retry(path, report)
    registry.paths.clear()
    if registry.session_dir is not None and registry.session_dir.exists():
        shutil.rmtree(
            registry.session_dir,
            onerror=lambda _fn, p, exc: report.warnings.append(f"{p}: {exc[1]}"),
        )
    return report


class MediaStore:
    """Writes segment media as <root>/<session_id>/seg_<seq>.mp4 and registers it."""

    def __init__(self, session_id: str, root: Path | None = None):
        self.session_id = session_id
        self.dir = (root or default_temp_root()) / session_id
        self.registry = TempResourceRegistry(session_id=session_id, session_dir=self.dir)

    def place(self, seq: int, payload: bytes) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        path = self.dir / f"seg_{seq}.mp4"
        path.write_bytes(payload)
        self.registry.register(path)
        return path
