"""SRT subtitle parsing and greedy merging into retrieval-sized lecture segments."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyDocumentError, SrtParseError

logger = logging.getLogger(__name__)

DEFAULT_MAX_SPAN = 20.0

_ARROW = "-->"
_MARKUP_RE = re.compile(r"</?[A-Za-z][^>\n]*>")
_SLUG_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


@dataclass(frozen=True)
class SubtitleEntry:
    """One SRT cue: number, time range in seconds, whitespace-normalized text."""

    index: int
    start: float
    end: float
    text: str

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"cue index must be positive, got {self.index}")
        if self.start < 0:
            raise ValueError(f"cue start must be non-negative, got {self.start}")
        if self.end <= self.start:
            raise ValueError(f"cue end {self.end} must exceed start {self.start}")
        if not self.text.strip():
            raise ValueError("cue text must be non-empty")


@dataclass(frozen=True)
class LectureSegment:
    """Merged transcript unit: the atom of retrieval, with lecture-timeline bounds."""

    segment_id: str
    lecture_id: str
    start: float
    end: float
    text: str

    def __post_init__(self):
        if self.end <= self.start:
            raise ValueError(
                f"segment end {self.end} must exceed start {self.start} ({self.segment_id})"
            )


@dataclass(frozen=True)
class SegmentationConfig:
    """Merging parameters; max_span caps a segment's time span in seconds."""

    max_span: float = DEFAULT_MAX_SPAN

    def __post_init__(self):
        if self.max_span <= 0:
            raise ValueError(f"max_span must be positive, got {self.max_span}")


# SRT time grammar "HH:MM:SS,mmm" as (position, predicate, description) checks.
_TIME_SHAPE = (
    (0, str.isdigit, "digit"),
    (1, str.isdigit, "digit"),
    (2, lambda c: c == ":", "':'"),
    (3, str.isdigit, "digit"),
    (4, str.isdigit, "digit"),
    (5, lambda c: c == ":", "':'"),
    (6, str.isdigit, "digit"),
    (7, str.isdigit, "digit"),
    (8, lambda c: c in ",.", "',' or '.'"),
    (9, str.isdigit, "digit"),
    (10, str.isdigit, "digit"),
    (11, str.isdigit, "digit"),
)


def _byte_offset(raw: str, char_index: int) -> int:
    return len(raw[:char_index].encode("utf-8"))


def parse_timestamp(raw: str) -> float:
    """Parse an SRT time string "HH:MM:SS,mmm" into seconds.

    A period is accepted in place of the millisecond comma. Malformed input
    raises SrtParseError naming the byte offset of the first offending byte.
    """
    for pos, pred, want in _TIME_SHAPE:
        if pos >= len(raw):
            raise SrtParseError(
                f"malformed SRT time {raw!r}: expected {want} at byte offset "
                f"{_byte_offset(raw, len(raw))}, got end of string"
            )
        if not pred(raw[pos]):
            raise SrtParseError(
                f"malformed SRT time {raw!r}: expected {want} at byte offset "
                f"{_byte_offset(raw, pos)}"
            )
    if len(raw) > 12:
        raise SrtParseError(
            f"malformed SRT time {raw!r}: trailing content at byte offset "
            f"{_byte_offset(raw, 12)}"
        )
    minutes = int(raw[3:5])
    seconds = int(raw[6:8])
    if minutes > 59:
        raise SrtParseError(
            f"malformed SRT time {raw!r}: minutes out of range at byte offset "
            f"{_byte_offset(raw, 3)}"
        )
    if seconds > 59:
        raise SrtParseError(
            f"malformed SRT time {raw!r}: seconds out of range at byte offset "
            f"{_byte_offset(raw, 6)}"
        )
    hours = int(raw[0:2])
    millis = int(raw[9:12])
    return hours * 3600 + minutes * 60 + seconds + millis / 1000.0


def format_timestamp(seconds: float) -> str:
    """Format seconds as "HH:MM:SS,mmm", the inverse of parse_timestamp."""
    if seconds < 0:
        raise ValueError(f"cannot format negative time {seconds}")
    total_ms = round(seconds * 1000)
    ms = total_ms % 1000
    total_s = total_ms // 1000
    return f"{total_s // 3600:02d}:{(total_s % 3600) // 60:02d}:{total_s % 60:02d},{ms:03d}"


def _normalize_text(lines: list[str]) -> str:
    joined = " ".join(lines)
    stripped = _MARKUP_RE.sub("", joined)
    return " ".join(stripped.split())


def parse_srt(data: bytes | str) -> list[SubtitleEntry]:
    """Parse an SRT document into cues, in file order.

    Tolerates a UTF-8 BOM, CRLF line endings, and blocks missing the numeric
    cue line. Multi-line cue text is joined with single spaces and simple
    angle-bracket markup is stripped. Cues that are empty after normalization
    are dropped, as are zero-duration cues (with a warning). A cue whose
    timecode cannot be parsed raises SrtParseError naming the cue; a document
    with no parsable cues raises EmptyDocumentError.
    """
    if isinstance(data, bytes):
        text = data.decode("utf-8")
    else:
        text = data
    text = text.lstrip("﻿").replace("\r\n", "\n").replace("\r", "\n")

    entries: list[SubtitleEntry] = []
    last_index = 0
    last_start = None
    last_end = None
    for position, block in enumerate(re.split(r"\n\s*\n", text.strip()), start=1):
        lines = [line.strip() for line in block.split("\n") if line.strip()]
        if not lines:
            continue
        time_line_at = next((i for i, line in enumerate(lines) if _ARROW in line), None)
        if time_line_at is None:
            logger.warning("skipping block %d with no timecode line: %.40r", position, lines[0])
            continue
        if time_line_at > 0 and lines[0].isdigit():
            cue_number = int(lines[0])
        else:
            cue_number = position
            logger.warning("cue at block %d has no numeric index line, using %d", position, cue_number)

        time_line = lines[time_line_at]
        start_raw, _, end_raw = time_line.partition(_ARROW)
        # Coordinate extensions after the end time are ignored.
        end_token = end_raw.split()[0] if end_raw.split() else ""
        try:
            start = parse_timestamp(start_raw.strip())
            end = parse_timestamp(end_token)
        except SrtParseError as exc:
            raise SrtParseError(f"cue {cue_number}: {exc}") from exc

        cue_text = _normalize_text(lines[time_line_at + 1 :])
        if not cue_text:
            logger.warning("dropping empty cue %d", cue_number)
            continue
        if end <= start:
            logger.warning(
                "dropping cue %d with non-positive duration (%s --> %s)",
                cue_number,
                start_raw.strip(),
                end_token,
            )
            continue

        if cue_number <= last_index:
            logger.warning(
                "cue numbering out of order: %d after %d; keeping file order", cue_number, last_index
            )
        if last_start is not None and start < last_start:
            logger.warning(
                "cue %d starts at %.3f before previous cue at %.3f; keeping file order",
                cue_number,
                start,
                last_start,
            )
        elif last_end is not None and start < last_end:
            logger.warning("cue %d overlaps the previous cue; merging rule still applies", cue_number)
        last_index = cue_number
        last_start = start
        last_end = end
        entries.append(SubtitleEntry(index=cue_number, start=start, end=end, text=cue_text))

    if not entries:
        raise EmptyDocumentError("SRT document contains no parsable cues")
    return entries


def _close_segment(members: list[SubtitleEntry], lecture_id: str, ordinal: int) -> LectureSegment:
    return LectureSegment(
        segment_id=f"{lecture_id}-{ordinal:04d}",
        lecture_id=lecture_id,
        start=min(m.start for m in members),
        end=max(m.end for m in members),
        text=" ".join(m.text for m in members),
    )


def merge_entries(
    entries: list[SubtitleEntry],
    cfg: SegmentationConfig = SegmentationConfig(),
    lecture_id: str = "lecture",
) -> list[LectureSegment]:
    """Greedily merge consecutive cues into segments capped at cfg.max_span.

    A segment keeps accumulating cues while the candidate cue's end stays
    within max_span of the segment's first cue; the first overflowing cue
    starts a new segment. A single cue longer than max_span is kept whole.
    Deterministic and order-preserving: output text is the input cue texts
    concatenated in the given order.
    """
    segments: list[LectureSegment] = []
    members: list[SubtitleEntry] = []
    for entry in entries:
        if members and entry.end - members[0].start > cfg.max_span:
            segments.append(_close_segment(members, lecture_id, len(segments)))
            members = []
        members.append(entry)
    if members:
        segments.append(_close_segment(members, lecture_id, len(segments)))
    return segments


def ingest_lecture(
    srt_path: str | Path,
    lecture_id: str,
    cfg: SegmentationConfig = SegmentationConfig(),
) -> list[LectureSegment]:
    """Parse and merge one SRT file into id-stamped lecture segments."""
    if not _SLUG_RE.match(lecture_id):
        raise ValueError(f"lecture_id must be a slug (letters, digits, . _ -): {lecture_id!r}")
    path = Path(srt_path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise SrtParseError(f"{path}: cannot read SRT file: {exc}") from exc
    try:
        entries = parse_srt(data)
    except SrtParseError as exc:
        raise type(exc)(f"{path}: {exc}") from exc
    return merge_entries(entries, cfg, lecture_id=lecture_id)
