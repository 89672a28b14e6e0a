"""TGD v1 dataset files: a text manifest followed by one binary frame payload.

Layout of a ``.tgd`` file::

    TGD v1
    frame_interval_ms 60
    rows 24
    cols 16
    recordings 2
    meta <key> <value...>          # optional, dataset-level
    payload_bytes 9216
    payload_crc32 2767264430
    recording r000
    label branch 2
    frames 3
    timestamps_ms 0 60 120
    phase approach 0
    phase grasp 1
    meta <key> <value...>          # optional, per recording
    end
    recording r001
    ...
    end
    payload
    <binary payload>

The payload concatenates every frame of every recording in manifest order,
each frame stored as 384 little-endian float32 values in row-major 24x16
order.  ``payload_crc32`` is the CRC-32 of the raw payload bytes.  The
manifest is UTF-8; the line ``payload`` separates it from the binary part.
Meta values are stored as text: writers stringify, readers return strings.
"""

from __future__ import annotations

import io
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import (
    FRAME_COLS,
    FRAME_ROWS,
    PHASES,
    DEFAULT_FRAME_INTERVAL_MS,
    GraspRecording,
    GraspState,
    TaxelFrame,
)
from .errors import DatasetFormatError, DatasetIOError

MAGIC = "TGD v1"
FRAME_BYTES = FRAME_ROWS * FRAME_COLS * 4


@dataclass
class Dataset:
    """A parsed TGD file: recordings plus dataset-level header fields."""

    recordings: list[GraspRecording]
    frame_interval_ms: int = DEFAULT_FRAME_INTERVAL_MS
    meta: dict[str, str] = field(default_factory=dict)
    payload_crc32: int = 0

    def by_id(self) -> dict[str, GraspRecording]:
        return {rec.recording_id: rec for rec in self.recordings}

    def class_histogram(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for rec in self.recordings:
            key = rec.label.kind.value if rec.label else "unlabeled"
            counts[key] = counts.get(key, 0) + 1
        return counts


def _assign_ids(recordings: Sequence[GraspRecording]) -> list[GraspRecording]:
    seen: set[str] = set()
    out: list[GraspRecording] = []
    for idx, rec in enumerate(recordings):
        rid = rec.recording_id or f"r{idx:03d}"
        if rid in seen:
            raise ValueError(f"duplicate recording id {rid!r}")
        if any(ch.isspace() for ch in rid):
            raise ValueError(f"recording id may not contain whitespace: {rid!r}")
        seen.add(rid)
        if rid != rec.recording_id:
            rec = GraspRecording(
                frames=rec.frames,
                phase_marks=rec.phase_marks,
                label=rec.label,
                meta=rec.meta,
                recording_id=rid,
            )
        out.append(rec)
    return out


def write_dataset(recordings: Sequence[GraspRecording],
                  path: str | Path,
                  frame_interval_ms: int = DEFAULT_FRAME_INTERVAL_MS,
                  meta: Optional[Mapping[str, object]] = None) -> Dataset:
    """Write recordings to ``path`` in TGD v1 form and return the dataset.

    Recordings without an id get a positional one (``r000``, ``r001``, ...).
    """
    recordings = _assign_ids(recordings)

    payload = io.BytesIO()
    for rec in recordings:
        for frame in rec.frames:
            payload.write(np.ascontiguousarray(frame.values, dtype="<f4").tobytes())
    payload_bytes = payload.getvalue()
    crc = zlib.crc32(payload_bytes) & 0xFFFFFFFF

    lines = [MAGIC]
    lines.append(f"frame_interval_ms {int(frame_interval_ms)}")
    lines.append(f"rows {FRAME_ROWS}")
    lines.append(f"cols {FRAME_COLS}")
    lines.append(f"recordings {len(recordings)}")
    for key, value in (meta or {}).items():
        _check_meta_key(key)
        lines.append(f"meta {key} {value}")
    lines.append(f"payload_bytes {len(payload_bytes)}")
    lines.append(f"payload_crc32 {crc}")
    for rec in recordings:
        lines.append(f"recording {rec.recording_id}")
        lines.append(f"label {rec.label.to_token() if rec.label else 'none'}")
        lines.append(f"frames {len(rec.frames)}")
        if rec.frames:
            lines.append("timestamps_ms " + " ".join(str(t) for t in rec.timestamps_ms()))
        for phase in PHASES:
            if phase in rec.phase_marks:
                lines.append(f"phase {phase} {rec.phase_marks[phase]}")
        for key, value in rec.meta.items():
            _check_meta_key(key)
            lines.append(f"meta {key} {value}")
        lines.append("end")
    lines.append("payload")

    data = "\n".join(lines).encode("utf-8") + b"\n" + payload_bytes
    Path(path).write_bytes(data)
    return Dataset(
        recordings=recordings,
        frame_interval_ms=int(frame_interval_ms),
        meta={k: str(v) for k, v in (meta or {}).items()},
        payload_crc32=crc,
    )


def _check_meta_key(key: object) -> None:
    key = str(key)
    if not key or any(ch.isspace() for ch in key):
        raise ValueError(f"meta keys may not be empty or contain whitespace: {key!r}")


class _ManifestReader:
    def __init__(self, text: str, path: Path):
        self.lines = text.split("\n")
        self.pos = 0
        self.path = path

    def next_line(self) -> str:
        while self.pos < len(self.lines):
            line = self.lines[self.pos].strip()
            self.pos += 1
            if line:
                return line
        raise DatasetFormatError(f"{self.path}: unexpected end of manifest")

    def peek(self) -> Optional[str]:
        pos = self.pos
        while pos < len(self.lines):
            line = self.lines[pos].strip()
            if line:
                return line
            pos += 1
        return None

    def expect_field(self, name: str) -> str:
        line = self.next_line()
        key, _, value = line.partition(" ")
        if key != name:
            raise DatasetFormatError(f"{self.path}: expected {name!r}, found {line!r}")
        return value.strip()

    def expect_int(self, name: str) -> int:
        value = self.expect_field(name)
        try:
            return int(value)
        except ValueError:
            raise DatasetFormatError(f"{self.path}: {name} must be an integer, got {value!r}") from None


def load_dataset(path: str | Path) -> Dataset:
    """Read a TGD v1 file, verifying structure and the payload checksum."""
    path = Path(path)
    data = path.read_bytes()

    separator = b"\npayload\n"
    cut = data.find(separator)
    if cut < 0:
        raise DatasetFormatError(f"{path}: missing payload separator")
    try:
        manifest_text = data[:cut].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DatasetFormatError(f"{path}: manifest is not valid UTF-8: {exc}") from None
    payload = data[cut + len(separator):]

    reader = _ManifestReader(manifest_text, path)
    magic = reader.next_line()
    if magic != MAGIC:
        raise DatasetFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    frame_interval_ms = reader.expect_int("frame_interval_ms")
    rows = reader.expect_int("rows")
    cols = reader.expect_int("cols")
    if (rows, cols) != (FRAME_ROWS, FRAME_COLS):
        raise DatasetFormatError(
            f"{path}: unsupported frame geometry {rows}x{cols}"
        )
    count = reader.expect_int("recordings")

    dataset_meta: dict[str, str] = {}
    while True:
        line = reader.peek()
        if line is None or not line.startswith("meta "):
            break
        reader.next_line()
        _, key, value = _split_meta(line, path)
        dataset_meta[key] = value

    payload_bytes = reader.expect_int("payload_bytes")
    crc_declared = reader.expect_int("payload_crc32")
    if len(payload) != payload_bytes:
        raise DatasetIOError(
            f"{path}: payload is {len(payload)} bytes, manifest declares {payload_bytes}"
        )
    crc_actual = zlib.crc32(payload) & 0xFFFFFFFF
    if crc_actual != crc_declared:
        raise DatasetIOError(
            f"{path}: payload CRC-32 mismatch (declared {crc_declared}, computed {crc_actual})"
        )

    recordings: list[GraspRecording] = []
    offset = 0
    for _ in range(count):
        rec, offset = _read_recording(reader, payload, offset, path)
        recordings.append(rec)
    if offset != len(payload):
        raise DatasetFormatError(
            f"{path}: payload has {len(payload) - offset} trailing bytes"
        )
    tail = reader.peek()
    if tail is not None:
        raise DatasetFormatError(f"{path}: unexpected manifest content {tail!r}")

    seen: set[str] = set()
    for rec in recordings:
        if rec.recording_id in seen:
            raise DatasetFormatError(f"{path}: duplicate recording id {rec.recording_id!r}")
        seen.add(rec.recording_id)

    return Dataset(
        recordings=recordings,
        frame_interval_ms=frame_interval_ms,
        meta=dataset_meta,
        payload_crc32=crc_actual,
    )


def _split_meta(line: str, path: Path) -> tuple[str, str, str]:
    parts = line.split(" ", 2)
    if len(parts) < 3:
        raise DatasetFormatError(f"{path}: malformed meta line {line!r}")
    return parts[0], parts[1], parts[2]


def _read_recording(reader: _ManifestReader, payload: bytes, offset: int,
                    path: Path) -> tuple[GraspRecording, int]:
    rid = reader.expect_field("recording")
    label_token = reader.expect_field("label")
    try:
        label = None if label_token == "none" else GraspState.from_token(label_token)
    except ValueError as exc:
        raise DatasetFormatError(f"{path}: recording {rid}: {exc}") from None
    frame_count = reader.expect_int("frames")

    timestamps: list[int] = []
    if frame_count:
        raw = reader.expect_field("timestamps_ms").split()
        if len(raw) != frame_count:
            raise DatasetFormatError(
                f"{path}: recording {rid}: {len(raw)} timestamps for {frame_count} frames"
            )
        timestamps = [int(t) for t in raw]

    phase_marks: dict[str, int] = {}
    meta: dict[str, str] = {}
    while True:
        line = reader.next_line()
        if line == "end":
            break
        if line.startswith("phase "):
            parts = line.split()
            if len(parts) != 3:
                raise DatasetFormatError(f"{path}: malformed phase line {line!r}")
            phase_marks[parts[1]] = int(parts[2])
        elif line.startswith("meta "):
            _, key, value = _split_meta(line, path)
            meta[key] = value
        else:
            raise DatasetFormatError(f"{path}: unexpected line in recording {rid}: {line!r}")

    frames = []
    for i in range(frame_count):
        chunk = payload[offset:offset + FRAME_BYTES]
        if len(chunk) < FRAME_BYTES:
            raise DatasetIOError(
                f"{path}: recording {rid}: payload truncated at frame {i}"
            )
        values = np.frombuffer(chunk, dtype="<f4").reshape(FRAME_ROWS, FRAME_COLS)
        try:
            frames.append(TaxelFrame(timestamp_ms=timestamps[i], values=values))
        except ValueError as exc:
            raise DatasetFormatError(f"{path}: recording {rid}, frame {i}: {exc}") from None
        offset += FRAME_BYTES

    try:
        rec = GraspRecording(
            frames=tuple(frames),
            phase_marks=phase_marks,
            label=label,
            meta=meta,
            recording_id=rid,
        )
    except ValueError as exc:
        raise DatasetFormatError(f"{path}: recording {rid}: {exc}") from None
    return rec, offset


def read_dataset(path: str | Path) -> list[GraspRecording]:
    """Recordings only; use :func:`load_dataset` for header fields too."""
    return load_dataset(path).recordings
