"""Batch orchestration: manifest-driven processing of frame sequences with
a resumable journal and aggregate reporting.

Every completed frame appends one checksummed line to an append-only
journal before the batch moves on; a killed job rerun with the same
manifest skips DONE records and processes only the remainder.  Frames are
independent, so the worker pool requires no shared mutable state beyond
the single journal append point.

Accounting convention: ``original_bytes`` is the frame's canonical content
size (width x height x channels at the true bit depth), independent of the
input container's packing; ``compressed_bytes`` is the size of the sealed
output file actually stored.
"""

from __future__ import annotations

import csv
import glob
import io
import json
import math
import os
import tempfile
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

from .analysis import analyze_frame
from .codec.constants import CODEC_VERSION
from .config import ToolConfig, apply_entries, parse_kv
from .controller import compress_to_target, select_profile
from .dpx import MAGIC_BE, MAGIC_LE, parse_dpx
from .errors import (
    AdaptixError,
    ConfigError,
    EmptyInputError,
    FormatError,
    JournalCorruptError,
    OutputNotWritableError,
    ZeroOriginalError,
)
from .frame import ContentFlag, FrameMetadata
from .metrics import PSNR_INF_TAG_VALUE
from .tiff import Seal, parse_tiff, write_tiff

REPORT_SCHEMA_VERSION = 1

SSIM_HIST_BINS = 20
SSIM_HIST_RANGE = (0.8, 1.0)

AUTO = "AUTO"

OUTPUT_SUFFIX = ".atc.tif"


class FrameStatus(Enum):
    PENDING = "PENDING"
    DONE = "DONE"
    FAILED = "FAILED"


@dataclass
class JobManifest:
    inputs: list
    output_dir: str
    profile: str = AUTO
    worker_count: object = AUTO          # positive int or AUTO
    config_overrides: list = field(default_factory=list)  # (lineno, key, value)
    job_id: str = "job"

    def __post_init__(self):
        if not self.inputs:
            raise ValueError("manifest inputs must be non-empty")
        if self.worker_count != AUTO and int(self.worker_count) < 1:
            raise ValueError("worker_count must be >= 1")


@dataclass
class FrameRecord:
    source_id: str
    status: FrameStatus
    ssim: Optional[float] = None
    psnr_db: Optional[float] = None
    original_bytes: Optional[int] = None
    compressed_bytes: Optional[int] = None
    iterations: Optional[int] = None
    profile_id: Optional[str] = None
    error: Optional[str] = None
    external_subjective_score: Optional[float] = None

    def to_json(self) -> str:
        d = asdict(self)
        d["status"] = self.status.value
        if d["psnr_db"] is not None and math.isinf(d["psnr_db"]):
            d["psnr_db"] = PSNR_INF_TAG_VALUE
        return json.dumps(d, sort_keys=True, allow_nan=False)

    @classmethod
    def from_json(cls, text: str) -> "FrameRecord":
        d = json.loads(text)
        d["status"] = FrameStatus(d["status"])
        if d.get("psnr_db") is not None and d["psnr_db"] >= 1.0e307:
            d["psnr_db"] = math.inf
        return cls(**d)


@dataclass
class BatchSummary:
    frame_count: int
    done_count: int
    failed_count: int
    skipped_count: int
    mean_ssim: Optional[float]
    min_ssim: Optional[float]
    mean_psnr_db: Optional[float]
    min_psnr_db: Optional[float]
    ssim_histogram: list
    total_original_bytes: int
    total_compressed_bytes: int
    reduction_percent: Optional[float]


def compute_reduction(original_bytes, compressed_bytes) -> float:
    """Storage reduction percent, reported to one decimal."""
    if original_bytes <= 0:
        raise ZeroOriginalError("original size must be positive")
    return round(100.0 * (1.0 - compressed_bytes / original_bytes), 1)


def summarize(records, skipped_count: int = 0) -> BatchSummary:
    """Aggregate FrameRecords; order-independent (sorted internally)."""
    records = sorted(records, key=lambda r: r.source_id)
    done = [r for r in records if r.status == FrameStatus.DONE]
    failed = [r for r in records if r.status == FrameStatus.FAILED]

    lo, hi = SSIM_HIST_RANGE
    width = (hi - lo) / SSIM_HIST_BINS
    hist = [0] * SSIM_HIST_BINS
    for r in done:
        idx = int((r.ssim - lo) / width)
        hist[min(max(idx, 0), SSIM_HIST_BINS - 1)] += 1

    total_orig = sum(r.original_bytes for r in done)
    total_comp = sum(r.compressed_bytes for r in done)
    psnrs = [r.psnr_db for r in done]
    ssims = [r.ssim for r in done]
    return BatchSummary(
        frame_count=len(records),
        done_count=len(done),
        failed_count=len(failed),
        skipped_count=skipped_count,
        mean_ssim=sum(ssims) / len(ssims) if ssims else None,
        min_ssim=min(ssims) if ssims else None,
        mean_psnr_db=sum(psnrs) / len(psnrs) if psnrs else None,
        min_psnr_db=min(psnrs) if psnrs else None,
        ssim_histogram=hist,
        total_original_bytes=total_orig,
        total_compressed_bytes=total_comp,
        reduction_percent=(compute_reduction(total_orig, total_comp)
                           if total_orig > 0 else None),
    )


# --- manifest -----------------------------------------------------------

_MANIFEST_KEYS = ("input", "output_dir", "profile", "workers", "job_id")


def load_manifest(path: str):
    """Parse a manifest file (same key/value syntax as the config file).

    Returns (JobManifest); keys outside the manifest vocabulary are kept as
    config overrides and applied on top of the tool configuration at run
    time."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("cannot read manifest %s: %s" % (path, exc))
    inputs = []
    fields = {"output_dir": None, "profile": AUTO, "workers": AUTO,
              "job_id": Path(path).stem}
    overrides = []
    for lineno, key, value in parse_kv(text, path):
        if key == "input":
            inputs.append(value)
        elif key in fields:
            fields[key] = value
        else:
            overrides.append((lineno, key, value))
    if not inputs:
        raise ConfigError("%s: manifest declares no input lines" % path)
    if not fields["output_dir"]:
        raise ConfigError("%s: manifest requires output_dir" % path)
    workers = fields["workers"]
    if isinstance(workers, str) and workers.upper() != AUTO:
        try:
            workers = int(workers)
        except ValueError:
            raise ConfigError("%s: workers must be a count or AUTO" % path)
    else:
        workers = AUTO
    profile = fields["profile"].upper()
    return JobManifest(inputs=inputs, output_dir=fields["output_dir"],
                       profile=profile, worker_count=workers,
                       config_overrides=overrides, job_id=fields["job_id"])


# --- journal ------------------------------------------------------------

def _journal_line(payload: str) -> str:
    data = payload.encode("utf-8")
    return "%08x\t%s\n" % (zlib.crc32(data), payload)


def _parse_journal_line(line: str) -> Optional[str]:
    if "\t" not in line:
        return None
    crc_text, _, payload = line.partition("\t")
    try:
        expect = int(crc_text, 16)
    except ValueError:
        return None
    if len(crc_text) != 8 or zlib.crc32(payload.encode("utf-8")) != expect:
        return None
    return payload


def journal_path(manifest: JobManifest) -> str:
    return os.path.join(manifest.output_dir, manifest.job_id + ".journal")


def read_journal(path: str):
    """Returns (header dict, records, corrupt_line_count).

    A checksum mismatch ends the trusted region: the valid prefix is
    salvaged and every remaining line counts as corrupt.  An unreadable
    file or a corrupt header line is unusable -> JOURNAL_CORRUPT.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise JournalCorruptError("cannot read journal %s: %s" % (path, exc))
    if not lines:
        raise JournalCorruptError("journal %s is empty" % path)
    header_payload = _parse_journal_line(lines[0])
    if header_payload is None:
        raise JournalCorruptError("journal %s has a corrupt header" % path)
    try:
        header = json.loads(header_payload)
    except ValueError:
        raise JournalCorruptError("journal %s has an unreadable header" % path)

    records = []
    corrupt = 0
    for i, line in enumerate(lines[1:], start=2):
        payload = _parse_journal_line(line)
        if payload is None:
            corrupt = len(lines) - i + 1
            break
        try:
            records.append(FrameRecord.from_json(payload))
        except (ValueError, KeyError, TypeError):
            corrupt = len(lines) - i + 1
            break
    return header, records, corrupt


def latest_records(records) -> list:
    """Keep the last record per source_id (a resumed run may retry a FAILED
    frame), sorted by source_id."""
    by_id = {}
    for r in records:
        by_id[r.source_id] = r
    return [by_id[k] for k in sorted(by_id)]


# --- frame ingest -------------------------------------------------------

def read_input_frame(path: str):
    """Load a DPX or uncompressed TIFF frame: (Frame, FrameMetadata)."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise FormatError("cannot read %s: %s" % (path, exc))
    if data[:4] in (MAGIC_BE, MAGIC_LE):
        return parse_dpx(data)
    if data[:2] in (b"II", b"MM"):
        frame, seal, payload = parse_tiff(data)
        if frame is None:
            raise FormatError(
                "%s holds a compressed payload, not source pixels" % path)
        flags = {ContentFlag.BW if frame.channels == 1 else ContentFlag.COLOR}
        meta = FrameMetadata(name=Path(path).stem, sequence_index=0,
                             capture_date=None, camera=None,
                             content_flags=flags)
        if not frame.source_id:
            frame.source_id = Path(path).stem
        return frame, meta
    raise FormatError("%s is neither DPX nor TIFF" % path)


# --- batch execution ----------------------------------------------------

def resolve_inputs(patterns) -> list:
    """Expand glob patterns / literal paths into a sorted, de-duplicated
    file list."""
    seen = {}
    for pattern in patterns:
        matches = sorted(glob.glob(pattern)) if glob.has_magic(pattern) \
            else ([pattern] if os.path.exists(pattern) else [])
        for m in matches:
            seen[m] = True
    return sorted(seen)


def process_frame(path: str, config: ToolConfig, profile_choice: str,
                  output_dir: str) -> FrameRecord:
    """Run the full per-frame flow: parse -> analyze -> iterate -> seal.

    Failures never propagate; they come back as FAILED records so one bad
    frame cannot abort a batch.
    """
    try:
        frame, meta = read_input_frame(path)
        stats, sensitivity = analyze_frame(frame, config.analysis)
        choice = None if profile_choice == AUTO else profile_choice
        profile = select_profile(meta, stats, choice, config.profiles)
        stream, score, trace = compress_to_target(
            frame, profile, stats, sensitivity, config.ssim_params)
        seal = Seal(profile_id=profile.id, ssim=score.ssim,
                    psnr_db=score.psnr_db,
                    iterations=max(trace.encode_cycles, 1),
                    codec_version=CODEC_VERSION,
                    original_digest=frame.digest())
        out_bytes = write_tiff(frame, payload=stream.data, seal=seal)
        out_path = os.path.join(output_dir, Path(path).stem + OUTPUT_SUFFIX)
        fd, tmp = tempfile.mkstemp(dir=output_dir, suffix=".part")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(out_bytes)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, out_path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return FrameRecord(
            source_id=path, status=FrameStatus.DONE,
            ssim=score.ssim, psnr_db=score.psnr_db,
            original_bytes=frame.raw_bytes, compressed_bytes=len(out_bytes),
            iterations=max(trace.encode_cycles, 1), profile_id=profile.id)
    except AdaptixError as exc:
        return FrameRecord(source_id=path, status=FrameStatus.FAILED,
                           error="%s: %s" % (type(exc).__name__, exc))
    except Exception as exc:  # per-frame isolation: archival batches go on
        return FrameRecord(source_id=path, status=FrameStatus.FAILED,
                           error="internal: %s: %s" % (type(exc).__name__, exc))


def run_batch(manifest: JobManifest, config: Optional[ToolConfig] = None) -> BatchSummary:
    """Execute (or resume) a batch; returns the aggregate summary."""
    config = apply_entries(config or ToolConfig(), manifest.config_overrides,
                           source="<manifest>")

    inputs = resolve_inputs(manifest.inputs)
    if not inputs:
        raise EmptyInputError("manifest inputs match no files")

    os.makedirs(manifest.output_dir, exist_ok=True)
    if not os.access(manifest.output_dir, os.W_OK):
        raise OutputNotWritableError("cannot write to %s" % manifest.output_dir)

    jpath = journal_path(manifest)
    prior = []
    # a zero-byte journal means a crash before the header flush: start over
    if os.path.exists(jpath) and os.path.getsize(jpath) > 0:
        _, prior, _ = read_journal(jpath)
    done_ids = {r.source_id for r in prior if r.status == FrameStatus.DONE}
    pending = [p for p in inputs if p not in done_ids]
    skipped = len(inputs) - len(pending)

    workers = os.cpu_count() or 1
    if manifest.worker_count != AUTO:
        workers = int(manifest.worker_count)

    new_records = []
    with open(jpath, "a", encoding="utf-8") as journal:
        if not prior and journal.tell() == 0:
            header = json.dumps({"job_id": manifest.job_id,
                                 "schema_version": REPORT_SCHEMA_VERSION},
                                sort_keys=True)
            journal.write(_journal_line(header))
            journal.flush()
            os.fsync(journal.fileno())
        if pending:
            with ThreadPoolExecutor(max_workers=min(workers, len(pending))) as pool:
                futures = [pool.submit(process_frame, p, config,
                                       manifest.profile, manifest.output_dir)
                           for p in pending]
                for fut in futures:
                    record = fut.result()
                    journal.write(_journal_line(record.to_json()))
                    journal.flush()
                    os.fsync(journal.fileno())
                    new_records.append(record)

    return summarize(latest_records(prior + new_records), skipped_count=skipped)


# --- subjective-score import -------------------------------------------

SCORE_COLUMNS = ("source_id", "score_0_to_5", "evaluator", "note")


def load_subjective_scores(path: str) -> dict:
    """CSV with columns (source_id, score_0_to_5, evaluator, note) ->
    {source_id: score}.  Scores are externally supplied human judgments;
    this tool never computes them."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or \
                    [c.strip() for c in reader.fieldnames] != list(SCORE_COLUMNS):
                raise ConfigError("score CSV must have columns %s"
                                  % (SCORE_COLUMNS,))
            scores = {}
            for row in reader:
                try:
                    value = float(row["score_0_to_5"])
                except (TypeError, ValueError):
                    raise ConfigError("bad score %r for %r"
                                      % (row.get("score_0_to_5"),
                                         row.get("source_id")))
                if not 0.0 <= value <= 5.0:
                    raise ConfigError("score %r out of range for %r"
                                      % (value, row["source_id"]))
                scores[row["source_id"]] = value
            return scores
    except OSError as exc:
        raise ConfigError("cannot read scores %s: %s" % (path, exc))


def apply_subjective_scores(records, scores: dict) -> None:
    for r in records:
        if r.source_id in scores:
            r.external_subjective_score = scores[r.source_id]


# --- report export ------------------------------------------------------

CSV_COLUMNS = ("source_id", "status", "profile_id", "ssim", "psnr_db",
               "original_bytes", "compressed_bytes", "iterations",
               "external_subjective_score", "error")


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, FrameStatus):
        return value.value
    if isinstance(value, float):
        return repr(value)
    return str(value)


def export_report(journal: str, fmt: str = "JSON",
                  scores: Optional[dict] = None) -> bytes:
    """Deterministic report of all journal records + the batch summary."""
    header, raw_records, corrupt = read_journal(journal)
    records = latest_records(raw_records)
    if scores:
        apply_subjective_scores(records, scores)
    summary = summarize(records)

    fmt = fmt.upper()
    if fmt == "JSON":
        payload = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "job_id": header.get("job_id"),
            "corrupt_lines": corrupt,
            "records": [json.loads(r.to_json()) for r in records],
            "summary": _summary_dict(summary),
        }
        return (json.dumps(payload, sort_keys=True, indent=2,
                           allow_nan=False) + "\n").encode("utf-8")
    if fmt == "CSV":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow([_cell(getattr(r, c)) for c in CSV_COLUMNS])
        writer.writerow([])
        writer.writerow(["summary_key", "value"])
        for key, value in sorted(_summary_dict(summary).items()):
            if isinstance(value, list):
                value = " ".join(str(v) for v in value)
            writer.writerow([key, _cell(value) if not isinstance(value, str)
                             else value])
        if corrupt:
            writer.writerow(["corrupt_lines", str(corrupt)])
        return buf.getvalue().encode("utf-8")
    raise ValueError("unknown report format %r" % fmt)


def _summary_dict(summary: BatchSummary) -> dict:
    d = asdict(summary)
    for key in ("mean_psnr_db", "min_psnr_db"):
        if d[key] is not None and math.isinf(d[key]):
            d[key] = PSNR_INF_TAG_VALUE
    return d
