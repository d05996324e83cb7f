"""Command-line surface: convert / analyze / compress / batch / verify /
report, one subcommand per pipeline stage plus validation.

Exit codes are a scripting contract:
  0 success, 1 quality-contract failure (or UNATTAINABLE),
  2 input/format/configuration error, 3 internal error.

``--json`` (before the subcommand) switches every command to
machine-readable output; the config file comes from ``--config`` or the
``ADAPTIX_CONFIG`` environment variable.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click

from . import __version__
from .analysis import TileFlag, analyze_frame
from .codec import decode
from .codec.constants import CODEC_VERSION
from .config import ENV_CONFIG, load_config
from .controller import Action, compress_to_target, select_profile
from .dpx import parse_dpx
from .errors import (
    AdaptixError,
    ConfigError,
    CorruptStreamError,
    EmptyInputError,
    FormatError,
    JournalCorruptError,
    OutputNotWritableError,
    UnattainableError,
    ZeroOriginalError,
)
from .metrics import ssim as compute_ssim
from .pipeline import (
    _summary_dict,
    export_report,
    load_manifest,
    load_subjective_scores,
    read_input_frame,
    resolve_inputs,
    run_batch,
)
from .tiff import Seal, parse_tiff, write_tiff

EXIT_OK = 0
EXIT_QUALITY = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3

SEAL_TOLERANCE = 1e-6

_INPUT_ERRORS = (FormatError, ConfigError, EmptyInputError,
                 OutputNotWritableError, ZeroOriginalError,
                 JournalCorruptError, FileNotFoundError, PermissionError,
                 IsADirectoryError)


class _Ctx:
    def __init__(self, config_path, as_json):
        self.config_path = config_path
        self.as_json = as_json
        self._config = None

    @property
    def config(self):
        if self._config is None:
            self._config = load_config(self.config_path)
        return self._config

    def emit(self, payload: dict, human: str):
        if self.as_json:
            click.echo(json.dumps(payload, sort_keys=True, default=str))
        elif human:
            click.echo(human)


def _fail(ctx_obj, code, message):
    if ctx_obj is not None and ctx_obj.as_json:
        click.echo(json.dumps({"error": message, "exit_code": code},
                              sort_keys=True))
    else:
        click.echo("error: %s" % message, err=True)
    sys.exit(code)


def _guard(fn):
    """Map exceptions to the stable exit-code contract."""
    def wrapper(ctx, *args, **kwargs):
        try:
            fn(ctx.obj, *args, **kwargs)
        except SystemExit:
            raise
        except UnattainableError as exc:
            _fail(ctx.obj, EXIT_QUALITY, str(exc))
        except _INPUT_ERRORS as exc:
            _fail(ctx.obj, EXIT_INPUT, str(exc))
        except AdaptixError as exc:
            _fail(ctx.obj, EXIT_INTERNAL, "%s: %s" % (type(exc).__name__, exc))
        except Exception as exc:  # noqa: BLE001 - last-resort mapping
            _fail(ctx.obj, EXIT_INTERNAL, "%s: %s" % (type(exc).__name__, exc))
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return click.pass_context(wrapper)


@click.group()
@click.version_option(__version__)
@click.option("--config", "config_path", metavar="PATH", default=None,
              envvar=ENV_CONFIG,
              help="Configuration file (or set %s)." % ENV_CONFIG)
@click.option("--json", "as_json", is_flag=True,
              help="Machine-readable output on every command.")
@click.pass_context
def main(ctx, config_path, as_json):
    """Quality-targeted adaptive compression for film-scan frames."""
    ctx.obj = _Ctx(config_path, as_json)


@main.command()
@click.argument("inputs", nargs=-1, required=True)
@click.option("--output-dir", "-o", required=True, metavar="DIR")
@_guard
def convert(obj, inputs, output_dir):
    """Convert DPX frames to uncompressed 16-bit TIFF."""
    paths = resolve_inputs(inputs)
    if not paths:
        raise EmptyInputError("no input files match")
    outdir = Path(output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    results = []
    for path in paths:
        with open(path, "rb") as fh:
            frame, meta = parse_dpx(fh.read())
        out = outdir / (Path(path).stem + ".tif")
        out.write_bytes(write_tiff(frame))
        results.append({"input": path, "output": str(out),
                        "width": frame.width, "height": frame.height,
                        "channels": frame.channels,
                        "bit_depth": frame.bit_depth})
        if not obj.as_json:
            click.echo("%s -> %s  %dx%d  %d ch  %d-bit"
                       % (path, out, frame.width, frame.height,
                          frame.channels, frame.bit_depth))
    if obj.as_json:
        click.echo(json.dumps({"converted": results}, sort_keys=True))


@main.command()
@click.argument("input_path", metavar="INPUT")
@_guard
def analyze(obj, input_path):
    """Print frame statistics and the tile sensitivity summary."""
    frame, meta = read_input_frame(input_path)
    stats, sensitivity = analyze_frame(frame, obj.config.analysis)
    suggestion = select_profile(meta, stats, None, obj.config.profiles)
    flag_counts = {f.value: 0 for f in TileFlag}
    for row in sensitivity.flags:
        for cell in row:
            for flag in cell:
                flag_counts[flag.value] += 1
    payload = {
        "source": input_path,
        "width": frame.width, "height": frame.height,
        "channels": frame.channels, "bit_depth": frame.bit_depth,
        "dynamic_range": list(stats.dynamic_range),
        "contrast_index": stats.contrast_index,
        "noise_sigma": stats.noise_sigma,
        "banding_risk": stats.banding_risk,
        "palette_saturation": stats.palette_saturation,
        "tile_flags": flag_counts,
        "suggested_profile": suggestion.id,
    }
    obj.emit(payload, "\n".join([
        "%s: %dx%d, %d channel(s), %d-bit" % (
            input_path, frame.width, frame.height, frame.channels,
            frame.bit_depth),
        "dynamic range: %.1f .. %.1f  contrast %.3f  noise sigma %.3f" % (
            stats.dynamic_range[0], stats.dynamic_range[1],
            stats.contrast_index, stats.noise_sigma),
        "banding risk: %s  palette saturation: %.3f" % (
            stats.banding_risk, stats.palette_saturation),
        "tiles: %s" % ", ".join("%s=%d" % kv for kv in sorted(flag_counts.items())),
        "suggested profile: %s" % suggestion.id,
    ]))


@main.command()
@click.argument("input_path", metavar="INPUT")
@click.argument("output_path", metavar="OUTPUT")
@click.option("--profile", "profile_id",
              type=click.Choice(["c0", "c1", "c2", "auto"]), default="auto")
@_guard
def compress(obj, input_path, output_path, profile_id):
    """Compress one frame to a sealed TIFF under a quality profile."""
    frame, meta = read_input_frame(input_path)
    stats, sensitivity = analyze_frame(frame, obj.config.analysis)
    choice = None if profile_id == "auto" else profile_id.upper()
    profile = select_profile(meta, stats, choice, obj.config.profiles)
    stream, score, trace = compress_to_target(
        frame, profile, stats, sensitivity, obj.config.ssim_params)
    seal = Seal(profile_id=profile.id, ssim=score.ssim, psnr_db=score.psnr_db,
                iterations=max(trace.encode_cycles, 1),
                codec_version=CODEC_VERSION, original_digest=frame.digest())
    out_bytes = write_tiff(frame, payload=stream.data, seal=seal)
    Path(output_path).write_bytes(out_bytes)
    ratio = frame.raw_bytes / len(out_bytes)
    payload = {
        "source": input_path, "output": output_path,
        "profile": profile.id, "action": trace.final_action.value,
        "ssim": score.ssim,
        "psnr_db": None if math.isinf(score.psnr_db) else score.psnr_db,
        "iterations": trace.encode_cycles,
        "original_bytes": frame.raw_bytes,
        "compressed_bytes": len(out_bytes),
        "ratio": ratio,
    }
    psnr_text = "inf" if math.isinf(score.psnr_db) else "%.2f" % score.psnr_db
    obj.emit(payload,
             "%s [%s/%s]: ssim %.4f  psnr %s dB  ratio %.2f:1  %d cycle(s)"
             % (output_path, profile.id, trace.final_action.value,
                score.ssim, psnr_text, ratio, trace.encode_cycles))


@main.command()
@click.argument("compressed", metavar="COMPRESSED_TIFF")
@click.argument("original", metavar="ORIGINAL")
@_guard
def verify(obj, compressed, original):
    """Re-measure a sealed TIFF against its original and check the seal."""
    with open(compressed, "rb") as fh:
        frame_in_container, seal, payload = parse_tiff(fh.read())
    if payload is None or seal is None:
        raise FormatError("%s is not a sealed compressed TIFF" % compressed)
    reference, _ = read_input_frame(original)
    try:
        decoded = decode(payload)
    except CorruptStreamError as exc:
        _fail(obj, EXIT_INPUT, "payload corrupt at tiles %s: %s"
              % (exc.tile_indices, exc))
        return
    score = compute_ssim(reference, decoded, obj.config.ssim_params)

    def close(a, b):
        if math.isinf(a) or math.isinf(b):
            return a == b
        return abs(a - b) <= SEAL_TOLERANCE

    sealed_psnr = seal.psnr_db
    seal_ok = close(score.ssim, seal.ssim) and close(score.psnr_db, sealed_psnr)
    digest_ok = reference.digest() == seal.original_digest
    profile = obj.config.profiles.get(seal.profile_id)
    thresholds_ok = (profile is None
                     or (score.ssim >= profile.ssim_min
                         and score.psnr_db >= profile.psnr_min_db))

    psnr_text = "inf" if math.isinf(score.psnr_db) else "%.4f" % score.psnr_db
    sealed_text = "inf" if math.isinf(sealed_psnr) else "%.4f" % sealed_psnr
    payload_out = {
        "compressed": compressed, "original": original,
        "profile": seal.profile_id,
        "measured_ssim": score.ssim,
        "sealed_ssim": seal.ssim,
        "measured_psnr_db": None if math.isinf(score.psnr_db) else score.psnr_db,
        "sealed_psnr_db": None if math.isinf(sealed_psnr) else sealed_psnr,
        "seal_matches": seal_ok,
        "digest_matches": digest_ok,
        "thresholds_met": thresholds_ok,
    }
    obj.emit(payload_out, "\n".join([
        "profile %s  measured ssim %.6f (sealed %.6f)  psnr %s (sealed %s)"
        % (seal.profile_id, score.ssim, seal.ssim, psnr_text, sealed_text),
        "seal: %s  digest: %s  thresholds: %s"
        % ("ok" if seal_ok else "MISMATCH",
           "ok" if digest_ok else "MISMATCH",
           "ok" if thresholds_ok else "VIOLATED"),
    ]))
    if not (seal_ok and digest_ok and thresholds_ok):
        sys.exit(EXIT_QUALITY)


@main.command()
@click.argument("manifest_path", metavar="MANIFEST")
@_guard
def batch(obj, manifest_path):
    """Run (or resume) a manifest-driven batch job."""
    manifest = load_manifest(manifest_path)
    summary = run_batch(manifest, obj.config)
    d = _summary_dict(summary)
    if obj.as_json:
        click.echo(json.dumps({"summary": d}, sort_keys=True))
        return
    click.echo("job %s: %d frame(s), %d done, %d failed"
               % (manifest.job_id, summary.frame_count, summary.done_count,
                  summary.failed_count))
    click.echo("skipped: %d" % summary.skipped_count)
    if summary.done_count:
        ratio = (summary.total_original_bytes / summary.total_compressed_bytes
                 if summary.total_compressed_bytes else float("inf"))
        mean_psnr = ("inf" if math.isinf(summary.mean_psnr_db)
                     else "%.2f" % summary.mean_psnr_db)
        click.echo("config %-4s ratio %.2f:1  mean ssim %.4f  mean psnr %s dB"
                   "  reduction %.1f%%"
                   % (manifest.profile, ratio, summary.mean_ssim, mean_psnr,
                      summary.reduction_percent))


@main.command()
@click.argument("journal", metavar="JOURNAL")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
              default="json")
@click.option("--scores", "scores_path", metavar="CSV", default=None,
              help="Subjective-score CSV (source_id, score_0_to_5, evaluator, note).")
@_guard
def report(obj, journal, fmt, scores_path):
    """Export the batch journal as a deterministic JSON or CSV report."""
    scores = load_subjective_scores(scores_path) if scores_path else None
    if obj.as_json:
        fmt = "json"
    data = export_report(journal, fmt.upper(), scores)
    sys.stdout.buffer.write(data)
    sys.stdout.buffer.flush()


if __name__ == "__main__":
    main()
