"""CLI tests: each subcommand end to end, exit-code contract, --json mode
and config resolution through ADAPTIX_CONFIG."""

import json
import struct

import numpy as np
import pytest
from click.testing import CliRunner

from adaptix.cli import main
from adaptix.tiff import parse_tiff

from conftest import build_dpx, gradient_frame


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def dpx_file(tmp_path):
    frame = gradient_frame(width=128, height=128, noise_sigma=1.0, seed=77)
    rgb = frame.samples[0][:, :, None].repeat(3, axis=2)
    path = tmp_path / "scan_0001.dpx"
    path.write_bytes(build_dpx(rgb, bit_depth=10))
    return path


def invoke(runner, *args, env=None):
    return runner.invoke(main, [str(a) for a in args], env=env,
                         catch_exceptions=False)


# ---------------------------------------------------------------------------
# convert

def test_convert(runner, tmp_path, dpx_file):
    result = invoke(runner, "convert", dpx_file, "-o", tmp_path / "tif")
    assert result.exit_code == 0
    assert "128x128" in result.output
    frame, seal, payload = parse_tiff((tmp_path / "tif" / "scan_0001.tif").read_bytes())
    assert seal is None and payload is None
    assert frame.bit_depth == 10


def test_convert_bad_magic_exits_2(runner, tmp_path):
    bad = tmp_path / "bad.dpx"
    bad.write_bytes(b"NOPE" + b"\x00" * 4000)
    result = invoke(runner, "convert", bad, "-o", tmp_path / "tif")
    assert result.exit_code == 2


def test_convert_no_match_exits_2(runner, tmp_path):
    result = invoke(runner, "convert", tmp_path / "*.dpx", "-o", tmp_path / "o")
    assert result.exit_code == 2


# ---------------------------------------------------------------------------
# analyze

def test_analyze_json(runner, dpx_file):
    result = invoke(runner, "--json", "analyze", dpx_file)
    assert result.exit_code == 0
    payload = json.loads(result.output)
    assert payload["width"] == 128
    assert payload["suggested_profile"] in ("C0", "C1")
    assert set(payload["tile_flags"]) == \
        {"smooth_gradient", "high_texture", "noisy"}


# ---------------------------------------------------------------------------
# compress + verify

def test_compress_and_verify(runner, tmp_path, dpx_file):
    out = tmp_path / "scan.atc.tif"
    result = invoke(runner, "--json", "compress", dpx_file, out,
                    "--profile", "c1")
    assert result.exit_code == 0
    payload = json.loads(result.output)
    assert payload["ssim"] >= 0.95
    assert payload["profile"] == "C1"
    assert out.exists()

    result = invoke(runner, "verify", out, dpx_file)
    assert result.exit_code == 0
    assert "seal: ok" in result.output


def test_compress_unreadable_input_exits_2(runner, tmp_path):
    result = invoke(runner, "compress", tmp_path / "absent.dpx",
                    tmp_path / "x.tif")
    assert result.exit_code == 2


def test_verify_tampered_payload(runner, tmp_path, dpx_file):
    out = tmp_path / "scan.atc.tif"
    invoke(runner, "compress", dpx_file, out, "--profile", "c1")
    data = bytearray(out.read_bytes())
    data[-7] ^= 0xFF                     # inside the compressed strip
    out.write_bytes(bytes(data))
    result = invoke(runner, "verify", out, dpx_file)
    assert result.exit_code in (1, 2)


def test_verify_tampered_seal_exits_1(runner, tmp_path, dpx_file):
    out = tmp_path / "scan.atc.tif"
    result = invoke(runner, "--json", "compress", dpx_file, out,
                    "--profile", "c1")
    sealed_ssim = json.loads(result.output)["ssim"]
    data = out.read_bytes()
    honest = struct.pack("<d", sealed_ssim)
    assert honest in data
    out.write_bytes(data.replace(honest, struct.pack("<d", 0.9999)))
    result = invoke(runner, "verify", out, dpx_file)
    assert result.exit_code == 1
    assert "MISMATCH" in result.output


def test_verify_rejects_uncompressed(runner, tmp_path, dpx_file):
    tif = tmp_path / "plain.tif"
    invoke(runner, "convert", dpx_file, "-o", tmp_path)
    result = invoke(runner, "verify", tmp_path / "scan_0001.tif", dpx_file)
    assert result.exit_code == 2


# ---------------------------------------------------------------------------
# batch + report

def _write_manifest(tmp_path, dpx_file):
    manifest = tmp_path / "job.manifest"
    manifest.write_text(
        "input = %s\noutput_dir = %s\nprofile = C1\nworkers = 1\n"
        "job_id = clijob\n" % (dpx_file, tmp_path / "out"))
    return manifest


def test_batch_and_report(runner, tmp_path, dpx_file):
    manifest = _write_manifest(tmp_path, dpx_file)
    result = invoke(runner, "batch", manifest)
    assert result.exit_code == 0
    assert "1 done" in result.output
    assert "skipped: 0" in result.output

    # resume: nothing left to do
    result = invoke(runner, "batch", manifest)
    assert result.exit_code == 0
    assert "skipped: 1" in result.output

    journal = tmp_path / "out" / "clijob.journal"
    csv1 = invoke(runner, "report", journal, "--format", "csv")
    csv2 = invoke(runner, "report", journal, "--format", "csv")
    assert csv1.exit_code == 0
    assert csv1.output == csv2.output
    assert csv1.output.startswith("source_id,status,profile_id")

    as_json = invoke(runner, "--json", "report", journal)
    payload = json.loads(as_json.output)
    assert payload["summary"]["done_count"] == 1


def test_report_missing_journal_exits_2(runner, tmp_path):
    result = invoke(runner, "report", tmp_path / "none.journal")
    assert result.exit_code == 2


# ---------------------------------------------------------------------------
# config plumbing

def test_env_config_applies(runner, tmp_path, dpx_file):
    conf = tmp_path / "adaptix.conf"
    conf.write_text("analysis.spread_threshold = 2.0\n")
    plain = json.loads(invoke(runner, "--json", "analyze", dpx_file).output)
    tuned = json.loads(invoke(runner, "--json", "analyze", dpx_file,
                              env={"ADAPTIX_CONFIG": str(conf)}).output)
    # an unreachable spread threshold suppresses the smooth-gradient tiles
    assert plain["tile_flags"]["smooth_gradient"] > 0
    assert tuned["tile_flags"]["smooth_gradient"] == 0


def test_bad_config_exits_2(runner, tmp_path, dpx_file):
    conf = tmp_path / "bad.conf"
    conf.write_text("nonsense.key = 1\n")
    result = invoke(runner, "--config", conf, "analyze", dpx_file)
    assert result.exit_code == 2
