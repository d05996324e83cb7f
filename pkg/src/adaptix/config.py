"""Plain-text key/value configuration shared by the CLI and the pipeline.

One format serves both the tool configuration and the batch manifest:

    # comment
    schema_version = 1
    analysis.grad_threshold = 1.5
    profile.C1.psnr_min_db = 40
    input = scans/reel_04/*.dpx

Keys are dot-namespaced; values are scalars (``true``/``false`` for
booleans) except ``analysis.range_percentiles`` which takes a comma pair.
Unknown keys are errors -- a typo silently ignored would change archival
output.  The file identified by ``--config`` or the ``ADAPTIX_CONFIG``
environment variable is applied before any manifest overrides.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field, replace
from typing import Optional

from .analysis import AnalysisConfig
from .controller import Profile, default_profiles
from .errors import ConfigError
from .metrics import SsimParams

SCHEMA_VERSION = 1

ENV_CONFIG = "ADAPTIX_CONFIG"

# profile fields settable from a config file, with coercion types
_PROFILE_FIELDS = {
    "ssim_min": float,
    "psnr_min_db": float,
    "local_ssim_min": float,
    "max_iterations": int,
    "lossless_fallback": bool,
    "min_ratio": float,
    "q_lo": float,
    "q_hi": float,
}

_METRIC_FIELDS = {
    "window": int,
    "gaussian_sigma": float,
    "k1": float,
    "k2": float,
}


@dataclass
class ToolConfig:
    """Resolved configuration: analysis constants, SSIM parameters and the
    profile table, after file overrides."""

    schema_version: int = SCHEMA_VERSION
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    ssim_params: SsimParams = field(default_factory=SsimParams)
    profiles: dict = field(default_factory=default_profiles)


def parse_kv(text: str, source: str = "<config>"):
    """Parse ``key = value`` lines into an ordered list of
    (line_number, key, value) triples; comments and blanks skipped."""
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError("%s:%d: expected key = value, got %r"
                              % (source, lineno, line))
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError("%s:%d: empty key" % (source, lineno))
        entries.append((lineno, key, value))
    return entries


def _coerce(value: str, typ, where: str):
    try:
        if typ is bool:
            lowered = value.lower()
            if lowered in ("true", "1", "yes", "on"):
                return True
            if lowered in ("false", "0", "no", "off"):
                return False
            raise ValueError(value)
        return typ(value)
    except ValueError:
        raise ConfigError("%s: cannot read %r as %s" % (where, value, typ.__name__))


def _analysis_field_types():
    return {f.name: f for f in dataclasses.fields(AnalysisConfig)}


def apply_entries(config: ToolConfig, entries, source: str = "<config>") -> ToolConfig:
    """Apply (lineno, key, value) triples to a copy of ``config``."""
    analysis_fields = _analysis_field_types()
    analysis = replace(config.analysis)
    metric_kwargs = {}
    profiles = {pid: replace(p) for pid, p in config.profiles.items()}
    schema = config.schema_version

    for lineno, key, value in entries:
        where = "%s:%d: %s" % (source, lineno, key)
        parts = key.split(".")
        if key == "schema_version":
            schema = _coerce(value, int, where)
            if schema != SCHEMA_VERSION:
                raise ConfigError("%s: unsupported schema version %d (supported: %d)"
                                  % (where, schema, SCHEMA_VERSION))
        elif parts[0] == "analysis" and len(parts) == 2:
            name = parts[1]
            if name not in analysis_fields:
                raise ConfigError("%s: unknown analysis setting" % where)
            if name == "range_percentiles":
                lo, _, hi = value.partition(",")
                setattr(analysis, name, (_coerce(lo.strip(), float, where),
                                         _coerce(hi.strip(), float, where)))
            else:
                typ = type(getattr(analysis, name))
                setattr(analysis, name, _coerce(value, typ, where))
        elif parts[0] == "metrics" and len(parts) == 2:
            name = parts[1]
            if name not in _METRIC_FIELDS:
                raise ConfigError("%s: unknown metrics setting" % where)
            metric_kwargs[name] = _coerce(value, _METRIC_FIELDS[name], where)
        elif parts[0] == "profile" and len(parts) == 3:
            pid, name = parts[1].upper(), parts[2]
            if pid not in profiles:
                raise ConfigError("%s: unknown profile %r" % (where, parts[1]))
            if name not in _PROFILE_FIELDS:
                raise ConfigError("%s: unknown profile setting" % where)
            val = _coerce(value, _PROFILE_FIELDS[name], where)
            prof = profiles[pid]
            try:
                if name == "q_lo":
                    profiles[pid] = replace(prof, q_bounds=(val, prof.q_bounds[1]))
                elif name == "q_hi":
                    profiles[pid] = replace(prof, q_bounds=(prof.q_bounds[0], val))
                else:
                    profiles[pid] = replace(prof, **{name: val})
            except ValueError as exc:
                raise ConfigError("%s: invalid value (%s)" % (where, exc))
        else:
            raise ConfigError("%s: unknown setting" % where)

    try:
        ssim_params = replace(config.ssim_params, **metric_kwargs)
        for pid, prof in profiles.items():
            Profile(**dataclasses.asdict(prof))  # re-run invariant checks
    except ValueError as exc:
        raise ConfigError("%s: invalid value (%s)" % (source, exc))
    return ToolConfig(schema_version=schema, analysis=analysis,
                      ssim_params=ssim_params, profiles=profiles)


def load_config(path: Optional[str] = None) -> ToolConfig:
    """Build the effective configuration: defaults, then the file named by
    ``path`` or the ``ADAPTIX_CONFIG`` environment variable (if any)."""
    config = ToolConfig()
    effective = path or os.environ.get(ENV_CONFIG)
    if not effective:
        return config
    try:
        with open(effective, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (effective, exc))
    return apply_entries(config, parse_kv(text, effective), effective)
