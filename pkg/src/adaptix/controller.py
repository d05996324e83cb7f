"""Iterative compression loop: drive encode -> decode -> measure cycles
until a profile's quality thresholds are met at maximal compression.

Phase 1 probes the most aggressive quality scalar first, then runs a
seeded bisection for the largest q whose *measured* decode output meets the
global SSIM/PSNR thresholds.  Phase 2 re-encodes with halved quantizer
steps for tiles whose local SSIM sits below the profile's per-tile floor.
Phase 3 accepts, or falls back to the reversible lossless stream.

Thresholds are always checked on measured decode output; the validation
stage can never disagree with the accept decision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .analysis import FrameStats, SensitivityMap
from .codec import Bitstream, CompressionParams, decode, encode
from .codec.constants import MOD_MAX, MOD_MIN
from .errors import UnattainableError
from .frame import ContentFlag, Frame, FrameMetadata
from .metrics import QualityScore, SsimParams, ssim

# q interval below which bisection stops refining
Q_TOLERANCE = 1.0

# q seed from frame statistics: q0 = q_hi - 30*contrast - 2*min(noise, 10).
SEED_CONTRAST_COEF = 30.0
SEED_NOISE_COEF = 2.0
SEED_NOISE_CAP = 10.0


class Action(Enum):
    RAISE_Q = "raise_q"
    LOWER_Q = "lower_q"
    TILE_REFINE = "tile_refine"
    ACCEPT = "accept"
    FALLBACK_LOSSLESS = "fallback_lossless"


@dataclass
class Profile:
    id: str
    ssim_min: float
    psnr_min_db: float
    local_ssim_min: float
    max_iterations: int
    lossless_fallback: bool = True
    q_bounds: tuple = (0.0, 100.0)
    # The compression regime the profile promises.  When lossless fallback is
    # enabled and even the most aggressive lossy encode cannot reach this
    # ratio, the loss buys nothing worth certifying: the reversible stream is
    # emitted instead (the never-worse guarantee).  1.0 disables the floor.
    min_ratio: float = 1.0

    def __post_init__(self):
        if not (0 <= self.local_ssim_min <= 1 and 0 <= self.ssim_min <= 1):
            raise ValueError("ssim floors must lie in [0, 1]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.q_bounds[0] > self.q_bounds[1]:
            raise ValueError("q_bounds must be ordered")

    @property
    def forced_lossless(self) -> bool:
        return self.q_bounds[1] == 0.0


@dataclass
class TraceEntry:
    iteration: int
    q: float
    ssim: float
    psnr_db: float
    size_bytes: int
    action: Action


@dataclass
class IterationTrace:
    entries: list = field(default_factory=list)
    encode_cycles: int = 0

    def add(self, q, score, size, action):
        self.entries.append(TraceEntry(
            iteration=len(self.entries) + 1, q=q,
            ssim=score.ssim, psnr_db=score.psnr_db,
            size_bytes=size, action=action))

    def __len__(self):
        return len(self.entries)

    @property
    def final_action(self):
        return self.entries[-1].action if self.entries else None


def default_profiles(lossless_c0: bool = False) -> dict:
    """The three stock quality configurations.

    ``lossless_c0`` switches C0 from near-lossless thresholds to a forced
    reversible encode (q pinned to 0), where thresholds are moot.
    """
    c0_bounds = (0.0, 0.0) if lossless_c0 else (0.0, 60.0)
    return {
        "C0": Profile("C0", ssim_min=0.99, psnr_min_db=41.0, local_ssim_min=0.97,
                      max_iterations=8, lossless_fallback=True, q_bounds=c0_bounds,
                      min_ratio=2.0),
        "C1": Profile("C1", ssim_min=0.95, psnr_min_db=39.0, local_ssim_min=0.90,
                      max_iterations=12, lossless_fallback=True, q_bounds=(0.0, 85.0),
                      min_ratio=6.0),
        "C2": Profile("C2", ssim_min=0.90, psnr_min_db=33.0, local_ssim_min=0.82,
                      max_iterations=12, lossless_fallback=True, q_bounds=(0.0, 100.0),
                      min_ratio=8.0),
    }


def select_profile(metadata: FrameMetadata, stats: FrameStats,
                   user_choice: Optional[str] = None,
                   profiles: Optional[dict] = None) -> Profile:
    """User choice wins; otherwise banding risk or B&W content selects C0,
    everything else C1.  C2 is destructive and never auto-selected."""
    table = profiles or default_profiles()
    if user_choice is not None:
        return table[user_choice.upper()]
    if stats.banding_risk or ContentFlag.BW in metadata.content_flags:
        return table["C0"]
    return table["C1"]


def _seed_q(profile: Profile, stats: FrameStats) -> float:
    q_lo, q_hi = profile.q_bounds
    q0 = (q_hi - SEED_CONTRAST_COEF * stats.contrast_index
          - SEED_NOISE_COEF * min(stats.noise_sigma, SEED_NOISE_CAP))
    return min(max(q0, q_lo), q_hi)


def _meets_global(score: QualityScore, profile: Profile) -> bool:
    return score.ssim >= profile.ssim_min and score.psnr_db >= profile.psnr_min_db


def _local_violations(score: QualityScore, profile: Profile) -> np.ndarray:
    lmap = score.local_ssim_map
    with np.errstate(invalid="ignore"):
        return np.nan_to_num(lmap, nan=1.0) < profile.local_ssim_min


@dataclass
class _Candidate:
    q: float
    stream: Bitstream
    score: QualityScore
    modulation: np.ndarray


def compress_to_target(frame: Frame, profile: Profile, stats: FrameStats,
                       sensitivity: SensitivityMap,
                       ssim_params: Optional[SsimParams] = None):
    """Returns (Bitstream, QualityScore, IterationTrace).

    Raises :class:`UnattainableError` (carrying the best-effort stream and
    trace) when thresholds cannot be met and lossless fallback is disabled.
    """
    params = ssim_params or SsimParams()
    trace = IterationTrace()
    base_mod = np.clip(1.0 / np.asarray(sensitivity.weights, dtype=np.float64),
                       MOD_MIN, MOD_MAX)
    budget = profile.max_iterations
    cycles = 0

    def measure(q: float, modulation: np.ndarray) -> _Candidate:
        nonlocal cycles
        cycles += 1
        stream = encode(frame, CompressionParams(q=q, tile_modulation=modulation))
        decoded = decode(stream)
        score = ssim(frame, decoded, params)
        return _Candidate(q=q, stream=stream, score=score, modulation=modulation)

    def lossless_candidate() -> _Candidate:
        nonlocal cycles
        cycles += 1
        stream = encode(frame, CompressionParams(q=0.0))
        score = QualityScore(ssim=1.0, psnr_db=math.inf,
                             per_channel_ssim=[1.0] * frame.channels,
                             local_ssim_map=None)
        return _Candidate(q=0.0, stream=stream, score=score, modulation=base_mod)

    if profile.forced_lossless:
        cand = lossless_candidate()
        trace.add(0.0, cand.score, len(cand.stream), Action.ACCEPT)
        trace.encode_cycles = cycles
        return cand.stream, cand.score, trace

    q_lo, q_hi = profile.q_bounds
    best: Optional[_Candidate] = None
    raw_bytes = frame.raw_bytes

    def gain(candidate: _Candidate) -> float:
        return raw_bytes / len(candidate.stream)

    # reserve one cycle for the lossless escape hatch when enabled
    reserve = 1 if profile.lossless_fallback else 0
    phase1_budget = max(budget - 1 - reserve, 1)

    # probe the most aggressive setting first
    cand = measure(q_hi, base_mod)
    if profile.lossless_fallback and gain(cand) < profile.min_ratio:
        # stream size shrinks monotonically in q, so q_hi bounds the
        # achievable ratio: the profile's promised regime is out of reach
        # for every q, and the reversible stream dominates
        trace.add(cand.q, cand.score, len(cand.stream), Action.LOWER_Q)
        cand = lossless_candidate()
        trace.add(0.0, cand.score, len(cand.stream), Action.FALLBACK_LOSSLESS)
        trace.encode_cycles = cycles
        return cand.stream, cand.score, trace
    if _meets_global(cand.score, profile):
        best = cand
        trace.add(cand.q, cand.score, len(cand.stream), Action.RAISE_Q)
    else:
        trace.add(cand.q, cand.score, len(cand.stream), Action.LOWER_Q)
        lo, hi = q_lo, q_hi
        q0 = _seed_q(profile, stats)
        next_q = q0 if q0 < q_hi - Q_TOLERANCE else 0.5 * (lo + hi)
        while cycles < phase1_budget and hi - lo > Q_TOLERANCE:
            cand = measure(next_q, base_mod)
            if _meets_global(cand.score, profile):
                best = cand
                lo = cand.q
                trace.add(cand.q, cand.score, len(cand.stream), Action.RAISE_Q)
            else:
                hi = cand.q
                trace.add(cand.q, cand.score, len(cand.stream), Action.LOWER_Q)
            next_q = 0.5 * (lo + hi)
        if best is None and cycles < phase1_budget and q_lo < hi:
            cand = measure(q_lo, base_mod)
            if _meets_global(cand.score, profile):
                best = cand
                trace.add(cand.q, cand.score, len(cand.stream), Action.RAISE_Q)
            else:
                trace.add(cand.q, cand.score, len(cand.stream), Action.LOWER_Q)

    # Phase 2: per-tile refinement toward the local SSIM floor
    if best is not None:
        while cycles < budget - reserve:
            violations = _local_violations(best.score, profile)
            if not violations.any():
                break
            modulation = best.modulation.copy()
            saturated = modulation[violations] <= MOD_MIN + 1e-12
            if saturated.all():
                break
            modulation[violations] = np.maximum(modulation[violations] * 0.5, MOD_MIN)
            cand = measure(best.q, modulation)
            trace.add(cand.q, cand.score, len(cand.stream), Action.TILE_REFINE)
            if not _meets_global(cand.score, profile):  # pragma: no cover
                break
            best = cand

    if (best is not None and not _local_violations(best.score, profile).any()
            and (not profile.lossless_fallback or gain(best) >= profile.min_ratio)):
        trace.add(best.q, best.score, len(best.stream), Action.ACCEPT)
        trace.encode_cycles = cycles
        return best.stream, best.score, trace

    # Phase 3: thresholds (or the profile's compression regime) unmet
    if profile.lossless_fallback:
        cand = lossless_candidate()
        trace.add(0.0, cand.score, len(cand.stream), Action.FALLBACK_LOSSLESS)
        trace.encode_cycles = cycles
        return cand.stream, cand.score, trace

    err_cand = best
    trace.encode_cycles = cycles
    raise UnattainableError(
        "quality thresholds for %s unattainable within %d cycles"
        % (profile.id, cycles),
        stream=err_cand.stream if err_cand else cand.stream,
        score=err_cand.score if err_cand else cand.score,
        trace=trace,
    )
