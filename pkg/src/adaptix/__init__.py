"""adaptix: quality-targeted adaptive compression for film-scan frames.

Pipeline stages: DPX/TIFF ingest -> frame analysis -> tiled wavelet codec
(ATC1) driven by an iterative quality controller -> sealed TIFF output,
plus batch orchestration and reporting.
"""

from .analysis import AnalysisConfig, FrameStats, SensitivityMap, TileFlag, analyze_frame
from .codec import Bitstream, CompressionParams, decode, encode
from .config import ToolConfig, load_config
from .controller import (
    Action,
    IterationTrace,
    Profile,
    compress_to_target,
    default_profiles,
    select_profile,
)
from .dpx import parse_dpx
from .errors import AdaptixError
from .frame import ColorSpace, ContentFlag, Frame, FrameMetadata
from .metrics import QualityScore, SsimParams, psnr, ssim
from .pipeline import (
    BatchSummary,
    FrameRecord,
    JobManifest,
    compute_reduction,
    export_report,
    run_batch,
)
from .tiff import Seal, parse_tiff, write_tiff

__version__ = "1.0.0"

__all__ = [
    "AdaptixError", "Action", "AnalysisConfig", "BatchSummary", "Bitstream",
    "ColorSpace", "CompressionParams", "ContentFlag", "Frame", "FrameMetadata",
    "FrameRecord", "FrameStats", "IterationTrace", "JobManifest", "Profile",
    "QualityScore", "Seal", "SensitivityMap", "SsimParams", "TileFlag",
    "ToolConfig", "analyze_frame", "compress_to_target", "compute_reduction",
    "decode", "default_profiles", "encode", "export_report", "load_config",
    "parse_dpx", "parse_tiff", "psnr", "run_batch", "select_profile", "ssim",
    "write_tiff", "__version__",
]
