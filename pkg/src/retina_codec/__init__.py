"""Time-scalable, retina-inspired still-image codec."""

from .codec import CodecConfig, EncodedImage, RetinaCodec, decode, deserialize, encode, serialize
from .dynamics import InnerParams, LutTable, build_cg_lut, invert_lut, rectifier, simulate_bipolar, simulate_ganglionic
from .lif import LifParams, build_lif_lut, decode_count, lif_count
from .metrics import entropy_bpp, mean_ssim, psnr
from .transform import analyze, apply_delay, build_dog_bank, compute_duals, synthesize

__version__ = "0.1.0"

__all__ = [
    "CodecConfig",
    "EncodedImage",
    "RetinaCodec",
    "InnerParams",
    "LifParams",
    "LutTable",
    "analyze",
    "apply_delay",
    "build_cg_lut",
    "build_dog_bank",
    "build_lif_lut",
    "compute_duals",
    "decode",
    "decode_count",
    "deserialize",
    "encode",
    "entropy_bpp",
    "invert_lut",
    "lif_count",
    "mean_ssim",
    "psnr",
    "rectifier",
    "serialize",
    "simulate_bipolar",
    "simulate_ganglionic",
    "synthesize",
]
