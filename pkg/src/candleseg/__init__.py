"""Egg-embryo detection: CIELAB K-means segmentation followed by grayscale
enhancement, morphology and Canny edges, with MSE/SSIM evaluation."""

from .colorspace import LabImage, WhitePoint, g_forward, g_inverse, lab_to_rgb, rgb_to_gray, rgb_to_lab
from .config import PipelineConfig, load_config
from .enhance import ClaheParams, clahe, compute_clip_limit, equalize, histogram
from .errors import CandleSegError
from .clustering import ClusterModel, KMeansOptions, SegmentationResult, kmeans, segment_lab
from .metrics import MetricsReport, SsimParams, mse, ssim
from .morphology import CannyParams, Strel, binarize_otsu, canny, dilate, make_line_strel, thicken
from .phantom import make_phantom
from .pipeline import run_pipeline
from .raster import BinaryMask, GrayImage, RasterImage, Rect, crop, load_image, save_image

__all__ = [
    "BinaryMask",
    "CandleSegError",
    "CannyParams",
    "ClaheParams",
    "ClusterModel",
    "GrayImage",
    "KMeansOptions",
    "LabImage",
    "MetricsReport",
    "PipelineConfig",
    "RasterImage",
    "Rect",
    "SegmentationResult",
    "SsimParams",
    "Strel",
    "WhitePoint",
    "binarize_otsu",
    "canny",
    "clahe",
    "compute_clip_limit",
    "crop",
    "dilate",
    "equalize",
    "g_forward",
    "g_inverse",
    "histogram",
    "kmeans",
    "lab_to_rgb",
    "load_config",
    "load_image",
    "make_line_strel",
    "make_phantom",
    "mse",
    "rgb_to_gray",
    "rgb_to_lab",
    "run_pipeline",
    "save_image",
    "segment_lab",
    "ssim",
    "thicken",
]

__version__ = "0.1.0"
