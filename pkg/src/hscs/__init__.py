"""Co-saliency detection for groups of RGBD images via hierarchical sparse reconstruction."""
from .config import PipelineConfig
from .dataset_io import ImageGroup, RgbdImage, load_group
from .pipeline import detect_group, run_group

__all__ = ["PipelineConfig", "ImageGroup", "RgbdImage", "load_group", "detect_group", "run_group"]
__version__ = "0.1.0"
