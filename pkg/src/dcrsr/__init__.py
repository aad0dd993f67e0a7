"""dcrsr: densely-connected-residual super-resolution toolkit."""

from .config import ExperimentConfig, vam_defaults
from .generator import GeneratorConfig
from .model import SuperResolutionNet, build_model
from .reconstruction import DRMConfig

__all__ = [
    "DRMConfig",
    "ExperimentConfig",
    "GeneratorConfig",
    "SuperResolutionNet",
    "build_model",
    "vam_defaults",
]

__version__ = "0.1.0"
