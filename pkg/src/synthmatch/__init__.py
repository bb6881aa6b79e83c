"""Sound matching with a modular synthesizer and black-box optimizers."""

from .params import Patch, descriptor_table, random_patch
from .spectral import LossConfig, multires_loss
from .synth import RenderConfig, render

__version__ = "0.1.0"

__all__ = ["Patch", "descriptor_table", "random_patch", "LossConfig", "multires_loss", "RenderConfig", "render"]
