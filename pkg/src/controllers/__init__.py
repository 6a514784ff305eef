"""Controllers tying configuration, training and reports together."""

from .run_controller import RunController

__all__ = ['RunController']
