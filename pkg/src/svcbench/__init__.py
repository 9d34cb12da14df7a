"""svcbench: a mode-decision engine and benchmark harness for scalable
video coding, with SOD/DCOG macroblock classification and an exhaustive
full-search baseline to measure against."""

__version__ = "0.1.0"

from .kernels import backend  # noqa: F401
