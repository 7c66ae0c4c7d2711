"""Fluidic logic circuit toolkit: FC-HDL compiler, simulator, verifier,
placement, heat-seal pattern generation, agent pipeline, service and CLI."""

from ._kernels import BACKEND as KERNEL_BACKEND  # noqa: F401

__version__ = "0.1.0"
