"""Exact bracket/operator algebra and solvable nonlinear-oscillator workbench."""

__version__ = "0.1.0"
