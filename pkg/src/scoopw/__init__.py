"""Workbench for comparing SCOOP execution models by explicit-state exploration."""

__version__ = "0.1.0"
