"""Deterministic simulator and analysis toolkit for resource-sharing
philosophers on arbitrary multigraph topologies."""

__version__ = "0.1.0"
