"""Perceive-reason-act simulation of virtual-agent head rotation."""

__version__ = "0.1.0"
