"""Sparse, decision-affine polynomial variables and an SOS-to-SDP builder."""

__version__ = "0.1.0"
