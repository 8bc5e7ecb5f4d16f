"""Secrecy rate bounds for the finite-state multiple-access wiretap channel with delayed feedback."""

__version__ = "0.1.0"
