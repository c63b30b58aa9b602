"""Glue scripts bridging external neural components into the s2m
file contracts.

Everything here is plumbing: run a model (or a deterministic stand-in),
write its outputs in the exact NPY-subset / PNG / JSON formats the
primary toolkit ingests, and never compute metrics or fuse masks.
"""

__version__ = "0.1.0"


class AdapterError(RuntimeError):
    """Raised when a job cannot be carried out (bad model, bad inputs)."""
