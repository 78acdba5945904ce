"""Loader-side binding for the voxelaug augmentation engine.

Exposes :class:`ArrayBatchView` (the array contract), :func:`apply` (one
pipeline run over a view), and :class:`LoaderTransform` (the same call as a
mapping-to-mapping loader plugin).  Versioned in lockstep with the engine.
"""

from .binding import ArrayBatchView, LoaderTransform, apply

__version__ = "0.1.0"

__all__ = ["ArrayBatchView", "LoaderTransform", "apply", "__version__"]
