"""Walsh-model biest and bilinear Hilbert transform toolkit."""

from __future__ import annotations

__version__ = "0.1.0"
