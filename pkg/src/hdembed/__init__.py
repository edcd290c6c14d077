"""Binary hyperdimensional embeddings for multi-band real-valued features.

Subpackages cover the full pipeline: packed hypervector algebra (``hv``),
quantization / random-projection / trained-projection embeddings
(``quantize``, ``randproj``, ``learnproj``), the Riemannian covariance
feature front-end (``riemann``), the per-band spatial encoder
(``encoder``), associative-memory classification (``am``), dataset I/O and
synthesis (``data``), and the experiment CLI (``cli``).
"""

from .backend import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
