"""Numerical experiments on eigenfunction restriction to geodesics on surfaces."""

__version__ = "0.1.0"

__all__ = ["bessel", "covers", "geodesics", "quadrature", "restriction", "spectral",
           "surfaces", "wavekernel", "__version__"]
