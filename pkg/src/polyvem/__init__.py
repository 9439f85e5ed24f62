"""polyvem: virtual element solver for Poisson problems on polytopal meshes."""

__version__ = "0.1.0"
