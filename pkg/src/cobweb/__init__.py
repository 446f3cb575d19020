"""Ball packings of hyperbolic cobweb manifolds in the projective metric model."""

__version__ = "0.1.0"
