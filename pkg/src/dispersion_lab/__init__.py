"""Second-order coding rates with feedback: channel dispersion, controlled walks, diffusion limits."""

__version__ = "0.1.0"
