"""Classical simulation toolkit: CV stabilizer oracle, Gaussian/GKP simulators,
recurrent cells, and experiment harness."""

__all__ = ["__version__"]
__version__ = "0.1.0"
