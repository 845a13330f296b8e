"""Linear response of expanding circle maps and perturbed cat maps from periodic orbits."""
__version__ = "0.1.0"
