"""Original three-block and blocked two-block Gibbs samplers for Bayesian shrinkage regression."""

__version__ = "0.1.0"
