"""rarelab: rare-event reliability estimation and counterexample benchmarks.

Subset simulation with component-wise Metropolis resampling, crude Monte
Carlo, FORM/SORM geometric analysis, exact/asymptotic reference
probabilities, and ensemble diagnostics, wrapped in a CSV-emitting CLI.
"""

__version__ = "0.1.0"

from .kernels import HAVE_COMPILED

__all__ = ["HAVE_COMPILED", "__version__"]
