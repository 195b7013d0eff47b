"""Heavy-tailed multiple-stable model: exact constants and Monte Carlo verification.

The package is organized as

* :mod:`stabreg.renewal`  -- discrete infinite-mean renewal laws, exact renewal
  mass recursions, and samplers (plain, delayed, window-conditioned, intersected);
* :mod:`stabreg.theory`   -- closed-form constants: regime classification,
  extremal indices, normalizing sequences, tail asymptotes;
* :mod:`stabreg.pathsim`  -- finite-window simulation of the model via the
  thinned Poisson series representation;
* :mod:`stabreg.extremes` -- Monte Carlo estimators: tail process, cluster
  sizes, extremal index, anti-clustering curve;
* :mod:`stabreg.cli`      -- reproducible experiment runner and reports.
"""

__version__ = "0.1.0"

from .renewal import DiscreteParetoLaw, InterRenewalLaw, RenewalPath
from .theory import ModelParams, classify_regime, extremal_index

__all__ = [
    "DiscreteParetoLaw",
    "InterRenewalLaw",
    "RenewalPath",
    "ModelParams",
    "classify_regime",
    "extremal_index",
    "__version__",
]
