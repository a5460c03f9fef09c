"""Estimator-style facade: ``CascadeRealizer(...).fit(seed).predict(points)``.

Nothing is learned; ``fit`` compiles the exact network for V^n g and
``predict`` evaluates it.  The class follows the scikit-learn conventions
(constructor stores parameters only, fitted state ends in ``_``) so it can
be cloned and inspected with the usual tools.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .assembler import CascadeParams, build_seed_net
from .cpwl import CpwlFunction2D
from .network import evaluate_batch, evaluate_batch_float
from .rational import as_fraction
from .refinement import Mask, Window, oracle_direct_batch, tensor_mask

__all__ = ["CascadeRealizer"]


class CascadeRealizer(BaseEstimator):
    """Exact ReLU realization of n refinement steps applied to a seed.

    Parameters
    ----------
    mask : Mask or None
        Refinement mask; ``None`` means the tensor hat mask t = (1/2, 1, 1/2).
    window : (int, int)
    n : int
    rho, eps_bar, delta_bar : rational or "p/q" string
    """

    def __init__(self, mask=None, window=(2, 2), n=1, rho="1/4", eps_bar="1/8", delta_bar="1/2"):
        self.mask = mask
        self.window = window
        self.n = n
        self.rho = rho
        self.eps_bar = eps_bar
        self.delta_bar = delta_bar

    def _mask(self) -> Mask:
        return self.mask if self.mask is not None else tensor_mask([Fraction(1, 2), 1, Fraction(1, 2)])

    def fit(self, X: CpwlFunction2D, y=None):
        """Compile the network for the seed ``X`` (a compactly supported CPwL function)."""
        if not isinstance(X, CpwlFunction2D):
            raise TypeError("fit expects the seed as a CpwlFunction2D")
        self.params_ = CascadeParams(as_fraction(self.rho), as_fraction(self.eps_bar), as_fraction(self.delta_bar))
        self.window_ = Window(*self.window)
        self.mask_ = self._mask()
        self.seed_ = X
        self.realization_ = build_seed_net(X, self.mask_, self.window_, self.params_, int(self.n))
        self.network_ = self.realization_.network
        self.stats_ = self.realization_.stats
        return self

    def predict(self, X) -> np.ndarray:
        """float64 values at the rows of ``X`` (shape (m, 2))."""
        check_is_fitted(self, "network_")
        return evaluate_batch_float(self.network_, [tuple(p) for p in X])[:, 0]

    def predict_exact(self, X) -> list:
        """Exact rational values at the rows of ``X``."""
        check_is_fitted(self, "network_")
        return [v[0] for v in evaluate_batch(self.network_, [tuple(p) for p in X])]

    def reference(self, X) -> list:
        """Direct recursion values of V^n g at the rows of ``X``."""
        check_is_fitted(self, "network_")
        return oracle_direct_batch(self.seed_, self.mask_, int(self.n), [tuple(p) for p in X])
