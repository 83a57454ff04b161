"""scikit-learn style wrapper around :func:`chandecomp.decompose.decompose`."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .channel import apply, choi_from_kraus
from .decompose import DecompositionProblem, decompose
from .metrics import trace_distance
from .validation import check_channel

__all__ = ["ChannelDecomposer"]


class ChannelDecomposer(BaseEstimator):
    """Fit a convex mixture of generalized extreme channels to a channel.

    ``fit`` takes the target channel (a :class:`QuantumChannel`, a Kraus
    list or an (r, m, n) array) in place of a design matrix.

    Attributes set by ``fit``: ``result_``, ``weights_``, ``components_``
    (list of :class:`AnsatzSpec`), ``error_``, ``diamond_bound_``,
    ``n_evals_``, ``n_features_in_`` (the input dimension ``n``).

    Examples
    --------
    >>> from chandecomp import ChannelDecomposer, random_channel
    >>> est = ChannelDecomposer(family="I", starts=5).fit(random_channel(2, 2, 4, seed=3))
    >>> est.error_ < 1e-5
    True
    """

    def __init__(self, family="I", components=None, starts=20, max_evals_per_start=50_000,
                 target_error=1e-5, method="lm", refine=False, random_state=0, n_jobs=None):
        self.family = family
        self.components = components
        self.starts = starts
        self.max_evals_per_start = max_evals_per_start
        self.target_error = target_error
        self.method = method
        self.refine = refine
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _problem(self, target):
        return DecompositionProblem(
            target=target,
            family=self.family,
            components=self.components,
            starts=self.starts,
            max_evals_per_start=self.max_evals_per_start,
            target_error=self.target_error,
            seed=self.random_state,
            method=self.method,
            refine=self.refine,
            workers=self.n_jobs,
        )

    def fit(self, X, y=None):
        target = check_channel(X)
        res = decompose(self._problem(target))
        self.target_ = target
        self.result_ = res
        self.weights_ = res.probs
        self.components_ = list(res.specs)
        self.error_ = res.achieved_error
        self.diamond_bound_ = res.diamond_upper_bound
        self.n_evals_ = res.evals_used
        self.converged_ = res.converged
        self.n_features_in_ = target.n
        return self

    def reconstruct(self):
        """The fitted mixture as a :class:`QuantumChannel`."""
        check_is_fitted(self, "result_")
        return self.result_.channel()

    def predict(self, X):
        """Apply the fitted mixture to one density matrix or a stack of them."""
        check_is_fitted(self, "result_")
        ch = self.reconstruct()
        X = np.asarray(X)
        if X.ndim == 2:
            return apply(ch, X)
        return np.stack([apply(ch, rho) for rho in X])

    def score(self, X, y=None):
        """Negative Choi trace distance between ``X`` and the fitted mixture."""
        check_is_fitted(self, "result_")
        ch = self.reconstruct()
        target = check_channel(X, n=ch.n, m=ch.m)
        return -trace_distance(choi_from_kraus(target), choi_from_kraus(ch))
