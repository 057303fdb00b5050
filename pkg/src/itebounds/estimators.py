"""scikit-learn style wrappers that fit margins from (outcome, treatment) samples."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, column_or_1d

from .binary import BinaryMarginals, classify_best, valid_sets, worst_case_coverage
from .core import DiscretePMF, check_alpha
from .frechet import ite_pmf_bounds
from .intervals import minimal_valid_interval
from .makarov import makarov_lower, makarov_upper


def _split_arms(y, treatment) -> tuple[np.ndarray, np.ndarray]:
    y = column_or_1d(check_array(np.asarray(y, dtype=float).reshape(-1, 1)), warn=False)
    d = column_or_1d(np.asarray(treatment), warn=False)
    if d.shape != y.shape:
        raise ValueError(f"y has {y.size} entries but treatment has {d.size}")
    if not np.isin(d, (0, 1)).all():
        raise ValueError("treatment must be coded 0 (control) / 1 (treated)")
    d = d.astype(bool)
    if d.all() or not d.any():
        raise ValueError("both arms need at least one observation")
    return y[d], y[~d]


class _MarginFit(BaseEstimator):
    def fit(self, y, treatment):
        y1, y0 = _split_arms(y, treatment)
        self.pmf1_ = DiscretePMF.from_samples(y1)
        self.pmf0_ = DiscretePMF.from_samples(y0)
        return self


class ITEPmfBounds(TransformerMixin, _MarginFit):
    """Sharp bounds on P(Y1 - Y0 = delta); ``transform`` maps deltas to (lower, upper) rows."""

    def transform(self, deltas):
        check_is_fitted(self, "pmf1_")
        d = column_or_1d(check_array(np.asarray(deltas, dtype=float).reshape(-1, 1)), warn=False)
        return np.array([ite_pmf_bounds(self.pmf1_, self.pmf0_, v, certificates=False).as_tuple()
                         for v in d]).reshape(-1, 2)


class MakarovCdfBounds(TransformerMixin, _MarginFit):
    """Sharp bounds on P(Y1 - Y0 <= delta); ``transform`` maps deltas to (lower, upper) rows."""

    def transform(self, deltas):
        check_is_fitted(self, "pmf1_")
        d = column_or_1d(check_array(np.asarray(deltas, dtype=float).reshape(-1, 1)), warn=False)
        return np.array([(makarov_lower(self.pmf1_, self.pmf0_, v),
                          makarov_upper(self.pmf1_, self.pmf0_, v)) for v in d]).reshape(-1, 2)


class DiscreteITEInterval(_MarginFit):
    """Shortest interval with worst-case coverage >= 1 - alpha for discrete outcomes."""

    def __init__(self, alpha: float = 0.05, mode: str = "sharp"):
        self.alpha = alpha
        self.mode = mode

    def fit(self, y, treatment):
        check_alpha(self.alpha)
        super().fit(y, treatment)
        res = minimal_valid_interval(self.pmf1_, self.pmf0_, self.alpha, self.mode)
        self.interval_ = (res.interval.lo, res.interval.hi)
        self.worst_case_coverage_ = res.worst_case_coverage
        self.co_optimal_ = [(iv.lo, iv.hi) for iv in res.co_optimal]
        self.must_include_ = res.must_include
        return self

    def predict(self, X=None):
        """The fitted interval, repeated once per row of ``X`` (one row if ``X`` is None)."""
        check_is_fitted(self, "interval_")
        n = 1 if X is None else check_array(X, ensure_min_features=0).shape[0]
        return np.tile(np.asarray(self.interval_, dtype=float), (n, 1))


class BinaryITEPredictor(BaseEstimator):
    """Best worst-case prediction set for a binary effect, per covariate stratum.

    ``fit`` groups rows by the exact value of ``X`` (every distinct row is a
    stratum; ``X=None`` means one stratum) and classifies each stratum from
    its arm-wise recovery rates. ``predict`` returns set labels such as
    ``"{0}"`` or ``"[0,1]"``; on a tie the first set in the deterministic
    order is returned and all of them stay in ``best_sets_``.
    """

    def __init__(self, alpha: float = 0.05):
        self.alpha = alpha

    @staticmethod
    def _keys(X, n: int) -> list:
        if X is None:
            return [()] * n
        arr = check_array(X, dtype=None, ensure_min_features=1)
        if arr.shape[0] != n:
            raise ValueError(f"X has {arr.shape[0]} rows, expected {n}")
        return [tuple(row.tolist()) for row in arr]

    def fit(self, X, y, treatment):
        alpha = check_alpha(self.alpha)
        y = column_or_1d(np.asarray(y), warn=False)
        if not np.isin(y, (0, 1)).all():
            raise ValueError("y must be binary (0/1)")
        d = column_or_1d(np.asarray(treatment), warn=False)
        if d.shape != y.shape:
            raise ValueError("y and treatment must have the same length")
        keys = self._keys(X, y.size)
        self.marginals_, self.best_sets_, self.valid_sets_, self.coverage_ = {}, {}, {}, {}
        for key in sorted(set(keys)):
            mask = np.array([k == key for k in keys])
            y1, y0 = _split_arms(y[mask], d[mask])
            m = BinaryMarginals(float(y0.mean()), float(y1.mean()))
            best = classify_best(m, alpha)
            self.marginals_[key] = m
            self.best_sets_[key] = best
            self.valid_sets_[key] = valid_sets(m, alpha)
            self.coverage_[key] = worst_case_coverage(m, best[0])
        self.n_features_in_ = 0 if X is None else check_array(X, dtype=None).shape[1]
        return self

    def predict(self, X=None):
        check_is_fitted(self, "best_sets_")
        if X is None:
            if () not in self.best_sets_:
                raise ValueError("model was fitted with covariates; pass X")
            return np.array([self.best_sets_[()][0].label])
        out = []
        for key in self._keys(X, check_array(X, dtype=None).shape[0]):
            if key not in self.best_sets_:
                raise ValueError(f"stratum {key} was not seen during fit")
            out.append(self.best_sets_[key][0].label)
        return np.array(out)
