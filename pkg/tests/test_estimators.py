import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from itebounds.binary import BinaryMarginals, classify_best
from itebounds.core import DiscretePMF
from itebounds.estimators import (BinaryITEPredictor, DiscreteITEInterval, ITEPmfBounds,
                                  MakarovCdfBounds)
from itebounds.frechet import ite_pmf_bounds
from itebounds.makarov import makarov_lower, makarov_upper


@pytest.fixture
def samples(rng):
    treat = rng.random(400) < 0.5
    y = np.where(treat, rng.integers(0, 4, 400), rng.integers(0, 3, 400))
    return y, treat.astype(int)


def test_pmf_and_cdf_transformers(samples):
    y, d = samples
    p1, p0 = DiscretePMF.from_samples(y[d == 1]), DiscretePMF.from_samples(y[d == 0])
    deltas = [-2, 0, 1, 3]
    out = ITEPmfBounds().fit(y, d).transform(deltas)
    assert out.shape == (4, 2)
    for row, v in zip(out, deltas):
        assert tuple(row) == ite_pmf_bounds(p1, p0, v, certificates=False).as_tuple()
    cdf = MakarovCdfBounds().fit(y, d).transform(deltas)
    assert cdf[:, 0].tolist() == [makarov_lower(p1, p0, v) for v in deltas]
    assert cdf[:, 1].tolist() == [makarov_upper(p1, p0, v) for v in deltas]


def test_not_fitted_and_bad_inputs(samples):
    y, d = samples
    with pytest.raises(NotFittedError):
        ITEPmfBounds().transform([0])
    with pytest.raises(ValueError):
        ITEPmfBounds().fit(y, d * 2)
    with pytest.raises(ValueError):
        ITEPmfBounds().fit(y, np.ones_like(d))
    with pytest.raises(ValueError):
        ITEPmfBounds().fit(y[:-1], d)


def test_interval_estimator(samples):
    y, d = samples
    est = DiscreteITEInterval(alpha=0.1)
    assert est.get_params() == {"alpha": 0.1, "mode": "sharp"}
    est.fit(y, d)
    lo, hi = est.interval_
    assert est.predict(np.zeros((3, 1))).tolist() == [[lo, hi]] * 3
    assert all(lo <= p <= hi for p in est.must_include_)
    cons = clone(est).set_params(mode="conservative").fit(y, d)
    assert cons.interval_[1] - cons.interval_[0] >= hi - lo
    with pytest.raises(ValueError):
        DiscreteITEInterval(alpha=0.9).fit(y, d)


def test_binary_predictor_strata():
    # stratum 0: p0 = 0.01, p1 = 0.02; stratum 1: p0 = 0, p1 = 1
    X = np.repeat([[0], [1]], [400, 200], axis=0)
    d = np.r_[np.tile([1, 0], 200), np.tile([1, 0], 100)]
    y = np.zeros(600, dtype=int)
    y[[0, 2, 4, 6]] = 1                       # 4 of 200 treated
    y[[1, 3]] = 1                             # 2 of 200 controls
    y[400:][d[400:] == 1] = 1
    est = BinaryITEPredictor(alpha=0.05).fit(X, y, d)
    assert est.marginals_[(0,)] == BinaryMarginals(0.01, 0.02)
    assert est.predict([[0], [1]]).tolist() == ["{0}", "{1}"]
    assert est.coverage_[(1,)] == 1.0
    with pytest.raises(ValueError):
        est.predict([[2]])
    with pytest.raises(ValueError):
        est.predict()
    pooled = clone(est).fit(None, y, d)
    m = pooled.marginals_[()]
    assert pooled.predict().tolist() == [classify_best(m, 0.05)[0].label]
    with pytest.raises(ValueError):
        BinaryITEPredictor().fit(None, y + 1, d)
