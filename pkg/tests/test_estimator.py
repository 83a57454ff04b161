import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from chandecomp import ChannelDecomposer
from chandecomp.channel import apply, random_channel


def test_get_params_and_clone():
    est = ChannelDecomposer(family="II", starts=3)
    params = est.get_params()
    assert params["family"] == "II" and params["starts"] == 3
    other = clone(est).set_params(starts=5)
    assert other.starts == 5 and est.starts == 3


def test_fit_predict_score():
    target = random_channel(2, 2, 4, seed=4)
    est = ChannelDecomposer(starts=3).fit(target)
    assert est.error_ < 1e-5
    assert est.n_features_in_ == 2
    assert est.weights_.shape == (2,)
    assert len(est.components_) == 2
    assert est.score(target) == pytest.approx(-est.error_, abs=1e-12)
    rho = np.array([[0.6, 0.2], [0.2, 0.4]])
    np.testing.assert_allclose(est.predict(rho), apply(target, rho), atol=1e-4)
    assert est.predict(np.stack([rho, rho])).shape == (2, 2, 2)


def test_fit_accepts_kraus_array():
    target = random_channel(2, 3, 2, seed=1)
    est = ChannelDecomposer(family=3, starts=2, target_error=1e-4).fit(np.asarray(target.kraus))
    assert est.reconstruct().m == 3


def test_not_fitted():
    with pytest.raises(NotFittedError):
        ChannelDecomposer().predict(np.eye(2) / 2)
