import numpy as np
import pytest

from discrete_bilal import distribution as db
from discrete_bilal.data import SurvivalDataset
from discrete_bilal.datasets import load_builtin


@pytest.fixture(scope="session")
def leukemia():
    return load_builtin("leukemia").data


@pytest.fixture(scope="session")
def pelvic():
    return load_builtin("pelvic").data


def simulate_censored(beta, n, rng, censor_frac=0.3, eta=0.0, admin=None):
    """DB times with independent random censoring, optional cure fraction and admin cut-off.

    A ``censor_frac`` share of subjects get a censoring time ``C`` uniform on
    ``0..3*E[T]``; they are recorded as censored at ``C`` when ``T > C``.
    """
    t = db.sample(beta, rng, n)
    status = np.ones(n, dtype=np.int8)
    if eta > 0.0:
        cured = rng.random(n) < eta
        t = np.where(cured, 10**9, t)
    if censor_frac > 0.0:
        pick = rng.random(n) < censor_frac
        c = rng.integers(0, int(3 * db.mean(beta)) + 1, size=n)
        cens = pick & (t > c)
        t = np.where(cens, c, t)
        status[cens] = 0
    if admin is not None:
        late = t > admin
        t = np.where(late, admin, t)
        status[late] = 0
    return SurvivalDataset(t, status)
