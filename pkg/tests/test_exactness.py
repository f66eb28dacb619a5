import numpy as np
import pytest

from coframe.exactness import certify, exact_pairs, get_pair
from coframe.scalar import R
from coframe.solvers import exactness_check


def test_pairs_registered():
    assert {"eh_dhym_om1", "tcp2_dhym_om1", "tcp2_dspin7_phi1_p"} <= set(exact_pairs())


@pytest.mark.parametrize("pid", exact_pairs())
def test_first_integrals_certify(pid):
    assert certify(pid) <= 1e-9


@pytest.mark.parametrize("pid", exact_pairs())
@pytest.mark.parametrize("seed", [1, 7])
def test_certificate_holds_for_other_samples(pid, seed):
    assert certify(pid, n=8, seed=seed) <= 1e-9


@pytest.mark.parametrize("pid", exact_pairs())
def test_perturbed_first_integral_fails(pid):
    pair = get_pair(pid)
    rng = np.random.default_rng(3)
    lo, hi = pair.r_range
    samples = [(float(rng.uniform(lo, hi)), float(rng.normal())) for _ in range(10)]
    bad = pair.first_integral + R ** 3
    assert exactness_check(bad, pair.ode, pair.unknown, samples, pair.env, rng=rng) > 1e-3


def test_other_parameters():
    assert certify("tcp2_dhym_om1", env={"k": 0.4, "tan_theta": -2.0}) <= 1e-9
    assert certify("tcp2_dspin7_phi1_p", env={"k": 0.0, "C4": 0.0}) <= 1e-9
