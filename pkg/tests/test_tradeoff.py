import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdpaudit.tradeoff import (
    Family,
    TradeoffCurve,
    eval_eps_delta,
    eval_gdp,
    eval_laplace,
    laplace_density,
    normal_density,
    np_curve,
)

GRID = np.linspace(0.0, 1.0, 1000)

SWEEP = (
    [TradeoffCurve.eps_delta(e, 1e-5) for e in (0.25, 1.0, 4.0)]
    + [TradeoffCurve.gaussian(m) for m in (0.2, 0.8, 3.2)]
    + [TradeoffCurve.laplace(m) for m in (0.2, 0.8, 3.2)]
)


@pytest.fixture(scope='module')
def numeric_gauss():
  return np_curve(normal_density(0.0), normal_density(0.8))


@pytest.fixture(scope='module')
def numeric_laplace():
  return np_curve(laplace_density(0.0), laplace_density(1.0))


class TestEpsDelta:

  @pytest.mark.parametrize('eps', [0.0, 1.0, 7.5])
  def test_at_zero_is_one_minus_delta(self, eps):
    assert eval_eps_delta(eps, 0.1, 0.0) == pytest.approx(0.9, abs=1e-15)

  def test_zero_privacy_loss_is_diagonal(self):
    assert eval_eps_delta(0.0, 0.0, 0.3) == pytest.approx(0.7, abs=1e-15)

  def test_ln2_quarter(self):
    # Branches: 0, 1 - 2 * 0.25 = 0.5, 0.5 * 0.75 = 0.375.
    assert eval_eps_delta(math.log(2.0), 0.0, 0.25) == pytest.approx(0.5, abs=1e-15)

  @pytest.mark.parametrize('args', [(-1.0, 0.0, 0.5), (1.0, 1.5, 0.5),
                                    (1.0, 0.0, -0.1), (1.0, 0.0, 1.1)])
  def test_domain(self, args):
    with pytest.raises(ValueError):
      eval_eps_delta(*args)


class TestGaussian:

  def test_identical_distributions(self):
    assert eval_gdp(0.0, 0.3) == pytest.approx(0.7, abs=1e-15)

  @pytest.mark.parametrize('mu', [0.0, 0.8, 50.0])
  def test_endpoints(self, mu):
    assert eval_gdp(mu, 0.0) == 1.0
    assert eval_gdp(mu, 1.0) == 0.0

  def test_mu2_half(self):
    # Phi(-2) from mpmath at 40 digits.
    assert eval_gdp(2.0, 0.5) == pytest.approx(0.022750131948179207, abs=1e-15)

  @pytest.mark.parametrize('z', [-7.0, -3.0, -0.5, 0.0, 1.3, 4.0, 7.0])
  def test_normal_cdf_matches_mpmath(self, z):
    mpmath.mp.dps = 30
    x = float(mpmath.ncdf(z))
    # G_0(x) = 1 - x exercises ndtri and ndtr together.
    assert eval_gdp(1e-300, x) == pytest.approx(1.0 - x, abs=1e-12)

  @pytest.mark.parametrize('x', [1e-12, 1e-8, 1e-5, 0.3, 1 - 1e-9])
  def test_tail_accuracy(self, x):
    mpmath.mp.dps = 40
    mu = 0.8
    zq = -mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf(x) - 1)
    expected = float(mpmath.ncdf(zq - mu))
    assert eval_gdp(mu, x) == pytest.approx(expected, abs=1e-12)

  def test_fixed_point(self):
    for mu in (0.2, 0.8, 3.2):
      lo, hi = 0.0, 0.5
      for _ in range(200):
        mid = 0.5 * (lo + hi)
        if eval_gdp(mu, mid) > mid:
          lo = mid
        else:
          hi = mid
      assert lo == pytest.approx(float(mpmath.ncdf(-mu / 2)), abs=1e-8)

  def test_strictly_decreasing_in_mu(self):
    x = np.linspace(0.01, 0.99, 99)
    vals = np.array([eval_gdp(m, x) for m in np.linspace(0.0, 4.0, 41)])
    assert np.all(np.diff(vals, axis=0) < 0.0)


class TestLaplace:

  def test_identical_distributions(self):
    assert eval_laplace(0.0, 0.4) == pytest.approx(0.6, abs=1e-15)

  @pytest.mark.parametrize('mu', [0.0, 0.5, 3.0])
  def test_always_reject(self, mu):
    assert eval_laplace(mu, 1.0) == 0.0

  def test_brute_force_np_value(self):
    # mpmath quadrature of both Laplace densities, bisecting the threshold
    # so the type-I error is 0.25 (threshold ln 2): beta = e^-1.
    assert eval_laplace(1.0, 0.25) == pytest.approx(0.36787944117144232, abs=1e-12)

  def test_matches_numeric_np(self, numeric_laplace):
    assert np.max(np.abs(numeric_laplace(GRID) - eval_laplace(1.0, GRID))) < 1e-6

  @pytest.mark.parametrize('mu', [0.2, 0.8, 3.2])
  def test_matches_numeric_np_1e8_on_table(self, mu):
    curve = np_curve(laplace_density(0.0), laplace_density(mu))
    assert np.max(np.abs(curve.beta - eval_laplace(mu, curve.alpha))) < 1e-8


class TestNumeric:

  def test_identical_is_diagonal(self):
    curve = np_curve(normal_density(0.0), normal_density(0.0), grid_size=256)
    assert np.max(np.abs(curve(GRID) - (1.0 - GRID))) < 1e-9

  def test_matches_gdp(self, numeric_gauss):
    diff = numeric_gauss.beta - eval_gdp(0.8, numeric_gauss.alpha)
    assert np.max(np.abs(diff)) < 1e-6

  def test_grid_size_minimum(self):
    with pytest.raises(ValueError):
      np_curve(normal_density(), normal_density(1.0), grid_size=32)

  def test_unnormalized_density_rejected(self):
    bad = lambda y: 2.0 * normal_density()(y)
    with pytest.raises(ValueError, match='integrates'):
      np_curve(bad, normal_density(1.0))

  def test_interpolant_uses_lower_hull(self):
    # The middle point sits above the chord and must be dropped.
    curve = TradeoffCurve.numeric([0.0, 0.5, 1.0], [1.0, 0.6, 0.0])
    assert curve(0.5) == pytest.approx(0.5)


@pytest.mark.parametrize('curve', SWEEP, ids=repr)
def test_curve_invariants(curve):
  f = np.asarray(curve(GRID))
  assert curve(0.0) <= 1.0 and curve(1.0) >= 0.0
  assert np.all(np.diff(f) <= 1e-15)
  assert np.all(f <= 1.0 - GRID + 1e-12)
  assert np.all(GRID + f <= 1.0 + 1e-12)
  # Convexity: discrete second differences are non-negative.
  assert np.all(np.diff(f, 2) >= -1e-12)


@settings(max_examples=200, deadline=None)
@given(
    eps=st.floats(0.0, 8.0),
    delta=st.floats(0.0, 0.5),
    a=st.floats(0.0, 1.0),
    b=st.floats(0.0, 1.0),
    t=st.floats(0.0, 1.0),
)
def test_eps_delta_convex_pairs(eps, delta, a, b, t):
  f = lambda x: eval_eps_delta(eps, delta, x)
  assert f(t * a + (1 - t) * b) <= t * f(a) + (1 - t) * f(b) + 1e-12


@settings(max_examples=100, deadline=None)
@given(x=st.floats(0.0, 1.0), e1=st.floats(0.0, 5.0), e2=st.floats(0.0, 5.0),
       d1=st.floats(0.0, 0.5), d2=st.floats(0.0, 0.5))
def test_eps_delta_monotone_in_parameters(x, e1, e2, d1, d2):
  lo_e, hi_e = sorted((e1, e2))
  lo_d, hi_d = sorted((d1, d2))
  assert eval_eps_delta(hi_e, lo_d, x) <= eval_eps_delta(lo_e, lo_d, x) + 1e-15
  assert eval_eps_delta(lo_e, hi_d, x) <= eval_eps_delta(lo_e, lo_d, x) + 1e-15


@pytest.mark.parametrize('curve', SWEEP[:3] + [TradeoffCurve.gaussian(0.8)],
                         ids=repr)
def test_json_round_trip(curve):
  again = TradeoffCurve.from_json(json.loads(json.dumps(curve.to_json())))
  assert again.family is curve.family
  np.testing.assert_array_equal(again(GRID), curve(GRID))


def test_numeric_json_round_trip(numeric_gauss):
  obj = json.loads(json.dumps(numeric_gauss.to_json()))
  assert obj['family'] == 'Numeric'
  again = TradeoffCurve.from_json(obj)
  np.testing.assert_allclose(again(GRID), numeric_gauss(GRID), atol=1e-15)


def test_make_dispatch():
  assert TradeoffCurve.make('Gaussian', 1.0).family is Family.GAUSSIAN
  assert TradeoffCurve.make(Family.EPS_DELTA, 1.0, 1e-5).params['delta'] == 1e-5
  with pytest.raises(ValueError):
    TradeoffCurve.make('Numeric', 1.0)
