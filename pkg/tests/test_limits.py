import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdpaudit import channel
from fdpaudit.limits import (
    binary_entropy,
    bit_error_floor,
    capacity,
    inv_binary_entropy,
    limit_profile,
    mi_bound_integrand,
    mi_upper_bound,
)
from fdpaudit.tradeoff import TradeoffCurve

PHI_M1 = 0.15865525393145705  # Phi(-1), mpmath
SYMMETRIC_POINT = {  # Phi(-mu / 2), mpmath
    0.2: 0.46017216272297102,
    0.8: 0.34457825838967583,
    3.2: 0.054799291699557994,
}

SWEEP = (
    [TradeoffCurve.eps_delta(e, 1e-5) for e in (0.25, 1.0, 4.0)]
    + [TradeoffCurve.gaussian(m) for m in (0.2, 0.8, 3.2)]
    + [TradeoffCurve.laplace(m) for m in (0.2, 0.8, 3.2)]
)


def _h(x):
  x = np.clip(x, 1e-300, 1.0)
  y = np.clip(1.0 - x, 1e-300, 1.0)
  return -(x * np.log2(x) + y * np.log2(y))


def dense_grid_u(curve, p=0.5, points=10**6):
  """Independent oracle: brute maximization of F_f on a 10^6 grid."""
  x = np.linspace(1e-12, 1.0 - 1e-12, points)
  fx = np.asarray(curve(x))
  vals = _h(p * fx + (1 - p) * (1 - x)) - p * _h(fx) - (1 - p) * _h(1 - x)
  return float(vals.max())


class TestEntropy:

  def test_values(self):
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    # mpmath, 40 digits.
    assert binary_entropy(0.11) == pytest.approx(0.49991595816452800, abs=1e-14)

  def test_domain(self):
    with pytest.raises(ValueError):
      binary_entropy(1.5)

  def test_inverse_endpoints(self):
    assert inv_binary_entropy(1.0) == 0.5
    assert inv_binary_entropy(0.0) == 0.0
    with pytest.raises(ValueError):
      inv_binary_entropy(-0.1)

  def test_inverse_near_011(self):
    x = inv_binary_entropy(0.49991)
    assert x == pytest.approx(0.11, abs=1e-5)
    assert abs(binary_entropy(x) - 0.49991) <= 1e-10

  @settings(max_examples=300, deadline=None)
  @given(st.floats(0.0, 1.0))
  def test_round_trip(self, y):
    x = inv_binary_entropy(y)
    assert 0.0 <= x <= 0.5
    assert abs(binary_entropy(x) - y) <= 1e-10


class TestIntegrand:

  @pytest.mark.parametrize('x', [0.0, 0.2, 0.7, 1.0])
  def test_diagonal_is_zero(self, x):
    assert mi_bound_integrand(TradeoffCurve.identity(), x, 0.5) == pytest.approx(
        0.0, abs=1e-15)

  def test_symmetric_point(self):
    val = mi_bound_integrand(TradeoffCurve.gaussian(2.0), PHI_M1, 0.5)
    assert val == pytest.approx(1.0 - binary_entropy(PHI_M1), abs=1e-10)
    assert val == pytest.approx(0.36891723259445811, abs=1e-10)

  def test_eps_delta_boundary(self):
    val = mi_bound_integrand(TradeoffCurve.eps_delta(1.0, 0.0), 0.0, 0.5)
    assert val == pytest.approx(0.0, abs=1e-15)

  def test_prior_domain(self):
    with pytest.raises(ValueError):
      mi_bound_integrand(TradeoffCurve.gaussian(1.0), 0.3, 0.0)

  @pytest.mark.parametrize('curve', SWEEP, ids=repr)
  @pytest.mark.parametrize('p', [0.1, 0.5, 0.8])
  def test_bounded_by_source_entropy(self, curve, p):
    x = np.linspace(0.0, 1.0, 1001)
    assert np.all(mi_bound_integrand(curve, x, p) <= binary_entropy(p) + 1e-12)


class TestUpperBound:

  def test_diagonal(self):
    assert mi_upper_bound(TradeoffCurve.identity(), 0.5)[0] == 0.0

  @pytest.mark.parametrize('mu', [0.2, 0.8, 3.2])
  def test_gaussian_symmetric_point(self, mu):
    curve = TradeoffCurve.gaussian(mu)
    u, x = mi_upper_bound(curve, 0.5)
    x_star = SYMMETRIC_POINT[mu]
    assert u == pytest.approx(1.0 - binary_entropy(x_star), abs=1e-8)
    assert u == pytest.approx(dense_grid_u(curve), abs=1e-8)
    assert x == pytest.approx(x_star, abs=1e-4)

  @pytest.mark.parametrize('curve', SWEEP[3:], ids=repr)
  def test_refinement_matches_dense_grid(self, curve):
    u, _ = mi_upper_bound(curve, 0.5)
    oracle = dense_grid_u(curve)
    assert u >= oracle - 1e-12
    assert u == pytest.approx(oracle, abs=1e-8)

  @pytest.mark.parametrize('curve', SWEEP[:3], ids=repr)
  def test_refinement_at_eps_delta_kink(self, curve):
    # F peaks at the kink x = (1 - delta) / (1 + e^eps), where a uniform
    # grid is only first-order accurate; check the kink value directly and
    # hold the grid to its own step error.
    eps, delta = curve.params['eps'], curve.params['delta']
    kink = (1.0 - delta) / (1.0 + math.exp(eps))
    u, x = mi_upper_bound(curve, 0.5)
    assert u == pytest.approx(1.0 - binary_entropy(kink), abs=1e-10)
    assert x == pytest.approx(kink, abs=1e-8)
    grid = np.linspace(1e-12, 1.0 - 1e-12, 10**6)
    step_err = np.max(np.abs(np.diff(mi_bound_integrand(curve, grid, 0.5))))
    oracle = dense_grid_u(curve)
    assert oracle - 1e-12 <= u <= oracle + step_err

  def test_eps_delta_prior_shape(self):
    curve = TradeoffCurve.eps_delta(1.0, 1e-5)
    ps = np.linspace(0.005, 0.995, 199)
    us = np.array([mi_upper_bound(curve, p)[0] for p in ps])
    peak = int(np.argmax(us))
    assert 0 < peak < ps.size - 1
    assert np.all(np.diff(us[:peak + 1]) > 0)
    assert np.all(np.diff(us[peak:]) < 0)
    assert us[0] < 0.1 * us[peak] and us[-1] < 0.1 * us[peak]

  @pytest.mark.parametrize('curve', SWEEP, ids=repr)
  def test_within_source_entropy(self, curve):
    for p in (0.2, 0.5):
      u, _ = mi_upper_bound(curve, p)
      assert 0.0 <= u <= binary_entropy(p)


class TestCapacity:

  def test_diagonal(self):
    assert capacity(TradeoffCurve.identity()) == 0.0

  def test_noiseless_limit(self):
    assert capacity(TradeoffCurve.gaussian(50.0)) == pytest.approx(1.0, abs=1e-6)

  def test_dominates_fixed_prior(self):
    curve = TradeoffCurve.gaussian(0.8)
    c = capacity(curve)
    assert c >= mi_upper_bound(curve, 0.5)[0] - 1e-15
    ps = np.linspace(0.01, 0.99, 197)
    oracle = max(dense_grid_u(curve, p, points=20001) for p in ps)
    assert c == pytest.approx(oracle, abs=1e-7)


class TestFloor:

  def test_diagonal(self):
    assert bit_error_floor(TradeoffCurve.identity()) == 0.5

  @pytest.mark.parametrize('mu', [0.2, 0.8, 3.2])
  def test_gaussian(self, mu):
    curve = TradeoffCurve.gaussian(mu)
    oracle = inv_binary_entropy(1.0 - dense_grid_u(curve))
    assert bit_error_floor(curve) == pytest.approx(SYMMETRIC_POINT[mu], abs=1e-8)
    assert bit_error_floor(curve) == pytest.approx(oracle, abs=1e-7)

  def test_eps_delta_ordering(self):
    f4 = bit_error_floor(TradeoffCurve.eps_delta(4.0, 1e-5))
    f1 = bit_error_floor(TradeoffCurve.eps_delta(1.0, 1e-5))
    assert 0.0 < f4 < f1 < 0.5
    # The floor of an (eps, delta) curve is its kink.
    assert f4 == pytest.approx((1 - 1e-5) / (1 + math.exp(4.0)), abs=1e-10)
    assert f1 == pytest.approx((1 - 1e-5) / (1 + math.exp(1.0)), abs=1e-10)

  @pytest.mark.parametrize('make,params', [
      (TradeoffCurve.gaussian, np.linspace(0.05, 6.0, 25)),
      (lambda e: TradeoffCurve.eps_delta(e, 1e-5), np.linspace(0.05, 6.0, 25)),
      (TradeoffCurve.laplace, np.linspace(0.05, 6.0, 25)),
  ], ids=['gaussian', 'eps_delta', 'laplace'])
  def test_monotone_in_parameter(self, make, params):
    floors = [bit_error_floor(make(t)) for t in params]
    assert np.all(np.diff(floors) < 0)

  @pytest.mark.parametrize('curve', SWEEP, ids=repr)
  def test_round_trip(self, curve):
    p = bit_error_floor(curve)
    u, _ = mi_upper_bound(curve, 0.5)
    assert binary_entropy(p) + u == pytest.approx(1.0, abs=1e-10)


def test_profile():
  prof = limit_profile(TradeoffCurve.gaussian(0.8))
  assert 0.0 <= prof.u <= 1.0
  assert binary_entropy(prof.p_floor) == pytest.approx(1.0 - prof.u, abs=1e-10)
  assert set(prof.to_json()) >= {'u', 'argmax_x', 'p_floor', 'capacity'}


@pytest.mark.slow
def test_empirical_mutual_information_below_bound():
  mu, n = 0.8, 10**6
  spec = channel.MechanismSpec('GaussianSum', mu)
  t = channel.simulate(spec, n, seed=11)
  counts = np.zeros((2, 2))
  np.add.at(counts, (t.truth.bits, t.guesses), 1)

  def plug_in_mi(c):
    joint = c / c.sum()
    pb = joint.sum(axis=1, keepdims=True)
    pg = joint.sum(axis=0, keepdims=True)
    with np.errstate(divide='ignore', invalid='ignore'):
      terms = np.where(joint > 0, joint * np.log2(joint / (pb * pg)), 0.0)
    return terms.sum()

  mi = plug_in_mi(counts)
  rng = np.random.default_rng(0)
  boot = [plug_in_mi(rng.multinomial(n, (counts / n).ravel()).reshape(2, 2))
          for _ in range(300)]
  u, _ = mi_upper_bound(TradeoffCurve.gaussian(mu), 0.5)
  assert mi <= u + 3.0 * np.std(boot)
