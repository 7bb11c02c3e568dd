"""Trade-off functions (f-DP curves).

A trade-off curve maps a type-I error level ``alpha`` to the smallest
type-II error ``beta`` any test can reach when telling apart the outputs of
a mechanism on two adjacent datasets. Four families are supported:

* ``EpsDelta``  -- the curve of an (eps, delta)-DP mechanism,
* ``Gaussian``  -- mu-GDP, testing N(0, 1) against N(mu, 1),
* ``Laplace``   -- testing Lap(0, 1) against Lap(mu_l, 1),
* ``Numeric``   -- a tabulated curve, usually built by :func:`np_curve`.

The normal CDF and quantile are scipy's ``ndtr``/``ndtri`` (Cephes), which
are accurate to a few ulps over the whole range we use, tails included.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from typing import Any, Callable, Mapping

import numpy as np
from scipy import special

ArrayLike = Any


class Family(str, enum.Enum):
  EPS_DELTA = 'EpsDelta'
  GAUSSIAN = 'Gaussian'
  LAPLACE = 'Laplace'
  NUMERIC = 'Numeric'


def _check_probability(name: str, x: ArrayLike) -> np.ndarray:
  arr = np.asarray(x, dtype=float)
  if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
    raise ValueError(f'{name} must lie in [0, 1], got {x!r}')
  return arr


def _check_nonneg(name: str, value: float) -> float:
  value = float(value)
  if not value >= 0.0:
    raise ValueError(f'{name} must be non-negative, got {value!r}')
  return value


def _scalar_or_array(arr: np.ndarray):
  return float(arr) if arr.ndim == 0 else arr


def eval_eps_delta(eps: float, delta: float, x: ArrayLike):
  """Evaluates ``max(0, 1 - delta - e^eps x, e^-eps (1 - delta - x))``."""
  eps = _check_nonneg('eps', eps)
  delta = float(_check_probability('delta', delta))
  x = _check_probability('x', x)
  one_minus = 1.0 - delta
  val = np.maximum.reduce([
      np.zeros_like(x),
      one_minus - math.exp(eps) * x,
      math.exp(-eps) * (one_minus - x),
  ])
  return _scalar_or_array(val)


def eval_gdp(mu: float, x: ArrayLike):
  """Gaussian trade-off curve ``Phi(Phi^-1(1 - x) - mu)``.

  Written as ``Phi(-Phi^-1(x) - mu)`` so that small ``x`` does not lose
  precision in ``1 - x``. The endpoints fall out of ``ndtri(0) = -inf`` and
  ``ndtri(1) = inf``.
  """
  mu = _check_nonneg('mu', mu)
  x = _check_probability('x', x)
  with np.errstate(over='ignore', invalid='ignore'):
    val = special.ndtr(-special.ndtri(x) - mu)
  return _scalar_or_array(val)


def eval_laplace(mu_l: float, x: ArrayLike):
  """Optimal type-II error for Lap(0, 1) vs Lap(mu_l, 1) at level ``x``.

  The likelihood ratio is flat (``e^-mu``) left of 0, flat (``e^mu``) right
  of ``mu`` and ``e^(2y - mu)`` in between, so threshold tests ``y > t``
  trace the whole curve:

  * ``x <= e^-mu / 2``:        ``1 - e^mu x``
  * ``e^-mu / 2 < x <= 1/2``:  ``e^-mu / (4 x)``
  * ``x > 1/2``:               ``e^-mu (1 - x)``
  """
  mu = _check_nonneg('mu_l', mu_l)
  x = _check_probability('x', x)
  knot = 0.5 * math.exp(-mu)
  with np.errstate(divide='ignore', invalid='ignore'):
    middle = math.exp(-mu) / (4.0 * x)
  val = np.where(
      x <= knot,
      1.0 - math.exp(mu) * x,
      np.where(x <= 0.5, middle, math.exp(-mu) * (1.0 - x)),
  )
  val = np.clip(val, 0.0, 1.0)
  return _scalar_or_array(val)


def _lower_convex_hull(xs: np.ndarray, ys: np.ndarray):
  """Monotone-chain lower hull of points sorted by ``xs``."""
  hull_x: list[float] = []
  hull_y: list[float] = []
  for x, y in zip(xs.tolist(), ys.tolist()):
    if hull_x and x == hull_x[-1]:
      if y >= hull_y[-1]:
        continue
      hull_x.pop()
      hull_y.pop()
    while len(hull_x) >= 2:
      x1, y1 = hull_x[-2], hull_y[-2]
      x2, y2 = hull_x[-1], hull_y[-1]
      # Pop the middle point when it is not strictly below the chord.
      if (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1) <= 0.0:
        hull_x.pop()
        hull_y.pop()
      else:
        break
    hull_x.append(x)
    hull_y.append(y)
  return np.asarray(hull_x), np.asarray(hull_y)


@dataclasses.dataclass(frozen=True, eq=False)
class TradeoffCurve:
  """An immutable trade-off function.

  Use the classmethod constructors rather than building one directly. A
  curve is callable on scalars or numpy arrays.
  """

  family: Family
  params: Mapping[str, float] = dataclasses.field(default_factory=dict)
  alpha: np.ndarray | None = None
  beta: np.ndarray | None = None

  @classmethod
  def eps_delta(cls, eps: float, delta: float) -> 'TradeoffCurve':
    _check_nonneg('eps', eps)
    _check_probability('delta', delta)
    return cls(Family.EPS_DELTA, {'eps': float(eps), 'delta': float(delta)})

  @classmethod
  def gaussian(cls, mu: float) -> 'TradeoffCurve':
    return cls(Family.GAUSSIAN, {'mu': _check_nonneg('mu', mu)})

  @classmethod
  def laplace(cls, mu_l: float) -> 'TradeoffCurve':
    return cls(Family.LAPLACE, {'mu_l': _check_nonneg('mu_l', mu_l)})

  @classmethod
  def identity(cls) -> 'TradeoffCurve':
    """The perfect-privacy diagonal ``f(x) = 1 - x``."""
    return cls.gaussian(0.0)

  @classmethod
  def numeric(cls, alpha: ArrayLike, beta: ArrayLike) -> 'TradeoffCurve':
    """Tabulated curve; the table is replaced by its lower convex hull."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if alpha.shape != beta.shape or alpha.ndim != 1 or alpha.size < 2:
      raise ValueError('alpha and beta must be 1-d arrays of equal length')
    _check_probability('alpha', alpha)
    _check_probability('beta', beta)
    order = np.argsort(alpha, kind='stable')
    hx, hy = _lower_convex_hull(alpha[order], beta[order])
    if hx[0] > 0.0 or hx[-1] < 1.0:
      raise ValueError('table must cover alpha in [0, 1]')
    hx.setflags(write=False)
    hy.setflags(write=False)
    return cls(Family.NUMERIC, {}, hx, hy)

  @classmethod
  def make(cls, family: Family | str, theta: float,
           delta: float = 0.0) -> 'TradeoffCurve':
    """One-parameter constructor used when fitting a family to data."""
    family = Family(family)
    if family is Family.GAUSSIAN:
      return cls.gaussian(theta)
    if family is Family.LAPLACE:
      return cls.laplace(theta)
    if family is Family.EPS_DELTA:
      return cls.eps_delta(theta, delta)
    raise ValueError('numeric curves have no scalar parameter')

  def __call__(self, x: ArrayLike):
    if self.family is Family.EPS_DELTA:
      return eval_eps_delta(self.params['eps'], self.params['delta'], x)
    if self.family is Family.GAUSSIAN:
      return eval_gdp(self.params['mu'], x)
    if self.family is Family.LAPLACE:
      return eval_laplace(self.params['mu_l'], x)
    x = _check_probability('x', x)
    return _scalar_or_array(np.interp(x, self.alpha, self.beta))

  @property
  def is_identity(self) -> bool:
    if self.family is Family.GAUSSIAN:
      return self.params['mu'] == 0.0
    if self.family is Family.LAPLACE:
      return self.params['mu_l'] == 0.0
    if self.family is Family.EPS_DELTA:
      return self.params['eps'] == 0.0 and self.params['delta'] == 0.0
    return bool(np.all(np.abs(self.beta - (1.0 - self.alpha)) <= 1e-12))

  def to_json(self) -> dict:
    if self.family is Family.NUMERIC:
      return {
          'family': self.family.value,
          'table': {'alpha': self.alpha.tolist(), 'beta': self.beta.tolist()},
      }
    return {'family': self.family.value, 'params': dict(self.params)}

  @classmethod
  def from_json(cls, obj: Mapping[str, Any]) -> 'TradeoffCurve':
    try:
      family = Family(obj['family'])
    except (KeyError, ValueError) as e:
      raise ValueError(f'bad curve family: {obj.get("family")!r}') from e
    if family is Family.NUMERIC:
      table = obj.get('table') or {}
      return cls.numeric(table.get('alpha', []), table.get('beta', []))
    params = obj.get('params') or {}
    try:
      if family is Family.EPS_DELTA:
        return cls.eps_delta(params['eps'], params.get('delta', 0.0))
      if family is Family.GAUSSIAN:
        return cls.gaussian(params['mu'])
      return cls.laplace(params['mu_l'])
    except KeyError as e:
      raise ValueError(f'missing curve parameter {e.args[0]!r}') from e

  def __repr__(self) -> str:
    if self.family is Family.NUMERIC:
      return f'TradeoffCurve(Numeric, {self.alpha.size} points)'
    inner = ', '.join(f'{k}={v:g}' for k, v in self.params.items())
    return f'TradeoffCurve({self.family.value}, {inner})'


def np_curve(
    density0: Callable[[np.ndarray], np.ndarray],
    density1: Callable[[np.ndarray], np.ndarray],
    grid_size: int = 4096,
    support: tuple[float, float] = (-40.0, 40.0),
    cells: int = 400_000,
) -> TradeoffCurve:
  """Builds a trade-off curve from two densities by the Neyman-Pearson lemma.

  The support is cut into ``cells`` intervals whose masses under each
  density come from composite Simpson quadrature. Cells are sorted by
  decreasing likelihood ratio and accumulated, so every vertex of the
  resulting ROC is a likelihood-ratio threshold test. Linear interpolation
  between consecutive vertices is exactly the randomized test, which is what
  cells sharing a flat likelihood ratio need.

  Args:
    density0: vectorized density of the null distribution.
    density1: vectorized density of the alternative.
    grid_size: number of equally spaced ``alpha`` points stored in the table.
    support: integration range; both densities must carry all their mass
      inside it.
    cells: number of integration cells.

  Raises:
    ValueError: if either density does not integrate to 1 within 1e-6.
  """
  if grid_size < 64:
    raise ValueError(f'grid_size must be >= 64, got {grid_size}')
  lo, hi = support
  edges = np.linspace(lo, hi, cells + 1)
  mids = 0.5 * (edges[:-1] + edges[1:])
  width = (hi - lo) / cells

  def masses(density):
    fe = np.asarray(density(edges), dtype=float)
    fm = np.asarray(density(mids), dtype=float)
    return width / 6.0 * (fe[:-1] + 4.0 * fm + fe[1:])

  m0 = masses(density0)
  m1 = masses(density1)
  for name, m in (('density0', m0), ('density1', m1)):
    total = m.sum()
    if abs(total - 1.0) > 1e-6:
      raise ValueError(f'{name} integrates to {total:.9f} over {support}')
  m0 = np.clip(m0, 0.0, None)
  m1 = np.clip(m1, 0.0, None)
  keep = (m0 > 0.0) | (m1 > 0.0)
  m0, m1 = m0[keep], m1[keep]
  with np.errstate(divide='ignore', invalid='ignore'):
    ratio = np.where(m0 > 0.0, m1 / np.where(m0 > 0.0, m0, 1.0), np.inf)
  order = np.argsort(-ratio, kind='stable')
  alpha = np.concatenate([[0.0], np.cumsum(m0[order])])
  power = np.concatenate([[0.0], np.cumsum(m1[order])])
  alpha /= alpha[-1]
  power /= power[-1]
  beta = np.clip(1.0 - power, 0.0, 1.0)
  hx, hy = _lower_convex_hull(alpha, beta)
  grid = np.linspace(0.0, 1.0, grid_size)
  return TradeoffCurve.numeric(grid, np.interp(grid, hx, hy))


def laplace_density(loc: float = 0.0, scale: float = 1.0):
  def density(y):
    return 0.5 / scale * np.exp(-np.abs(np.asarray(y) - loc) / scale)
  return density


def normal_density(loc: float = 0.0, scale: float = 1.0):
  def density(y):
    z = (np.asarray(y) - loc) / scale
    return np.exp(-0.5 * z * z) / (scale * math.sqrt(2.0 * math.pi))
  return density
