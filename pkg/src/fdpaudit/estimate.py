"""Confidence intervals for the average bit error.

Three constructions are provided:

* Hoeffding: ``e_bar + sqrt(log(1 / (1 - gamma)) / (2 n))``.
* Advanced: a bisection for the prior ``p`` at which the ``(1 - gamma)``
  binomial quantile matches the observed error count.
* Clopper-Pearson: exact binomial intervals, used by the multi-run baseline.
"""

from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np
from scipy import special, stats

_DIRECT_SUM_MAX_N = 1000


class CIMethod(str, enum.Enum):
  HOEFFDING = 'Hoeffding'
  ADVANCED = 'Advanced'
  CLOPPER_PEARSON = 'ClopperPearson'


@dataclasses.dataclass(frozen=True)
class ErrorEstimate:
  """Upper confidence estimate for the bit-error floor.

  ``flagged`` is set when the Advanced bisection could not find a fixed
  point inside its bracket and returned a bracket end instead.
  """

  n: int
  e_bar: float
  gamma: float
  method: CIMethod
  upper: float
  flagged: bool = False
  iterations: int = 0


def _check_count(name, k):
  if int(k) != k or k < 0:
    raise ValueError(f'{name} must be a non-negative integer, got {k!r}')
  return int(k)


def _check_unit_open(name, x):
  if not 0.0 < x < 1.0:
    raise ValueError(f'{name} must lie in (0, 1), got {x!r}')
  return float(x)


def binom_cdf(k: int, n: int, p: float) -> float:
  """``P[Bin(n, p) <= k]``.

  Small ``n`` sums the pmf in log space; larger ``n`` goes through the
  regularized incomplete beta function.
  """
  n = _check_count('n', n)
  k = _check_count('k', k)
  if k > n:
    raise ValueError(f'k={k} exceeds n={n}')
  if not 0.0 <= p <= 1.0:
    raise ValueError(f'p must lie in [0, 1], got {p!r}')
  if k == n or p == 0.0:
    return 1.0
  if p == 1.0:
    return 0.0
  if n <= _DIRECT_SUM_MAX_N:
    i = np.arange(k + 1)
    log_pmf = (special.gammaln(n + 1) - special.gammaln(i + 1)
               - special.gammaln(n - i + 1)
               + i * math.log(p) + (n - i) * math.log1p(-p))
    return float(min(1.0, math.exp(special.logsumexp(log_pmf))))
  return float(special.bdtr(k, n, p))


def binom_inv_cdf(q: float, n: int, p: float) -> int:
  """Smallest ``k`` with ``binom_cdf(k, n, p) >= q``."""
  q = _check_unit_open('q', q)
  n = _check_count('n', n)
  if not 0.0 <= p <= 1.0:
    raise ValueError(f'p must lie in [0, 1], got {p!r}')
  if p == 0.0:
    return 0
  lo, hi = -1, n
  while hi - lo > 1:
    mid = (lo + hi) // 2
    if binom_cdf(mid, n, p) >= q:
      hi = mid
    else:
      lo = mid
  return hi


def hoeffding_radius(n: int, gamma: float) -> float:
  """``sqrt(ln(1 / (1 - gamma)) / (2 n))``."""
  n = _check_count('n', n)
  if n < 1:
    raise ValueError('n must be at least 1')
  gamma = _check_unit_open('gamma', gamma)
  return math.sqrt(math.log(1.0 / (1.0 - gamma)) / (2.0 * n))


def hoeffding_ci(e_bar: float, gamma: float, n: int) -> ErrorEstimate:
  if not 0.0 <= e_bar <= 1.0:
    raise ValueError(f'e_bar must lie in [0, 1], got {e_bar!r}')
  upper = e_bar + hoeffding_radius(n, gamma)
  return ErrorEstimate(n, e_bar, gamma, CIMethod.HOEFFDING, upper)


# Final bracket width for the right end of the stopping interval; 39 halvings
# of [0.001, 0.5], well inside the 64-step budget.
_ACI_WIDTH = 1e-12


def advanced_ci(
    e_bar: float,
    gamma: float,
    n: int,
    tol: float = 1e-4,
    lower: float = 0.001,
    max_iter: int = 64,
) -> ErrorEstimate:
  """Self-consistent upper estimate of the bit-error floor.

  For a hypothesised floor ``p`` the slack is
  ``v(p) = p - F^-1(1 - gamma; n, p) / n`` and a bisection over
  ``[lower, 1/2]`` looks for ``|p - (e_bar + v(p))| <= tol``.

  The quantile is a step function of ``p``, so the condition holds on a
  whole interval rather than at one point; at ``n = 1`` it holds almost
  everywhere. Any interior member is an invalid (too small) upper bound,
  so the bisection brackets the right end of that interval instead and
  returns its largest member. Since ``F^-1(1-gamma; n, p) <= k`` iff
  ``P[Bin(n, p) <= k] >= 1 - gamma``, that point is the exact one-sided
  binomial bound up to ``tol``.

  When the fixed point lies outside the bracket, or the quantile jumps
  across the tolerance band, the conservative end is returned and the
  estimate is flagged.
  """
  if not 0.0 <= e_bar <= 1.0:
    raise ValueError(f'e_bar must lie in [0, 1], got {e_bar!r}')
  gamma = _check_unit_open('gamma', gamma)
  n = _check_count('n', n)
  if n < 1:
    raise ValueError('n must be at least 1')

  def gap(p):
    v = p - binom_inv_cdf(1.0 - gamma, n, p) / n
    return p - (e_bar + v)

  if e_bar >= 0.5:
    return ErrorEstimate(n, e_bar, gamma, CIMethod.ADVANCED, 0.5)
  p_l, p_r = lower, 0.5
  if gap(p_l) > tol:
    return ErrorEstimate(n, e_bar, gamma, CIMethod.ADVANCED, p_l, flagged=True)
  g_r = gap(p_r)
  if g_r <= tol:
    return ErrorEstimate(n, e_bar, gamma, CIMethod.ADVANCED, p_r,
                         flagged=g_r < -tol)

  # Invariant: gap(p_l) <= tol < gap(p_r); gap is non-decreasing in p.
  it = 0
  while p_r - p_l > _ACI_WIDTH and it < max_iter:
    p = 0.5 * (p_l + p_r)
    if gap(p) <= tol:
      p_l = p
    else:
      p_r = p
    it += 1
  flagged = gap(p_l) < -tol or p_r - p_l > _ACI_WIDTH
  return ErrorEstimate(n, e_bar, gamma, CIMethod.ADVANCED, p_l,
                       flagged=flagged, iterations=it)


def clopper_pearson(successes: int, trials: int,
                    gamma: float) -> tuple[float, float]:
  """Two-sided exact interval with coverage ``gamma``."""
  k = _check_count('successes', successes)
  n = _check_count('trials', trials)
  if k > n or n == 0:
    raise ValueError(f'need 0 <= successes <= trials, trials >= 1; got {k}/{n}')
  tail = (1.0 - _check_unit_open('gamma', gamma)) / 2.0
  lo = 0.0 if k == 0 else float(stats.beta.ppf(tail, k, n - k + 1))
  hi = 1.0 if k == n else float(stats.beta.ppf(1.0 - tail, k + 1, n - k))
  return lo, hi


def clopper_pearson_upper(successes: int, trials: int, gamma: float) -> float:
  """One-sided upper limit at level ``gamma``."""
  k = _check_count('successes', successes)
  n = _check_count('trials', trials)
  if k > n or n == 0:
    raise ValueError(f'need 0 <= successes <= trials, trials >= 1; got {k}/{n}')
  gamma = _check_unit_open('gamma', gamma)
  if k == n:
    return 1.0
  if k == 0:
    return -math.expm1(math.log1p(-gamma) / n)
  return float(stats.beta.ppf(gamma, k + 1, n - k))


def ci_upper(method: CIMethod | str, e_bar: float, gamma: float,
             n: int) -> ErrorEstimate:
  """Upper estimate of the bit-error floor via the named construction."""
  method = CIMethod(method)
  if method is CIMethod.HOEFFDING:
    return hoeffding_ci(e_bar, gamma, n)
  if method is CIMethod.ADVANCED:
    return advanced_ci(e_bar, gamma, n)
  errors = int(round(e_bar * n))
  upper = clopper_pearson_upper(errors, n, gamma)
  return ErrorEstimate(n, e_bar, gamma, CIMethod.CLOPPER_PEARSON, upper)
