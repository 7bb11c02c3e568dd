"""From an observed bit error to an (eps, delta) privacy lower bound."""

from __future__ import annotations

import dataclasses
import math
from typing import TYPE_CHECKING

import numpy as np
from scipy import optimize

from fdpaudit import estimate
from fdpaudit._search import grid_then_golden
from fdpaudit.estimate import CIMethod
from fdpaudit.limits import bit_error_floor
from fdpaudit.tradeoff import Family, TradeoffCurve

if TYPE_CHECKING:
  from fdpaudit.channel import AuditTranscript

THETA_MAX = 50.0
EPS_BRACKET = 64.0
_EPS_CAP = 4096.0

# 4096 points: geometric toward 0 where the tangent line touches steep
# curves at small delta, uniform across the bulk.
_X_GRID = np.unique(np.concatenate([
    [0.0],
    np.geomspace(1e-30, 1e-3, 2048),
    np.linspace(1e-3, 1.0, 2047),
]))

_DELTA_SLACK = 1e-14


def _delta_at(curve: TradeoffCurve, eps: float) -> float:
  """``max_x 1 - e^eps x - f(x)``, the delta paired with ``eps``.

  The objective is concave in ``x`` because ``f`` is convex, so golden
  refinement around the best grid point recovers the maximum.
  """
  slope = math.exp(eps)
  _, best = grid_then_golden(
      lambda x: 1.0 - slope * x - np.asarray(curve(x)), _X_GRID, tol=1e-15)
  return best


def fdp_to_eps(curve: TradeoffCurve, delta: float) -> float:
  """Smallest ``eps >= 0`` with ``f(x) >= 1 - delta - e^eps x`` for all x.

  Returns ``inf`` when ``delta < 1 - f(0)``. A small absolute slack absorbs
  rounding in ``1 - f(0)`` so that an (eps, delta) curve maps back to its
  own eps at its own delta.
  """
  if not 0.0 <= delta <= 1.0:
    raise ValueError(f'delta must lie in [0, 1], got {delta!r}')
  if delta < 1.0 - float(curve(0.0)) - 1e-12:
    return math.inf
  # Rounding in 1 - e^eps x - f(x) leaves ~1e-16 residue where the profile
  # is flat at zero (pure DP curves); treat that as feasible.
  target = delta + _DELTA_SLACK
  if curve.is_identity or _delta_at(curve, 0.0) <= target:
    return 0.0
  lo, hi = 0.0, EPS_BRACKET
  while _delta_at(curve, hi) > target:
    lo, hi = hi, 2.0 * hi
    if hi > _EPS_CAP:
      return math.inf
  # Brent on a bracket that already straddles the root; nudge upward so the
  # returned eps is feasible.
  eps = optimize.brentq(lambda a: _delta_at(curve, a) - target, lo, hi,
                        xtol=1e-10, rtol=1e-14)
  while _delta_at(curve, eps) > target and eps < hi:
    eps = min(hi, eps + 1e-10)
  return max(0.0, eps)


def floor_to_param(
    family: Family | str,
    p_floor: float,
    delta: float = 0.0,
    theta_max: float = THETA_MAX,
) -> tuple[float, bool]:
  """Finds the family parameter whose bit-error floor equals ``p_floor``.

  ``delta`` is the fixed secondary parameter of the EpsDelta family and is
  ignored otherwise. Returns ``(theta, saturated)``; ``saturated`` is true
  when ``p_floor`` is below what ``theta_max`` reaches. The floor is
  strictly decreasing in ``theta``, so a bracketed root search is safe; the
  returned ``theta`` never has a floor below ``p_floor``.
  """
  family = Family(family)
  if not 0.0 < p_floor <= 0.5:
    raise ValueError(f'p_floor must lie in (0, 1/2], got {p_floor!r}')

  def floor(theta):
    return bit_error_floor(TradeoffCurve.make(family, theta, delta))

  if p_floor >= floor(0.0):
    return 0.0, False
  if p_floor <= floor(theta_max):
    return theta_max, True
  theta = optimize.brentq(lambda t: floor(t) - p_floor, 0.0, theta_max,
                          xtol=1e-10, rtol=1e-14)
  # Step back until the fitted curve's floor is not below p_floor.
  while theta > 0.0 and floor(theta) < p_floor - 1e-12:
    theta = max(0.0, theta - 1e-10)
  return theta, False


@dataclasses.dataclass(frozen=True)
class AuditResult:
  delta: float
  gamma: float
  n: int
  e_bar: float
  ci_method: CIMethod
  ci_upper: float
  family: Family
  fitted_param: float
  eps_lower: float
  vacuous: bool
  ci_flagged: bool = False
  saturated: bool = False

  def to_json(self) -> dict:
    out = dataclasses.asdict(self)
    out['ci_method'] = self.ci_method.value
    out['family'] = self.family.value
    for key in ('eps_lower', 'fitted_param'):
      if math.isinf(out[key]):
        out[key] = 'inf'
    return out


def privacy_lower_bound(
    delta: float,
    e_bar: float,
    gamma: float,
    n: int,
    family: Family | str = Family.GAUSSIAN,
    ci_method: CIMethod | str = CIMethod.ADVANCED,
) -> AuditResult:
  """Audit endgame: CI on the error floor, fit the family, convert to eps.

  The Hoeffding branch uses ``e_bar + radius`` as the upper endpoint.
  Outcomes that prove nothing come back as ``eps_lower = 0`` with
  ``vacuous`` set rather than raising.
  """
  family = Family(family)
  ci_method = CIMethod(ci_method)
  est = estimate.ci_upper(ci_method, e_bar, gamma, n)
  upper = min(est.upper, 0.5)
  if upper >= 0.5:
    theta, saturated, eps = 0.0, False, 0.0
  else:
    theta, saturated = floor_to_param(family, upper, delta=delta)
    curve = TradeoffCurve.make(family, theta, delta)
    eps = fdp_to_eps(curve, delta) if theta > 0.0 else 0.0
  return AuditResult(
      delta=delta,
      gamma=gamma,
      n=n,
      e_bar=e_bar,
      ci_method=ci_method,
      ci_upper=est.upper,
      family=family,
      fitted_param=theta,
      eps_lower=eps,
      vacuous=eps == 0.0,
      ci_flagged=est.flagged,
      saturated=saturated,
  )


def _safe_log_ratio(num: float, den: float) -> float:
  if num <= 0.0:
    return 0.0
  if den <= 0.0:
    return math.inf
  return math.log(num / den)


def multirun_eps(alpha_r: float, beta_r: float, delta: float) -> float:
  """``max(log((1-d-a)/b), log((1-d-b)/a), 0)`` from FP/FN upper limits."""
  return max(
      _safe_log_ratio(1.0 - delta - alpha_r, beta_r),
      _safe_log_ratio(1.0 - delta - beta_r, alpha_r),
      0.0,
  )


def multirun_baseline(transcript: 'AuditTranscript', delta: float,
                 gamma: float) -> float:
  """Classical multi-run lower bound from Clopper-Pearson FP/FN limits.

  Only valid when the guesses come from independent runs; one-run
  transcripts are refused.
  """
  from fdpaudit.channel import Arrangement

  if transcript.arrangement is not Arrangement.MULTI_RUN:
    raise ValueError('multirun_baseline needs independent runs, got '
                     f'{transcript.arrangement.value}')
  truth = transcript.truth.bits.astype(bool)
  guess = np.asarray(transcript.guesses).astype(bool)
  negatives = int((~truth).sum())
  positives = int(truth.sum())
  if negatives == 0 or positives == 0:
    raise ValueError('transcript needs both classes to estimate FP and FN')
  fp = int((guess & ~truth).sum())
  fn = int((~guess & truth).sum())
  alpha_r = estimate.clopper_pearson_upper(fp, negatives, gamma)
  beta_r = estimate.clopper_pearson_upper(fn, positives, gamma)
  return multirun_eps(alpha_r, beta_r, delta)
