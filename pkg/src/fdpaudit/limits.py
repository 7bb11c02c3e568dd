"""Information-theoretic limits on recovering a bit through an f-DP channel.

For a bit with prior ``p`` pushed through an f-DP mechanism and decoded by
any rule with false-positive rate ``x``, the mutual information between the
bit and its guess is at most ``F_f(x, p)``; maximizing over ``x`` gives the
bound ``u_f(p)``. At ``p = 1/2`` the bound turns into a floor on the bit
error, ``h^-1(1 - u_f(1/2))``, below which no decoder can go.

All logarithms are base 2.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy import special

from fdpaudit._search import golden_max, grid_then_golden
from fdpaudit.tradeoff import TradeoffCurve

X_MIN = 1e-12
X_MAX = 1.0 - 1e-12

# Uniform bulk plus a geometric run toward 0, where steep curves peak.
_X_GRID = np.unique(np.concatenate([
    np.linspace(X_MIN, X_MAX, 2048),
    np.geomspace(X_MIN, 1e-3, 256),
]))
_P_GRID = np.linspace(0.01, 0.99, 99)


def binary_entropy(x):
  """``h(x) = -x log2 x - (1 - x) log2 (1 - x)`` with ``0 log 0 = 0``."""
  arr = np.asarray(x, dtype=float)
  if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
    raise ValueError(f'binary_entropy needs x in [0, 1], got {x!r}')
  val = (special.entr(arr) + special.entr(1.0 - arr)) / math.log(2.0)
  return float(val) if val.ndim == 0 else val


def inv_binary_entropy(y: float, tol: float = 1e-12) -> float:
  """Inverse of ``h`` restricted to ``[0, 1/2]``, by bisection."""
  y = float(y)
  if not 0.0 <= y <= 1.0:
    raise ValueError(f'inv_binary_entropy needs y in [0, 1], got {y!r}')
  if y == 0.0:
    return 0.0
  if y == 1.0:
    return 0.5
  lo, hi = 0.0, 0.5
  # Run past ``tol`` so the round trip h(h^-1(y)) is tight near 0, where h
  # is steep.
  while hi - lo > tol * 1e-2:
    mid = 0.5 * (lo + hi)
    if mid == lo or mid == hi:
      break
    if binary_entropy(mid) < y:
      lo = mid
    else:
      hi = mid
  return 0.5 * (lo + hi)


def mi_bound_integrand(curve: TradeoffCurve, x, p: float):
  """``F_f(x, p) = h(p f(x) + (1-p)(1-x)) - p h(f(x)) - (1-p) h(1-x)``."""
  if not 0.0 < p < 1.0:
    raise ValueError(f'prior p must lie in (0, 1), got {p!r}')
  x = np.asarray(x, dtype=float)
  fx = np.clip(np.asarray(curve(x), dtype=float), 0.0, 1.0)
  mix = np.clip(p * fx + (1.0 - p) * (1.0 - x), 0.0, 1.0)
  val = (binary_entropy(mix) - p * binary_entropy(fx)
         - (1.0 - p) * binary_entropy(1.0 - x))
  return float(val) if np.ndim(val) == 0 else val


def mi_upper_bound(curve: TradeoffCurve, p: float = 0.5) -> tuple[float, float]:
  """Returns ``(u_f(p), argmax_x)``.

  A grid scan finds the best bracket, then golden-section search refines it
  to an x-tolerance of 1e-10. No unimodality is assumed across the grid.
  """
  if curve.is_identity:
    return 0.0, 0.5
  x, u = grid_then_golden(lambda t: mi_bound_integrand(curve, t, p), _X_GRID)
  return max(u, 0.0), x


def capacity(curve: TradeoffCurve) -> float:
  """``max_p u_f(p)``: grid over the prior, then golden refinement."""
  if curve.is_identity:
    return 0.0
  u = lambda q: mi_upper_bound(curve, q)[0]
  values = np.array([u(q) for q in _P_GRID])
  i = int(np.argmax(values))
  lo = _P_GRID[i - 1] if i > 0 else 1e-6
  hi = _P_GRID[i + 1] if i + 1 < _P_GRID.size else 1.0 - 1e-6
  _, best = golden_max(u, lo, hi, tol=1e-8)
  return max(best, float(values[i]))


def bit_error_floor(curve: TradeoffCurve) -> float:
  """Smallest per-bit error any decoder can reach at a balanced prior."""
  u, _ = mi_upper_bound(curve, 0.5)
  return inv_binary_entropy(min(max(1.0 - u, 0.0), 1.0))


@dataclasses.dataclass(frozen=True)
class LimitProfile:
  curve: TradeoffCurve
  p: float
  u: float
  p_floor: float
  argmax_x: float
  capacity: float | None = None

  def to_json(self) -> dict:
    out = {
        'curve': self.curve.to_json(),
        'p': self.p,
        'u': self.u,
        'argmax_x': self.argmax_x,
        'p_floor': self.p_floor,
    }
    if self.capacity is not None:
      out['capacity'] = self.capacity
    return out


def limit_profile(curve: TradeoffCurve, p: float = 0.5,
                  with_capacity: bool = True) -> LimitProfile:
  u, x = mi_upper_bound(curve, p)
  return LimitProfile(
      curve=curve,
      p=p,
      u=u,
      p_floor=bit_error_floor(curve),
      argmax_x=x,
      capacity=capacity(curve) if with_capacity else None,
  )
