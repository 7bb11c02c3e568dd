"""One-dimensional search helpers shared by the limit and bound code."""

import math

import numpy as np

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_max(f, lo, hi, tol=1e-10, max_iter=200):
  """Maximizes ``f`` on ``[lo, hi]`` by golden-section search.

  Returns ``(x, f(x))`` for the best point seen, endpoints included, so the
  result is never worse than either end of the bracket.
  """
  best_x, best_f = lo, f(lo)
  f_hi = f(hi)
  if f_hi > best_f:
    best_x, best_f = hi, f_hi
  a, b = lo, hi
  c = b - _INV_PHI * (b - a)
  d = a + _INV_PHI * (b - a)
  fc, fd = f(c), f(d)
  for _ in range(max_iter):
    if b - a <= tol:
      break
    if fc >= fd:
      b, d, fd = d, c, fc
      c = b - _INV_PHI * (b - a)
      fc = f(c)
    else:
      a, c, fc = c, d, fd
      d = a + _INV_PHI * (b - a)
      fd = f(d)
  for x, fx in ((c, fc), (d, fd)):
    if fx > best_f:
      best_x, best_f = x, fx
  return best_x, best_f


def grid_then_golden(f_vec, grid, tol=1e-10):
  """Grid scan of a vectorized ``f_vec`` followed by golden refinement.

  The refinement runs on the bracket formed by the best grid point's
  neighbours. The returned maximum is at least the grid maximum.
  """
  values = np.asarray(f_vec(grid), dtype=float)
  i = int(np.nanargmax(values))
  lo = grid[max(i - 1, 0)]
  hi = grid[min(i + 1, grid.size - 1)]
  x, fx = golden_max(lambda t: float(f_vec(np.asarray(t))), lo, hi, tol=tol)
  if fx < values[i]:
    return float(grid[i]), float(values[i])
  return float(x), float(fx)
