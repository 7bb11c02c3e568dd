"""Simulated audits: bits in, mechanism as a noisy channel, guesses out.

A bit vector is turned into a dataset of canaries (bit 1 -> a unit canary
in its own coordinate, bit 0 -> nothing), the mechanism is run, and a
decoder guesses each bit from the output. Three arrangements exist:

* ``OneRunMemoryless``: one run, one coordinate per canary (``d >= n``).
* ``MultiRun``: one independent run per canary.
* ``OneRunInterfering``: one run, canaries share ``d < n`` coordinates.

Every random draw comes from a numpy ``SeedSequence`` keyed by the caller's
seed and a stream tag, so equal inputs give equal transcripts.
"""

from __future__ import annotations

import base64
import dataclasses
import enum
import math
from typing import Any, Mapping

import numpy as np

from fdpaudit.tradeoff import Family, TradeoffCurve

# Stream tags keep bit generation and mechanism noise independent even when
# the caller passes one seed to both.
_BITS_STREAM = 0
_NOISE_STREAM = 1
THRESHOLD = 0.5


class MechanismKind(str, enum.Enum):
  GAUSSIAN_SUM = 'GaussianSum'
  LAPLACE_SUM = 'LaplaceSum'
  RANDOMIZED_RESPONSE = 'RandomizedResponse'
  FLAWED_GAUSSIAN = 'FlawedGaussian'


class Arrangement(str, enum.Enum):
  ONE_RUN_MEMORYLESS = 'OneRunMemoryless'
  MULTI_RUN = 'MultiRun'
  ONE_RUN_INTERFERING = 'OneRunInterfering'


def _rng(seed: int, stream: int, *extra: int) -> np.random.Generator:
  return np.random.default_rng(np.random.SeedSequence([seed, stream, *extra]))


@dataclasses.dataclass(frozen=True, eq=False)
class BitVector:
  bits: np.ndarray
  prior_p: float

  def __len__(self) -> int:
    return int(self.bits.size)


@dataclasses.dataclass(frozen=True)
class MechanismSpec:
  """A simulated mechanism.

  ``privacy_param`` is mu for the Gaussian kinds, mu_l for Laplace and eps
  for randomized response. For ``FlawedGaussian`` it is the *claimed* mu
  while ``noise_scale_override`` is the noise actually injected.
  """

  kind: MechanismKind
  privacy_param: float
  delta: float = 0.0
  dimension: int = 1
  noise_scale_override: float | None = None

  def __post_init__(self):
    object.__setattr__(self, 'kind', MechanismKind(self.kind))
    if self.dimension < 1:
      raise ValueError(f'dimension must be >= 1, got {self.dimension}')
    if not self.privacy_param > 0.0:
      raise ValueError(
          f'privacy_param must be positive, got {self.privacy_param!r}')
    if not 0.0 <= self.delta <= 1.0:
      raise ValueError(f'delta must lie in [0, 1], got {self.delta!r}')
    if self.kind is MechanismKind.FLAWED_GAUSSIAN:
      override = self.noise_scale_override
      if override is None or override < 0.0:
        raise ValueError('FlawedGaussian needs a non-negative noise override')
      if override > 1.0 / self.privacy_param:
        raise ValueError(
            f'noise override {override} exceeds the honest scale '
            f'{1.0 / self.privacy_param}; that mechanism is not flawed')

  @property
  def noise_scale(self) -> float:
    if self.kind is MechanismKind.FLAWED_GAUSSIAN:
      return float(self.noise_scale_override)
    return 1.0 / self.privacy_param

  def with_dimension(self, d: int) -> 'MechanismSpec':
    return dataclasses.replace(self, dimension=d)

  def claimed_curve(self) -> TradeoffCurve:
    """The trade-off curve the mechanism advertises."""
    if self.kind is MechanismKind.LAPLACE_SUM:
      return TradeoffCurve.laplace(self.privacy_param)
    if self.kind is MechanismKind.RANDOMIZED_RESPONSE:
      return TradeoffCurve.eps_delta(self.privacy_param, self.delta)
    return TradeoffCurve.gaussian(self.privacy_param)

  @property
  def natural_family(self) -> Family:
    return self.claimed_curve().family

  def to_json(self) -> dict:
    out = {
        'kind': self.kind.value,
        'privacy_param': self.privacy_param,
        'delta': self.delta,
        'dimension': self.dimension,
    }
    if self.noise_scale_override is not None:
      out['noise_scale_override'] = self.noise_scale_override
    return out

  @classmethod
  def from_json(cls, obj: Mapping[str, Any]) -> 'MechanismSpec':
    return cls(
        kind=MechanismKind(obj['kind']),
        privacy_param=float(obj['privacy_param']),
        delta=float(obj.get('delta', 0.0)),
        dimension=int(obj.get('dimension', 1)),
        noise_scale_override=(None if obj.get('noise_scale_override') is None
                              else float(obj['noise_scale_override'])),
    )


def generate_bits(n: int, p: float, seed: int) -> BitVector:
  """``n`` independent Bernoulli(p) bits."""
  if n < 1:
    raise ValueError(f'n must be >= 1, got {n}')
  if not 0.0 <= p <= 1.0:
    raise ValueError(f'p must lie in [0, 1], got {p!r}')
  u = _rng(seed, _BITS_STREAM).random(n)
  return BitVector((u < p).astype(np.uint8), float(p))


def _canary_sum(bits: BitVector, d: int) -> np.ndarray:
  x = np.zeros(d)
  x[:len(bits)] = bits.bits
  return x


def _check_memoryless(bits: BitVector, spec: MechanismSpec, *kinds):
  if spec.kind not in kinds:
    raise ValueError(f'mechanism kind {spec.kind.value} not accepted here')
  if spec.dimension < len(bits):
    raise ValueError(
        f'memoryless one-run needs d >= n, got d={spec.dimension}, '
        f'n={len(bits)}; use run_interfering_gaussian')


def run_one_run_gaussian(bits: BitVector, spec: MechanismSpec,
                         seed: int) -> np.ndarray:
  """Sum of one-hot canaries plus N(0, sigma^2 I_d), sigma = 1/mu."""
  _check_memoryless(bits, spec, MechanismKind.GAUSSIAN_SUM)
  rng = _rng(seed, _NOISE_STREAM)
  return _canary_sum(bits, spec.dimension) + spec.noise_scale * rng.standard_normal(
      spec.dimension)


def run_one_run_laplace(bits: BitVector, spec: MechanismSpec,
                        seed: int) -> np.ndarray:
  """Sum of one-hot canaries plus i.i.d. Lap(0, 1/mu_l) per coordinate."""
  _check_memoryless(bits, spec, MechanismKind.LAPLACE_SUM)
  rng = _rng(seed, _NOISE_STREAM)
  return _canary_sum(bits, spec.dimension) + rng.laplace(
      0.0, spec.noise_scale, spec.dimension)


def _rr_symbols(bits: np.ndarray, eps: float, delta: float,
                u: np.ndarray) -> np.ndarray:
  keep = (1.0 - delta) * math.exp(eps) / (1.0 + math.exp(eps))
  out = np.where(u < delta, 2 + bits, np.where(u < delta + keep, bits, 1 - bits))
  return out.astype(np.uint8)


def run_randomized_response(bits: BitVector, eps: float, delta: float,
                            seed: int) -> np.ndarray:
  """Per-bit randomized response with a delta escape.

  A bit ``b`` is reported as itself with probability
  ``(1 - delta) e^eps / (1 + e^eps)``, flipped with probability
  ``(1 - delta) / (1 + e^eps)`` and revealed as symbol ``2 + b`` with
  probability ``delta``.
  """
  if not eps > 0.0:
    raise ValueError(f'eps must be positive, got {eps!r}')
  if not 0.0 <= delta <= 1.0:
    raise ValueError(f'delta must lie in [0, 1], got {delta!r}')
  u = _rng(seed, _NOISE_STREAM).random(len(bits))
  return _rr_symbols(bits.bits, eps, delta, u)


def run_flawed_gaussian(bits: BitVector, spec: MechanismSpec,
                        seed: int) -> np.ndarray:
  """The Gaussian pipeline with the under-scaled noise actually injected."""
  _check_memoryless(bits, spec, MechanismKind.FLAWED_GAUSSIAN)
  rng = _rng(seed, _NOISE_STREAM)
  return _canary_sum(bits, spec.dimension) + spec.noise_scale * rng.standard_normal(
      spec.dimension)


def run_multi_run(bits: BitVector, spec: MechanismSpec,
                  seed: int) -> np.ndarray:
  """One independent mechanism run per canary.

  Run ``i`` sees only canary ``i`` (the background dataset is empty) and
  draws its noise from its own stream, spawned from ``seed``. Returns an
  ``(n, d)`` array of outputs, or an ``(n,)`` symbol array for randomized
  response.
  """
  streams = np.random.SeedSequence([seed, _NOISE_STREAM]).spawn(len(bits))
  d = spec.dimension
  if spec.kind is MechanismKind.RANDOMIZED_RESPONSE:
    u = np.array([np.random.default_rng(s).random() for s in streams])
    return _rr_symbols(bits.bits, spec.privacy_param, spec.delta, u)
  out = np.empty((len(bits), d))
  for i, s in enumerate(streams):
    rng = np.random.default_rng(s)
    if spec.kind is MechanismKind.LAPLACE_SUM:
      noise = rng.laplace(0.0, spec.noise_scale, d)
    else:
      noise = spec.noise_scale * rng.standard_normal(d)
    out[i] = noise
  out[:, 0] += bits.bits
  return out


def run_interfering_gaussian(bits: BitVector, d: int, spec: MechanismSpec,
                             seed: int) -> np.ndarray:
  """One run with canaries packed round-robin into ``d`` coordinates."""
  if spec.kind not in (MechanismKind.GAUSSIAN_SUM,
                       MechanismKind.FLAWED_GAUSSIAN):
    raise ValueError('interference is simulated for Gaussian sums only')
  if d < 1:
    raise ValueError(f'd must be >= 1, got {d}')
  n = len(bits)
  x = np.bincount(np.arange(n) % d, weights=bits.bits, minlength=d)
  rng = _rng(seed, _NOISE_STREAM)
  return x + spec.noise_scale * rng.standard_normal(d)


def decode(message: np.ndarray, arrangement: Arrangement | str,
           spec: MechanismSpec, n: int | None = None,
           prior_p: float = 0.5) -> np.ndarray:
  """Guesses the input bits from a mechanism output.

  * Gaussian and Laplace outputs: guess 1 iff the canary's coordinate
    exceeds 0.5; an exact tie goes to 0.
  * Randomized response: the observed bit, with symbol 2 -> 0, 3 -> 1.
  * Interfering: coordinate ``j`` carries ``c_j`` canaries, so the
    threshold is raised by the expected interference ``(c_j - 1) p``.
  """
  arrangement = Arrangement(arrangement)
  message = np.asarray(message)
  if spec.kind is MechanismKind.RANDOMIZED_RESPONSE:
    if message.ndim != 1 or (n is not None and message.size != n):
      raise ValueError(f'bad randomized-response message shape {message.shape}')
    return (message % 2).astype(np.uint8)
  if arrangement is Arrangement.MULTI_RUN:
    if message.ndim != 2 or (n is not None and message.shape[0] != n):
      raise ValueError(f'bad multi-run message shape {message.shape}')
    return (message[:, 0] > THRESHOLD).astype(np.uint8)
  if message.ndim != 1:
    raise ValueError(f'bad one-run message shape {message.shape}')
  if n is None:
    raise ValueError('one-run decoding needs the number of canaries n')
  if arrangement is Arrangement.ONE_RUN_MEMORYLESS:
    if message.size < n:
      raise ValueError(f'message has {message.size} coordinates for {n} bits')
    return (message[:n] > THRESHOLD).astype(np.uint8)
  d = message.size
  coord = np.arange(n) % d
  load = np.bincount(coord, minlength=d)
  threshold = THRESHOLD + (load - 1) * prior_p
  return (message > threshold).astype(np.uint8)[coord]


def _pack(bits: np.ndarray) -> str:
  return base64.b64encode(np.packbits(bits.astype(np.uint8)).tobytes()).decode()


def _unpack(text: str, n: int) -> np.ndarray:
  raw = np.frombuffer(base64.b64decode(text), dtype=np.uint8)
  return np.unpackbits(raw)[:n].astype(np.uint8)


@dataclasses.dataclass(frozen=True, eq=False)
class AuditTranscript:
  truth: BitVector
  guesses: np.ndarray
  arrangement: Arrangement
  mechanism: MechanismSpec
  seed: int
  dimension: int | None = None

  def __post_init__(self):
    if len(self.guesses) != len(self.truth):
      raise ValueError('truth and guesses differ in length')
    object.__setattr__(self, 'arrangement', Arrangement(self.arrangement))

  @property
  def n(self) -> int:
    return len(self.truth)

  @property
  def errors(self) -> int:
    return int(np.count_nonzero(self.truth.bits != self.guesses))

  @property
  def e_bar(self) -> float:
    return self.errors / self.n

  def to_json(self) -> dict:
    out = {
        'spec': self.mechanism.to_json(),
        'seed': self.seed,
        'arrangement': self.arrangement.value,
        'n': self.n,
        'prior_p': self.truth.prior_p,
        'truth': _pack(self.truth.bits),
        'guesses': _pack(self.guesses),
        'counts': {'errors': self.errors, 'n': self.n},
    }
    if self.dimension is not None:
      out['dimension'] = self.dimension
    return out

  @classmethod
  def from_json(cls, obj: Mapping[str, Any]) -> 'AuditTranscript':
    n = int(obj['n'])
    transcript = cls(
        truth=BitVector(_unpack(obj['truth'], n), float(obj.get('prior_p', 0.5))),
        guesses=_unpack(obj['guesses'], n),
        arrangement=Arrangement(obj['arrangement']),
        mechanism=MechanismSpec.from_json(obj['spec']),
        seed=int(obj['seed']),
        dimension=obj.get('dimension'),
    )
    counts = obj.get('counts')
    if counts is not None and int(counts['errors']) != transcript.errors:
      raise ValueError('transcript error count does not match its bits')
    return transcript


def simulate(spec: MechanismSpec, n: int, seed: int,
             arrangement: Arrangement | str = Arrangement.ONE_RUN_MEMORYLESS,
             d: int | None = None, prior_p: float = 0.5) -> AuditTranscript:
  """Generates bits, runs the channel once (or ``n`` times), and decodes."""
  arrangement = Arrangement(arrangement)
  bits = generate_bits(n, prior_p, seed)
  if arrangement is Arrangement.MULTI_RUN:
    message = run_multi_run(bits, spec, seed)
  elif arrangement is Arrangement.ONE_RUN_INTERFERING:
    if d is None:
      raise ValueError('the interfering arrangement needs d')
    message = run_interfering_gaussian(bits, d, spec, seed)
  elif spec.kind is MechanismKind.RANDOMIZED_RESPONSE:
    message = run_randomized_response(bits, spec.privacy_param, spec.delta, seed)
  else:
    spec = spec.with_dimension(max(spec.dimension, n))
    runner = {
        MechanismKind.GAUSSIAN_SUM: run_one_run_gaussian,
        MechanismKind.LAPLACE_SUM: run_one_run_laplace,
        MechanismKind.FLAWED_GAUSSIAN: run_flawed_gaussian,
    }[spec.kind]
    message = runner(bits, spec, seed)
  guesses = decode(message, arrangement, spec, n=n, prior_p=prior_p)
  return AuditTranscript(bits, guesses, arrangement, spec, seed,
                         dimension=d if d is not None else spec.dimension)
