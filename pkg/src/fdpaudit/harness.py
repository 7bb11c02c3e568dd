"""Experiment orchestration: configs, seeded sweeps, CSV output, detection."""

from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Optional

import pydantic

from fdpaudit import bounds, channel
from fdpaudit.channel import Arrangement, MechanismKind, MechanismSpec
from fdpaudit.estimate import CIMethod
from fdpaudit.tradeoff import Family

CSV_COLUMNS = (
    'mechanism', 'param', 'n', 'seed', 'arrangement', 'ci_method', 'e_bar',
    'ci_upper', 'eps_lower', 'eps_claimed', 'vacuous',
)

_MASK64 = (1 << 64) - 1


class ConfigError(ValueError):
  """A config document failed validation; the message names field paths."""


def splitmix64(x: int) -> int:
  x = (x + 0x9E3779B97F4A7C15) & _MASK64
  x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
  x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
  return x ^ (x >> 31)


def derive_seed(base_seed: int, n: int, repetition: int) -> int:
  """``base_seed`` plus a platform-independent 64-bit mix of (n, rep)."""
  return (base_seed + splitmix64(splitmix64(n) ^ repetition)) & _MASK64


class MechanismModel(pydantic.BaseModel):
  model_config = pydantic.ConfigDict(extra='forbid')

  kind: MechanismKind
  privacy_param: float = pydantic.Field(gt=0)
  delta: float = pydantic.Field(default=0.0, ge=0, le=1)
  dimension: int = pydantic.Field(default=1, ge=1)
  noise_scale_override: Optional[float] = pydantic.Field(default=None, ge=0)

  @pydantic.model_validator(mode='after')
  def _flawed_needs_override(self):
    self.to_spec()
    return self

  def to_spec(self) -> MechanismSpec:
    return MechanismSpec(self.kind, self.privacy_param, self.delta,
                         self.dimension, self.noise_scale_override)


class ExperimentConfig(pydantic.BaseModel):
  """One sweep: a mechanism, the n values to try and how to audit them."""

  model_config = pydantic.ConfigDict(extra='forbid')

  mechanism: MechanismModel
  n_values: list[pydantic.PositiveInt] = pydantic.Field(min_length=1)
  gamma: float = pydantic.Field(default=0.95, gt=0, lt=1)
  delta: float = pydantic.Field(default=1e-5, ge=0, le=1)
  repetitions: pydantic.PositiveInt = 20
  base_seed: int = pydantic.Field(default=0, ge=0)
  ci_methods: list[CIMethod] = pydantic.Field(
      default_factory=lambda: [CIMethod.ADVANCED], min_length=1)
  family: Optional[Family] = None
  arrangement: Arrangement = Arrangement.ONE_RUN_MEMORYLESS
  interference_d: Optional[pydantic.PositiveInt] = None
  output_path: Optional[str] = None

  @pydantic.model_validator(mode='after')
  def _check(self):
    if self.family is Family.NUMERIC:
      raise ValueError('family must be a parametric family')
    if (self.arrangement is Arrangement.ONE_RUN_INTERFERING
        and self.interference_d is None):
      raise ValueError('interference_d is required for OneRunInterfering')
    if CIMethod.CLOPPER_PEARSON in self.ci_methods:
      raise ValueError('ci_methods: ClopperPearson is not a one-run CI')
    return self

  @property
  def audit_family(self) -> Family:
    return self.family or self.mechanism.to_spec().natural_family


def load_config(source: str | Path | dict) -> ExperimentConfig:
  """Parses a config from a dict or a JSON file.

  Raises:
    ConfigError: on schema violations, listing each offending field path.
    OSError: if the file cannot be read.
  """
  if isinstance(source, dict):
    obj = source
  else:
    text = Path(source).read_text()
    try:
      obj = json.loads(text)
    except json.JSONDecodeError as e:
      raise ConfigError(f'config is not valid JSON: {e}') from e
  try:
    return ExperimentConfig.model_validate(obj)
  except pydantic.ValidationError as e:
    lines = []
    for err in e.errors():
      path = '.'.join(str(p) for p in err['loc']) or '<root>'
      lines.append(f'{path}: {err["msg"]}')
    raise ConfigError('; '.join(lines)) from e


@dataclasses.dataclass(frozen=True)
class SweepRow:
  mechanism: str
  param: float
  n: int
  seed: int
  arrangement: str
  ci_method: str
  e_bar: float
  ci_upper: float
  eps_lower: float
  eps_claimed: float
  vacuous: bool

  def sort_key(self):
    return (self.n, self.seed, self.ci_method)


def _run_job(config: ExperimentConfig, n: int, repetition: int,
             eps_claimed: float) -> list[SweepRow]:
  spec = config.mechanism.to_spec()
  seed = derive_seed(config.base_seed, n, repetition)
  transcript = channel.simulate(spec, n, seed, config.arrangement,
                                d=config.interference_d)
  rows = []
  for method in config.ci_methods:
    result = bounds.privacy_lower_bound(
        config.delta, transcript.e_bar, config.gamma, n,
        config.audit_family, method)
    rows.append(SweepRow(
        mechanism=spec.kind.value,
        param=spec.privacy_param,
        n=n,
        seed=seed,
        arrangement=config.arrangement.value,
        ci_method=CIMethod(method).value,
        e_bar=transcript.e_bar,
        ci_upper=result.ci_upper,
        eps_lower=result.eps_lower,
        eps_claimed=eps_claimed,
        vacuous=result.vacuous,
    ))
  return rows


def run_sweep(config: ExperimentConfig, jobs: int = 1) -> list[SweepRow]:
  """Runs every (n, repetition) job and returns rows in a fixed order.

  The output does not depend on ``jobs``: each job's seed is derived from
  the config alone and rows are sorted before returning.
  """
  eps_claimed = bounds.fdp_to_eps(
      config.mechanism.to_spec().claimed_curve(), config.delta)
  tasks = [(n, r) for n in config.n_values for r in range(config.repetitions)]
  rows: list[SweepRow] = []
  if jobs <= 1:
    for n, r in tasks:
      rows.extend(_run_job(config, n, r, eps_claimed))
  else:
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
      futures = [pool.submit(_run_job, config, n, r, eps_claimed)
                 for n, r in tasks]
      for fut in futures:
        rows.extend(fut.result())
  rows.sort(key=SweepRow.sort_key)
  return rows


def _fmt(value: Any) -> str:
  if isinstance(value, bool):
    return 'true' if value else 'false'
  if isinstance(value, float):
    return 'inf' if math.isinf(value) else repr(value)
  return str(value)


def rows_to_csv(rows: Iterable[SweepRow]) -> str:
  buf = io.StringIO()
  writer = csv.writer(buf, lineterminator='\n')
  writer.writerow(CSV_COLUMNS)
  for row in rows:
    writer.writerow([_fmt(getattr(row, c)) for c in CSV_COLUMNS])
  return buf.getvalue()


def write_csv(rows: Iterable[SweepRow], path: str | Path) -> None:
  Path(path).write_text(rows_to_csv(rows))


@dataclasses.dataclass(frozen=True)
class Verdict:
  eps_lower: float
  eps_claimed: float
  violated: bool
  e_bar: float
  n: int
  seed: int

  def to_json(self) -> dict:
    out = dataclasses.asdict(self)
    for key in ('eps_lower', 'eps_claimed'):
      if math.isinf(out[key]):
        out[key] = 'inf'
    return out


def detect_violation(
    claimed: MechanismSpec,
    actual_noise: float,
    n: int,
    gamma: float = 0.95,
    delta: float = 1e-5,
    seed: int = 0,
    ci_method: CIMethod | str = CIMethod.ADVANCED,
) -> Verdict:
  """Audits a Gaussian mechanism that may inject less noise than it claims.

  ``claimed`` carries the advertised mu; ``actual_noise`` is the standard
  deviation really used. The audit is fitted to the Gaussian family and
  compared against the advertised eps at ``delta``.
  """
  if claimed.kind not in (MechanismKind.GAUSSIAN_SUM,
                          MechanismKind.FLAWED_GAUSSIAN):
    raise ValueError('violation detection is implemented for Gaussian sums')
  spec = MechanismSpec(MechanismKind.FLAWED_GAUSSIAN, claimed.privacy_param,
                       dimension=max(n, claimed.dimension),
                       noise_scale_override=actual_noise)
  transcript = channel.simulate(spec, n, seed)
  result = bounds.privacy_lower_bound(delta, transcript.e_bar, gamma, n,
                                      Family.GAUSSIAN, ci_method)
  eps_claimed = bounds.fdp_to_eps(spec.claimed_curve(), delta)
  return Verdict(
      eps_lower=result.eps_lower,
      eps_claimed=eps_claimed,
      violated=result.eps_lower > eps_claimed,
      e_bar=transcript.e_bar,
      n=n,
      seed=seed,
  )
