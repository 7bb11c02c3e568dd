"""Command line entry point: ``fdpaudit {audit,sweep,limits,detect,simulate}``.

Exit codes: 0 success, 2 bad config or arguments, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from fdpaudit import bounds, channel, harness, limits
from fdpaudit.channel import Arrangement, MechanismKind, MechanismSpec
from fdpaudit.estimate import CIMethod
from fdpaudit.harness import ConfigError
from fdpaudit.tradeoff import Family, TradeoffCurve

EXIT_CONFIG = 2
EXIT_IO = 3


def _load_json_arg(text: str) -> dict:
  """Accepts inline JSON or a path to a JSON file."""
  stripped = text.strip()
  if stripped.startswith('{'):
    source = stripped
  else:
    source = Path(text).read_text()
  try:
    return json.loads(source)
  except json.JSONDecodeError as e:
    raise ConfigError(f'invalid JSON in {text!r}: {e}') from e


def _emit(obj, out: str | None):
  text = json.dumps(obj, indent=2, sort_keys=True)
  if out:
    Path(out).write_text(text + '\n')
  else:
    print(text)


def _mechanism(obj: dict) -> MechanismSpec:
  try:
    return MechanismSpec.from_json(obj)
  except (KeyError, ValueError, TypeError) as e:
    raise ConfigError(f'mechanism: {e}') from e


def cmd_audit(args) -> int:
  if args.transcript:
    try:
      transcript = channel.AuditTranscript.from_json(
          json.loads(Path(args.transcript).read_text()))
    except (KeyError, ValueError) as e:
      raise ConfigError(f'transcript: {e}') from e
  elif args.mechanism:
    if args.n is None:
      raise ConfigError('--n is required with --mechanism')
    spec = _mechanism(_load_json_arg(args.mechanism))
    transcript = channel.simulate(spec, args.n, args.seed, args.arrangement,
                                  d=args.d)
  else:
    raise ConfigError('give --transcript or --mechanism')
  family = Family(args.family) if args.family else (
      transcript.mechanism.natural_family)
  result = bounds.privacy_lower_bound(args.delta, transcript.e_bar, args.gamma,
                                      transcript.n, family, args.ci_method)
  out = result.to_json()
  eps_claimed = bounds.fdp_to_eps(transcript.mechanism.claimed_curve(),
                                  args.delta)
  out['eps_claimed'] = 'inf' if eps_claimed == float('inf') else eps_claimed
  out['arrangement'] = transcript.arrangement.value
  if transcript.arrangement is Arrangement.MULTI_RUN:
    out['multirun_baseline'] = bounds.multirun_baseline(
        transcript, args.delta, args.gamma)
  _emit(out, args.output)
  return 0


def cmd_sweep(args) -> int:
  config = harness.load_config(args.config)
  rows = harness.run_sweep(config, jobs=args.jobs)
  output = args.output or config.output_path
  if output:
    harness.write_csv(rows, output)
  else:
    sys.stdout.write(harness.rows_to_csv(rows))
  return 0


def cmd_limits(args) -> int:
  try:
    curve = TradeoffCurve.from_json(_load_json_arg(args.curve))
  except ValueError as e:
    raise ConfigError(f'curve: {e}') from e
  if not 0.0 < args.p < 1.0:
    raise ConfigError('--p must lie in (0, 1)')
  profile = limits.limit_profile(curve, args.p)
  _emit({
      'u': profile.u,
      'argmax_x': profile.argmax_x,
      'p_floor': profile.p_floor,
      'capacity': profile.capacity,
  }, args.output)
  return 0


def cmd_detect(args) -> int:
  try:
    claimed = MechanismSpec(MechanismKind.GAUSSIAN_SUM, args.mu)
  except ValueError as e:
    raise ConfigError(str(e)) from e
  if not 0.0 <= args.actual_noise <= 1.0 / args.mu:
    raise ConfigError('--actual-noise must lie in [0, 1/mu]')
  verdict = harness.detect_violation(claimed, args.actual_noise, args.n,
                                     args.gamma, args.delta, args.seed,
                                     args.ci_method)
  _emit(verdict.to_json(), args.output)
  return 0


def cmd_simulate(args) -> int:
  spec = _mechanism(_load_json_arg(args.mechanism))
  transcript = channel.simulate(spec, args.n, args.seed, args.arrangement,
                                d=args.d)
  _emit(transcript.to_json(), args.output)
  return 0


def build_parser() -> argparse.ArgumentParser:
  parser = argparse.ArgumentParser(
      prog='fdpaudit', description='Privacy auditing as bit transmission.')
  sub = parser.add_subparsers(dest='command', required=True)

  def audit_opts(p):
    p.add_argument('--delta', type=float, default=1e-5)
    p.add_argument('--gamma', type=float, default=0.95)
    p.add_argument('--ci-method', default=CIMethod.ADVANCED.value,
                   choices=[CIMethod.ADVANCED.value, CIMethod.HOEFFDING.value])

  def sim_opts(p):
    p.add_argument('--n', type=int)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--arrangement', default=Arrangement.ONE_RUN_MEMORYLESS.value,
                   choices=[a.value for a in Arrangement])
    p.add_argument('--d', type=int, help='coordinates for OneRunInterfering')

  p = sub.add_parser('audit', help='audit a transcript or a simulated mechanism')
  p.add_argument('--transcript', help='transcript JSON file')
  p.add_argument('--mechanism', help='mechanism spec, inline JSON or file')
  p.add_argument('--family', choices=[f.value for f in Family
                                      if f is not Family.NUMERIC])
  p.add_argument('--output', '-o')
  audit_opts(p)
  sim_opts(p)
  p.set_defaults(func=cmd_audit)

  p = sub.add_parser('sweep', help='run an experiment config, emit CSV')
  p.add_argument('config', help='experiment config JSON file')
  p.add_argument('--jobs', type=int, default=1)
  p.add_argument('--output', '-o')
  p.set_defaults(func=cmd_sweep)

  p = sub.add_parser('limits', help='information limits of a trade-off curve')
  p.add_argument('curve', help='curve JSON, inline or file')
  p.add_argument('--p', type=float, default=0.5)
  p.add_argument('--output', '-o')
  p.set_defaults(func=cmd_limits)

  p = sub.add_parser('detect', help='flawed Gaussian mechanism case study')
  p.add_argument('--mu', type=float, default=0.8, help='claimed mu')
  p.add_argument('--actual-noise', type=float, default=0.125)
  p.add_argument('--n', type=int, default=10_000)
  p.add_argument('--seed', type=int, default=0)
  p.add_argument('--output', '-o')
  audit_opts(p)
  p.set_defaults(func=cmd_detect)

  p = sub.add_parser('simulate', help='write a simulated audit transcript')
  p.add_argument('mechanism', help='mechanism spec, inline JSON or file')
  p.add_argument('--output', '-o')
  sim_opts(p)
  p.set_defaults(func=cmd_simulate)
  return parser


def main(argv=None) -> int:
  parser = build_parser()
  args = parser.parse_args(argv)
  if getattr(args, 'n', 1) is None and args.command == 'simulate':
    parser.error('--n is required')
  try:
    return args.func(args)
  except ConfigError as e:
    print(f'config error: {e}', file=sys.stderr)
    return EXIT_CONFIG
  except OSError as e:
    print(f'I/O error: {e}', file=sys.stderr)
    return EXIT_IO
  except ValueError as e:
    print(f'config error: {e}', file=sys.stderr)
    return EXIT_CONFIG


if __name__ == '__main__':
  sys.exit(main())
