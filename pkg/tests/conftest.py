"""Prints the acceptance verdicts after the run, whatever the capture mode."""

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
  if not ACCEPTANCE:
    return
  terminalreporter.section('acceptance criteria')
  for number in sorted(ACCEPTANCE):
    ok, name, detail = ACCEPTANCE[number]
    terminalreporter.write_line(
        f'[{"PASS" if ok else "FAIL"}] criterion {number}: {name} ({detail})')
