import sys
from pathlib import Path

# lets test modules share helpers (e.g. random states from test_gaussian)
sys.path.insert(0, str(Path(__file__).parent))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, _ in mod.CRITERIA:
        if name in mod.RESULTS:
            ok, detail = mod.RESULTS[name]
            terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {name}: {detail}")
        else:
            terminalreporter.write_line(f"FAIL  criterion {name}: did not run to completion")
