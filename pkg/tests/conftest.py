from __future__ import annotations

import sys


def pytest_terminal_summary(terminalreporter):
    lines = {}
    for name, mod in list(sys.modules.items()):
        if name.endswith("test_acceptance"):
            lines.update(getattr(mod, "LINES", {}))
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
