"""
Command line tour
=================

Every capability is reachable from ``couplespec`` (or ``python3 -m
couplespec``). Each run writes a JSON report, and a CSV when the result is
tabular.
"""
from __future__ import annotations

import json
import tempfile
from pathlib import Path

from couplespec import cli

out = Path(tempfile.mkdtemp())
runs = [
    ["bound-states", "--model", "L", "--alpha", "0.5"],
    ["ac-mult", "--model", "L", "--lambda-grid", "0,0.5,1,2.5"],
    ["deficiency", "--alpha", "2", "--lambda", "0,1"],
    ["forms", "witness", "--alpha", "3", "--M", "1", "--N", "5"],
    ["forms", "rayleigh", "--alpha", "0.5", "--range=-4,4"],  # '=' keeps argparse off the minus sign
]
for argv in runs:
    code = cli.run(["--out", str(out), *argv])
    print(" ".join(argv), "-> exit", code)

for f in sorted(out.glob("*.json")):
    rep = json.loads(f.read_text())
    print(f.name, rep["task"], str(rep["results"])[:60])
