"""Driving the experiments from JSON configs.

Each file in ``demos/configs`` is one experiment.  This script runs them all
into ``demos/out/<name>`` and prints the status line of every report; the
same runs are available from the shell as
``glasner-lab --config demos/configs/<name>.json --out OUT``.
"""
# %%
import json
from pathlib import Path

from glasner_lab.cli import main

here = Path(__file__).parent
for cfg in sorted((here / "configs").glob("*.json")):
    out = here / "out" / cfg.stem
    code = main(["--config", str(cfg), "--out", str(out)])
    rep = json.loads((out / "report.json").read_text())
    o = rep["outputs"]
    if "dimension" in o:
        status = "dimension %d" % o["dimension"]
    elif "table" in o:
        status = ", ".join("q=%d: %.5f" % (r["q"], r["discrepancy"]) for r in o["table"])
    else:
        status = o.get("status") or o["descriptor"]["case"]
    print("%-18s exit %d  %s" % (cfg.stem, code, status))
