"""Grover fidelity for rank-1 and rank-30 truncation, n=12, e=0.01.

Extra arguments are forwarded to the CLI, e.g. `--e 0.05 --workers 4`.
Output goes to results/fig1.csv unless --out is given.
"""

import sys
from pathlib import Path

from qnoise.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    if "--out" not in args:
        out = Path(__file__).resolve().parent.parent / "results" / "fig1.csv"
        out.parent.mkdir(exist_ok=True)
        args += ["--out", str(out)]
    sys.exit(main(["fig1"] + args))
