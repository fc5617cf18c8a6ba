"""Monte Carlo QFT fidelity against the naive and refined estimates, n=2..10.

Extra arguments are forwarded to the CLI, e.g. `--e 0.05 --workers 4`.
Output goes to results/fig2.csv unless --out is given.
"""

import sys
from pathlib import Path

from qnoise.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    if "--out" not in args:
        out = Path(__file__).resolve().parent.parent / "results" / "fig2.csv"
        out.parent.mkdir(exist_ok=True)
        args += ["--out", str(out)]
    sys.exit(main(["fig2"] + args))
