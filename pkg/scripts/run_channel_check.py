"""Residuals of the noise-channel identities; exits 2 on any breach.

Extra arguments are forwarded to the CLI, e.g. `--e 0.05 --workers 4`.
Output goes to results/channel-check.csv unless --out is given.
"""

import sys
from pathlib import Path

from qnoise.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    if "--out" not in args:
        out = Path(__file__).resolve().parent.parent / "results" / "channel-check.csv"
        out.parent.mkdir(exist_ok=True)
        args += ["--out", str(out)]
    sys.exit(main(["channel-check"] + args))
