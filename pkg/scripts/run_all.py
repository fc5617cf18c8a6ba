"""Regenerate every result table under results/ (a few minutes on a laptop)."""

import subprocess
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent

if __name__ == "__main__":
    status = 0
    for name in ("run_channel_check", "run_fig3", "run_fig2", "run_fig1"):
        print(f"== {name}", flush=True)
        status |= subprocess.call([sys.executable, str(HERE / f"{name}.py")] + sys.argv[1:])
    sys.exit(status)
