"""Write the branch, phase-grid and ODE data sets as CSV files.

Run from the repository root::

    python3 demos/regenerate.py [OUTDIR]

Each data set is produced through the ``coframe`` command line, so the
files are exactly what ``coframe ...`` prints.  Branch summaries (global
branch count, multiplicity of the root at the bolt) are echoed to stdout.
"""

import contextlib
import io
import math
import sys
from pathlib import Path

from coframe.cli import main

BRANCH_RUNS = {
    # omega_1 quartic at zero phase: one global branch is the hyper-holomorphic one
    "om1_c1_k3_theta0": ["--family", "tcp2_dhym_om1", "--c", "1", "--k", "3", "--theta", "0"],
    "om1_c1_k3_theta2": ["--family", "tcp2_dhym_om1", "--c", "1", "--k", "3", "--theta", "2"],
    # tan(theta) = 2ck / (k^2 - c^2) = 3/4 makes a2 = k a triple root at the bolt
    "om1_c1_k3_triple": ["--family", "tcp2_dhym_om1", "--c", "1", "--k", "3",
                         "--theta", repr(math.atan(0.75))],
    "om2_c1_k1_atan2": ["--family", "tcp2_dhym_om2", "--c", "1", "--k", "1",
                        "--theta", repr(math.atan(2.0))],
}

OTHER_RUNS = {
    "phase_grid": ["phase-grid", "--lo", "-10", "--hi", "10"],
    "cone_lambert_overlay": ["ode", "--c", "0", "--k", "0", "--C0", "1", "--C2", "1",
                             "--rmin", "1", "--rmax", "50", "--grid", "200"],
    "bs_series_start_a10": ["ode", "--c", "1", "--k", "0", "--C2", "1", "--a", "10",
                            "--rmax", "5", "--grid", "200"],
}


def run(argv):
    err = io.StringIO()
    with contextlib.redirect_stderr(err):
        code = main(argv)
    if code != 0:
        raise SystemExit(f"coframe {' '.join(argv)} exited with {code}: {err.getvalue()}")
    return err.getvalue().strip()


def regenerate(outdir: Path):
    outdir.mkdir(parents=True, exist_ok=True)
    for name, args in BRANCH_RUNS.items():
        path = outdir / f"branches_{name}.csv"
        summary = run(["branches", *args, "--rmax", "6", "--grid", "300", "--out", str(path)])
        print(f"{path}: {summary}")
    for name, args in OTHER_RUNS.items():
        path = outdir / f"{name}.csv"
        run([*args, "--out", str(path)])
        print(path)


if __name__ == "__main__":
    regenerate(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent / "output")
