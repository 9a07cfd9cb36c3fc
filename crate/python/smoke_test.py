"""Smoke test for the Python bindings.

Uses an installed `hybrid_koopman_py` (e.g. from `maturin develop`), or falls
back to the shared library produced by
`cargo build -p hybrid-koopman-py --features extension-module`.
"""

import importlib.util
import json
import math
import pathlib
import sys


def load():
    try:
        import hybrid_koopman_py

        return hybrid_koopman_py
    except ImportError:
        pass
    root = pathlib.Path(__file__).resolve().parent.parent
    for profile in ("debug", "release"):
        lib = root / "target" / profile / "libhybrid_koopman_py.so"
        if lib.exists():
            spec = importlib.util.spec_from_file_location("hybrid_koopman_py", lib)
            module = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(module)
            return module
    sys.exit("hybrid_koopman_py not found; build it first")


hk = load()

e = hk.Expr("sin(q) * p^2 + 1")
assert abs(e(0.5, 2.0) - (math.sin(0.5) * 4 + 1)) < 1e-12
assert "harmonic" in hk.PRESETS

grid = hk.Grid((-5.0, 5.0), (-5.0, 5.0), 16, 16)
assert len(grid) == 256 and len(e.on_grid(grid)) == 256

rho_q = [[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]]
state = hk.State.product(grid, "exp(-((q - 1)^2 + p^2) / 1.28)", rho_q)
marginal = state.quantum_marginal()
assert abs(marginal[0][1] - (0.2 - 0.1j)) < 1e-12
assert abs(sum(state.classical_marginal()) * grid.cell_volume - 1.0) < 1e-12

h = hk.Hamiltonian(grid, "harmonic", [[0.5, 0], [0, -0.5]])
assert h.hermiticity_defect() < 1e-12
traj = hk.Trajectory(state, h)
snap = traj.at(2.0)
assert abs(snap.trace() - 1.0) < 1e-10
assert snap.min_eigenvalue() > -1e-9
q_rot = snap.quantum_marginal()
expected = (0.2 - 0.1j) * complex(math.cos(2.0), -math.sin(2.0))
assert abs(q_rot[0][1] - expected) < 1e-10, q_rot

fine = hk.Grid.periodic_square(9.0, 24)
osc = hk.Hamiltonian.qubit_oscillator(fine, 1.0, 0.5, "fourier")
start = hk.State.product(fine, "exp(-((q - 1)^2 + p^2) / 2)", [[1, 0], [0, 0]])
drift = hk.back_reaction(start, osc, [0.0, 1.0], "coherent")
print(f"back-reaction drift {drift:.2e}")

verdicts = hk.validate(hk.Hamiltonian.qubit_oscillator(hk.Grid.periodic_square(6.0, 8), 1.0, 0.3))
assert verdicts["trace"] and verdicts["positivity"], verdicts

config = pathlib.Path(__file__).resolve().parent.parent / "crates/cli/configs/decoupled_harmonic.json"
header, rows, checks = hk.run_scenario(config.read_text())
assert header[0] == "time" and len(rows) == 9
assert json.loads(checks)["passed"]

try:
    hk.Expr("q +* p")
except ValueError:
    pass
else:
    raise AssertionError("syntax error not reported")

print("python smoke test passed")
