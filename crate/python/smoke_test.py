"""Smoke test for the Python extension.

Builds the module with cargo if it is not importable yet, then checks a few
invariants:

    python3 python/smoke_test.py
"""

import importlib
import math
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    try:
        return importlib.import_module("qubit_thermo_py")
    except ImportError:
        pass
    subprocess.run(
        ["cargo", "build", "--release", "-p", "qubit-thermo-py"], cwd=ROOT, check=True
    )
    build = pathlib.Path(tempfile.mkdtemp())
    shutil.copy(ROOT / "target" / "release" / "libqubit_thermo_py.so", build / "qubit_thermo_py.so")
    sys.path.insert(0, str(build))
    return importlib.import_module("qubit_thermo_py")


def main():
    qt = load()
    protocol = qt.DriveProtocol()
    detector = qt.DetectorModel(delta_i=1.0, s0=2500.0)

    df = protocol.free_energy_difference(10.0)
    assert abs(df + 0.5203) < 1e-4, df

    ground = protocol.initial_eigenstate(0)
    traj = qt.integrate_trajectory(ground, protocol, detector, steps=3000, seed=2015)
    assert len(traj["rho11"]) == 3001
    assert traj["max_residual"] < 1e-12
    assert abs(traj["delta_u"] - traj["work"] - traj["heat"]) < 1e-12
    for r11, r12 in zip(traj["rho11"], traj["rho12"]):
        purity = r11 * r11 + (1 - r11) ** 2 + 2 * abs(r12) ** 2
        assert abs(purity - 1.0) < 1e-10

    dec = qt.transition_decomposition(protocol, detector, steps=1400, n_traj=20, seed=1)
    for n in range(2):
        assert abs(dec["p_tau"][0][n] + dec["p_tau"][1][n] - 1.0) < 1e-10
        for m in range(2):
            lhs = dec["p_tau"][m][n] - dec["p0"][m][n]
            assert abs(lhs - dec["dp_w"][m][n] - dec["dp_q"][m][n]) < 1e-10

    unitary = qt.unitary_transition_matrix(qt.DriveProtocol(tau=14.0), 1400)
    assert all(math.isfinite(x) for row in unitary for x in row)

    with tempfile.TemporaryDirectory() as out:
        files = qt.run_experiment(out, preset="fig2", n_traj=4)
        assert any(str(f).endswith("transitions.json") for f in files)

    try:
        qt.DensityMatrix(1.5)
    except ValueError:
        pass
    else:
        raise AssertionError("unphysical state accepted")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
