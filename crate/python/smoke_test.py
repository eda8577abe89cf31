"""Smoke test for the kicked_top Python extension.

Build the extension first:

    cargo build --release -p kicked-top-py --features extension-module

then run `python3 python/smoke_test.py` from the repository root. The
script loads target/release/libkicked_top_py.so (or the path given in
KICKED_TOP_LIB) under the module name `kicked_top`.
"""

import cmath
import importlib.util
import json
import math
import os
import pathlib
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    lib = os.environ.get("KICKED_TOP_LIB")
    if lib is None:
        candidates = [ROOT / "target" / "release" / name
                      for name in ("libkicked_top_py.so", "libkicked_top_py.dylib", "kicked_top_py.dll")]
        lib = next((str(c) for c in candidates if c.exists()), None)
    if lib is None:
        sys.exit("extension not built; see the module docstring")
    spec = importlib.util.spec_from_file_location("kicked_top", lib)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    kt = load()

    psi = kt.SpinState.coherent(10.0, 1.7416, 2.8728)
    assert psi.dim == 21
    close(psi.norm(), 1.0, 1e-12)
    bx, by, bz = psi.bloch_vector()
    close(bx, math.sin(1.7416) * math.cos(2.8728), 1e-9)
    close(by, math.sin(1.7416) * math.sin(2.8728), 1e-9)
    close(bz, math.cos(1.7416), 1e-9)

    f = kt.FloquetOperator(10.0, 2 * math.pi * 0.95, 5.0)
    m = f.matrix()
    for r in range(f.dim):
        for c in range(f.dim):
            s = sum(m[k][r].conjugate() * m[k][c] for k in range(f.dim))
            close(abs(s - (1 if r == c else 0)), 0.0, 1e-12)
    phases = f.eigenphases()
    assert phases == sorted(phases) and 0 <= phases[0] and phases[-1] < 2 * math.pi
    close(f.overlap_entropy(f.eigenvector(3)), 0.0, 1e-10)
    close(f.evolve(psi, 100).norm(), 1.0, 1e-12)

    rho = kt.two_qubit_rdm(psi)
    close(abs(sum(rho[k][k] for k in range(4)) - 1), 0.0, 1e-12)
    assert kt.linear_entropy(psi) < 1e-12
    e = f.time_averaged_entanglement(psi, 50)
    assert 0.0 < e <= 2 / 3

    w = kt.SpinState([0, 1, 0, 0])
    close(kt.linear_entropy(w), 4 / 9, 1e-12)
    close(kt.SpinState([0, 1j, 0]).amplitudes()[1].imag, 1.0, 1e-15)

    close(kt.page_average(2, 2), 1 / 3, 1e-15)
    mean, se = kt.haar_random_bipartite_entropy(2, 2, 2000, seed=1)
    assert abs(mean - 1 / 3) < 3 * se

    theta, phi = kt.classical_step(math.pi / 2, 0.0, math.pi / 2, 0.0)
    close(theta, math.pi, 1e-12)
    assert abs(kt.lyapunov_exponent(1.2, 0.4, 1.0, 0.0)) < 1e-3
    grid = kt.classify_grid(2 * math.pi * 0.95, 0.0, 4, 8)
    assert len(grid) == 32 and all(label == "regular" for *_, label in grid)

    q = kt.husimi_grid(psi, 32, 64)
    area = 4 * math.pi / (32 * 64)
    close(sum(map(sum, q)) * area, 1.0, 1e-6)

    try:
        kt.SpinState.coherent(2.3, 0.0, 0.0)
    except ValueError:
        pass
    else:
        raise AssertionError("invalid j accepted")

    with tempfile.TemporaryDirectory() as out:
        manifest = json.loads(kt.run_experiment("kappa_sweep", out, "kappa_grid = [0.5, 3.0]\nn_kicks = 20\n"))
        assert manifest["config"]["kappa_grid"] == [0.5, 3.0]
        assert (pathlib.Path(out) / "kappa_sweep.csv").exists()
        assert (pathlib.Path(out) / "manifest.json").exists()

    print(f"kicked_top {kt.__version__}: python smoke test passed")


if __name__ == "__main__":
    main()
