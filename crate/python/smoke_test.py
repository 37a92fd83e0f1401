"""Smoke test for the phasespace_py extension.

Build it first with `pip install -e crates/py --no-build-isolation`, then run
`python3 python/smoke_test.py`.
"""

import json
import math
import os
import tempfile

import phasespace_py as ps


def close(a, b, tol):
    assert abs(a - b) < tol, (a, b)


def main():
    qubit = ps.SpinSystem(0.5)
    r3 = math.sqrt(3.0)
    d = qubit.parity_diagonal(0.0)
    close(d[0], (1 + r3) / 2, 1e-12)
    close(d[1], (1 - r3) / 2, 1e-12)

    up = ps.named_state(json.dumps({"kind": "spin_up", "params": {"j": 0.5}}))
    close(qubit.value(up, 0.3, 1.1), 0.5 * (1 + r3 * math.cos(0.3)), 1e-12)
    close(qubit.negativity(up), 0.077350, 1e-5)
    mixed = [[0.5, 0.0], [0.0, 0.5]]
    close(qubit.wehrl(mixed), math.log(2.0), 1e-6)
    close(qubit.expectation(up, "z"), 0.5, 1e-12)

    report = ps.KernelSpec.su2(1.0).verify(trials=4, seed=2)
    assert report["passed"], report

    spin1 = ps.SpinSystem(1.0)
    rho = ps.random_state(3, 9)
    est, info = spin1.reconstruct(spin1.sample_net(rho))
    err = max(abs(est[i][k] - rho[i][k]) for i in range(3) for k in range(3))
    assert err < 1e-8, err
    assert info["points"] == 36

    w = ps.wootters_wigner(ps.named_state('{"kind": "pauli", "params": {"axis": "z", "plus": true}}'))
    assert min(w) > -1e-12 and abs(sum(w) - 2.0) < 1e-12, w

    vac = ps.named_state('{"kind": "fock", "params": {"n_max": 30, "n": 0}}')
    close(ps.hw_wigner(vac, [0j, 1 + 0j])[0], 2.0, 1e-9)

    bell = ps.named_state('{"kind": "bell", "params": {"which": "phi_plus"}}')
    run = ps.dfe(bell, bell, samples=2000, seed=5)
    close(run["estimate"], 1.0, 1e-12)

    g = ps.GridFunction.coherent(8.0, 64, 2.0, 0.0)
    limit = g.step_limit("harmonic")
    steps = math.ceil((math.pi / 2) / (0.9 * limit))
    moved, diag = g.evolve("harmonic", (math.pi / 2) / steps, steps)
    assert diag["mass_drift"] < 1e-6, diag
    target = ps.GridFunction.coherent(8.0, 64, 0.0, -2.0)
    assert moved.sup_distance(target) < 1e-3
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "w.bin")
        moved.save(path)
        assert ps.GridFunction.load(path).values() == moved.values()

    try:
        ps.SpinSystem(0.75)
    except ps.PhaseSpaceError:
        pass
    else:
        raise AssertionError("half-odd j accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
