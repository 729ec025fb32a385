"""Smoke test for the pyswapnet extension module.

Build and install first, e.g. `maturin develop -m crates/python/Cargo.toml`
or `pip install --no-build-isolation ./crates/python`, then run
`python python/smoke_test.py`.
"""

import json

import numpy as np

import pyswapnet as sw


def main():
    p = sw.ControlParameters.random(2, 3, seed=1)
    assert p.n_qubits == 2 and p.harmonics == 3
    assert len(p.coefficients()) == 35

    back = sw.ControlParameters.from_json(p.to_json())
    assert back.coefficients() == p.coefficients()
    assert json.loads(p.to_json())["n_qubits"] == 2

    h = np.array(p.hamiltonian(0.25))
    assert np.allclose(h, h.conj().T)

    samples = sw.training_set(2, 3, seed=4)
    assert [s[0] for s in samples][:4] == ["basis-0", "basis-1", "basis-2", "basis-3"]
    rho = samples[4][1]
    out = np.array(sw.evolve(p, rho, n_steps=200))
    assert abs(np.trace(out) - 1) < 1e-12
    assert np.allclose(out, out.conj().T)

    noisy = np.array(sw.evolve(p, rho, n_steps=200, noise_kind="complex_noise", rnp=1e-4, seed=3))
    assert np.allclose(noisy, noisy.conj().T, atol=1e-12)

    trained, history = sw.train(p, n_random=4, max_epochs=3, n_steps=100)
    accepted = [rms for _, rms, _, ok in history if ok]
    assert accepted == sorted(accepted, reverse=True)
    mean, std = sw.evaluate(trained, n_random=5, n_steps=100)
    assert mean >= 0 and std == 0

    big = sw.replicate(trained, 2)
    assert big.n_qubits == 4
    try:
        sw.replicate(big, 2)
    except ValueError:
        pass
    else:
        raise AssertionError("replicating a 4-qubit source must fail")

    orders, jac, ok = sw.oracle_check()
    assert ok and all(abs(o - 4) <= 0.3 for o in orders) and jac <= 1e-4
    print(f"ok: orders {orders}, jacobian error {jac:.2e}, short-run rms {mean:.3e}")


if __name__ == "__main__":
    main()
