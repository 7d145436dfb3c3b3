"""Smoke test for the dormant_py extension module.

Build and install first:

    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/dormant_py-*.whl

then run `python python/smoke_test.py`.
"""

import math

import dormant_py as dp


def close(a, b, tol=1e-9):
    return abs(a - b) < tol


def main():
    psi3 = dp.build_psi3()
    bits = [line.split()[0] for line in psi3.dump().splitlines()]
    assert bits == ["000", "011", "101", "110"], psi3.dump()
    assert all(close(a.real, 0.5) for a in psi3.amplitudes if abs(a) > 1e-12)

    lock = dp.build_psi3l()
    assert lock.n_qubits == 4

    # the q1-q2 reduced state is separable, a Bell pair is not
    assert psi3.ppt_min_eigenvalue((1, 2)) >= -1e-10
    assert close(dp.bell(1).ppt_min_eigenvalue((1, 2)), -0.5)

    assert close(dp.chsh(psi3)["s_max"], math.sqrt(2))
    assert close(dp.chsh(dp.bell(2))["s_max"], 2 * math.sqrt(2))
    assert dp.chsh(dp.bell(2))["best_pattern"] == [1, 1, -1, 1]
    assert close(dp.chsh(lock)["s_max"], 0.0)
    assert len(dp.chsh(psi3, all_patterns=True)["s_per_pattern"]) == 8
    assert dp.rotation_sweep(psi3, trials=200, seed=1)["sup_s_max"] <= 2 + 1e-9

    assert [dp.classify(s) for s in (dp.bell(3), dp.build_psi_n(5), lock)] == ["Type1", "Type2", "Type3"]

    h = dp.Unitary1Q.hadamard()
    rep = dp.conditional_report(psi3, 1, h, 2, h)
    assert close(rep["p_conditional_given_0"], 1.0) and rep["correlated"]
    assert close(dp.lockless_deviation(h, h), 0.5)
    u = dp.Unitary1Q.parse("u:0.6,0,0,0.8,0.3")
    assert str(u) == "u:0.6,0,0,0.8,0.3"

    table = dp.activation_table(lock, (1, 2), {3: dp.Unitary1Q.identity(), 4: h})
    assert len(table["rows"]) == 4
    assert all(close(r["concurrence"], 1.0) for r in table["rows"])

    psi5 = dp.build_psi_n(5)
    assert close(psi5.apply_permutation([3, 1, 5, 2, 4]).fidelity(psi5), 1.0)

    assert dp.plan_resources(5, 1) == {"n": 5, "k": 1, "point_to_point_qubits": 20, "collective_qubits": 5}

    session = dp.ChannelSession(5, (1, 2), seed=7)
    for c in session.controllers:
        session.measure(c, dp.Unitary1Q.identity())
    status = session.deliver_and_resolve()
    assert status.startswith("activated"), status
    payload = dp.StateVector.basis(1, "0").apply_1q(dp.Unitary1Q.random(3), 1)
    assert close(session.teleport(payload), 1.0, 1e-10)

    session = dp.ChannelSession(4, seed=1)
    session.measure(3, dp.Unitary1Q.identity())
    try:
        session.deliver_and_resolve()
    except dp.ProtocolError:
        pass
    else:
        raise AssertionError("resolve without consensus should fail")

    try:
        dp.build_psi_n(1)
    except ValueError:
        pass
    else:
        raise AssertionError("n = 1 should be rejected")

    print("dormant_py smoke test passed")


if __name__ == "__main__":
    main()
