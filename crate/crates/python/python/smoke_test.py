"""Smoke test for the rescon_py extension module."""

import json

import rescon_py


def main():
    system = rescon_py.System.five_bus()
    assert (system.n, system.p, system.m) == (18, 4, 2)
    assert sorted(system.links) == [(1, 1), (1, 2), (2, 3), (2, 4)]

    assert not system.has_fixed_modes()
    rows = system.analyze()
    assert len(rows) == 5 and all(r["condition_a"] and r["condition_b"] for r in rows)

    sol = system.codesign(k=1)
    assert sorted(sol.actuators) == [11, 11, 13, 13]
    assert sorted(sol.sensors) == [10, 12]
    assert sol.verified and sol.cost() == 10
    assert json.loads(sol.to_json())["k"] == 1

    printed = [[0.6445, 0.0], [-0.3043, 0.0], [0.0, -1.0079], [0.0, -0.0000043329]]
    report = system.verify(printed)
    expected = [0.9918, 0.9981, 0.9983, 0.9989, 0.9918]
    assert all(abs(r["block_radius"] - e) < 1e-3 for r, e in zip(report, expected))

    open_loop = [[0.0] * 2 for _ in range(4)]
    assert abs(system.verify(open_loop)[0]["closed_loop_radius"] - 1.0072) < 1e-3

    scalar = rescon_py.System.from_matrices([[1.5]], [[1.0]], [[1.0]], links=[(1, 1)])
    result = scalar.stabilize()
    assert result.status == "stabilized", result
    assert -2.5 < result.gain[0][0] < -0.5

    assert rescon_py.spectral_radius([[0.5, 0.0], [0.0, -0.25]]) == 0.5
    assert system.to_dot().startswith("digraph")

    again = rescon_py.System.from_json(system.to_json())
    assert again.links == system.links

    try:
        system.verify([[1.0, 1.0]] * 4)
    except ValueError:
        pass
    else:
        raise AssertionError("gain outside the link pattern was accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
