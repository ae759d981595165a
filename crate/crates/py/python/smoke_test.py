"""Smoke test for the openbook_py extension module.

Build and install with `pip install --no-build-isolation -e crates/py`, then
run `python crates/py/python/smoke_test.py`.
"""

import json
import math

import openbook_py as ob


def close(a, b, tol=1e-12):
    return all(abs(x - y) <= tol for x, y in zip(a, b))


def main():
    assert "all" in ob.suites()

    q, p = ob.project([3.0, 0.0, 4.0], [1.0, 1.0, 1.0])
    assert abs(math.hypot(*q) - 1.0) < 1e-15
    assert abs(sum(a * b for a, b in zip(q, p))) < 1e-15

    # Odd twists send the zero section to the antipode, and the twist is
    # the identity once |p| >= p0.
    tq, tp = ob.dehn_twist([0.0, 1.0], [0.0, 0.0], k=1)
    assert close(tq, [0.0, -1.0]) and close(tp, [0.0, 0.0])
    tq, tp = ob.dehn_twist([1.0, 0.0], [0.0, 2.0])
    assert (tq, tp) == ([1.0, 0.0], [0.0, 2.0])

    gq, gp = ob.geodesic_flow([1.0, 0.0], [0.0, 1.0], math.pi)
    assert close(gq, [-1.0, 0.0]) and close(gp, [0.0, -1.0])

    # Start on page z.w = -0.1; the image lies on page +0.1.
    z, w = ob.monodromy_closed_form([0.5, 0.0], [-0.2, 1.0], 0.1)
    assert close(z, [0.5, 0.0]) and close(w, [0.2, 1.0])
    assert abs(z[0] * w[0] + z[1] * w[1] - 0.1) < 1e-15
    try:
        ob.monodromy_closed_form([0.0, 0.0], [0.0, 1.0], 0.1)
    except ValueError:
        pass
    else:
        raise AssertionError("z = 0 must be rejected")

    text = "openbook v1\nn 2\nhandle h0 0 std\nhandle h1 1 std\nsphere a h0,h1\nword a a\n"
    canon = ob.canonical_openbook(text)
    assert canon.startswith("openbook v1")
    assert ob.equivalent(text, canon) is not None

    report = json.loads(ob.run("binding", seed=3))
    assert report["suite"] == "binding" and report["config"]["seed"] == 3
    assert report["passed"], [c["name"] for c in report["checks"] if not c["passed"]]

    report = json.loads(ob.run("moves", config="[samples]\nmove_chains = 5\n"))
    assert report["config"]["samples"]["move_chains"] == 5
    print("smoke test ok:", len(report["checks"]), "move checks")


if __name__ == "__main__":
    main()
