"""Quick checks of the hsharp_py extension. Run after `maturin develop`."""

import math

import hsharp_py as hs


def main():
    g = hs.GroupParams(1)
    assert g.q_dim == 4
    assert math.isclose(hs.hnorm(1, [1.0, 0.0, 0.0]), 1.0)
    assert hs.group_mul(1, [1, 0, 0], [0, 1, 0]) == [1.0, 1.0, -2.0]

    # classical case: q = 2, λ = -1/2 gives σ = -Q/2 for a single factor
    p = hs.ParamSet(1, [2.0], -0.5, [0.0])
    p.validate(strict=False)
    e = p.exponents()
    for kind in ("hlp", "hilbert"):
        c = hs.closed_form(kind, e, g)
        o = hs.oracle(kind, e, g)
        assert abs(c - o) <= 1e-8 * c, (kind, c, o)
        assert hs.reconcile(kind, e, g)["passed"]

    assert not hs.ExponentSet(4, [0.5]).is_admissible()
    try:
        hs.closed_form("hlp", hs.ExponentSet(4, [0.5]), g)
    except ValueError:
        pass
    else:
        raise AssertionError("non-admissible exponents must raise")

    back = hs.ParamSet.from_json(p.to_json())
    assert back.q_list == p.q_list and back.lambda_list == p.lambda_list

    f = hs.extremizer(e, 1, 1e-2, 1e2)
    space = hs.MorreySpace.source(p, 0)
    norm = hs.morrey_norm(f, space, g, samples=2000)
    assert norm["value"] > 0

    reports = hs.group_axioms(1, samples=500, seed=3)
    assert all(r["passed"] for r in reports)

    out = hs.sharpness_ratio("hilbert", hs.ParamSet(1, [2.0], -0.25, [0.0]), 1e-2, 1e2, samples=4000)
    print("sharpness ratio/constant", out["ratio"] / out["constant"])
    print("ok")


if __name__ == "__main__":
    main()
