"""Smoke test for the Python bindings. Build with `maturin develop -m crates/py/Cargo.toml`, then run this file."""

import json

import commutant


def main():
    su2 = commutant.Chain.parse(
        "[generators]\nl1 l2 l3\n\n[brackets]\nl1 l2 = i*l3\nl2 l3 = i*l1\nl3 l1 = i*l2\n\n[subalgebra]\nl3\n",
        "su2",
    )
    assert su2.dim == 3 and su2.subalgebra == ["l3"]
    assert su2.bracket("l1", "l2") == "i*l3"
    assert su2.is_casimir("l1^2 + l2^2 + l3^2")

    surfon = commutant.Chain.builtin("surfon")
    gc = surfon.sweep(4)
    assert gc.dimensions == [0, 2, 0, 7], gc.dimensions
    assert gc.indecomposable_counts == [0, 2, 0, 4], gc.indecomposable_counts
    assert surfon.normalize("l1*lm1 + l0^2") in gc.basis(2)

    elliott = commutant.Chain.builtin("elliott").sweep(6)
    assert elliott.indecomposable_counts == [0, 2, 2, 1, 0, 1]
    gens = elliott.generators()
    assert len(gens) == 6 and len(gens.central) == 3
    closes = [rel for rel in gens.closure() if rel[3] == "0"]
    assert len(closes) == 15

    seniority = commutant.Chain.builtin("seniority")
    assert seniority.label_counts(2, 2) == {"i0": 6, "n0": 1, "rho0": 3}

    try:
        commutant.Chain.builtin("supermultiplet").invariant_space(6, budget=100)
    except commutant.ResourceError:
        pass
    else:
        raise AssertionError("expected a resource error")

    try:
        commutant.Chain.parse("[brackets]\n")
    except commutant.ParseError:
        pass
    else:
        raise AssertionError("expected a parse error")

    code, report = commutant.run_cli(["validate", "--chain", "elliott"])
    assert code == 0 and json.loads(report)["status"] == "ok"
    print("smoke test passed")


if __name__ == "__main__":
    main()
