"""Smoke test for the `dcw` extension module.

Build and run:
    cargo build --release -p dcw-py --features extension-module
    cp target/release/libdcw.so python/dcw.so   # dcw.pyd / libdcw.dylib elsewhere
    python -m pytest python/smoke_test.py
"""
import math

import dcw


def test_fundamental_irrep():
    rep = dcw.Irrep(1)
    assert rep.dim == 2
    assert rep.weights == [1, -1]
    zeta, xi1, xi2 = rep.generators()
    assert zeta[0][0] == 1j and zeta[1][1] == -1j
    assert xi1 == [[0, 1], [-1, 0]]


def test_complex_rigidity():
    for k in range(1, 7):
        assert dcw.Eigenspace(k, 0, "complex").moduli().d == 0


def test_degree_two_disk():
    ed = dcw.Eigenspace(2, 0, "real")
    assert ed.gauge_condition()[0]
    body = ed.moduli()
    assert body.d == 2
    cls, lam = body.membership([0.0, 0.0])
    assert cls == "interior" and abs(lam - 1.0) < 1e-12
    assert body.membership([1.0, 0.0])[0] == "boundary"
    assert body.membership([2.0, 0.0])[0] == "outside"
    assert abs(body.boundary_radius([0.6, 0.8]) - 1.0) < 1e-9
    assert body.boundary_analysis([1.0, 0.0]) == (3, (1, 3), (4, 6))
    a, b = body.centralizer_action(math.pi / 2, [0.3, 0.1])
    assert abs(a + 0.3) < 1e-9 and abs(b + 0.1) < 1e-9
    quotient = body.image_quotient()
    assert quotient["kind"] == "interval" and abs(quotient["hi"] - 1.0) < 1e-9
    spec = body.map_from_c([0.5, 0.0])
    assert abs(spec.trace_t2() - 6.0) < 1e-12
    assert not spec.gauge_equivalent(ed.standard_map())
    report = spec.verify(seed=1, n_samples=4)
    assert all(report["passed"].values())


def test_isotypic_table():
    assert dcw.Eigenspace(2, 0, "real").isotypic_table() == [(5, 3, 3), (3, 1, 1), (1, 3, 3)]


def test_cases_and_acceptance():
    ids = [c[0] for c in dcw.list_cases()]
    assert "quadric-deg2" in ids and len(ids) == 6
    report = dcw.run_case("quadric-deg1", n_samples=4)
    assert report["passed"] and report["computed"]["moduli_dim"] == 0
    summary = dcw.run_acceptance()
    assert summary["passed"] and len(summary["criteria"]) == 11


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            fn()
            print("ok", name)
