"""Smoke test for the Python bindings.

Build and run from the repository root:

    cargo build -p thintree-py --features extension-module
    cp target/debug/libthintree_py.so crates/py/python/thintree_py.so
    python3 crates/py/python/smoke_test.py
"""

import json
import math

import thintree_py as tt


def check_resistances():
    g = tt.random_connected(8, 6, seed=3)
    reff = g.effective_resistances()
    assert len(reff) == g.m
    assert math.isclose(sum(reff), g.n - 1, abs_tol=1e-8)


def check_round_trips():
    g = tt.dyadic(2, 3)
    assert tt.Graph.from_text(g.to_text()).edges() == g.edges()
    h = tt.Hierarchy.chain(2)
    assert tt.Hierarchy.from_json(h.to_json()).marked() == h.marked()
    assert json.loads(h.to_json())["format"] == 1


def check_shortcut():
    g = tt.random_connected(6, 4, seed=1)
    d, k = tt.single_pair_shortcut(g, 0, 5)
    assert k >= 1 and len(d) == g.n


def check_solve_and_pipeline():
    g = tt.dyadic(2, 3)
    h = tt.Hierarchy.chain(2)
    sol = tt.solve_cp(g, "tree", "box", hierarchy=h)
    assert sol["objective"] > 0
    trace = tt.extract_good_edges(g, h, k=3)
    report = tt.certify_pipeline(g, trace)
    assert report["connectivity"] >= 1
    assert report["iterations"] == len(trace["iterations"])


def check_balls():
    g = tt.random_connected(5, 4, seed=2)
    y = [[((e * 7 + v * 3) % 5) / 5 - 0.4 for v in range(g.n)] for e in range(g.m)]
    res = tt.greedy_balls(g, y, eps=0.25)
    assert res["claimHolds"]
    b = tt.bucket([(1.0, 1.2), (1.1, 1.3), (0.2, 0.3)], 0.5)
    assert b["subset"]


def check_errors():
    try:
        tt.ladder(10, 3)
    except tt.ThintreeError as e:
        assert str(e).startswith("Indivisible")
    else:
        raise AssertionError("expected an error")


if __name__ == "__main__":
    for name, check in list(globals().items()):
        if name.startswith("check_"):
            check()
            print(f"ok {name[6:]}")
    print(f"thintree_py {tt.__version__}: all checks passed")
