"""Smoke test for the sparse_qi extension module.

Build and install first:
    pip install --no-build-isolation ./crates/python
"""

import math

import sparse_qi


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    spec = sparse_qi.Spec("hybrid", p=2.0, theta=1.0, q=2.0, r=4, d=2, alpha=1.5, beta=-0.5)
    close(spec.nu(), 1.0, 1e-12)

    smallest = spec.level_set_for_budget(4)
    assert smallest.levels == [[0, 0]] and smallest.budget() == 4

    f = lambda x: math.sin(math.pi * x[0]) * math.sin(math.pi * x[1])
    exact = sparse_qi.exact_integral("sine", 2)

    ns, errors = [], []
    for n in (100, 1000, 10000, 100000):
        delta = spec.level_set_for_budget(n)
        rule = sparse_qi.CubatureRule(delta, 4)
        close(rule.weight_sum(), 1.0, 1e-10)
        rec = sparse_qi.Reconstruction.build(f, delta, 4)
        close(rule.apply(f), rec.integral(), 1e-10)
        ns.append(delta.budget())
        errors.append(abs(rule.apply(f) - exact))
        assert abs(rec([0.3, 0.7]) - f([0.3, 0.7])) < 0.1

    cubic = lambda x: x[0] ** 3 * x[1] ** 2
    rec = sparse_qi.Reconstruction.build(cubic, sparse_qi.LevelSet.full_box([3, 3]), 4)
    close(rec([0.31, 0.77]), cubic([0.31, 0.77]), 1e-10)
    again = sparse_qi.Reconstruction.from_json(rec.to_json())
    assert again([0.1, 0.2]) == rec([0.1, 0.2])

    delta = sparse_qi.LevelSet.from_text(sparse_qi.LevelSet.full_box([2, 1]).to_text())
    values = [cubic(p) for p in delta.sample_points(4)]
    tabled = sparse_qi.Reconstruction.from_samples(delta, 4, values)
    close(tabled([0.5, 0.25]), cubic([0.5, 0.25]), 1e-12)

    try:
        sparse_qi.Spec("mixed", p=2.0, theta=2.0, q=2.0, r=4, a=[1.0, 1.5], epsilon=10.0)
    except ValueError as e:
        assert "epsilon" in str(e)
    else:
        raise AssertionError("invalid epsilon accepted")

    slope, _ = sparse_qi.rate(ns, errors)
    print(f"sparse_qi {sparse_qi.__version__}: cubature slope {slope:.3f}, errors {errors}")
    print("smoke test passed")


if __name__ == "__main__":
    main()
