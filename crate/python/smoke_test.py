"""Smoke test for the metaimp_py extension module.

Build and install it first:  pip install --no-build-isolation crates/python
"""

import math

import metaimp_py as m


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    # closed form against the value at (0, 1)
    g = m.g_periodic(0.0, 1.0)
    assert close(g, math.log(math.sinh(math.pi) ** 2) / (4 * math.pi), 1e-14), g
    assert m.g_halfspace((0.3, 0.0), (0.1, 0.5)) == 0.0

    disk = m.Boundary.disk((0.0, 0.5), 0.2, nodes=96)
    assert len(disk) == 96
    assert close(disk.area, math.pi * 0.04, 1e-12)

    ops = m.Operators(disk)
    assert ops.calderon_residual() < 1e-8
    eig = ops.eigenvalues()
    assert all(abs(l) < 0.5 for l in eig)

    z, ratio = m.drude_gold(600.0)
    direct = ops.alpha_inf(disk, z)
    series = ops.alpha_inf(disk, z, path="spectral")
    assert abs(direct - series) <= 1e-8 * abs(direct)
    assert direct.imag > 0

    rows = m.sweep(disk, count=13)
    assert len(rows) == 13 and rows[0][0] == 300.0
    assert all(a.imag > 0 for _, a in rows)

    r = m.reflection(-direct, 1.0)
    assert abs(r) < 1.0
    assert m.reflection(0j, 1.0) == -1

    grad = m.shape_gradient(disk, ratio)
    assert len(grad) == len(disk)
    j, final = m.ascend(disk, ratio, steps=3)
    assert all(b >= a for a, b in zip(j, j[1:]))
    assert isinstance(final, m.Boundary)

    try:
        m.Boundary.disk((0.0, 0.5), 0.7)
    except ValueError:
        pass
    else:
        raise AssertionError("disk outside the cell was accepted")

    report = m.run_verify(fast=True, nodes=32)
    assert all(tier != "FAIL" for _, tier, _, _ in report), report

    print(f"ok: alpha_inf(600 nm) = {direct:.6g}, {len(report)} checks")


if __name__ == "__main__":
    main()
