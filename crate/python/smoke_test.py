"""Smoke test for the ylyap_py extension module.

Build and install first:

    cd crates/python && maturin build --release -o dist && pip install dist/*.whl
    python python/smoke_test.py
"""

import math

import ylyap_py as yl


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b} (tol {tol})"


def main():
    # Paths and p-variation: a monotone path has p-variation equal to its total increment.
    line = yl.Path([0.0, 0.5, 1.0], [0.0, 1.0, 2.0])
    close(line.p_variation(1.5), 2.0, 1e-12)
    assert line.shape == (1, 1) and len(line) == 3

    # Young integral of x = t against w = t over [0, 1] is 1/2 in the limit.
    grid = [k / 4096 for k in range(4097)]
    t = yl.Path(grid, grid)
    close(yl.young_integral(t, t, 0.0, 1.0)[0][0], 0.5, 1e-3)

    # Scalar equation dx = a x dt + c x dw with w(t) = t: x(1) = exp(a + c).
    eq1 = yl.Equation.constant([[0.3]], [[-0.2]], 0.0, 1.0)
    rep = yl.solve(eq1, [1.0], t, 0.0, 1.0)
    close(rep["final_value"][0], math.exp(0.1), 1e-9)
    assert rep["bounds_hold"]

    # fBm driver, flows and Liouville on a 2x2 system.
    omega = yl.fbm(0.7, 1 / 64, 40.0, seed=5)
    eq = yl.Equation.constant([[-0.5, 1.0], [0.0, 0.5]], [[0.1, 0.2], [0.0, -0.1]], 0.0, 40.0)
    phi = yl.flow(eq, omega, 0.0, 3.0)
    det = phi[0][0] * phi[1][1] - phi[0][1] * phi[1][0]
    close(math.log(abs(det)), yl.liouville(eq, omega, 0.0, 3.0), 1e-9)
    back = yl.flow(eq, omega, 3.0, 0.0)
    prod = [[sum(back[i][k] * phi[k][j] for k in range(2)) for j in range(2)] for i in range(2)]
    close(prod[0][0], 1.0, 1e-8)
    close(prod[0][1], 0.0, 1e-8)

    # Spectrum vs the triangular oracle {0.5, -0.5}.
    spec = yl.spectrum(eq, omega, 30.0)
    oracle = yl.triangular_spectrum(eq, 30.0)
    assert oracle["exact"]
    for lam, ref in zip(spec["lambdas"], oracle["spectrum"]):
        close(lam, ref, 0.1)
    bound = yl.exponent_bound(eq, yl.gamma_p(omega, 1.5, 30))
    assert all(abs(l) <= bound for l in spec["lambdas"])

    reg = yl.nonregularity(eq, omega, 30.0)
    assert reg["regular"], reg

    try:
        yl.fbm(0.3, 0.1, 1.0, seed=0)
    except ValueError:
        pass
    else:
        raise AssertionError("H = 0.3 should be rejected")

    print(f"ylyap_py {yl.__version__}: smoke test passed; spectrum {spec['lambdas']}")


if __name__ == "__main__":
    main()
