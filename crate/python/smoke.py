"""Smoke test for the pynuhcert extension.

Build and install first:  pip install -e crates/py --no-build-isolation
"""

import json
import math

import pynuhcert as nc


def main():
    assert nc.l_homothety(5) == (2, 3)
    assert nc.l_general(2, 4) == (2, 3)
    assert nc.l_general(1, 2) == (0, 1)
    assert nc.elementary_divisors([2, 0, 0, 4]) == (2, 4)
    p, g = nc.normalize([2, 0, 0, 4])
    assert g[1] != 0, g  # (0,1) is not an eigenvector

    cfg = nc.Config("[shear]\nt = 300\nr = 300\n")
    assert nc.Config(cfg.to_text()).to_text() == cfg.to_text()

    f = nc.Endo(cfg)
    assert f.degree == 25
    x = (0.3, 0.7)
    pre = f.preimages(*x)
    assert len(pre) == 25
    for y in pre:
        fx = f.apply(*y)
        d = max(abs((a - b + 0.5) % 1.0 - 0.5) for a, b in zip(fx, x))
        assert d < 1e-9, d

    j = f.j_series(0.3, 0.7, 0.0, 1.0, 3)
    direct = f.i_direct(0.3, 0.7, 0.0, 1.0, 3)
    assert abs(sum(j) - direct) < 1e-8, (sum(j), direct)
    g_counts, a, bound = f.census(0.3, 0.7, 0.0, 1.0, 2)
    assert len(g_counts) == 3 and all(ai >= b - 1e-9 for ai, b in zip(a, bound))

    lp, lm = f.lyapunov(seed=1, steps=2000, burn_in=100)
    assert lp > math.log(25), lp
    assert abs(lp + lm - math.log(25)) < 1e-12

    code, text = nc.Config("[map]\nmatrix = 3, 0, 0, 3\n").run("certify")
    rep = json.loads(text)
    assert code == 1 and rep["schema"] == "nuh-report/1"
    code, _ = nc.Config("[map]\nmatrix = 0, 0, 0, 0\n").run("certify")
    assert code == 2

    print("smoke ok: L(5) = 2/3, 25 preimages, lambda+ = %.3f" % lp)


if __name__ == "__main__":
    main()
