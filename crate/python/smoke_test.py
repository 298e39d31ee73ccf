"""Smoke test for the cutiga_py extension module.

Build and install first:

    pip install --no-build-isolation -e crates/python
"""

import math

import numpy as np

import cutiga_py as cg


def check_domain():
    dom = cg.Domain.circle(0.26, t=0.4)
    counts = dom.counts()
    assert counts["cut"] > 0 and counts["interior"] > 0
    assert abs(sum(dom.element_areas()) - dom.area) < 1e-10
    assert dom.contains(0.0, 0.0) and not dom.contains(1.5, 0.0)
    sq = cg.Domain.square(8, delta_cut=0.5)
    assert abs(sum(sq.element_areas()) - 1.0) < 1e-12
    try:
        cg.Domain.square(8, delta_cut=1.5)
    except ValueError:
        pass
    else:
        raise AssertionError("delta_cut = 1.5 accepted")


def check_system():
    dom = cg.Domain.circle(0.26, t=0.1)
    params = cg.Params(tau=0.1, variant="ls")
    rows, cols, vals, rhs = cg.assemble_system(dom, params)
    n = len(rhs)
    a = np.zeros((n, n))
    a[rows, cols] = vals
    assert np.array_equal(a, a.T)
    ev = np.linalg.eigvalsh(a)
    assert ev[0] >= -1e-10 * ev[-1]

    norms = cg.energy_norms(dom, params)
    removed, kept = cg.basis_removal(norms, params.c, dom.h)
    assert len(removed) + len(kept) == n
    ext = cg.eigen_extremes(dom, params, removal=True)
    sub = np.linalg.eigvalsh(a[np.ix_(kept, kept)])
    assert math.isclose(ext["lambda_min"], sub[0], rel_tol=1e-8)
    assert math.isclose(ext["lambda_max"], sub[-1], rel_tol=1e-10)
    assert ext["lambda_min"] > 0


def check_solve():
    params = cg.Params(tau=0.1)
    errs, hs = [], []
    for n in (8, 16, 32):
        sol = cg.solve(cg.Domain.square(n), params, removal=False)
        errs.append(sol["l2_error"])
        hs.append(1.0 / n)
    rates = cg.convergence_rates(hs, errs)
    assert all(r > 2.8 for r in rates), rates

    dom = cg.Domain.circle(0.13, t=0.5)
    vals = cg.evaluate(dom, params, [0.0, 0.3], [0.0, -0.2])
    exact = [0.1 * (math.sin(2 * x) + x * math.cos(3 * y)) for x, y in [(0.0, 0.0), (0.3, -0.2)]]
    assert max(abs(u - e) for u, e in zip(vals, exact)) < 1e-4


def check_studies():
    s = cg.circle_convergence(cg.Params(tau=0.1), hs=[0.26, 0.13], shifts=3)
    assert len(s["records"]) == 6 and len(s["rates"]) == 1
    c = cg.condition_study(cg.Params(tau=0.1), h=0.26, shifts=3)
    assert all(r["lambda_min_br"] > 0 for r in c["records"])
    e = cg.eigen_study(base_n=6, levels=2, delta_cuts=[0.0], taus=[0.1], variants=["ls"])
    assert len(e) == 1 and all(r["lambda_min"] > 0 for r in e[0]["records"])


if __name__ == "__main__":
    for check in (check_domain, check_system, check_solve, check_studies):
        check()
        print(f"{check.__name__}: ok")
    print("smoke test passed")
