"""Smoke test for the cipeem extension module.

Build and install first:

    pip install maturin
    maturin develop --release -m crates/python/Cargo.toml

then run ``python python/smoke_test.py``.
"""

import math
import os
import sys
import tempfile

import cipeem


def check(cond, msg):
    if not cond:
        print("FAIL:", msg)
        sys.exit(1)
    print("ok:", msg)


def main():
    mesh = cipeem.Mesh(2)
    check(mesh.num_tets == 48, "cub6 mesh of n=2 has 48 tets")
    check(mesh.euler_characteristic() == 1, "Euler characteristic is 1")
    check(mesh.num_dofs == 196, "196 unknowns at n=2")
    stats = mesh.stats()
    check(stats["faces_per_class"][2] == 0, "no diagonal-3d interior faces")

    gamma = cipeem.paper_gamma()
    check(abs(gamma[0].real + math.sqrt(2) / 24) < 1e-15, "preset gamma_1")

    eem = cipeem.solve(kappa=3.0, n=4, method="eem")
    cip = cipeem.solve(kappa=3.0, n=4, method="cip", gamma="paper")
    for s in (eem, cip):
        e = s.errors()
        check(0.0 < e["rel_hcurl"] < 0.5, f"{s.method} rel H(curl) error {e['rel_hcurl']:.3e}")
        check(s.residual <= 1e-10, f"{s.method} residual {s.residual:.1e}")

    zero = cipeem.solve(kappa=3.0, n=4, method="cip", gamma="zero")
    check(zero.coefficients == eem.coefficients, "CIP with gamma=0 reproduces EEM")

    e_val, curl_val = eem.evaluate((1.5, 1.5, 1.5))
    check(len(e_val) == 3 and len(curl_val) == 3, "point evaluation")

    with tempfile.TemporaryDirectory() as d:
        vtk = os.path.join(d, "e.vtk")
        eem.write_vtk(vtk)
        with open(vtk) as f:
            text = f.read()
        check("VECTORS curlE_im double" in text, "VTK export")
        mtx = os.path.join(d, "a.mtx")
        eem.write_matrix_market(mtx)
        with open(mtx) as f:
            check(f.readline().startswith("%%MatrixMarket"), "MatrixMarket export")

    records, slopes = cipeem.convergence(kappa=3.0, n_list=[2, 4, 8], method="eem")
    check(len(records) == 3 and list(records[0].keys()) == cipeem.CSV_COLUMNS, "convergence records")
    check(0.7 < slopes[0]["rel_hcurl"] < 1.3, f"H(curl) slope {slopes[0]['rel_hcurl']:.3f}")

    check(abs(cipeem.fit_slope([1.0, 0.5, 0.25], [1.0, 0.25, 0.0625]) - 2.0) < 1e-12, "fit_slope")
    print("smoke test passed")


if __name__ == "__main__":
    main()
