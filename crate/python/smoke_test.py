"""Smoke test for the stcmc extension module.

Build and run:

    cargo build --release -p stcmc-python --features extension-module
    cp target/release/libstcmc.so python/stcmc.so
    python3 python/smoke_test.py
"""

import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import stcmc  # noqa: E402


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b} (tol {tol})"


def main():
    mesh = stcmc.Mesh.icosphere(4, 1.0)
    assert len(mesh) == 2562 and mesh.euler_characteristic == 2

    flat = stcmc.Geometry(mesh, stcmc.Model.minkowski())
    close(flat.area, 4 * math.pi, 1e-3)
    close(flat.hawking_energy(), 0.0, 1e-3)
    a = flat.stcmc_stability()
    close(a["variational_minimum"], 16.0, 0.32)
    close(a["threshold"], 16.0, 1e-3)

    schw = stcmc.Model.schwarzschild(1.0)
    r = schw.chart_radius_for_areal(10.0)
    geom = stcmc.Geometry(stcmc.Mesh.icosphere(4, r), schw)
    close(geom.hawking_energy(), 1.0, 2e-3)
    report = geom.energy_report()
    close(report["deficit"], 0.008, 1e-4)
    assert report["identity_residual"] < 1e-6

    es = flat.el_soufi_ilias()
    close(es["lhs"], es["rhs"], 0.01 * es["rhs"])
    lopsided = stcmc.Geometry(stcmc.Mesh.radial_graph(3, "1 + 0.1*z"), stcmc.Model.minkowski())
    assert lopsided.hersch_balance()["center_norm"] < 1e-8

    sigma_leaf = stcmc.solve_stcmc_radius(schw, 100.0)
    close(stcmc.leaf_hawking(schw, sigma_leaf), 1.0, 1e-9)
    close(stcmc.null_leaf_margin(100.0, 1.0)["margin"], 2e-6, 1e-18)

    out = stcmc.run_config(
        """
[model]
kind = "schwarzschild"
mass = 1.0

[surface]
kind = "sphere"
radius = 10.0
placement = "areal"
level = 3

[analyses]
run = ["geometry", "energies"]
"""
    )
    assert out["schema_version"] == stcmc.SCHEMA_VERSION
    assert all("error" not in a for a in out["analyses"])

    try:
        stcmc.Model.schwarzschild(-1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative mass accepted")

    print("stcmc smoke test passed")


if __name__ == "__main__":
    main()
