use pyo3::ffi::c_str;
use pyo3::prelude::*;
use stcmc::stcmc as module;

#[test]
fn module_runs_inside_an_embedded_interpreter() {
    pyo3::append_to_inittab!(module);
    Python::initialize();
    Python::attach(|py| {
        let code = c_str!(
            r#"
import math, stcmc
mesh = stcmc.Mesh.icosphere(3, 1.0)
g = stcmc.Geometry(mesh, stcmc.Model.minkowski())
assert abs(g.area - 4 * math.pi) < 0.01
assert abs(g.hawking_energy()) < 1e-2
s = g.stcmc_stability()
assert s["kind"] == "stcmc" and abs(s["threshold"] - 16) < 0.05
m = stcmc.Model.schwarzschild(2.0)
r = stcmc.solve_stcmc_radius(m, 200.0)
assert abs(stcmc.leaf_hawking(m, r) - 2.0) < 1e-9
try:
    stcmc.Mesh([[0, 0, 0]], [[0, 1, 2]])
    raise SystemExit("bad mesh accepted")
except ValueError:
    pass
"#
        );
        py.run(code, None, None).unwrap();
    });
}
