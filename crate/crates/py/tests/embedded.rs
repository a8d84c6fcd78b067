use fountain_lab_py::fountain_lab_py as module;
use pyo3::ffi::c_str;
use pyo3::prelude::*;

#[test]
fn module_runs_inside_an_interpreter() {
    pyo3::append_to_inittab!(module);
    Python::initialize();
    Python::attach(|py| {
        let code = c_str!(
            r#"
import math
import fountain_lab_py as fl

one = fl.DegreeDistribution.point_mass(1)
assert abs(fl.s_of_r(0.5, one) - (1 - math.exp(-0.5))) < 1e-6
dist, a, m = fl.truncated_soliton(0.8)
assert m == 4 and dist.max_degree == 4 and len(dist) == 3
assert fl.dual_outer_bound(0.8) <= a
try:
    fl.truncated_soliton(0.5)
    raise AssertionError("accepted z = 0.5")
except ValueError as e:
    assert "out of range" in str(e)
symbols = fl.encode([b"a", b"b", b"c"], one, 10, 1)
values, count = fl.decode(symbols, 3)
assert count == sum(v is not None for v in values)
"#
        );
        py.run(code, None, None).unwrap();
    });
}
