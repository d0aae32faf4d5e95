//! Loads the module into an embedded interpreter and calls it from Python.

use pyo3::prelude::*;
use pyo3::types::PyDict;

use pss_response::pss_response;

fn run(code: &str) {
    pyo3::append_to_inittab!(pss_response);
    Python::attach(|py| {
        let globals = PyDict::new(py);
        let code = std::ffi::CString::new(code).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.print(py);
            panic!("python check failed");
        }
    });
}

#[test]
fn module_round_trip() {
    run(r#"
import math
import pss_response as pr

p = pr.Stabilizer(t5=3.0)
assert p.t5 == 3.0 and p.t6 == 0.028

r = pr.linear_response(1.0, math.pi / 4, math.pi / 4 - math.pi / 20, 0.3)
assert abs(r["v_pss"][0]) < 1e-12
assert abs(r["decay_rate"] - 0.15) < 1e-15

rows = pr.bode([1e-3, 1.0, 1e3], "pss")
assert len(rows) == 3 and rows[0][1] < rows[1][1]

try:
    pr.envelope_laplace(1.0, 0.3, 5.2, 4.9j)
except ArithmeticError:
    pass
else:
    raise AssertionError("no error at the singularity")
z = pr.envelope_transform(1.0, 0.3, 5.2, 4.9j)
assert abs(z - complex(2.6192684444217124, -0.0022076138147615465)) < 1e-12

try:
    pr.Stabilizer(t5=-1.0)
except ValueError:
    pass
else:
    raise AssertionError("negative time constant accepted")
"#);
}
