use pyo3::ffi::c_str;
use pyo3::prelude::*;

fn run(code: &std::ffi::CStr) {
    pyo3::append_to_inittab!(qdilate_py);
    Python::initialize();
    Python::attach(|py| {
        if let Err(e) = py.run(code, None, None) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

use qdilate_py::qdilate_py;

#[test]
fn module_round_trip() {
    run(c_str!(
        r#"
import qdilate_py as qd
t = qd.generate({"kind": "compressed_rotational", "n": 2, "deg": 2, "scale": 0.8}, seed=0)
assert t.n == 2
assert t.verify_relations()["passed"]
back = qd.QTuple.from_json(t.to_json())
assert back.ops() == t.ops()
out = qd.pure_dilation(t)
assert out["passed"]
assert out["report"]["isometry_defect"] < 1e-8
pair = qd.QPair.scalar([[0.0]], [[0.4j]], 1j, "left")
assert qd.dilate_pair(pair, k_max=3)["passed"]
try:
    qd.QPair([[1.0]], [[1.0]], [[1.0, 0.0]])
    raise SystemExit("expected error")
except qd.QDilateError as e:
    assert str(e).startswith("not_square"), e
"#
    ));
}
