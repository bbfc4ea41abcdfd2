use pyo3::prelude::*;
use pyo3::types::PyDict;

fn module(py: Python<'_>) -> Bound<'_, PyModule> {
    let m = PyModule::new(py, "subcheck_py").unwrap();
    subcheck_py::register(&m).unwrap();
    m
}

#[test]
fn classify_and_check_from_python() {
    Python::attach(|py| {
        let m = module(py);
        let r = m
            .getattr("classify_map")
            .unwrap()
            .call1((vec!["(x5 - x8)/sqrt(2)", "x6"], vec![0.2; 8]))
            .unwrap();
        let r = r.cast::<PyDict>().unwrap();
        let verdict: String = r.get_item("verdict").unwrap().unwrap().extract().unwrap();
        let theta: f64 = r.get_item("theta").unwrap().unwrap().extract().unwrap();
        assert_eq!(verdict, "semi-slant");
        assert!((theta - std::f64::consts::FRAC_PI_4).abs() < 1e-10);

        let kw = PyDict::new(py);
        kw.set_item("points", 3).unwrap();
        kw.set_item("only", vec!["jhat_squared"]).unwrap();
        let doc = m
            .getattr("check")
            .unwrap()
            .call((vec!["example8"],), Some(&kw))
            .unwrap();
        let status: String = doc.get_item("status").unwrap().extract().unwrap();
        assert_eq!(status, "pass");
    });
}

#[test]
fn errors_become_value_errors() {
    Python::attach(|py| {
        let m = module(py);
        let err = m.getattr("evaluate").unwrap().call1(("x1 +", vec![1.0])).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py));
    });
}
