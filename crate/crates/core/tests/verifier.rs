use driftlab_core::exec::Exec;
use driftlab_core::verifier::{render_svg, run_suite, ExperimentReport, Figure, Series, Suite, SuiteParams};

#[test]
fn suite_ids_round_trip() {
    for s in Suite::ALL {
        assert_eq!(s.id().parse::<Suite>().unwrap(), s);
    }
    assert!("nope".parse::<Suite>().is_err());
}

#[test]
fn reports_round_trip_and_hash_their_config() {
    let small = SuiteParams { n_paths: 500, steps: 100, seed: 2, chunk: 200, models: None };
    let r = run_suite(Suite::DriftIdentity, &small, Exec::default()).unwrap();
    assert_eq!(r.checks.len(), 3);
    let back = ExperimentReport::from_json(&r.to_json().unwrap()).unwrap();
    assert_eq!(back.to_json().unwrap(), r.to_json().unwrap());
    let other = run_suite(Suite::DriftIdentity, &SuiteParams { seed: 3, ..small }, Exec::default()).unwrap();
    assert_ne!(other.config_hash, r.config_hash);
}

#[test]
fn invalid_params_are_rejected() {
    let p = SuiteParams { n_paths: 0, ..Suite::Occupation.default_params() };
    assert!(run_suite(Suite::Occupation, &p, Exec::default()).is_err());
}

#[test]
fn figures_render_to_svg() {
    let fig = Figure::Lines {
        name: "demo".into(),
        x_label: "h".into(),
        y_label: "error <&>".into(),
        log_log: true,
        series: vec![Series { label: "a".into(), x: vec![0.1, 0.05, 0.025], y: vec![1e-2, 5e-3, 2.5e-3] }],
    };
    let svg = render_svg(&fig);
    assert!(svg.contains("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains("&lt;&amp;&gt;"));
}
