//! Parallel transport: reversal, isometry, orientation and the small-loop
//! curvature limit.

use lorhol::constructions::demo;
use lorhol::expr::Point;
use lorhol::linalg::{self, Mat};
use lorhol::metric::MetricChart;
use lorhol::transport::{transport_matrix, PathSpec};

const TOL: f64 = 1e-12;

fn chart() -> MetricChart {
    demo("toric-prwave").unwrap().chart
}

fn polyline(m: &MetricChart) -> PathSpec {
    PathSpec::Polyline(m.domain().shrink(0.1).halton(4, Some(3)))
}

#[test]
fn reversed_path_inverts_transport() {
    for m in [chart(), demo("footnote").unwrap().chart] {
        let path = polyline(&m);
        let p = transport_matrix(&m, &path, TOL).unwrap();
        let q = transport_matrix(&m, &path.reversed(), TOL).unwrap();
        let d = m.dim();
        let err = linalg::max_abs(&(q * p - Mat::identity(d, d)));
        assert!(err < 1e-9, "{err:e}");
    }
}

#[test]
fn transport_is_an_isometry_with_unit_determinant() {
    for m in [chart(), demo("corollary").unwrap().chart, demo("footnote").unwrap().chart] {
        let path = polyline(&m);
        let verts = path.vertices();
        let (a, b) = (verts.first().unwrap(), verts.last().unwrap());
        let p = transport_matrix(&m, &path, TOL).unwrap();
        let ga = m.metric_at(a).unwrap();
        let gb = m.metric_at(b).unwrap();
        let err = linalg::max_abs(&(p.transpose() * gb * &p - ga));
        assert!(err < 1e-9, "{err:e}");
        assert!((p.determinant() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn parallel_null_vector_is_preserved() {
    // f independent of x: ∂_x is parallel, so every transport fixes it.
    let m = demo("toric-ppwave").unwrap().chart;
    let p = transport_matrix(&m, &polyline(&m), TOL).unwrap();
    let d = m.dim();
    let col = p.column(0);
    for k in 0..d {
        let want = if k == 0 { 1.0 } else { 0.0 };
        assert!((col[k] - want).abs() < 1e-10);
    }
}

/// `(P − I)/h² + R(∂_i, ∂_j)` for the `h × h` loop in the `(i, j)` plane.
fn loop_defect(m: &MetricChart, base: &Point, i: usize, j: usize, h: f64) -> f64 {
    let d = m.dim();
    let path = PathSpec::Rectangle { base: base.clone(), i, j, hi: h, hj: h };
    let p = transport_matrix(m, &path, 1e-13).unwrap();
    let r = m.riemann(base).unwrap().operator(i, j);
    linalg::max_abs(&((p - Mat::identity(d, d)) / (h * h) + r))
}

#[test]
fn small_loops_recover_curvature_at_first_order() {
    let m = chart();
    let base = m.domain().center();
    let (i, j) = (1, m.dim() - 1);
    assert!(linalg::max_abs(&m.riemann(&base).unwrap().operator(i, j)) > 1e-2);
    let hs = [0.04, 0.02, 0.01];
    let defects: Vec<f64> = hs.iter().map(|&h| loop_defect(&m, &base, i, j, h)).collect();
    for w in defects.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.7..2.3).contains(&ratio), "defects {defects:?}");
    }
}

#[test]
fn path_outside_chart_is_rejected() {
    let m = chart();
    let mut far = m.domain().center();
    far.0[1] += 10.0;
    let path = PathSpec::Polyline(vec![m.domain().center(), far]);
    assert!(transport_matrix(&m, &path, TOL).is_err());
}
