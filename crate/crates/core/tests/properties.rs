//! Property tests for invariants that must hold for every input.

use lorhol::constructions::demo;
use lorhol::expr::{parse_expression, Point};
use lorhol::holonomy::{self, holonomy, lie_closure, TypeLabel};
use lorhol::linalg::{self, Mat};
use lorhol::metric::MetricChart;
use lorhol::structures::{check_one_one, dual_lefschetz, ComplexStructureJ, TwoForm};
use lorhol::transport::{transport_matrix, PathSpec};
use proptest::prelude::*;

fn antisym(n: usize, v: &[f64]) -> Mat {
    let a = Mat::from_fn(n, n, |r, c| v[r * n + c]);
    (&a - a.transpose()) * 0.5
}

/// Projection of an antisymmetric matrix onto the `J`-invariant part.
fn one_one_part(a: &Mat, j: &Mat) -> Mat {
    (a + j.transpose() * a * j) * 0.5
}

fn matrix_entries(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n * n)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn lefschetz_is_linear(a in matrix_entries(4), b in matrix_entries(4), s in -3.0f64..3.0, t in -3.0f64..3.0) {
        let j = ComplexStructureJ::standard(4).unwrap();
        let g = Mat::identity(4, 4);
        let o = Point::new(vec![0.0; 6]);
        let (pa, pb) = (antisym(4, &a), antisym(4, &b));
        let lam = |m: &Mat| dual_lefschetz(&TwoForm::constant(m), &j, &g, &o).unwrap();
        let lhs = lam(&(&pa * s + &pb * t));
        prop_assert!((lhs - (s * lam(&pa) + t * lam(&pb))).abs() < 1e-12);
    }

    #[test]
    fn one_one_type_is_unitary_invariant(a in matrix_entries(4), k in matrix_entries(4)) {
        let j = ComplexStructureJ::standard(4).unwrap();
        let jm = j.matrix().clone();
        let g = Mat::identity(4, 4);
        let o = Point::new(vec![0.0; 6]);
        let psi = one_one_part(&antisym(4, &a), &jm);
        // R = exp(K) with K antisymmetric and commuting with J lies in U(2).
        let r = one_one_part(&antisym(4, &k), &jm).exp();
        prop_assert!(linalg::max_abs(&(r.transpose() * &r - &g)) < 1e-12);
        let moved = r.transpose() * &psi * &r;
        prop_assert!(check_one_one(&TwoForm::constant(&psi), &j, &o).unwrap() < 1e-14);
        prop_assert!(check_one_one(&TwoForm::constant(&moved), &j, &o).unwrap() < 1e-12);
        let l0 = dual_lefschetz(&TwoForm::constant(&psi), &j, &g, &o).unwrap();
        let l1 = dual_lefschetz(&TwoForm::constant(&moved), &j, &g, &o).unwrap();
        prop_assert!((l0 - l1).abs() < 1e-12);
    }

    #[test]
    fn xi_curvature_vanishes_iff_f_is_x_free(a in prop_oneof![Just(0.0), 0.1f64..2.0], y in 0.0f64..1.0, z in 0.0f64..1.0) {
        let f = parse_expression(&format!("{a}*x^2*cos(y1 + z) + sin(2*pi*y1)*cos(z)"), 2).unwrap();
        let u = vec![parse_expression("0", 2).unwrap(), parse_expression("y1", 2).unwrap()];
        let one = parse_expression("1", 2).unwrap();
        let zero = parse_expression("0", 2).unwrap();
        let m = MetricChart::assemble_walker(2, f, u, vec![vec![one.clone(), zero.clone()], vec![zero, one]]).unwrap();
        let p = Point::new(vec![0.3, y, 0.5, z]);
        let xi = m.xi_curvature(&p, 0, 3).unwrap();
        prop_assert!((xi - a * (y + z).cos()).abs() < 1e-14);
        prop_assert_eq!(xi == 0.0, a == 0.0);
    }

    #[test]
    fn sum_and_product_rules(i in 0usize..4, x in -1.0f64..1.0, y1 in -1.0f64..1.0, y2 in -1.0f64..1.0, z in -1.0f64..1.0) {
        let f = parse_expression("sin(x*y1) + z^3", 2).unwrap();
        let g = parse_expression("exp(y2)*cos(z + x)", 2).unwrap();
        let p = Point::new(vec![x, y1, y2, z]);
        let (fv, gv) = (f.eval(&p).unwrap(), g.eval(&p).unwrap());
        let (fd, gd) = (f.partial(&p, &[i]).unwrap(), g.partial(&p, &[i]).unwrap());
        prop_assert!((f.plus(&g).partial(&p, &[i]).unwrap() - (fd + gd)).abs() < 1e-12);
        prop_assert!((f.times(&g).partial(&p, &[i]).unwrap() - (fd * gv + fv * gd)).abs() < 1e-12);
    }

    #[test]
    fn rendered_expressions_reparse_to_the_same_field(c in 0.1f64..3.0, x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
        let f = parse_expression(&format!("{c}*sqrt(1 + y^2)*sin(x - z)/(2 + cos(y*z))"), 1).unwrap();
        let g = parse_expression(&f.render(), 1).unwrap();
        let p = Point::new(vec![x, y, z]);
        prop_assert_eq!(f.eval(&p).unwrap(), g.eval(&p).unwrap());
    }

    #[test]
    fn closure_of_commuting_elements_is_their_span(v in prop::collection::vec(-1.0f64..1.0, 3)) {
        // Diagonal matrices commute, so the closure is just the span.
        let elems: Vec<Mat> = (0..3).map(|k| Mat::from_diagonal(&linalg::Vector::from_fn(4, |i, _| if i == k { v[k] } else { 0.0 }))).collect();
        let rank = v.iter().filter(|c| c.abs() > 1e-6).count();
        prop_assert_eq!(lie_closure(&elems, 1e-7).basis.len(), rank);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn holonomy_label_does_not_depend_on_seed(seed in any::<u64>()) {
        for (name, label, dim) in [("toric-ppwave", TypeLabel::Type2, 2), ("footnote", TypeLabel::NotReducible, 3)] {
            let c = demo(name).unwrap();
            let rep = holonomy(&c.chart, &c.base_point(), &holonomy::Strategy { seed, ..holonomy::Strategy::default() }).unwrap();
            prop_assert_eq!(rep.type_label, label);
            prop_assert_eq!(rep.dim, dim);
        }
    }

    #[test]
    fn transport_preserves_metric_on_random_paths(u in prop::collection::vec(0.0f64..1.0, 12)) {
        let m = demo("corollary").unwrap().chart;
        let dom = m.domain().shrink(0.05);
        let verts: Vec<Point> = u.chunks(4).map(|c| dom.map_unit(c)).collect();
        let p = transport_matrix(&m, &PathSpec::Polyline(verts.clone()), 1e-12).unwrap();
        let ga = m.metric_at(&verts[0]).unwrap();
        let gb = m.metric_at(&verts[2]).unwrap();
        prop_assert!(linalg::max_abs(&(p.transpose() * gb * &p - ga)) < 1e-9);
    }
}
