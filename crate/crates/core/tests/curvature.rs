//! Christoffel symbols and curvature against finite-difference oracles and
//! the algebraic identities of a Levi-Civita connection.

use lorhol::constructions::demo;
use lorhol::expr::{parse_expression, Point, ScalarField};
use lorhol::linalg::Mat;
use lorhol::metric::MetricChart;

/// Richardson-extrapolated central difference of `f` along coordinate `k`.
fn richardson<T, F>(f: F, p: &Point, k: usize, h: f64) -> Vec<f64>
where
    F: Fn(&Point) -> T,
    T: AsRef<[f64]>,
{
    let central = |h: f64| {
        let mut a = p.0.clone();
        let mut b = p.0.clone();
        a[k] += h;
        b[k] -= h;
        let (fa, fb) = (f(&Point::new(a)), f(&Point::new(b)));
        fa.as_ref().iter().zip(fb.as_ref()).map(|(x, y)| (x - y) / (2.0 * h)).collect::<Vec<_>>()
    };
    let (d1, d2) = (central(h), central(h / 2.0));
    d1.iter().zip(&d2).map(|(a, b)| (4.0 * b - a) / 3.0).collect()
}

fn metric_flat(m: &MetricChart, p: &Point) -> Vec<f64> {
    m.metric_at(p).unwrap().as_slice().to_vec()
}

/// `Γ^k_ij` (flattened `[k][i][j]`) from finite-difference metric derivatives.
fn christoffel_fd(m: &MetricChart, p: &Point, h: f64) -> Vec<f64> {
    let d = m.dim();
    let dg: Vec<Mat> = (0..d)
        .map(|k| Mat::from_column_slice(d, d, &richardson(|q| metric_flat(m, q), p, k, h)))
        .collect();
    let ginv = m.inverse_at(p).unwrap();
    let mut out = vec![0.0; d * d * d];
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                out[(k * d + i) * d + j] = 0.5
                    * (0..d)
                        .map(|l| ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]))
                        .sum::<f64>();
            }
        }
    }
    out
}

fn christoffel_flat(m: &MetricChart, p: &Point) -> Vec<f64> {
    let d = m.dim();
    let g = m.christoffel(p).unwrap();
    let mut out = Vec::with_capacity(d * d * d);
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                out.push(g.get(k, i, j));
            }
        }
    }
    out
}

fn field(s: &str, n: usize) -> ScalarField {
    parse_expression(s, n).unwrap()
}

/// Walker charts with x-dependent `f`, non-trivial `u` and non-flat base.
fn charts() -> Vec<MetricChart> {
    let n2 = MetricChart::assemble_walker(
        2,
        field("x^2*sin(y1 + z) + x*cos(y2) + exp(0.3*z)*y1", 2),
        vec![field("sin(y2 + z)", 2), field("0.5*y1*z", 2)],
        vec![
            vec![field("1 + 0.2*sin(y1)^2", 2), field("0.1*cos(z)", 2)],
            vec![field("0.1*cos(z)", 2), field("1.5 + 0.1*y2^2", 2)],
        ],
    )
    .unwrap();
    let n1 = MetricChart::assemble_walker(
        1,
        field("sin(2*x)*exp(y) + z^2", 1),
        vec![field("cos(3*y + z)", 1)],
        vec![vec![field("2 + sin(y*z)", 1)]],
    )
    .unwrap();
    vec![n2, n1, demo("footnote").unwrap().chart, demo("toric-prwave").unwrap().chart]
}

fn points(m: &MetricChart) -> Vec<Point> {
    m.domain().shrink(0.05).halton(6, Some(9))
}

#[test]
fn christoffel_matches_finite_differences() {
    for m in charts() {
        for p in points(&m) {
            let exact = christoffel_flat(&m, &p);
            let fd = christoffel_fd(&m, &p, 1e-5);
            let err = exact.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8, "Γ error {err:e} at {:?}", p.0);
        }
    }
}

#[test]
fn riemann_matches_finite_differences_of_christoffel() {
    for m in charts() {
        let d = m.dim();
        for p in points(&m) {
            let r = m.riemann(&p).unwrap();
            let gam = christoffel_flat(&m, &p);
            let dgam: Vec<Vec<f64>> = (0..d).map(|k| richardson(|q| christoffel_flat(&m, q), &p, k, 1e-3)).collect();
            let at = |v: &[f64], k: usize, i: usize, j: usize| v[(k * d + i) * d + j];
            let mut err = 0.0f64;
            for l in 0..d {
                for i in 0..d {
                    for j in 0..d {
                        for k in 0..d {
                            let mut want = at(&dgam[i], l, j, k) - at(&dgam[j], l, i, k);
                            for s in 0..d {
                                want += at(&gam, l, i, s) * at(&gam, s, j, k) - at(&gam, l, j, s) * at(&gam, s, i, k);
                            }
                            err = err.max((r.get(l, i, j, k) - want).abs());
                        }
                    }
                }
            }
            assert!(err < 1e-6, "R error {err:e} at {:?}", p.0);
        }
    }
}

#[test]
fn curvature_has_riemann_symmetries() {
    for m in charts() {
        for p in points(&m) {
            let r = m.riemann(&p).unwrap();
            let g = m.metric_at(&p).unwrap();
            let scale = r.max_abs().max(1.0);
            assert!(r.symmetry_residual(&g) < 1e-10 * scale, "{}", r.symmetry_residual(&g));
        }
    }
}

#[test]
fn first_bianchi_identity() {
    for m in charts() {
        let d = m.dim();
        for p in points(&m) {
            let r = m.riemann(&p).unwrap();
            for l in 0..d {
                for i in 0..d {
                    for j in 0..d {
                        for k in 0..d {
                            let s = r.get(l, i, j, k) + r.get(l, j, k, i) + r.get(l, k, i, j);
                            assert!(s.abs() < 1e-10, "cyclic sum {s:e}");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn connection_is_metric() {
    for m in charts() {
        for p in points(&m) {
            assert!(m.compatibility_residual(&p).unwrap() < 1e-12);
        }
    }
}

#[test]
fn walker_charts_are_lorentzian_with_null_x() {
    for m in charts().into_iter().filter(|m| m.walker().is_some()) {
        for p in points(&m) {
            assert_eq!(m.signature_at(&p).unwrap(), (1, m.dim() - 1));
            let g = m.metric_at(&p).unwrap();
            assert_eq!(g[(0, 0)], 0.0);
            assert_eq!(g[(0, m.dim() - 1)], 1.0);
        }
    }
}

#[test]
fn x_independent_f_has_no_xi_curvature() {
    let m = demo("toric-ppwave").unwrap().chart;
    let d = m.dim();
    for p in points(&m) {
        for i in 0..d {
            for j in 0..d {
                assert_eq!(m.xi_curvature(&p, i, j).unwrap(), 0.0);
            }
        }
    }
}
