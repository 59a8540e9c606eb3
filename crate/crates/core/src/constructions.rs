//! Ready-made charts: toric-type metrics over flat tori built from explicit
//! local potentials, the pp-wave family `2dxdz + (y1 + f + 1)dz^2 + Σ dy^2`,
//! the three-dimensional twisted example and a non-Walker metric whose
//! holonomy is all of `so(1, 2)`.
//!
//! A toric chart over a flat base is `2 dx dz + 2 φ_a dy^a dz + f dz^2 + g_base`
//! where `φ` is a potential of the curvature form, `dφ = ψ`. Following the
//! matrix convention of [`crate::metric`], `φ_a` is the matrix entry `(a, z)`.
//! When the base includes `z` (potential with a `dz` part) the `dz^2` entry is
//! `f + φ_z + 1`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{parse_expression, Point, ScalarField};
use crate::metric::MetricChart;
use crate::sampling::Domain;

/// Margin kept from the edges of the unit cell.
pub const CELL_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Flat,
    ToricFlatTorus,
    CorollaryPpwave,
    FootnoteCounterexample,
    Example52,
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "flat" => Kind::Flat,
            "toric_flat_torus" | "toric" => Kind::ToricFlatTorus,
            "corollary_ppwave" | "corollary" => Kind::CorollaryPpwave,
            "footnote_counterexample" | "footnote" => Kind::FootnoteCounterexample,
            "example52_3d" | "example52" => Kind::Example52,
            other => return Err(Error::Invalid(format!("unknown construction kind '{other}'"))),
        })
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Flat => "flat",
            Kind::ToricFlatTorus => "toric_flat_torus",
            Kind::CorollaryPpwave => "corollary_ppwave",
            Kind::FootnoteCounterexample => "footnote_counterexample",
            Kind::Example52 => "example52_3d",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstructionSpec {
    pub kind: Kind,
    pub n: usize,
    /// Integer class `c` of the curvature form `c dy1∧dy2` (or `c dy1∧dz`).
    pub c: i64,
    /// `dz^2` coefficient; defaults to the x-independent generic function.
    pub f: Option<String>,
    /// Explicit potential components along `dy1..dyn` (toric kind only).
    pub potential: Option<Vec<String>>,
    pub f1: Option<String>,
    pub f2: Option<String>,
}

impl ConstructionSpec {
    pub fn new(kind: Kind, n: usize) -> Self {
        ConstructionSpec { kind, n, c: 1, f: None, potential: None, f1: None, f2: None }
    }

    pub fn with_f(mut self, f: &str) -> Self {
        self.f = Some(f.to_string());
        self
    }
}

/// A built chart with its curvature form and potential on the `(y, z)` block.
#[derive(Debug, Clone)]
pub struct Construction {
    pub spec: ConstructionSpec,
    pub chart: MetricChart,
    /// `ψ_{ab}` over `(y1..yn, z)`, indices `0..=n`; absent for non-toric kinds.
    pub psi: Option<Vec<Vec<ScalarField>>>,
    /// `φ_a` over `(y1..yn, z)`.
    pub phi: Option<Vec<ScalarField>>,
}

impl Construction {
    /// Base point used by the analyses: the center of the chart box.
    pub fn base_point(&self) -> Point {
        self.chart.domain().center()
    }

    /// Largest `|dφ − ψ|` over the probe points, with `dφ` from symbolic
    /// derivatives.
    pub fn potential_residual(&self) -> Result<f64> {
        let (Some(psi), Some(phi)) = (&self.psi, &self.phi) else {
            return Ok(0.0);
        };
        let n = self.chart.n();
        let mut worst: f64 = 0.0;
        for a in 0..=n {
            for b in 0..=n {
                // coordinate indices of y1..yn, z are 1..=n+1
                let d_a_phi_b = phi[b].diff(a + 1).ok_or_else(|| Error::Invalid("potential not differentiable symbolically".into()))?;
                let d_b_phi_a = phi[a].diff(b + 1).ok_or_else(|| Error::Invalid("potential not differentiable symbolically".into()))?;
                let dphi = d_a_phi_b.minus(&d_b_phi_a);
                if dphi.expr().simplify() == psi[a][b].expr().simplify() {
                    continue;
                }
                for p in self.chart.probe_points() {
                    worst = worst.max((dphi.eval(&p)? - psi[a][b].eval(&p)?).abs());
                }
            }
        }
        Ok(worst)
    }
}

fn field(src: &str, n: usize) -> Result<ScalarField> {
    Ok(parse_expression(src, n)?)
}

fn identity(n: usize) -> Vec<Vec<ScalarField>> {
    (0..n)
        .map(|a| (0..n).map(|b| ScalarField::constant(if a == b { 1.0 } else { 0.0 }, n)).collect())
        .collect()
}

fn cell(dim: usize) -> Domain {
    Domain::cube(dim, CELL_MARGIN, 1.0 - CELL_MARGIN)
}

/// Default test functions `(f0, f1)`: `f0 = Σ_i sin(2π y_i) cos(2π i z)` has
/// no `x`; `f1 = f0 + sin(2π x)(1 + cos(2π z))`.
pub fn sufficiently_generic_default(n: usize) -> (ScalarField, ScalarField) {
    let terms: Vec<String> = (1..=n).map(|i| format!("sin(2*pi*y{i})*cos(2*pi*{i}*z)")).collect();
    let f0 = terms.join(" + ");
    let f1 = format!("{f0} + sin(2*pi*x)*(1 + cos(2*pi*z))");
    let parse = |s: &str| {
        let s = if n == 1 { s.replace("y1", "y") } else { s.to_string() };
        parse_expression(&s, n).expect("default functions parse")
    };
    (parse(&f0), parse(&f1))
}

/// Smooth transitions `f1 = s(−2z − 1)`, `f2 = s(2z − 1)` built from the
/// `exp(−1/t)` step `s`: `f1 = 1` on `z ≤ −1`, `0` on `z ≥ −½`; `f2 = 1` on
/// `z ≥ 1`, `0` on `z ≤ ½`.
pub fn bump_pair() -> (ScalarField, ScalarField) {
    (
        parse_expression("smoothstep(-2*z - 1)", 1).expect("bump parses"),
        parse_expression("smoothstep(2*z - 1)", 1).expect("bump parses"),
    )
}

pub fn build(spec: &ConstructionSpec) -> Result<Construction> {
    let n = spec.n;
    match spec.kind {
        Kind::Flat => {
            let chart = MetricChart::assemble_walker(n, ScalarField::zero(n), vec![ScalarField::zero(n); n], identity(n))?
                .with_domain(cell(n + 2))?;
            Ok(Construction { spec: spec.clone(), chart, psi: None, phi: None })
        }
        Kind::ToricFlatTorus => {
            let f = match &spec.f {
                Some(s) => field(s, n)?,
                None => sufficiently_generic_default(n).0,
            };
            let phi_y: Vec<ScalarField> = match &spec.potential {
                Some(p) => {
                    if p.len() != n {
                        return Err(Error::Invalid(format!("potential needs {n} components")));
                    }
                    p.iter().map(|s| field(s, n)).collect::<Result<_>>()?
                }
                None => {
                    if n < 2 {
                        return Err(Error::Invalid("toric example needs n >= 2".into()));
                    }
                    let mut v = vec![ScalarField::zero(n); n];
                    v[1] = field(&format!("{}*y1", spec.c), n)?;
                    v
                }
            };
            if phi_y.iter().any(|s| s.depends_on(0) || s.depends_on(n + 1)) {
                return Err(Error::Invalid("toric potential must depend on y only".into()));
            }
            let mut phi = phi_y.clone();
            phi.push(ScalarField::zero(n));
            let psi = exterior_derivative(&phi)?;
            let u = phi_y.iter().map(|s| s.scaled(2.0)).collect();
            let chart = MetricChart::assemble_walker(n, f, u, identity(n))?.with_domain(cell(n + 2))?;
            Ok(Construction { spec: spec.clone(), chart, psi: Some(psi), phi: Some(phi) })
        }
        Kind::CorollaryPpwave | Kind::Example52 => {
            let n = if spec.kind == Kind::Example52 { 1 } else { n };
            if spec.kind == Kind::Example52 && spec.n != 1 {
                return Err(Error::Invalid("the three-dimensional example has n = 1".into()));
            }
            let c = if spec.kind == Kind::Example52 { spec.c } else { 1 };
            let f = match &spec.f {
                Some(s) => field(s, n)?,
                None if spec.kind == Kind::CorollaryPpwave && n >= 1 => {
                    let s = (1..=n).map(|i| format!("sin(2*pi*y{i})*cos(2*pi*z)")).collect::<Vec<_>>().join(" + ");
                    field(&if n == 1 { s.replace("y1", "y") } else { s }, n)?
                }
                None => sufficiently_generic_default(n).0,
            };
            let y1 = ScalarField::coordinate(1, n);
            let mut phi = vec![ScalarField::zero(n); n + 1];
            phi[n] = y1.scaled(c as f64);
            let mut psi = vec![vec![ScalarField::zero(n); n + 1]; n + 1];
            psi[0][n] = ScalarField::constant(c as f64, n);
            psi[n][0] = ScalarField::constant(-(c as f64), n);
            let h = f.plus(&phi[n]).plus(&ScalarField::constant(1.0, n));
            let chart = MetricChart::assemble_walker(n, h, vec![ScalarField::zero(n); n], identity(n))?
                .with_domain(cell(n + 2))?;
            Ok(Construction { spec: spec.clone(), chart, psi: Some(psi), phi: Some(phi) })
        }
        Kind::FootnoteCounterexample => {
            if n != 1 {
                return Err(Error::Invalid("the footnote metric is three-dimensional (n = 1)".into()));
            }
            let (b1, b2) = bump_pair();
            let f1 = match &spec.f1 {
                Some(s) => field(s, 1)?,
                None => b1,
            };
            let f2 = match &spec.f2 {
                Some(s) => field(s, 1)?,
                None => b2,
            };
            let y2 = field("y^2", 1)?;
            let mut e = vec![vec![ScalarField::zero(1); 3]; 3];
            e[0][0] = y2.times(&f2);
            e[0][2] = ScalarField::constant(1.0, 1);
            e[2][0] = ScalarField::constant(1.0, 1);
            e[1][1] = ScalarField::constant(1.0, 1);
            e[2][2] = y2.times(&f1);
            let dom = Domain::new(vec![-1.0, 0.5, -3.0], vec![1.0, 1.5, 3.0])?;
            let chart = MetricChart::assemble_general(1, e)?.with_domain(dom)?;
            Ok(Construction { spec: spec.clone(), chart, psi: None, phi: None })
        }
    }
}

/// `(dφ)_{ab} = ∂_a φ_b − ∂_b φ_a` over `(y1..yn, z)`.
fn exterior_derivative(phi: &[ScalarField]) -> Result<Vec<Vec<ScalarField>>> {
    let k = phi.len();
    let mut out = vec![vec![ScalarField::zero(phi[0].n()); k]; k];
    for a in 0..k {
        for b in 0..k {
            if a == b {
                continue;
            }
            let da = phi[b].diff(a + 1).ok_or_else(|| Error::Invalid("potential must avoid smoothstep".into()))?;
            let db = phi[a].diff(b + 1).ok_or_else(|| Error::Invalid("potential must avoid smoothstep".into()))?;
            out[a][b] = da.minus(&db);
        }
    }
    Ok(out)
}

/// Names accepted by the `demo` command.
pub const DEMOS: [&str; 6] = ["flat", "toric-ppwave", "toric-prwave", "corollary", "footnote", "example52"];

pub fn demo(name: &str) -> Result<Construction> {
    let spec = match name {
        "flat" => ConstructionSpec::new(Kind::Flat, 2),
        "toric-ppwave" => ConstructionSpec::new(Kind::ToricFlatTorus, 2),
        "toric-prwave" => {
            let mut s = ConstructionSpec::new(Kind::ToricFlatTorus, 2);
            s.f = Some(sufficiently_generic_default(2).1.render());
            s
        }
        "corollary" => ConstructionSpec::new(Kind::CorollaryPpwave, 2),
        "footnote" => ConstructionSpec::new(Kind::FootnoteCounterexample, 1),
        "example52" => ConstructionSpec::new(Kind::Example52, 1),
        other => return Err(Error::Invalid(format!("unknown demo '{other}' (known: {})", DEMOS.join(", ")))),
    };
    build(&spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toric_example_entries() {
        let mut spec = ConstructionSpec::new(Kind::ToricFlatTorus, 2).with_f("sin(2*pi*x)+cos(2*pi*z)");
        spec.c = 1;
        let b = build(&spec).unwrap();
        let p = Point::new(vec![0.3, 0.7, 0.2, 0.4]);
        let g = b.chart.metric_at(&p).unwrap();
        assert!((g[(2, 3)] - 0.7).abs() < 1e-15);
        let f = (2.0 * std::f64::consts::PI * 0.3).sin() + (2.0 * std::f64::consts::PI * 0.4).cos();
        assert!((g[(3, 3)] - f).abs() < 1e-15);
        assert_eq!(b.potential_residual().unwrap(), 0.0);
    }

    #[test]
    fn corollary_entry() {
        let b = build(&ConstructionSpec::new(Kind::CorollaryPpwave, 2).with_f("sin(2*pi*y1)*cos(2*pi*z)")).unwrap();
        let p = Point::new(vec![0.1, 0.35, 0.6, 0.15]);
        let g = b.chart.metric_at(&p).unwrap();
        let tau = 2.0 * std::f64::consts::PI;
        let want = 0.35 + (tau * 0.35).sin() * (tau * 0.15).cos() + 1.0;
        assert!((g[(3, 3)] - want).abs() < 1e-14);
        assert_eq!(b.potential_residual().unwrap(), 0.0);
    }

    #[test]
    fn footnote_entries_and_plateaus() {
        let b = demo("footnote").unwrap();
        let (f1, f2) = bump_pair();
        let at = |z: f64| Point::new(vec![0.0, 0.0, z]);
        assert_eq!(f1.eval(&at(-2.0)).unwrap(), 1.0);
        assert_eq!(f1.eval(&at(0.0)).unwrap(), 0.0);
        assert_eq!(f2.eval(&at(2.0)).unwrap(), 1.0);
        assert_eq!(f2.eval(&at(0.0)).unwrap(), 0.0);
        for k in -40..=40 {
            let z = k as f64 * 0.1;
            assert_eq!(f1.eval(&at(z)).unwrap() * f2.eval(&at(z)).unwrap(), 0.0);
        }
        let p = Point::new(vec![0.2, 1.3, 1.7]);
        let g = b.chart.metric_at(&p).unwrap();
        assert!((g[(0, 0)] - 1.69).abs() < 1e-14);
        assert_eq!(g[(2, 2)], 0.0);
        let q = Point::new(vec![0.2, 0.0, 0.7]);
        assert!(b.chart.metric_at(&q).unwrap().determinant() < 0.0);
    }

    #[test]
    fn defaults() {
        let (f0, f1) = sufficiently_generic_default(2);
        assert!(!f0.depends_on(0));
        assert!(f1.depends_on(0));
        let p = Point::new(vec![0.25, 0.25, 0.0, 0.0]);
        assert!((f0.eval(&p).unwrap() - 1.0).abs() < 1e-15);
        assert!((f1.eval(&p).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn every_demo_is_lorentzian() {
        for name in DEMOS {
            let b = demo(name).unwrap();
            b.chart.check_lorentzian(&b.chart.probe_points()).unwrap();
        }
    }
}
