//! Metric charts in (general or Walker) coordinates and their connection and
//! curvature data at a point.
//!
//! Coordinates are ordered `(x, y1..yn, z)`, so index `0` is `x` and `n + 1`
//! is `z`. A Walker line element `2 dx dz + u_i dy^i dz + f dz^2 + g_ab dy^a dy^b`
//! is stored by its symmetric matrix: the coefficient `u_i` of `dy^i dz`
//! contributes `u_i / 2` to entries `(i, n+1)` and `(n+1, i)`.

use crate::error::{Error, Result};
use crate::expr::{Expr, Point, ScalarField, MAX_DIM};
use crate::linalg::{self, Mat};
use crate::sampling::Domain;

/// Number of probe points used for pointwise validation.
pub const PROBE_POINTS: usize = 32;

/// Coefficient data of a Walker chart.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkerMeta {
    /// `dz^2` coefficient (may depend on all coordinates).
    pub f: ScalarField,
    /// Line-element coefficients of `dy^i dz`, independent of `x`.
    pub u: Vec<ScalarField>,
    /// Screen metric `g_ab` on `(y, z)`, independent of `x`.
    pub gbase: Vec<Vec<ScalarField>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricChart {
    n: usize,
    entries: Vec<ScalarField>,
    walker: Option<WalkerMeta>,
    domain: Domain,
}

impl MetricChart {
    /// Walker chart from `f`, the `dy^i dz` coefficients `u` and the screen
    /// metric `gbase`.
    pub fn assemble_walker(
        n: usize,
        f: ScalarField,
        u: Vec<ScalarField>,
        gbase: Vec<Vec<ScalarField>>,
    ) -> Result<Self> {
        check_dim(n)?;
        if u.len() != n || gbase.len() != n || gbase.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid(format!("Walker data must have n = {n} components")));
        }
        let all = std::iter::once(&f).chain(u.iter()).chain(gbase.iter().flatten());
        if all.clone().any(|s| s.n() != n) {
            return Err(Error::Invalid("coefficient fields were parsed for another dimension".into()));
        }
        if u.iter().any(|s| s.depends_on(0)) {
            return Err(Error::Validation("dy^i dz coefficients must not depend on x".into()));
        }
        if gbase.iter().flatten().any(|s| s.depends_on(0)) {
            return Err(Error::Validation("screen metric must not depend on x".into()));
        }
        for a in 0..n {
            for b in 0..a {
                if gbase[a][b].expr().simplify() != gbase[b][a].expr().simplify() {
                    return Err(Error::Invalid(format!("screen metric not symmetric at ({a}, {b})")));
                }
            }
        }
        let dim = n + 2;
        let z = n + 1;
        let mut entries = vec![ScalarField::zero(n); dim * dim];
        entries[z] = ScalarField::constant(1.0, n);
        entries[z * dim] = ScalarField::constant(1.0, n);
        for a in 0..n {
            let half = u[a].scaled(0.5);
            entries[(a + 1) * dim + z] = half.clone();
            entries[z * dim + a + 1] = half;
            for b in 0..n {
                entries[(a + 1) * dim + b + 1] = gbase[a][b].clone();
            }
        }
        entries[z * dim + z] = f.clone();
        let chart = MetricChart {
            n,
            entries,
            walker: Some(WalkerMeta { f, u, gbase }),
            domain: Domain::unit(dim),
        };
        chart.check_screen_positive(&chart.probe_points())?;
        Ok(chart)
    }

    /// Chart from a full symmetric matrix of entries.
    pub fn assemble_general(n: usize, entries: Vec<Vec<ScalarField>>) -> Result<Self> {
        check_dim(n)?;
        let dim = n + 2;
        if entries.len() != dim || entries.iter().any(|r| r.len() != dim) {
            return Err(Error::Invalid(format!("metric needs {dim}x{dim} entries")));
        }
        if entries.iter().flatten().any(|s| s.n() != n) {
            return Err(Error::Invalid("coefficient fields were parsed for another dimension".into()));
        }
        for i in 0..dim {
            for j in 0..i {
                if entries[i][j].expr().simplify() != entries[j][i].expr().simplify() {
                    return Err(Error::Invalid(format!("metric entries ({i}, {j}) and ({j}, {i}) differ")));
                }
            }
        }
        Ok(MetricChart {
            n,
            entries: entries.into_iter().flatten().collect(),
            walker: None,
            domain: Domain::unit(dim),
        })
    }

    /// Reinterprets a general chart as a Walker chart when its entries have
    /// the Walker pattern symbolically.
    pub fn to_walker(&self) -> Result<Self> {
        if self.walker.is_some() {
            return Ok(self.clone());
        }
        let (n, dim, z) = (self.n, self.dim(), self.n + 1);
        let is_const = |i: usize, j: usize, c: f64| matches!(self.entry(i, j).expr().simplify(), Expr::Const(v) if v == c);
        if !is_const(0, z, 1.0) || !(0..=n).all(|j| is_const(0, j, 0.0)) {
            return Err(Error::NotWalker);
        }
        let u = (1..=n).map(|a| self.entry(a, z).scaled(2.0)).collect();
        let gbase = (1..=n).map(|a| (1..=n).map(|b| self.entry(a, b).clone()).collect()).collect();
        let f = self.entries[z * dim + z].clone();
        let chart = Self::assemble_walker(n, f, u, gbase).map_err(|e| match e {
            Error::Validation(_) => Error::NotWalker,
            other => other,
        })?;
        chart.with_domain(self.domain.clone())
    }

    /// Declares the coordinate box the chart is used on.
    pub fn with_domain(mut self, domain: Domain) -> Result<Self> {
        if domain.dim() != self.dim() {
            return Err(Error::Invalid(format!(
                "domain has dimension {}, chart has {}",
                domain.dim(),
                self.dim()
            )));
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n + 2
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn walker(&self) -> Option<&WalkerMeta> {
        self.walker.as_ref()
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarField {
        &self.entries[i * self.dim() + j]
    }

    /// Deterministic quasi-random probe points in the chart box.
    pub fn probe_points(&self) -> Vec<Point> {
        self.domain.halton(PROBE_POINTS, None)
    }

    fn check_point(&self, p: &Point) -> Result<()> {
        if p.dim() != self.dim() {
            return Err(Error::Invalid(format!("point has {} coordinates, chart has {}", p.dim(), self.dim())));
        }
        Ok(())
    }

    pub fn metric_at(&self, p: &Point) -> Result<Mat> {
        self.check_point(p)?;
        let d = self.dim();
        let mut g = Mat::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let v = self.entry(i, j).eval(p)?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }

    pub fn inverse_at(&self, p: &Point) -> Result<Mat> {
        let g = self.metric_at(p)?;
        invert(&g, p)
    }

    /// `(negative, positive)` eigenvalue counts of the metric at `p`.
    pub fn signature_at(&self, p: &Point) -> Result<(usize, usize)> {
        let g = self.metric_at(p)?;
        let (neg, pos, zero) = linalg::inertia(&g);
        if zero > 0 {
            return Err(Error::Singular(p.0.clone()));
        }
        Ok((neg, pos))
    }

    /// Checks Lorentzian signature `(1, n + 1)` at every point.
    pub fn check_lorentzian(&self, points: &[Point]) -> Result<()> {
        for p in points {
            let sig = match self.signature_at(p) {
                Ok(s) => s,
                Err(Error::Singular(c)) => {
                    return Err(Error::Validation(format!("metric degenerate at {c:?}")))
                }
                Err(e) => return Err(e),
            };
            if sig != (1, self.n + 1) {
                return Err(Error::Validation(format!(
                    "signature ({}, {}) at {:?}, expected (1, {})",
                    sig.0, sig.1, p.0, self.n + 1
                )));
            }
        }
        Ok(())
    }

    fn check_screen_positive(&self, points: &[Point]) -> Result<()> {
        let n = self.n;
        for p in points {
            let g = self.metric_at(p)?;
            let screen = g.view((1, 1), (n, n)).into_owned();
            let (neg, pos, _) = linalg::inertia(&screen);
            if neg > 0 || pos < n {
                return Err(Error::Validation(format!("screen metric not positive definite at {:?}", p.0)));
            }
        }
        Ok(())
    }

    /// Metric with first (and optionally second) coordinate derivatives.
    pub fn metric_jet(&self, p: &Point, second: bool) -> Result<MetricJet> {
        self.check_point(p)?;
        let d = self.dim();
        let mut jet = MetricJet {
            g: Mat::zeros(d, d),
            dg: vec![Mat::zeros(d, d); d],
            ddg: if second { vec![Mat::zeros(d, d); d * d] } else { Vec::new() },
        };
        for i in 0..d {
            for j in i..d {
                let e = self.entry(i, j);
                if let Expr::Const(c) = e.expr() {
                    jet.g[(i, j)] = *c;
                    jet.g[(j, i)] = *c;
                    continue;
                }
                if second {
                    let t = e.jet(p)?;
                    jet.set(i, j, t.v, &t.g[..d]);
                    for a in 0..d {
                        for b in 0..d {
                            let h = t.hess(a, b);
                            jet.ddg[a * d + b][(i, j)] = h;
                            jet.ddg[a * d + b][(j, i)] = h;
                        }
                    }
                } else {
                    let t = e.dual(p)?;
                    jet.set(i, j, t.v, &t.g[..d]);
                }
            }
        }
        Ok(jet)
    }

    /// Christoffel symbols of the second kind at `p`.
    pub fn christoffel(&self, p: &Point) -> Result<Christoffel> {
        let jet = self.metric_jet(p, false)?;
        let ginv = invert(&jet.g, p)?;
        Ok(christoffel_from(&jet, &ginv))
    }

    /// Riemann tensor `R(∂_i, ∂_j)∂_k = R^l_{ijk} ∂_l` at `p`.
    pub fn riemann(&self, p: &Point) -> Result<CurvatureTensor> {
        let d = self.dim();
        let jet = self.metric_jet(p, true)?;
        let ginv = invert(&jet.g, p)?;
        let gamma = christoffel_from(&jet, &ginv);
        // ∂_m g^{kl} = -(g^{-1} ∂_m g g^{-1})^{kl}
        let dginv: Vec<Mat> = (0..d).map(|m| -(&ginv * &jet.dg[m] * &ginv)).collect();
        // S_{ijl} = ∂_i g_{jl} + ∂_j g_{il} - ∂_l g_{ij} and its derivatives
        let s = |i: usize, j: usize, l: usize| jet.dg[i][(j, l)] + jet.dg[j][(i, l)] - jet.dg[l][(i, j)];
        let ds = |m: usize, i: usize, j: usize, l: usize| {
            jet.ddg[m * d + i][(j, l)] + jet.ddg[m * d + j][(i, l)] - jet.ddg[m * d + l][(i, j)]
        };
        // dgamma[m][k][(i, j)] = ∂_m Γ^k_{ij}
        let mut dgamma = vec![vec![Mat::zeros(d, d); d]; d];
        for m in 0..d {
            for k in 0..d {
                for i in 0..d {
                    for j in i..d {
                        let mut acc = 0.0;
                        for l in 0..d {
                            acc += dginv[m][(k, l)] * s(i, j, l) + ginv[(k, l)] * ds(m, i, j, l);
                        }
                        dgamma[m][k][(i, j)] = 0.5 * acc;
                        dgamma[m][k][(j, i)] = 0.5 * acc;
                    }
                }
            }
        }
        let mut r = vec![0.0; d * d * d * d];
        for l in 0..d {
            for i in 0..d {
                for j in 0..d {
                    if i == j {
                        continue;
                    }
                    for k in 0..d {
                        let mut v = dgamma[i][l][(j, k)] - dgamma[j][l][(i, k)];
                        for m in 0..d {
                            v += gamma.get(l, i, m) * gamma.get(m, j, k) - gamma.get(l, j, m) * gamma.get(m, i, k);
                        }
                        r[((l * d + i) * d + j) * d + k] = v;
                    }
                }
            }
        }
        Ok(CurvatureTensor { dim: d, r })
    }

    /// Coefficient of `R^Ξ(∂_i, ∂_j)∂_x` on `∂_x` for a Walker chart:
    /// `½(δ_{j,n+1} ∂_i∂_x f − δ_{i,n+1} ∂_j∂_x f)`.
    pub fn xi_curvature(&self, p: &Point, i: usize, j: usize) -> Result<f64> {
        let meta = self.walker.as_ref().ok_or(Error::NotWalker)?;
        self.check_point(p)?;
        let z = self.n + 1;
        if i > z || j > z {
            return Err(Error::Invalid(format!("coordinate index out of range: ({i}, {j})")));
        }
        if !meta.f.depends_on(0) {
            return Ok(0.0);
        }
        let jet = meta.f.jet(p)?;
        let mut v = 0.0;
        if j == z {
            v += jet.hess(i, 0);
        }
        if i == z {
            v -= jet.hess(j, 0);
        }
        Ok(0.5 * v)
    }

    /// Largest `|∇_k g_{ij}|` computed from the Christoffel symbols.
    pub fn compatibility_residual(&self, p: &Point) -> Result<f64> {
        let d = self.dim();
        let jet = self.metric_jet(p, false)?;
        let ginv = invert(&jet.g, p)?;
        let gamma = christoffel_from(&jet, &ginv);
        let mut worst: f64 = 0.0;
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let mut v = jet.dg[k][(i, j)];
                    for l in 0..d {
                        v -= gamma.get(l, k, i) * jet.g[(l, j)] + gamma.get(l, k, j) * jet.g[(i, l)];
                    }
                    worst = worst.max(v.abs());
                }
            }
        }
        Ok(worst)
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n + 2 > MAX_DIM {
        return Err(Error::Invalid(format!("screen dimension must be in 1..={}", MAX_DIM - 2)));
    }
    Ok(())
}

fn invert(g: &Mat, p: &Point) -> Result<Mat> {
    // Relative determinant test: |det g| against the product of row norms.
    let lu = g.clone().lu();
    let scale: f64 = g.row_iter().map(|r| r.norm()).product();
    if !(lu.determinant().abs() > 1e-13 * scale) {
        return Err(Error::Singular(p.0.clone()));
    }
    lu.try_inverse().filter(|m| m.iter().all(|v| v.is_finite())).ok_or_else(|| Error::Singular(p.0.clone()))
}

/// Metric values and coordinate derivatives at a point.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub g: Mat,
    /// `dg[k] = ∂_k g`.
    pub dg: Vec<Mat>,
    /// `ddg[a * dim + b] = ∂_a ∂_b g`; empty unless requested.
    pub ddg: Vec<Mat>,
}

impl MetricJet {
    fn set(&mut self, i: usize, j: usize, v: f64, grad: &[f64]) {
        self.g[(i, j)] = v;
        self.g[(j, i)] = v;
        for (k, gk) in grad.iter().enumerate() {
            self.dg[k][(i, j)] = *gk;
            self.dg[k][(j, i)] = *gk;
        }
    }
}

/// `Γ^k_{ij}`, stored as one symmetric matrix per upper index.
#[derive(Debug, Clone)]
pub struct Christoffel {
    pub upper: Vec<Mat>,
}

impl Christoffel {
    pub fn dim(&self) -> usize {
        self.upper.len()
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.upper[k][(i, j)]
    }

    /// `Γ^k_{ij} a^i b^j` for each `k`.
    pub fn contract(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for k in 0..d {
            let m = &self.upper[k];
            let mut acc = 0.0;
            for i in 0..d {
                if a[i] == 0.0 {
                    continue;
                }
                let mut row = 0.0;
                for j in 0..d {
                    row += m[(i, j)] * b[j];
                }
                acc += a[i] * row;
            }
            out[k] = acc;
        }
    }

    /// Matrix `M^k_j = Γ^k_{ij} a^i`, so that transport reads `ẇ = -M w`.
    pub fn along(&self, a: &[f64]) -> Mat {
        let d = self.dim();
        Mat::from_fn(d, d, |k, j| (0..d).map(|i| self.upper[k][(i, j)] * a[i]).sum())
    }
}

fn christoffel_from(jet: &MetricJet, ginv: &Mat) -> Christoffel {
    let d = jet.g.nrows();
    let mut upper = vec![Mat::zeros(d, d); d];
    let mut lower = vec![0.0; d];
    for i in 0..d {
        for j in i..d {
            for (l, low) in lower.iter_mut().enumerate() {
                *low = 0.5 * (jet.dg[i][(j, l)] + jet.dg[j][(i, l)] - jet.dg[l][(i, j)]);
            }
            for (k, up) in upper.iter_mut().enumerate() {
                let v: f64 = (0..d).map(|l| ginv[(k, l)] * lower[l]).sum();
                up[(i, j)] = v;
                up[(j, i)] = v;
            }
        }
    }
    Christoffel { upper }
}

/// Components `R^l_{ijk}` with `R(∂_i, ∂_j)∂_k = R^l_{ijk} ∂_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTensor {
    dim: usize,
    r: Vec<f64>,
}

impl CurvatureTensor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        let d = self.dim;
        self.r[((l * d + i) * d + j) * d + k]
    }

    /// Endomorphism `R(∂_i, ∂_j)` as a matrix acting on coordinate components.
    pub fn operator(&self, i: usize, j: usize) -> Mat {
        Mat::from_fn(self.dim, self.dim, |l, k| self.get(l, i, j, k))
    }

    /// `R(a, b)` for coordinate vectors `a`, `b`.
    pub fn operator_on(&self, a: &[f64], b: &[f64]) -> Mat {
        let d = self.dim;
        let mut m = Mat::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let c = a[i] * b[j];
                if c != 0.0 {
                    m += self.operator(i, j) * c;
                }
            }
        }
        m
    }

    /// Lowered components `R_{lijk} = g_{lm} R^m_{ijk}`.
    pub fn lowered(&self, g: &Mat) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; self.r.len()];
        for l in 0..d {
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        out[((l * d + i) * d + j) * d + k] = (0..d).map(|m| g[(l, m)] * self.get(m, i, j, k)).sum();
                    }
                }
            }
        }
        out
    }

    /// Largest violation of the algebraic curvature identities of the lowered
    /// tensor: antisymmetry in `(i, j)` and `(l, k)`, pair exchange and the
    /// first Bianchi identity.
    pub fn symmetry_residual(&self, g: &Mat) -> f64 {
        let d = self.dim;
        let low = self.lowered(g);
        let at = |l: usize, i: usize, j: usize, k: usize| low[((l * d + i) * d + j) * d + k];
        let mut worst: f64 = 0.0;
        for l in 0..d {
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        let v = at(l, i, j, k);
                        worst = worst
                            .max((v + at(l, j, i, k)).abs())
                            .max((v + at(k, i, j, l)).abs())
                            .max((v - at(j, k, l, i)).abs())
                            .max((v + at(l, j, k, i) + at(l, k, i, j)).abs());
                    }
                }
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.r.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    fn field(s: &str, n: usize) -> ScalarField {
        parse_expression(s, n).unwrap()
    }

    fn identity_base(n: usize) -> Vec<Vec<ScalarField>> {
        (0..n)
            .map(|a| (0..n).map(|b| ScalarField::constant(if a == b { 1.0 } else { 0.0 }, n)).collect())
            .collect()
    }

    fn flat(n: usize) -> MetricChart {
        MetricChart::assemble_walker(n, ScalarField::zero(n), vec![ScalarField::zero(n); n], identity_base(n)).unwrap()
    }

    #[test]
    fn flat_lightcone_matrix() {
        let m = flat(2);
        let p = Point::new(vec![0.3, 0.1, 0.2, 0.4]);
        let g = m.metric_at(&p).unwrap();
        let want = Mat::from_row_slice(4, 4, &[0., 0., 0., 1., 0., 1., 0., 0., 0., 0., 1., 0., 1., 0., 0., 0.]);
        assert_eq!(g, want);
        assert_eq!(m.inverse_at(&p).unwrap(), want);
        assert_eq!(m.signature_at(&p).unwrap(), (1, 3));
        assert!(m.christoffel(&p).unwrap().upper.iter().all(|g| linalg::max_abs(g) == 0.0));
        assert_eq!(m.riemann(&p).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn half_coefficient_convention() {
        let n = 2;
        let u = vec![ScalarField::zero(n), field("2*y1", n)];
        let m = MetricChart::assemble_walker(n, field("sin(2*pi*x)+cos(2*pi*z)", n), u, identity_base(n)).unwrap();
        let p = Point::new(vec![0.1, 0.7, 0.2, 0.3]);
        assert!((m.metric_at(&p).unwrap()[(2, 3)] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn rejects_x_dependent_screen_data() {
        let n = 1;
        let r = MetricChart::assemble_walker(n, ScalarField::zero(n), vec![field("x", n)], identity_base(n));
        assert!(matches!(r, Err(Error::Validation(_))));
        let r = MetricChart::assemble_walker(n, ScalarField::zero(n), vec![ScalarField::zero(n)], vec![vec![field("-1", n)]]);
        assert!(matches!(r, Err(Error::Validation(_))));
    }

    #[test]
    fn walker_inverse_last_column() {
        let n = 2;
        let u = vec![field("sin(y2)", n), field("z*y1", n)];
        let g = vec![vec![field("2+sin(y1)", n), field("0.3", n)], vec![field("0.3", n), field("1+z^2", n)]];
        let m = MetricChart::assemble_walker(n, field("x*z + y1^2", n), u, g).unwrap();
        let p = Point::new(vec![0.4, 0.2, -0.5, 0.9]);
        let inv = m.inverse_at(&p).unwrap();
        for k in 0..4 {
            let want = if k == 0 { 1.0 } else { 0.0 };
            assert!((inv[(k, 3)] - want).abs() < 1e-12);
        }
        let prod = m.metric_at(&p).unwrap() * inv;
        assert!(linalg::max_abs(&(prod - Mat::identity(4, 4))) < 1e-12);
    }

    #[test]
    fn christoffel_closed_form_for_xz() {
        let n = 1;
        let m = MetricChart::assemble_walker(n, field("x*z", n), vec![ScalarField::zero(n)], identity_base(n)).unwrap();
        let p = Point::new(vec![0.2, 0.5, 1.5]);
        let gam = m.christoffel(&p).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                let want = if k == 0 && i == 2 { 0.75 } else { 0.0 };
                assert_eq!(gam.get(k, 0, i), want);
            }
        }
    }

    #[test]
    fn xi_curvature_of_x_squared() {
        let n = 1;
        let m = MetricChart::assemble_walker(n, field("x^2", n), vec![ScalarField::zero(n)], identity_base(n)).unwrap();
        let p = Point::new(vec![0.3, 0.1, 0.2]);
        assert_eq!(m.xi_curvature(&p, 0, 2).unwrap(), 1.0);
        assert_eq!(m.xi_curvature(&p, 2, 0).unwrap(), -1.0);
        assert_eq!(m.xi_curvature(&p, 1, 2).unwrap(), 0.0);
        let r = m.riemann(&p).unwrap();
        assert!((r.get(0, 0, 2, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn general_chart_needs_symmetry() {
        let n = 1;
        let mut e = vec![vec![ScalarField::zero(n); 3]; 3];
        e[0][2] = field("1", n);
        assert!(MetricChart::assemble_general(n, e.clone()).is_err());
        e[2][0] = field("1", n);
        e[1][1] = field("1", n);
        let m = MetricChart::assemble_general(n, e).unwrap();
        assert!(m.walker().is_none());
        let w = m.to_walker().unwrap();
        assert_eq!(w.metric_at(&Point::new(vec![0.0; 3])).unwrap(), m.metric_at(&Point::new(vec![0.0; 3])).unwrap());
    }

    #[test]
    fn euclidean_fails_lorentzian_check() {
        let n = 2;
        let e = (0..4)
            .map(|i| (0..4).map(|j| ScalarField::constant(if i == j { 1.0 } else { 0.0 }, n)).collect())
            .collect();
        let m = MetricChart::assemble_general(n, e).unwrap();
        assert!(matches!(m.check_lorentzian(&m.probe_points()), Err(Error::Validation(_))));
        assert!(m.to_walker().is_err());
    }
}
