//! Adapted null frames, Ambrose–Singer sampling of the (restricted) holonomy
//! algebra and its classification inside the stabilizer of a null line.

use std::fmt;

use nalgebra::SymmetricEigen;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expr::Point;
use crate::linalg::{self, Mat, Vector};
use crate::metric::MetricChart;
use crate::transport::{loop_transport, transport_matrix, PathSpec};

/// Tolerance for the frame identities `g(V, Z) = 1`, etc.
pub const FRAME_TOL: f64 = 1e-10;
/// Tolerance for reading the stabilizer pattern, relative to `max(1, |X|)`.
pub const PATTERN_TOL: f64 = 1e-8;
/// Residual below which a linear coupling (types 3 and 4) is accepted.
pub const COUPLING_TOL: f64 = 1e-6;

/// Which complement of the null line realizes the screen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Realization {
    /// `S = span{∂_y}` with the isotropic `Z` built from the inverse screen metric.
    #[default]
    Coordinate,
    /// `S = span{∂_i − m_i ∂_x}` (horizontal lifts) with `Z = ∂_z − ½ f ∂_x`.
    Horizontal,
}

/// Basis `(V, E_1..E_n, Z)` at a point, stored as the columns of a matrix of
/// coordinate components.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedFrame {
    pub base: Point,
    pub vectors: Mat,
}

impl AdaptedFrame {
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    /// `Fᵀ g F`, which should be the null-frame Gram matrix.
    pub fn gram(&self, g: &Mat) -> Mat {
        self.vectors.transpose() * g * &self.vectors
    }

    /// Largest deviation of the frame from its defining inner products.
    pub fn residual(&self, g: &Mat) -> f64 {
        linalg::max_abs(&(self.gram(g) - null_gram(self.dim())))
    }

    /// Expresses a coordinate endomorphism in this frame: `F⁻¹ X F`.
    pub fn to_frame(&self, x: &Mat) -> Result<Mat> {
        let finv = linalg::inverse(&self.vectors).ok_or_else(|| Error::Invalid("frame is singular".into()))?;
        Ok(finv * x * &self.vectors)
    }
}

/// `[[0, 0, 1], [0, I, 0], [1, 0, 0]]` in block form.
pub fn null_gram(dim: usize) -> Mat {
    let mut eta = Mat::identity(dim, dim);
    eta[(0, 0)] = 0.0;
    eta[(dim - 1, dim - 1)] = 0.0;
    eta[(0, dim - 1)] = 1.0;
    eta[(dim - 1, 0)] = 1.0;
    eta
}

/// Gram–Schmidt of the columns of `vs` in the inner product `gram`.
fn orthonormalize(vs: &Mat, gram: &Mat) -> Result<Mat> {
    let mut out = vs.clone();
    for c in 0..vs.ncols() {
        let mut v = out.column(c).into_owned();
        for k in 0..c {
            let e = out.column(k).into_owned();
            let proj = (e.transpose() * gram * &v)[0];
            v -= e * proj;
        }
        let nrm2 = (v.transpose() * gram * &v)[0];
        if !(nrm2 > 1e-14) {
            return Err(Error::Invalid("screen metric degenerate at the frame point".into()));
        }
        out.set_column(c, &(v / nrm2.sqrt()));
    }
    Ok(out)
}

/// Adapted frame in the coordinate realization (Walker charts) or from an
/// eigenbasis of `g` (general charts).
pub fn adapted_frame(m: &MetricChart, p: &Point) -> Result<AdaptedFrame> {
    if m.walker().is_some() {
        adapted_frame_with(m, p, Realization::Coordinate)
    } else {
        eigen_null_frame(m, p)
    }
}

pub fn adapted_frame_with(m: &MetricChart, p: &Point, realization: Realization) -> Result<AdaptedFrame> {
    if m.walker().is_none() {
        return Err(Error::NotWalker);
    }
    let n = m.n();
    let d = n + 2;
    let zi = n + 1;
    let g = m.metric_at(p)?;
    let gs = g.view((1, 1), (n, n)).into_owned();
    let mix = Vector::from_fn(n, |a, _| g[(a + 1, zi)]);
    let f = g[(zi, zi)];
    let mut frame = Mat::zeros(d, d);
    frame[(0, 0)] = 1.0;
    let mut screen = Mat::zeros(d, n);
    match realization {
        Realization::Coordinate => {
            let gsinv = linalg::inverse(&gs).ok_or_else(|| Error::Invalid("screen metric singular".into()))?;
            let w = &gsinv * &mix;
            frame[(0, zi)] = 0.5 * (mix.dot(&w) - f);
            for a in 0..n {
                frame[(a + 1, zi)] = -w[a];
                screen[(a + 1, a)] = 1.0;
            }
            frame[(zi, zi)] = 1.0;
        }
        Realization::Horizontal => {
            frame[(0, zi)] = -0.5 * f;
            frame[(zi, zi)] = 1.0;
            for a in 0..n {
                screen[(a + 1, a)] = 1.0;
                screen[(0, a)] = -mix[a];
            }
        }
    }
    let e = orthonormalize(&screen, &g)?;
    for a in 0..n {
        frame.set_column(a + 1, &e.column(a));
    }
    let out = AdaptedFrame { base: p.clone(), vectors: frame };
    check_frame(&out, &g)?;
    Ok(out)
}

fn eigen_null_frame(m: &MetricChart, p: &Point) -> Result<AdaptedFrame> {
    let g = m.metric_at(p)?;
    let d = g.nrows();
    let eig = SymmetricEigen::new(g.clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let neg: Vec<usize> = order.iter().copied().filter(|&i| eig.eigenvalues[i] < 0.0).collect();
    if neg.len() != 1 || eig.eigenvalues.iter().any(|l| l.abs() < 1e-12) {
        return Err(Error::Validation(format!("metric at {:?} is not Lorentzian", p.0)));
    }
    let unit = |i: usize| eig.eigenvectors.column(i) / eig.eigenvalues[i].abs().sqrt();
    let t = unit(order[0]);
    let s = unit(order[1]);
    let mut frame = Mat::zeros(d, d);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    frame.set_column(0, &((&t + &s) * r));
    frame.set_column(d - 1, &((&s - &t) * r));
    for (c, &i) in order[2..].iter().enumerate() {
        frame.set_column(c + 1, &unit(i));
    }
    let out = AdaptedFrame { base: p.clone(), vectors: frame };
    check_frame(&out, &g)?;
    Ok(out)
}

fn check_frame(frame: &AdaptedFrame, g: &Mat) -> Result<()> {
    let scale = linalg::max_abs(g).max(1.0);
    let r = frame.residual(g);
    if r > FRAME_TOL * scale {
        return Err(Error::Invalid(format!("adapted frame residual {r:e}")));
    }
    Ok(())
}

/// An element `[[a, wᵀ, 0], [0, A, −w], [0, 0, −a]]` of the stabilizer of the
/// null line in an adapted frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilizerElement {
    pub a: f64,
    #[serde(serialize_with = "ser_mat")]
    pub big_a: Mat,
    pub w: Vec<f64>,
}

impl StabilizerElement {
    pub fn to_matrix(&self) -> Mat {
        let n = self.w.len();
        let d = n + 2;
        let mut x = Mat::zeros(d, d);
        x[(0, 0)] = self.a;
        x[(d - 1, d - 1)] = -self.a;
        for i in 0..n {
            x[(0, i + 1)] = self.w[i];
            x[(i + 1, d - 1)] = -self.w[i];
            for j in 0..n {
                x[(i + 1, j + 1)] = self.big_a[(i, j)];
            }
        }
        x
    }
}

/// Reads `(a, A, w)` from a matrix already expressed in an adapted frame, or
/// `None` when the matrix is not of stabilizer form.
pub fn stabilizer_decompose(x: &Mat) -> Option<StabilizerElement> {
    let d = x.nrows();
    if d < 3 || x.ncols() != d {
        return None;
    }
    let n = d - 2;
    let tol = PATTERN_TOL * linalg::max_abs(x).max(1.0);
    // first column and bottom row
    if (1..d).any(|k| x[(k, 0)].abs() > tol) || (0..d - 1).any(|k| x[(d - 1, k)].abs() > tol) {
        return None;
    }
    let a = x[(0, 0)];
    let w: Vec<f64> = (1..=n).map(|i| x[(0, i)]).collect();
    let big_a = x.view((1, 1), (n, n)).into_owned();
    let consistent = (x[(d - 1, d - 1)] + a).abs() <= tol
        && x[(0, d - 1)].abs() <= tol
        && (0..n).all(|i| (x[(i + 1, d - 1)] + w[i]).abs() <= tol)
        && linalg::max_abs(&(&big_a + big_a.transpose())) <= tol;
    consistent.then_some(StabilizerElement { a, big_a, w })
}

/// Sampling plan for [`ambrose_singer_sample`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Strategy {
    pub rect_sizes: Vec<f64>,
    pub lasso_targets: usize,
    /// Frame-index pairs `(a, b)` fed to the curvature; empty means all pairs.
    pub plane_pairs: Vec<(usize, usize)>,
    pub seed: u64,
    pub transport_tol: f64,
    pub rank_tol: f64,
    pub realization: Realization,
}

impl Default for Strategy {
    fn default() -> Self {
        Strategy {
            rect_sizes: vec![0.2, 0.1, 0.05],
            lasso_targets: 8,
            plane_pairs: Vec::new(),
            seed: 0,
            transport_tol: 1e-12,
            rank_tol: 1e-7,
            realization: Realization::Coordinate,
        }
    }
}

fn frame_for(m: &MetricChart, p: &Point, strategy: &Strategy) -> Result<AdaptedFrame> {
    if m.walker().is_some() {
        adapted_frame_with(m, p, strategy.realization)
    } else {
        eigen_null_frame(m, p)
    }
}

/// Curvature conjugates and small-loop logarithms at `p`, expressed in the
/// adapted frame at `p`.
///
/// For each lasso target `q` (the base point plus quasi-random points of the
/// chart box) with straight-segment transport `P` from `p` to `q`, collects
/// `F⁻¹ P⁻¹ R_q(P F_a, P F_b) P F` over the frame pairs `(a, b)`. For each
/// rectangle size `h` and coordinate plane it adds `log` of the loop
/// transport around the `h × h` rectangle at `p`.
pub fn ambrose_singer_sample(m: &MetricChart, p: &Point, strategy: &Strategy) -> Result<Vec<Mat>> {
    Ok(sample_with_frame(m, p, strategy)?.1)
}

fn sample_with_frame(m: &MetricChart, p: &Point, strategy: &Strategy) -> Result<(AdaptedFrame, Vec<Mat>)> {
    let d = m.dim();
    let frame = frame_for(m, p, strategy)?;
    let dom = m.domain();
    if !dom.contains(p.coords()) {
        return Err(Error::Invalid(format!("base point {:?} outside the chart box", p.0)));
    }
    let pairs: Vec<(usize, usize)> = if strategy.plane_pairs.is_empty() {
        (0..d).flat_map(|a| (a + 1..d).map(move |b| (a, b))).collect()
    } else {
        strategy.plane_pairs.clone()
    };
    if pairs.iter().any(|&(a, b)| a >= d || b >= d) {
        return Err(Error::Invalid("plane pair index out of range".into()));
    }
    let mut targets = vec![p.clone()];
    targets.extend(dom.halton(strategy.lasso_targets, Some(strategy.seed)));
    let finv = linalg::inverse(&frame.vectors).ok_or_else(|| Error::Invalid("frame is singular".into()))?;

    let lasso: Vec<Vec<Mat>> = targets
        .par_iter()
        .map(|q| -> Result<Vec<Mat>> {
            let path = PathSpec::Polyline(vec![p.clone(), q.clone()]);
            let pt = transport_matrix(m, &path, strategy.transport_tol)?;
            let pinv = linalg::inverse(&pt).ok_or_else(|| Error::Invalid("transport matrix singular".into()))?;
            let moved = &pt * &frame.vectors;
            let r = m.riemann(q)?;
            Ok(pairs
                .iter()
                .map(|&(a, b)| {
                    let ua: Vec<f64> = moved.column(a).iter().copied().collect();
                    let ub: Vec<f64> = moved.column(b).iter().copied().collect();
                    &finv * &pinv * r.operator_on(&ua, &ub) * &pt * &frame.vectors
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut loops = Vec::new();
    for &h in &strategy.rect_sizes {
        for i in 0..d {
            for j in i + 1..d {
                if let Some(path) = rectangle_in(dom, p, i, j, h) {
                    loops.push(path);
                }
            }
        }
    }
    let logs: Vec<Mat> = loops
        .par_iter()
        .map(|path| -> Result<Mat> {
            let hol = loop_transport(m, path, &frame.vectors, strategy.transport_tol)?;
            linalg::logm_near_identity(&hol)
        })
        .collect::<Result<_>>()?;

    let mut out: Vec<Mat> = lasso.into_iter().flatten().collect();
    out.extend(logs);
    Ok((frame, out))
}

/// Rectangle of side `h` at `p` in the `(i, j)` plane, flipping sides that
/// would leave the box.
fn rectangle_in(dom: &crate::sampling::Domain, p: &Point, i: usize, j: usize, h: f64) -> Option<PathSpec> {
    let fits = |k: usize, s: f64| dom.contains(&{
        let mut c = p.0.clone();
        c[k] += s;
        c
    });
    let hi = if fits(i, h) { h } else if fits(i, -h) { -h } else { return None };
    let hj = if fits(j, h) { h } else if fits(j, -h) { -h } else { return None };
    Some(PathSpec::Rectangle { base: p.clone(), i, j, hi, hj })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Closure {
    #[serde(serialize_with = "ser_mats")]
    pub basis: Vec<Mat>,
    /// Singular values of the final spanning set (decreasing).
    pub singular_values: Vec<f64>,
    /// Set when the dimension reached the cap `dim so(1, n+1)`.
    pub capped: bool,
    pub iterations: usize,
}

/// Absolute floor below which singular values are treated as zero whatever
/// the relative cutoff says.
pub const RANK_FLOOR: f64 = 1e-9;

fn span(mats: &[Mat], rel: f64) -> (Vec<Mat>, Vec<f64>) {
    let d = mats.first().map(|m| m.nrows()).unwrap_or(0);
    let vecs: Vec<Vector> = mats.iter().map(linalg::vectorize).collect();
    let (_, sv) = linalg::span_basis(&vecs, 0.0);
    let top = sv.first().copied().unwrap_or(0.0);
    let cut = (rel * top).max(RANK_FLOOR);
    let (basis, sv) = linalg::span_basis(&vecs, cut);
    (basis.iter().map(|v| linalg::unvectorize(v, d)).collect(), sv)
}

/// Orthonormal (Frobenius) basis of the Lie algebra generated by `elems`.
pub fn lie_closure(elems: &[Mat], rank_tol: f64) -> Closure {
    if elems.is_empty() {
        return Closure { basis: Vec::new(), singular_values: Vec::new(), capped: false, iterations: 0 };
    }
    let d = elems[0].nrows();
    let cap = d * (d - 1) / 2;
    let (mut basis, mut sv) = span(elems, rank_tol);
    let mut iterations = 0;
    loop {
        if basis.len() >= cap {
            basis.truncate(cap);
            return Closure { basis, singular_values: sv, capped: true, iterations };
        }
        iterations += 1;
        let mut all = basis.clone();
        for a in 0..basis.len() {
            for b in a + 1..basis.len() {
                all.push(linalg::commutator(&basis[a], &basis[b]));
            }
        }
        let (next, next_sv) = span(&all, rank_tol);
        let stable = next.len() == basis.len();
        basis = next;
        sv = next_sv;
        if stable {
            return Closure { basis, singular_values: sv, capped: false, iterations };
        }
    }
}

/// Berard-Bergery–Ikemakhen type of a subalgebra of the stabilizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeLabel {
    Type1,
    Type2,
    Type3,
    Type4(usize),
    NotReducible,
    Decomposable,
}

impl fmt::Display for TypeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeLabel::Type1 => write!(f, "Type1"),
            TypeLabel::Type2 => write!(f, "Type2"),
            TypeLabel::Type3 => write!(f, "Type3"),
            TypeLabel::Type4(l) => write!(f, "Type4({l})"),
            TypeLabel::NotReducible => write!(f, "NotReducible"),
            TypeLabel::Decomposable => write!(f, "Decomposable"),
        }
    }
}

impl Serialize for TypeLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub label: TypeLabel,
    pub in_stabilizer: bool,
    pub stab_basis: Vec<StabilizerElement>,
    /// `dim 𝔤`, the span of the `A` parts.
    pub screen_algebra_dim: usize,
    /// Dimension of the pure-translation part `{w : (0, 0, w) ∈ 𝔥}`.
    pub translation_dim: usize,
    pub a_nonzero: bool,
    /// Least-squares residual of the type 3/4 coupling fit, when attempted.
    pub coupling_residual: Option<f64>,
    pub note: String,
}

/// Classifies an algebra given by a basis in an adapted frame.
pub fn classify_bbi(basis: &[Mat], n: usize, rank_tol: f64) -> Classification {
    let decomposed: Option<Vec<StabilizerElement>> = basis.iter().map(stabilizer_decompose).collect();
    let Some(elems) = decomposed else {
        return Classification {
            label: TypeLabel::NotReducible,
            in_stabilizer: false,
            stab_basis: Vec::new(),
            screen_algebra_dim: 0,
            translation_dim: 0,
            a_nonzero: false,
            coupling_residual: None,
            note: "some element does not preserve the null line".into(),
        };
    };
    let dim = elems.len();
    let cut = rank_tol.max(RANK_FLOOR);
    let a_vals: Vec<f64> = elems.iter().map(|e| e.a).collect();
    let a_nonzero = a_vals.iter().any(|a| a.abs() > cut);
    let a_parts: Vec<Vector> = elems.iter().map(|e| linalg::vectorize(&e.big_a)).collect();
    let g_dim = if dim == 0 { 0 } else { linalg::span_basis(&a_parts, cut).0.len() };

    // kernel of c ↦ (Σ c a, Σ c A), then the span of the corresponding w
    let rows = 1 + n * n;
    let mcoef = Mat::from_fn(rows, dim, |r, c| if r == 0 { elems[c].a } else { a_parts[c][r - 1] });
    let kernel = null_space(&mcoef, cut);
    let trans: Vec<Vector> = kernel
        .iter()
        .map(|c| {
            let mut w = Vector::zeros(n);
            for (k, e) in elems.iter().enumerate() {
                w += Vector::from_column_slice(&e.w) * c[k];
            }
            w
        })
        .collect();
    let (t_basis, _) = linalg::span_basis(&trans, cut);
    let ell = t_basis.len();

    let mut out = Classification {
        label: TypeLabel::NotReducible,
        in_stabilizer: true,
        stab_basis: elems.clone(),
        screen_algebra_dim: g_dim,
        translation_dim: ell,
        a_nonzero,
        coupling_residual: None,
        note: String::new(),
    };

    if dim == 0 {
        out.label = TypeLabel::Decomposable;
        out.note = "trivial algebra".into();
        return out;
    }
    if ell == n {
        if a_nonzero && dim == 1 + g_dim + n {
            out.label = TypeLabel::Type1;
        } else if !a_nonzero && dim == g_dim + n {
            out.label = TypeLabel::Type2;
        } else if a_nonzero && dim == g_dim + n {
            // a must be a linear function of A
            let res = fit_residual(&a_parts, std::slice::from_ref(&a_vals));
            out.coupling_residual = Some(res);
            if g_dim > 0 && res < COUPLING_TOL {
                out.label = TypeLabel::Type3;
            } else {
                out.note = "a-part neither independent nor determined by A".into();
            }
        } else {
            out.note = format!("dimension {dim} inconsistent with dim g = {g_dim}, n = {n}");
        }
        return out;
    }
    // proper translation span: project w onto its complement
    let comp = complement(&t_basis, n);
    let w_perp: Vec<Vec<f64>> = comp
        .iter()
        .map(|c| elems.iter().map(|e| c.dot(&Vector::from_column_slice(&e.w))).collect())
        .collect();
    let coupled = w_perp.iter().any(|col| col.iter().any(|v| v.abs() > cut));
    if !coupled {
        out.label = TypeLabel::Decomposable;
        out.note = format!("translations span R^{ell} with no coupling");
        return out;
    }
    if a_nonzero {
        out.note = "a-part together with a proper translation span".into();
        return out;
    }
    let res = fit_residual(&a_parts, &w_perp);
    out.coupling_residual = Some(res);
    if res < COUPLING_TOL && dim == g_dim + ell && g_dim >= n - ell {
        out.label = TypeLabel::Type4(ell);
    } else {
        out.note = "complementary translations not determined by A".into();
    }
    out
}

/// Null space of `m` (columns as coefficients) via the eigen-decomposition of `mᵀm`.
fn null_space(m: &Mat, cut: f64) -> Vec<Vector> {
    let k = m.ncols();
    if k == 0 {
        return Vec::new();
    }
    let eig = SymmetricEigen::new(m.transpose() * m);
    (0..k)
        .filter(|&i| eig.eigenvalues[i].abs() <= cut * cut)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect()
}

fn complement(basis: &[Vector], n: usize) -> Vec<Vector> {
    let mut out: Vec<Vector> = basis.to_vec();
    let mut comp = Vec::new();
    for k in 0..n {
        let mut v = Vector::zeros(n);
        v[k] = 1.0;
        for b in &out {
            let c = b.dot(&v);
            v -= b * c;
        }
        let nrm = v.norm();
        if nrm > 1e-8 {
            v /= nrm;
            out.push(v.clone());
            comp.push(v);
        }
    }
    comp
}

/// Largest residual of least-squares fits `target_k ≈ L(A_k)` for a linear
/// functional `L` on the A-parts, one fit per target sequence.
fn fit_residual(a_parts: &[Vector], targets: &[Vec<f64>]) -> f64 {
    let k = a_parts.len();
    let rows = a_parts.first().map(|v| v.len()).unwrap_or(0);
    // design matrix: one row per element, columns = vectorized A
    let design = Mat::from_fn(k, rows, |i, j| a_parts[i][j]);
    let mut worst: f64 = 0.0;
    for t in targets {
        let b = Vector::from_column_slice(t);
        let coef = match linalg::lstsq(&design, &b, 1e-10) {
            Ok(c) => c,
            Err(_) => return f64::INFINITY,
        };
        let r = (&design * coef - &b).amax();
        worst = worst.max(r);
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolonomyDiagnostics {
    pub samples: usize,
    pub singular_values: Vec<f64>,
    /// Last kept and first dropped singular value.
    pub cut: (Option<f64>, Option<f64>),
    pub capped: bool,
    pub closure_iterations: usize,
    pub frame_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolonomyReport {
    pub base: Point,
    #[serde(serialize_with = "ser_mats")]
    pub basis: Vec<Mat>,
    /// Sampled dimension (a lower bound for the true dimension).
    pub dim: usize,
    pub in_stabilizer: bool,
    pub stab_basis: Vec<StabilizerElement>,
    pub screen_algebra_dim: usize,
    pub translation_dim: usize,
    pub type_label: TypeLabel,
    pub note: String,
    pub diagnostics: HolonomyDiagnostics,
}

/// Full pipeline: frame, sampling, closure and classification at `p`.
pub fn holonomy(m: &MetricChart, p: &Point, strategy: &Strategy) -> Result<HolonomyReport> {
    let (frame, samples) = sample_with_frame(m, p, strategy)?;
    let closure = lie_closure(&samples, strategy.rank_tol);
    let cls = classify_bbi(&closure.basis, m.n(), strategy.rank_tol);
    let k = closure.basis.len();
    let g = m.metric_at(p)?;
    Ok(HolonomyReport {
        base: p.clone(),
        dim: k,
        in_stabilizer: cls.in_stabilizer,
        stab_basis: cls.stab_basis,
        screen_algebra_dim: cls.screen_algebra_dim,
        translation_dim: cls.translation_dim,
        type_label: cls.label,
        note: cls.note,
        diagnostics: HolonomyDiagnostics {
            samples: samples.len(),
            cut: (
                k.checked_sub(1).and_then(|i| closure.singular_values.get(i).copied()),
                closure.singular_values.get(k).copied(),
            ),
            singular_values: closure.singular_values,
            capped: closure.capped,
            closure_iterations: closure.iterations,
            frame_residual: frame.residual(&g),
        },
        basis: closure.basis,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreenHolonomy {
    #[serde(serialize_with = "ser_mats")]
    pub basis: Vec<Mat>,
    pub dim: usize,
    /// Largest entry of the screen blocks of the sampled curvature conjugates.
    pub max_curvature_block: f64,
    pub singular_values: Vec<f64>,
}

/// Holonomy algebra of the screen connection: the `A`-blocks of the
/// Ambrose–Singer samples, closed in `so(n)`.
pub fn screen_holonomy(m: &MetricChart, p: &Point, strategy: &Strategy) -> Result<ScreenHolonomy> {
    let n = m.n();
    let (_, samples) = sample_with_frame(m, p, strategy)?;
    let lasso_count = (strategy.lasso_targets + 1) * {
        let d = m.dim();
        if strategy.plane_pairs.is_empty() { d * (d - 1) / 2 } else { strategy.plane_pairs.len() }
    };
    let blocks: Vec<Mat> = samples.iter().map(|x| x.view((1, 1), (n, n)).into_owned()).collect();
    let max_curvature_block = blocks[..lasso_count.min(blocks.len())].iter().fold(0.0f64, |a, b| a.max(linalg::max_abs(b)));
    let closure = lie_closure(&blocks, strategy.rank_tol);
    Ok(ScreenHolonomy {
        dim: closure.basis.len(),
        basis: closure.basis,
        max_curvature_block,
        singular_values: closure.singular_values,
    })
}

fn mat_rows(m: &Mat) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub(crate) fn ser_mat<S: Serializer>(m: &Mat, s: S) -> std::result::Result<S::Ok, S::Error> {
    mat_rows(m).serialize(s)
}

fn ser_mats<S: Serializer>(ms: &[Mat], s: S) -> std::result::Result<S::Ok, S::Error> {
    ms.iter().map(mat_rows).collect::<Vec<_>>().serialize(s)
}
