//! Pointwise algebra of 2-forms against parallel structures on the base:
//! the (1,1) condition, primitivity via the dual Lefschetz operator,
//! hyperkähler, G₂ and Spin(7) contraction conditions, and the phase picked
//! up by a holomorphic volume form under screen transport along `Z`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::constructions::Construction;
use crate::error::{Error, Result};
use crate::expr::{Point, ScalarField};
use crate::holonomy::{adapted_frame_with, Realization};
use crate::linalg::{self, Mat};
use crate::metric::MetricChart;
use crate::sampling::Domain;
use crate::transport::{transport_matrix, PathSpec};

/// Tolerance for `J² = −I`, `JᵀGJ = G` and the quaternion relations.
pub const J_TOL: f64 = 1e-10;

/// An antisymmetric `k×k` array of fields on a chart's coordinates.
#[derive(Debug, Clone)]
pub struct TwoForm {
    comps: Vec<Vec<ScalarField>>,
}

impl TwoForm {
    /// Builds from the upper triangle of `comps`; the lower triangle is
    /// ignored and replaced by the negated transpose, so antisymmetry is exact.
    pub fn new(comps: Vec<Vec<ScalarField>>) -> Result<Self> {
        let k = comps.len();
        if comps.iter().any(|r| r.len() != k) {
            return Err(Error::Invalid("two-form needs a square array".into()));
        }
        let vars = comps.first().and_then(|r| r.first()).map(|s| s.n()).unwrap_or(0);
        if comps.iter().flatten().any(|s| s.n() != vars) {
            return Err(Error::Invalid("two-form components live on different charts".into()));
        }
        let mut out = comps.clone();
        for a in 0..k {
            out[a][a] = ScalarField::zero(vars);
            for b in 0..a {
                out[a][b] = comps[b][a].scaled(-1.0);
            }
        }
        Ok(TwoForm { comps: out })
    }

    /// Constant form from a matrix (only the strict upper triangle is read).
    pub fn constant(m: &Mat) -> Self {
        let k = m.nrows();
        let comps = (0..k).map(|a| (0..k).map(|b| ScalarField::constant(m[(a, b)], k)).collect()).collect();
        TwoForm::new(comps).expect("square by construction")
    }

    /// `Σ c · dy^i∧dy^j` over 1-based `(c, i, j)`, on a `k`-dimensional base.
    pub fn from_terms(k: usize, terms: &[(f64, usize, usize)]) -> Result<Self> {
        let mut m = Mat::zeros(k, k);
        for &(c, i, j) in terms {
            if i == 0 || j == 0 || i > k || j > k || i == j {
                return Err(Error::Invalid(format!("bad index pair ({i}, {j}) for dimension {k}")));
            }
            m[(i - 1, j - 1)] += c;
            m[(j - 1, i - 1)] -= c;
        }
        for a in 0..k {
            for b in 0..a {
                m[(b, a)] = -m[(a, b)];
            }
        }
        Ok(TwoForm::constant(&m))
    }

    /// The `y`-block of a construction's curvature form, scaled by `s`.
    pub fn screen_block(c: &Construction, s: f64) -> Result<Self> {
        let psi = c.psi.as_ref().ok_or_else(|| Error::Invalid("construction carries no curvature form".into()))?;
        let n = c.chart.n();
        TwoForm::new((0..n).map(|a| (0..n).map(|b| psi[a][b].scaled(s)).collect()).collect())
    }

    /// Screen connection matrix along `Z` for a toric chart: `−½ dφ` on `y`
    /// (see [`su_phase_check`]).
    pub fn screen_form(c: &Construction) -> Result<Self> {
        TwoForm::screen_block(c, -0.5)
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn is_constant(&self) -> bool {
        self.comps.iter().flatten().all(|s| s.is_constant())
    }

    pub fn at(&self, p: &Point) -> Result<Mat> {
        let k = self.dim();
        let mut m = Mat::zeros(k, k);
        for a in 0..k {
            for b in a + 1..k {
                let v = self.comps[a][b].eval(p)?;
                m[(a, b)] = v;
                m[(b, a)] = -v;
            }
        }
        Ok(m)
    }

    /// Value of a constant form.
    pub fn value(&self) -> Result<Mat> {
        if !self.is_constant() {
            return Err(Error::Invalid("two-form is not constant".into()));
        }
        let vars = self.comps.first().map(|r| r[0].n()).unwrap_or(0);
        self.at(&Point::new(vec![0.0; vars + 2]))
    }
}

/// A constant endomorphism `J` with `J² = −I`; column `j` is `J∂_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexStructureJ {
    #[serde(serialize_with = "crate::holonomy::ser_mat")]
    j: Mat,
}

impl ComplexStructureJ {
    pub fn new(j: Mat) -> Result<Self> {
        let n = j.nrows();
        if j.ncols() != n || !n.is_multiple_of(2) || n == 0 {
            return Err(Error::Invalid("complex structure needs an even square matrix".into()));
        }
        let r = linalg::max_abs(&(&j * &j + Mat::identity(n, n)));
        if r > J_TOL {
            return Err(Error::Validation(format!("J² + I has residual {r:e}")));
        }
        Ok(ComplexStructureJ { j })
    }

    /// `J∂_{2k−1} = ∂_{2k}`.
    pub fn standard(n: usize) -> Result<Self> {
        let mut j = Mat::zeros(n, n);
        for k in (0..n.saturating_sub(1)).step_by(2) {
            j[(k + 1, k)] = 1.0;
            j[(k, k + 1)] = -1.0;
        }
        ComplexStructureJ::new(j)
    }

    /// `J₂` with `J₂∂_{4k+1} = ∂_{4k+3}`, `J₂∂_{4k+2} = −∂_{4k+4}`, which
    /// anticommutes with [`ComplexStructureJ::standard`].
    pub fn quaternionic_partner(n: usize) -> Result<Self> {
        if !n.is_multiple_of(4) || n == 0 {
            return Err(Error::Invalid("quaternionic structures need dimension divisible by 4".into()));
        }
        let mut j = Mat::zeros(n, n);
        for b in (0..n).step_by(4) {
            j[(b + 2, b)] = 1.0;
            j[(b, b + 2)] = -1.0;
            j[(b + 3, b + 1)] = -1.0;
            j[(b + 1, b + 3)] = 1.0;
        }
        ComplexStructureJ::new(j)
    }

    pub fn matrix(&self) -> &Mat {
        &self.j
    }

    pub fn dim(&self) -> usize {
        self.j.nrows()
    }

    /// `max |JᵀGJ − G|`.
    pub fn compatibility_residual(&self, g: &Mat) -> f64 {
        linalg::max_abs(&(self.j.transpose() * g * &self.j - g))
    }

    pub fn check_compatible(&self, g: &Mat) -> Result<()> {
        let r = self.compatibility_residual(g);
        if r > J_TOL * linalg::max_abs(g).max(1.0) {
            return Err(Error::Validation(format!("J is not G-orthogonal (residual {r:e})")));
        }
        Ok(())
    }

    /// Kähler form `ω(u, v) = G(Ju, v)`.
    pub fn kahler_form(&self, g: &Mat) -> Mat {
        self.j.transpose() * g
    }
}

/// A totally antisymmetric constant tensor of degree `k` on `ℝ^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantForm {
    dim: usize,
    degree: usize,
    comps: Vec<f64>,
}

impl ConstantForm {
    pub fn zero(dim: usize, degree: usize) -> Self {
        ConstantForm { dim, degree, comps: vec![0.0; dim.pow(degree as u32)] }
    }

    /// Sum of `c · e^{i1}∧…∧e^{ik}` over 0-based index tuples.
    pub fn from_terms(dim: usize, degree: usize, terms: &[(f64, Vec<usize>)]) -> Result<Self> {
        let mut out = ConstantForm::zero(dim, degree);
        for (c, idx) in terms {
            if idx.len() != degree || idx.iter().any(|&i| i >= dim) {
                return Err(Error::Invalid(format!("term {idx:?} does not fit degree {degree} on dimension {dim}")));
            }
            for (perm, sign) in permutations(degree) {
                let tuple: Vec<usize> = perm.iter().map(|&p| idx[p]).collect();
                let at = out.offset(&tuple);
                out.comps[at] += sign * c;
            }
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    fn offset(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.comps[self.offset(idx)]
    }

    pub fn components(&self) -> &[f64] {
        &self.comps
    }

    /// Hodge star for the Euclidean metric and orientation `e^0∧…∧e^{dim−1}`.
    pub fn hodge(&self) -> ConstantForm {
        let k = self.degree;
        let mut terms = Vec::new();
        for idx in increasing_tuples(self.dim, k) {
            let c = self.get(&idx);
            if c == 0.0 {
                continue;
            }
            let rest: Vec<usize> = (0..self.dim).filter(|i| !idx.contains(i)).collect();
            let full: Vec<usize> = idx.iter().chain(&rest).copied().collect();
            terms.push((c * permutation_sign(&full), rest));
        }
        ConstantForm::from_terms(self.dim, self.dim - k, &terms).expect("indices in range")
    }

    /// `e^0 ∧ self`, shifting `self` to indices `1..=dim`.
    pub fn wedge_e0(&self) -> ConstantForm {
        let terms: Vec<(f64, Vec<usize>)> = increasing_tuples(self.dim, self.degree)
            .into_iter()
            .filter_map(|idx| {
                let c = self.get(&idx);
                (c != 0.0).then(|| (c, std::iter::once(0).chain(idx.iter().map(|i| i + 1)).collect()))
            })
            .collect();
        ConstantForm::from_terms(self.dim + 1, self.degree + 1, &terms).expect("indices in range")
    }

    pub fn plus(&self, other: &ConstantForm) -> Result<ConstantForm> {
        if self.dim != other.dim || self.degree != other.degree {
            return Err(Error::Invalid("forms of different type".into()));
        }
        let comps = self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect();
        Ok(ConstantForm { dim: self.dim, degree: self.degree, comps })
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Associative 3-form on `ℝ⁷`:
/// `e123 + e145 + e167 + e246 − e257 − e347 − e356` (1-based labels).
pub fn standard_g2_form() -> ConstantForm {
    let t = |c: f64, i: [usize; 3]| (c, i.iter().map(|v| v - 1).collect::<Vec<_>>());
    let terms = [
        t(1.0, [1, 2, 3]),
        t(1.0, [1, 4, 5]),
        t(1.0, [1, 6, 7]),
        t(1.0, [2, 4, 6]),
        t(-1.0, [2, 5, 7]),
        t(-1.0, [3, 4, 7]),
        t(-1.0, [3, 5, 6]),
    ];
    ConstantForm::from_terms(7, 3, &terms).expect("valid table")
}

/// Cayley 4-form on `ℝ⁸ = ℝ ⊕ ℝ⁷`: `e^0∧φ + ⋆φ`, with `φ` the associative
/// form on the last seven coordinates.
pub fn standard_spin7_form() -> ConstantForm {
    let phi = standard_g2_form();
    let star = phi.hodge();
    let shifted = ConstantForm::from_terms(
        8,
        4,
        &increasing_tuples(7, 4)
            .into_iter()
            .map(|idx| (star.get(&idx), idx.iter().map(|i| i + 1).collect()))
            .collect::<Vec<_>>(),
    )
    .expect("indices in range");
    phi.wedge_e0().plus(&shifted).expect("same type")
}

fn check_square(psi: &Mat, n: usize) -> Result<()> {
    if psi.nrows() != n || psi.ncols() != n {
        return Err(Error::Invalid(format!("expected a {n}×{n} form, got {}×{}", psi.nrows(), psi.ncols())));
    }
    Ok(())
}

/// `max_{j,ℓ} |ψ(J∂_j, ∂_ℓ) + ψ(∂_j, J∂_ℓ)|`; zero exactly for `ψ ∈ Λ^{1,1}`.
pub fn check_one_one(psi: &TwoForm, j: &ComplexStructureJ, p: &Point) -> Result<f64> {
    let m = psi.at(p)?;
    one_one_residual(&m, j)
}

fn one_one_residual(psi: &Mat, j: &ComplexStructureJ) -> Result<f64> {
    check_square(psi, j.dim())?;
    let jm = j.matrix();
    Ok(linalg::max_abs(&(jm.transpose() * psi + psi * jm)))
}

/// `e_1, …, e_m` with `{e_k, Je_k}` a `G`-orthonormal basis: Gram–Schmidt on
/// the coordinate vectors in order, skipping any that fall into the span
/// already built.
pub fn unitary_frame(j: &ComplexStructureJ, g: &Mat) -> Result<Vec<linalg::Vector>> {
    let n = j.dim();
    check_square(g, n)?;
    j.check_compatible(g)?;
    let jm = j.matrix();
    let ip = |a: &linalg::Vector, b: &linalg::Vector| (a.transpose() * g * b)[(0, 0)];
    let mut chosen: Vec<linalg::Vector> = Vec::new();
    let mut basis: Vec<linalg::Vector> = Vec::new();
    for i in 0..n {
        if chosen.len() == n / 2 {
            break;
        }
        let mut v = linalg::Vector::zeros(n);
        v[i] = 1.0;
        for b in &basis {
            v -= b * ip(b, &v);
        }
        let norm2 = ip(&v, &v);
        if norm2 <= 1e-20 {
            continue;
        }
        if norm2 < 0.0 {
            return Err(Error::Validation("base metric is not positive definite".into()));
        }
        let e = v / norm2.sqrt();
        let je = jm * &e;
        basis.push(e.clone());
        basis.push(je);
        chosen.push(e);
    }
    if chosen.len() != n / 2 {
        return Err(Error::Validation("could not build a unitary frame (degenerate metric)".into()));
    }
    Ok(chosen)
}

/// `Λψ = Σ_k ψ(e_k, Je_k)` in a unitary frame of `(J, G)`.
pub fn dual_lefschetz(psi: &TwoForm, j: &ComplexStructureJ, g: &Mat, p: &Point) -> Result<f64> {
    lefschetz_value(&psi.at(p)?, j, g)
}

fn lefschetz_value(psi: &Mat, j: &ComplexStructureJ, g: &Mat) -> Result<f64> {
    check_square(psi, j.dim())?;
    let frame = unitary_frame(j, g)?;
    Ok(frame.iter().map(|e| (e.transpose() * psi * (j.matrix() * e))[(0, 0)]).sum())
}

/// Largest `|Λψ|` over the grid.
pub fn check_primitive(psi: &TwoForm, j: &ComplexStructureJ, g: &Mat, grid: &[Point]) -> Result<f64> {
    grid.par_iter()
        .map(|p| dual_lefschetz(psi, j, g, p).map(f64::abs))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Larger of the two (1,1) residuals, after checking `J₁J₂ = −J₂J₁`.
pub fn check_hyperkahler(psi: &TwoForm, j1: &ComplexStructureJ, j2: &ComplexStructureJ, p: &Point) -> Result<f64> {
    let n = j1.dim();
    if !n.is_multiple_of(4) || j2.dim() != n {
        return Err(Error::Invalid("hyperkähler check needs dimension divisible by 4".into()));
    }
    let (a, b) = (j1.matrix(), j2.matrix());
    let r = linalg::max_abs(&(a * b + b * a));
    if r > J_TOL {
        return Err(Error::Validation(format!("J₁J₂ + J₂J₁ has residual {r:e}")));
    }
    let m = psi.at(p)?;
    Ok(one_one_residual(&m, j1)?.max(one_one_residual(&m, j2)?))
}

/// `C₂₄(ψ ⊗ T)`: the second slot of `ψ` contracted with the second slot of
/// `T` (the fourth of the product) through `G⁻¹`, so
/// `C_{abc…} = G^{mk} ψ_{am} T_{bkc…}` with slots `(ψ₁, T₁, T₃, …)`.
pub fn contract_24(psi: &Mat, t: &ConstantForm, g: &Mat) -> Result<Vec<f64>> {
    let n = t.dim();
    check_square(psi, n)?;
    check_square(g, n)?;
    let ginv = linalg::inverse(g).ok_or_else(|| Error::Singular(vec![]))?;
    // ψ_a^k = ψ_{am} G^{mk}
    let raised = psi * &ginv;
    let k = t.degree();
    let out_len = n.pow(k as u32);
    let mut out = vec![0.0; out_len];
    let mut idx = vec![0usize; k];
    let mut probe = vec![0usize; k];
    for (flat, slot) in out.iter_mut().enumerate() {
        let mut r = flat;
        for s in (0..k).rev() {
            idx[s] = r % n;
            r /= n;
        }
        // idx = (a, b, c, …) → Σ_k ψ_a^k T_{b k c …}
        let a = idx[0];
        probe[0] = idx[1];
        probe[2..].copy_from_slice(&idx[2..]);
        let mut acc = 0.0;
        for m in 0..n {
            let w = raised[(a, m)];
            if w == 0.0 {
                continue;
            }
            probe[1] = m;
            acc += w * t.get(&probe);
        }
        *slot = acc;
    }
    Ok(out)
}

fn cyclic_residual(c: &[f64], n: usize, k: usize, alternating: bool) -> f64 {
    let mut worst: f64 = 0.0;
    let mut idx = vec![0usize; k];
    let offset = |v: &[usize]| v.iter().fold(0, |acc, &i| acc * n + i);
    for flat in 0..c.len() {
        let mut r = flat;
        for s in (0..k).rev() {
            idx[s] = r % n;
            r /= n;
        }
        let mut sum = 0.0;
        let mut rot = idx.clone();
        for shift in 0..k {
            let sign = if alternating && shift % 2 == 1 { -1.0 } else { 1.0 };
            sum += sign * c[offset(&rot)];
            rot.rotate_left(1);
        }
        worst = worst.max(sum.abs());
    }
    worst
}

/// Max-abs component of the cyclic Bianchi sum of `C₂₄(ψ ⊗ φ)` on `ℝ⁷`.
pub fn g2_condition(psi: &TwoForm, phi: &ConstantForm, g: &Mat, p: &Point) -> Result<f64> {
    if phi.dim() != 7 || phi.degree() != 3 || psi.dim() != 7 {
        return Err(Error::Invalid("G₂ condition needs a 3-form and a 2-form on a 7-dimensional base".into()));
    }
    let c = contract_24(&psi.at(p)?, phi, g)?;
    Ok(cyclic_residual(&c, 7, 3, false))
}

/// Max-abs component of the alternating cyclic sum of `C₂₄(ψ ⊗ Ω)` on `ℝ⁸`.
pub fn spin7_condition(psi: &TwoForm, omega: &ConstantForm, g: &Mat, p: &Point) -> Result<f64> {
    if omega.dim() != 8 || omega.degree() != 4 || psi.dim() != 8 {
        return Err(Error::Invalid("Spin(7) condition needs a 4-form and a 2-form on an 8-dimensional base".into()));
    }
    let c = contract_24(&psi.at(p)?, omega, g)?;
    Ok(cyclic_residual(&c, 8, 4, true))
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseSample {
    pub base: Point,
    pub dz: f64,
    /// `(re, im)` of the transported volume form divided by the original.
    pub measured: [f64; 2],
    pub expected: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseReport {
    /// `Λψ_S` for the screen form driving the transport.
    pub lambda: f64,
    pub samples: Vec<PhaseSample>,
    pub residual: f64,
}

/// Transports the holomorphic volume form `dζ¹∧…∧dζ^m` of `(J, G)` along
/// `z`-segments of length `dz` from every grid point, using the Levi-Civita
/// transport of the full chart read in the horizontal adapted frame, and
/// compares the resulting phase with `exp(−i Λψ_S dz)`.
///
/// The chart must be a flat-base Walker chart (`G = I`, constant `ψ_S`).
/// `psi_screen` is the matrix of the screen connection along `Z` in the
/// horizontal frame, `∇_Z Y_b = Σ_a ψ_S(∂_a, ∂_b) Y_a`; for charts with
/// `g(∂_a, ∂_z) = φ_a` this is `−½ dφ` restricted to `y`.
pub fn su_phase_check(
    m: &MetricChart,
    j: &ComplexStructureJ,
    psi_screen: &TwoForm,
    grid: &[Point],
    dz: &[f64],
    tol: f64,
) -> Result<PhaseReport> {
    let n = m.n();
    let meta = m.walker().ok_or(Error::NotWalker)?;
    if j.dim() != n || psi_screen.dim() != n {
        return Err(Error::Invalid(format!("structure dimension must equal n = {n}")));
    }
    let flat_base = meta.gbase.iter().enumerate().all(|(a, row)| {
        row.iter().enumerate().all(|(b, s)| s.is_constant() && s.eval(&Point::new(vec![0.0; n + 2])).ok() == Some(if a == b { 1.0 } else { 0.0 }))
    });
    if !flat_base {
        return Err(Error::Invalid("phase check needs the flat base metric G = I".into()));
    }
    let g = Mat::identity(n, n);
    let lambda = lefschetz_value(&psi_screen.value()?, j, &g)?;
    let frame = unitary_frame(j, &g)?;
    // Rows: dζ_k = G(·, e_k) + i G(·, J e_k).
    let zeta = DMatrix::<Complex64>::from_fn(n / 2, n, |k, a| {
        let je = j.matrix() * &frame[k];
        Complex64::new(frame[k][a], je[a])
    });
    // Columns: Z_k = ½(e_k − i J e_k).
    let zvec = DMatrix::<Complex64>::from_fn(n, n / 2, |a, k| {
        let je = j.matrix() * &frame[k];
        Complex64::new(0.5 * frame[k][a], -0.5 * je[a])
    });
    let reference = (&zeta * &zvec).determinant();
    if reference.norm() < 1e-12 {
        return Err(Error::Validation("volume form vanishes on the unitary frame".into()));
    }

    let jobs: Vec<(Point, f64)> = grid.iter().flat_map(|p| dz.iter().map(move |&d| (p.clone(), d))).collect();
    let samples: Vec<PhaseSample> = jobs
        .par_iter()
        .map(|(p, d)| {
            let mut q = p.0.clone();
            q[n + 1] += d;
            let q = Point::new(q);
            let lo: Vec<f64> = p.0.iter().zip(&q.0).map(|(a, b)| a.min(*b) - 1.0).collect();
            let hi: Vec<f64> = p.0.iter().zip(&q.0).map(|(a, b)| a.max(*b) + 1.0).collect();
            let chart = m.clone().with_domain(Domain::new(lo, hi)?)?;
            let pm = transport_matrix(&chart, &PathSpec::Polyline(vec![p.clone(), q.clone()]), tol)?;
            let f0 = adapted_frame_with(&chart, p, Realization::Horizontal)?.vectors;
            let f1 = adapted_frame_with(&chart, &q, Realization::Horizontal)?.vectors;
            let f1inv = linalg::inverse(&f1).ok_or_else(|| Error::Singular(q.0.clone()))?;
            let pf = f1inv * pm * f0;
            let rot = pf.view((1, 1), (n, n)).into_owned();
            let rinv = linalg::inverse(&rot).ok_or_else(|| Error::Singular(q.0.clone()))?;
            let rinv_c = rinv.map(|v| Complex64::new(v, 0.0));
            // (P_* Ω)(Z_1, …) = Ω(P⁻¹Z_1, …)
            let moved = (&zeta * rinv_c * &zvec).determinant() / reference;
            let expected = Complex64::from_polar(1.0, -lambda * d);
            Ok(PhaseSample { base: p.clone(), dz: *d, measured: [moved.re, moved.im], expected: [expected.re, expected.im] })
        })
        .collect::<Result<_>>()?;
    let residual = samples
        .iter()
        .map(|s| Complex64::new(s.measured[0] - s.expected[0], s.measured[1] - s.expected[1]).norm())
        .fold(0.0, f64::max);
    Ok(PhaseReport { lambda, samples, residual })
}

/// All permutations of `0..k` with their signs.
fn permutations(k: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<(Vec<usize>, f64)>) {
        if prefix.len() == used.len() {
            out.push((prefix.clone(), permutation_sign(prefix)));
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

/// Sign of the permutation sorting `v` (distinct entries).
fn permutation_sign(v: &[usize]) -> f64 {
    let mut inversions = 0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if v[i] > v[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn increasing_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}
