//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub fn inverse(m: &Mat) -> Option<Mat> {
    let inv = m.clone().lu().try_inverse()?;
    if inv.iter().all(|v| v.is_finite()) {
        Some(inv)
    } else {
        None
    }
}

/// Counts of negative, positive and (numerically) zero eigenvalues of a
/// symmetric matrix. Eigenvalues below `1e-12 * max|λ|` count as zero.
pub fn inertia(m: &Mat) -> (usize, usize, usize) {
    let eig = SymmetricEigen::new(m.clone());
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cut = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut out = (0, 0, 0);
    for &l in eig.eigenvalues.iter() {
        if l.abs() <= cut {
            out.2 += 1;
        } else if l < 0.0 {
            out.0 += 1;
        } else {
            out.1 += 1;
        }
    }
    out
}

pub fn commutator(a: &Mat, b: &Mat) -> Mat {
    a * b - b * a
}

pub fn frobenius(m: &Mat) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Thin singular value decomposition `A = U diag(s) Vᵀ`, singular values in
/// decreasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Mat,
    pub s: Vec<f64>,
    pub v: Mat,
}

/// Thin SVD through faer (nalgebra's bidiagonal iteration returns
/// inaccurate factors on some rank-deficient inputs).
pub fn svd(a: &Mat) -> Result<Svd> {
    let (r, c) = a.shape();
    let k = r.min(c);
    if k == 0 {
        return Ok(Svd { u: Mat::zeros(r, 0), s: Vec::new(), v: Mat::zeros(c, 0) });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("SVD of a non-finite matrix".into()));
    }
    let fa = faer::Mat::<f64>::from_fn(r, c, |i, j| a[(i, j)]);
    let d = fa.thin_svd().map_err(|e| Error::Invalid(format!("SVD did not converge: {e:?}")))?;
    let (fu, fs, fv) = (d.U(), d.S().column_vector(), d.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| fs[y].total_cmp(&fs[x]));
    Ok(Svd {
        u: Mat::from_fn(r, k, |i, j| fu[(i, order[j])]),
        s: order.iter().map(|&j| fs[j]).collect(),
        v: Mat::from_fn(c, k, |i, j| fv[(i, order[j])]),
    })
}

/// Minimum-norm least-squares solution, dropping singular values `<= cut`.
pub fn lstsq(a: &Mat, b: &Vector, cut: f64) -> Result<Vector> {
    let d = svd(a)?;
    let utb = d.u.transpose() * b;
    let mut y = Vector::zeros(d.s.len());
    for (i, &s) in d.s.iter().enumerate() {
        if s > cut {
            y[i] = utb[i] / s;
        }
    }
    Ok(&d.v * y)
}

/// Orthonormal basis of the span of `vectors` (all of equal length), cut at
/// singular values `<= cutoff`.
///
/// Returns the basis together with all singular values in decreasing order.
pub fn span_basis(vectors: &[Vector], cutoff: f64) -> (Vec<Vector>, Vec<f64>) {
    if vectors.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let rows = vectors[0].len();
    let a = Mat::from_fn(rows, vectors.len(), |i, j| vectors[j][i]);
    let Ok(d) = svd(&a) else {
        return (Vec::new(), vec![f64::NAN]);
    };
    let basis = d.s.iter().enumerate().filter(|(_, s)| **s > cutoff).map(|(i, _)| d.u.column(i).into_owned()).collect();
    (basis, d.s)
}

/// Numerical rank with a cutoff relative to the largest singular value.
pub fn rank_relative(vectors: &[Vector], rel: f64) -> usize {
    let (_, sv) = span_basis(vectors, 0.0);
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel * top).count()
}

pub fn vectorize(m: &Mat) -> Vector {
    Vector::from_iterator(m.len(), m.iter().copied())
}

pub fn unvectorize(v: &Vector, n: usize) -> Mat {
    Mat::from_iterator(n, n, v.iter().copied())
}

/// Principal matrix logarithm for matrices near the identity, by inverse
/// scaling and squaring (Denman–Beavers square roots, then a Taylor series).
pub fn logm_near_identity(p: &Mat) -> Result<Mat> {
    let n = p.nrows();
    let id = Mat::identity(n, n);
    let mut y = p.clone();
    let mut k = 0;
    while frobenius(&(&y - &id)) > 0.05 {
        if k > 40 {
            return Err(Error::Invalid("matrix logarithm: no convergence of square roots".into()));
        }
        y = sqrtm(&y)?;
        k += 1;
    }
    let x = &y - &id;
    let mut term = x.clone();
    let mut sum = x.clone();
    for j in 2..40 {
        term = &term * &x;
        let s = if j % 2 == 0 { -1.0 } else { 1.0 };
        sum += &term * (s / j as f64);
        if frobenius(&term) < 1e-18 {
            break;
        }
    }
    Ok(sum * 2f64.powi(k))
}

fn sqrtm(a: &Mat) -> Result<Mat> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = Mat::identity(n, n);
    for _ in 0..100 {
        let yi = inverse(&y).ok_or_else(|| Error::Invalid("matrix square root: singular iterate".into()))?;
        let zi = inverse(&z).ok_or_else(|| Error::Invalid("matrix square root: singular iterate".into()))?;
        let y_next = (&y + &zi) * 0.5;
        let z_next = (&z + &yi) * 0.5;
        let change = frobenius(&(&y_next - &y));
        y = y_next;
        z = z_next;
        if change < 1e-15 * frobenius(&y).max(1.0) {
            return Ok(y);
        }
    }
    Ok(y)
}

/// Matrix exponential by scaling and squaring with a Taylor series.
pub fn expm(a: &Mat) -> Mat {
    let n = a.nrows();
    let norm = frobenius(a);
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let x = a / 2f64.powi(s);
    let mut term = Mat::identity(n, n);
    let mut sum = term.clone();
    for j in 1..30 {
        term = &term * &x / j as f64;
        sum += &term;
        if frobenius(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}
