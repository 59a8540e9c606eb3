//! Truncated Taylor arithmetic used to evaluate expression trees together
//! with their exact first and second partial derivatives.

use super::EvalError;

/// Largest chart dimension (n + 2) supported by the derivative arithmetic.
pub const MAX_DIM: usize = 12;
const MAX_PACKED: usize = MAX_DIM * (MAX_DIM + 1) / 2;

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    b * (b + 1) / 2 + a
}

/// Scalar types the evaluator can run on.
pub trait Number: Copy {
    fn lift(c: f64, dim: usize) -> Self;
    fn value(&self) -> f64;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn neg(self) -> Self;
    /// Composition with a scalar function given its value and first two derivatives.
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self;

    /// True when this type carries derivatives (domain checks are stricter).
    const DIFFERENTIAL: bool;

    fn div(self, o: Self) -> Result<Self, EvalError> {
        let b = o.value();
        if b == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        let inv = o.chain(1.0 / b, -1.0 / (b * b), 2.0 / (b * b * b));
        Ok(self.mul(inv))
    }

    fn powi(self, k: i32) -> Result<Self, EvalError> {
        let u = self.value();
        if k == 0 {
            return Ok(self.chain(1.0, 0.0, 0.0));
        }
        if k < 0 && u == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        let kf = k as f64;
        let f0 = u.powi(k);
        let f1 = kf * u.powi(k - 1);
        let f2 = if k == 1 { 0.0 } else { kf * (kf - 1.0) * u.powi(k - 2) };
        Ok(self.chain(f0, f1, f2))
    }

    fn sin(self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.chain(s, c, -s)
    }

    fn cos(self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.chain(c, -s, -c)
    }

    fn exp(self) -> Result<Self, EvalError> {
        let e = self.value().exp();
        if !e.is_finite() {
            return Err(EvalError::Overflow);
        }
        Ok(self.chain(e, e, e))
    }

    fn sqrt(self) -> Result<Self, EvalError> {
        let u = self.value();
        if u < 0.0 || (Self::DIFFERENTIAL && u == 0.0) {
            return Err(EvalError::SqrtOfNegative);
        }
        let r = u.sqrt();
        if !Self::DIFFERENTIAL {
            return Ok(self.chain(r, 0.0, 0.0));
        }
        Ok(self.chain(r, 0.5 / r, -0.25 / (r * u)))
    }

    fn smoothstep(self) -> Self {
        let (s0, s1, s2) = smoothstep3(self.value());
        self.chain(s0, s1, s2)
    }
}

/// exp(-1/t) for t > 0 (zero otherwise) with its first two derivatives.
fn mollifier3(t: f64) -> (f64, f64, f64) {
    // exp(-700) is already subnormal-adjacent; treat it as the flat part.
    if t <= 1.0 / 700.0 {
        return (0.0, 0.0, 0.0);
    }
    let e = (-1.0 / t).exp();
    let t2 = t * t;
    (e, e / t2, e * (1.0 - 2.0 * t) / (t2 * t2))
}

/// Smooth step s(t) = e(t) / (e(t) + e(1 - t)) and its first two derivatives.
pub fn smoothstep3(t: f64) -> (f64, f64, f64) {
    let (a0, a1, a2) = mollifier3(t);
    let (b0, b1, b2) = mollifier3(1.0 - t);
    // derivatives of e(1 - t) with respect to t
    let (b1, b2) = (-b1, b2);
    let d0 = a0 + b0;
    let d1 = a1 + b1;
    let d2 = a2 + b2;
    let s0 = a0 / d0;
    let num1 = a1 * d0 - a0 * d1;
    let s1 = num1 / (d0 * d0);
    let s2 = (a2 * d0 - a0 * d2) / (d0 * d0) - 2.0 * d1 * num1 / (d0 * d0 * d0);
    (s0, s1, s2)
}

impl Number for f64 {
    const DIFFERENTIAL: bool = false;

    fn lift(c: f64, _dim: usize) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn neg(self) -> Self {
        -self
    }
    fn chain(self, f0: f64, _f1: f64, _f2: f64) -> Self {
        f0
    }
    fn div(self, o: Self) -> Result<Self, EvalError> {
        if o == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        Ok(self / o)
    }
}

/// Value plus gradient.
#[derive(Debug, Clone, Copy)]
pub struct Dual {
    pub dim: usize,
    pub v: f64,
    pub g: [f64; MAX_DIM],
}

impl Dual {
    pub fn variable(value: f64, k: usize, dim: usize) -> Self {
        let mut g = [0.0; MAX_DIM];
        g[k] = 1.0;
        Dual { dim, v: value, g }
    }

    pub fn grad(&self) -> &[f64] {
        &self.g[..self.dim]
    }
}

impl Number for Dual {
    const DIFFERENTIAL: bool = true;

    fn lift(c: f64, dim: usize) -> Self {
        Dual { dim, v: c, g: [0.0; MAX_DIM] }
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..self.dim {
            self.g[i] += o.g[i];
        }
        self
    }
    fn sub(mut self, o: Self) -> Self {
        self.v -= o.v;
        for i in 0..self.dim {
            self.g[i] -= o.g[i];
        }
        self
    }
    fn mul(self, o: Self) -> Self {
        let mut r = Dual::lift(self.v * o.v, self.dim);
        for i in 0..self.dim {
            r.g[i] = self.v * o.g[i] + o.v * self.g[i];
        }
        r
    }
    fn neg(mut self) -> Self {
        self.v = -self.v;
        for i in 0..self.dim {
            self.g[i] = -self.g[i];
        }
        self
    }
    fn chain(mut self, f0: f64, f1: f64, _f2: f64) -> Self {
        self.v = f0;
        for i in 0..self.dim {
            self.g[i] *= f1;
        }
        self
    }
}

/// Value, gradient and Hessian (packed upper triangle).
#[derive(Debug, Clone, Copy)]
pub struct Jet {
    pub dim: usize,
    pub v: f64,
    pub g: [f64; MAX_DIM],
    pub h: [f64; MAX_PACKED],
}

impl Jet {
    pub fn variable(value: f64, k: usize, dim: usize) -> Self {
        let mut j = Jet::lift(value, dim);
        j.g[k] = 1.0;
        j
    }

    pub fn grad(&self) -> &[f64] {
        &self.g[..self.dim]
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.h[packed(i, j)]
    }

    fn packed_len(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }
}

impl Number for Jet {
    const DIFFERENTIAL: bool = true;

    fn lift(c: f64, dim: usize) -> Self {
        Jet { dim, v: c, g: [0.0; MAX_DIM], h: [0.0; MAX_PACKED] }
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..self.dim {
            self.g[i] += o.g[i];
        }
        for i in 0..self.packed_len() {
            self.h[i] += o.h[i];
        }
        self
    }
    fn sub(mut self, o: Self) -> Self {
        self.v -= o.v;
        for i in 0..self.dim {
            self.g[i] -= o.g[i];
        }
        for i in 0..self.packed_len() {
            self.h[i] -= o.h[i];
        }
        self
    }
    fn mul(self, o: Self) -> Self {
        let mut r = Jet::lift(self.v * o.v, self.dim);
        for i in 0..self.dim {
            r.g[i] = self.v * o.g[i] + o.v * self.g[i];
        }
        for j in 0..self.dim {
            for i in 0..=j {
                let p = packed(i, j);
                r.h[p] = self.v * o.h[p]
                    + o.v * self.h[p]
                    + self.g[i] * o.g[j]
                    + self.g[j] * o.g[i];
            }
        }
        r
    }
    fn neg(mut self) -> Self {
        self.v = -self.v;
        for i in 0..self.dim {
            self.g[i] = -self.g[i];
        }
        for i in 0..self.packed_len() {
            self.h[i] = -self.h[i];
        }
        self
    }
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut r = Jet::lift(f0, self.dim);
        for i in 0..self.dim {
            r.g[i] = f1 * self.g[i];
        }
        for j in 0..self.dim {
            for i in 0..=j {
                let p = packed(i, j);
                r.h[p] = f1 * self.h[p] + f2 * self.g[i] * self.g[j];
            }
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_plateaus() {
        assert_eq!(smoothstep3(-0.5), (0.0, 0.0, 0.0));
        assert_eq!(smoothstep3(0.0).0, 0.0);
        assert_eq!(smoothstep3(1.0).0, 1.0);
        assert_eq!(smoothstep3(2.0), (1.0, 0.0, 0.0));
        assert!((smoothstep3(0.5).0 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn smoothstep_derivatives_match_differences() {
        for &t in &[0.1, 0.3, 0.5, 0.77, 0.95] {
            let h = 1e-5;
            let (_, d1, d2) = smoothstep3(t);
            let fd1 = (smoothstep3(t + h).0 - smoothstep3(t - h).0) / (2.0 * h);
            let sd = |h: f64| {
                (smoothstep3(t + h).0 - 2.0 * smoothstep3(t).0 + smoothstep3(t - h).0) / (h * h)
            };
            let fd2 = (4.0 * sd(5e-4) - sd(1e-3)) / 3.0;
            assert!((d1 - fd1).abs() < 1e-8, "t={t}: {d1} vs {fd1}");
            assert!((d2 - fd2).abs() < 1e-4 * d2.abs().max(1.0), "t={t}: {d2} vs {fd2}");
        }
    }

    #[test]
    fn jet_product_rule() {
        let x = Jet::variable(2.0, 0, 2);
        let z = Jet::variable(3.0, 1, 2);
        let p = x.mul(x).mul(z);
        assert_eq!(p.v, 12.0);
        assert_eq!(p.grad(), &[12.0, 4.0]);
        assert_eq!(p.hess(0, 0), 6.0);
        assert_eq!(p.hess(0, 1), 4.0);
        assert_eq!(p.hess(1, 1), 0.0);
    }
}
