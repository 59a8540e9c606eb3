//! Geodesics, parallel transport along piecewise-linear paths, the reduced
//! pp-wave system and the completeness probe.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{eval_generic, Expr, Point, ScalarField};
use crate::linalg::{self, Mat};
use crate::metric::MetricChart;
use crate::ode::{self, Control, Settings, Step};
use crate::sampling::Domain;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicState {
    pub position: Point,
    pub velocity: Vec<f64>,
}

impl GeodesicState {
    pub fn new(position: Vec<f64>, velocity: Vec<f64>) -> Self {
        GeodesicState { position: Point::new(position), velocity }
    }

    fn packed(&self) -> Vec<f64> {
        let mut y = self.position.0.clone();
        y.extend_from_slice(&self.velocity);
        y
    }

    fn unpack(y: &[f64]) -> Self {
        let d = y.len() / 2;
        GeodesicState::new(y[..d].to_vec(), y[d..].to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    LeftDomain,
    StepUnderflow,
    StepBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub max_energy_drift: f64,
    /// Drift of `g(γ̇, ∂_x)`, which is `ż` in Walker coordinates.
    pub z_dot_drift: f64,
    pub termination: Termination,
    pub end_time: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub state: GeodesicState,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// `g(γ̇, γ̇)` at the initial time.
    pub energy: f64,
    pub diagnostics: Diagnostics,
}

/// Which states a trajectory keeps.
#[derive(Debug, Clone, PartialEq)]
pub enum Sampling {
    /// Every accepted integrator step.
    Steps,
    /// The given increasing times (from dense output), plus the start.
    Times(Vec<f64>),
    /// Start and end only.
    Ends,
}

#[derive(Debug, Clone)]
pub struct GeodesicOptions {
    pub tol: f64,
    pub sampling: Sampling,
    /// Integration stops (with `LeftDomain`) once the position leaves this box.
    pub domain: Option<Domain>,
    pub max_steps: usize,
}

impl GeodesicOptions {
    pub fn new(tol: f64) -> Self {
        GeodesicOptions { tol, sampling: Sampling::Steps, domain: None, max_steps: 20_000_000 }
    }

    pub fn sampling(mut self, s: Sampling) -> Self {
        self.sampling = s;
        self
    }
}

fn energy(m: &MetricChart, s: &GeodesicState) -> Result<(f64, f64)> {
    let g = m.metric_at(&s.position)?;
    let v = linalg::Vector::from_column_slice(&s.velocity);
    let gv = &g * &v;
    Ok((v.dot(&gv), gv[0]))
}

fn check_state(m: &MetricChart, s: &GeodesicState) -> Result<()> {
    let d = m.dim();
    if s.position.dim() != d || s.velocity.len() != d {
        return Err(Error::Invalid(format!("state must have {d} position and velocity components")));
    }
    if !s.position.is_finite() || s.velocity.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("state has non-finite entries".into()));
    }
    Ok(())
}

/// Records samples according to a [`Sampling`] policy from accepted steps.
struct Recorder {
    sampling: Sampling,
    next: usize,
    out: Vec<(f64, Vec<f64>)>,
}

impl Recorder {
    fn new(sampling: Sampling, t0: f64, y0: &[f64]) -> Self {
        let mut next = 0;
        if let Sampling::Times(ts) = &sampling {
            while next < ts.len() && ts[next] <= t0 {
                next += 1;
            }
        }
        Recorder { sampling, next, out: vec![(t0, y0.to_vec())] }
    }

    fn step(&mut self, step: &Step<'_>, map: &mut dyn FnMut(f64, &[f64]) -> Vec<f64>) {
        match &self.sampling {
            Sampling::Steps => self.out.push((step.t1(), map(step.t1(), step.y1))),
            Sampling::Times(ts) => {
                let mut buf = vec![0.0; step.y1.len()];
                while self.next < ts.len() && ts[self.next] <= step.t1() {
                    let t = ts[self.next];
                    step.interpolate(t, &mut buf);
                    self.out.push((t, map(t, &buf)));
                    self.next += 1;
                }
            }
            Sampling::Ends => {}
        }
    }

    fn finish(&mut self, t: f64, y: Vec<f64>) {
        if self.sampling == Sampling::Ends && self.out.last().map(|s| s.0) != Some(t) {
            self.out.push((t, y));
        }
    }
}

fn termination_of(e: &Error) -> Option<Termination> {
    match e {
        Error::StepUnderflow { .. } => Some(Termination::StepUnderflow),
        Error::TooManySteps { .. } => Some(Termination::StepBudget),
        Error::LeftDomain { .. } => Some(Termination::LeftDomain),
        _ => None,
    }
}

/// Solves `ẍ^k + Γ^k_{ij} ẋ^i ẋ^j = 0` from `s0` over `[0, t_end]`.
///
/// Numerical breakdown (step underflow, leaving `opts.domain`, step budget)
/// ends the trajectory early and is reported in the diagnostics.
pub fn geodesic(m: &MetricChart, s0: &GeodesicState, t_end: f64, opts: &GeodesicOptions) -> Result<Trajectory> {
    check_state(m, s0)?;
    let d = m.dim();
    let (e0, zd0) = energy(m, s0)?;
    let y0 = s0.packed();
    let settings = Settings { max_steps: opts.max_steps, ..Settings::new(opts.tol) };
    let mut rec = Recorder::new(opts.sampling.clone(), 0.0, &y0);
    let mut max_e: f64 = 0.0;
    let mut max_z: f64 = 0.0;
    let mut left = None;
    let mut last = (0.0, y0.clone());
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let p = Point::new(y[..d].to_vec());
        let gam = m.christoffel(&p)?;
        dy[..d].copy_from_slice(&y[d..]);
        gam.contract(&y[d..], &y[d..], &mut dy[d..]);
        for v in &mut dy[d..] {
            *v = -*v;
        }
        Ok(())
    };
    let result = ode::integrate(rhs, 0.0, &y0, t_end, &settings, |step| {
        let st = GeodesicState::unpack(step.y1);
        if let Some(dom) = &opts.domain {
            if !dom.contains(st.position.coords()) {
                left = Some(step.t1());
                return Control::Stop;
            }
        }
        if let Ok((e, zd)) = energy(m, &st) {
            max_e = max_e.max((e - e0).abs());
            max_z = max_z.max((zd - zd0).abs());
        }
        rec.step(step, &mut |_, y| y.to_vec());
        last = (step.t1(), step.y1.to_vec());
        Control::Continue
    });
    let (termination, steps) = match result {
        Ok((_, _, stats)) if left.is_none() => (Termination::Completed, stats.accepted),
        Ok((_, _, stats)) => (Termination::LeftDomain, stats.accepted),
        Err(e) => match termination_of(&e) {
            Some(t) => (t, 0),
            None => return Err(e),
        },
    };
    rec.finish(last.0, last.1.clone());
    Ok(Trajectory {
        samples: rec.out.into_iter().map(|(t, y)| Sample { t, state: GeodesicState::unpack(&y) }).collect(),
        energy: e0,
        diagnostics: Diagnostics {
            max_energy_drift: max_e,
            z_dot_drift: max_z,
            termination,
            end_time: last.0,
            steps,
        },
    })
}

/// A Walker chart of the form `2 dx dz + H(y, z) dz^2 + Σ dy^2`, whose
/// geodesics reduce to `z = z0 + A t`, `ÿ = (A²/2) ∇_y H`.
#[derive(Debug, Clone)]
pub struct PpWave {
    n: usize,
    h: ScalarField,
    grad: Vec<Option<Expr>>,
}

impl PpWave {
    pub fn from_chart(m: &MetricChart) -> Result<Self> {
        let meta = m.walker().ok_or(Error::NotWalker)?;
        let n = m.n();
        let unit = |s: &ScalarField, want: f64| matches!(s.expr().simplify(), Expr::Const(c) if c == want);
        let flat_base = (0..n).all(|a| (0..n).all(|b| unit(&meta.gbase[a][b], if a == b { 1.0 } else { 0.0 })));
        if !flat_base || meta.u.iter().any(|u| !u.is_zero()) || meta.f.depends_on(0) {
            return Err(Error::Invalid(
                "reduced system needs u = 0, flat screen metric and x-independent f".into(),
            ));
        }
        let grad = (1..=n).map(|k| meta.f.diff(k).map(|s| s.expr().clone())).collect();
        Ok(PpWave { n, h: meta.f.clone(), grad })
    }

    pub fn h(&self) -> &ScalarField {
        &self.h
    }

    fn force(&self, coords: &[f64], out: &mut [f64]) -> Result<()> {
        let mut dual = None;
        for k in 0..self.n {
            out[k] = match &self.grad[k] {
                Some(e) => eval_generic(e, coords)?,
                None => {
                    if dual.is_none() {
                        dual = Some(self.h.dual(&Point::new(coords.to_vec()))?);
                    }
                    dual.as_ref().unwrap().g[k + 1]
                }
            };
        }
        Ok(())
    }

    fn h_at(&self, coords: &[f64]) -> Result<f64> {
        Ok(eval_generic(self.h.expr(), coords)?)
    }
}

#[derive(Debug, Clone)]
pub struct ReducedOptions {
    pub tol: f64,
    pub sampling: Sampling,
    /// Recover `x(t)` by quadrature (otherwise `x` and `ẋ` are left at NaN
    /// for `A ≠ 0`).
    pub recover_x: bool,
    /// Absolute error per unit time allowed for the `x` quadrature.
    pub quad_tol: f64,
    pub max_steps: usize,
}

impl ReducedOptions {
    pub fn new(tol: f64) -> Self {
        ReducedOptions { tol, sampling: Sampling::Steps, recover_x: true, quad_tol: 1e-11, max_steps: 50_000_000 }
    }
}

/// Adaptive trapezoid rule: halves until two successive estimates agree to
/// `tol * (b - a)`.
pub fn adaptive_trapezoid<F: FnMut(f64) -> Result<f64> + ?Sized>(g: &mut F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let ga = g(a)?;
    let gb = g(b)?;
    trap_rec(g, a, b, ga, gb, tol, 0)
}

fn trap_rec<F: FnMut(f64) -> Result<f64> + ?Sized>(
    g: &mut F,
    a: f64,
    b: f64,
    ga: f64,
    gb: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let h = b - a;
    let mid = 0.5 * (a + b);
    let gm = g(mid)?;
    let coarse = 0.5 * h * (ga + gb);
    let fine = 0.25 * h * (ga + 2.0 * gm + gb);
    if (fine - coarse).abs() <= 3.0 * tol * h.abs() || depth >= 40 {
        return Ok(fine);
    }
    Ok(trap_rec(g, a, mid, ga, gm, tol, depth + 1)? + trap_rec(g, mid, b, gm, gb, tol, depth + 1)?)
}

/// Integrates the reduced pp-wave system and rebuilds the full geodesic.
pub fn ppwave_reduced(m: &MetricChart, s0: &GeodesicState, t_end: f64, opts: &ReducedOptions) -> Result<Trajectory> {
    check_state(m, s0)?;
    let wave = PpWave::from_chart(m)?;
    run_reduced(m, &wave, s0, t_end, opts, &mut |_, _| {})
}

/// `observe(t, [y, ẏ])` sees every accepted step.
fn run_reduced(
    m: &MetricChart,
    wave: &PpWave,
    s0: &GeodesicState,
    t_end: f64,
    opts: &ReducedOptions,
    observe: &mut dyn FnMut(f64, &[f64]),
) -> Result<Trajectory> {
    let n = m.n();
    let d = n + 2;
    let zi = n + 1;
    let (e0, _) = energy(m, s0)?;
    let a = s0.velocity[zi];
    let (x0, z0) = (s0.position.0[0], s0.position.0[zi]);
    let xdot0 = s0.velocity[0];
    let mut y0 = s0.position.0[1..=n].to_vec();
    y0.extend_from_slice(&s0.velocity[1..=n]);
    let half_a2 = 0.5 * a * a;
    let coords_at = |t: f64, y: &[f64], buf: &mut Vec<f64>| {
        buf.clear();
        buf.push(0.0);
        buf.extend_from_slice(&y[..n]);
        buf.push(z0 + a * t);
    };
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let mut c = Vec::with_capacity(d);
        coords_at(t, y, &mut c);
        dy[..n].copy_from_slice(&y[n..]);
        wave.force(&c, &mut dy[n..])?;
        for v in &mut dy[n..] {
            *v *= half_a2;
        }
        Ok(())
    };
    // ẋ from the energy identity E = 2ẋA + H A² + |ẏ|²
    let xdot = |t: f64, y: &[f64]| -> Result<f64> {
        if a == 0.0 {
            return Ok(xdot0);
        }
        let mut c = Vec::with_capacity(d);
        coords_at(t, y, &mut c);
        let vy2: f64 = y[n..].iter().map(|v| v * v).sum();
        Ok((e0 - vy2 - a * a * wave.h_at(&c)?) / (2.0 * a))
    };
    let full = |t: f64, y: &[f64], x: f64, xd: f64| -> Vec<f64> {
        let mut s = Vec::with_capacity(2 * d);
        s.push(x);
        s.extend_from_slice(&y[..n]);
        s.push(z0 + a * t);
        s.push(xd);
        s.extend_from_slice(&y[n..]);
        s.push(a);
        s
    };
    let settings = Settings { max_steps: opts.max_steps, ..Settings::new(opts.tol) };
    let mut rec = Recorder::new(opts.sampling.clone(), 0.0, &s0.packed());
    let mut x_acc = x0;
    let mut max_e: f64 = 0.0;
    let mut quad_err: Option<Error> = None;
    let mut last = (0.0, s0.packed());
    let recover = opts.recover_x && a != 0.0;
    let result = ode::integrate(rhs, 0.0, &y0, t_end, &settings, |step| {
        observe(step.t1(), step.y1);
        let mut buf = vec![0.0; 2 * n];
        let mut integrand = |t: f64| -> Result<f64> {
            step.interpolate(t, &mut buf);
            xdot(t, &buf)
        };
        let x_start = x_acc;
        let x_at = |t: f64, integrand: &mut dyn FnMut(f64) -> Result<f64>| -> Result<f64> {
            if a == 0.0 {
                Ok(x0 + xdot0 * t)
            } else if recover {
                Ok(x_start + adaptive_trapezoid(integrand, step.t0, t, opts.quad_tol)?)
            } else {
                Ok(f64::NAN)
            }
        };
        let mut map = |t: f64, y: &[f64]| -> Vec<f64> {
            let xd = xdot(t, y).unwrap_or(f64::NAN);
            let x = match x_at(t, &mut integrand) {
                Ok(x) => x,
                Err(e) => {
                    quad_err.get_or_insert(e);
                    f64::NAN
                }
            };
            full(t, y, x, if recover || a == 0.0 { xd } else { f64::NAN })
        };
        let end = map(step.t1(), step.y1);
        if recover || a == 0.0 {
            x_acc = end[0];
            if let Ok((e, _)) = energy(m, &GeodesicState::unpack(&end)) {
                max_e = max_e.max((e - e0).abs());
            }
        }
        match &rec.sampling {
            Sampling::Steps => rec.out.push((step.t1(), end.clone())),
            _ => rec.step(step, &mut map),
        }
        last = (step.t1(), end);
        if quad_err.is_some() {
            Control::Stop
        } else {
            Control::Continue
        }
    });
    if let Some(e) = quad_err {
        return Err(e);
    }
    let (termination, steps) = match result {
        Ok((_, _, stats)) => (Termination::Completed, stats.accepted),
        Err(e) => match termination_of(&e) {
            Some(t) => (t, 0),
            None => return Err(e),
        },
    };
    rec.finish(last.0, last.1.clone());
    Ok(Trajectory {
        samples: rec.out.into_iter().map(|(t, y)| Sample { t, state: GeodesicState::unpack(&y) }).collect(),
        energy: e0,
        diagnostics: Diagnostics { max_energy_drift: max_e, z_dot_drift: 0.0, termination, end_time: last.0, steps },
    })
}

/// Piecewise-linear path in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum PathSpec {
    Polyline(Vec<Point>),
    /// Loop `p → p + h_i e_i → p + h_i e_i + h_j e_j → p + h_j e_j → p`.
    Rectangle { base: Point, i: usize, j: usize, hi: f64, hj: f64 },
}

impl PathSpec {
    pub fn vertices(&self) -> Vec<Point> {
        match self {
            PathSpec::Polyline(v) => v.clone(),
            PathSpec::Rectangle { base, i, j, hi, hj } => {
                let shift = |di: f64, dj: f64| {
                    let mut c = base.0.clone();
                    c[*i] += di;
                    c[*j] += dj;
                    Point::new(c)
                };
                vec![base.clone(), shift(*hi, 0.0), shift(*hi, *hj), shift(0.0, *hj), base.clone()]
            }
        }
    }

    pub fn reversed(&self) -> PathSpec {
        let mut v = self.vertices();
        v.reverse();
        PathSpec::Polyline(v)
    }

    pub fn is_closed(&self) -> bool {
        let v = self.vertices();
        match (v.first(), v.last()) {
            (Some(a), Some(b)) => a.0.iter().zip(&b.0).all(|(x, y)| (x - y).abs() <= 1e-14 * x.abs().max(1.0)),
            _ => false,
        }
    }
}

/// Matrix `P` of parallel transport along `path`: a vector `v` at the start
/// is carried to `P v` at the end. Segments are traversed at unit speed.
pub fn transport_matrix(m: &MetricChart, path: &PathSpec, tol: f64) -> Result<Mat> {
    let d = m.dim();
    let verts = path.vertices();
    if verts.is_empty() || verts.iter().any(|v| v.dim() != d) {
        return Err(Error::Invalid(format!("path vertices must have {d} coordinates")));
    }
    let dom = m.domain();
    if let Some(v) = verts.iter().find(|v| !dom.contains(v.coords())) {
        return Err(Error::Invalid(format!("path vertex {:?} outside the chart box", v.0)));
    }
    let settings = Settings::new(tol);
    let mut p = Mat::identity(d, d);
    for seg in verts.windows(2) {
        let (a, b) = (&seg[0].0, &seg[1].0);
        let delta: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
        let len = delta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if len == 0.0 {
            continue;
        }
        let dir: Vec<f64> = delta.iter().map(|v| v / len).collect();
        let rhs = |s: f64, w: &[f64], dw: &mut [f64]| -> Result<()> {
            let q = Point::new(a.iter().zip(&dir).map(|(x, u)| x + s * u).collect());
            let g = m.christoffel(&q)?.along(&dir);
            // column-major d×d matrix W: dW = -G W
            for c in 0..d {
                for r in 0..d {
                    dw[c * d + r] = -(0..d).map(|k| g[(r, k)] * w[c * d + k]).sum::<f64>();
                }
            }
            Ok(())
        };
        let w0: Vec<f64> = p.as_slice().to_vec();
        let (w, _, _) = ode::integrate(rhs, 0.0, &w0, len, &settings, |_| Control::Continue)?;
        p = Mat::from_column_slice(d, d, &w);
    }
    Ok(p)
}

pub fn parallel_transport(m: &MetricChart, path: &PathSpec, v0: &[f64], tol: f64) -> Result<Vec<f64>> {
    if v0.len() != m.dim() {
        return Err(Error::Invalid(format!("vector must have {} components", m.dim())));
    }
    let p = transport_matrix(m, path, tol)?;
    Ok((p * linalg::Vector::from_column_slice(v0)).as_slice().to_vec())
}

/// Transport around a closed loop, expressed in `frame` (columns are the
/// frame vectors at the base point): `F⁻¹ P F`.
pub fn loop_transport(m: &MetricChart, path: &PathSpec, frame: &Mat, tol: f64) -> Result<Mat> {
    if !path.is_closed() {
        return Err(Error::Invalid("loop transport needs a closed path".into()));
    }
    let p = transport_matrix(m, path, tol)?;
    let finv = linalg::inverse(frame).ok_or_else(|| Error::Invalid("frame matrix is singular".into()))?;
    Ok(finv * p * frame)
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeTrajectory {
    pub termination: Termination,
    pub end_time: f64,
    /// `A = ż` (pp-wave case) or the initial `ż`.
    pub a: f64,
    pub initial_norm: f64,
    pub max_norm: f64,
    /// Largest `ln(‖α(t)‖ + √K) − ln(‖α(0)‖ + √K) − t`; non-positive means
    /// the envelope held (only for the corollary family).
    pub envelope_margin: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompletenessReport {
    /// Whether the chart is the periodic `y1 + f + 1` pp-wave family for which
    /// the envelope bound applies.
    pub corollary_family: bool,
    pub reduced_system: bool,
    /// Sampled `sup|f| + sup|∇f|` over the periodic cell.
    pub c_constant: Option<f64>,
    pub horizon: f64,
    pub trajectories: Vec<ProbeTrajectory>,
    pub completed: usize,
    pub failures: usize,
    pub max_norm: f64,
    /// `Some(true)` when every trajectory reached the horizon inside the
    /// envelope. Always `None` outside the corollary family (evidence only).
    pub verdict: Option<bool>,
}

/// Grid points per axis used for the envelope constant.
pub const ENVELOPE_GRID: usize = 64;

/// For the pp-wave `H = y1 + f + 1`, returns `f` when it is 1-periodic in all
/// of `(y, z)` (checked at sample points).
fn periodic_part(wave: &PpWave) -> Option<ScalarField> {
    let n = wave.n;
    let h = wave.h();
    let f = h.minus(&ScalarField::coordinate(1, n)).minus(&ScalarField::constant(1.0, n));
    let probe = Domain::unit(n + 2).halton(16, Some(0x5eed));
    for p in &probe {
        let v = f.eval(p).ok()?;
        for k in 1..=n + 1 {
            let mut q = p.0.clone();
            q[k] += 1.0;
            let w = f.eval(&Point::new(q)).ok()?;
            if (v - w).abs() > 1e-9 * v.abs().max(1.0) {
                return None;
            }
        }
    }
    Some(f)
}

/// `sup|f| + sup|∇_y f|` sampled on a `grid^{n+1}` lattice over `[0,1)^{n+1}`
/// in `(y, z)`.
pub fn envelope_constant(f: &ScalarField, grid: usize) -> Result<f64> {
    let n = f.n();
    let cells = grid.pow((n + 1) as u32);
    let (sup_f, sup_g) = (0..cells)
        .into_par_iter()
        .map(|mut idx| -> Result<(f64, f64)> {
            let mut c = vec![0.0; n + 2];
            for k in 1..=n + 1 {
                c[k] = (idx % grid) as f64 / grid as f64;
                idx /= grid;
            }
            let dual = f.dual(&Point::new(c))?;
            let g = (1..=n).map(|k| dual.g[k] * dual.g[k]).sum::<f64>().sqrt();
            Ok((dual.v.abs(), g))
        })
        .try_reduce(|| (0.0, 0.0), |a, b| Ok((a.0.max(b.0), a.1.max(b.1))))?;
    Ok(sup_f + sup_g)
}

#[derive(Debug, Clone)]
pub struct ProbeOptions {
    pub tol: f64,
    pub max_steps: usize,
}

impl ProbeOptions {
    pub fn new(tol: f64) -> Self {
        ProbeOptions { tol, max_steps: 50_000_000 }
    }
}

/// Integrates every state of the ensemble to `horizon` and collects the
/// growth of `α = (y, ẏ)`.
pub fn completeness_probe(
    m: &MetricChart,
    ensemble: &[GeodesicState],
    horizon: f64,
    opts: &ProbeOptions,
) -> Result<CompletenessReport> {
    for s in ensemble {
        check_state(m, s)?;
    }
    let n = m.n();
    let wave = PpWave::from_chart(m).ok();
    let family = wave.as_ref().and_then(periodic_part);
    let c_constant = match &family {
        Some(f) => Some(envelope_constant(f, ENVELOPE_GRID)?),
        None => None,
    };
    let alpha_norm = |pos: &[f64], vel: &[f64]| {
        pos[1..=n].iter().chain(&vel[1..=n]).map(|v| v * v).sum::<f64>().sqrt()
    };
    let trajectories: Vec<ProbeTrajectory> = ensemble
        .par_iter()
        .map(|s0| {
            let a = s0.velocity[n + 1];
            let initial = alpha_norm(&s0.position.0, &s0.velocity);
            let sqrt_k = c_constant.map(|c| 0.5 * a * a * (c + 1.0));
            let mut max_norm = initial;
            let mut margin: Option<f64> = sqrt_k.map(|_| f64::NEG_INFINITY);
            let mut track = |t: f64, norm: f64| {
                max_norm = max_norm.max(norm);
                if let (Some(k), Some(mg)) = (sqrt_k, margin.as_mut()) {
                    let v = (norm + k).ln() - (initial + k).ln() - t;
                    *mg = mg.max(v);
                }
            };
            let outcome = match &wave {
                Some(w) => {
                    let ro = ReducedOptions {
                        tol: opts.tol,
                        sampling: Sampling::Ends,
                        recover_x: false,
                        quad_tol: opts.tol,
                        max_steps: opts.max_steps,
                    };
                    run_reduced(m, w, s0, horizon, &ro, &mut |t, y| {
                        track(t, y.iter().map(|v| v * v).sum::<f64>().sqrt())
                    })
                }
                None => {
                    // full system: sample every step
                    let go = GeodesicOptions { tol: opts.tol, sampling: Sampling::Steps, domain: None, max_steps: opts.max_steps };
                    geodesic(m, s0, horizon, &go).inspect(|tr| {
                        for smp in &tr.samples {
                            track(smp.t, alpha_norm(&smp.state.position.0, &smp.state.velocity));
                        }
                    })
                }
            };
            let (termination, end_time) = match outcome {
                Ok(tr) => (tr.diagnostics.termination, tr.diagnostics.end_time),
                Err(_) => (Termination::StepUnderflow, 0.0),
            };
            ProbeTrajectory { termination, end_time, a, initial_norm: initial, max_norm, envelope_margin: margin }
        })
        .collect();
    let completed = trajectories.iter().filter(|t| t.termination == Termination::Completed).count();
    let max_norm = trajectories.iter().fold(0.0f64, |a, t| a.max(t.max_norm));
    let verdict = family.as_ref().map(|_| {
        completed == trajectories.len()
            && trajectories.iter().all(|t| t.envelope_margin.is_none_or(|m| m <= 1e-9))
    });
    Ok(CompletenessReport {
        corollary_family: family.is_some(),
        reduced_system: wave.is_some(),
        c_constant,
        horizon,
        failures: trajectories.len() - completed,
        completed,
        max_norm,
        trajectories,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    fn walker(n: usize, f: &str) -> MetricChart {
        let id = (0..n)
            .map(|a| (0..n).map(|b| ScalarField::constant(if a == b { 1.0 } else { 0.0 }, n)).collect())
            .collect();
        MetricChart::assemble_walker(n, parse_expression(f, n).unwrap(), vec![ScalarField::zero(n); n], id)
            .unwrap()
            .with_domain(Domain::cube(n + 2, -2.0, 2.0))
            .unwrap()
    }

    #[test]
    fn flat_geodesic_is_straight() {
        let m = walker(2, "0");
        let s0 = GeodesicState::new(vec![0.0, 0.1, 0.2, 0.3], vec![0.0, 1.0, 0.0, 0.0]);
        let tr = geodesic(&m, &s0, 5.0, &GeodesicOptions::new(1e-10)).unwrap();
        let last = tr.samples.last().unwrap();
        assert_eq!(last.t, 5.0);
        assert!((last.state.position.0[1] - 5.1).abs() < 1e-12);
        assert_eq!(tr.diagnostics.termination, Termination::Completed);
    }

    #[test]
    fn reduced_free_fall_has_closed_form() {
        let m = walker(2, "y1 + 1");
        let s0 = GeodesicState::new(vec![0.0, 0.1, 0.2, 0.3], vec![0.5, 0.3, -0.2, 1.5]);
        let ts: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let opts = ReducedOptions { sampling: Sampling::Times(ts), ..ReducedOptions::new(1e-10) };
        let tr = ppwave_reduced(&m, &s0, 10.0, &opts).unwrap();
        for s in &tr.samples {
            let want = 0.1 + 0.3 * s.t + 1.5 * 1.5 / 4.0 * s.t * s.t;
            assert!((s.state.position.0[1] - want).abs() < 1e-8, "{} {}", s.t, s.state.position.0[1]);
        }
    }

    #[test]
    fn reduced_with_zero_a_keeps_x_linear() {
        let m = walker(1, "y + 1 + sin(2*pi*y)*cos(2*pi*z)");
        let s0 = GeodesicState::new(vec![0.2, 0.1, 0.3], vec![0.7, 0.4, 0.0]);
        let tr = ppwave_reduced(&m, &s0, 3.0, &ReducedOptions::new(1e-10)).unwrap();
        for s in &tr.samples {
            assert!((s.state.position.0[0] - (0.2 + 0.7 * s.t)).abs() < 1e-12);
            assert!((s.state.position.0[1] - (0.1 + 0.4 * s.t)).abs() < 1e-9);
        }
    }

    #[test]
    fn trapezoid_converges() {
        let v = adaptive_trapezoid(&mut |t: f64| Ok(t.sin()), 0.0, std::f64::consts::PI, 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn flat_loop_is_identity() {
        let m = walker(2, "0");
        let path = PathSpec::Rectangle { base: Point::new(vec![0.0; 4]), i: 1, j: 3, hi: 0.3, hj: 0.2 };
        let p = loop_transport(&m, &path, &Mat::identity(4, 4), 1e-12).unwrap();
        assert!(linalg::max_abs(&(p - Mat::identity(4, 4))) < 1e-14);
    }

    #[test]
    fn reversed_path_inverts_transport() {
        let m = walker(2, "x*sin(y1) + z*y2^2");
        let path = PathSpec::Polyline(vec![
            Point::new(vec![0.0, 0.1, 0.2, 0.0]),
            Point::new(vec![0.3, 0.5, 0.2, 0.4]),
            Point::new(vec![0.1, -0.2, 0.6, 0.9]),
        ]);
        let p = transport_matrix(&m, &path, 1e-12).unwrap();
        let q = transport_matrix(&m, &path.reversed(), 1e-12).unwrap();
        assert!(linalg::max_abs(&(q * p - Mat::identity(4, 4))) < 1e-8);
    }

    #[test]
    fn transport_preserves_metric() {
        let m = walker(2, "x*sin(y1) + z*y2^2");
        let base = Point::new(vec![0.1, 0.2, 0.3, 0.4]);
        let path = PathSpec::Rectangle { base: base.clone(), i: 0, j: 3, hi: 0.5, hj: 0.4 };
        let p = transport_matrix(&m, &path, 1e-12).unwrap();
        let g = m.metric_at(&base).unwrap();
        assert!(linalg::max_abs(&(p.transpose() * &g * &p - &g)) < 1e-9);
        assert!((p.determinant() - 1.0).abs() < 1e-8);
    }
}
