//! Command-line front end: TOML configs in, deterministic JSON (or text)
//! reports and per-trajectory CSV files out.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::constructions::{self, build, Construction, ConstructionSpec, Kind};
use crate::error::Error;
use crate::expr::{parse_defs, parse_with_defs, Point, ScalarField};
use crate::holonomy::{holonomy, screen_holonomy, Realization, Strategy};
use crate::linalg::Mat;
use crate::metric::MetricChart;
use crate::sampling::Domain;
use crate::structures::{self as st, ComplexStructureJ, TwoForm};
use crate::transport::{
    completeness_probe, geodesic, ppwave_reduced, GeodesicOptions, GeodesicState, ProbeOptions, ReducedOptions,
    Sampling, Trajectory,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// A failure carrying its process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { code: EXIT_CONFIG, message: message.into() }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse(_) | Error::Invalid(_) => EXIT_CONFIG,
            Error::Validation(_) | Error::NotWalker => EXIT_VALIDATION,
            _ if e.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_VALIDATION,
        };
        CliError { code, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub metric: MetricConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    pub holonomy: Option<HolonomyConfig>,
    pub geodesic: Option<GeodesicConfig>,
    pub structure: Option<StructureConfig>,
    pub complete: Option<CompleteConfig>,
}

/// `kind` is `walker`, `general`, or a construction name (`flat`, `toric`,
/// `corollary`, `footnote`, `example52`, or one of the demo names).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub kind: String,
    pub n: Option<usize>,
    /// Named sub-expressions `[name, source]`, resolved in order.
    #[serde(default)]
    pub defs: Vec<(String, String)>,
    pub f: Option<String>,
    pub u: Option<Vec<String>>,
    pub gbase: Option<Vec<Vec<String>>>,
    pub entries: Option<Vec<Vec<String>>>,
    pub c: Option<i64>,
    pub potential: Option<Vec<String>>,
    pub f1: Option<String>,
    pub f2: Option<String>,
    pub domain: Option<Domain>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    /// Quasi-random points (in addition to the box center) for the checks.
    pub points: usize,
    /// Points at which Christoffel symbols and curvature are reported.
    pub curvature_samples: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { points: 32, curvature_samples: 2 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HolonomyConfig {
    pub base: Option<Vec<f64>>,
    pub rect_sizes: Option<Vec<f64>>,
    pub lasso_targets: Option<usize>,
    pub plane_pairs: Option<Vec<(usize, usize)>>,
    pub transport_tol: Option<f64>,
    pub rank_tol: Option<f64>,
    /// `coordinate` or `horizontal`.
    pub realization: Option<String>,
    /// Also report the screen holonomy.
    pub screen: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeodesicConfig {
    pub tol: f64,
    pub t_end: f64,
    /// Output spacing; every accepted step when absent.
    pub dt: Option<f64>,
    /// Use the reduced pp-wave system instead of the full geodesic equation.
    pub reduced: bool,
    pub states: Vec<StateConfig>,
    /// Extra seeded states: positions in the chart box, velocities in `[−1, 1]`.
    pub random: usize,
}

impl Default for GeodesicConfig {
    fn default() -> Self {
        GeodesicConfig { tol: 1e-10, t_end: 10.0, dt: None, reduced: false, states: Vec::new(), random: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StructureConfig {
    /// Any of `one_one`, `primitive`, `hyperkahler`, `g2`, `spin7`, `su_phase`.
    pub checks: Vec<String>,
    /// Complex structure (column `j` is `J∂_j`); standard when absent.
    pub j: Option<Vec<Vec<f64>>>,
    /// Second complex structure for the hyperkähler check.
    pub j2: Option<Vec<Vec<f64>>>,
    /// Constant base Gram matrix; identity when absent.
    pub g: Option<Vec<Vec<f64>>>,
    /// Constant 2-form; the construction's screen form when absent.
    pub form: Option<Vec<Vec<f64>>>,
    /// Quasi-random grid size for pointwise sweeps.
    pub grid: usize,
    pub phase_dz: Vec<f64>,
    pub tol: f64,
}

impl Default for StructureConfig {
    fn default() -> Self {
        StructureConfig {
            checks: Vec::new(),
            j: None,
            j2: None,
            g: None,
            form: None,
            grid: 4,
            phase_dz: vec![0.0, 0.5],
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompleteConfig {
    pub trajectories: usize,
    pub horizon: f64,
    pub tol: f64,
    pub max_steps: Option<usize>,
}

impl Default for CompleteConfig {
    fn default() -> Self {
        CompleteConfig { trajectories: 64, horizon: 1000.0, tol: 1e-8, max_steps: None }
    }
}

impl Config {
    pub fn from_toml(src: &str) -> CliResult<Self> {
        toml::from_str(src).map_err(|e| CliError::config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Config::from_toml(&src)
    }

    /// Config running the standard analyses on a named demo.
    pub fn demo(name: &str) -> Self {
        Config {
            metric: MetricConfig { kind: name.to_string(), ..Default::default() },
            holonomy: Some(HolonomyConfig { screen: true, ..Default::default() }),
            ..Default::default()
        }
    }
}

/// A metric resolved from a config, with its construction when there is one.
pub struct Loaded {
    pub chart: MetricChart,
    pub construction: Option<Construction>,
}

fn parse_field(src: &str, n: usize, defs: &[(String, String)]) -> CliResult<ScalarField> {
    let table = parse_defs(defs, n).map_err(Error::from)?;
    Ok(parse_with_defs(src, n, &table).map_err(Error::from)?)
}

pub fn load_metric(cfg: &MetricConfig) -> CliResult<Loaded> {
    let mut loaded = match cfg.kind.as_str() {
        "walker" => {
            let n = cfg.n.ok_or_else(|| CliError::config("walker metric needs n"))?;
            let f = parse_field(cfg.f.as_deref().unwrap_or("0"), n, &cfg.defs)?;
            let u = match &cfg.u {
                Some(u) if u.len() == n => u.iter().map(|s| parse_field(s, n, &cfg.defs)).collect::<CliResult<_>>()?,
                Some(_) => return Err(CliError::config(format!("u needs {n} components"))),
                None => vec![ScalarField::zero(n); n],
            };
            let gbase = match &cfg.gbase {
                Some(rows) => {
                    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                        return Err(CliError::config(format!("gbase must be {n}×{n}")));
                    }
                    rows.iter()
                        .map(|r| r.iter().map(|s| parse_field(s, n, &cfg.defs)).collect::<CliResult<Vec<_>>>())
                        .collect::<CliResult<_>>()?
                }
                None => (0..n)
                    .map(|a| (0..n).map(|b| ScalarField::constant(if a == b { 1.0 } else { 0.0 }, n)).collect())
                    .collect(),
            };
            Loaded { chart: MetricChart::assemble_walker(n, f, u, gbase)?, construction: None }
        }
        "general" => {
            let rows = cfg.entries.as_ref().ok_or_else(|| CliError::config("general metric needs entries"))?;
            let d = rows.len();
            if d < 3 || rows.iter().any(|r| r.len() != d) {
                return Err(CliError::config("entries must be a square array of size at least 3"));
            }
            if cfg.n.is_some_and(|n| n + 2 != d) {
                return Err(CliError::config("n does not match the size of entries"));
            }
            let n = d - 2;
            let entries = rows
                .iter()
                .map(|r| r.iter().map(|s| parse_field(s, n, &cfg.defs)).collect::<CliResult<Vec<_>>>())
                .collect::<CliResult<_>>()?;
            Loaded { chart: MetricChart::assemble_general(n, entries)?, construction: None }
        }
        name => {
            let custom = cfg.n.is_some()
                || cfg.f.is_some()
                || cfg.c.is_some()
                || cfg.potential.is_some()
                || cfg.f1.is_some()
                || cfg.f2.is_some();
            let c = if constructions::DEMOS.contains(&name) && !custom {
                constructions::demo(name)?
            } else {
                let kind: Kind = match name {
                    "toric-ppwave" | "toric-prwave" => Kind::ToricFlatTorus,
                    other => other.parse()?,
                };
                let default_n = match kind {
                    Kind::FootnoteCounterexample | Kind::Example52 => 1,
                    _ => 2,
                };
                let mut spec = ConstructionSpec::new(kind, cfg.n.unwrap_or(default_n));
                if let Some(c) = cfg.c {
                    spec.c = c;
                }
                spec.f = cfg.f.clone();
                if spec.f.is_none() && name == "toric-prwave" {
                    spec.f = Some(constructions::sufficiently_generic_default(spec.n).1.render());
                }
                spec.potential = cfg.potential.clone();
                spec.f1 = cfg.f1.clone();
                spec.f2 = cfg.f2.clone();
                build(&spec)?
            };
            Loaded { chart: c.chart.clone(), construction: Some(c) }
        }
    };
    if let Some(dom) = &cfg.domain {
        let dom = Domain::new(dom.lo.clone(), dom.hi.clone())?;
        loaded.chart = loaded.chart.clone().with_domain(dom)?;
    }
    Ok(loaded)
}

/// Outcome of one command: a JSON section, text lines and an exit code.
#[derive(Debug, Clone)]
pub struct Section {
    pub value: Value,
    pub lines: Vec<String>,
    pub code: i32,
}

fn mat_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

fn to_mat(rows: &[Vec<f64>], what: &str) -> CliResult<Mat> {
    let r = rows.len();
    if r == 0 || rows.iter().any(|row| row.len() != r) {
        return Err(CliError::config(format!("{what} must be a non-empty square array")));
    }
    Ok(Mat::from_fn(r, r, |i, j| rows[i][j]))
}

fn check_points(chart: &MetricChart, count: usize, seed: u64) -> Vec<Point> {
    let dom = chart.domain();
    let mut pts = vec![dom.center()];
    pts.extend(dom.halton(count, Some(seed)));
    pts
}

pub fn cmd_check(cfg: &Config, seed: u64) -> CliResult<Section> {
    let loaded = load_metric(&cfg.metric)?;
    let m = &loaded.chart;
    let n = m.n();
    let pts = check_points(m, cfg.probe.points, seed);
    let mut failures = Vec::new();
    for p in &pts {
        match m.signature_at(p) {
            Ok((1, pos)) if pos == n + 1 => {}
            Ok(sig) => failures.push(json!({ "point": p, "signature": [sig.0, sig.1] })),
            Err(e) if matches!(e, Error::Singular(_)) => failures.push(json!({ "point": p, "error": e.to_string() })),
            Err(e) => return Err(e.into()),
        }
    }
    let walker = match m.walker() {
        Some(_) => Some(true),
        None => Some(m.to_walker().is_ok()),
    };
    let mut samples = Vec::new();
    if failures.is_empty() {
        for p in pts.iter().take(cfg.probe.curvature_samples) {
            let ch = m.christoffel(p)?;
            let r = m.riemann(p)?;
            let g = m.metric_at(p)?;
            let gamma: Vec<Vec<Vec<f64>>> = ch.upper.iter().map(mat_rows).collect();
            samples.push(json!({
                "point": p,
                "christoffel": gamma,
                "riemann_max_abs": r.max_abs(),
                "riemann_symmetry_residual": r.symmetry_residual(&g),
                "compatibility_residual": m.compatibility_residual(p)?,
            }));
        }
    }
    let potential_residual = match &loaded.construction {
        Some(c) => Some(c.potential_residual()?),
        None => None,
    };
    let passed = failures.is_empty();
    let mut lines = vec![format!(
        "check: {} ({} points, signature (1, {}) {})",
        if passed { "pass" } else { "FAIL" },
        pts.len(),
        n + 1,
        if passed { "everywhere" } else { "violated" }
    )];
    if let Some(r) = potential_residual {
        lines.push(format!("potential residual |dφ − ψ| = {r:e}"));
    }
    Ok(Section {
        value: json!({
            "passed": passed,
            "dimension": m.dim(),
            "walker": walker,
            "points": pts.len(),
            "failures": failures,
            "samples": samples,
            "potential_residual": potential_residual,
        }),
        lines,
        code: if passed { EXIT_OK } else { EXIT_VALIDATION },
    })
}

pub fn strategy_from(cfg: Option<&HolonomyConfig>, seed: u64) -> CliResult<Strategy> {
    let mut s = Strategy { seed, ..Strategy::default() };
    let Some(h) = cfg else { return Ok(s) };
    if let Some(v) = &h.rect_sizes {
        s.rect_sizes = v.clone();
    }
    if let Some(v) = h.lasso_targets {
        s.lasso_targets = v;
    }
    if let Some(v) = &h.plane_pairs {
        s.plane_pairs = v.clone();
    }
    if let Some(v) = h.transport_tol {
        s.transport_tol = v;
    }
    if let Some(v) = h.rank_tol {
        s.rank_tol = v;
    }
    if let Some(r) = &h.realization {
        s.realization = match r.as_str() {
            "coordinate" => Realization::Coordinate,
            "horizontal" => Realization::Horizontal,
            other => return Err(CliError::config(format!("unknown realization '{other}'"))),
        };
    }
    Ok(s)
}

pub fn cmd_holonomy(cfg: &Config, seed: u64) -> CliResult<Section> {
    let loaded = load_metric(&cfg.metric)?;
    let m = &loaded.chart;
    let strategy = strategy_from(cfg.holonomy.as_ref(), seed)?;
    let base = match cfg.holonomy.as_ref().and_then(|h| h.base.clone()) {
        Some(b) => Point::new(b),
        None => m.domain().center(),
    };
    let report = holonomy(m, &base, &strategy)?;
    let mut lines = vec![format!(
        "holonomy: {}, dim {}, screen algebra dim {}, translations {}",
        report.type_label, report.dim, report.screen_algebra_dim, report.translation_dim
    )];
    let screen = if cfg.holonomy.as_ref().is_some_and(|h| h.screen) && m.walker().is_some() {
        let s = screen_holonomy(m, &base, &strategy)?;
        lines.push(format!("screen holonomy: dim {}, max curvature block {:e}", s.dim, s.max_curvature_block));
        Some(s)
    } else {
        None
    };
    Ok(Section {
        value: json!({ "strategy": strategy, "report": report, "screen": screen }),
        lines,
        code: EXIT_OK,
    })
}

/// Seeded initial states: Halton positions in the chart box, velocities
/// uniform in `[−1, 1]`.
pub fn random_states(m: &MetricChart, count: usize, seed: u64) -> Vec<GeodesicState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    m.domain()
        .halton(count, Some(seed))
        .into_iter()
        .map(|p| GeodesicState::new(p.0, (0..m.dim()).map(|_| rng.gen_range(-1.0..=1.0)).collect()))
        .collect()
}

pub fn csv_header(n: usize) -> String {
    let mut cols = vec!["t".to_string(), "x".to_string()];
    cols.extend((1..=n).map(|i| format!("y{i}")));
    cols.push("z".into());
    cols.push("vx".into());
    cols.extend((1..=n).map(|i| format!("vy{i}")));
    cols.push("vz".into());
    cols.push("energy".into());
    cols.join(",")
}

/// CSV text of a trajectory; `energy` is `g(γ̇, γ̇)` at each sample.
pub fn trajectory_csv(m: &MetricChart, tr: &Trajectory) -> CliResult<String> {
    let mut out = csv_header(m.n());
    out.push('\n');
    for s in &tr.samples {
        let e = if s.state.position.is_finite() && s.state.velocity.iter().all(|v| v.is_finite()) {
            let g = m.metric_at(&s.state.position)?;
            let v = crate::linalg::Vector::from_column_slice(&s.state.velocity);
            (v.transpose() * g * &v)[(0, 0)]
        } else {
            f64::NAN
        };
        let row: Vec<String> = std::iter::once(s.t)
            .chain(s.state.position.0.iter().copied())
            .chain(s.state.velocity.iter().copied())
            .chain(std::iter::once(e))
            .map(|v| format!("{v:e}"))
            .collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    Ok(out)
}

pub fn cmd_geodesic(cfg: &Config, seed: u64, out: Option<&Path>) -> CliResult<Section> {
    let loaded = load_metric(&cfg.metric)?;
    let m = &loaded.chart;
    let gc = cfg.geodesic.clone().unwrap_or_default();
    let mut states: Vec<GeodesicState> =
        gc.states.iter().map(|s| GeodesicState::new(s.position.clone(), s.velocity.clone())).collect();
    states.extend(random_states(m, gc.random, seed));
    if states.is_empty() {
        return Err(CliError::config("geodesic section needs states or random > 0"));
    }
    let sampling = match gc.dt {
        Some(dt) if dt > 0.0 => {
            let k = (gc.t_end.abs() / dt).floor() as usize;
            let sign = gc.t_end.signum();
            Sampling::Times((0..=k).map(|i| sign * i as f64 * dt).collect())
        }
        Some(_) => return Err(CliError::config("dt must be positive")),
        None => Sampling::Steps,
    };
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    let mut code = EXIT_OK;
    for (i, s0) in states.iter().enumerate() {
        let result = if gc.reduced {
            ppwave_reduced(m, s0, gc.t_end, &ReducedOptions { sampling: sampling.clone(), ..ReducedOptions::new(gc.tol) })
        } else {
            geodesic(m, s0, gc.t_end, &GeodesicOptions::new(gc.tol).sampling(sampling.clone()))
        };
        match result {
            Ok(tr) => {
                let csv = match out {
                    Some(dir) => {
                        let path = dir.join(format!("geodesic_{i}.csv"));
                        std::fs::write(&path, trajectory_csv(m, &tr)?)
                            .map_err(|e| CliError { code: EXIT_NUMERICAL, message: format!("{}: {e}", path.display()) })?;
                        Some(path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default())
                    }
                    None => None,
                };
                lines.push(format!(
                    "trajectory {i}: {:?} at t = {}, energy {:e}, energy drift {:e}, ż drift {:e}",
                    tr.diagnostics.termination,
                    tr.diagnostics.end_time,
                    tr.energy,
                    tr.diagnostics.max_energy_drift,
                    tr.diagnostics.z_dot_drift
                ));
                rows.push(json!({
                    "index": i,
                    "initial": s0,
                    "ok": true,
                    "energy": tr.energy,
                    "diagnostics": tr.diagnostics,
                    "final": tr.samples.last().map(|s| &s.state),
                    "samples": tr.samples.len(),
                    "csv": csv,
                }));
            }
            Err(e) => {
                let c = CliError::from(e);
                if c.code == EXIT_CONFIG {
                    return Err(c);
                }
                code = code.max(c.code);
                lines.push(format!("trajectory {i}: FAILED ({})", c.message));
                rows.push(json!({ "index": i, "initial": s0, "ok": false, "error": c.message }));
            }
        }
    }
    Ok(Section {
        value: json!({ "tol": gc.tol, "t_end": gc.t_end, "reduced": gc.reduced, "trajectories": rows }),
        lines,
        code,
    })
}

pub fn cmd_structure(cfg: &Config, seed: u64) -> CliResult<Section> {
    let loaded = load_metric(&cfg.metric)?;
    let m = &loaded.chart;
    let n = m.n();
    let sc = cfg.structure.clone().unwrap_or_default();
    if sc.checks.is_empty() {
        return Err(CliError::config("structure section lists no checks"));
    }
    let dim_err = |msg: String| CliError { code: EXIT_VALIDATION, message: msg };
    let g = match &sc.g {
        Some(rows) => to_mat(rows, "g")?,
        None => Mat::identity(n, n),
    };
    if g.nrows() != n {
        return Err(dim_err(format!("g is {}×{0}, base dimension is {n}", g.nrows())));
    }
    let psi = match (&sc.form, &loaded.construction) {
        (Some(rows), _) => TwoForm::constant(&to_mat(rows, "form")?),
        (None, Some(c)) if c.psi.is_some() => TwoForm::screen_form(c)?,
        _ => return Err(CliError::config("structure checks need a form (none configured, no construction form)")),
    };
    if psi.dim() != n {
        return Err(dim_err(format!("form is {}×{0}, base dimension is {n}", psi.dim())));
    }
    // Constant forms are evaluated on the base-only chart, construction forms
    // on the full chart; both accept points of dimension n + 2.
    let grid = check_points(m, sc.grid, seed);
    let j_of = |rows: &Option<Vec<Vec<f64>>>, partner: bool| -> CliResult<ComplexStructureJ> {
        let j = match rows {
            Some(r) => ComplexStructureJ::new(to_mat(r, "j")?)?,
            None if partner => ComplexStructureJ::quaternionic_partner(n).map_err(|e| dim_err(e.to_string()))?,
            None => ComplexStructureJ::standard(n).map_err(|e| dim_err(e.to_string()))?,
        };
        if j.dim() != n {
            return Err(dim_err(format!("J is {}×{0}, base dimension is {n}", j.dim())));
        }
        Ok(j)
    };
    let mut results = BTreeMap::new();
    let mut lines = Vec::new();
    let sweep = |f: &dyn Fn(&Point) -> crate::Result<f64>| -> CliResult<f64> {
        let mut worst: f64 = 0.0;
        for p in &grid {
            worst = worst.max(f(p)?.abs());
        }
        Ok(worst)
    };
    for check in &sc.checks {
        let value = match check.as_str() {
            "one_one" => {
                let j = j_of(&sc.j, false)?;
                json!({ "residual": sweep(&|p| st::check_one_one(&psi, &j, p))? })
            }
            "primitive" => {
                let j = j_of(&sc.j, false)?;
                json!({ "max_abs_lambda": st::check_primitive(&psi, &j, &g, &grid)? })
            }
            "hyperkahler" => {
                let (j1, j2) = (j_of(&sc.j, false)?, j_of(&sc.j2, true)?);
                json!({ "residual": sweep(&|p| st::check_hyperkahler(&psi, &j1, &j2, p))? })
            }
            "g2" => {
                if n != 7 {
                    return Err(dim_err(format!("g2 check needs n = 7, got {n}")));
                }
                let phi = st::standard_g2_form();
                json!({ "residual": sweep(&|p| st::g2_condition(&psi, &phi, &g, p))? })
            }
            "spin7" => {
                if n != 8 {
                    return Err(dim_err(format!("spin7 check needs n = 8, got {n}")));
                }
                let omega = st::standard_spin7_form();
                json!({ "residual": sweep(&|p| st::spin7_condition(&psi, &omega, &g, p))? })
            }
            "su_phase" => {
                let j = j_of(&sc.j, false)?;
                let rep = st::su_phase_check(m, &j, &psi, &grid[..1], &sc.phase_dz, sc.tol)?;
                json!(rep)
            }
            other => return Err(CliError::config(format!("unknown structure check '{other}'"))),
        };
        let headline = ["residual", "max_abs_lambda"]
            .iter()
            .find_map(|k| value.get(*k).and_then(Value::as_f64))
            .unwrap_or(f64::NAN);
        lines.push(format!("{check}: {headline:e}"));
        results.insert(check.clone(), value);
    }
    Ok(Section { value: json!({ "grid": grid.len(), "results": results }), lines, code: EXIT_OK })
}

pub fn cmd_complete(cfg: &Config, seed: u64) -> CliResult<Section> {
    let loaded = load_metric(&cfg.metric)?;
    let m = &loaded.chart;
    let cc = cfg.complete.clone().unwrap_or_default();
    let ensemble = random_states(m, cc.trajectories, seed);
    let mut opts = ProbeOptions::new(cc.tol);
    if let Some(k) = cc.max_steps {
        opts.max_steps = k;
    }
    let rep = completeness_probe(m, &ensemble, cc.horizon, &opts)?;
    let verdict = match rep.verdict {
        Some(true) => "within envelope",
        Some(false) => "ENVELOPE VIOLATED",
        None => "evidence only (no envelope for this metric)",
    };
    let lines = vec![format!(
        "complete: {}/{} trajectories reached t = {}, {} failures, max norm {:e}, {verdict}",
        rep.completed,
        rep.trajectories.len(),
        rep.horizon,
        rep.failures,
        rep.max_norm
    )];
    let code = if rep.verdict == Some(false) {
        EXIT_VALIDATION
    } else if rep.failures > 0 {
        EXIT_NUMERICAL
    } else {
        EXIT_OK
    };
    Ok(Section { value: json!(rep), lines, code })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Check,
    Holonomy,
    Geodesic,
    Structure,
    Complete,
    Demo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Holonomy => "holonomy",
            Command::Geodesic => "geodesic",
            Command::Structure => "structure",
            Command::Complete => "complete",
            Command::Demo => "demo",
        }
    }
}

/// A full report document.
#[derive(Debug, Clone)]
pub struct Report {
    pub value: Value,
    pub lines: Vec<String>,
    pub code: i32,
}

impl Report {
    pub fn json(&self) -> String {
        serde_json::to_string_pretty(&self.value).expect("report values serialize")
    }

    pub fn text(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}

/// Runs `command` and assembles the report document.
pub fn run(command: Command, cfg: &Config, seed: u64, out: Option<&Path>) -> CliResult<Report> {
    let sections: Vec<(&str, Section)> = match command {
        Command::Check => vec![("check", cmd_check(cfg, seed)?)],
        Command::Holonomy => vec![("holonomy", cmd_holonomy(cfg, seed)?)],
        Command::Geodesic => vec![("geodesic", cmd_geodesic(cfg, seed, out)?)],
        Command::Structure => vec![("structure", cmd_structure(cfg, seed)?)],
        Command::Complete => vec![("complete", cmd_complete(cfg, seed)?)],
        Command::Demo => {
            let check = cmd_check(cfg, seed)?;
            if check.code != EXIT_OK {
                vec![("check", check)]
            } else {
                vec![("check", check), ("holonomy", cmd_holonomy(cfg, seed)?)]
            }
        }
    };
    let mut doc = serde_json::Map::new();
    doc.insert("tool".into(), json!("lorhol"));
    doc.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    doc.insert("command".into(), json!(command.name()));
    doc.insert("seed".into(), json!(seed));
    doc.insert("input".into(), json!(cfg));
    let mut lines = vec![format!("lorhol {} {} (seed {seed}, metric {})", env!("CARGO_PKG_VERSION"), command.name(), cfg.metric.kind)];
    let mut code = EXIT_OK;
    for (name, s) in sections {
        doc.insert(name.into(), s.value);
        lines.extend(s.lines);
        code = code.max(s.code);
    }
    Ok(Report { value: Value::Object(doc), lines, code })
}

/// Writes `report.json` (or `report.txt`) into `dir`.
pub fn write_report(dir: &Path, report: &Report, text: bool) -> CliResult<PathBuf> {
    let path = dir.join(if text { "report.txt" } else { "report.json" });
    let body = if text { report.text() } else { report.json() };
    std::fs::write(&path, body)
        .map_err(|e| CliError { code: EXIT_NUMERICAL, message: format!("{}: {e}", path.display()) })?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walker_toml(extra: &str) -> String {
        format!("[metric]\nkind = \"walker\"\nn = 1\nf = \"y*z\"\n{extra}")
    }

    #[test]
    fn csv_header_matches_layout() {
        assert_eq!(csv_header(2), "t,x,y1,y2,z,vx,vy1,vy2,vz,energy");
    }

    #[test]
    fn check_passes_on_demos_and_fails_on_euclidean() {
        for name in ["flat", "corollary"] {
            let r = cmd_check(&Config::demo(name), 0).unwrap();
            assert_eq!(r.code, EXIT_OK, "{name}");
        }
        let cfg = Config::from_toml(
            "[metric]\nkind = \"general\"\nentries = [[\"1\",\"0\",\"0\",\"0\"],[\"0\",\"1\",\"0\",\"0\"],[\"0\",\"0\",\"1\",\"0\"],[\"0\",\"0\",\"0\",\"1\"]]",
        )
        .unwrap();
        let r = cmd_check(&cfg, 0).unwrap();
        assert_eq!(r.code, EXIT_VALIDATION);
        assert_eq!(r.value["passed"], json!(false));
    }

    #[test]
    fn config_errors_map_to_exit_two() {
        assert_eq!(Config::from_toml("[metric\nkind=").unwrap_err().code, EXIT_CONFIG);
        let cfg = Config::from_toml(&walker_toml("")).unwrap();
        assert!(cmd_check(&cfg, 0).is_ok());
        let bad = Config::from_toml("[metric]\nkind = \"walker\"\nn = 1\nf = \"sin(\"").unwrap();
        assert_eq!(cmd_check(&bad, 0).unwrap_err().code, EXIT_CONFIG);
        assert_eq!(cmd_check(&Config::demo("nope"), 0).unwrap_err().code, EXIT_CONFIG);
        assert!(Config::from_toml("[metric]\nkind = \"flat\"\nbogus = 1").is_err());
    }

    #[test]
    fn defs_are_substituted() {
        let cfg = Config::from_toml(
            "[metric]\nkind = \"walker\"\nn = 1\ndefs = [[\"w\", \"sin(2*pi*z)\"], [\"v\", \"w*y\"]]\nf = \"v + 1\"",
        )
        .unwrap();
        let l = load_metric(&cfg.metric).unwrap();
        let p = Point::new(vec![0.0, 2.0, 0.25]);
        assert!((l.chart.entry(2, 2).eval(&p).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn holonomy_report_is_deterministic() {
        let cfg = Config::demo("example52");
        let a = run(Command::Holonomy, &cfg, 5, None).unwrap().json();
        let b = run(Command::Holonomy, &cfg, 5, None).unwrap().json();
        assert_eq!(a, b);
        assert!(a.contains("\"seed\": 5"));
    }

    #[test]
    fn geodesic_writes_csv() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = Config::from_toml(&walker_toml(
            "[geodesic]\nt_end = 1.0\ndt = 0.25\nstates = [{ position = [0.0, 0.5, 0.5], velocity = [0.0, 1.0, 0.1] }]\n",
        ))
        .unwrap();
        let r = cmd_geodesic(&cfg, 0, Some(dir.path())).unwrap();
        assert_eq!(r.code, EXIT_OK);
        let csv = std::fs::read_to_string(dir.path().join("geodesic_0.csv")).unwrap();
        let mut it = csv.lines();
        assert_eq!(it.next(), Some("t,x,y1,z,vx,vy1,vz,energy"));
        assert_eq!(it.count(), 5);
    }

    #[test]
    fn structure_checks_run_on_configured_form() {
        let cfg = Config::from_toml(
            "[metric]\nkind = \"walker\"\nn = 4\n[structure]\nchecks = [\"one_one\", \"primitive\", \"hyperkahler\"]\nform = [[0,1,0,0],[-1,0,0,0],[0,0,0,-1],[0,0,1,0]]\n",
        )
        .unwrap();
        let r = cmd_structure(&cfg, 0).unwrap();
        assert_eq!(r.value["results"]["one_one"]["residual"], json!(0.0));
        assert_eq!(r.value["results"]["primitive"]["max_abs_lambda"], json!(0.0));
        assert_eq!(r.value["results"]["hyperkahler"]["residual"], json!(0.0));
        let odd = Config::from_toml("[metric]\nkind = \"walker\"\nn = 3\n[structure]\nchecks = [\"one_one\"]\nform = [[0.0,1.0,0.0],[-1.0,0.0,0.0],[0.0,0.0,0.0]]\n").unwrap();
        assert_eq!(cmd_structure(&odd, 0).unwrap_err().code, EXIT_VALIDATION);
    }

    #[test]
    fn complete_on_flat_demo() {
        let mut cfg = Config::demo("flat");
        cfg.complete = Some(CompleteConfig { trajectories: 4, horizon: 10.0, ..Default::default() });
        let r = cmd_complete(&cfg, 1).unwrap();
        assert_eq!(r.code, EXIT_OK);
        assert_eq!(r.value["completed"], json!(4));
    }
}
