//! Scenario files, command dispatch and result writers behind the `scprop`
//! binary.
//!
//! A scenario is a TOML (or JSON) document describing the model, the
//! coherent-state widths and the command-specific inputs. Every run writes
//! its tables plus a `manifest.json` echoing the resolved scenario.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::asymptotics::{correction, loglog_slope, quartic_phase_errors, SpaInput};
use crate::classical::integrate_real_stops;
use crate::coherent::{wavefunction, CoherentParams, PhasePoint};
use crate::complextraj::{action_cancellation, SolveOptions};
use crate::hamiltonian::{ExpTerm, HamiltonianModel};
use crate::ivr::{coordinate_propagator, mixed_packets, peak_of, CoordinateMode, CoordinateOptions, Method};
use crate::ode::OdeOptions;
use crate::quad::{simpson, UniformGrid};
use crate::quantum::{build_basis, diagonalize, evolve_exact, husimi_exact, husimi_norm, BasisSpec, EigenSolution};
use crate::spectral::{greens_function, husimi_semiclassical, quantize, QuantizationRule, SemiclassicalLevel};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Compute { context: String, source: crate::Error },
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 3,
        }
    }
}

trait Context<T> {
    fn ctx(self, context: impl Into<String>) -> Result<T, CliError>;
}

impl<T> Context<T> for crate::Result<T> {
    fn ctx(self, context: impl Into<String>) -> Result<T, CliError> {
        self.map_err(|source| CliError::Compute { context: context.into(), source })
    }
}

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

// ---------------------------------------------------------------------------
// Scenario

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Harmonic {
        #[serde(default = "one")]
        mass: f64,
        omega: f64,
    },
    /// V(q) = Σ coeffs[k] q^k
    Polynomial {
        #[serde(default = "one")]
        mass: f64,
        coeffs: Vec<f64>,
    },
    Free {
        #[serde(default = "one")]
        mass: f64,
    },
    /// V0 [e^{α(q−A)} + e^{−α(q+A)}]
    Barrier {
        #[serde(default = "one")]
        mass: f64,
        v0: f64,
        alpha: f64,
        a: f64,
    },
    ExpSum {
        #[serde(default = "one")]
        mass: f64,
        terms: Vec<ExpTerm>,
    },
}

impl ModelSpec {
    fn mass(&self) -> f64 {
        match self {
            ModelSpec::Harmonic { mass, .. }
            | ModelSpec::Polynomial { mass, .. }
            | ModelSpec::Free { mass }
            | ModelSpec::Barrier { mass, .. }
            | ModelSpec::ExpSum { mass, .. } => *mass,
        }
    }

    pub fn build(&self, params: CoherentParams) -> crate::Result<HamiltonianModel> {
        match self {
            ModelSpec::Harmonic { mass, omega } => HamiltonianModel::harmonic(*mass, *omega, params),
            ModelSpec::Polynomial { mass, coeffs } => HamiltonianModel::polynomial(*mass, coeffs.clone(), params),
            ModelSpec::Free { mass } => HamiltonianModel::free_particle(*mass, params),
            ModelSpec::Barrier { mass, v0, alpha, a } => HamiltonianModel::barrier(*v0, *alpha, *a, *mass, params),
            ModelSpec::ExpSum { mass, terms } => {
                HamiltonianModel::new(*mass, crate::hamiltonian::Family::ExpSum { terms: terms.clone() }, params)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherentSpec {
    /// Position width; defaults to the matched width for harmonic models.
    #[serde(default)]
    pub b: Option<f64>,
    pub hbar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    fn grid(&self, key: &str) -> Result<UniformGrid, CliError> {
        if self.n < 2 || !(self.hi > self.lo) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(config(format!("`{key}` needs lo < hi and n >= 2")));
        }
        Ok(UniformGrid::spanning(self.lo, self.hi, self.n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub q: f64,
    pub p: f64,
}

impl From<PointSpec> for PhasePoint {
    fn from(s: PointSpec) -> Self {
        PhasePoint::new(s.q, s.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    #[serde(default)]
    pub size: Option<usize>,
    #[serde(default)]
    pub max_energy: Option<f64>,
    #[serde(default)]
    pub half_width: Option<f64>,
}

impl BasisConfig {
    fn spec(&self) -> Result<BasisSpec, CliError> {
        match (self.size, self.max_energy) {
            (Some(n), None) => Ok(BasisSpec::Size(n)),
            (None, Some(e)) => Ok(BasisSpec::MaxEnergy(e)),
            _ => Err(config("`basis` needs exactly one of `size` and `max_energy`")),
        }
    }
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_rules() -> Vec<QuantizationRule> {
    QuantizationRule::ALL.to_vec()
}

fn default_ode_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IvrConfig {
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_ode_tol")]
    pub ode_tol: f64,
}

impl Default for IvrConfig {
    fn default() -> Self {
        Self { methods: default_methods(), ode_tol: default_ode_tol() }
    }
}

fn default_coordinate_methods() -> Vec<Method> {
    vec![Method::SmoothedIvr, Method::HermanKluk]
}

fn default_modes() -> Vec<CoordinateMode> {
    vec![CoordinateMode::StationaryPhase, CoordinateMode::BruteForce]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagatorConfig {
    pub t: f64,
    /// (x′, x″) pairs.
    pub pairs: Vec<[f64; 2]>,
    #[serde(default = "default_coordinate_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_modes")]
    pub modes: Vec<CoordinateMode>,
    /// Brute-force phase-space spacing in units of b and c.
    #[serde(default)]
    pub spacing: Option<f64>,
    /// Initial-momentum window.
    #[serde(default)]
    pub p_window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Levels 0..levels.
    pub levels: usize,
    #[serde(default = "default_rules")]
    pub rules: Vec<QuantizationRule>,
    /// Also diagonalize in the sine basis (needs `basis`).
    #[serde(default)]
    pub exact: bool,
}

fn default_rule() -> QuantizationRule {
    QuantizationRule::SmoothedPlusI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HusimiConfig {
    pub level: usize,
    #[serde(default = "default_rule")]
    pub rule: QuantizationRule,
    pub q: GridSpec,
    pub p: GridSpec,
    #[serde(default)]
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreensConfig {
    #[serde(default = "default_rule")]
    pub rule: QuantizationRule,
    pub point: PointSpec,
    pub energies: GridSpec,
    pub gamma: f64,
}

fn default_spa_hbars() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.025]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaConfig {
    #[serde(default = "default_spa_hbars")]
    pub hbars: Vec<f64>,
}

impl Default for SpaConfig {
    fn default() -> Self {
        Self { hbars: default_spa_hbars() }
    }
}

fn default_scaling_hbars() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.025, 0.0125]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    #[serde(default = "default_scaling_hbars")]
    pub hbars: Vec<f64>,
    pub start: PointSpec,
    pub t: f64,
    /// b = b_scale·√ħ at each ħ.
    #[serde(default = "one")]
    pub b_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub coherent: Option<CoherentSpec>,
    #[serde(default)]
    pub initial: Option<PointSpec>,
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default)]
    pub x_grid: Option<GridSpec>,
    #[serde(default)]
    pub basis: Option<BasisConfig>,
    #[serde(default)]
    pub ivr: Option<IvrConfig>,
    #[serde(default)]
    pub propagator: Option<PropagatorConfig>,
    #[serde(default)]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default)]
    pub husimi: Option<HusimiConfig>,
    #[serde(default)]
    pub greens: Option<GreensConfig>,
    #[serde(default)]
    pub spa: Option<SpaConfig>,
    #[serde(default)]
    pub scaling: Option<ScalingConfig>,
}

impl Scenario {
    fn model_spec(&self) -> Result<&ModelSpec, CliError> {
        self.model.as_ref().ok_or_else(|| config("missing key `model`"))
    }

    pub fn params(&self) -> Result<CoherentParams, CliError> {
        let spec = self.model_spec()?;
        let c = self.coherent.ok_or_else(|| config("missing key `coherent`"))?;
        let b = match (c.b, spec) {
            (Some(b), _) => b,
            (None, ModelSpec::Harmonic { mass, omega }) => (c.hbar / (mass * omega)).sqrt(),
            (None, _) => return Err(config("missing key `coherent.b` (only harmonic models have a default)")),
        };
        CoherentParams::new(b, c.hbar).map_err(|e| config(format!("`coherent`: {e}")))
    }

    pub fn model(&self) -> Result<HamiltonianModel, CliError> {
        let params = self.params()?;
        let spec = self.model_spec()?;
        if !(spec.mass() > 0.0) {
            return Err(config("`model.mass` must be positive"));
        }
        spec.build(params).map_err(|e| config(format!("`model`: {e}")))
    }

    fn initial(&self) -> Result<PhasePoint, CliError> {
        self.initial.map(PhasePoint::from).ok_or_else(|| config("missing key `initial`"))
    }

    fn times(&self) -> Result<&[f64], CliError> {
        if self.times.is_empty() {
            return Err(config("missing key `times`"));
        }
        if self.times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || self.times.windows(2).any(|w| w[1] < w[0]) {
            return Err(config("`times` must be finite, non-negative and ascending"));
        }
        Ok(&self.times)
    }

    fn x_grid(&self) -> Result<UniformGrid, CliError> {
        self.x_grid.ok_or_else(|| config("missing key `x_grid`"))?.grid("x_grid")
    }

    fn basis(&self) -> Result<BasisConfig, CliError> {
        self.basis.ok_or_else(|| config("missing key `basis`"))
    }
}

/// Bundled scenarios, addressable by name in place of a path.
pub const BUNDLED: [(&str, &str); 4] = [
    ("barrier", include_str!("../scenarios/barrier.toml")),
    ("harmonic", include_str!("../scenarios/harmonic.toml")),
    ("quartic", include_str!("../scenarios/quartic.toml")),
    ("free", include_str!("../scenarios/free.toml")),
];

/// Reads a scenario file (JSON if the extension says so, TOML otherwise) or a
/// bundled scenario name into a JSON tree.
pub fn load_tree(source: &str) -> Result<Value, CliError> {
    let path = Path::new(source);
    let (text, json) = if path.exists() {
        let text = fs::read_to_string(path).map_err(|e| config(format!("cannot read {source}: {e}")))?;
        (text, path.extension().is_some_and(|x| x == "json"))
    } else if let Some((_, text)) = BUNDLED.iter().find(|(n, _)| *n == source) {
        (text.to_string(), false)
    } else {
        return Err(config(format!("no scenario file or bundled scenario named `{source}`")));
    };
    if json {
        serde_json::from_str(&text).map_err(|e| config(format!("{source}: {e}")))
    } else {
        let v: toml::Value = toml::from_str(&text).map_err(|e| config(format!("{source}: {e}")))?;
        serde_json::to_value(v).map_err(|e| config(format!("{source}: {e}")))
    }
}

/// Applies `key.path=value`; the value is read as a TOML literal, falling
/// back to a bare string.
pub fn apply_override(tree: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config(format!("override `{assignment}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(config(format!("override `{assignment}` has an empty key")));
    }
    let value = match toml::from_str::<toml::Table>(&format!("v = {}", raw.trim())) {
        Ok(mut t) => serde_json::to_value(t.remove("v").expect("parsed key")).map_err(|e| config(e.to_string()))?,
        Err(_) => Value::String(raw.trim().to_string()),
    };
    let mut node = tree;
    let parts: Vec<&str> = key.split('.').collect();
    for (k, part) in parts.iter().enumerate() {
        let obj = match node {
            Value::Object(m) => m,
            _ => return Err(config(format!("override `{key}`: `{}` is not a table", parts[..k].join(".")))),
        };
        if k + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!()
}

pub fn parse_scenario(tree: Value) -> Result<Scenario, CliError> {
    serde_path_to_error::deserialize(tree).map_err(|e| {
        let path = e.path().to_string();
        config(format!("at `{path}`: {}", e.into_inner()))
    })
}

// ---------------------------------------------------------------------------
// Tables

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Self { name: name.into(), columns: columns.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Fixed formatting: 17 significant digits, '.' decimal, '\n' endings.
    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            for (k, c) in row.iter().enumerate() {
                if k > 0 {
                    s.push(',');
                }
                match c {
                    Cell::Num(v) if v.is_finite() => write!(s, "{v:.16e}").unwrap(),
                    Cell::Num(v) => write!(s, "{v}").unwrap(),
                    Cell::Int(v) => write!(s, "{v}").unwrap(),
                    Cell::Text(t) => s.push_str(t),
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                Value::Array(
                    row.iter()
                        .map(|c| match c {
                            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
                            Cell::Int(v) => json!(v),
                            Cell::Text(t) => json!(t),
                        })
                        .collect(),
                )
            })
            .collect();
        json!({ "columns": self.columns, "rows": rows })
    }
}

fn wave_table(name: &str, times: &[f64], grid: &UniformGrid, psi: &[Vec<Complex64>]) -> Table {
    let mut t = Table::new(name, &["t", "x", "re", "im", "abs2"]);
    for (ti, row) in times.iter().zip(psi) {
        for (i, v) in row.iter().enumerate() {
            t.push(vec![(*ti).into(), grid.x(i).into(), v.re.into(), v.im.into(), v.norm_sqr().into()]);
        }
    }
    t
}

fn density_table(name: &str, q: &UniformGrid, p: &UniformGrid, rho: &[Vec<f64>]) -> Table {
    let mut t = Table::new(name, &["q", "p", "rho"]);
    for (i, row) in rho.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            t.push(vec![q.x(i).into(), p.x(j).into(), (*v).into()]);
        }
    }
    t
}

fn l2(a: &[Complex64], b: &[Complex64], h: f64) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).collect();
    simpson(&d, h).sqrt()
}

fn norm_of(a: &[Complex64], h: f64) -> f64 {
    let d: Vec<f64> = a.iter().map(|x| x.norm_sqr()).collect();
    simpson(&d, h)
}

/// Tables plus a JSON summary for the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub summary: Value,
}

// ---------------------------------------------------------------------------
// Commands

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    /// |(S + 𝓘) − S_W| against ħ on the configured model.
    ActionCancellation,
    /// Stationary-phase errors on ∫e^{i(x²+x⁴)/ħ}dx.
    Spa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Mixed propagators of a coherent state against exact evolution.
    IvrCompare,
    /// Coordinate-space propagator by stationary phase and by quadrature.
    Propagator,
    /// Semiclassical levels for each quantization rule.
    Spectrum,
    /// Semiclassical (and optionally exact) Husimi density of one level.
    Husimi,
    /// Semiclassical Green's function along a line of complex energies.
    Greens,
    /// Exact evolution of a coherent state in the sine basis.
    ExactEvolve,
    /// Stationary-phase error table on the quartic-phase integral.
    SpaDemo,
    /// Error scaling study in ħ.
    ScalingCheck {
        #[arg(value_enum, default_value_t = Study::ActionCancellation)]
        study: Study,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::IvrCompare => "ivr-compare",
            Command::Propagator => "propagator",
            Command::Spectrum => "spectrum",
            Command::Husimi => "husimi",
            Command::Greens => "greens",
            Command::ExactEvolve => "exact-evolve",
            Command::SpaDemo => "spa-demo",
            Command::ScalingCheck { .. } => "scaling-check",
        }
    }
}

pub fn execute(command: Command, sc: &Scenario) -> Result<Outcome, CliError> {
    match command {
        Command::IvrCompare => ivr_compare(sc),
        Command::Propagator => propagator(sc),
        Command::Spectrum => spectrum(sc),
        Command::Husimi => husimi(sc),
        Command::Greens => greens(sc),
        Command::ExactEvolve => exact_evolve(sc),
        Command::SpaDemo => spa_demo(sc),
        Command::ScalingCheck { study: Study::Spa } => spa_demo(sc),
        Command::ScalingCheck { study: Study::ActionCancellation } => action_scaling(sc),
    }
}

fn eigensolve(sc: &Scenario, model: &HamiltonianModel) -> Result<EigenSolution, CliError> {
    let cfg = sc.basis()?;
    let basis = build_basis(model, cfg.spec()?, cfg.half_width).ctx("basis")?;
    diagonalize(model, &basis).ctx("diagonalization")
}

fn ivr_compare(sc: &Scenario) -> Result<Outcome, CliError> {
    let model = sc.model()?;
    let start = sc.initial()?;
    let times = sc.times()?;
    let grid = sc.x_grid()?;
    let cfg = sc.ivr.clone().unwrap_or_default();
    if cfg.methods.is_empty() {
        return Err(config("`ivr.methods` is empty"));
    }
    let ode = OdeOptions::with_tol(cfg.ode_tol);
    let params = model.params;

    let exact = match sc.basis {
        Some(_) => {
            let sol = eigensolve(sc, &model)?;
            let psi0: Vec<Complex64> = grid.points().iter().map(|&x| wavefunction(start, &params, x)).collect();
            let ev = evolve_exact(&sol, &psi0, &grid, times).ctx("exact evolution")?;
            Some((sol.trusted, ev))
        }
        None => None,
    };

    let mut tables = Vec::new();
    let mut norms = Table::new(
        "norms",
        &["t", "method", "norm", "analytic_norm", "peak_x", "peak_height", "l2_error"],
    );
    let mut summary = serde_json::Map::new();
    if let Some((trusted, ev)) = &exact {
        tables.push(wave_table("exact", times, &grid, &ev.psi));
        for (t, psi) in times.iter().zip(&ev.psi) {
            let (px, ph) = peak_of(psi, &grid);
            norms.push(vec![(*t).into(), "exact".into(), norm_of(psi, grid.step).into(), f64::NAN.into(), px.into(), ph.into(), 0.0.into()]);
        }
        summary.insert("trusted_levels".into(), json!(trusted));
        summary.insert("captured".into(), json!(ev.captured));
        summary.insert("leakage".into(), json!(ev.leakage));
    }
    for &method in &cfg.methods {
        let packets = mixed_packets(&model, method, start, times, &grid, &ode).ctx(format!("{} packets", method.name()))?;
        let psi: Vec<Vec<Complex64>> = packets.iter().map(|p| p.amplitudes.clone()).collect();
        let mut errors = Vec::new();
        let mut norm_dev: f64 = 0.0;
        for (k, pk) in packets.iter().enumerate() {
            let (px, ph) = pk.peak();
            let err = exact.as_ref().map_or(f64::NAN, |(_, ev)| l2(&pk.amplitudes, &ev.psi[k], grid.step));
            errors.push(err);
            norm_dev = norm_dev.max((pk.analytic_norm() - 1.0).abs());
            norms.push(vec![
                pk.t.into(),
                method.name().into(),
                pk.norm().into(),
                pk.analytic_norm().into(),
                px.into(),
                ph.into(),
                err.into(),
            ]);
        }
        summary.insert(
            method.name().into(),
            json!({ "l2_error": errors.iter().map(|e| if e.is_finite() { json!(e) } else { Value::Null }).collect::<Vec<_>>(),
                    "max_analytic_norm_deviation": norm_dev }),
        );
        tables.push(wave_table(method.name(), times, &grid, &psi));
    }

    // classical trajectory driving the first method
    let kind = cfg.methods[0].symbol();
    let traj = integrate_real_stops(&model, kind, start, times, &ode).ctx("trajectory")?;
    let mut tr = Table::new("trajectory", &["t", "q", "p", "s_h", "i_term", "m_qq", "m_qp", "m_pq", "m_pp"]);
    for s in &traj.samples {
        tr.push(vec![
            s.t.into(),
            s.point.q.into(),
            s.point.p.into(),
            s.s_h.into(),
            s.i_term.into(),
            s.m.m_qq.into(),
            s.m.m_qp.into(),
            s.m.m_pq.into(),
            s.m.m_pp.into(),
        ]);
    }
    tables.push(tr);
    tables.push(norms);
    summary.insert("trajectory_symbol".into(), json!(format!("{kind:?}").to_lowercase()));
    Ok(Outcome { tables, summary: Value::Object(summary) })
}

fn propagator(sc: &Scenario) -> Result<Outcome, CliError> {
    let model = sc.model()?;
    let cfg = sc.propagator.as_ref().ok_or_else(|| config("missing key `propagator`"))?;
    if !(cfg.t > 0.0) {
        return Err(config("`propagator.t` must be positive"));
    }
    let mut opts = CoordinateOptions::default();
    if let Some(s) = cfg.spacing {
        if !(s > 0.0) {
            return Err(config("`propagator.spacing` must be positive"));
        }
        opts.spacing = s;
    }
    opts.p_window = cfg.p_window.map(|[a, b]| (a, b));
    let mut table = Table::new("propagator", &["x_start", "x_end", "t", "method", "mode", "re", "im", "abs", "arg"]);
    let mut values = Vec::new();
    for &[x1, x2] in &cfg.pairs {
        for &method in &cfg.methods {
            for &mode in &cfg.modes {
                let k = coordinate_propagator(&model, x1, x2, cfg.t, method, mode, &opts)
                    .ctx(format!("propagator {} ({x1} -> {x2})", method.name()))?;
                let mode_name = match mode {
                    CoordinateMode::StationaryPhase => "stationary-phase",
                    CoordinateMode::BruteForce => "brute-force",
                };
                table.push(vec![
                    x1.into(),
                    x2.into(),
                    cfg.t.into(),
                    method.name().into(),
                    mode_name.into(),
                    k.re.into(),
                    k.im.into(),
                    k.norm().into(),
                    k.arg().into(),
                ]);
                values.push(json!({ "x_start": x1, "x_end": x2, "method": method.name(), "mode": mode_name, "abs": k.norm() }));
            }
        }
    }
    Ok(Outcome { tables: vec![table], summary: json!({ "values": values }) })
}

/// One level per call so a missing root (e.g. m = 0 for the smoothed rule off
/// the variational width) only blanks its own row.
fn levels(model: &HamiltonianModel, rule: QuantizationRule, count: usize) -> Vec<Result<SemiclassicalLevel, crate::Error>> {
    (0..count).map(|m| quantize(model, rule, m..m + 1).map(|mut v| v.remove(0))).collect()
}

fn spectrum(sc: &Scenario) -> Result<Outcome, CliError> {
    let model = sc.model()?;
    let cfg = sc.spectrum.as_ref().ok_or_else(|| config("missing key `spectrum`"))?;
    let mut table = Table::new("spectrum", &["rule", "m", "energy", "action", "i_term", "period", "residual", "status"]);
    let mut summary = serde_json::Map::new();
    let harmonic = match sc.model_spec()? {
        ModelSpec::Harmonic { omega, .. } => Some(*omega),
        _ => None,
    };
    for &rule in &cfg.rules {
        let mut worst: f64 = 0.0;
        let mut failed = 0;
        for (m, lv) in levels(&model, rule, cfg.levels).into_iter().enumerate() {
            match lv {
                Ok(l) => {
                    if let Some(w) = harmonic {
                        worst = worst.max((l.energy - model.params.hbar * w * (m as f64 + 0.5)).abs());
                    }
                    table.push(vec![
                        rule.name().into(),
                        m.into(),
                        l.energy.into(),
                        l.action.into(),
                        l.i_term.into(),
                        l.period.into(),
                        l.residual.into(),
                        "ok".into(),
                    ]);
                }
                Err(e) => {
                    log::warn!("{} level {m}: {e}", rule.name());
                    failed += 1;
                    let nan = || Cell::Num(f64::NAN);
                    let status = format!("{e}").replace(',', ";");
                    table.push(vec![rule.name().into(), m.into(), nan(), nan(), nan(), nan(), nan(), Cell::Text(status)]);
                }
            }
        }
        let mut s = json!({ "failed_levels": failed });
        if harmonic.is_some() {
            s["max_error_vs_harmonic"] = json!(worst);
        }
        summary.insert(rule.name().into(), s);
    }
    let mut tables = vec![table];
    if cfg.exact {
        let sol = eigensolve(sc, &model)?;
        let mut ex = Table::new("exact_spectrum", &["n", "energy", "trusted"]);
        for (n, e) in sol.energies.iter().enumerate().take(cfg.levels.max(1)) {
            ex.push(vec![n.into(), (*e).into(), Cell::Int((n < sol.trusted) as i64)]);
        }
        summary.insert("trusted_levels".into(), json!(sol.trusted));
        tables.push(ex);
    }
    Ok(Outcome { tables, summary: Value::Object(summary) })
}

fn husimi(sc: &Scenario) -> Result<Outcome, CliError> {
    let model = sc.model()?;
    let cfg = sc.husimi.as_ref().ok_or_else(|| config("missing key `husimi`"))?;
    let q = cfg.q.grid("husimi.q")?;
    let p = cfg.p.grid("husimi.p")?;
    let level = quantize(&model, cfg.rule, cfg.level..cfg.level + 1).ctx(format!("level {}", cfg.level))?.remove(0);
    let grid = husimi_semiclassical(&model, &level, &q, &p);
    let hbar = model.params.hbar;
    let finite: Vec<Vec<f64>> = grid.rho.iter().map(|r| r.iter().map(|v| if v.is_nan() { 0.0 } else { *v }).collect()).collect();
    let mut summary = json!({
        "energy": level.energy,
        "missing_points": grid.missing(),
        "semiclassical_norm": husimi_norm(&finite, &q, &p, hbar),
    });
    let mut tables = vec![density_table("husimi", &q, &p, &grid.rho)];
    if cfg.exact {
        let sol = eigensolve(sc, &model)?;
        let rho = husimi_exact(&sol, cfg.level, &q, &p).ctx("exact husimi")?;
        summary["exact_norm"] = json!(husimi_norm(&rho, &q, &p, hbar));
        summary["exact_energy"] = json!(sol.energies.get(cfg.level));
        tables.push(density_table("husimi_exact", &q, &p, &rho));
    }
    Ok(Outcome { tables, summary })
}

fn greens(sc: &Scenario) -> Result<Outcome, CliError> {
    let model = sc.model()?;
    let cfg = sc.greens.as_ref().ok_or_else(|| config("missing key `greens`"))?;
    let energies = cfg.energies.grid("greens.energies")?;
    if !(cfg.gamma > 0.0) {
        return Err(config("`greens.gamma` must be positive"));
    }
    let point = PhasePoint::from(cfg.point);
    let mut table = Table::new("greens", &["energy", "gamma", "re", "im", "abs", "near_pole"]);
    let mut skipped = 0;
    for e in energies.points() {
        match greens_function(&model, cfg.rule, point, e, cfg.gamma) {
            Ok(g) => table.push(vec![
                e.into(),
                cfg.gamma.into(),
                g.value.re.into(),
                g.value.im.into(),
                g.value.norm().into(),
                Cell::Int(g.near_pole as i64),
            ]),
            // energies below the bottom of the well have no orbit
            Err(crate::Error::BelowMinimum { .. }) => skipped += 1,
            Err(e) => return Err(CliError::Compute { context: "greens".into(), source: e }),
        }
    }
    Ok(Outcome { tables: vec![table], summary: json!({ "skipped_below_minimum": skipped }) })
}

fn exact_evolve(sc: &Scenario) -> Result<Outcome, CliError> {
    let model = sc.model()?;
    let start = sc.initial()?;
    let times = sc.times()?;
    let grid = sc.x_grid()?;
    let sol = eigensolve(sc, &model)?;
    let psi0: Vec<Complex64> = grid.points().iter().map(|&x| wavefunction(start, &model.params, x)).collect();
    let ev = evolve_exact(&sol, &psi0, &grid, times).ctx("exact evolution")?;
    let norms: Vec<f64> = ev.psi.iter().map(|p| norm_of(p, grid.step)).collect();
    let mut spec = Table::new("exact_spectrum", &["n", "energy", "trusted"]);
    for (n, e) in sol.energies.iter().enumerate() {
        spec.push(vec![n.into(), (*e).into(), Cell::Int((n < sol.trusted) as i64)]);
    }
    Ok(Outcome {
        tables: vec![wave_table("exact", times, &grid, &ev.psi), spec],
        summary: json!({
            "basis_size": sol.basis.size,
            "half_width": sol.basis.half_width,
            "trusted_levels": sol.trusted,
            "captured": ev.captured,
            "leakage": ev.leakage,
            "norms": norms,
        }),
    })
}

fn spa_demo(sc: &Scenario) -> Result<Outcome, CliError> {
    let cfg = sc.spa.clone().unwrap_or_default();
    if cfg.hbars.len() < 2 || cfg.hbars.iter().any(|h| !(*h > 0.0)) {
        return Err(config("`spa.hbars` needs at least two positive values"));
    }
    let mut table = Table::new("spa", &["hbar", "reference_re", "reference_im", "leading_error", "corrected_error"]);
    let (mut lead, mut corr) = (Vec::new(), Vec::new());
    for &h in &cfg.hbars {
        let s = quartic_phase_errors(h).ctx("spa")?;
        table.push(vec![h.into(), s.reference.re.into(), s.reference.im.into(), s.leading_error.into(), s.corrected_error.into()]);
        lead.push(s.leading_error);
        corr.push(s.corrected_error);
    }
    let r = correction(&SpaInput { f: [0.0, 0.0, 2.0, 0.0, 24.0], g: [1.0, 0.0, 0.0] });
    Ok(Outcome {
        tables: vec![table],
        summary: json!({
            "correction_coefficient": r,
            "leading_slope": loglog_slope(&cfg.hbars, &lead),
            "corrected_slope": loglog_slope(&cfg.hbars, &corr),
        }),
    })
}

fn action_scaling(sc: &Scenario) -> Result<Outcome, CliError> {
    let spec = sc.model_spec()?;
    let cfg = sc.scaling.as_ref().ok_or_else(|| config("missing key `scaling`"))?;
    if cfg.hbars.len() < 2 || cfg.hbars.iter().any(|h| !(*h > 0.0)) {
        return Err(config("`scaling.hbars` needs at least two positive values"));
    }
    if !(cfg.t > 0.0) || !(cfg.b_scale > 0.0) {
        return Err(config("`scaling.t` and `scaling.b_scale` must be positive"));
    }
    let mut table = Table::new(
        "scaling",
        &["hbar", "b", "delta", "action_smoothed_re", "action_smoothed_im", "i_re", "i_im", "action_weyl_re", "action_weyl_im"],
    );
    let mut deltas = Vec::new();
    for &h in &cfg.hbars {
        let params = CoherentParams::new(cfg.b_scale * h.sqrt(), h).map_err(|e| config(format!("`scaling`: {e}")))?;
        let model = spec.build(params).map_err(|e| config(format!("`model`: {e}")))?;
        let s = action_cancellation(&model, cfg.start.into(), cfg.t, &SolveOptions::default()).ctx(format!("scaling at hbar = {h}"))?;
        table.push(vec![
            h.into(),
            params.b.into(),
            s.delta.into(),
            s.action_smoothed.re.into(),
            s.action_smoothed.im.into(),
            s.i_smoothed.re.into(),
            s.i_smoothed.im.into(),
            s.action_weyl.re.into(),
            s.action_weyl.im.into(),
        ]);
        deltas.push(s.delta);
    }
    Ok(Outcome { tables: vec![table], summary: json!({ "slope": loglog_slope(&cfg.hbars, &deltas) }) })
}

// ---------------------------------------------------------------------------
// Entry point

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "scprop", version, about = "Semiclassical coherent-state propagation in one dimension")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file (TOML, or JSON by extension) or bundled scenario name.
    #[arg(long, global = true)]
    pub config: Option<String>,
    /// Override a scenario key, e.g. `--set coherent.hbar=0.1`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub outputs: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub summary: Value,
}

fn write_file(path: PathBuf, text: &str) -> Result<PathBuf, CliError> {
    fs::write(&path, text).map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(path)
}

pub fn run(cli: &Cli) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let mut tree = match &cli.config {
        Some(src) => load_tree(src)?,
        None if cli.command == Command::SpaDemo || cli.command == (Command::ScalingCheck { study: Study::Spa }) => json!({}),
        None => return Err(config("missing --config")),
    };
    for o in &cli.overrides {
        apply_override(&mut tree, o)?;
    }
    let scenario = parse_scenario(tree)?;
    if cli.threads == Some(0) {
        return Err(config("--threads must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| config(format!("thread pool: {e}")))?;
    let (outcome, threads) = pool.install(|| (execute(cli.command, &scenario), rayon::current_num_threads()));
    let outcome = outcome?;

    fs::create_dir_all(&cli.out).map_err(|source| CliError::Io { path: cli.out.clone(), source })?;
    let mut outputs = Vec::new();
    for t in &outcome.tables {
        let path = match cli.format {
            Format::Csv => write_file(cli.out.join(format!("{}.csv", t.name)), &t.to_csv())?,
            Format::Json => write_file(
                cli.out.join(format!("{}.json", t.name)),
                &serde_json::to_string_pretty(&t.to_json()).expect("table serializes"),
            )?,
        };
        outputs.push(path);
    }
    let manifest = json!({
        "tool": "scprop",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cli.command.name(),
        "study": match cli.command { Command::ScalingCheck { study } => json!(study), _ => Value::Null },
        "config_source": cli.config,
        "overrides": cli.overrides,
        "scenario": scenario,
        "format": cli.format,
        "threads": threads,
        "outputs": outputs.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect::<Vec<_>>(),
        "wall_time_s": started.elapsed().as_secs_f64(),
        "summary": outcome.summary,
    });
    let manifest_path = write_file(cli.out.join("manifest.json"), &serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;
    Ok(RunReport { outputs, manifest: manifest_path, summary: outcome.summary })
}
