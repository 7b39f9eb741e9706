//! Run configuration: a TOML document with `workflow`, `seed`, `[model]`,
//! `[numerics]` and `[output]`. Parsing is strict and resolves every default
//! into the returned value, so [`RunConfig::echo`] is the effective config.

use std::path::{Path, PathBuf};

use floqdyn_core::floquet::{check_density, FourierHamiltonian};
use floqdyn_core::friction::{EnergyGrid, JunctionModel, ReplicaTrace};
use floqdyn_core::linalg::{c, real_matrix, CMat};
use floqdyn_core::qme::{build_context, default_dt, DissipatorContext, Flavor, FockSpace};
use floqdyn_core::surface_hopping::{default_n_bessel, max_dt, AhParams, EnsembleOptions, Initial};
use floqdyn_core::LeadSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Workflow {
    FloquetPropagate,
    QmeRun,
    FrictionScan,
    ShRun,
}

impl Workflow {
    pub const ALL: [Workflow; 4] = [Workflow::FloquetPropagate, Workflow::QmeRun, Workflow::FrictionScan, Workflow::ShRun];

    pub fn name(self) -> &'static str {
        match self {
            Workflow::FloquetPropagate => "floquet-propagate",
            Workflow::QmeRun => "qme-run",
            Workflow::FrictionScan => "friction-scan",
            Workflow::ShRun => "sh-run",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|w| w.name() == s)
    }
}

/// Top-level keys without a default.
pub const REQUIRED_KEYS: [&str; 2] = ["workflow", "model"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(deserialize = "M: Deserialize<'de>, N: Deserialize<'de> + Default"))]
pub struct Document<M, N> {
    pub workflow: Workflow,
    #[serde(default, with = "seed_repr", skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub model: M,
    #[serde(default)]
    pub numerics: N,
    #[serde(default)]
    pub output: OutputSection,
}

/// TOML integers are signed; seeds above `i64::MAX` travel as strings.
mod seed_repr {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(i64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<u64>, s: S) -> Result<S::Ok, S::Error> {
        match *v {
            None => s.serialize_none(),
            Some(x) if x <= i64::MAX as u64 => s.serialize_i64(x as i64),
            Some(x) => s.serialize_str(&x.to_string()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            None => Ok(None),
            Some(Repr::Int(i)) => u64::try_from(i).map(Some).map_err(|_| D::Error::custom(format!("seed must be non-negative, got {i}"))),
            Some(Repr::Text(t)) => t.parse().map(Some).map_err(|_| D::Error::custom(format!("seed must be a 64-bit unsigned integer, got {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Default `<workflow>.csv` in the working directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

/// Uniform grid of `points` values from `min` to `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let s = i as f64 / n;
                self.min * (1.0 - s) + self.max * s
            })
            .collect()
    }

    fn check(&self, key: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min <= self.max) {
            return Err(CliError::invalid(key, format!("need finite min <= max, got [{}, {}]", self.min, self.max)));
        }
        if self.points == 0 || (self.points == 1 && self.min != self.max) {
            return Err(CliError::invalid(key, "points must be >= 2, or 1 with min = max"));
        }
        Ok(())
    }
}

/// Real part and optional imaginary part of a square matrix, row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixSpec {
    pub fn real(rows: Vec<Vec<f64>>) -> Self {
        Self { re: rows, im: None }
    }

    pub fn to_matrix(&self, key: &str) -> Result<CMat> {
        let d = self.re.len();
        let square = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
        if d == 0 || !square(&self.re) || !self.im.as_ref().map_or(true, square) {
            return Err(CliError::invalid(key, "matrix must be square and non-empty, with im shaped like re"));
        }
        Ok(CMat::from_fn(d, d, |i, j| c(self.re[i][j], self.im.as_ref().map_or(0.0, |m| m[i][j]))))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Harmonic {
    pub n: i32,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

/// System Hamiltonian: either the driven two-level junction at fixed nuclei,
/// `[[x+Δ, Ay + B cos ωt], [Ay + B cos ωt, −x−Δ]]`, or explicit harmonics
/// `H⁽ⁿ⁾` (both `n` and `−n` must be given).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HamiltonianSpec {
    Junction { a: f64, b: f64, delta: f64, omega: f64, x: f64, y: f64 },
    Matrix { omega: f64, harmonics: Vec<Harmonic> },
}

impl HamiltonianSpec {
    pub fn build(&self, key: &str) -> Result<FourierHamiltonian> {
        match self {
            &HamiltonianSpec::Junction { a, b, delta, omega, x, y } => {
                for (name, v) in [("a", a), ("b", b), ("delta", delta), ("x", x), ("y", y)] {
                    if !v.is_finite() {
                        return Err(CliError::invalid(&format!("{key}.{name}"), "must be finite"));
                    }
                }
                let h0 = real_matrix(2, &[x + delta, a * y, a * y, -x - delta]);
                let built = if b == 0.0 {
                    FourierHamiltonian::time_independent(h0, omega)
                } else {
                    FourierHamiltonian::cosine_drive(h0, real_matrix(2, &[0.0, b, b, 0.0]), omega)
                };
                built.map_err(|e| CliError::at(key, e))
            }
            HamiltonianSpec::Matrix { omega, harmonics } => {
                let mut comps = Vec::with_capacity(harmonics.len());
                for h in harmonics {
                    if comps.iter().any(|(n, _)| *n == h.n) {
                        return Err(CliError::invalid(&format!("{key}.harmonics"), format!("harmonic {} given twice", h.n)));
                    }
                    comps.push((h.n, MatrixSpec { re: h.re.clone(), im: h.im.clone() }.to_matrix(&format!("{key}.harmonics[n={}]", h.n))?));
                }
                FourierHamiltonian::new(*omega, comps).map_err(|e| CliError::at(key, e))
            }
        }
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::invalid(key, format!("must be positive, got {v}")))
    }
}

fn at_least_one(key: &str, v: usize) -> Result<usize> {
    if v >= 1 {
        Ok(v)
    } else {
        Err(CliError::invalid(key, "must be at least 1"))
    }
}

fn check_threads(t: Option<usize>) -> Result<()> {
    match t {
        Some(0) => Err(CliError::invalid("numerics.threads", "must be at least 1")),
        _ => Ok(()),
    }
}

// ---------------------------------------------------------------- floquet

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloquetModel {
    pub hamiltonian: HamiltonianSpec,
    /// Diagonal of the initial density matrix.
    pub initial_populations: Vec<f64>,
    /// Static observable; default `σz` for two levels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<MatrixSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FloquetNumerics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub periods: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples_per_period: Option<usize>,
    /// Starting truncation; doubled until the observable settles.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max_limit: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_tol: Option<f64>,
    /// Also integrate the time-dependent equation directly for comparison.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

pub type FloquetConfig = Document<FloquetModel, FloquetNumerics>;

/// Objects a floquet-propagate run needs.
pub struct FloquetSetup {
    pub hamiltonian: FourierHamiltonian,
    pub rho0: CMat,
    pub observable: CMat,
    pub times: Vec<f64>,
}

impl FloquetConfig {
    fn resolve(mut self) -> Result<Self> {
        let h = self.model.hamiltonian.build("model.hamiltonian")?;
        if self.model.observable.is_none() {
            if h.dim() != 2 {
                return Err(CliError::invalid("model.observable", "required unless the system has two levels"));
            }
            self.model.observable = Some(MatrixSpec::real(vec![vec![1.0, 0.0], vec![0.0, -1.0]]));
        }
        let n = &mut self.numerics;
        n.periods.get_or_insert(5);
        n.samples_per_period.get_or_insert(20);
        n.n_max.get_or_insert(4);
        n.n_max_limit.get_or_insert(64);
        n.truncation_tol.get_or_insert(1e-10);
        n.reference.get_or_insert(true);
        n.reference_tol.get_or_insert(1e-9);
        self.finish_common();
        self.setup()?;
        Ok(self)
    }

    pub fn setup(&self) -> Result<FloquetSetup> {
        let n = &self.numerics;
        let hamiltonian = self.model.hamiltonian.build("model.hamiltonian")?;
        let d = hamiltonian.dim();
        let pops = &self.model.initial_populations;
        if pops.len() != d {
            return Err(CliError::invalid("model.initial_populations", format!("expected {d} entries, got {}", pops.len())));
        }
        let rho0 = CMat::from_fn(d, d, |i, j| if i == j { c(pops[i], 0.0) } else { c(0.0, 0.0) });
        check_density(&rho0, d).map_err(|e| CliError::at("model.initial_populations", e))?;
        let observable = self.model.observable.as_ref().expect("resolved").to_matrix("model.observable")?;
        if observable.nrows() != d {
            return Err(CliError::invalid("model.observable", format!("must be {d}x{d}")));
        }
        floqdyn_core::linalg::ensure_hermitian(&observable, "observable", 1e-12).map_err(|e| CliError::at("model.observable", e))?;
        let periods = at_least_one("numerics.periods", n.periods.unwrap())?;
        let spp = at_least_one("numerics.samples_per_period", n.samples_per_period.unwrap())?;
        let start = at_least_one("numerics.n_max", n.n_max.unwrap())?;
        if n.n_max_limit.unwrap() < 2 * start {
            return Err(CliError::invalid("numerics.n_max_limit", "must be at least twice numerics.n_max"));
        }
        positive("numerics.truncation_tol", n.truncation_tol.unwrap())?;
        positive("numerics.reference_tol", n.reference_tol.unwrap())?;
        check_threads(n.threads)?;
        let period = hamiltonian.period();
        let total = periods * spp;
        let times = (0..=total).map(|k| period * k as f64 / spp as f64).collect();
        Ok(FloquetSetup { hamiltonian, rho0, observable, times })
    }
}

// ---------------------------------------------------------------- qme

/// Diagonal couplings `[Γ₁, Γ₂, …]` or a full real matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coupling {
    Diagonal(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeadSection {
    pub gamma: Coupling,
    pub mu: f64,
    pub beta: f64,
}

impl LeadSection {
    fn build(&self, key: &str) -> Result<LeadSpec> {
        let built = match &self.gamma {
            Coupling::Diagonal(g) => LeadSpec::diagonal(g, self.mu, self.beta),
            Coupling::Matrix(rows) => LeadSpec::new(MatrixSpec::real(rows.clone()).to_matrix(key)?, self.mu, self.beta),
        };
        built.map_err(|e| CliError::at(key, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlavorName {
    Hilbert,
    Floquet,
}

impl From<FlavorName> for Flavor {
    fn from(f: FlavorName) -> Self {
        match f {
            FlavorName::Hilbert => Flavor::Hilbert,
            FlavorName::Floquet => Flavor::Floquet,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QmeModel {
    /// One-body Hamiltonian over the orbitals.
    pub hamiltonian: HamiltonianSpec,
    pub leads: Vec<LeadSection>,
    /// Initial orbital occupations of a product state.
    pub initial_occupations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct QmeNumerics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flavor: Option<FlavorName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_interval: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

pub type QmeConfig = Document<QmeModel, QmeNumerics>;

pub struct QmeSetup {
    pub context: DissipatorContext,
    pub rho0: CMat,
    pub flavor: Flavor,
    pub times: Vec<f64>,
}

impl QmeConfig {
    fn resolve(mut self) -> Result<Self> {
        let n = &mut self.numerics;
        n.flavor.get_or_insert(FlavorName::Hilbert);
        n.n_max.get_or_insert(6);
        let h = self.model.hamiltonian.build("model.hamiltonian")?;
        n.t_max.get_or_insert(10.0 * h.period());
        n.output_interval.get_or_insert(h.period() / 20.0);
        if n.dt.is_none() {
            let ctx = self.context()?;
            self.numerics.dt = Some(default_dt(&ctx, self.numerics.flavor.unwrap().into()));
        }
        self.finish_common();
        self.setup()?;
        Ok(self)
    }

    fn context(&self) -> Result<DissipatorContext> {
        let h = self.model.hamiltonian.build("model.hamiltonian")?;
        if self.model.leads.is_empty() {
            return Err(CliError::invalid("model.leads", "at least one lead is required"));
        }
        let mut leads = Vec::with_capacity(self.model.leads.len());
        for (i, l) in self.model.leads.iter().enumerate() {
            let lead = l.build(&format!("model.leads[{i}]"))?;
            if lead.dim() != h.dim() {
                return Err(CliError::invalid(&format!("model.leads[{i}].gamma"), format!("must cover {} orbitals", h.dim())));
            }
            leads.push(lead);
        }
        FockSpace::new(h.dim()).map_err(|e| CliError::at("model.hamiltonian", e))?;
        let n_max = at_least_one("numerics.n_max", self.numerics.n_max.unwrap())?;
        build_context(&h, &leads, n_max).map_err(|e| CliError::at("model", e))
    }

    pub fn setup(&self) -> Result<QmeSetup> {
        let n = &self.numerics;
        let context = self.context()?;
        let rho0 = context
            .fock()
            .product_state(&self.model.initial_occupations)
            .map_err(|e| CliError::at("model.initial_occupations", e))?;
        let t_max = positive("numerics.t_max", n.t_max.unwrap())?;
        let every = positive("numerics.output_interval", n.output_interval.unwrap())?;
        positive("numerics.dt", n.dt.unwrap())?;
        check_threads(n.threads)?;
        let steps = (t_max / every - 1e-9).ceil() as usize;
        let times = (0..=steps).map(|k| (k as f64 * every).min(t_max)).collect();
        Ok(QmeSetup { context, rho0, flavor: n.flavor.unwrap().into(), times })
    }
}

// ---------------------------------------------------------------- friction

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrictionModel {
    pub a: f64,
    /// Driving amplitudes to scan.
    pub b: Vec<f64>,
    pub delta: f64,
    pub omega: f64,
    /// `[Γ₁₁, Γ₂₂]`: orbital 1 couples to the left lead, orbital 2 to the right.
    pub gamma: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceName {
    Central,
    Averaged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FrictionNumerics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Axis>,
    /// Energy step and window; when unset they are derived per point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_window: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_refinements: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replica_trace: Option<TraceName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

pub type FrictionConfig = Document<FrictionModel, FrictionNumerics>;

pub struct FrictionSetup {
    pub model: JunctionModel,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub bs: Vec<f64>,
    pub grid: EnergyGrid,
}

impl FrictionConfig {
    fn resolve(mut self) -> Result<Self> {
        self.model.mu.get_or_insert(0.0);
        let n = &mut self.numerics;
        n.n_max.get_or_insert(floqdyn_core::friction::DEFAULT_N_MAX);
        n.x.get_or_insert(Axis { min: -4.0, max: 4.0, points: 21 });
        n.y.get_or_insert(Axis { min: -4.0, max: 4.0, points: 21 });
        n.grid_tol.get_or_insert(1e-4);
        n.max_refinements.get_or_insert(3);
        n.replica_trace.get_or_insert(TraceName::Central);
        self.finish_common();
        self.setup()?;
        Ok(self)
    }

    pub fn setup(&self) -> Result<FrictionSetup> {
        let (m, n) = (&self.model, &self.numerics);
        if m.b.is_empty() {
            return Err(CliError::invalid("model.b", "list at least one driving amplitude"));
        }
        if let Some(b) = m.b.iter().find(|b| !b.is_finite()) {
            return Err(CliError::invalid("model.b", format!("must be finite, got {b}")));
        }
        let n_max = at_least_one("numerics.n_max", n.n_max.unwrap())?;
        let b0 = m.b[0];
        let model = JunctionModel::with_orbital_leads(m.a, b0, m.delta, m.omega, m.gamma, m.mu.unwrap(), m.beta, n_max)
            .map_err(|e| CliError::at("model", e))?;
        let (x, y) = (n.x.unwrap(), n.y.unwrap());
        x.check("numerics.x")?;
        y.check("numerics.y")?;
        if let Some(s) = n.energy_step {
            positive("numerics.energy_step", s)?;
        }
        if let Some([lo, hi]) = n.energy_window {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(CliError::invalid("numerics.energy_window", "need finite lower < upper"));
            }
        }
        positive("numerics.grid_tol", n.grid_tol.unwrap())?;
        check_threads(n.threads)?;
        let grid = EnergyGrid {
            step: n.energy_step,
            window: n.energy_window.map(|[a, b]| (a, b)),
            tol: n.grid_tol.unwrap(),
            max_refinements: n.max_refinements.unwrap(),
            trace: match n.replica_trace.unwrap() {
                TraceName::Central => ReplicaTrace::Central,
                TraceName::Averaged => ReplicaTrace::Averaged,
            },
        };
        Ok(FrictionSetup { model, xs: x.values(), ys: y.values(), bs: m.b.clone(), grid })
    }
}

// ---------------------------------------------------------------- surface hopping

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShModel {
    /// Level driving amplitude.
    pub a: f64,
    /// Level driving frequency; default 0.01.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    pub g: f64,
    pub hbar_omega: f64,
    pub kt: f64,
    pub gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// Default `g²/ħω`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_bessel: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialName {
    Rest,
    Boltzmann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ShNumerics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_traj: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_interval: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steady_window: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

pub type ShConfig = Document<ShModel, ShNumerics>;

/// Default level driving frequency.
pub const SH_DEFAULT_OMEGA: f64 = 0.01;

impl ShConfig {
    fn resolve(mut self) -> Result<Self> {
        let m = &mut self.model;
        m.omega.get_or_insert(SH_DEFAULT_OMEGA);
        m.mu.get_or_insert(0.0);
        if m.e_d.is_none() {
            positive("model.hbar_omega", m.hbar_omega)?;
            m.e_d = Some(m.g * m.g / m.hbar_omega);
        }
        positive("model.omega", m.omega.unwrap())?;
        m.n_bessel.get_or_insert(default_n_bessel(m.a, m.omega.unwrap()));
        let prm = self.params()?;
        let n = &mut self.numerics;
        n.n_traj.get_or_insert(1000);
        let t_max = *n.t_max.get_or_insert(1e5);
        n.dt.get_or_insert(max_dt(&prm));
        n.output_interval.get_or_insert(t_max / 200.0);
        n.steady_window.get_or_insert([0.3 * t_max, t_max]);
        n.initial.get_or_insert(InitialName::Rest);
        self.finish_common();
        self.ensemble()?;
        Ok(self)
    }

    pub fn params(&self) -> Result<AhParams> {
        let m = &self.model;
        let prm = AhParams::new(m.e_d.unwrap(), m.a, m.omega.unwrap(), m.g, m.hbar_omega, m.kt, m.gamma, m.mu.unwrap())
            .map_err(|e| CliError::at("model", e))?;
        prm.with_n_bessel(m.n_bessel.unwrap()).map_err(|e| CliError::at("model.n_bessel", e))
    }

    pub fn ensemble(&self) -> Result<(AhParams, EnsembleOptions)> {
        let prm = self.params()?;
        let n = &self.numerics;
        check_threads(n.threads)?;
        let opts = EnsembleOptions {
            n_traj: n.n_traj.unwrap(),
            t_max: n.t_max.unwrap(),
            dt: n.dt,
            output_interval: n.output_interval,
            initial: match n.initial.unwrap() {
                InitialName::Rest => Initial::Rest,
                InitialName::Boltzmann => Initial::Boltzmann,
            },
            seed: self.seed.unwrap(),
            steady_window: n.steady_window.map(|[a, b]| (a, b)),
        };
        let schedule = floqdyn_core::surface_hopping::Schedule::resolve(&prm, &opts).map_err(|e| CliError::at("numerics", e))?;
        floqdyn_core::surface_hopping::EnsembleAccumulator::new(&schedule, opts.steady_window)
            .map_err(|e| CliError::at("numerics.steady_window", e))?;
        Ok((prm, opts))
    }
}

// ---------------------------------------------------------------- documents

impl<M, N> Document<M, N> {
    fn finish_common(&mut self) {
        self.seed.get_or_insert(0);
        if self.output.path.is_none() {
            self.output.path = Some(PathBuf::from(format!("{}.csv", self.workflow.name())));
        }
        self.output.format.get_or_insert(Format::Csv);
    }
}

/// A validated run description with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub enum RunConfig {
    FloquetPropagate(FloquetConfig),
    QmeRun(QmeConfig),
    FrictionScan(FrictionConfig),
    ShRun(ShConfig),
}

macro_rules! each {
    ($self:expr, $d:ident => $e:expr) => {
        match $self {
            RunConfig::FloquetPropagate($d) => $e,
            RunConfig::QmeRun($d) => $e,
            RunConfig::FrictionScan($d) => $e,
            RunConfig::ShRun($d) => $e,
        }
    };
}

impl RunConfig {
    pub fn workflow(&self) -> Workflow {
        each!(self, d => d.workflow)
    }

    pub fn seed(&self) -> u64 {
        each!(self, d => d.seed.unwrap_or(0))
    }

    pub fn output_path(&self) -> &Path {
        each!(self, d => d.output.path.as_deref().expect("resolved"))
    }

    pub fn threads(&self) -> Option<usize> {
        match self {
            RunConfig::FloquetPropagate(d) => d.numerics.threads,
            RunConfig::QmeRun(d) => d.numerics.threads,
            RunConfig::FrictionScan(d) => d.numerics.threads,
            RunConfig::ShRun(d) => d.numerics.threads,
        }
    }

    /// The effective config as a TOML document.
    pub fn echo(&self) -> String {
        each!(self, d => toml::to_string(d)).expect("resolved configs serialize")
    }
}

/// Command-line values that take precedence over the document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub workflow: Option<Workflow>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

fn parse_table(text: &str) -> Result<Table> {
    text.parse::<Table>().map_err(|e| CliError::Validation(e.to_string().trim_end().to_string()))
}

/// Recursive merge; values in `over` win.
fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn typed<T: DeserializeOwned>(table: &Table) -> Result<T> {
    // Going through text keeps the parser's line excerpts in the diagnostic.
    let text = toml::to_string(table).map_err(|e| CliError::Validation(e.to_string()))?;
    toml::from_str(&text).map_err(|e| CliError::Validation(e.to_string().trim_end().to_string()))
}

fn from_table(mut table: Table, over: &Overrides) -> Result<RunConfig> {
    if let Some(w) = over.workflow {
        match table.get("workflow") {
            None => {
                table.insert("workflow".into(), Value::String(w.name().into()));
            }
            Some(Value::String(s)) if s == w.name() => {}
            Some(other) => {
                return Err(CliError::invalid("workflow", format!("document says {other}, command line says {}", w.name())));
            }
        }
    }
    let missing: Vec<&str> = REQUIRED_KEYS.iter().copied().filter(|k| !table.contains_key(*k)).collect();
    if !missing.is_empty() {
        return Err(CliError::Validation(format!("missing required keys: {}", missing.join(", "))));
    }
    let workflow = match table.get("workflow") {
        Some(Value::String(s)) => Workflow::from_name(s),
        _ => None,
    }
    .ok_or_else(|| {
        let names: Vec<&str> = Workflow::ALL.iter().map(|w| w.name()).collect();
        CliError::invalid("workflow", format!("expected one of {}", names.join(", ")))
    })?;
    if let Some(seed) = over.seed {
        let v = match i64::try_from(seed) {
            Ok(i) => Value::Integer(i),
            Err(_) => Value::String(seed.to_string()),
        };
        table.insert("seed".into(), v);
    }
    if let Some(out) = &over.out {
        let section = table.entry("output").or_insert_with(|| Value::Table(Table::new()));
        match section {
            Value::Table(t) => {
                t.insert("path".into(), Value::String(out.to_string_lossy().into_owned()));
            }
            _ => return Err(CliError::invalid("output", "must be a table")),
        }
    }
    Ok(match workflow {
        Workflow::FloquetPropagate => RunConfig::FloquetPropagate(typed::<FloquetConfig>(&table)?.resolve()?),
        Workflow::QmeRun => RunConfig::QmeRun(typed::<QmeConfig>(&table)?.resolve()?),
        Workflow::FrictionScan => RunConfig::FrictionScan(typed::<FrictionConfig>(&table)?.resolve()?),
        Workflow::ShRun => RunConfig::ShRun(typed::<ShConfig>(&table)?.resolve()?),
    })
}

/// Parses and validates one config document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    from_table(parse_table(text)?, &Overrides::default())
}

/// Preset (if any) overlaid by the config document (if any), then the
/// command-line overrides.
pub fn load(preset: Option<&str>, document: Option<&str>, over: &Overrides) -> Result<RunConfig> {
    let mut table = match preset {
        Some(name) => parse_table(crate::presets::preset(name)?)?,
        None => Table::new(),
    };
    if let Some(text) = document {
        merge(&mut table, parse_table(text)?);
    }
    from_table(table, over)
}
