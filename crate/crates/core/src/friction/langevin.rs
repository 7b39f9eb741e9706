use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::model::JunctionModel;
use super::tensor::{friction_tensor, split, EnergyGrid};
use crate::error::{Error, Result};
use crate::floquet::check_grid;
use crate::integrate::substeps;

type Mat2 = [[f64; 2]; 2];

/// Friction tensors and electronic mean forces on a rectangular `(x, y)` grid,
/// bilinearly interpolated and clamped to the grid edges.
#[derive(Debug, Clone, PartialEq)]
pub struct FrictionTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Row-major over `(x, y)`.
    gamma: Vec<Mat2>,
    force: Vec<[f64; 2]>,
}

impl FrictionTable {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, gamma: Vec<Mat2>, force: Vec<[f64; 2]>) -> Result<Self> {
        for (name, g) in [("x", &xs), ("y", &ys)] {
            if g.len() < 2 || g.windows(2).any(|w| !(w[1] > w[0])) || g.iter().any(|v| !v.is_finite()) {
                return Err(Error::Argument(format!("{name} grid must have at least two strictly increasing points")));
            }
        }
        let n = xs.len() * ys.len();
        if gamma.len() != n || force.len() != n {
            return Err(Error::Argument(format!("friction table needs {n} entries")));
        }
        Ok(Self { xs, ys, gamma, force })
    }

    /// Tabulates `friction_tensor` for `m` on the given grid.
    pub fn from_model(m: &JunctionModel, xs: Vec<f64>, ys: Vec<f64>, grid: &EnergyGrid) -> Result<Self> {
        let mut gamma = Vec::with_capacity(xs.len() * ys.len());
        let mut force = Vec::with_capacity(xs.len() * ys.len());
        for &x in &xs {
            for &y in &ys {
                let t = friction_tensor(m, x, y, grid)?;
                gamma.push(t.gamma);
                force.push(t.mean_force);
            }
        }
        Self::new(xs, ys, gamma, force)
    }

    pub fn at(&self, x: f64, y: f64) -> (Mat2, [f64; 2]) {
        let (i, u) = locate(&self.xs, x);
        let (j, v) = locate(&self.ys, y);
        let ny = self.ys.len();
        let w = [
            ((i, j), (1.0 - u) * (1.0 - v)),
            ((i + 1, j), u * (1.0 - v)),
            ((i, j + 1), (1.0 - u) * v),
            ((i + 1, j + 1), u * v),
        ];
        let mut g = [[0.0; 2]; 2];
        let mut f = [0.0; 2];
        for ((a, b), wt) in w {
            let k = a * ny + b;
            for r in 0..2 {
                for c in 0..2 {
                    g[r][c] += wt * self.gamma[k][r][c];
                }
                f[r] += wt * self.force[k][r];
            }
        }
        (g, f)
    }
}

fn locate(grid: &[f64], v: f64) -> (usize, f64) {
    let last = grid.len() - 2;
    let i = grid.partition_point(|&g| g <= v).saturating_sub(1).min(last);
    let u = ((v - grid[i]) / (grid[i + 1] - grid[i])).clamp(0.0, 1.0);
    (i, u)
}

#[derive(Debug, Clone, PartialEq)]
pub enum FrictionSource {
    /// Position-independent tensor and electronic force.
    Constant { gamma: Mat2, force: [f64; 2] },
    Table(FrictionTable),
}

impl FrictionSource {
    pub fn constant(gamma: Mat2) -> Self {
        Self::Constant { gamma, force: [0.0; 2] }
    }

    fn at(&self, r: [f64; 2]) -> (Mat2, [f64; 2]) {
        match self {
            Self::Constant { gamma, force } => (*gamma, *force),
            Self::Table(t) => t.at(r[0], r[1]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LangevinOptions {
    pub kt: f64,
    /// Spring constants of the harmonic trap `U = Σ k_α (R_α − c_α)²/2`.
    pub trap: [f64; 2],
    pub centre: [f64; 2],
    /// Include the electronic mean force from the friction source.
    pub mean_force: bool,
    /// Maximum step; default `min(0.01·2π/√k_max, 0.05/‖γ‖)` at the start point.
    pub dt: Option<f64>,
}

impl Default for LangevinOptions {
    fn default() -> Self {
        Self { kt: 1.0, trap: [1.0, 1.0], centre: [0.0; 2], mean_force: false, dt: None }
    }
}

/// Sampled trajectory. Unit nuclear mass; the noise closure is a
/// fluctuation-dissipation approximation, so results are diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct LangevinSeries {
    pub times: Vec<f64>,
    pub positions: Vec<[f64; 2]>,
    pub momenta: Vec<[f64; 2]>,
    pub dt: f64,
    pub approximate: bool,
}

/// `exp(m)` for a real 2×2 matrix.
fn expm2(m: &Mat2) -> Mat2 {
    let a = 0.5 * (m[0][0] + m[1][1]);
    let n = [[m[0][0] - a, m[0][1]], [m[1][0], m[1][1] - a]];
    let q = n[0][0] * n[0][0] + n[0][1] * n[1][0];
    let (ch, sh) = if q > 0.0 {
        let s = libm::sqrt(q);
        (libm::cosh(s), libm::sinh(s) / s)
    } else if q < 0.0 {
        let s = libm::sqrt(-q);
        (libm::cos(s), libm::sin(s) / s)
    } else {
        (1.0, 1.0)
    };
    let e = libm::exp(a);
    [[e * (ch + sh * n[0][0]), e * sh * n[0][1]], [e * sh * n[1][0], e * (ch + sh * n[1][1])]]
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a symmetric 2×2 matrix.
fn eig_sym2(s: &Mat2) -> ([f64; 2], Mat2) {
    let mean = 0.5 * (s[0][0] + s[1][1]);
    let half = 0.5 * (s[0][0] - s[1][1]);
    let r = libm::hypot(half, s[0][1]);
    let theta = 0.5 * libm::atan2(s[0][1], half);
    let (c, sn) = (libm::cos(theta), libm::sin(theta));
    // columns: (c, sn) for mean + r, (−sn, c) for mean − r
    ([mean - r, mean + r], [[-sn, c], [c, sn]])
}

/// Symmetric square root of a PSD 2×2 matrix, negative eigenvalues clamped.
fn sqrt_psd2(s: &Mat2) -> Mat2 {
    let (vals, v) = eig_sym2(s);
    let mut out = [[0.0; 2]; 2];
    for k in 0..2 {
        let w = libm::sqrt(vals[k].max(0.0));
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] += w * v[i][k] * v[j][k];
            }
        }
    }
    out
}

fn mat_vec(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Exact Ornstein–Uhlenbeck update `p ← e^{−γdt} p + ξ` for the momentum,
/// with `Cov ξ = kT(𝟙 − e^{−γdt} e^{−γᵀdt})`.
struct Thermostat {
    decay: Mat2,
    noise: Mat2,
}

impl Thermostat {
    fn new(gamma: &Mat2, kt: f64, dt: f64) -> Result<Self> {
        if gamma.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NumericalAbort("friction tensor is not finite".into()));
        }
        let (sym, _) = split(gamma);
        let (vals, _) = eig_sym2(&sym);
        if vals[0] < -1e-8 {
            return Err(Error::NumericalAbort(format!(
                "symmetric friction has eigenvalue {:.3e}; noise covariance undefined",
                vals[0]
            )));
        }
        let decay = expm2(&[[-gamma[0][0] * dt, -gamma[0][1] * dt], [-gamma[1][0] * dt, -gamma[1][1] * dt]]);
        let mut cov = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let eet = decay[i][0] * decay[j][0] + decay[i][1] * decay[j][1];
                cov[i][j] = kt * (if i == j { 1.0 } else { 0.0 } - eet);
            }
        }
        let sym_cov = 0.5 * (cov[0][1] + cov[1][0]);
        cov[0][1] = sym_cov;
        cov[1][0] = sym_cov;
        Ok(Self { decay, noise: sqrt_psd2(&cov) })
    }

    fn apply(&self, p: [f64; 2], rng: &mut ChaCha8Rng) -> [f64; 2] {
        let xi: [f64; 2] = [StandardNormal.sample(rng), StandardNormal.sample(rng)];
        let d = mat_vec(&self.decay, p);
        let n = mat_vec(&self.noise, xi);
        [d[0] + n[0], d[1] + n[1]]
    }
}

fn force(source: &FrictionSource, opts: &LangevinOptions, r: [f64; 2]) -> [f64; 2] {
    let mut f = [-opts.trap[0] * (r[0] - opts.centre[0]), -opts.trap[1] * (r[1] - opts.centre[1])];
    if opts.mean_force {
        let (_, fe) = source.at(r);
        f[0] += fe[0];
        f[1] += fe[1];
    }
    f
}

fn default_dt(source: &FrictionSource, opts: &LangevinOptions, r: [f64; 2]) -> f64 {
    let k = opts.trap[0].max(opts.trap[1]);
    let mut dt = if k > 0.0 { 0.01 * 2.0 * core::f64::consts::PI / libm::sqrt(k) } else { 0.01 };
    let (g, _) = source.at(r);
    let norm = g.iter().flatten().map(|v| v * v).sum::<f64>();
    if norm > 0.0 {
        dt = dt.min(0.05 / libm::sqrt(norm));
    }
    dt
}

/// Langevin trajectory of the nuclei under the friction tensor (including its
/// Lorentz-like antisymmetric part) and a harmonic trap, with unit mass.
///
/// Each step splits as half kick, half drift, exact momentum thermostat with
/// the friction at the midpoint position, half drift, half kick. With `γ = 0`
/// this is velocity Verlet; a purely antisymmetric `γ` rotates `p` and does no
/// work.
pub fn langevin_trajectory(
    source: &FrictionSource,
    opts: &LangevinOptions,
    initial: ([f64; 2], [f64; 2]),
    t_grid: &[f64],
    seed: u64,
) -> Result<LangevinSeries> {
    check_grid(t_grid)?;
    if !(opts.kt.is_finite() && opts.kt > 0.0) {
        return Err(Error::Argument(format!("kT must be positive, got {}", opts.kt)));
    }
    if opts.trap.iter().chain(opts.centre.iter()).any(|v| !v.is_finite()) || opts.trap.iter().any(|&k| k < 0.0) {
        return Err(Error::Argument("trap constants must be finite and non-negative".into()));
    }
    let (mut r, mut p) = initial;
    if r.iter().chain(p.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Argument("initial state must be finite".into()));
    }
    let max_dt = opts.dt.unwrap_or_else(|| default_dt(source, opts, r));
    if !(max_dt.is_finite() && max_dt > 0.0) {
        return Err(Error::Argument(format!("time step must be positive, got {max_dt}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = LangevinSeries {
        times: Vec::with_capacity(t_grid.len()),
        positions: Vec::with_capacity(t_grid.len()),
        momenta: Vec::with_capacity(t_grid.len()),
        dt: max_dt,
        approximate: true,
    };
    let constant = match source {
        FrictionSource::Constant { gamma, .. } => Some(*gamma),
        FrictionSource::Table(_) => None,
    };
    let mut cached: Option<(f64, Thermostat)> = None;
    let mut f = force(source, opts, r);
    out.times.push(t_grid[0]);
    out.positions.push(r);
    out.momenta.push(p);
    for w in t_grid.windows(2) {
        let span = w[1] - w[0];
        let n = substeps(span, max_dt);
        let dt = span / n as f64;
        for _ in 0..n {
            p = [p[0] + 0.5 * dt * f[0], p[1] + 0.5 * dt * f[1]];
            r = [r[0] + 0.5 * dt * p[0], r[1] + 0.5 * dt * p[1]];
            let thermo = match constant {
                Some(g) => {
                    if cached.as_ref().map(|(h, _)| *h) != Some(dt) {
                        cached = Some((dt, Thermostat::new(&g, opts.kt, dt)?));
                    }
                    &cached.as_ref().unwrap().1
                }
                None => {
                    let (g, _) = source.at(r);
                    cached = Some((f64::NAN, Thermostat::new(&g, opts.kt, dt)?));
                    &cached.as_ref().unwrap().1
                }
            };
            p = thermo.apply(p, &mut rng);
            r = [r[0] + 0.5 * dt * p[0], r[1] + 0.5 * dt * p[1]];
            f = force(source, opts, r);
            p = [p[0] + 0.5 * dt * f[0], p[1] + 0.5 * dt * f[1]];
        }
        if r.iter().chain(p.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NumericalAbort(format!("trajectory diverged before t = {}", w[1])));
        }
        out.times.push(w[1]);
        out.positions.push(r);
        out.momenta.push(p);
    }
    Ok(out)
}
