use alloc::vec::Vec;

use num_complex::Complex64;

use super::greens::{floquet_greens, Spectral};
use super::model::{model_fourier, JunctionModel};
use crate::error::{Error, Result};
use crate::floquet::{assemble_floquet_hamiltonian, lift_static, trace_product, FloquetOperator};
use crate::linalg::{self, c, CMat, Op};

/// How the replica trace in the friction integral is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReplicaTrace {
    /// `(1/N) Tr` over all `N = 2n_max+1` replicas. Edge replicas see a
    /// truncated drive, so this converges only as `1/N`.
    Averaged,
    /// Trace over the central replica only. Equal to the average in the
    /// untruncated limit and converges exponentially in `n_max`.
    #[default]
    Central,
}

/// Energy-integration settings. Unset fields are derived from the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyGrid {
    /// Trapezoid step; default `min(Γ_min/10, 1/(5β_max))`.
    pub step: Option<f64>,
    /// Integration window; default `[min μ − s, max μ + s]` with
    /// `s = 10/β_min + (n_max+2)ω + ‖h⁽⁰⁾‖ + 20Γ_max`.
    pub window: Option<(f64, f64)>,
    /// Relative change between the step and twice the step that counts as
    /// converged.
    pub tol: f64,
    /// Step halvings attempted before giving up (the result is then flagged).
    pub max_refinements: u32,
    pub trace: ReplicaTrace,
}

impl Default for EnergyGrid {
    fn default() -> Self {
        Self { step: None, window: None, tol: 1e-4, max_refinements: 3, trace: ReplicaTrace::Central }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionDiagnostics {
    pub lower: f64,
    pub upper: f64,
    pub step: f64,
    pub samples: usize,
    /// `max |γ(h) − γ(2h)| / max |γ(h)|` on the final grid.
    pub grid_change: f64,
    pub converged: bool,
    /// Largest imaginary part left after adding the Hermitian-conjugate term.
    pub imag_residue: f64,
    pub n_max: usize,
    /// Whether the diagonal resolvent shortcut was used.
    pub spectral: bool,
}

/// Friction tensor `γ_αβ` over `(x, y)` at one nuclear configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionTensor {
    pub gamma: [[f64; 2]; 2],
    pub point: (f64, f64),
    /// Mean force `−⟨∂h/∂R_α⟩` from the same lesser Green's function.
    pub mean_force: [f64; 2],
    pub diagnostics: FrictionDiagnostics,
}

impl FrictionTensor {
    pub fn symmetric_xy(&self) -> f64 {
        0.5 * (self.gamma[0][1] + self.gamma[1][0])
    }

    pub fn antisymmetric_xy(&self) -> f64 {
        0.5 * (self.gamma[0][1] - self.gamma[1][0])
    }
}

/// Exact split into symmetric and antisymmetric parts.
pub fn friction_split(f: &FrictionTensor) -> ([[f64; 2]; 2], [[f64; 2]; 2]) {
    split(&f.gamma)
}

pub fn split(g: &[[f64; 2]; 2]) -> ([[f64; 2]; 2], [[f64; 2]; 2]) {
    let mut s = [[0.0; 2]; 2];
    let mut a = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            s[i][j] = 0.5 * (g[i][j] + g[j][i]);
            a[i][j] = 0.5 * (g[i][j] - g[j][i]);
        }
    }
    (s, a)
}

/// Integrand samples: `T_αβ = Tr(L_α Gᴿ Gᴿ ∂_β hᶠ G<)`, its independently
/// evaluated Hermitian conjugate, and `Tr(L_α (−iG<))`.
#[derive(Clone, Copy, Default)]
struct Sample {
    t: [[Complex64; 2]; 2],
    t_hc: [[Complex64; 2]; 2],
    density: [f64; 2],
}

impl Sample {
    fn axpy(&mut self, w: f64, o: &Sample) {
        for a in 0..2 {
            for b in 0..2 {
                self.t[a][b] += o.t[a][b] * w;
                self.t_hc[a][b] += o.t_hc[a][b] * w;
            }
            self.density[a] += o.density[a] * w;
        }
    }
}

enum Kernel {
    Spectral {
        sp: Spectral,
        /// `Y† (𝟙 ⊗ ∂_β h) Y`.
        right: [CMat; 2],
        /// Diagonal of `Γ_l` for each lead.
        widths: Vec<Vec<f64>>,
        trace: SpectralTrace,
    },
    Direct {
        hf: FloquetOperator,
        left: [CMat; 2],
        right: [CMat; 2],
    },
}

enum SpectralTrace {
    Averaged,
    /// Central rows `A = ⟨0|Y` and the bare derivatives.
    Central { a: CMat, dh: [CMat; 2] },
}

struct Integrand<'a> {
    m: &'a JunctionModel,
    kernel: Kernel,
}

impl Integrand<'_> {
    fn sample(&self, eps: f64) -> Result<Sample> {
        match &self.kernel {
            Kernel::Spectral { sp, right, widths, trace } => Ok(self.spectral(eps, sp, right, widths, trace)),
            Kernel::Direct { hf, left, right } => {
                let mut out = Sample::default();
                let g = floquet_greens(eps, hf, &self.m.leads)?;
                let gg = linalg::mul(&g.retarded, &g.retarded);
                for beta in 0..2 {
                    let p = linalg::mul(&right[beta], &g.lesser);
                    for alpha in 0..2 {
                        let q = linalg::mul(&left[alpha], &gg);
                        let t = trace_product(&q, &p);
                        // Tr[(L G G ∂h G<)†] = Tr(G<† ∂h G†G† L)
                        let hc = trace_product(
                            &linalg::mul_op(&g.lesser, Op::H, &right[beta], Op::N),
                            &linalg::mul_op(&gg, Op::H, &left[alpha], Op::N),
                        );
                        out.t[alpha][beta] = t;
                        out.t_hc[alpha][beta] = hc;
                    }
                }
                for alpha in 0..2 {
                    out.density[alpha] = (trace_product(&left[alpha], &g.lesser) * c(0.0, -1.0)).re;
                }
                Ok(out)
            }
        }
    }

    /// With `Σ<` diagonal in the orbital basis, `Y† G< Y = i Z†Z` where
    /// `Z = diag(√w) Y diag(d*)` and `w` holds the lead-weighted occupations
    /// of each replica orbital.
    fn spectral(&self, eps: f64, sp: &Spectral, right: &[CMat; 2], widths: &[Vec<f64>], trace: &SpectralTrace) -> Sample {
        let mut out = Sample::default();
        let d = sp.resolvent_diagonal(eps);
        let size = d.len();
        let dim = widths[0].len();
        let y = &sp.y;
        let mut z = CMat::zeros(size, size);
        for row in 0..size {
            let n = row as i32 / dim as i32 - self.m.n_max as i32;
            let orb = row % dim;
            let mut w = 0.0;
            for (lead, g) in self.m.leads.iter().zip(widths) {
                if g[orb] != 0.0 {
                    w += g[orb] * lead.occupation(eps - n as f64 * self.m.omega);
                }
            }
            let sw = libm::sqrt(w.max(0.0));
            if sw == 0.0 {
                continue;
            }
            for k in 0..size {
                z[(row, k)] = y[(row, k)] * d[k].conj() * sw;
            }
        }
        let d2: Vec<Complex64> = d.iter().map(|v| v * v).collect();
        match trace {
            SpectralTrace::Averaged => {
                let mut b = CMat::zeros(size, size);
                linalg::gemm(&mut b, linalg::I, &z, Op::H, &z, Op::N, linalg::ZERO);
                let mut cb = CMat::zeros(size, size);
                for beta in 0..2 {
                    linalg::gemm(&mut cb, linalg::ONE, &right[beta], Op::N, &b, Op::N, linalg::ZERO);
                    for alpha in 0..2 {
                        let la = &right[alpha];
                        let mut t = c(0.0, 0.0);
                        let mut t_hc = c(0.0, 0.0);
                        for i in 0..size {
                            for j in 0..size {
                                let cji = cb[(j, i)];
                                t += la[(i, j)] * d2[j] * cji;
                                t_hc += (cji * d2[j]).conj() * la[(j, i)];
                            }
                        }
                        out.t[alpha][beta] = t;
                        out.t_hc[alpha][beta] = t_hc;
                    }
                }
                for alpha in 0..2 {
                    out.density[alpha] = (trace_product(&right[alpha], &b) * c(0.0, -1.0)).re;
                }
            }
            SpectralTrace::Central { a, dh } => {
                // G = B A† = i Z† (Z A†), an N×d block.
                let za = linalg::mul_op(&z, Op::N, a, Op::H);
                let mut g = CMat::zeros(size, dim);
                linalg::gemm(&mut g, linalg::I, &z, Op::H, &za, Op::N, linalg::ZERO);
                let ad2 = CMat::from_fn(dim, size, |i, k| a[(i, k)] * d2[k]);
                let rho = linalg::mul_op(&za, Op::H, &za, Op::N);
                for beta in 0..2 {
                    let h = linalg::mul(&right[beta], &g);
                    let m = linalg::mul(&ad2, &h);
                    // B anti-Hermitian: A B = −G†, so the conjugate term is
                    // Tr(∂h · G† R_β D*² A†).
                    let gr = linalg::mul_op(&g, Op::H, &right[beta], Op::N);
                    let m_hc = linalg::mul_op(&gr, Op::N, &ad2, Op::H);
                    for alpha in 0..2 {
                        out.t[alpha][beta] = trace_product(&dh[alpha], &m);
                        out.t_hc[alpha][beta] = trace_product(&dh[alpha], &m_hc);
                    }
                }
                for alpha in 0..2 {
                    out.density[alpha] = trace_product(&dh[alpha], &rho).re;
                }
            }
        }
        out
    }
}

fn central_projector_lift(op: &CMat, n_max: usize) -> CMat {
    let d = op.nrows();
    let size = (2 * n_max + 1) * d;
    let mut m = CMat::zeros(size, size);
    m.view_mut((n_max * d, n_max * d), (d, d)).copy_from(op);
    m
}

fn build_integrand<'a>(m: &'a JunctionModel, x: f64, y: f64, trace: ReplicaTrace) -> Result<Integrand<'a>> {
    let h = model_fourier(m, x, y)?;
    let hf = assemble_floquet_hamiltonian(&h, m.n_max);
    let dh = m.derivatives();
    let lifted: [CMat; 2] = [
        lift_static(&dh[0], m.n_max, m.omega).into_matrix(),
        lift_static(&dh[1], m.n_max, m.omega).into_matrix(),
    ];
    let kernel = match Spectral::try_new(&hf, &m.leads) {
        Some(sp) => {
            let yv = &sp.y;
            let rot = |a: &CMat| linalg::mul_op(yv, Op::H, &linalg::mul(a, yv), Op::N);
            let right = [rot(&lifted[0]), rot(&lifted[1])];
            let widths = m.leads.iter().map(|l| l.gamma().diagonal().iter().map(|z| z.re).collect()).collect();
            let trace = match trace {
                ReplicaTrace::Averaged => SpectralTrace::Averaged,
                ReplicaTrace::Central => {
                    let d = hf.dim();
                    SpectralTrace::Central { a: yv.rows(m.n_max * d, d).into_owned(), dh: dh.clone() }
                }
            };
            Kernel::Spectral { sp, right, widths, trace }
        }
        None => {
            let left = match trace {
                ReplicaTrace::Averaged => lifted.clone(),
                ReplicaTrace::Central => {
                    [central_projector_lift(&dh[0], m.n_max), central_projector_lift(&dh[1], m.n_max)]
                }
            };
            Kernel::Direct { hf, left, right: lifted }
        }
    };
    Ok(Integrand { m, kernel })
}

fn resolve_grid(m: &JunctionModel, x: f64, y: f64, grid: &EnergyGrid) -> Result<(f64, f64, f64)> {
    let beta_min = m.leads.iter().map(|l| l.beta()).fold(f64::INFINITY, f64::min);
    let beta_max = m.leads.iter().map(|l| l.beta()).fold(0.0, f64::max);
    let mu_min = m.leads.iter().map(|l| l.mu()).fold(f64::INFINITY, f64::min);
    let mu_max = m.leads.iter().map(|l| l.mu()).fold(f64::NEG_INFINITY, f64::max);
    let (gvals, _) = linalg::eigh(&m.total_gamma());
    let g_min = gvals[0];
    let g_max = *gvals.last().unwrap();
    if g_min <= 0.0 {
        return Err(Error::Argument(
            "friction needs every orbital broadened by the leads (Σ Γ positive definite)".into(),
        ));
    }
    let step = grid.step.unwrap_or_else(|| (g_min / 10.0).min(1.0 / (5.0 * beta_max)));
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Argument("energy step must be positive".into()));
    }
    let (lo, hi) = match grid.window {
        Some(w) => w,
        None => {
            let h0 = model_fourier(m, x, y)?;
            let norm0 = linalg::spectral_norm(h0.component(0).unwrap());
            let span = 10.0 / beta_min + (m.n_max as f64 + 2.0) * m.omega + norm0 + 20.0 * g_max;
            (mu_min - span, mu_max + span)
        }
    };
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::Argument("energy window must be finite and non-empty".into()));
    }
    Ok((lo, hi, step))
}

/// Floquet electronic friction at `(x, y)`:
/// `γ_αβ = −(1/N) ∫ dε/2π [Tr(∂_α hᶠ Gᴿ Gᴿ ∂_β hᶠ G<) + h.c.]`, the sign being
/// fixed so that equilibrium friction is positive semidefinite.
pub fn friction_tensor(m: &JunctionModel, x: f64, y: f64, grid: &EnergyGrid) -> Result<FrictionTensor> {
    m.validate()?;
    if !(x.is_finite() && y.is_finite()) {
        return Err(Error::Argument("nuclear coordinates must be finite".into()));
    }
    let (lo, hi, step0) = resolve_grid(m, x, y, grid)?;
    let integrand = build_integrand(m, x, y, grid.trace)?;
    let norm = match grid.trace {
        ReplicaTrace::Averaged => (2 * m.n_max + 1) as f64,
        ReplicaTrace::Central => 1.0,
    };

    let mut intervals = libm::ceil((hi - lo) / step0) as usize;
    intervals += intervals % 2;
    intervals = intervals.max(2);
    let mut samples: Vec<Sample> = Vec::with_capacity(intervals + 1);
    for k in 0..=intervals {
        samples.push(integrand.sample(lo + (hi - lo) * k as f64 / intervals as f64)?);
    }

    let finish = |acc: &Sample, h: f64| -> ([[f64; 2]; 2], [f64; 2], f64) {
        let scale = -h / (2.0 * core::f64::consts::PI * norm);
        let mut g = [[0.0; 2]; 2];
        let mut resid = 0.0f64;
        for a in 0..2 {
            for b in 0..2 {
                let z = (acc.t[a][b] + acc.t_hc[a][b]) * scale;
                g[a][b] = z.re;
                resid = resid.max(z.im.abs());
            }
        }
        let f = [
            -acc.density[0] * h / (2.0 * core::f64::consts::PI * norm),
            -acc.density[1] * h / (2.0 * core::f64::consts::PI * norm),
        ];
        (g, f, resid)
    };
    let trapezoid = |samples: &[Sample], stride: usize| -> Sample {
        let mut acc = Sample::default();
        let last = samples.len() - 1;
        for (k, s) in samples.iter().enumerate().step_by(stride) {
            let w = if k == 0 || k == last { 0.5 } else { 1.0 };
            acc.axpy(w, s);
        }
        acc
    };

    let mut refinements = 0;
    loop {
        let h = (hi - lo) / intervals as f64;
        let (fine, force, resid) = finish(&trapezoid(&samples, 1), h);
        let (coarse, _, _) = finish(&trapezoid(&samples, 2), 2.0 * h);
        let scale = fine.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = fine
            .iter()
            .flatten()
            .zip(coarse.iter().flatten())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let change = if scale > 1e-14 { diff / scale } else { diff };
        let converged = change <= grid.tol;
        if converged || refinements >= grid.max_refinements {
            if !converged {
                log::warn!(
                    "friction at ({x}, {y}): energy grid not converged (relative change {change:.2e} > {:.1e})",
                    grid.tol
                );
            }
            return Ok(FrictionTensor {
                gamma: fine,
                point: (x, y),
                mean_force: force,
                diagnostics: FrictionDiagnostics {
                    lower: lo,
                    upper: hi,
                    step: h,
                    samples: samples.len(),
                    grid_change: change,
                    converged,
                    imag_residue: resid,
                    n_max: m.n_max,
                    spectral: matches!(integrand.kernel, Kernel::Spectral { .. }),
                },
            });
        }
        refinements += 1;
        let mut refined = Vec::with_capacity(2 * intervals + 1);
        for k in 0..intervals {
            refined.push(samples[k]);
            let mid = lo + (hi - lo) * (2 * k + 1) as f64 / (2 * intervals) as f64;
            refined.push(integrand.sample(mid)?);
        }
        refined.push(samples[intervals]);
        samples = refined;
        intervals *= 2;
    }
}
