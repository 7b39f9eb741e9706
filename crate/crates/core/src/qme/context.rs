use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::fock::{FockSpace, Ladder};
use crate::error::{Error, Result};
use crate::floquet::{assemble_floquet_hamiltonian, quasi_eigensystem, FloquetEigensystem, FourierHamiltonian};
use crate::lead::LeadSpec;
use crate::linalg::{self, CMat, Op};

/// Operator given by its harmonics, `O(t) = Σ_q O_q e^{iqωt}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Harmonics {
    omega: f64,
    components: BTreeMap<i32, CMat>,
}

impl Harmonics {
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn components(&self) -> &BTreeMap<i32, CMat> {
        &self.components
    }

    pub fn at(&self, t: f64) -> CMat {
        let mut iter = self.components.iter();
        let (&q0, m0) = iter.next().expect("harmonics are never empty");
        let mut out = m0 * Complex64::from_polar(1.0, q0 as f64 * self.omega * t);
        for (&q, m) in iter {
            let ph = Complex64::from_polar(1.0, q as f64 * self.omega * t);
            out.zip_apply(m, |o, x| *o += x * ph);
        }
        out
    }

    fn scaled_add(&mut self, other: &Harmonics, s: Complex64) {
        for (&q, m) in &other.components {
            let slot = self.components.entry(q).or_insert_with(|| CMat::zeros(m.nrows(), m.ncols()));
            slot.zip_apply(m, |o, x| *o += x * s);
        }
    }
}

/// Time-dependent dressed operators of one lead and one orbital:
/// `creation` is `c̃†_β(t)` and `annihilation` is `c̄_β(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DressedPair {
    pub creation: Harmonics,
    pub annihilation: Harmonics,
}

/// Element-wise weights of one lead for both dressed channels, from the
/// single table `f(Ω_NM, μ)` with `Ω_NM = E_N − E_M`.
///
/// The creation channel uses `f(Ω_NM, μ)`; the annihilation channel uses
/// `1 − f(−Ω_NM, μ)`, which is `1 − Wᵀ` of the same table. Deriving one from
/// the other keeps `(c̃†)† + c̄ = c` exact.
pub(crate) fn occupation_weights(energies: &[f64], lead: &LeadSpec) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = energies.len();
    let creation = DMatrix::from_fn(n, n, |i, j| lead.occupation(energies[i] - energies[j]));
    let annihilation = DMatrix::from_fn(n, n, |i, j| 1.0 - creation[(j, i)]);
    (creation, annihilation)
}

/// `Y [(Y† op Y) ∘ W] Y†`.
fn dress(y: &CMat, op: &CMat, w: &DMatrix<f64>) -> CMat {
    let mut inner = linalg::mul_op(y, Op::H, &linalg::mul(op, y), Op::N);
    inner.zip_apply(w, |z, f| *z *= f);
    linalg::mul_op(&linalg::mul(y, &inner), Op::N, y, Op::H)
}

/// Dressing of the central-replica lift `|0⟩op⟨0|`, folded back into
/// harmonics `D_q = Σ_{n−m=q} K_nm`.
fn dress_central(eig: &FloquetEigensystem, op: &CMat, w: &DMatrix<f64>) -> Harmonics {
    let d = eig.dim();
    let n_max = eig.n_max();
    let y = eig.vectors();
    let y0 = y.rows(n_max * d, d).into_owned();
    let mut inner = linalg::mul_op(&y0, Op::H, &linalg::mul(op, &y0), Op::N);
    inner.zip_apply(w, |z, f| *z *= f);
    let k = linalg::mul_op(&linalg::mul(y, &inner), Op::N, y, Op::H);
    let reps = 2 * n_max + 1;
    let mut components = BTreeMap::new();
    for row in 0..reps {
        for col in 0..reps {
            let q = row as i32 - col as i32;
            let slot = components.entry(q).or_insert_with(|| CMat::zeros(d, d));
            *slot += k.view((row * d, col * d), (d, d));
        }
    }
    Harmonics { omega: eig.omega(), components }
}

/// Precomputed pieces of one dissipator flavour.
///
/// With `Y(ρ) = Pρ − Σ_α [c_α ρ R_α + c†_α ρ S_α]`, the dissipator is
/// `D(ρ) = −Y(ρ) − Y(ρ†)†`.
#[derive(Debug, Clone)]
pub(crate) struct HilbertTerms {
    pub p: Harmonics,
    pub r: Vec<Harmonics>,
    pub s: Vec<Harmonics>,
}

#[derive(Debug, Clone)]
pub(crate) struct FloquetTerms {
    pub p: CMat,
    pub r: Vec<CMat>,
    pub s: Vec<CMat>,
    pub annihilators: Vec<Ladder>,
    pub creators: Vec<Ladder>,
    pub hamiltonian: CMat,
}

/// Everything needed to evaluate both Redfield dissipators of a quadratic
/// system coupled to wide-band leads.
///
/// The one-body Hamiltonian `h_αβ(t)` is second-quantized on the Fock space
/// of its orbitals, so the density matrices handled here are `2^M × 2^M`
/// (Hilbert flavour) or `(2n_max+1)2^M` square (Floquet flavour).
#[derive(Debug, Clone)]
pub struct DissipatorContext {
    fock: FockSpace,
    one_body: FourierHamiltonian,
    hamiltonian: FourierHamiltonian,
    eig: FloquetEigensystem,
    leads: Vec<LeadSpec>,
    dressed: Vec<Vec<DressedPair>>,
    pub(crate) annihilators: Vec<Ladder>,
    pub(crate) creators: Vec<Ladder>,
    pub(crate) hilbert: HilbertTerms,
    pub(crate) floquet: FloquetTerms,
}

impl DissipatorContext {
    pub fn fock(&self) -> FockSpace {
        self.fock
    }

    pub fn one_body(&self) -> &FourierHamiltonian {
        &self.one_body
    }

    /// Second-quantized system Hamiltonian.
    pub fn hamiltonian(&self) -> &FourierHamiltonian {
        &self.hamiltonian
    }

    pub fn eigensystem(&self) -> &FloquetEigensystem {
        &self.eig
    }

    pub fn leads(&self) -> &[LeadSpec] {
        &self.leads
    }

    pub fn n_max(&self) -> usize {
        self.eig.n_max()
    }

    pub fn omega(&self) -> f64 {
        self.eig.omega()
    }

    /// Fock-space dimension `2^M`.
    pub fn hilbert_dim(&self) -> usize {
        self.fock.dim()
    }

    pub fn floquet_dim(&self) -> usize {
        self.eig.size()
    }

    pub fn dressed(&self, lead: usize, orbital: usize) -> &DressedPair {
        &self.dressed[lead][orbital]
    }

    /// Particle number operator of one orbital.
    pub fn number(&self, orbital: usize) -> CMat {
        self.fock.number(orbital)
    }
}

/// Precomputes the dressed dissipation operators for `h_s`, a one-body
/// Hamiltonian on `M` orbitals, and every lead.
pub fn build_context(h_s: &FourierHamiltonian, leads: &[LeadSpec], n_max: usize) -> Result<DissipatorContext> {
    let modes = h_s.dim();
    let fock = FockSpace::new(modes)?;
    for (i, l) in leads.iter().enumerate() {
        if l.dim() != modes {
            return Err(Error::Argument(format!(
                "lead {i} couples {} orbitals, system has {modes}",
                l.dim()
            )));
        }
    }
    let hamiltonian = h_s.map(|m| fock.second_quantize(m))?;
    let hf = assemble_floquet_hamiltonian(&hamiltonian, n_max);
    let eig = quasi_eigensystem(&hf)?;
    let d = fock.dim();
    let reps = 2 * n_max + 1;
    let y = eig.vectors();
    let omega = h_s.omega();

    let annihilators: Vec<Ladder> = (0..modes).map(|a| fock.annihilator(a)).collect();
    let creators: Vec<Ladder> = (0..modes).map(|a| fock.creator(a)).collect();
    let lifted_ann: Vec<Ladder> = annihilators.iter().map(|l| l.repeated(reps)).collect();
    let lifted_cre: Vec<Ladder> = creators.iter().map(|l| l.repeated(reps)).collect();

    let zero_h = || Harmonics { omega, components: BTreeMap::from([(0, CMat::zeros(d, d))]) };
    let mut hp = zero_h();
    let mut hr: Vec<Harmonics> = (0..modes).map(|_| zero_h()).collect();
    let mut hs: Vec<Harmonics> = (0..modes).map(|_| zero_h()).collect();
    let size = reps * d;
    let mut fp = CMat::zeros(size, size);
    let mut fr: Vec<CMat> = (0..modes).map(|_| CMat::zeros(size, size)).collect();
    let mut fs: Vec<CMat> = (0..modes).map(|_| CMat::zeros(size, size)).collect();
    let mut dressed = Vec::with_capacity(leads.len());

    for lead in leads {
        let (w_cre, w_ann) = occupation_weights(eig.quasienergies(), lead);
        let g = lead.gamma();
        let pairs: Vec<DressedPair> = (0..modes)
            .map(|b| DressedPair {
                creation: dress_central(&eig, &creators[b].dense(), &w_cre),
                annihilation: dress_central(&eig, &annihilators[b].dense(), &w_ann),
            })
            .collect();
        let f_cre: Vec<CMat> = lifted_cre.iter().map(|l| dress(y, &l.dense(), &w_cre)).collect();
        let f_ann: Vec<CMat> = lifted_ann.iter().map(|l| dress(y, &l.dense(), &w_ann)).collect();

        for a in 0..modes {
            // Hilbert flavour, harmonic by harmonic.
            let mut gc = zero_h();
            let mut ga = zero_h();
            for b in 0..modes {
                let half = g[(a, b)] * 0.5;
                let half_t = g[(b, a)] * 0.5;
                if half != linalg::ZERO {
                    gc.scaled_add(&pairs[b].creation, half);
                    *hr[a].components.get_mut(&0).unwrap() += creators[b].dense() * half;
                }
                if half_t != linalg::ZERO {
                    ga.scaled_add(&pairs[b].annihilation, half_t);
                    *hs[a].components.get_mut(&0).unwrap() += annihilators[b].dense() * half_t;
                }
            }
            hr[a].scaled_add(&gc, -linalg::ONE);
            hs[a].scaled_add(&ga, -linalg::ONE);
            let mut left = Harmonics { omega, components: BTreeMap::new() };
            for (&q, m) in &gc.components {
                let mut acc = CMat::zeros(d, d);
                annihilators[a].mul_left_add(m, linalg::ONE, &mut acc);
                left.components.insert(q, acc);
            }
            for (&q, m) in &ga.components {
                let acc = left.components.entry(q).or_insert_with(|| CMat::zeros(d, d));
                creators[a].mul_left_add(m, linalg::ONE, acc);
            }
            hp.scaled_add(&left, linalg::ONE);

            // Floquet flavour.
            let mut gc = CMat::zeros(size, size);
            let mut ga = CMat::zeros(size, size);
            for b in 0..modes {
                let half = g[(a, b)] * 0.5;
                let half_t = g[(b, a)] * 0.5;
                if half != linalg::ZERO {
                    gc.zip_apply(&f_cre[b], |o, x| *o += x * half);
                    lifted_cre[b].mul_left_add(&linalg::identity(size), half, &mut fr[a]);
                }
                if half_t != linalg::ZERO {
                    ga.zip_apply(&f_ann[b], |o, x| *o += x * half_t);
                    lifted_ann[b].mul_left_add(&linalg::identity(size), half_t, &mut fs[a]);
                }
            }
            fr[a] -= &gc;
            fs[a] -= &ga;
            lifted_ann[a].mul_left_add(&gc, linalg::ONE, &mut fp);
            lifted_cre[a].mul_left_add(&ga, linalg::ONE, &mut fp);
        }
        dressed.push(pairs);
    }

    Ok(DissipatorContext {
        fock,
        one_body: h_s.clone(),
        floquet: FloquetTerms {
            p: fp,
            r: fr,
            s: fs,
            annihilators: lifted_ann,
            creators: lifted_cre,
            hamiltonian: hf.into_matrix(),
        },
        hamiltonian,
        eig,
        leads: leads.to_vec(),
        dressed,
        annihilators,
        creators,
        hilbert: HilbertTerms { p: hp, r: hr, s: hs },
    })
}
