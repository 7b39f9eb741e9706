use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Occupation-number basis for `modes` spinless fermionic orbitals.
///
/// Basis state `s` has orbital `α` occupied when bit `α` of `s` is set, so a
/// single orbital is ordered (empty, occupied). Operators follow the
/// Jordan–Wigner sign convention with lower orbitals to the left.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    modes: usize,
}

/// Largest orbital count accepted; the Fock dimension grows as `2^modes`.
pub const MAX_MODES: usize = 8;

impl FockSpace {
    pub fn new(modes: usize) -> Result<Self> {
        if modes == 0 || modes > MAX_MODES {
            return Err(Error::Argument(format!("orbital count must be in 1..={MAX_MODES}, got {modes}")));
        }
        Ok(Self { modes })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        1 << self.modes
    }

    fn sign(state: usize, alpha: usize) -> f64 {
        if (state & ((1 << alpha) - 1)).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// `c_α` as a sparse ladder.
    pub fn annihilator(&self, alpha: usize) -> Ladder {
        assert!(alpha < self.modes);
        let bit = 1 << alpha;
        let map = (0..self.dim())
            .map(|s| (s & bit != 0).then(|| (s ^ bit, Self::sign(s, alpha))))
            .collect();
        Ladder { map, dim: self.dim() }
    }

    /// `c†_α` as a sparse ladder.
    pub fn creator(&self, alpha: usize) -> Ladder {
        assert!(alpha < self.modes);
        let bit = 1 << alpha;
        let map = (0..self.dim())
            .map(|s| (s & bit == 0).then(|| (s | bit, Self::sign(s, alpha))))
            .collect();
        Ladder { map, dim: self.dim() }
    }

    /// `n_α = c†_α c_α`.
    pub fn number(&self, alpha: usize) -> CMat {
        assert!(alpha < self.modes);
        let d = self.dim();
        CMat::from_fn(d, d, |i, j| if i == j && i & (1 << alpha) != 0 { linalg::ONE } else { linalg::ZERO })
    }

    /// `Σ_αβ h_αβ c†_α c_β`.
    pub fn second_quantize(&self, h: &CMat) -> CMat {
        assert_eq!(h.nrows(), self.modes);
        let d = self.dim();
        let mut out = CMat::zeros(d, d);
        for b in 0..self.modes {
            let cb = self.annihilator(b);
            for a in 0..self.modes {
                if h[(a, b)] == linalg::ZERO {
                    continue;
                }
                let ca = self.creator(a);
                for s in 0..d {
                    if let Some((mid, s1)) = cb.map[s] {
                        if let Some((end, s2)) = ca.map[mid] {
                            out[(end, s)] += h[(a, b)] * (s1 * s2);
                        }
                    }
                }
            }
        }
        out
    }

    /// Uncorrelated state `⊗_α diag(1 − n_α, n_α)`.
    pub fn product_state(&self, occupations: &[f64]) -> Result<CMat> {
        if occupations.len() != self.modes {
            return Err(Error::Argument(format!(
                "expected {} occupations, got {}",
                self.modes,
                occupations.len()
            )));
        }
        if occupations.iter().any(|n| !(0.0..=1.0).contains(n)) {
            return Err(Error::Argument("occupations must lie in [0, 1]".into()));
        }
        let d = self.dim();
        let mut rho = CMat::zeros(d, d);
        for s in 0..d {
            let p: f64 = occupations
                .iter()
                .enumerate()
                .map(|(a, &n)| if s & (1 << a) != 0 { n } else { 1.0 - n })
                .product();
            rho[(s, s)] = linalg::c(p, 0.0);
        }
        Ok(rho)
    }
}

/// Operator with at most one nonzero entry `±1` per column, such as a
/// fermionic creation or annihilation operator, optionally repeated over
/// `replicas` diagonal blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Ladder {
    map: Vec<Option<(usize, f64)>>,
    dim: usize,
}

impl Ladder {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `𝟙_replicas ⊗ self`.
    pub fn repeated(&self, replicas: usize) -> Ladder {
        let mut map = Vec::with_capacity(self.dim * replicas);
        for r in 0..replicas {
            map.extend(self.map.iter().map(|e| e.map(|(row, s)| (row + r * self.dim, s))));
        }
        Ladder { map, dim: self.dim * replicas }
    }

    pub fn dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for (col, e) in self.map.iter().enumerate() {
            if let Some((row, s)) = *e {
                m[(row, col)] = linalg::c(s, 0.0);
            }
        }
        m
    }

    /// `out += scale · self · x`.
    pub fn mul_left_add(&self, x: &CMat, scale: Complex64, out: &mut CMat) {
        for (col, e) in self.map.iter().enumerate() {
            if let Some((row, s)) = *e {
                let f = scale * s;
                for k in 0..x.ncols() {
                    out[(row, k)] += x[(col, k)] * f;
                }
            }
        }
    }
}
