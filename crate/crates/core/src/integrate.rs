//! Classical fixed-step fourth-order Runge–Kutta for matrix ODEs.

use num_complex::Complex64;

use crate::linalg::CMat;

pub(crate) struct Rk4 {
    k1: CMat,
    k2: CMat,
    k3: CMat,
    k4: CMat,
    stage: CMat,
}

impl Rk4 {
    pub(crate) fn new(rows: usize, cols: usize) -> Self {
        let z = CMat::zeros(rows, cols);
        Self { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), stage: z }
    }

    /// Advances `y` from `t` to `t + dt`. The right-hand side writes `dy/dt`
    /// into its output argument.
    pub(crate) fn step<F>(&mut self, rhs: &mut F, t: f64, y: &mut CMat, dt: f64)
    where
        F: FnMut(f64, &CMat, &mut CMat),
    {
        let half = Complex64::new(0.5 * dt, 0.0);
        let full = Complex64::new(dt, 0.0);
        rhs(t, y, &mut self.k1);
        self.stage.copy_from(y);
        self.stage.zip_apply(&self.k1, |s, k| *s += k * half);
        rhs(t + 0.5 * dt, &self.stage, &mut self.k2);
        self.stage.copy_from(y);
        self.stage.zip_apply(&self.k2, |s, k| *s += k * half);
        rhs(t + 0.5 * dt, &self.stage, &mut self.k3);
        self.stage.copy_from(y);
        self.stage.zip_apply(&self.k3, |s, k| *s += k * full);
        rhs(t + dt, &self.stage, &mut self.k4);
        let sixth = dt / 6.0;
        for i in 0..y.len() {
            y[i] += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * sixth;
        }
    }
}

/// Number of equal substeps of at most `max_step` covering `span`.
pub(crate) fn substeps(span: f64, max_step: f64) -> usize {
    if span <= 0.0 {
        return 0;
    }
    let n = libm::ceil(span / max_step * (1.0 - 1e-12));
    (n as usize).max(1)
}
