use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Outcome of [`converge_truncation`].
#[derive(Debug, Clone, PartialEq)]
pub struct Converged {
    pub n_max: usize,
    /// Largest change of the monitored values between the last two truncations.
    pub change: f64,
    pub values: Vec<f64>,
}

/// Doubles `n_max` from `start` until every monitored value changes by less
/// than `tol`, or fails once `limit` would be exceeded.
pub fn converge_truncation<F>(start: usize, limit: usize, tol: f64, mut monitor: F) -> Result<Converged>
where
    F: FnMut(usize) -> Result<Vec<f64>>,
{
    let mut n = start.max(1);
    let mut prev = monitor(n)?;
    loop {
        let next_n = 2 * n;
        if next_n > limit {
            return Err(Error::NumericalAbort(alloc::format!(
                "replica truncation not converged to {tol:.1e} below n_max = {limit}"
            )));
        }
        let next = monitor(next_n)?;
        if next.len() != prev.len() {
            return Err(Error::Argument("monitored quantity changed length".into()));
        }
        let change = prev.iter().zip(&next).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if change < tol {
            return Ok(Converged { n_max: next_n, change, values: next });
        }
        n = next_n;
        prev = next;
    }
}
