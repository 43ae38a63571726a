//! Legendre polynomials `P_n` (normalized to `P_n(1) = 1`) and their derivatives.

use crate::error::{Error, Result};

/// Values `P_0..=P_t` and derivatives `P'_0..=P'_t` at one argument.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreTable {
    pub z: f64,
    pub p: Vec<f64>,
    pub dp: Vec<f64>,
}

impl LegendreTable {
    pub fn degree(&self) -> usize {
        self.p.len() - 1
    }
}

/// Arguments this far outside `[-1, 1]` are rejected rather than clamped.
pub const DOMAIN_SLACK: f64 = 1e-9;

pub(crate) fn clamp_unit(z: f64) -> f64 {
    z.clamp(-1.0, 1.0)
}

/// Evaluates the three-term recurrence
/// `(n+1)P_{n+1} = (2n+1)zP_n − nP_{n−1}`; derivatives use
/// `P'_{n+1} = P'_{n−1} + (2n+1)P_n`, which stays exact at `z = ±1`.
pub fn legendre_eval(z: f64, t: usize) -> Result<LegendreTable> {
    if !(z.abs() <= 1.0 + DOMAIN_SLACK) {
        return Err(Error::OutOfDomain(z));
    }
    let z = clamp_unit(z);
    let mut p = vec![0.0; t + 1];
    let mut dp = vec![0.0; t + 1];
    p[0] = 1.0;
    if t >= 1 {
        p[1] = z;
        dp[1] = 1.0;
    }
    for n in 1..t {
        let nf = n as f64;
        p[n + 1] = ((2.0 * nf + 1.0) * z * p[n] - nf * p[n - 1]) / (nf + 1.0);
        dp[n + 1] = dp[n - 1] + (2.0 * nf + 1.0) * p[n];
    }
    Ok(LegendreTable { z, p, dp })
}

/// The design kernel `G(z) = Σ_{n=1}^{t} (2n+1)·P_n(z)` and `G'(z)`, without
/// allocating. `z` must already lie in `[-1, 1]`.
#[inline]
pub fn kernel(z: f64, t: usize) -> (f64, f64) {
    if t == 0 {
        return (0.0, 0.0);
    }
    // (P_{n-1}, P_n), (P'_{n-1}, P'_n)
    let (mut p_prev, mut p_cur) = (1.0, z);
    let (mut d_prev, mut d_cur) = (0.0, 1.0);
    let mut g = 3.0 * z;
    let mut dg = 3.0;
    for n in 1..t {
        let nf = n as f64;
        let w = 2.0 * nf + 1.0;
        let p_next = (w * z * p_cur - nf * p_prev) / (nf + 1.0);
        let d_next = d_prev + w * p_cur;
        p_prev = p_cur;
        p_cur = p_next;
        d_prev = d_cur;
        d_cur = d_next;
        let w_next = w + 2.0;
        g += w_next * p_cur;
        dg += w_next * d_cur;
    }
    (g, dg)
}
