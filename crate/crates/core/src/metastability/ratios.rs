use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioDiagnostics {
    /// `log(gap) / log(phi_min)`
    pub gap_ratio: f64,
    /// `log(tau) / log(phi_S)` per sample, in input order. Both logs are
    /// negative for `tau < 1`, so only `tau = 0` gives a non-positive value,
    /// and it is reported as `0`.
    pub hitting_ratios: Vec<f64>,
    pub median_hitting_ratio: f64,
    pub epsilon: f64,
    /// Fraction of samples with ratio above `1 + epsilon`.
    pub fraction_above: f64,
}

/// Log-ratio diagnostics linking gap, conductance and hitting times.
/// Censored samples (`None`) are rejected; filter and report them first.
pub fn metastability_ratios(
    gap: f64,
    phi_min: f64,
    hitting: &[Option<u64>],
    phi_s: f64,
    epsilon: f64,
) -> Result<RatioDiagnostics> {
    for (name, v) in [("gap", gap), ("phi_min", phi_min), ("phi_S", phi_s)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "{name} must lie in (0, 1), got {v}"
            )));
        }
    }
    let taus: Vec<u64> = hitting
        .iter()
        .map(|t| t.ok_or(Error::CensoredInput))
        .collect::<Result<_>>()?;
    let log_phi = phi_s.ln();
    let hitting_ratios: Vec<f64> = taus
        .iter()
        .map(|&t| {
            if t == 0 {
                0.0
            } else {
                (t as f64).ln() / -log_phi
            }
        })
        .collect();
    let mut sorted = hitting_ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let median_hitting_ratio = match sorted.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => sorted[n / 2],
        n => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
    };
    let above = hitting_ratios
        .iter()
        .filter(|&&r| r > 1.0 + epsilon)
        .count();
    let fraction_above = if taus.is_empty() {
        0.0
    } else {
        above as f64 / taus.len() as f64
    };
    Ok(RatioDiagnostics {
        gap_ratio: gap.ln() / phi_min.ln(),
        hitting_ratios,
        median_hitting_ratio,
        epsilon,
        fraction_above,
    })
}
