use serde::{Deserialize, Serialize};

use super::RadialProfile;
use crate::error::{Error, Result};

/// The ε-lower envelope `ũ(r) = min_ρ { v(ρ) + (ρ − r)²/ε }` of a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeResult {
    pub profile: RadialProfile,
    pub epsilon: f64,
    /// Largest amount by which `ũ(r) − r²/ε` falls below a neighbouring chord.
    pub semiconcavity_defect: f64,
    /// `max (v − ũ)` over the interior subgrid.
    pub sup_distance_to_input: f64,
    /// Index range `[start, end)` of the interior subgrid, trimmed by
    /// `sqrt(ε · osc v)` from every boundary point of the grid.
    pub interior: (usize, usize),
}

/// Brute-force inf-convolution over the grid: `O(n²)`.
///
/// Minimising over angles first reduces the planar envelope of a radial
/// function to this one-dimensional problem, since the closest approach of
/// circles of radii `ρ` and `r` is `|ρ − r|`.
pub fn inf_envelope(p: &RadialProfile, eps: f64) -> Result<EnvelopeResult> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "envelope parameter eps = {eps}"
        )));
    }
    let (r, v) = (p.r(), p.v());
    let n = r.len();
    let env: Vec<f64> = r
        .iter()
        .map(|&ri| {
            r.iter()
                .zip(v)
                .map(|(&rj, &vj)| vj + (rj - ri) * (rj - ri) / eps)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();

    // ũ − r²/ε is a minimum of affine functions of r, hence concave.
    let w: Vec<f64> = r
        .iter()
        .zip(&env)
        .map(|(&ri, &ui)| ui - ri * ri / eps)
        .collect();
    let mut defect = 0.0f64;
    for i in 1..n.saturating_sub(1) {
        let t = (r[i] - r[i - 1]) / (r[i + 1] - r[i - 1]);
        let chord = (1.0 - t) * w[i - 1] + t * w[i + 1];
        defect = defect.max(chord - w[i]);
    }

    let margin = (eps * p.oscillation()).sqrt();
    let lo = if r[0] == 0.0 { r[0] } else { r[0] + margin };
    let hi = r[n - 1] - margin;
    let start = r.iter().position(|&t| t >= lo).unwrap_or(n);
    let end = r
        .iter()
        .rposition(|&t| t <= hi)
        .map_or(start, |i| (i + 1).max(start));
    let sup = (start..end).map(|i| v[i] - env[i]).fold(0.0, f64::max);

    Ok(EnvelopeResult {
        profile: RadialProfile::new(r.to_vec(), env)?,
        epsilon: eps,
        semiconcavity_defect: defect,
        sup_distance_to_input: sup,
        interior: (start, end),
    })
}
