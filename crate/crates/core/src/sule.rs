//! Eigenbasis locality: localization centers, uniform exponential decay
//! fits around them, and the center-spreading check that rules out many
//! eigenfunctions piling onto the same region.

use crate::error::{CoreError, Result};
use crate::fit::{fit_decay_or_cap, DecayFit, DecaySample, FitKind, RATE_CAP};
use crate::spectral::{EnergyWindow, SpectralDecomposition};

#[derive(Debug, Clone)]
pub struct SuleReport {
    /// Localization center of each analyzed eigenvector (weight argmax).
    pub centers: Vec<[i64; 2]>,
    pub eigenvalues: Vec<f64>,
    /// Joint fit of all site weights against distance to the own center.
    pub joint_fit: DecayFit,
    /// Per-vector rates; data too sparse or too steep to fit gets the cap.
    pub per_vector_rates: Vec<f64>,
    pub median_rate: f64,
    /// Smallest c making ||x_n|| >= sqrt(n)/3 - c hold for all n when the
    /// center norms are sorted ascending. Finite spreading means the same
    /// region cannot host arbitrarily many centers.
    pub center_growth_c0: f64,
    pub n_vectors: usize,
}

fn weight_profile(dec: &SpectralDecomposition, n: usize) -> (usize, Vec<f64>) {
    let n_sites = dec.lattice().n_sites();
    let mut best = 0usize;
    let mut best_w = -1.0;
    let mut weights = Vec::with_capacity(n_sites);
    for x in 0..n_sites {
        let w = dec.site_weight(n, x);
        weights.push(w);
        if w > best_w {
            best_w = w;
            best = x;
        }
    }
    (best, weights)
}

/// Analyzes every eigenvector with eigenvalue inside the window: finds its
/// center, fits exponential decay of the site weights around the centers
/// (jointly and per vector), and reports the center-spreading constant.
/// Shared centers are allowed; near-degenerate vectors are simply reported
/// with whatever rate their profiles support.
pub fn sule_analysis(dec: &SpectralDecomposition, window: &EnergyWindow) -> Result<SuleReport> {
    let idx = dec.indices_in(window);
    if idx.len() < 5 {
        return Err(CoreError::TooFewEigenvalues {
            need: 5,
            got: idx.len(),
        });
    }
    let lat = dec.lattice().clone();
    let d = lat.d();
    let n_sites = lat.n_sites();

    let mut centers = Vec::with_capacity(idx.len());
    let mut eigenvalues = Vec::with_capacity(idx.len());
    let mut per_vector_rates = Vec::with_capacity(idx.len());
    let mut joint_samples = Vec::with_capacity(idx.len() * n_sites);
    let mut joint_peak = 0.0f64;

    for &n in &idx {
        let (center, weights) = weight_profile(dec, n);
        let c = lat.site(center);
        centers.push(c);
        eigenvalues.push(dec.eigenvalues()[n]);

        let mut samples = Vec::with_capacity(n_sites);
        for x in 0..n_sites {
            let sx = lat.site(x);
            samples.push(DecaySample::new(
                sx[..d].to_vec(),
                c[..d].to_vec(),
                weights[x],
            ));
        }
        let peak = weights.iter().copied().fold(0.0, f64::max);
        joint_peak = joint_peak.max(peak);
        let fit = fit_decay_or_cap(&samples, FitKind::Exponential, false, peak)?;
        per_vector_rates.push(fit.rate.min(RATE_CAP));
        joint_samples.extend(samples);
    }

    let joint_fit = fit_decay_or_cap(&joint_samples, FitKind::Exponential, false, joint_peak)?;

    let mut sorted_rates = per_vector_rates.clone();
    sorted_rates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = sorted_rates.len();
    let median_rate = if m % 2 == 1 {
        sorted_rates[m / 2]
    } else {
        0.5 * (sorted_rates[m / 2 - 1] + sorted_rates[m / 2])
    };

    let mut norms: Vec<f64> = centers
        .iter()
        .map(|c| ((c[0] * c[0] + c[1] * c[1]) as f64).sqrt())
        .collect();
    norms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let center_growth_c0 = norms
        .iter()
        .enumerate()
        .map(|(i, &r)| ((i + 1) as f64).sqrt() / 3.0 - r)
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(SuleReport {
        centers,
        eigenvalues,
        joint_fit,
        per_vector_rates,
        median_rate,
        center_growth_c0,
        n_vectors: idx.len(),
    })
}
