//! Disorder-averaged quantities: fractional and second resolvent moments
//! at fixed energy, and averaged flat-function bounds. Realizations run in
//! parallel but are always reduced in realization order, so every result
//! is bit-identical at any worker count.

use crate::error::{CoreError, Result};
use crate::fit::{fit_decay_or_cap, DecayFit, DecaySample, FitKind};
use crate::lattice::LatticeBox;
use crate::localization::{b1_sup_bound, bound_matrix_samples, FractionalMomentConfig};
use crate::model::{build_hamiltonian, ModelSpec};
use crate::operator::spectral_norm;
use crate::spectral::{diagonalize, resolvent, EnergyWindow};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

/// Seed for the k-th disorder realization. A distinct odd multiplier keeps
/// realization streams disjoint from the per-site streams inside a single
/// Hamiltonian, which mix with a different constant.
pub fn realization_seed(base: u64, k: u64) -> u64 {
    base ^ (k + 1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Disorder-averaged statistics for one site pair.
#[derive(Debug, Clone)]
pub struct PairStat {
    pub x: Vec<i64>,
    pub y: Vec<i64>,
    pub distance: f64,
    /// Sample mean of the integrand, maximized over the eta grid.
    pub mean: f64,
    /// Standard error of that mean at the maximizing eta.
    pub stderr: f64,
    /// The eta where the supremum is attained (0 when no grid is involved).
    pub eta_star: f64,
}

#[derive(Debug, Clone)]
pub struct EnsembleReport {
    /// Exponential fit of the per-pair means against distance.
    pub fit: DecayFit,
    pub pairs: Vec<PairStat>,
    pub n_realizations: usize,
    pub eta_grid: Vec<f64>,
    /// Power applied to the resolvent norm (s, or 2 for second moments;
    /// 1 for averaged bound matrices).
    pub exponent: f64,
}

const MIN_REALIZATIONS: usize = 20;

fn check_ensemble_inputs(spec: &ModelSpec, n_samples: usize) -> Result<()> {
    spec.validate()?;
    if !(spec.disorder_w > 0.0) {
        return Err(CoreError::CleanEnsemble);
    }
    if n_samples < MIN_REALIZATIONS {
        return Err(CoreError::TooFewRealizations {
            need: MIN_REALIZATIONS,
            got: n_samples,
        });
    }
    Ok(())
}

/// Shared driver: evaluates integrand(||G(center, y; E + i eta)||, eta)
/// for every site y and every eta, averaged over realizations.
fn resolvent_ensemble<F>(
    spec: &ModelSpec,
    e: f64,
    etas: &[f64],
    n_samples: usize,
    exponent: f64,
    integrand: F,
) -> Result<EnsembleReport>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    check_ensemble_inputs(spec, n_samples)?;
    if etas.is_empty() {
        return Err(CoreError::TooFewNodes { need: 1, got: 0 });
    }
    for &eta in etas {
        if !(eta != 0.0 && eta.is_finite()) {
            return Err(CoreError::InvalidImaginaryOffset(eta));
        }
    }
    let lat = LatticeBox::new(spec.d, spec.side)?;
    let n_sites = lat.n_sites();
    let n_int = spec.n_internal;
    let center = lat.center();
    let n_eta = etas.len();

    let rows: Vec<Vec<f64>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|k| -> Result<Vec<f64>> {
            let mut real = spec.clone();
            real.seed = realization_seed(spec.seed, k);
            let dec = diagonalize(&build_hamiltonian(&real)?)?;
            let mut row = vec![0.0; n_sites * n_eta];
            for (j, &eta) in etas.iter().enumerate() {
                let g = resolvent(&dec, Complex64::new(e, eta))?;
                for y in 0..n_sites {
                    let block = g.view((center * n_int, y * n_int), (n_int, n_int));
                    let norm = spectral_norm(&block.clone_owned());
                    row[y * n_eta + j] = integrand(norm, eta);
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;

    // fixed-order reduction: identical output at any thread count
    let mut sums = vec![0.0f64; n_sites * n_eta];
    let mut sumsq = vec![0.0f64; n_sites * n_eta];
    for row in &rows {
        for (i, &v) in row.iter().enumerate() {
            sums[i] += v;
            sumsq[i] += v * v;
        }
    }

    let n = n_samples as f64;
    let d = lat.d();
    let cx = lat.site(center);
    let mut pairs = Vec::with_capacity(n_sites);
    let mut samples = Vec::with_capacity(n_sites);
    for y in 0..n_sites {
        let mut best_j = 0usize;
        let mut best_mean = f64::NEG_INFINITY;
        for j in 0..n_eta {
            let mean = sums[y * n_eta + j] / n;
            if mean > best_mean {
                best_mean = mean;
                best_j = j;
            }
        }
        let mean = best_mean;
        let var = ((sumsq[y * n_eta + best_j] - n * mean * mean) / (n - 1.0)).max(0.0);
        let stderr = (var / n).sqrt();
        let sy = lat.site(y);
        pairs.push(PairStat {
            x: cx[..d].to_vec(),
            y: sy[..d].to_vec(),
            distance: lat.distance(center, y) as f64,
            mean,
            stderr,
            eta_star: etas[best_j],
        });
        samples.push(DecaySample::new(cx[..d].to_vec(), sy[..d].to_vec(), mean));
    }

    let peak = samples.iter().map(|s| s.value).fold(0.0, f64::max);
    let fit = fit_decay_or_cap(&samples, FitKind::Exponential, false, peak)?;
    Ok(EnsembleReport {
        fit,
        pairs,
        n_realizations: n_samples,
        eta_grid: etas.to_vec(),
        exponent,
    })
}

/// Monte Carlo estimate of sup_eta E[ ||G(x, y; E + i eta)||^s ] for pairs
/// from the center site, with an exponential fit of the means. Uses the
/// fraction s and eta grid from `cfg`; the energy window and quadrature
/// fields play no role here because the condition is pointwise in E.
pub fn ensemble_fractional_moment(
    spec: &ModelSpec,
    e: f64,
    cfg: &FractionalMomentConfig,
    n_samples: usize,
) -> Result<EnsembleReport> {
    cfg.validate()?;
    let s = cfg.s;
    resolvent_ensemble(spec, e, &cfg.eta_grid, n_samples, s, |norm, _| {
        norm.powf(s)
    })
}

/// Monte Carlo estimate of sup_eta eta * E[ ||G(x, y; E + i eta)||^2 ].
pub fn ensemble_second_moment(
    spec: &ModelSpec,
    e: f64,
    eta_grid: &[f64],
    n_samples: usize,
) -> Result<EnsembleReport> {
    resolvent_ensemble(spec, e, eta_grid, n_samples, 2.0, |norm, eta| {
        eta.abs() * norm * norm
    })
}

/// Averages the flat-function bound matrix B(x, y) over disorder
/// realizations and fits exponential decay over all pairs.
pub fn ensemble_b1_decay(
    spec: &ModelSpec,
    window: &EnergyWindow,
    n_samples: usize,
) -> Result<EnsembleReport> {
    check_ensemble_inputs(spec, n_samples)?;
    let lat = LatticeBox::new(spec.d, spec.side)?;
    let n_sites = lat.n_sites();

    let mats: Vec<DMatrix<f64>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|k| -> Result<DMatrix<f64>> {
            let mut real = spec.clone();
            real.seed = realization_seed(spec.seed, k);
            let dec = diagonalize(&build_hamiltonian(&real)?)?;
            b1_sup_bound(&dec, window)
        })
        .collect::<Result<_>>()?;

    let mut sum = DMatrix::<f64>::zeros(n_sites, n_sites);
    let mut sumsq = DMatrix::<f64>::zeros(n_sites, n_sites);
    for m in &mats {
        sum += m;
        sumsq += m.component_mul(m);
    }
    let n = n_samples as f64;
    let mean = sum / n;

    let d = lat.d();
    let mut pairs = Vec::with_capacity(n_sites * n_sites);
    for x in 0..n_sites {
        let sx = lat.site(x);
        for y in 0..n_sites {
            let sy = lat.site(y);
            let m = mean[(x, y)];
            let var = ((sumsq[(x, y)] - n * m * m) / (n - 1.0)).max(0.0);
            pairs.push(PairStat {
                x: sx[..d].to_vec(),
                y: sy[..d].to_vec(),
                distance: lat.distance(x, y) as f64,
                mean: m,
                stderr: (var / n).sqrt(),
                eta_star: 0.0,
            });
        }
    }
    let samples = bound_matrix_samples(&lat, &mean);
    let fit = fit_decay_or_cap(&samples, FitKind::Exponential, false, mean.max())?;
    Ok(EnsembleReport {
        fit,
        pairs,
        n_realizations: n_samples,
        eta_grid: vec![],
        exponent: 1.0,
    })
}
