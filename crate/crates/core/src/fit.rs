use crate::error::{CoreError, Result};
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;

/// Cap for fitted rates when the data decays faster than the box can
/// resolve (perfectly localized input); matches the top of the metric's
/// mu range so capped rates stay comparable.
pub const RATE_CAP: f64 = 50.0;

/// Structural-rank cutoff: singular values below this fraction of the
/// largest are treated as null directions.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitKind {
    /// value ~ C exp(-mu ||x-y||)
    Exponential,
    /// value ~ D (1 + ||x-y||)^(-alpha)
    Polynomial,
}

/// One decay observation: a block norm (or similar nonnegative scalar)
/// attached to a pair of sites.
#[derive(Debug, Clone)]
pub struct DecaySample {
    pub x: Vec<i64>,
    pub y: Vec<i64>,
    pub value: f64,
}

impl DecaySample {
    pub fn new(x: Vec<i64>, y: Vec<i64>, value: f64) -> Self {
        Self { x, y, value }
    }

    /// 1-norm distance between the pair.
    pub fn distance(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.y)
            .map(|(a, b)| (a - b).abs())
            .sum::<i64>() as f64
    }
}

/// Result of a log-domain decay fit.
///
/// `amplitude` is C (exponential) or D (polynomial); `rate` is mu or
/// alpha. For weighted fits, `weights` holds the per-site diagonal
/// factors a(x), l1-normalized, with the normalization absorbed into the
/// amplitude so that value ~ amplitude * exp(-rate d) / a(x) still holds.
#[derive(Debug, Clone)]
pub struct DecayFit {
    pub kind: FitKind,
    pub amplitude: f64,
    pub rate: f64,
    /// Standard error of the fitted rate from the regression residuals.
    pub rate_stderr: f64,
    /// Per-site weights (site, a) when weighted fitting was requested.
    pub weights: Option<Vec<(Vec<i64>, f64)>>,
    /// RMS of the log-domain residuals.
    pub residual: f64,
    /// Smallest informative singular value of the design matrix over the
    /// largest; the weighted design carries one exact gauge null
    /// direction which is excluded from this score.
    pub identifiability: f64,
    pub n_used: usize,
    pub n_zero_excluded: usize,
}

impl DecayFit {
    /// Model prediction for a pair at the given distance from site x.
    pub fn predict(&self, x: &[i64], dist: f64) -> f64 {
        let base = match self.kind {
            FitKind::Exponential => self.amplitude * (-self.rate * dist).exp(),
            FitKind::Polynomial => self.amplitude * (1.0 + dist).powf(-self.rate),
        };
        match &self.weights {
            None => base,
            Some(w) => {
                let a = w
                    .iter()
                    .find(|(s, _)| s.as_slice() == x)
                    .map(|(_, a)| *a)
                    .unwrap_or(1.0);
                base / a
            }
        }
    }

    /// Fit describing data that vanishes identically away from distance
    /// zero: decay too fast to resolve on the box, rate capped.
    pub fn capped(kind: FitKind, amplitude: f64, n_used: usize, n_zero_excluded: usize) -> Self {
        DecayFit {
            kind,
            amplitude,
            rate: RATE_CAP,
            rate_stderr: 0.0,
            weights: None,
            residual: 0.0,
            identifiability: 1.0,
            n_used,
            n_zero_excluded,
        }
    }
}

/// `fit_decay`, but data that cannot support a fit (all zero off a single
/// distance, too sparse, or concentrated at one distance) degrades to the
/// capped fit instead of erroring. Genuine numerical failures still
/// propagate. `peak` is the amplitude reported in the capped case.
pub fn fit_decay_or_cap(
    samples: &[DecaySample],
    kind: FitKind,
    weighted: bool,
    peak: f64,
) -> Result<DecayFit> {
    match fit_decay(samples, kind, weighted) {
        Ok(f) => Ok(f),
        Err(
            CoreError::AllZeroSamples
            | CoreError::TooFewSamples { .. }
            | CoreError::DegenerateRegression(_),
        ) => {
            let positives = samples.iter().filter(|s| s.value > 0.0).count();
            Ok(DecayFit::capped(
                kind,
                peak,
                positives,
                samples.len() - positives,
            ))
        }
        Err(e) => Err(e),
    }
}

/// Log-domain least squares for exponential or polynomial decay.
///
/// Zero (and non-finite-excluded) values cannot enter the log fit; they
/// are dropped and counted in `n_zero_excluded`. At least 10 positive
/// samples with at least two distinct distances are required. When
/// `weighted`, one diagonal factor per distinct x-site is estimated with
/// the gauge fixed by mean-zero log weights, then l1-renormalized.
pub fn fit_decay(samples: &[DecaySample], kind: FitKind, weighted: bool) -> Result<DecayFit> {
    let mut used: Vec<(&DecaySample, f64)> = Vec::with_capacity(samples.len());
    let mut n_zero = 0usize;
    for s in samples {
        if !s.value.is_finite() {
            return Err(CoreError::Numerics(format!(
                "non-finite decay sample {}",
                s.value
            )));
        }
        if s.value > 0.0 {
            used.push((s, s.distance()));
        } else {
            n_zero += 1;
        }
    }
    if used.is_empty() {
        return Err(CoreError::AllZeroSamples);
    }
    if used.len() < 10 {
        return Err(CoreError::TooFewSamples {
            need: 10,
            got: used.len(),
        });
    }
    let first_dist = used[0].1;
    if used.iter().all(|&(_, d)| d == first_dist) {
        return Err(CoreError::DegenerateRegression(first_dist));
    }

    let regressor = |d: f64| match kind {
        FitKind::Exponential => d,
        FitKind::Polynomial => (1.0 + d).ln(),
    };

    // Column layout: [intercept, -regressor, -site indicators...]
    let mut site_index: BTreeMap<&[i64], usize> = BTreeMap::new();
    if weighted {
        for (s, _) in &used {
            let next = site_index.len();
            site_index.entry(s.x.as_slice()).or_insert(next);
        }
    }
    let n = used.len();
    let p = 2 + site_index.len();
    let mut a = DMatrix::<f64>::zeros(n, p);
    let mut b = DVector::<f64>::zeros(n);
    for (row, (s, d)) in used.iter().enumerate() {
        a[(row, 0)] = 1.0;
        a[(row, 1)] = -regressor(*d);
        if weighted {
            a[(row, 2 + site_index[s.x.as_slice()])] = -1.0;
        }
        b[row] = s.value.ln();
    }

    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let mut sigmas: Vec<f64> = svd.singular_values.iter().copied().collect();
    sigmas.sort_by(|x, y| y.partial_cmp(x).unwrap());
    // the weighted design has exactly one structural null direction
    // (intercept equals the sum of the indicators)
    let structural_nulls = usize::from(weighted);
    let informative = &sigmas[..sigmas.len() - structural_nulls.min(sigmas.len() - 1)];
    let sigma_min_informative = *informative.last().unwrap();
    let identifiability = sigma_min_informative / sigma_max;
    if !(identifiability > RANK_TOL) {
        return Err(CoreError::Numerics(format!(
            "decay fit design matrix is rank deficient (identifiability {identifiability:.3e})"
        )));
    }

    let beta = svd
        .solve(&b, sigma_max * RANK_TOL)
        .map_err(|e| CoreError::Numerics(format!("decay fit solve failed: {e}")))?;
    let fitted = &a * &beta;
    let ssr: f64 = (&b - &fitted).iter().map(|r| r * r).sum();
    let residual = (ssr / n as f64).sqrt();

    // effective parameter count excludes the gauge direction
    let p_eff = p - structural_nulls;
    let dof = n.saturating_sub(p_eff).max(1);
    let noise_var = ssr / dof as f64;
    let rate_stderr = {
        // var(beta) = noise_var * (A^T A)^+ via the informative part of the SVD
        let v = svd.v_t.as_ref().unwrap();
        let mut pinv_diag = 0.0;
        for (k, &s) in svd.singular_values.iter().enumerate() {
            if s > sigma_max * RANK_TOL {
                let vk = v[(k, 1)];
                pinv_diag += vk * vk / (s * s);
            }
        }
        (noise_var * pinv_diag).sqrt()
    };

    let mut log_c = beta[0];
    let rate = beta[1];
    let weights = if weighted {
        // gauge: mean-zero log weights, then l1 renormalization with the
        // scale pushed into the amplitude
        let m = site_index.len();
        let mut u: Vec<f64> = vec![0.0; m];
        for (_, &idx) in &site_index {
            u[idx] = beta[2 + idx];
        }
        let mean = u.iter().sum::<f64>() / m as f64;
        for v in &mut u {
            *v -= mean;
        }
        log_c -= mean;
        let raw: Vec<f64> = u.iter().map(|&v| v.exp()).collect();
        let scale: f64 = raw.iter().sum();
        log_c -= scale.ln();
        let mut out: Vec<(Vec<i64>, f64)> = Vec::with_capacity(m);
        for (site, &idx) in &site_index {
            out.push((site.to_vec(), raw[idx] / scale));
        }
        Some(out)
    } else {
        None
    };

    Ok(DecayFit {
        kind,
        amplitude: log_c.exp(),
        rate,
        rate_stderr,
        weights,
        residual,
        identifiability,
        n_used: n,
        n_zero_excluded: n_zero,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chain_pairs<F: Fn(f64) -> f64>(l: i64, f: F) -> Vec<DecaySample> {
        let r = l / 2;
        let mut out = Vec::new();
        for x in -r..=r {
            for y in -r..=r {
                let d = (x - y).abs() as f64;
                out.push(DecaySample::new(vec![x], vec![y], f(d)));
            }
        }
        out
    }

    #[test]
    fn exact_exponential_data_is_recovered() {
        let samples = chain_pairs(21, |d| 2.0 * (-0.5 * d).exp());
        let fit = fit_decay(&samples, FitKind::Exponential, false).unwrap();
        assert!((fit.amplitude - 2.0).abs() < 1e-10);
        assert!((fit.rate - 0.5).abs() < 1e-12);
        assert!(fit.residual < 1e-10);
        assert_eq!(fit.n_zero_excluded, 0);
    }

    #[test]
    fn exact_polynomial_data_is_recovered() {
        let samples = chain_pairs(21, |d| 3.0 * (1.0 + d).powi(-4));
        let fit = fit_decay(&samples, FitKind::Polynomial, false).unwrap();
        assert!((fit.amplitude - 3.0).abs() < 1e-10);
        assert!((fit.rate - 4.0).abs() < 1e-12);
        assert!(fit.residual < 1e-10);
    }

    #[test]
    fn noisy_exponential_rate_lands_within_fifteen_percent() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let samples: Vec<DecaySample> = chain_pairs(41, |d| (-0.8 * d).exp())
            .into_iter()
            .map(|mut s| {
                let noise: f64 = 1.0 + 0.1 * (2.0 * rng.gen::<f64>() - 1.0);
                s.value *= noise;
                s
            })
            .collect();
        let fit = fit_decay(&samples, FitKind::Exponential, false).unwrap();
        assert!(
            (fit.rate - 0.8).abs() < 0.15 * 0.8,
            "rate = {} +- {}",
            fit.rate,
            fit.rate_stderr
        );
        assert!((fit.rate - 0.8).abs() < 4.0 * fit.rate_stderr);
    }

    #[test]
    fn zeros_are_excluded_and_counted() {
        let mut samples = chain_pairs(21, |d| 2.0 * (-0.5 * d).exp());
        samples.push(DecaySample::new(vec![99], vec![0], 0.0));
        samples.push(DecaySample::new(vec![-99], vec![0], 0.0));
        let fit = fit_decay(&samples, FitKind::Exponential, false).unwrap();
        assert_eq!(fit.n_zero_excluded, 2);
        assert!((fit.rate - 0.5).abs() < 1e-12);
    }

    #[test]
    fn failure_modes_are_named() {
        let zeroes: Vec<DecaySample> = (0..12)
            .map(|i| DecaySample::new(vec![i], vec![0], 0.0))
            .collect();
        assert!(matches!(
            fit_decay(&zeroes, FitKind::Exponential, false),
            Err(CoreError::AllZeroSamples)
        ));

        let few: Vec<DecaySample> = (0..5)
            .map(|i| DecaySample::new(vec![i], vec![0], 1.0))
            .collect();
        assert!(matches!(
            fit_decay(&few, FitKind::Exponential, false),
            Err(CoreError::TooFewSamples { .. })
        ));

        let flat: Vec<DecaySample> = (0..12)
            .map(|i| DecaySample::new(vec![i], vec![i - 1], 0.5))
            .collect();
        assert!(matches!(
            fit_decay(&flat, FitKind::Exponential, false),
            Err(CoreError::DegenerateRegression(_))
        ));
    }

    #[test]
    fn weighted_fit_recovers_planted_site_factors() {
        // value = C exp(-mu d) / a(x) with a known per-site profile
        let planted = |x: i64| 1.0 + 0.2 * (x as f64).cos();
        let r = 8i64;
        let mut samples = Vec::new();
        for x in -r..=r {
            for y in -r..=r {
                let d = (x - y).abs() as f64;
                samples.push(DecaySample::new(
                    vec![x],
                    vec![y],
                    2.0 * (-0.4 * d).exp() / planted(x),
                ));
            }
        }
        let fit = fit_decay(&samples, FitKind::Exponential, true).unwrap();
        assert!((fit.rate - 0.4).abs() < 1e-10);
        let weights = fit.weights.as_ref().unwrap();
        let total: f64 = weights.iter().map(|(_, a)| a.abs()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // profile recovered up to overall scale
        let (_, a0) = weights.iter().find(|(s, _)| s[0] == 0).unwrap();
        for (site, a) in weights {
            let want = planted(site[0]) / planted(0);
            assert!((a / a0 - want).abs() < 1e-8, "site {:?}", site);
        }
        // the model reproduces the data through predict()
        for s in &samples {
            let p = fit.predict(&s.x, s.distance());
            assert!((p - s.value).abs() < 1e-6 * s.value.max(1e-300));
        }
        assert!(fit.identifiability > 0.0 && fit.identifiability <= 1.0);
    }

    #[test]
    fn capped_fit_reports_the_cap() {
        let f = DecayFit::capped(FitKind::Exponential, 1.0, 5, 20);
        assert_eq!(f.rate, RATE_CAP);
        assert_eq!(f.n_zero_excluded, 20);
        assert_eq!(f.predict(&[0], 0.0), 1.0);
    }
}
