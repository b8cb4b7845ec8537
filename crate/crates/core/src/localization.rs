//! Mobility-gap diagnostics: bounds on flat-outside-the-window spectral
//! functions, Green's-function energy integrals with fractional powers,
//! Combes-Thomas decay checks, exact Fermi-averaged projector differences,
//! and the insulator certificate that ties them together.

use crate::contour::gauss_legendre;
use crate::error::{CoreError, Result};
use crate::fit::{fit_decay_or_cap, DecayFit, DecaySample, FitKind};
use crate::lattice::LatticeBox;
use crate::operator::{spectral_norm, BlockOperator};
use crate::spectral::{
    diagonalize, max_degeneracy, EnergyWindow, PairResolvent, SpectralDecomposition,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Parameters for fractional-moment energy integrals.
///
/// The integrand is ||G(x, y; E + i eta)||^s integrated over E in `window`
/// and maximized over the eta grid. Offsets are kept strictly away from
/// zero so the resolvent always exists.
#[derive(Debug, Clone)]
pub struct FractionalMomentConfig {
    pub s: f64,
    pub eta_grid: Vec<f64>,
    pub window: EnergyWindow,
    pub quad_nodes: usize,
}

impl FractionalMomentConfig {
    /// Default grid: 12 log-spaced offsets from 1e-4 to 1, 64 quadrature
    /// nodes on the window.
    pub fn new(s: f64, window: EnergyWindow) -> Result<Self> {
        let cfg = Self {
            s,
            eta_grid: log_spaced_etas(12),
            window,
            quad_nodes: 64,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(CoreError::InvalidFraction(self.s));
        }
        if self.eta_grid.is_empty() {
            return Err(CoreError::TooFewNodes { need: 1, got: 0 });
        }
        for &eta in &self.eta_grid {
            if !(eta != 0.0 && eta.is_finite()) {
                return Err(CoreError::InvalidImaginaryOffset(eta));
            }
        }
        if self.quad_nodes < 2 {
            return Err(CoreError::TooFewNodes {
                need: 2,
                got: self.quad_nodes,
            });
        }
        Ok(())
    }
}

/// Log-spaced imaginary offsets, 1e-4 up to 1.
pub fn log_spaced_etas(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 10f64.powf(-4.0 + 4.0 * i as f64 / (n - 1) as f64))
        .collect()
}

/// Per-pair upper bound on ||f(H)_{xy}|| over every f with |f| <= 1 that is
/// constant below and above the window:
///
///   B(x, y) = ||P_below(x, y)|| + ||P_above(x, y)|| + sum_n s_n(x) s_n(y)
///
/// with the sum over eigenvalues strictly inside the window and s_n the
/// per-site eigenvector weights. Any such f(H) is c1 P_below + c2 P_above
/// plus rank-one terms with unimodular-bounded coefficients, so its block
/// norms are dominated entrywise by B.
pub fn b1_sup_bound(dec: &SpectralDecomposition, window: &EnergyWindow) -> Result<DMatrix<f64>> {
    let lat = dec.lattice().clone();
    let n_sites = lat.n_sites();
    let n_int = dec.n_internal();
    let dim = dec.dim();

    let mut below: Vec<usize> = Vec::new();
    let mut above: Vec<usize> = Vec::new();
    let mut inside: Vec<usize> = Vec::new();
    for (n, &l) in dec.eigenvalues().iter().enumerate() {
        if l <= window.a() {
            below.push(n);
        } else if l >= window.b() {
            above.push(n);
        } else {
            inside.push(n);
        }
    }

    let projector_norms = |cols: &[usize]| -> Result<DMatrix<f64>> {
        if cols.is_empty() {
            return Ok(DMatrix::zeros(n_sites, n_sites));
        }
        let mut v = DMatrix::<Complex64>::zeros(dim, cols.len());
        for (j, &n) in cols.iter().enumerate() {
            v.column_mut(j).copy_from(&dec.eigenvector(n));
        }
        let p = &v * v.adjoint();
        Ok(BlockOperator::from_dense(lat.clone(), n_int, p)?.block_norms())
    };

    let mut bound = projector_norms(&below)? + projector_norms(&above)?;
    if !inside.is_empty() {
        // rank-one terms: ||psi psi^dagger (x, y)|| = s(x) s(y)
        let s = DMatrix::<f64>::from_fn(n_sites, inside.len(), |x, j| {
            dec.site_weight(inside[j], x)
        });
        bound += &s * s.transpose();
    }
    Ok(bound)
}

/// Flatten a per-pair bound matrix into decay samples (all ordered pairs).
pub fn bound_matrix_samples(lattice: &LatticeBox, bound: &DMatrix<f64>) -> Vec<DecaySample> {
    let d = lattice.d();
    let n = lattice.n_sites();
    let mut out = Vec::with_capacity(n * n);
    for x in 0..n {
        let sx = lattice.site(x);
        for y in 0..n {
            let sy = lattice.site(y);
            out.push(DecaySample::new(
                sx[..d].to_vec(),
                sy[..d].to_vec(),
                bound[(x, y)],
            ));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct CombesThomasReport {
    pub fit: DecayFit,
    /// Distance from z to the spectrum.
    pub dist: f64,
    /// The resolvent-amplitude bound 2 / dist.
    pub amplitude_bound: f64,
    pub pass: bool,
    /// Raw per-pair norms, retained when requested.
    pub samples: Option<Vec<DecaySample>>,
}

/// Fits ||G(x, y; z)|| to exponential decay over all site pairs and checks
/// the resolvent-smoothness estimate: amplitude at most 2 / dist(z, spec(H))
/// with a positive rate. The rate itself is model-dependent and only
/// reported. Data with no resolvable off-diagonal decay (diagonal H) gets
/// the capped fit, which passes iff the diagonal obeys the bound.
pub fn combes_thomas_check(
    dec: &SpectralDecomposition,
    z: Complex64,
    keep_samples: bool,
) -> Result<CombesThomasReport> {
    let dist = dec.spectral_distance(z);
    if dist < 0.5 {
        return Err(CoreError::OnSpectrum { z, dist });
    }
    let g = crate::spectral::resolvent(dec, z)?;
    let norms = BlockOperator::from_dense(dec.lattice().clone(), dec.n_internal(), g)?.block_norms();
    let samples = bound_matrix_samples(dec.lattice(), &norms);
    let fit = fit_decay_or_cap(&samples, FitKind::Exponential, false, norms.max())?;
    let amplitude_bound = 2.0 / dist;
    let pass = fit.amplitude <= amplitude_bound && fit.rate > 0.0;
    Ok(CombesThomasReport {
        fit,
        dist,
        amplitude_bound,
        pass,
        samples: keep_samples.then_some(samples),
    })
}

/// sup over the eta grid of the Gauss-Legendre integral
/// int_window ||G(x, y; E + i eta)||^s dE.
///
/// Finite for every Hermitian input and every s in (0, 1): each eta keeps
/// the resolvent bounded by 1 / eta, so the integrand never blows up even
/// when the window crosses eigenvalues.
pub fn greens_fractional_energy_integral(
    dec: &SpectralDecomposition,
    x: usize,
    y: usize,
    cfg: &FractionalMomentConfig,
) -> Result<f64> {
    cfg.validate()?;
    let pair = PairResolvent::new(dec, x, y);
    let (nodes, weights) = gauss_legendre(cfg.quad_nodes)?;
    let half = 0.5 * cfg.window.width();
    let mid = cfg.window.center();
    let mut sup = 0.0f64;
    for &eta in &cfg.eta_grid {
        let mut acc = 0.0;
        for (&t, &w) in nodes.iter().zip(&weights) {
            let e = mid + half * t;
            let g = pair.eval(Complex64::new(e, eta))?;
            acc += w * spectral_norm(&g).powf(cfg.s);
        }
        sup = sup.max(half * acc);
    }
    Ok(sup)
}

/// Exact integral over the window of ||(P_lambda - P'_lambda)_{xy}|| dlambda,
/// where P_lambda projects onto energies at most lambda. The integrand is
/// piecewise constant between consecutive eigenvalues of the two operators,
/// so the integral is a finite sum with no quadrature error.
pub fn fermi_avg_projection_diff(
    dec_h: &SpectralDecomposition,
    dec_hp: &SpectralDecomposition,
    window: &EnergyWindow,
    x: usize,
    y: usize,
) -> Result<f64> {
    if dec_h.lattice() != dec_hp.lattice() || dec_h.n_internal() != dec_hp.n_internal() {
        return Err(CoreError::ShapeMismatch(
            "projector-difference average needs both operators on the same box".into(),
        ));
    }
    let n_int = dec_h.n_internal();
    // events: eigenvalue crossings that flip one rank-one term on or off
    let outer = |dec: &SpectralDecomposition, n: usize, sign: f64| {
        let px = dec.psi_block(n, x);
        let py = dec.psi_block(n, y);
        (&px * py.adjoint()).map(|v| v * Complex64::new(sign, 0.0))
    };
    let mut events: Vec<(f64, usize, f64)> = Vec::with_capacity(dec_h.dim() + dec_hp.dim());
    for (n, &l) in dec_h.eigenvalues().iter().enumerate() {
        events.push((l, n, 1.0));
    }
    for (n, &l) in dec_hp.eigenvalues().iter().enumerate() {
        events.push((l, n, -1.0));
    }
    events.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());

    let mut diff = DMatrix::<Complex64>::zeros(n_int, n_int);
    let mut integral = 0.0;
    let mut t = window.a();
    for &(l, n, sign) in &events {
        if l <= t {
            let o = if sign > 0.0 {
                outer(dec_h, n, sign)
            } else {
                outer(dec_hp, n, sign)
            };
            diff += o;
            continue;
        }
        if l >= window.b() {
            break;
        }
        integral += spectral_norm(&diff) * (l - t);
        let o = if sign > 0.0 {
            outer(dec_h, n, sign)
        } else {
            outer(dec_hp, n, sign)
        };
        diff += o;
        t = l;
    }
    integral += spectral_norm(&diff) * (window.b() - t);
    Ok(integral)
}

/// Caller-supplied worst-case class bounds for the certificate. All
/// thresholds are calibration data, not theory: pick them from pilot runs
/// on the regime of interest.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CertificateThresholds {
    /// Smallest acceptable window width.
    pub min_window_width: f64,
    /// Largest acceptable fitted amplitude C.
    pub max_amplitude: f64,
    /// Smallest acceptable fitted decay rate mu.
    pub min_rate: f64,
    /// Largest acceptable l1 norm of the per-site weight vector.
    pub max_weight_l1: f64,
    /// Largest acceptable eigenvalue multiplicity inside the window.
    pub max_degeneracy: usize,
    /// Cluster width used when counting multiplicities.
    pub cluster_tol: f64,
    /// Fractional power for the embedded Green's-function integrals.
    pub moment_s: f64,
}

/// Everything the certificate measured, plus the clause-by-clause verdict.
/// A failing certificate is a result, not an error.
#[derive(Debug, Clone)]
pub struct InsulatorCertificate {
    pub window_a: f64,
    pub window_b: f64,
    pub window_width: f64,
    pub states_in_window: usize,
    pub max_degeneracy: usize,
    /// Exponential fit of the per-pair bound matrix B(x, y).
    pub b1_fit: DecayFit,
    /// Polynomial fit of Green's-function energy integrals from the center.
    pub greens_fit: DecayFit,
    pub weight_l1: f64,
    pub clause_window: bool,
    pub clause_amplitude: bool,
    pub clause_rate: bool,
    pub clause_weight: bool,
    pub clause_degeneracy: bool,
    pub pass: bool,
    pub thresholds: CertificateThresholds,
}

impl InsulatorCertificate {
    pub fn clauses(&self) -> [(&'static str, bool); 5] {
        [
            ("window", self.clause_window),
            ("amplitude", self.clause_amplitude),
            ("rate", self.clause_rate),
            ("weight", self.clause_weight),
            ("degeneracy", self.clause_degeneracy),
        ]
    }
}

/// Finite-volume membership test for the insulator class with worst-case
/// objects given by `thresholds`: diagonalizes H, bounds the flat-function
/// family over the window, fits its decay, and checks every clause. The
/// Green's-function integrals from the center site are fitted with the
/// polynomial kind and embedded for inspection without gating the verdict.
pub fn insulator_certificate(
    h: &BlockOperator,
    window: &EnergyWindow,
    thresholds: &CertificateThresholds,
) -> Result<InsulatorCertificate> {
    let dec = diagonalize(h)?;
    let degeneracy = max_degeneracy(&dec, window, thresholds.cluster_tol)?;
    let states_in_window = dec.indices_in(window).len();

    let bound = b1_sup_bound(&dec, window)?;
    let samples = bound_matrix_samples(dec.lattice(), &bound);
    let b1_fit = fit_decay_or_cap(&samples, FitKind::Exponential, false, bound.max())?;

    let cfg = FractionalMomentConfig::new(thresholds.moment_s, window.clone())?;
    let lat = dec.lattice().clone();
    let d = lat.d();
    let center = lat.center();
    let cx = lat.site(center);
    let mut greens_samples = Vec::new();
    for y in 0..lat.n_sites() {
        let sy = lat.site(y);
        // axis pairs keep the certificate affordable on 2d boxes
        if d == 2 && sy[0] != cx[0] && sy[1] != cx[1] {
            continue;
        }
        let v = greens_fractional_energy_integral(&dec, center, y, &cfg)?;
        greens_samples.push(DecaySample::new(cx[..d].to_vec(), sy[..d].to_vec(), v));
    }
    let greens_peak = greens_samples.iter().map(|s| s.value).fold(0.0, f64::max);
    let greens_fit = fit_decay_or_cap(&greens_samples, FitKind::Polynomial, false, greens_peak)?;

    let weight_l1 = match &b1_fit.weights {
        Some(w) => w.iter().map(|(_, a)| a.abs()).sum(),
        None => 1.0,
    };
    let clause_window = window.width() >= thresholds.min_window_width;
    let clause_amplitude = b1_fit.amplitude <= thresholds.max_amplitude;
    let clause_rate = b1_fit.rate >= thresholds.min_rate;
    let clause_weight = weight_l1 <= thresholds.max_weight_l1;
    let clause_degeneracy = degeneracy <= thresholds.max_degeneracy;
    let pass =
        clause_window && clause_amplitude && clause_rate && clause_weight && clause_degeneracy;

    Ok(InsulatorCertificate {
        window_a: window.a(),
        window_b: window.b(),
        window_width: window.width(),
        states_in_window,
        max_degeneracy: degeneracy,
        b1_fit,
        greens_fit,
        weight_l1,
        clause_window,
        clause_amplitude,
        clause_rate,
        clause_weight,
        clause_degeneracy,
        pass,
        thresholds: thresholds.clone(),
    })
}
