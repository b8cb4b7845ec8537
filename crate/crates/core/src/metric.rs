use crate::error::{CoreError, Result};
use crate::operator::BlockOperator;

/// Smallest admissible decay rate. Profiles flatter than this are treated
/// as not decaying at all.
pub const MU_MIN: f64 = 1e-3;
/// Largest admissible decay rate. Faster decay than exp(-50 r) cannot be
/// told from a finite-range operator on an integer lattice, so the search
/// stops here and the distance saturates at 1/MU_MAX.
pub const MU_MAX: f64 = 50.0;

const BISECT_TOL: f64 = 1e-9;

/// Outcome of the locality distance between two operators.
///
/// `value = max(c_star, 1/mu_star)`: the smallest t such that the blocks
/// of the difference obey ||D_xy|| <= C exp(-mu ||x-y||_1) with C <= t and
/// 1/mu <= t, with mu restricted to [MU_MIN, MU_MAX]. Coinciding operators
/// give exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricResult {
    pub value: f64,
    pub mu_star: f64,
    pub c_star: f64,
    pub d: usize,
    pub side: usize,
}

/// Per-distance maxima of the block norms: entry k is the largest
/// ||A_xy|| over pairs with ||x-y||_1 = k. Length diameter + 1.
pub fn decay_profile(op: &BlockOperator) -> Vec<f64> {
    let m = op.lattice().n_sites();
    let mut profile = vec![0.0f64; op.lattice().diameter() as usize + 1];
    for x in 0..m {
        for y in 0..m {
            let k = op.lattice().distance(x, y) as usize;
            let v = op.block_norm(x, y);
            if v > profile[k] {
                profile[k] = v;
            }
        }
    }
    profile
}

/// log of the tightest envelope constant: log C(mu) with
/// C(mu) = max_{xy} ||D_xy|| exp(mu ||x-y||_1), or None for D = 0.
fn log_envelope_constant(profile: &[f64], mu: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (k, &v) in profile.iter().enumerate() {
        if v > 0.0 {
            let c = v.ln() + mu * k as f64;
            best = Some(best.map_or(c, |b: f64| b.max(c)));
        }
    }
    best
}

/// Tightest C such that ||D_xy|| <= C exp(-mu ||x-y||_1) for all pairs.
/// Zero operators give C = 0. May overflow to infinity for very large mu
/// against a slowly decaying profile; the distance solver below works in
/// the log domain and is immune to that.
pub fn envelope_constant(diff: &BlockOperator, mu: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(CoreError::InvalidRate(mu));
    }
    Ok(log_envelope_constant(&decay_profile(diff), mu).map_or(0.0, f64::exp))
}

/// Locality distance between two operators of equal shape: minimize
/// max(C(mu), 1/mu) over mu in [MU_MIN, MU_MAX], where C(mu) is the
/// tightest envelope constant of the difference at rate mu.
///
/// C is nondecreasing in mu and 1/mu is decreasing, so the minimizer is
/// the crossing point when it lies inside the range and the nearer
/// endpoint otherwise; the crossing is found by bisection.
pub fn local_distance(a: &BlockOperator, b: &BlockOperator) -> Result<MetricResult> {
    let diff = a.sub(b)?;
    let d = diff.lattice().d();
    let side = diff.lattice().side();
    let profile = decay_profile(&diff);

    if profile.iter().all(|&v| v == 0.0) {
        return Ok(MetricResult {
            value: 0.0,
            mu_star: MU_MAX,
            c_star: 0.0,
            d,
            side,
        });
    }

    // h(mu) = log C(mu) - log(1/mu), strictly increasing.
    let h = |mu: f64| log_envelope_constant(&profile, mu).unwrap() + mu.ln();
    let mu_star = if h(MU_MIN) >= 0.0 {
        MU_MIN
    } else if h(MU_MAX) <= 0.0 {
        MU_MAX
    } else {
        let mut lo = MU_MIN;
        let mut hi = MU_MAX;
        while hi - lo > BISECT_TOL {
            let mid = 0.5 * (lo + hi);
            if h(mid) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };

    let c_star = log_envelope_constant(&profile, mu_star).unwrap().exp();
    Ok(MetricResult {
        value: c_star.max(1.0 / mu_star),
        mu_star,
        c_star,
        d,
        side,
    })
}

/// Envelope form of the distance: once d(A, B) <= t, every block of the
/// difference obeys ||D_xy|| <= t' exp(-||x-y||_1 / t') with t' = t + slack.
/// Returns whether that inequality holds for all pairs.
pub fn envelope_check(a: &BlockOperator, b: &BlockOperator, t: f64, slack: f64) -> Result<bool> {
    let t_eff = t + slack;
    if !(t_eff > 0.0) {
        return Err(CoreError::InvalidMetricValue(t_eff));
    }
    let diff = a.sub(b)?;
    let profile = decay_profile(&diff);
    Ok(profile
        .iter()
        .enumerate()
        .all(|(k, &v)| v <= t_eff * (-(k as f64) / t_eff).exp()))
}

/// Norm bound carried by the distance alone:
/// ||A - B|| <= t * coth(1 / (2t))^d for t = d(A, B) > 0.
pub fn opnorm_bound_from_metric(t: f64, d: usize) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(CoreError::InvalidMetricValue(t));
    }
    if d == 0 || d > 2 {
        return Err(CoreError::InvalidDimension(d));
    }
    let coth = 1.0 / (0.5 / t).tanh();
    Ok(t * coth.powi(d as i32))
}
