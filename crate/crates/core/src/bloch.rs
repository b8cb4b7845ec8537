use crate::error::{CoreError, Result};
use crate::model::{ModelKind, ModelSpec};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

const MIN_K_GRID: usize = 12;

/// Bloch Hamiltonian of the clean single-orbital model at flux p/q in the
/// Landau gauge, on the magnetic Brillouin zone
/// k1 in [0, 2 pi / q), k2 in [0, 2 pi). The q x q matrix is
///   H(k)[m, m+1] = exp(i k1),  H(k)[m, m-1] = exp(-i k1)  (cyclic),
///   H(k)[m, m] = 2 cos(k2 - 2 pi (p/q) m).
/// For q <= 2 the two hopping terms land on the same entry and add.
pub fn bloch_hamiltonian(p: i64, q: i64, k1: f64, k2: f64) -> DMatrix<Complex64> {
    let qs = q as usize;
    let alpha = p as f64 / q as f64;
    let mut h = DMatrix::<Complex64>::zeros(qs, qs);
    let hop = Complex64::from_polar(1.0, k1);
    for m in 0..qs {
        h[(m, (m + 1) % qs)] += hop;
        h[(m, (m + qs - 1) % qs)] += hop.conj();
        h[(m, m)] += Complex64::new(2.0 * (k2 - 2.0 * PI * alpha * m as f64).cos(), 0.0);
    }
    h
}

fn require_oracle_spec(spec: &ModelSpec) -> Result<()> {
    spec.validate()?;
    if spec.kind != ModelKind::Hofstadter {
        return Err(CoreError::OracleUnavailable(format!(
            "kind is `{}`",
            spec.kind
        )));
    }
    if spec.n_internal != 1 {
        return Err(CoreError::OracleUnavailable(format!(
            "N = {} orbitals",
            spec.n_internal
        )));
    }
    if spec.disorder_w != 0.0 {
        return Err(CoreError::OracleUnavailable(format!(
            "disorder W = {}",
            spec.disorder_w
        )));
    }
    Ok(())
}

fn sorted_eigen(h: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let q = h.nrows();
    let se = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<Complex64>::zeros(q, q);
    for (new, &old) in order.iter().enumerate() {
        vectors
            .view_mut((0, new), (q, 1))
            .copy_from(&se.eigenvectors.view((0, old), (q, 1)));
    }
    (values, vectors)
}

/// Energy range (min, max) of each magnetic band over a k_grid x k_grid
/// sample of the Brillouin zone, energy_shift included, ascending.
pub fn bloch_band_edges(spec: &ModelSpec, k_grid: usize) -> Result<Vec<(f64, f64)>> {
    require_oracle_spec(spec)?;
    if k_grid < MIN_K_GRID {
        return Err(CoreError::KGridTooCoarse(k_grid));
    }
    let q = spec.flux_q as usize;
    let mut edges = vec![(f64::INFINITY, f64::NEG_INFINITY); q];
    for i in 0..k_grid {
        for j in 0..k_grid {
            let k1 = 2.0 * PI / spec.flux_q as f64 * i as f64 / k_grid as f64;
            let k2 = 2.0 * PI * j as f64 / k_grid as f64;
            let h = bloch_hamiltonian(spec.flux_p, spec.flux_q, k1, k2);
            let (vals, _) = sorted_eigen(&h);
            for (r, &v) in vals.iter().enumerate() {
                edges[r].0 = edges[r].0.min(v + spec.energy_shift);
                edges[r].1 = edges[r].1.max(v + spec.energy_shift);
            }
        }
    }
    Ok(edges)
}

/// Midpoint of the gap between bands `below` and `below + 1` (1-based
/// band count below the gap). Errors if the bands overlap on the grid.
pub fn band_gap_midpoint(spec: &ModelSpec, below: usize, k_grid: usize) -> Result<f64> {
    let edges = bloch_band_edges(spec, k_grid)?;
    if below == 0 || below >= edges.len() {
        return Err(CoreError::BadBandCount {
            q: edges.len(),
            got: below,
        });
    }
    let top = edges[below - 1].1;
    let bottom = edges[below].0;
    if !(top < bottom) {
        return Err(CoreError::BandsTouch {
            lower: below,
            upper: below + 1,
            gap: bottom - top,
        });
    }
    Ok(0.5 * (top + bottom))
}

/// Chern number of the lowest `filled` magnetic bands by plaquette link
/// variables on the discretized Brillouin zone:
///   U_a(k) = det(Psi(k)^dagger Psi(k + e_a)),
///   F(k) = Arg[ U_1(k + e_2) U_2(k) / (U_1(k) U_2(k + e_1)) ],
///   Ch = sum F / 2 pi.
/// The plaquette orientation fixes the sign convention; it is chosen so
/// the oracle agrees with the real-space trace formula with switches on
/// x1 and x2 in that order (pinned by the cross-check tests here and in
/// the chern module). The sum is an exact integer for any grid fine
/// enough that no plaquette angle hits pi; a nonzero fractional part
/// reports as a numerical failure, never rounds quietly.
pub fn bloch_chern_oracle(spec: &ModelSpec, filled: usize, k_grid: usize) -> Result<i64> {
    require_oracle_spec(spec)?;
    if k_grid < MIN_K_GRID {
        return Err(CoreError::KGridTooCoarse(k_grid));
    }
    let q = spec.flux_q as usize;
    if filled == 0 || filled > q {
        return Err(CoreError::BadBandCount { q, got: filled });
    }

    let mut occ: Vec<Vec<DMatrix<Complex64>>> = Vec::with_capacity(k_grid);
    let mut min_gap = f64::INFINITY;
    for i in 0..k_grid {
        let mut row = Vec::with_capacity(k_grid);
        for j in 0..k_grid {
            let k1 = 2.0 * PI / spec.flux_q as f64 * i as f64 / k_grid as f64;
            let k2 = 2.0 * PI * j as f64 / k_grid as f64;
            let h = bloch_hamiltonian(spec.flux_p, spec.flux_q, k1, k2);
            let (vals, vecs) = sorted_eigen(&h);
            if filled < q {
                min_gap = min_gap.min(vals[filled] - vals[filled - 1]);
            }
            row.push(vecs.view((0, 0), (q, filled)).clone_owned());
        }
        occ.push(row);
    }
    if filled < q && min_gap <= 1e-9 {
        return Err(CoreError::BandsTouch {
            lower: filled,
            upper: filled + 1,
            gap: min_gap,
        });
    }

    // The Landau-gauge Bloch matrix is not periodic over the magnetic
    // Brillouin zone: H(k1 + 2 pi / q, k2) = D H(k1, k2) D^dagger with
    // D = diag(exp(-i 2 pi m / q)). Links that wrap in k1 must carry D so
    // the occupied frame is single-valued on the torus; k2 wraps exactly.
    let boundary = DMatrix::<Complex64>::from_fn(q, q, |m, mm| {
        if m == mm {
            Complex64::from_polar(1.0, -2.0 * PI * m as f64 / q as f64)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let frame = |i: usize, j: usize| -> DMatrix<Complex64> {
        let base = &occ[i % k_grid][j % k_grid];
        if i == k_grid {
            &boundary * base
        } else {
            base.clone()
        }
    };

    let link = |a: &DMatrix<Complex64>, b: &DMatrix<Complex64>| -> Result<Complex64> {
        let u = (a.adjoint() * b).determinant();
        if u.norm() < 1e-12 {
            return Err(CoreError::Numerics(
                "vanishing link variable on the k-grid".to_owned(),
            ));
        }
        Ok(u)
    };

    let mut total = 0.0f64;
    for i in 0..k_grid {
        for j in 0..k_grid {
            let f00 = frame(i, j);
            let f10 = frame(i + 1, j);
            let f01 = frame(i, j + 1);
            let f11 = frame(i + 1, j + 1);
            let u1 = link(&f00, &f10)?;
            let u2_right = link(&f10, &f11)?;
            let u1_top = link(&f01, &f11)?;
            let u2 = link(&f00, &f01)?;
            let plaquette = u1_top * u2 * (u1 * u2_right).conj();
            total += plaquette.arg();
        }
    }
    let ch = total / (2.0 * PI);
    let rounded = ch.round();
    if (ch - rounded).abs() > 1e-6 {
        return Err(CoreError::Numerics(format!(
            "plaquette sum {ch} is not an integer"
        )));
    }
    Ok(rounded as i64)
}
