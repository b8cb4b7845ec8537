use crate::error::{CoreError, Result};
use crate::operator::BlockOperator;
use crate::spectral::{SpectralDecomposition, COLLISION_TOL};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1]. Roots of the Legendre
/// polynomial by Newton iteration from the Chebyshev initial guess;
/// exact for polynomials of degree 2n - 1.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(CoreError::TooFewNodes { need: 1, got: 0 });
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let dx = -p / d;
            x += dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    nodes.reverse();
    weights.reverse();
    Ok((nodes, weights))
}

/// (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// One straight contour segment with a composite Gauss-Legendre rule: the
/// segment is cut into ceil(length) panels of at most unit length and each
/// panel carries the full rule, so the node density never drops below
/// rule-size nodes per unit arc length.
fn segment_nodes(
    z0: Complex64,
    z1: Complex64,
    rule: &(Vec<f64>, Vec<f64>),
    out: &mut Vec<(Complex64, Complex64)>,
) {
    let length = (z1 - z0).norm();
    let panels = length.ceil().max(1.0) as usize;
    for p in 0..panels {
        let a = z0 + (z1 - z0) * (p as f64 / panels as f64);
        let b = z0 + (z1 - z0) * ((p + 1) as f64 / panels as f64);
        let mid = (a + b) * 0.5;
        let half = (b - a) * 0.5;
        for (x, w) in rule.0.iter().zip(&rule.1) {
            out.push((mid + half * *x, half * *w));
        }
    }
}

/// All quadrature nodes (z_j, dz_j) of the counter-clockwise rectangle
/// with corners lambda +- i and -radius - 1 +- i.
fn rectangle_nodes(
    lambda: f64,
    radius: f64,
    nodes_per_unit: usize,
) -> Result<Vec<(Complex64, Complex64)>> {
    let rule = gauss_legendre(nodes_per_unit)?;
    let left = -radius - 1.0;
    let corners = [
        Complex64::new(left, -1.0),
        Complex64::new(lambda, -1.0),
        Complex64::new(lambda, 1.0),
        Complex64::new(left, 1.0),
    ];
    let mut nodes = Vec::new();
    for k in 0..4 {
        segment_nodes(corners[k], corners[(k + 1) % 4], &rule, &mut nodes);
    }
    Ok(nodes)
}

/// Riesz projection below `lambda` by contour quadrature: the resolvent is
/// integrated counter-clockwise around the rectangle enclosing all
/// spectrum left of lambda, with corners lambda +- i and -||H|| - 1 +- i.
///
/// The resolvent enters through the eigendecomposition, so the quadrature
/// reduces to one scalar weight per eigenvalue:
/// q_n = (i / 2 pi) sum_j w_j / (lambda_n - z_j), P = V diag(q) V^dagger.
/// A dedicated test pins this against the literal node-by-node inverse.
///
/// Accuracy degrades as lambda approaches the spectrum; within
/// COLLISION_TOL it is an error.
pub fn contour_projection(
    dec: &SpectralDecomposition,
    lambda: f64,
    nodes_per_unit: usize,
) -> Result<BlockOperator> {
    if nodes_per_unit == 0 {
        return Err(CoreError::TooFewNodes { need: 1, got: 0 });
    }
    let dist = dec.spectral_distance(Complex64::new(lambda, 0.0));
    if dist < COLLISION_TOL {
        return Err(CoreError::OnSpectrum {
            z: Complex64::new(lambda, 0.0),
            dist,
        });
    }
    let radius = dec.spectral_radius();
    let dim = dec.dim();
    let zero = DMatrix::<Complex64>::zeros(dim, dim);
    if lambda <= -radius - 1.0 {
        return BlockOperator::from_dense(dec.lattice().clone(), dec.n_internal(), zero);
    }

    let nodes = rectangle_nodes(lambda, radius, nodes_per_unit)?;
    let scale = Complex64::new(0.0, 1.0 / (2.0 * PI));
    let weights: Vec<Complex64> = dec
        .eigenvalues()
        .iter()
        .map(|&l| {
            let mut q = Complex64::new(0.0, 0.0);
            for &(z, dz) in &nodes {
                q += dz / (Complex64::new(l, 0.0) - z);
            }
            q * scale
        })
        .collect();

    let mut scaled = dec.eigenvectors().clone();
    for (n, &q) in weights.iter().enumerate() {
        let mut col = scaled.view_mut((0, n), (dim, 1));
        col *= q;
    }
    let p = &scaled * dec.eigenvectors().adjoint();
    BlockOperator::from_dense(dec.lattice().clone(), dec.n_internal(), p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeBox;
    use crate::model::{build_hamiltonian, ModelKind, ModelSpec};
    use crate::operator::max_block_diff;
    use crate::spectral::{diagonalize, fermi_projection};
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(5).unwrap();
        for k in 0..=9usize {
            let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
            let want = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert_relative_eq!(got, want, epsilon = 1e-13, max_relative = 1e-13);
        }
    }

    #[test]
    fn gauss_legendre_handles_large_rules() {
        let (x, w) = gauss_legendre(200).unwrap();
        assert_eq!(x.len(), 200);
        let total: f64 = w.iter().sum();
        assert_relative_eq!(total, 2.0, epsilon = 1e-12);
        for win in x.windows(2) {
            assert!(win[1] > win[0], "nodes must be increasing");
        }
        let exp: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.exp()).sum();
        assert_relative_eq!(exp, 1.0f64.exp() - (-1.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn projects_a_two_level_system() {
        let lattice = LatticeBox::new(1, 1).unwrap();
        let mut h = BlockOperator::zeros(lattice, 2).unwrap();
        h.data_mut()[(0, 0)] = Complex64::new(-1.0, 0.0);
        h.data_mut()[(1, 1)] = Complex64::new(1.0, 0.0);
        let dec = diagonalize(&h).unwrap();
        let p = contour_projection(&dec, 0.0, 24).unwrap();
        assert!((p.data()[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        assert!(p.data()[(1, 1)].norm() < 1e-10);
        assert!(p.data()[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn matches_the_node_by_node_inverse() {
        // The factored quadrature must agree with the definition: the same
        // nodes applied to literal resolvent inverses.
        let h = build_hamiltonian(&ModelSpec {
            kind: ModelKind::Anderson,
            d: 1,
            side: 5,
            n_internal: 1,
            flux_p: 0,
            flux_q: 1,
            disorder_w: 0.7,
            seed: 11,
            energy_shift: 0.0,
            hoppings: vec![],
        })
        .unwrap();
        let dec = diagonalize(&h).unwrap();
        let lambda = 0.4;
        let npu = 12;
        let p_fast = contour_projection(&dec, lambda, npu).unwrap();

        let nodes = rectangle_nodes(lambda, dec.spectral_radius(), npu).unwrap();
        let dim = h.dim();
        let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
        for (z, dz) in nodes {
            let shifted = h.data().clone() - DMatrix::from_diagonal_element(dim, dim, z);
            let inv = shifted.lu().try_inverse().expect("z off the spectrum");
            acc += inv.map(|v| v * dz);
        }
        let p_slow = acc.map(|v| v * Complex64::new(0.0, 1.0 / (2.0 * PI)));
        assert!(
            (p_fast.data() - &p_slow).norm() < 1e-10,
            "factored and literal quadrature disagree: {}",
            (p_fast.data() - &p_slow).norm()
        );
    }

    #[test]
    fn converges_to_the_fermi_projection() {
        let h = build_hamiltonian(&ModelSpec {
            kind: ModelKind::Anderson,
            d: 1,
            side: 9,
            n_internal: 1,
            flux_p: 0,
            flux_q: 1,
            disorder_w: 1.0,
            seed: 3,
            energy_shift: 0.0,
            hoppings: vec![],
        })
        .unwrap();
        let dec = diagonalize(&h).unwrap();
        let lambda = 0.25;
        assert!(dec.spectral_distance(Complex64::new(lambda, 0.0)) > 0.01);
        let exact = fermi_projection(&dec, lambda).unwrap();
        let mut errors = Vec::new();
        for npu in [2, 4, 8] {
            let p = contour_projection(&dec, lambda, npu).unwrap();
            errors.push(max_block_diff(&p, &exact).unwrap());
        }
        assert!(
            errors[0] > errors[1] && errors[1] > errors[2],
            "refinement not monotone: {errors:?}"
        );
        let fine = contour_projection(&dec, lambda, 40).unwrap();
        assert!(max_block_diff(&fine, &exact).unwrap() < 1e-9);
    }

    #[test]
    fn level_below_everything_gives_zero() {
        let h = build_hamiltonian(&ModelSpec {
            kind: ModelKind::Anderson,
            d: 1,
            side: 5,
            n_internal: 1,
            flux_p: 0,
            flux_q: 1,
            disorder_w: 0.0,
            seed: 0,
            energy_shift: 0.0,
            hoppings: vec![],
        })
        .unwrap();
        let dec = diagonalize(&h).unwrap();
        let p = contour_projection(&dec, -50.0, 8).unwrap();
        assert_eq!(p.frobenius_norm(), 0.0);
    }

    #[test]
    fn rejects_levels_on_the_spectrum() {
        let lattice = LatticeBox::new(1, 1).unwrap();
        let mut h = BlockOperator::zeros(lattice, 2).unwrap();
        h.data_mut()[(0, 0)] = Complex64::new(-1.0, 0.0);
        h.data_mut()[(1, 1)] = Complex64::new(1.0, 0.0);
        let dec = diagonalize(&h).unwrap();
        assert!(contour_projection(&dec, 1.0, 8).is_err());
        assert!(contour_projection(&dec, 0.0, 0).is_err());
    }
}
