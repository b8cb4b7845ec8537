// Temporary calibration probe. Prints site-resolved Chern marker profiles
// so the interior trace window can be frozen. Deleted before release.

use mobgap_core::{
    band_gap_midpoint, bloch_chern_oracle, build_hamiltonian, diagonalize, fermi_projection,
    LatticeBox, ModelKind, ModelSpec, SwitchFunction,
};
use num_complex::Complex64;

fn marker_profile(
    spec: &ModelSpec,
    e_f: f64,
    switch: &SwitchFunction,
) -> (LatticeBox, Vec<f64>, Vec<f64>) {
    let h = build_hamiltonian(spec).unwrap();
    let dec = diagonalize(&h).unwrap();
    let p = fermi_projection(&dec, e_f).unwrap();
    let d1 = p.nc_derivative(1, switch).unwrap();
    let d2 = p.nc_derivative(2, switch).unwrap();
    let a = p.data() * d1.data() * d2.data();
    let b = p.data() * d2.data() * d1.data();
    let lat = p.lattice().clone();
    let n = p.n_internal();
    let mut out = vec![0.0; lat.n_sites()];
    let mut out_im = vec![0.0; lat.n_sites()];
    for s in 0..lat.n_sites() {
        let mut t = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let i = s * n + k;
            t += a[(i, i)] - b[(i, i)];
        }
        let v = Complex64::new(0.0, 2.0 * std::f64::consts::PI) * t;
        out[s] = v.re;
        out_im[s] = v.im;
    }
    (lat, out, out_im)
}

fn window_sums(lat: &LatticeBox, m: &[f64]) -> Vec<(i64, f64)> {
    let r = lat.radius() as i64;
    (0..=r)
        .map(|w| {
            let mut s = 0.0;
            for (idx, x) in lat.sites().enumerate() {
                if x.iter().all(|&c| c.abs() <= w) {
                    s += m[idx];
                }
            }
            (w, s)
        })
        .collect()
}

fn sum_window(lat: &LatticeBox, m: &[f64], w: i64) -> f64 {
    let mut s = 0.0;
    for (idx, x) in lat.sites().enumerate() {
        if x.iter().all(|&c| c.abs() <= w) {
            s += m[idx];
        }
    }
    s
}

#[test]
fn probe_zero_flux_sea() {
    use mobgap_core::{chern_of_hamiltonian, SwitchFunction};
    for (side, e_f) in [(9usize, -1.5f64), (13, -1.5), (21, -1.5), (21, -2.5)] {
        let spec = ModelSpec {
            kind: ModelKind::Hofstadter,
            d: 2,
            side,
            n_internal: 1,
            flux_p: 0,
            flux_q: 1,
            disorder_w: 0.0,
            seed: 0,
            energy_shift: 0.0,
            hoppings: vec![],
        };
        let h = build_hamiltonian(&spec).unwrap();
        let r = chern_of_hamiltonian(&h, e_f, &SwitchFunction::sharp()).unwrap();
        println!(
            "zero flux L={} E_F={}: raw={:+.6} rounded={} decided={}",
            side, e_f, r.raw, r.rounded, r.decided
        );
    }
}

#[test]
fn probe_sign_cases_and_imag() {
    // window rule under consideration: w* = round(0.6 * radius)
    let cases: Vec<(i64, i64, usize, usize, &str)> = vec![
        (1, 3, 1, 21, "1/3 first gap"),
        (1, 3, 2, 21, "1/3 second gap"),
        (-1, 3, 1, 21, "-1/3 first gap"),
        (1, 5, 1, 21, "1/5 first gap"),
    ];
    for (p, q, filled, side, label) in cases {
        let spec = ModelSpec {
            kind: ModelKind::Hofstadter,
            d: 2,
            side,
            n_internal: 1,
            flux_p: p,
            flux_q: q,
            disorder_w: 0.0,
            seed: 7,
            energy_shift: 0.0,
            hoppings: vec![],
        };
        let e_f = band_gap_midpoint(&spec, filled, 36).unwrap();
        let oracle = bloch_chern_oracle(&spec, filled, 36).unwrap();
        let r = spec.side as i64 / 2;
        let w = (6 * r + 5) / 10;
        for sw in [SwitchFunction::sharp(), SwitchFunction::smooth_tanh()] {
            let (lat, m, mi) = marker_profile(&spec, e_f, &sw);
            let raw = sum_window(&lat, &m, w);
            let imag = sum_window(&lat, &mi, w);
            println!(
                "{} switch={} oracle(current orientation)={} windowed raw={:+.6} imag={:+.3e}",
                label,
                sw.id(),
                oracle,
                raw,
                imag
            );
        }
    }
}

#[test]
fn probe_marker_windows() {
    for (side, kgrid) in [(21usize, 36usize), (31, 36)] {
        let spec = ModelSpec {
            kind: ModelKind::Hofstadter,
            d: 2,
            side,
            n_internal: 1,
            flux_p: 1,
            flux_q: 3,
            disorder_w: 0.0,
            seed: 7,
            energy_shift: 0.0,
            hoppings: vec![],
        };
        let e_f = band_gap_midpoint(&spec, 1, kgrid).unwrap();
        let oracle = bloch_chern_oracle(&spec, 1, kgrid).unwrap();
        for sw in [SwitchFunction::sharp(), SwitchFunction::smooth_tanh()] {
            let (lat, m, _) = marker_profile(&spec, e_f, &sw);
            println!(
                "L={} switch={} oracle={} window sums:",
                side,
                sw.id(),
                oracle
            );
            for (w, s) in window_sums(&lat, &m) {
                println!("  |x|inf<={:2}  sum={:+.6}", w, s);
            }
        }
    }
}

#[test]
fn probe_marker_windows_disordered() {
    let spec = ModelSpec {
        kind: ModelKind::Hofstadter,
        d: 2,
        side: 21,
        n_internal: 1,
        flux_p: 1,
        flux_q: 3,
        disorder_w: 0.5,
        seed: 11,
        energy_shift: 0.0,
        hoppings: vec![],
    };
    let e_f = -1.3660254037844377;
    for sw in [SwitchFunction::sharp(), SwitchFunction::smooth_tanh()] {
        let (lat, m, _) = marker_profile(&spec, e_f, &sw);
        println!("disordered W=0.5 switch={} window sums:", sw.id());
        for (w, s) in window_sums(&lat, &m) {
            println!("  |x|inf<={:2}  sum={:+.6}", w, s);
        }
    }
}

#[test]
fn probe_marker_windows_one_fifth() {
    let spec = ModelSpec {
        kind: ModelKind::Hofstadter,
        d: 2,
        side: 21,
        n_internal: 1,
        flux_p: 1,
        flux_q: 5,
        disorder_w: 0.0,
        seed: 7,
        energy_shift: 0.0,
    hoppings: vec![],
    };
    let e_f = band_gap_midpoint(&spec, 1, 40).unwrap();
    let oracle = bloch_chern_oracle(&spec, 1, 40).unwrap();
    let sw = SwitchFunction::sharp();
    let (lat, m, _) = marker_profile(&spec, e_f, &sw);
    println!("1/5 oracle={} window sums:", oracle);
    for (w, s) in window_sums(&lat, &m) {
        println!("  |x|inf<={:2}  sum={:+.6}", w, s);
    }
}

#[test]
fn probe_localization_thresholds() {
    use mobgap_core::localization::{
        b1_sup_bound, bound_matrix_samples, greens_fractional_energy_integral,
        FractionalMomentConfig,
    };
    use mobgap_core::fit::{fit_decay, FitKind};
    use mobgap_core::spectral::{diagonalize, EnergyWindow};
    use mobgap_core::sule::sule_analysis;
    use mobgap_core::{build_hamiltonian, DecaySample};

    let anderson = |side: usize, w: f64, seed: u64| ModelSpec {
        kind: ModelKind::Anderson,
        d: 1,
        side,
        n_internal: 1,
        flux_p: 0,
        flux_q: 1,
        disorder_w: w,
        seed,
        energy_shift: 0.0,
        hoppings: vec![],
    };

    // b1 decay at W=5, L=101, window [-1, 1]
    for seed in [1u64, 2, 3] {
        let spec = anderson(101, 5.0, seed);
        let dec = diagonalize(&build_hamiltonian(&spec).unwrap()).unwrap();
        let window = EnergyWindow::new(-1.0, 1.0).unwrap();
        let b = b1_sup_bound(&dec, &window).unwrap();
        let fit = fit_decay(
            &bound_matrix_samples(dec.lattice(), &b),
            FitKind::Exponential,
            false,
        )
        .unwrap();
        println!(
            "b1 W=5 L=101 seed={}: C={:.4} mu={:.4} +- {:.4} resid={:.3}",
            seed, fit.amplitude, fit.rate, fit.rate_stderr, fit.residual
        );
    }

    // greens polynomial power: scan s and L at W=5
    for (side, s) in [(61usize, 0.5f64), (61, 0.9), (101, 0.5), (101, 0.9)] {
      for seed in [1u64, 2, 3] {
        let spec = anderson(side, 5.0, seed);
        let dec = diagonalize(&build_hamiltonian(&spec).unwrap()).unwrap();
        let cfg = FractionalMomentConfig::new(s, EnergyWindow::new(-0.5, 0.5).unwrap()).unwrap();
        let lat = dec.lattice().clone();
        let center = lat.center();
        let cx = lat.site(center);
        let mut samples = Vec::new();
        for y in 0..lat.n_sites() {
            let sy = lat.site(y);
            let v = greens_fractional_energy_integral(&dec, center, y, &cfg).unwrap();
            samples.push(DecaySample::new(vec![cx[0]], vec![sy[0]], v));
        }
        let fit = fit_decay(&samples, FitKind::Polynomial, false).unwrap();
        println!(
            "greens W=5 L={} s={} seed={}: D={:.4} alpha={:.4} +- {:.4} zeros={}",
            side, s, seed, fit.amplitude, fit.rate, fit.rate_stderr, fit.n_zero_excluded
        );
      }
    }

    // SULE at W=5, L=201, window [-0.5, 0.5]
    for seed in [1u64, 2, 3] {
        let spec = anderson(201, 5.0, seed);
        let dec = diagonalize(&build_hamiltonian(&spec).unwrap()).unwrap();
        let window = EnergyWindow::new(-0.5, 0.5).unwrap();
        let rep = sule_analysis(&dec, &window).unwrap();
        println!(
            "sule W=5 L=201 seed={}: n={} joint mu={:.4} median={:.4} c0={:.4}",
            seed, rep.n_vectors, rep.joint_fit.rate, rep.median_rate, rep.center_growth_c0
        );
    }

    // certificate numbers for Anderson W=8, L=101 and metallic chain
    for seed in [1u64, 2, 3] {
        let spec = anderson(101, 8.0, seed);
        let dec = diagonalize(&build_hamiltonian(&spec).unwrap()).unwrap();
        let window = EnergyWindow::new(-0.5, 0.5).unwrap();
        let b = b1_sup_bound(&dec, &window).unwrap();
        let fit = fit_decay(
            &bound_matrix_samples(dec.lattice(), &b),
            FitKind::Exponential,
            false,
        )
        .unwrap();
        let deg = mobgap_core::max_degeneracy(&dec, &window, 1e-8).unwrap();
        println!(
            "cert W=8 L=101 seed={}: C={:.4} mu={:.4} deg={} states={}",
            seed,
            fit.amplitude,
            fit.rate,
            deg,
            dec.indices_in(&window).len()
        );
    }
}

#[test]
fn probe_ensemble_significance() {
    use mobgap_core::ensemble::{
        ensemble_b1_decay, ensemble_fractional_moment, ensemble_second_moment,
    };
    use mobgap_core::localization::FractionalMomentConfig;
    use mobgap_core::spectral::EnergyWindow;

    let spec = ModelSpec {
        kind: ModelKind::Anderson,
        d: 1,
        side: 101,
        n_internal: 1,
        flux_p: 0,
        flux_q: 1,
        disorder_w: 8.0,
        seed: 1,
        energy_shift: 0.0,
        hoppings: vec![],
    };
    let cfg = FractionalMomentConfig::new(0.3, EnergyWindow::new(-0.5, 0.5).unwrap()).unwrap();
    let rep = ensemble_fractional_moment(&spec, 0.0, &cfg, 100).unwrap();
    println!(
        "fmm W=8 L=101 s=0.3 n=100: C={:.4} mu={:.4} +- {:.4} signif={:.1}",
        rep.fit.amplitude,
        rep.fit.rate,
        rep.fit.rate_stderr,
        rep.fit.rate / rep.fit.rate_stderr
    );

    let rep2 = ensemble_second_moment(&spec, 0.0, &cfg.eta_grid, 100).unwrap();
    println!(
        "second W=8: mu={:.4} +- {:.4} signif={:.1}",
        rep2.fit.rate,
        rep2.fit.rate_stderr,
        rep2.fit.rate / rep2.fit.rate_stderr
    );

    let window = EnergyWindow::new(-0.5, 0.5).unwrap();
    let rep3 = ensemble_b1_decay(&spec, &window, 30).unwrap();
    println!(
        "b1 ens W=8 n=30: mu={:.4} +- {:.4} signif={:.1}",
        rep3.fit.rate,
        rep3.fit.rate_stderr,
        rep3.fit.rate / rep3.fit.rate_stderr
    );

    // Jensen: sigma = 0.15 vs s = 0.3
    let cfg_half = FractionalMomentConfig::new(0.15, EnergyWindow::new(-0.5, 0.5).unwrap()).unwrap();
    let rep_half = ensemble_fractional_moment(&spec, 0.0, &cfg_half, 100).unwrap();
    let mut worst = f64::NEG_INFINITY;
    for (p, q) in rep_half.pairs.iter().zip(&rep.pairs) {
        let margin = p.mean - (q.mean.powf(0.5) + 3.0 * p.stderr);
        worst = worst.max(margin);
    }
    println!("jensen worst margin (should be <= 0): {:.3e}", worst);
}
