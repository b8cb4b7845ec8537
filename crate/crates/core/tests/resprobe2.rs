// temporary: dump the bad realization for an external solver check
use mobgap_core::ensemble::realization_seed;
use mobgap_core::{build_hamiltonian, ModelKind, ModelSpec};

#[test]
fn dump_bad_realization() {
    let spec = ModelSpec {
        kind: ModelKind::Anderson,
        d: 1,
        side: 101,
        n_internal: 1,
        flux_p: 0,
        flux_q: 1,
        disorder_w: 8.0,
        seed: realization_seed(1, 63),
        energy_shift: 0.0,
        hoppings: vec![],
    };
    let h = build_hamiltonian(&spec).unwrap();
    std::fs::write("/tmp/bad_h.txt", h.to_dump_string()).unwrap();
    // eigenvalues from nalgebra for comparison
    let se = h.data().clone().symmetric_eigen();
    let mut vals: Vec<f64> = se.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let txt: String = vals.iter().map(|v| format!("{v:.15e}\n")).collect();
    std::fs::write("/tmp/bad_h_nalgebra_vals.txt", txt).unwrap();
    println!("dumped");
}
