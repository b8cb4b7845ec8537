use crate::error::{CoreError, Result};
use crate::lattice::{add, LatticeBox};
use crate::operator::BlockOperator;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Declarative description of a tight-binding Hamiltonian on a box.
///
/// The same spec always builds the same operator, bit for bit: each site's
/// disorder value is drawn from its own counter-based stream keyed by
/// (seed, site index), so the fill order and thread count are irrelevant.
///
/// TOML keys: `kind`, `d`, `L`, `N`, `flux_p`, `flux_q`, `disorder_w`,
/// `seed`, `energy_shift`, and (for `kind = "custom"`) `hoppings`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub d: usize,
    #[serde(rename = "L")]
    pub side: usize,
    #[serde(rename = "N", default = "one_internal")]
    pub n_internal: usize,
    /// Magnetic flux per plaquette is flux_p / flux_q (hofstadter only).
    #[serde(default)]
    pub flux_p: i64,
    #[serde(default = "unit_q")]
    pub flux_q: i64,
    /// On-site disorder is uniform on [-W/2, W/2) times the identity.
    #[serde(default)]
    pub disorder_w: f64,
    #[serde(default)]
    pub seed: u64,
    /// Constant added to the diagonal after everything else.
    #[serde(default)]
    pub energy_shift: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hoppings: Vec<CustomHopping>,
}

fn one_internal() -> usize {
    1
}

fn unit_q() -> i64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Unit nearest-neighbor hopping with a Peierls phase exp(i 2 pi (p/q) x1)
    /// on bonds in the x2 direction (Landau gauge). Two-dimensional only.
    Hofstadter,
    /// Unit nearest-neighbor hopping; disorder does the rest.
    Anderson,
    /// Hoppings given explicitly by `hoppings`.
    Custom,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Hofstadter => "hofstadter",
            ModelKind::Anderson => "anderson",
            ModelKind::Custom => "custom",
        })
    }
}

/// One hopping family for `kind = "custom"`: for every site x with
/// x + offset in the box, the block B is added at (x + offset, x) and its
/// adjoint at (x, x + offset). A zero offset instead adds (B + B^dagger)/2
/// once, so the result is hermitian no matter what is listed.
///
/// `entries` holds the N x N block row-major as [re, im] pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomHopping {
    pub offset: [i64; 2],
    pub entries: Vec<[f64; 2]>,
}

impl CustomHopping {
    fn block(&self, n: usize) -> Result<DMatrix<Complex64>> {
        if self.entries.len() != n * n {
            return Err(CoreError::HoppingBlockShape {
                expected: n * n,
                got: self.entries.len(),
            });
        }
        Ok(DMatrix::from_fn(n, n, |a, b| {
            let [re, im] = self.entries[a * n + b];
            Complex64::new(re, im)
        }))
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d > 2 {
            return Err(CoreError::InvalidDimension(self.d));
        }
        if self.side == 0 || self.side % 2 == 0 {
            return Err(CoreError::InvalidSide(self.side));
        }
        if self.n_internal == 0 {
            return Err(CoreError::InvalidInternalDim);
        }
        if self.flux_q < 1 || gcd(self.flux_p.unsigned_abs(), self.flux_q as u64) != 1 {
            return Err(CoreError::InvalidFlux {
                p: self.flux_p,
                q: self.flux_q,
            });
        }
        if !(self.disorder_w >= 0.0) || !self.disorder_w.is_finite() {
            return Err(CoreError::InvalidDisorderWidth(self.disorder_w));
        }
        if self.kind == ModelKind::Hofstadter && self.d != 2 {
            return Err(CoreError::WrongModelDimension {
                kind: "hofstadter".to_owned(),
                need: 2,
                got: self.d,
            });
        }
        for hop in &self.hoppings {
            let max = self.side as i64 - 1;
            if hop.offset[0].abs() > max
                || hop.offset[1].abs() > max
                || (self.d == 1 && hop.offset[1] != 0)
            {
                return Err(CoreError::HoppingOutOfRange {
                    offset: hop.offset,
                    side: self.side,
                });
            }
            hop.block(self.n_internal)?;
        }
        Ok(())
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CoreError::Spec(e.to_string()))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: ModelSpec = toml::from_str(text).map_err(|e| CoreError::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Flux per plaquette as a float.
    pub fn alpha(&self) -> f64 {
        self.flux_p as f64 / self.flux_q as f64
    }
}

/// Uniform draw on [-1/2, 1/2) that depends only on (seed, site index).
fn site_disorder_unit(seed: u64, site_index: u64) -> f64 {
    let stream = seed ^ (site_index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    rng.gen::<f64>() - 0.5
}

pub fn build_hamiltonian(spec: &ModelSpec) -> Result<BlockOperator> {
    spec.validate()?;
    let lattice = LatticeBox::new(spec.d, spec.side)?;
    let n = spec.n_internal;
    let mut h = BlockOperator::zeros(lattice.clone(), n)?;
    let eye = DMatrix::from_diagonal_element(n, n, Complex64::new(1.0, 0.0));

    match spec.kind {
        ModelKind::Anderson | ModelKind::Hofstadter => {
            let two_pi_alpha = 2.0 * std::f64::consts::PI * spec.alpha();
            for (xi, x) in lattice.sites().enumerate() {
                for axis in 0..spec.d {
                    let step = if axis == 0 { [1, 0] } else { [0, 1] };
                    let y = add(x, step);
                    let Some(yi) = lattice.index_of(y) else {
                        continue;
                    };
                    let amp = if spec.kind == ModelKind::Hofstadter && axis == 1 {
                        Complex64::from_polar(1.0, two_pi_alpha * x[0] as f64)
                    } else {
                        Complex64::new(1.0, 0.0)
                    };
                    let block = eye.map(|v| v * amp);
                    h.set_block(yi, xi, &block);
                    h.set_block(xi, yi, &block.adjoint());
                }
            }
        }
        ModelKind::Custom => {
            for hop in &spec.hoppings {
                let block = hop.block(n)?;
                if hop.offset == [0, 0] {
                    let sym = (&block + block.adjoint()).map(|v| v * 0.5);
                    for xi in 0..lattice.n_sites() {
                        h.add_to_block(xi, xi, &sym);
                    }
                } else {
                    let adj = block.adjoint();
                    for (xi, x) in lattice.sites().enumerate() {
                        let y = add(x, hop.offset);
                        let Some(yi) = lattice.index_of(y) else {
                            continue;
                        };
                        h.add_to_block(yi, xi, &block);
                        h.add_to_block(xi, yi, &adj);
                    }
                }
            }
        }
    }

    if spec.disorder_w > 0.0 {
        for xi in 0..lattice.n_sites() {
            let v = spec.disorder_w * site_disorder_unit(spec.seed, xi as u64);
            let block = eye.map(|e| e * v);
            h.add_to_block(xi, xi, &block);
        }
    }
    if spec.energy_shift != 0.0 {
        for xi in 0..lattice.n_sites() {
            let block = eye.map(|e| e * spec.energy_shift);
            h.add_to_block(xi, xi, &block);
        }
    }

    h.assert_hermitian(1e-12)?;
    Ok(h)
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}
