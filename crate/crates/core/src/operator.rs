use crate::error::{CoreError, Result};
use crate::lattice::LatticeBox;
use crate::switch::SwitchFunction;
use nalgebra::{DMatrix, DMatrixView};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense operator on l^2(box) (x) C^N, stored as one matrix whose rows and
/// columns are grouped site-major: flat index = site * N + internal.
///
/// The block A_{xy} is the N x N sub-matrix coupling site y to site x.
/// Block norms are spectral norms; they are what all decay statements
/// are measured in.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    lattice: LatticeBox,
    n_internal: usize,
    data: DMatrix<Complex64>,
}

impl BlockOperator {
    pub fn zeros(lattice: LatticeBox, n_internal: usize) -> Result<Self> {
        if n_internal == 0 {
            return Err(CoreError::InvalidInternalDim);
        }
        let dim = lattice.n_sites() * n_internal;
        Ok(Self {
            lattice,
            n_internal,
            data: DMatrix::zeros(dim, dim),
        })
    }

    pub fn identity(lattice: LatticeBox, n_internal: usize) -> Result<Self> {
        let mut op = Self::zeros(lattice, n_internal)?;
        op.data.fill_with_identity();
        Ok(op)
    }

    pub fn from_dense(
        lattice: LatticeBox,
        n_internal: usize,
        data: DMatrix<Complex64>,
    ) -> Result<Self> {
        if n_internal == 0 {
            return Err(CoreError::InvalidInternalDim);
        }
        let dim = lattice.n_sites() * n_internal;
        if data.nrows() != dim || data.ncols() != dim {
            return Err(CoreError::ShapeMismatch(format!(
                "expected {dim}x{dim}, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self {
            lattice,
            n_internal,
            data,
        })
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.lattice
    }

    pub fn n_internal(&self) -> usize {
        self.n_internal
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut DMatrix<Complex64> {
        &mut self.data
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.lattice == other.lattice && self.n_internal == other.n_internal
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(CoreError::ShapeMismatch(format!(
                "(d={}, side={}, N={}) vs (d={}, side={}, N={})",
                self.lattice.d(),
                self.lattice.side(),
                self.n_internal,
                other.lattice.d(),
                other.lattice.side(),
                other.n_internal
            )))
        }
    }

    pub fn block(&self, x: usize, y: usize) -> DMatrixView<'_, Complex64> {
        let n = self.n_internal;
        self.data.view((x * n, y * n), (n, n))
    }

    pub fn set_block(&mut self, x: usize, y: usize, b: &DMatrix<Complex64>) {
        let n = self.n_internal;
        self.data.view_mut((x * n, y * n), (n, n)).copy_from(b);
    }

    pub fn add_to_block(&mut self, x: usize, y: usize, b: &DMatrix<Complex64>) {
        let n = self.n_internal;
        let mut view = self.data.view_mut((x * n, y * n), (n, n));
        view += b;
    }

    /// Spectral norm of the block coupling site y to site x.
    pub fn block_norm(&self, x: usize, y: usize) -> f64 {
        spectral_norm_view(self.block(x, y))
    }

    /// Matrix of all block norms, indexed by (site, site).
    pub fn block_norms(&self) -> DMatrix<f64> {
        let m = self.lattice.n_sites();
        DMatrix::from_fn(m, m, |x, y| self.block_norm(x, y))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(Self {
            lattice: self.lattice.clone(),
            n_internal: self.n_internal,
            data: &self.data + &other.data,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(Self {
            lattice: self.lattice.clone(),
            n_internal: self.n_internal,
            data: &self.data - &other.data,
        })
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(Self {
            lattice: self.lattice.clone(),
            n_internal: self.n_internal,
            data: &self.data * &other.data,
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        self.scale_complex(Complex64::new(s, 0.0))
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self {
            lattice: self.lattice.clone(),
            n_internal: self.n_internal,
            data: self.data.map(|v| v * s),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            lattice: self.lattice.clone(),
            n_internal: self.n_internal,
            data: self.data.adjoint(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    /// Largest block-norm deviation from A = A^dagger.
    pub fn hermiticity_defect(&self) -> f64 {
        let diff = &self.data - self.data.adjoint();
        let m = self.lattice.n_sites();
        let n = self.n_internal;
        let mut worst = 0.0f64;
        for x in 0..m {
            for y in x..m {
                let v = spectral_norm_view(diff.view((x * n, y * n), (n, n)));
                if v > worst {
                    worst = v;
                }
            }
        }
        worst
    }

    pub fn assert_hermitian(&self, tol: f64) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect <= tol {
            Ok(())
        } else {
            Err(CoreError::NotHermitian(defect))
        }
    }

    /// Operator 2-norm (largest singular value).
    pub fn operator_norm(&self) -> f64 {
        spectral_norm(&self.data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.norm()
    }

    /// Schur-test bound on the operator norm:
    /// max(sup_x sum_y ||A_xy||, sup_y sum_x ||A_xy||).
    pub fn holmgren_bound(&self) -> f64 {
        let norms = self.block_norms();
        let row = norms
            .row_iter()
            .map(|r| r.iter().sum::<f64>())
            .fold(0.0f64, f64::max);
        let col = norms
            .column_iter()
            .map(|c| c.iter().sum::<f64>())
            .fold(0.0f64, f64::max);
        row.max(col)
    }

    /// Non-commutative derivative -i [Lambda(X_axis), A]: the block at
    /// (x, y) is scaled by -i (Lambda(x_axis) - Lambda(y_axis)).
    /// `axis` is 1-based and must not exceed the lattice dimension.
    pub fn nc_derivative(&self, axis: usize, switch: &SwitchFunction) -> Result<Self> {
        let d = self.lattice.d();
        if axis == 0 || axis > d {
            return Err(CoreError::InvalidAxis { axis, d });
        }
        let m = self.lattice.n_sites();
        let n = self.n_internal;
        let lambda: Vec<f64> = (0..m)
            .map(|i| switch.eval(self.lattice.site(i)[axis - 1]))
            .collect();
        let mut out = self.clone();
        for x in 0..m {
            for y in 0..m {
                let factor = Complex64::new(0.0, -(lambda[x] - lambda[y]));
                let mut view = out.data.view_mut((x * n, y * n), (n, n));
                view *= factor;
            }
        }
        Ok(out)
    }

    /// Exact trace norm (sum of singular values).
    pub fn trace_norm_exact(&self) -> f64 {
        self.data.clone().singular_values().iter().sum()
    }

    /// Serialize to the plain-text dump format (`# blockop v1`).
    /// Zero entries are omitted; values are written with 17 significant
    /// digits so the round trip is bit-exact.
    pub fn to_dump_string(&self) -> String {
        let mut out = String::new();
        out.push_str("# blockop v1\n");
        out.push_str(&format!(
            "# d={} side={} n={}\n# row col re im\n",
            self.lattice.d(),
            self.lattice.side(),
            self.n_internal
        ));
        for i in 0..self.data.nrows() {
            for j in 0..self.data.ncols() {
                let v = self.data[(i, j)];
                if v != Complex64::new(0.0, 0.0) {
                    out.push_str(&format!("{i} {j} {:.16e} {:.16e}\n", v.re, v.im));
                }
            }
        }
        out
    }

    pub fn from_dump_str(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(l) if l.trim() == "# blockop v1" => {}
            other => {
                return Err(CoreError::DumpParse(format!(
                    "missing `# blockop v1` header, got {other:?}"
                )))
            }
        }
        let shape = lines
            .next()
            .ok_or_else(|| CoreError::DumpParse("missing shape line".to_owned()))?;
        let mut d = None;
        let mut side = None;
        let mut n = None;
        for tok in shape.trim_start_matches('#').split_whitespace() {
            if let Some((k, v)) = tok.split_once('=') {
                let parsed: usize = v
                    .parse()
                    .map_err(|_| CoreError::DumpParse(format!("bad shape value `{tok}`")))?;
                match k {
                    "d" => d = Some(parsed),
                    "side" => side = Some(parsed),
                    "n" => n = Some(parsed),
                    _ => {}
                }
            }
        }
        let (d, side, n) = match (d, side, n) {
            (Some(d), Some(side), Some(n)) => (d, side, n),
            _ => {
                return Err(CoreError::DumpParse(
                    "shape line must carry d=, side=, n=".to_owned(),
                ))
            }
        };
        let lattice = LatticeBox::new(d, side)?;
        let mut op = Self::zeros(lattice, n)?;
        let dim = op.dim();
        for line in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse_idx = |s: Option<&str>| -> Result<usize> {
                s.and_then(|t| t.parse().ok())
                    .ok_or_else(|| CoreError::DumpParse(format!("bad entry line `{line}`")))
            };
            let parse_val = |s: Option<&str>| -> Result<f64> {
                s.and_then(|t| t.parse().ok())
                    .ok_or_else(|| CoreError::DumpParse(format!("bad entry line `{line}`")))
            };
            let i = parse_idx(parts.next())?;
            let j = parse_idx(parts.next())?;
            let re = parse_val(parts.next())?;
            let im = parse_val(parts.next())?;
            if i >= dim || j >= dim {
                return Err(CoreError::DumpParse(format!(
                    "index ({i}, {j}) outside a {dim}x{dim} operator"
                )));
            }
            op.data[(i, j)] = Complex64::new(re, im);
        }
        Ok(op)
    }
}

/// Largest off-diagonal-aware deviation between two operators of equal
/// shape: max over site pairs of ||A_xy - B_xy||.
pub fn max_block_diff(a: &BlockOperator, b: &BlockOperator) -> Result<f64> {
    let diff = a.sub(b)?;
    let m = diff.lattice().n_sites();
    let mut worst = 0.0f64;
    for x in 0..m {
        for y in 0..m {
            worst = worst.max(diff.block_norm(x, y));
        }
    }
    Ok(worst)
}

/// Spectral norm of a dense complex matrix.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].norm();
    }
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

fn spectral_norm_view(v: DMatrixView<'_, Complex64>) -> f64 {
    if v.nrows() == 1 {
        return v[(0, 0)].norm();
    }
    v.clone_owned()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Hermitian operator with independently drawn blocks damped by
/// amplitude * exp(-rate * dist(x, y)). Entries are uniform on the complex
/// square [-1, 1]^2 before damping; the result is (M + M^dagger) / 2.
/// Fully determined by (shape, amplitude, rate, seed).
pub fn random_local(
    lattice: LatticeBox,
    n_internal: usize,
    amplitude: f64,
    rate: f64,
    seed: u64,
) -> Result<BlockOperator> {
    if rate <= 0.0 {
        return Err(CoreError::InvalidRate(rate));
    }
    let mut op = BlockOperator::zeros(lattice, n_internal)?;
    let m = op.lattice().n_sites();
    let n = n_internal;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw = DMatrix::<Complex64>::zeros(m * n, m * n);
    for x in 0..m {
        for y in 0..m {
            let damp = amplitude * (-rate * op.lattice().distance(x, y) as f64).exp();
            for a in 0..n {
                for b in 0..n {
                    let re: f64 = rng.gen_range(-1.0..1.0);
                    let im: f64 = rng.gen_range(-1.0..1.0);
                    raw[(x * n + a, y * n + b)] = Complex64::new(re * damp, im * damp);
                }
            }
        }
    }
    let herm = (&raw + raw.adjoint()).map(|v| v * Complex64::new(0.5, 0.0));
    op.data.copy_from(&herm);
    Ok(op)
}
