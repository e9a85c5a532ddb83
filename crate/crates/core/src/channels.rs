//! Kraus-form quantum channels, their Choi matrices, and the two damping
//! channels studied here.

use crate::error::{Error, Result};
use crate::linalg::{
    herm_eig, pauli, relative_entropy, ComplexMatrix, DensityMatrix, C64, ZERO,
};

/// Allowed ‖Σ K†K − 1‖_F for a trace-preserving map.
pub const TP_TOL: f64 = 1e-9;
/// Choi-distance threshold for channel equality.
pub const CHOI_EQ_TOL: f64 = 1e-8;
/// Kraus operators below this Frobenius norm are dropped by [`KrausChannel::prune`].
pub const PRUNE_TOL: f64 = 1e-12;

/// What normalization a Kraus list is known to satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapKind {
    /// Σ K†K = 1.
    TracePreserving,
    /// Σ K K† = 1; the adjoint of a trace-preserving map.
    Unital,
    /// Σ K†K is a projector onto a proper subspace: trace preserving only on
    /// that support (a Petz map built on a singular Λ(σ)).
    SupportDeficient,
}

/// Ordered list of Kraus operators, each `dim_out × dim_in`.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
    label: String,
    kind: MapKind,
}

fn shape_of(kraus: &[ComplexMatrix]) -> Result<(usize, usize)> {
    let first = kraus
        .first()
        .ok_or_else(|| Error::ShapeMismatch("empty Kraus list".into()))?;
    let (rows, cols) = first.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::ShapeMismatch("zero-sized Kraus operator".into()));
    }
    for (m, k) in kraus.iter().enumerate() {
        if k.shape() != (rows, cols) {
            return Err(Error::ShapeMismatch(format!(
                "Kraus operator {m} is {}x{}, expected {rows}x{cols}",
                k.rows(),
                k.cols()
            )));
        }
    }
    Ok((rows, cols))
}

fn gram(kraus: &[ComplexMatrix], dim: usize) -> ComplexMatrix {
    kraus
        .iter()
        .fold(ComplexMatrix::zeros(dim, dim), |acc, k| &acc + &(&k.dagger() * k))
}

impl KrausChannel {
    /// Validated constructor: uniform shapes, at most `dim_in·dim_out`
    /// operators, and trace preservation within [`TP_TOL`].
    pub fn new(kraus: Vec<ComplexMatrix>, label: impl Into<String>) -> Result<Self> {
        let (dim_out, dim_in) = shape_of(&kraus)?;
        if kraus.len() > dim_in * dim_out {
            return Err(Error::ShapeMismatch(format!(
                "{} Kraus operators exceed the maximum {} for a {dim_in}→{dim_out} map",
                kraus.len(),
                dim_in * dim_out
            )));
        }
        let ch = Self {
            dim_in,
            dim_out,
            kraus,
            label: label.into(),
            kind: MapKind::TracePreserving,
        };
        let residual = ch.tp_residual();
        if residual > TP_TOL {
            return Err(Error::NotTracePreserving { residual });
        }
        Ok(ch)
    }

    /// Builds a map without checking its normalization. Shapes are still checked.
    pub fn from_parts(kraus: Vec<ComplexMatrix>, label: impl Into<String>, kind: MapKind) -> Result<Self> {
        let (dim_out, dim_in) = shape_of(&kraus)?;
        Ok(Self {
            dim_in,
            dim_out,
            kraus,
            label: label.into(),
            kind,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim_in: dim,
            dim_out: dim,
            kraus: vec![ComplexMatrix::identity(dim)],
            label: "identity".into(),
            kind: MapKind::TracePreserving,
        }
    }

    /// ρ ↦ UρU†.
    pub fn unitary(u: ComplexMatrix, label: impl Into<String>) -> Result<Self> {
        let residual = u.unitarity_residual();
        if residual > 1e-10 {
            return Err(Error::NotUnitary { residual });
        }
        Self::new(vec![u], label)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// ‖Σ K†K − 1‖_F
    pub fn tp_residual(&self) -> f64 {
        gram(&self.kraus, self.dim_in).distance(&ComplexMatrix::identity(self.dim_in))
    }

    /// ‖Σ KK† − 1‖_F
    pub fn unitality_residual(&self) -> f64 {
        let sum = self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.dim_out, self.dim_out), |acc, k| {
                &acc + &(k * &k.dagger())
            });
        sum.distance(&ComplexMatrix::identity(self.dim_out))
    }

    /// Σ K_m X K_m† on an arbitrary operator.
    pub fn apply_operator(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.shape() != (self.dim_in, self.dim_in) {
            return Err(Error::DimMismatch {
                expected: self.dim_in,
                found: x.rows(),
            });
        }
        Ok(self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.dim_out, self.dim_out), |acc, k| {
                &acc + &k.sandwich(x)
            }))
    }

    /// Λ(ρ) = Σ K_m ρ K_m†.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::new(self.apply_operator(rho.matrix())?)
    }

    /// The adjoint map Λ†(X) = Σ K_m† X K_m, tagged [`MapKind::Unital`].
    pub fn adjoint(&self) -> Self {
        Self {
            dim_in: self.dim_out,
            dim_out: self.dim_in,
            kraus: self.kraus.iter().map(ComplexMatrix::dagger).collect(),
            label: format!("adjoint({})", self.label),
            kind: match self.kind {
                MapKind::TracePreserving => MapKind::Unital,
                MapKind::Unital => MapKind::TracePreserving,
                MapKind::SupportDeficient => MapKind::SupportDeficient,
            },
        }
    }

    /// Drops Kraus operators with ‖K‖_F < `tol`, always keeping at least one.
    pub fn prune(&self, tol: f64) -> Self {
        let mut kept: Vec<ComplexMatrix> = self
            .kraus
            .iter()
            .filter(|k| k.frobenius_norm() >= tol)
            .cloned()
            .collect();
        if kept.is_empty() {
            kept.push(ComplexMatrix::zeros(self.dim_out, self.dim_in));
        }
        Self {
            kraus: kept,
            ..self.clone()
        }
    }

    /// Minimal Kraus list recovered from the Choi eigendecomposition.
    pub fn canonical(&self) -> Result<Self> {
        let choi = self.choi();
        let eig = herm_eig(&choi.matrix)?;
        let cut = 1e-12 * eig.max_eigenvalue().max(1e-300);
        let mut kraus = Vec::new();
        for (k, &lam) in eig.eigenvalues.iter().enumerate().rev() {
            if lam <= cut {
                continue;
            }
            // column vector v indexes (input i, output o) as i·dim_out + o
            let v = eig.eigenvectors.col(k);
            let mut op = ComplexMatrix::zeros(self.dim_out, self.dim_in);
            for i in 0..self.dim_in {
                for o in 0..self.dim_out {
                    op[(o, i)] = v[i * self.dim_out + o] * lam.sqrt();
                }
            }
            kraus.push(op);
        }
        if kraus.is_empty() {
            kraus.push(ComplexMatrix::zeros(self.dim_out, self.dim_in));
        }
        Ok(Self {
            kraus,
            ..self.clone()
        })
    }

    /// Unnormalized Choi matrix Σ_ij |i⟩⟨j| ⊗ Λ(|i⟩⟨j|), input factor on the left.
    pub fn choi(&self) -> ChoiMatrix {
        let (din, dout) = (self.dim_in, self.dim_out);
        let mut c = ComplexMatrix::zeros(din * dout, din * dout);
        for k in &self.kraus {
            // Λ(|i⟩⟨j|) = Σ K|i⟩⟨j|K† has entries K[o][i]·conj(K[o'][j])
            for i in 0..din {
                for j in 0..din {
                    for o in 0..dout {
                        let a = k[(o, i)];
                        if a == ZERO {
                            continue;
                        }
                        for o2 in 0..dout {
                            c[(i * dout + o, j * dout + o2)] += a * k[(o2, j)].conj();
                        }
                    }
                }
            }
        }
        ChoiMatrix {
            matrix: c,
            dim_in: din,
            dim_out: dout,
        }
    }

    /// Number of Kraus operators.
    pub fn len(&self) -> usize {
        self.kraus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kraus.is_empty()
    }
}

/// Choi matrix of a map together with the dimensions needed to interpret it.
#[derive(Clone, Debug)]
pub struct ChoiMatrix {
    pub matrix: ComplexMatrix,
    pub dim_in: usize,
    pub dim_out: usize,
}

impl ChoiMatrix {
    pub fn min_eigenvalue(&self) -> f64 {
        herm_eig(&self.matrix)
            .map(|e| e.min_eigenvalue())
            .unwrap_or(f64::NEG_INFINITY)
    }

    /// Complete positivity: Hermitian and PSD within `tol`.
    pub fn is_completely_positive(&self, tol: f64) -> bool {
        self.matrix.is_hermitian(1e-9) && self.min_eigenvalue() >= -tol
    }

    /// ‖Tr_out C − 1‖_F
    pub fn tp_residual(&self) -> f64 {
        let reduced = crate::linalg::reduce(&self.matrix, 0, &[self.dim_in, self.dim_out]);
        reduced.distance(&ComplexMatrix::identity(self.dim_in))
    }

    pub fn distance(&self, other: &ChoiMatrix) -> Result<f64> {
        if (self.dim_in, self.dim_out) != (other.dim_in, other.dim_out) {
            return Err(Error::DimMismatch {
                expected: self.dim_in * self.dim_out,
                found: other.dim_in * other.dim_out,
            });
        }
        Ok(self.matrix.distance(&other.matrix))
    }
}

/// ‖choi(a) − choi(b)‖_F
pub fn choi_distance(a: &KrausChannel, b: &KrausChannel) -> Result<f64> {
    a.choi().distance(&b.choi())
}

/// Channel equality at the Choi level.
pub fn channels_equal(a: &KrausChannel, b: &KrausChannel, tol: f64) -> Result<bool> {
    Ok(choi_distance(a, b)? <= tol)
}

/// R ∘ Λ with Kraus list {R_i K_m}, ordered with the outer index over R.
/// Near-zero products are kept; see [`KrausChannel::prune`].
pub fn compose(outer: &KrausChannel, inner: &KrausChannel) -> Result<KrausChannel> {
    if inner.dim_out != outer.dim_in {
        return Err(Error::DimMismatch {
            expected: outer.dim_in,
            found: inner.dim_out,
        });
    }
    let kraus = outer
        .kraus
        .iter()
        .flat_map(|r| inner.kraus.iter().map(move |k| r * k))
        .collect();
    let kind = match (outer.kind, inner.kind) {
        (MapKind::TracePreserving, MapKind::TracePreserving) => MapKind::TracePreserving,
        (MapKind::Unital, MapKind::Unital) => MapKind::Unital,
        _ => MapKind::SupportDeficient,
    };
    Ok(KrausChannel {
        dim_in: inner.dim_in,
        dim_out: outer.dim_out,
        kraus,
        label: format!("{}∘{}", outer.label, inner.label),
        kind,
    })
}

fn check_strength(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::out_of_range("p", p, "[0, 1]"));
    }
    Ok(())
}

/// Amplitude damping: K₀ = diag(1, √(1−p)), K₁ = √p·|0⟩⟨1|.
pub fn amplitude_damping(p: f64) -> Result<KrausChannel> {
    check_strength(p)?;
    let k0 = ComplexMatrix::diag_real(&[1.0, (1.0 - p).sqrt()]);
    let k1 = ComplexMatrix::from_real_rows(&[[0.0, p.sqrt()], [0.0, 0.0]]);
    KrausChannel::new(vec![k0, k1], format!("AD(p={p})"))
}

/// Phase damping: K₀ = √(1−p/2)·1, K₁ = √(p/2)·Z.
pub fn phase_damping(p: f64) -> Result<KrausChannel> {
    check_strength(p)?;
    let k0 = pauli::id().scale_real((1.0 - p / 2.0).sqrt());
    let k1 = pauli::z().scale_real((p / 2.0).sqrt());
    KrausChannel::new(vec![k0, k1], format!("PD(p={p})"))
}

/// Relative entropies before and after a channel.
#[derive(Clone, Copy, Debug)]
pub struct DpiCheck {
    pub before: f64,
    pub after: f64,
    pub holds: bool,
}

/// Data-processing check D(Λρ‖Λσ) ≤ D(ρ‖σ) + 1e-8.
pub fn check_dpi(channel: &KrausChannel, rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<DpiCheck> {
    let before = relative_entropy(rho, sigma)?;
    let after = relative_entropy(&channel.apply(rho)?, &channel.apply(sigma)?)?;
    let holds = before.is_infinite() || after <= before + 1e-8;
    Ok(DpiCheck {
        before,
        after,
        holds,
    })
}

/// |+⟩ and |−⟩ amplitudes.
pub fn plus_minus() -> ([C64; 2], [C64; 2]) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    (
        [C64::new(h, 0.0), C64::new(h, 0.0)],
        [C64::new(h, 0.0), C64::new(-h, 0.0)],
    )
}
