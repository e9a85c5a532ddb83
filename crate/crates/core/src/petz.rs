//! Petz recovery maps.
//!
//! [`petz_general`] evaluates the recovery map for any channel and reference
//! state through matrix square roots. [`petz_ad_closed`] and
//! [`petz_pd_closed`] give the closed-form Kraus operators for the two damping
//! channels with their natural one-parameter reference states; the two routes
//! are cross-checked at the Choi level.

use crate::channels::{self, KrausChannel, MapKind};
use crate::error::{Error, Result};
use crate::linalg::{psd_inv_sqrt_with_rank, psd_sqrt, ComplexMatrix, DensityMatrix};

pub use crate::channels::channels_equal;
pub use crate::linalg::RANK_TOL;

/// Basis in which the reference state is diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    /// σ = (1−ε)|0⟩⟨0| + ε|1⟩⟨1|, used with amplitude damping.
    Computational,
    /// σ = (1−ε)|+⟩⟨+| + ε|−⟩⟨−|, used with phase damping.
    PlusMinus,
}

/// A full-rank single-qubit reference state parameterized by ε.
#[derive(Clone, Debug)]
pub struct ReferenceState {
    pub epsilon: f64,
    pub basis: Basis,
    pub state: DensityMatrix,
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::out_of_range("epsilon", eps, "(0, 1)"));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::out_of_range("p", p, "[0, 1]"));
    }
    Ok(())
}

/// Builds the reference state. ε ∈ {0, 1} is rejected: the state would not be full rank.
pub fn reference_state(basis: Basis, eps: f64) -> Result<ReferenceState> {
    check_epsilon(eps)?;
    let m = match basis {
        Basis::Computational => ComplexMatrix::diag_real(&[1.0 - eps, eps]),
        Basis::PlusMinus => {
            let (plus, minus) = channels::plus_minus();
            &ComplexMatrix::outer(&plus).scale_real(1.0 - eps)
                + &ComplexMatrix::outer(&minus).scale_real(eps)
        }
    };
    Ok(ReferenceState {
        epsilon: eps,
        basis,
        state: DensityMatrix::new(m)?,
    })
}

/// P(X) = σ^{1/2} Λ†[Λ(σ)^{-1/2} X Λ(σ)^{-1/2}] σ^{1/2} in Kraus form
/// M_m = σ^{1/2} K_m† Λ(σ)^{-1/2}, keeping the source channel's ordering.
///
/// If Λ(σ) is singular the inverse square root is taken on its support and
/// the result is tagged [`MapKind::SupportDeficient`].
pub fn petz_general(channel: &KrausChannel, sigma: &DensityMatrix, rank_tol: f64) -> Result<KrausChannel> {
    let image = channel.apply_operator(sigma.matrix())?;
    let (inv_root, rank) = psd_inv_sqrt_with_rank(&image, rank_tol)?;
    let root = psd_sqrt(sigma.matrix())?;
    let kraus = channel
        .kraus()
        .iter()
        .map(|k| &(&root * &k.dagger()) * &inv_root)
        .collect();
    let kind = if rank < channel.dim_out() {
        MapKind::SupportDeficient
    } else {
        MapKind::TracePreserving
    };
    KrausChannel::from_parts(kraus, format!("Petz[{}]", channel.label()), kind)
}

/// Scalars entering the closed-form recovery operators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PetzCoefficients {
    /// √((1−ε)/(1−(1−p)ε)), amplitude damping.
    pub c: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub a: f64,
    pub b: f64,
}

impl PetzCoefficients {
    pub fn new(p: f64, eps: f64) -> Result<Self> {
        check_p(p)?;
        check_epsilon(eps)?;
        let c = ((1.0 - eps) / (1.0 - (1.0 - p) * eps)).sqrt();
        let a = 1.0 / (2f64.sqrt() * (p * eps + (2.0 - p) * (1.0 - eps)).sqrt());
        let b = 1.0 / (2f64.sqrt() * (p - p * eps + eps * (2.0 - p)).sqrt());
        let (se, sf) = (eps.sqrt(), (1.0 - eps).sqrt());
        let k0 = (1.0 - p / 2.0).sqrt();
        let k1 = (p / 2.0).sqrt();
        Ok(Self {
            c,
            lambda_plus: k0 * (a * sf + b * se),
            lambda_minus: k0 * (a * sf - b * se),
            mu_plus: k1 * (a * se + b * sf),
            mu_minus: k1 * (a * se - b * sf),
            a,
            b,
        })
    }
}

/// Closed-form recovery for amplitude damping with a computational-basis reference:
/// M₀ = diag(c, 1), M₁ = √(pε/(1−(1−p)ε))·|1⟩⟨0|.
pub fn petz_ad_closed(p: f64, eps: f64) -> Result<KrausChannel> {
    let co = PetzCoefficients::new(p, eps)?;
    let m0 = ComplexMatrix::diag_real(&[co.c, 1.0]);
    let lower = (p * eps / (1.0 - (1.0 - p) * eps)).sqrt();
    let m1 = ComplexMatrix::from_real_rows(&[[0.0, 0.0], [lower, 0.0]]);
    KrausChannel::new(vec![m0, m1], format!("PetzAD(p={p},eps={eps})"))
}

/// Closed-form recovery for phase damping with a ± basis reference:
/// M₀ = [[λ₊, λ₋], [λ₋, λ₊]], M₁ = [[μ₊, μ₋], [−μ₋, −μ₊]].
pub fn petz_pd_closed(p: f64, eps: f64) -> Result<KrausChannel> {
    let co = PetzCoefficients::new(p, eps)?;
    let m0 = ComplexMatrix::from_real_rows(&[
        [co.lambda_plus, co.lambda_minus],
        [co.lambda_minus, co.lambda_plus],
    ]);
    let m1 = ComplexMatrix::from_real_rows(&[[co.mu_plus, co.mu_minus], [-co.mu_minus, -co.mu_plus]]);
    KrausChannel::new(vec![m0, m1], format!("PetzPD(p={p},eps={eps})"))
}

/// Which damping channel (and matching reference basis) a sweep uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChannelFamily {
    Ad,
    Pd,
}

impl ChannelFamily {
    pub fn damping(self, p: f64) -> Result<KrausChannel> {
        match self {
            ChannelFamily::Ad => channels::amplitude_damping(p),
            ChannelFamily::Pd => channels::phase_damping(p),
        }
    }

    pub fn recovery(self, p: f64, eps: f64) -> Result<KrausChannel> {
        match self {
            ChannelFamily::Ad => petz_ad_closed(p, eps),
            ChannelFamily::Pd => petz_pd_closed(p, eps),
        }
    }

    pub fn basis(self) -> Basis {
        match self {
            ChannelFamily::Ad => Basis::Computational,
            ChannelFamily::Pd => Basis::PlusMinus,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChannelFamily::Ad => "ad",
            ChannelFamily::Pd => "pd",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ad" => Ok(ChannelFamily::Ad),
            "pd" => Ok(ChannelFamily::Pd),
            other => Err(Error::Config(format!("unknown channel `{other}` (expected ad or pd)"))),
        }
    }
}

impl std::fmt::Display for ChannelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Petz map of `family` built through the general formula.
pub fn petz_general_for(family: ChannelFamily, p: f64, eps: f64) -> Result<KrausChannel> {
    let sigma = reference_state(family.basis(), eps)?;
    petz_general(&family.damping(p)?, &sigma.state, RANK_TOL)
}
