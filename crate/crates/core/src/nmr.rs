//! Idealized three-spin NMR backend: Hamiltonian, pulse-sequence IR,
//! compilation of DQC programs to pulses, and relaxation-free playback.
//!
//! Qubit 0 is the fluorine system spin, qubit 1 the proton (damping
//! ancilla) and qubit 2 the carbon (recovery ancilla). Qubit 0 is the most
//! significant tensor factor.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::channels::KrausChannel;
use crate::dqc::{plan_dqc, DqcProgram, Pauli};
use crate::error::{Error, Result};
use crate::linalg::{partial_trace, ComplexMatrix, DensityMatrix, C64, ONE};
use crate::petz::ChannelFamily;

pub const QUBIT_F: usize = 0;
pub const QUBIT_H: usize = 1;
pub const QUBIT_C: usize = 2;

const UNITARY_TOL: f64 = 1e-8;

/// Weakly coupled spin register in the rotating frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinSystem {
    labels: Vec<String>,
    /// ω_i − ω_i^rf in Hz.
    offsets: Vec<f64>,
    /// Symmetric, zero diagonal, Hz.
    couplings: Vec<Vec<f64>>,
    /// Relaxation times in seconds, informational only.
    pub t1: Vec<Option<f64>>,
    pub t2: Vec<Option<f64>>,
}

impl Default for SpinSystem {
    /// Trifluoroiodoethylene: F, H, C on resonance.
    fn default() -> Self {
        let mut sys = Self::new(&["F", "H", "C"]);
        sys.set_coupling(QUBIT_C, QUBIT_H, 161.42);
        sys.set_coupling(QUBIT_F, QUBIT_H, 47.50);
        sys.set_coupling(QUBIT_F, QUBIT_C, -191.90);
        sys
    }
}

impl SpinSystem {
    /// Uncoupled, on-resonance spins.
    pub fn new(labels: &[&str]) -> Self {
        let n = labels.len();
        Self {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            offsets: vec![0.0; n],
            couplings: vec![vec![0.0; n]; n],
            t1: vec![None; n],
            t2: vec![None; n],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits()
    }

    pub fn label(&self, q: usize) -> &str {
        &self.labels[q]
    }

    pub fn offset(&self, q: usize) -> f64 {
        self.offsets[q]
    }

    pub fn set_offset(&mut self, q: usize, hz: f64) {
        self.offsets[q] = hz;
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[i][j]
    }

    pub fn set_coupling(&mut self, i: usize, j: usize, hz: f64) {
        assert_ne!(i, j, "a spin does not couple to itself");
        self.couplings[i][j] = hz;
        self.couplings[j][i] = hz;
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits() {
            return Err(Error::DimMismatch {
                expected: self.n_qubits(),
                found: q + 1,
            });
        }
        Ok(())
    }
}

/// σ_z eigenvalue (±1) of qubit `q` (of `n`) in basis state `idx`.
fn z_sign(idx: usize, q: usize, n: usize) -> f64 {
    if (idx >> (n - 1 - q)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn hamiltonian_diagonal(sys: &SpinSystem, active: &[usize]) -> Vec<f64> {
    let n = active.len();
    (0..1usize << n)
        .map(|idx| {
            let mut e = 0.0;
            for (a, &qa) in active.iter().enumerate() {
                let za = z_sign(idx, a, n) / 2.0;
                e -= 2.0 * PI * sys.offsets[qa] * za;
                for (b, &qb) in active.iter().enumerate().skip(a + 1) {
                    let zb = z_sign(idx, b, n) / 2.0;
                    e += 2.0 * PI * sys.couplings[qa][qb] * za * zb;
                }
            }
            e
        })
        .collect()
}

/// H = −Σ 2π(ω_i − ω_i^rf) I_iz + Σ_{i<j} 2π J_ij I_iz I_jz over the `active`
/// qubits, in rad/s. Diagonal in the computational basis.
pub fn hamiltonian(sys: &SpinSystem, active: &[usize]) -> Result<ComplexMatrix> {
    for &q in active {
        sys.check_qubit(q)?;
    }
    Ok(ComplexMatrix::diag_real(&hamiltonian_diagonal(sys, active)))
}

/// exp(−iHt) on the full register.
pub fn evolve_free(sys: &SpinSystem, duration: f64) -> Result<ComplexMatrix> {
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(Error::out_of_range("duration", duration, "[0, inf)"));
    }
    let all: Vec<usize> = (0..sys.n_qubits()).collect();
    let phases: Vec<C64> = hamiltonian_diagonal(sys, &all)
        .into_iter()
        .map(|e| C64::from_polar(1.0, -e * duration))
        .collect();
    Ok(ComplexMatrix::diag(&phases))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
    MinusX,
    MinusY,
}

impl Axis {
    fn pauli(self) -> (f64, ComplexMatrix) {
        match self {
            Axis::X => (1.0, Pauli::X.matrix()),
            Axis::Y => (1.0, Pauli::Y.matrix()),
            Axis::Z => (1.0, Pauli::Z.matrix()),
            Axis::MinusX => (-1.0, Pauli::X.matrix()),
            Axis::MinusY => (-1.0, Pauli::Y.matrix()),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
            Axis::MinusX => "-x",
            Axis::MinusY => "-y",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            "-x" => Ok(Axis::MinusX),
            "-y" => Ok(Axis::MinusY),
            other => Err(Error::BadAxis(other.to_string())),
        }
    }
}

/// exp(−iθσ/2) as a 2×2 matrix.
pub fn rotation(axis: Axis, angle: f64) -> ComplexMatrix {
    let (sign, sigma) = axis.pauli();
    let half = sign * angle / 2.0;
    &ComplexMatrix::identity(2).scale_real(half.cos()) - &sigma.scale(C64::new(0.0, half.sin()))
}

/// Embeds an operator on `qubits` (first listed = most significant) into an
/// `n`-qubit register.
pub fn embed(op: &ComplexMatrix, qubits: &[usize], n: usize) -> Result<ComplexMatrix> {
    let k = qubits.len();
    if op.shape() != (1 << k, 1 << k) {
        return Err(Error::DimMismatch {
            expected: 1 << k,
            found: op.rows(),
        });
    }
    if let Some(&q) = qubits.iter().find(|&&q| q >= n) {
        return Err(Error::DimMismatch { expected: n, found: q + 1 });
    }
    let dim = 1usize << n;
    let local = |idx: usize| {
        qubits
            .iter()
            .fold(0usize, |acc, &q| (acc << 1) | ((idx >> (n - 1 - q)) & 1))
    };
    let mask: usize = qubits.iter().map(|&q| 1usize << (n - 1 - q)).sum();
    let mut out = ComplexMatrix::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            if r & !mask == c & !mask {
                out[(r, c)] = op[(local(r), local(c))];
            }
        }
    }
    Ok(out)
}

/// Single-qubit rotation on `qubit` of an `n_qubits` register.
pub fn rotation_unitary(qubit: usize, axis: Axis, angle: f64, n_qubits: usize) -> Result<ComplexMatrix> {
    embed(&rotation(axis, angle), &[qubit], n_qubits)
}

/// One step of a pulse program.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Element {
    Rotation { qubit: usize, axis: Axis, angle: f64 },
    FreeEvolution { duration: f64 },
    Barrier,
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Rotation { qubit, axis, angle } => write!(f, "ROT q={qubit} axis={axis} angle={angle}"),
            Element::FreeEvolution { duration } => write!(f, "FREE t={duration}"),
            Element::Barrier => f.write_str("BARRIER"),
        }
    }
}

/// Ordered list of pulses and delays; the first element acts first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PulseSequence {
    elements: Vec<Element>,
}

impl PulseSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_elements(elements: Vec<Element>) -> Result<Self> {
        let mut seq = Self::new();
        for e in elements {
            seq.push(e)?;
        }
        Ok(seq)
    }

    pub fn push(&mut self, e: Element) -> Result<()> {
        match e {
            Element::Rotation { angle, .. } if !angle.is_finite() => {
                Err(Error::out_of_range("angle", angle, "finite"))
            }
            Element::FreeEvolution { duration } if !(duration >= 0.0 && duration.is_finite()) => {
                Err(Error::out_of_range("duration", duration, "[0, inf)"))
            }
            _ => {
                self.elements.push(e);
                Ok(())
            }
        }
    }

    fn rot(&mut self, qubit: usize, axis: Axis, angle: f64) {
        self.elements.push(Element::Rotation { qubit, axis, angle });
    }

    fn free(&mut self, duration: f64) {
        self.elements.push(Element::FreeEvolution { duration });
    }

    pub fn barrier(&mut self) {
        self.elements.push(Element::Barrier);
    }

    pub fn extend(&mut self, other: &PulseSequence) {
        self.elements.extend_from_slice(&other.elements);
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Sub-sequences between barriers.
    pub fn stages(&self) -> Vec<PulseSequence> {
        self.elements
            .split(|e| matches!(e, Element::Barrier))
            .map(|s| PulseSequence { elements: s.to_vec() })
            .collect()
    }

    /// Total duration of free evolution, seconds.
    pub fn total_delay(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| match e {
                Element::FreeEvolution { duration } => *duration,
                _ => 0.0,
            })
            .sum()
    }

    /// Product of the element unitaries, last element leftmost.
    pub fn unitary(&self, sys: &SpinSystem) -> Result<ComplexMatrix> {
        let n = sys.n_qubits();
        let mut u = ComplexMatrix::identity(sys.dim());
        for e in &self.elements {
            let step = match *e {
                Element::Rotation { qubit, axis, angle } => rotation_unitary(qubit, axis, angle, n)?,
                Element::FreeEvolution { duration } => evolve_free(sys, duration)?,
                Element::Barrier => continue,
            };
            u = &step * &u;
        }
        Ok(u)
    }

    /// One element per line.
    pub fn export(&self) -> String {
        self.elements.iter().map(|e| format!("{e}\n")).collect()
    }

    /// Inverse of [`PulseSequence::export`]; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut seq = Self::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Parse(format!("line {}: {msg}: `{line}`", lineno + 1));
            let mut words = line.split_whitespace();
            let head = words.next().unwrap_or_default();
            let mut fields = std::collections::HashMap::new();
            for w in words {
                let (k, v) = w.split_once('=').ok_or_else(|| bad("expected key=value"))?;
                fields.insert(k, v);
            }
            let num = |key: &str| -> Result<f64> {
                fields
                    .get(key)
                    .ok_or_else(|| bad(&format!("missing {key}")))?
                    .parse::<f64>()
                    .map_err(|_| bad(&format!("bad number for {key}")))
            };
            let element = match head {
                "ROT" => Element::Rotation {
                    qubit: fields
                        .get("q")
                        .ok_or_else(|| bad("missing q"))?
                        .parse()
                        .map_err(|_| bad("bad qubit index"))?,
                    axis: fields.get("axis").ok_or_else(|| bad("missing axis"))?.parse()?,
                    angle: num("angle")?,
                },
                "FREE" => Element::FreeEvolution { duration: num("t")? },
                "BARRIER" => Element::Barrier,
                _ => return Err(bad("unknown element")),
            };
            seq.push(element)?;
        }
        Ok(seq)
    }
}

/// U = e^{iα}·R_z(φ)·R_y(θ)·R_z(λ), θ ∈ [0, π].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZyzAngles {
    pub phase: f64,
    pub phi: f64,
    pub theta: f64,
    pub lambda: f64,
}

impl ZyzAngles {
    pub fn matrix(&self) -> ComplexMatrix {
        let r = &(&rotation(Axis::Z, self.phi) * &rotation(Axis::Y, self.theta)) * &rotation(Axis::Z, self.lambda);
        r.scale(C64::from_polar(1.0, self.phase))
    }
}

pub fn zyz_decompose(u: &ComplexMatrix) -> Result<ZyzAngles> {
    if u.shape() != (2, 2) {
        return Err(Error::DimMismatch {
            expected: 2,
            found: u.rows(),
        });
    }
    let residual = u.unitarity_residual();
    if residual > UNITARY_TOL {
        return Err(Error::NotUnitary { residual });
    }
    let (a, b) = (u[(0, 0)], u[(1, 0)]);
    let (d, c) = (u[(1, 1)], u[(0, 1)]);
    let theta = 2.0 * b.norm().atan2(a.norm());
    // φ+λ from arg(d/a), φ−λ from arg(−b/c)
    let (sum, diff) = if a.norm() < 1e-14 {
        (0.0, (b / -c).arg())
    } else if b.norm() < 1e-14 {
        ((d / a).arg(), 0.0)
    } else {
        ((d / a).arg(), (b / -c).arg())
    };
    // halving sum and diff leaves a sign ambiguity on the off-diagonal
    let (phi, lambda) = ((sum + diff) / 2.0, (sum - diff) / 2.0);
    let mut best = None;
    for (phi, lambda) in [(phi, lambda), (phi + PI, lambda - PI)] {
        let mut cand = ZyzAngles {
            phase: 0.0,
            phi,
            theta,
            lambda,
        };
        let overlap = cand.matrix().inner(u);
        cand.phase = overlap.arg();
        if best.as_ref().is_none_or(|(o, _)| overlap.norm() > *o) {
            best = Some((overlap.norm(), cand));
        }
    }
    Ok(best.expect("two candidates").1)
}

/// Appends an arbitrary single-qubit unitary as z-y-z rotations.
fn push_single(seq: &mut PulseSequence, q: usize, u: &ComplexMatrix) -> Result<()> {
    let a = zyz_decompose(u)?;
    // R_z(θ ± 2π) = −R_z(θ), a global phase here
    let wrap = |t: f64| t - 2.0 * PI * ((t - PI) / (2.0 * PI)).ceil();
    let (lambda, phi) = (wrap(a.lambda), wrap(a.phi));
    if lambda.abs() > 1e-15 {
        seq.rot(q, Axis::Z, lambda);
    }
    seq.rot(q, Axis::Y, a.theta);
    if phi.abs() > 1e-15 {
        seq.rot(q, Axis::Z, phi);
    }
    Ok(())
}

/// Controlled-Z between `a` and `b` from a 1/(2|J|) delay, with the other
/// spins refocused by a π-pulse echo and offsets undone by z rotations.
fn push_cz(seq: &mut PulseSequence, sys: &SpinSystem, a: usize, b: usize) -> Result<()> {
    let j = sys.coupling(a, b);
    if j == 0.0 {
        return Err(Error::Config(format!(
            "spins {} and {} are not coupled",
            sys.label(a),
            sys.label(b)
        )));
    }
    let t = 1.0 / (2.0 * j.abs());
    let spectators: Vec<usize> = (0..sys.n_qubits()).filter(|&q| q != a && q != b).collect();
    seq.free(t / 2.0);
    for &s in &spectators {
        seq.rot(s, Axis::X, PI);
    }
    seq.free(t / 2.0);
    for &s in &spectators {
        seq.rot(s, Axis::MinusX, PI);
    }
    let s = j.signum();
    for q in [a, b] {
        let angle = 2.0 * PI * sys.offset(q) * t - s * FRAC_PI_2;
        seq.rot(q, Axis::Z, angle);
    }
    Ok(())
}

/// Controlled-P with `control` as control and `target` as target.
fn push_controlled_pauli(
    seq: &mut PulseSequence,
    sys: &SpinSystem,
    control: usize,
    target: usize,
    p: Pauli,
) -> Result<()> {
    match p {
        Pauli::I => {}
        Pauli::Z => push_cz(seq, sys, control, target)?,
        Pauli::X => {
            seq.rot(target, Axis::MinusY, FRAC_PI_2);
            push_cz(seq, sys, control, target)?;
            seq.rot(target, Axis::Y, FRAC_PI_2);
        }
        Pauli::Y => {
            seq.rot(target, Axis::X, FRAC_PI_2);
            push_cz(seq, sys, control, target)?;
            seq.rot(target, Axis::MinusX, FRAC_PI_2);
        }
    }
    Ok(())
}

/// Stand-alone controlled-Z block between spins `a` and `b`.
pub fn cz_block(sys: &SpinSystem, a: usize, b: usize) -> Result<PulseSequence> {
    sys.check_qubit(a)?;
    sys.check_qubit(b)?;
    let mut seq = PulseSequence::new();
    push_cz(&mut seq, sys, a, b)?;
    Ok(seq)
}

/// Stand-alone controlled-Pauli block; `Pauli::X` gives the CNOT.
pub fn controlled_pauli_block(sys: &SpinSystem, control: usize, target: usize, p: Pauli) -> Result<PulseSequence> {
    sys.check_qubit(control)?;
    sys.check_qubit(target)?;
    let mut seq = PulseSequence::new();
    push_controlled_pauli(&mut seq, sys, control, target, p)?;
    Ok(seq)
}

/// Σ_j P_j⊗|j⟩⟨j| on (target, control), written as P₀ unconditionally after
/// a controlled (P₀P₁) whose phase becomes a z rotation on the control.
fn push_select(seq: &mut PulseSequence, sys: &SpinSystem, control: usize, target: usize, ops: [Pauli; 2]) -> Result<()> {
    let (phase, rel) = ops[0].product(ops[1]);
    push_controlled_pauli(seq, sys, control, target, rel)?;
    let theta = phase.arg();
    if theta.abs() > 1e-15 {
        seq.rot(control, Axis::Z, theta);
    }
    match ops[0] {
        Pauli::I => {}
        Pauli::X => seq.rot(target, Axis::X, PI),
        Pauli::Y => seq.rot(target, Axis::Y, PI),
        Pauli::Z => seq.rot(target, Axis::Z, PI),
    }
    Ok(())
}

/// Pulse program for one DQC circuit with `system` as data qubit and
/// `ancilla` as the duality ancilla (assumed to start in |0⟩).
pub fn compile_program(prog: &DqcProgram, sys: &SpinSystem, system: usize, ancilla: usize) -> Result<PulseSequence> {
    sys.check_qubit(system)?;
    sys.check_qubit(ancilla)?;
    let mut seq = PulseSequence::new();
    push_single(&mut seq, ancilla, &prog.v)?;
    push_select(&mut seq, sys, ancilla, system, prog.u)?;
    push_single(&mut seq, ancilla, &prog.w)?;
    push_select(&mut seq, sys, ancilla, system, prog.u_tilde)?;
    Ok(seq)
}

/// Programs for the two stages of a damping/recovery experiment.
pub fn experiment_programs(family: ChannelFamily, p: f64, eps: f64) -> Result<(DqcProgram, DqcProgram)> {
    let damping: KrausChannel = family.damping(p)?;
    let recovery = family.recovery(p, eps)?;
    Ok((plan_dqc(&damping)?, plan_dqc(&recovery)?))
}

/// Damping on (F, H), a barrier, then recovery on (F, C).
pub fn compile_experiment(family: ChannelFamily, sys: &SpinSystem, p: f64, eps: f64) -> Result<PulseSequence> {
    let (damping, recovery) = experiment_programs(family, p, eps)?;
    let mut seq = compile_program(&damping, sys, QUBIT_F, QUBIT_H)?;
    seq.barrier();
    seq.extend(&compile_program(&recovery, sys, QUBIT_F, QUBIT_C)?);
    Ok(seq)
}

pub fn compile_ad_sequence(p: f64, eps: f64) -> Result<PulseSequence> {
    compile_experiment(ChannelFamily::Ad, &SpinSystem::default(), p, eps)
}

pub fn compile_pd_sequence(p: f64, eps: f64) -> Result<PulseSequence> {
    compile_experiment(ChannelFamily::Pd, &SpinSystem::default(), p, eps)
}

/// Rotations taking |0⟩ on `qubit` to the pure state ψ, up to phase.
pub fn prepare_state(qubit: usize, psi: &[C64; 2]) -> Result<PulseSequence> {
    let norm = (psi[0].norm_sqr() + psi[1].norm_sqr()).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { norm });
    }
    let u = ComplexMatrix::from_rows(&[[psi[0], -psi[1].conj()], [psi[1], psi[0].conj()]]);
    let mut seq = PulseSequence::new();
    push_single(&mut seq, qubit, &u)?;
    Ok(seq)
}

/// Ideal playback: ρ ↦ UρU† with U the sequence unitary.
pub fn simulate_sequence(seq: &PulseSequence, sys: &SpinSystem, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != sys.dim() {
        return Err(Error::DimMismatch {
            expected: sys.dim(),
            found: rho.dim(),
        });
    }
    let u = seq.unitary(sys)?;
    DensityMatrix::new(u.sandwich(rho.matrix()).hermitian_part())
}

/// min_φ ‖U₁ − e^{iφ}U₂‖_F ≤ tol, with φ* = arg Tr(U₂†U₁).
pub fn equiv_up_to_phase(u1: &ComplexMatrix, u2: &ComplexMatrix, tol: f64) -> Result<bool> {
    Ok(phase_distance(u1, u2)? <= tol)
}

/// min_φ ‖U₁ − e^{iφ}U₂‖_F.
pub fn phase_distance(u1: &ComplexMatrix, u2: &ComplexMatrix) -> Result<f64> {
    if u1.shape() != u2.shape() {
        return Err(Error::DimMismatch {
            expected: u1.rows(),
            found: u2.rows(),
        });
    }
    for u in [u1, u2] {
        let residual = u.unitarity_residual();
        if residual > UNITARY_TOL {
            return Err(Error::NotUnitary { residual });
        }
    }
    let phase = u2.inner(u1).arg();
    Ok(u1.distance(&u2.scale(C64::from_polar(1.0, phase))))
}

/// Pseudo-pure state (1−κ)/2ⁿ·1 + κ|0…0⟩⟨0…0|.
#[derive(Clone, Debug)]
pub struct PpsState {
    pub kappa: f64,
    pub state: DensityMatrix,
}

pub fn pps_state(kappa: f64) -> Result<PpsState> {
    pps_state_n(kappa, 3)
}

pub fn pps_state_n(kappa: f64, n_qubits: usize) -> Result<PpsState> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::out_of_range("kappa", kappa, "[0, 1]"));
    }
    let dim = 1usize << n_qubits;
    let mut m = ComplexMatrix::identity(dim).scale_real((1.0 - kappa) / dim as f64);
    m[(0, 0)] += ONE * kappa;
    Ok(PpsState {
        kappa,
        state: DensityMatrix::new(m)?,
    })
}

impl PpsState {
    /// Removes the identity background from a reduced k-qubit state:
    /// (ρ − (1−κ)/2ᵏ·1)/κ.
    pub fn deviation(&self, reduced: &DensityMatrix) -> Result<DensityMatrix> {
        if self.kappa <= 0.0 {
            return Err(Error::out_of_range("kappa", self.kappa, "(0, 1]"));
        }
        let d = reduced.dim();
        let background = ComplexMatrix::identity(d).scale_real((1.0 - self.kappa) / d as f64);
        let m = (reduced.matrix() - &background).scale_real(1.0 / self.kappa);
        DensityMatrix::new(m.hermitian_part())
    }
}

/// Runs `seq` on a PPS input and returns the system-qubit state with the
/// identity background removed.
pub fn run_on_pps(seq: &PulseSequence, sys: &SpinSystem, pps: &PpsState, system: usize) -> Result<DensityMatrix> {
    let out = simulate_sequence(seq, sys, &pps.state)?;
    let dims = vec![2; sys.n_qubits()];
    pps.deviation(&partial_trace(&out, system, &dims)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{amplitude_damping, compose, phase_damping};
    use crate::dqc::plan_dqc;
    use crate::linalg::{fidelity, reduce};
    use crate::petz::{petz_ad_closed, petz_pd_closed, PetzCoefficients};

    fn two_spin(j: f64) -> SpinSystem {
        let mut s = SpinSystem::new(&["A", "B"]);
        s.set_coupling(0, 1, j);
        s
    }

    fn cz() -> ComplexMatrix {
        ComplexMatrix::diag_real(&[1.0, 1.0, 1.0, -1.0])
    }

    fn cnot() -> ComplexMatrix {
        // control = first factor
        ComplexMatrix::from_real_rows(&[
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
        ])
    }

    #[test]
    fn hamiltonian_examples() {
        let h = hamiltonian(&two_spin(100.0), &[0, 1]).unwrap();
        let q = 2.0 * PI * 100.0 / 4.0;
        assert!(h.approx_eq(&ComplexMatrix::diag_real(&[q, -q, -q, q]), 1e-9));
        assert!(hamiltonian(&SpinSystem::new(&["A", "B"]), &[0, 1]).unwrap().max_abs() == 0.0);

        let sys = SpinSystem::default();
        let h = hamiltonian(&sys, &[0, 1, 2]).unwrap();
        let (jfh, jfc, jch) = (47.50, -191.90, 161.42);
        for idx in 0..8 {
            let z: Vec<f64> = (0..3).map(|k| if (idx >> (2 - k)) & 1 == 0 { 0.5 } else { -0.5 }).collect();
            let want = 2.0 * PI * (jfh * z[0] * z[1] + jfc * z[0] * z[2] + jch * z[1] * z[2]);
            assert!((h[(idx, idx)].re - want).abs() < 1e-9);
        }
        assert!(h.is_hermitian(0.0));
        let mut off = SpinSystem::new(&["A"]);
        off.set_offset(0, 10.0);
        let h = hamiltonian(&off, &[0]).unwrap();
        assert!((h[(0, 0)].re + PI * 10.0).abs() < 1e-12);
    }

    #[test]
    fn free_evolution_examples() {
        let sys = two_spin(50.0);
        assert!(evolve_free(&sys, 0.0).unwrap().approx_eq(&ComplexMatrix::identity(4), 0.0));
        let u = evolve_free(&sys, 1.0 / 100.0).unwrap();
        let m = C64::from_polar(1.0, -PI / 4.0);
        let p = C64::from_polar(1.0, PI / 4.0);
        assert!(u.approx_eq(&ComplexMatrix::diag(&[m, p, p, m]), 1e-12));
        let full = SpinSystem::default();
        let u1 = evolve_free(&full, 1.3e-3).unwrap();
        let u2 = evolve_free(&full, 2.6e-3).unwrap();
        assert!(u1.is_unitary(1e-10));
        assert!((&u1 * &u1).approx_eq(&u2, 1e-10));
        assert!(evolve_free(&full, -1.0).is_err());
    }

    #[test]
    fn rotation_examples() {
        let ry = rotation_unitary(0, Axis::Y, FRAC_PI_2, 1).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((ry[(0, 0)].re - r).abs() < 1e-15 && (ry[(1, 0)].re - r).abs() < 1e-15);
        let rx = rotation_unitary(0, Axis::X, 2.0 * PI, 1).unwrap();
        assert!(rx.approx_eq(&ComplexMatrix::identity(2).scale_real(-1.0), 1e-12));
        let t = 0.7;
        let rz = rotation_unitary(0, Axis::Z, t, 1).unwrap();
        assert!(rz.approx_eq(&ComplexMatrix::diag(&[C64::from_polar(1.0, -t / 2.0), C64::from_polar(1.0, t / 2.0)]), 1e-15));
        let mx = rotation(Axis::MinusX, 0.4);
        assert!(mx.approx_eq(&rotation(Axis::X, -0.4), 1e-15));
        assert!(matches!("w".parse::<Axis>(), Err(Error::BadAxis(_))));
        assert!(rotation_unitary(3, Axis::X, 1.0, 3).is_err());
        // qubit 0 is the most significant factor
        let r0 = rotation_unitary(0, Axis::X, 0.3, 2).unwrap();
        assert!(r0.approx_eq(&rotation(Axis::X, 0.3).kron(&ComplexMatrix::identity(2)), 1e-15));
    }

    #[test]
    fn embed_places_factors() {
        let a = rotation(Axis::X, 0.3);
        let b = rotation(Axis::Y, 1.1);
        let ab = a.kron(&b);
        let id = ComplexMatrix::identity(2);
        let got = embed(&ab, &[0, 2], 3).unwrap();
        let want = a.kron(&id).kron(&b);
        assert!(got.approx_eq(&want, 1e-15));
        let swapped = embed(&ab, &[2, 0], 3).unwrap();
        assert!(swapped.approx_eq(&b.kron(&id).kron(&a), 1e-15));
    }

    #[test]
    fn cz_block_alone() {
        for j in [161.42, -191.90, 47.5] {
            let sys = two_spin(j);
            let mut seq = PulseSequence::new();
            push_cz(&mut seq, &sys, 0, 1).unwrap();
            assert!(equiv_up_to_phase(&seq.unitary(&sys).unwrap(), &cz(), 1e-8).unwrap());
        }
    }

    #[test]
    fn cz_block_refocuses_spectator_and_offsets() {
        let mut sys = SpinSystem::default();
        sys.set_offset(0, 12.0);
        sys.set_offset(1, -30.0);
        sys.set_offset(2, 7.0);
        for (a, b, spec) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
            let mut seq = PulseSequence::new();
            push_cz(&mut seq, &sys, a, b).unwrap();
            let want = embed(&cz(), &[a, b], 3).unwrap();
            let got = seq.unitary(&sys).unwrap();
            assert!(equiv_up_to_phase(&got, &want, 1e-8).unwrap(), "pair {a},{b} spectator {spec}");
        }
    }

    #[test]
    fn cnot_block() {
        let sys = two_spin(-191.90);
        let mut seq = PulseSequence::new();
        push_controlled_pauli(&mut seq, &sys, 0, 1, Pauli::X).unwrap();
        assert!(equiv_up_to_phase(&seq.unitary(&sys).unwrap(), &cnot(), 1e-8).unwrap());
        let mut seq = PulseSequence::new();
        push_controlled_pauli(&mut seq, &sys, 0, 1, Pauli::Y).unwrap();
        let mut cy = ComplexMatrix::identity(4);
        let y = Pauli::Y.matrix();
        for r in 0..2 {
            for c in 0..2 {
                cy[(2 + r, 2 + c)] = y[(r, c)];
            }
        }
        assert!(equiv_up_to_phase(&seq.unitary(&sys).unwrap(), &cy, 1e-8).unwrap());
    }

    #[test]
    fn zyz_round_trip() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let u = crate::linalg::random::random_unitary(&mut rng, 2);
            let a = zyz_decompose(&u).unwrap();
            assert!(a.matrix().approx_eq(&u, 1e-12));
            assert!((0.0..=PI).contains(&a.theta));
        }
        for u in [Pauli::X.matrix(), Pauli::Z.matrix(), Pauli::Y.matrix(), ComplexMatrix::identity(2)] {
            assert!(zyz_decompose(&u).unwrap().matrix().approx_eq(&u, 1e-12));
        }
    }

    #[test]
    fn select_blocks_match_controlled_paulis() {
        let sys = two_spin(47.5);
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                let mut seq = PulseSequence::new();
                // qubit 0 target (system), qubit 1 control (ancilla)
                push_select(&mut seq, &sys, 1, 0, [a, b]).unwrap();
                let mut p0 = ComplexMatrix::zeros(2, 2);
                p0[(0, 0)] = ONE;
                let mut p1 = ComplexMatrix::zeros(2, 2);
                p1[(1, 1)] = ONE;
                let want = &a.matrix().kron(&p0) + &b.matrix().kron(&p1);
                assert!(equiv_up_to_phase(&seq.unitary(&sys).unwrap(), &want, 1e-8).unwrap(), "{a}{b}");
            }
        }
    }

    fn y_angles(stage: &PulseSequence, ancilla: usize) -> Vec<f64> {
        stage
            .elements()
            .iter()
            .filter_map(|e| match *e {
                Element::Rotation { qubit, axis: Axis::Y, angle } if qubit == ancilla => Some(angle),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn ad_sequence_angles() {
        let seq = compile_ad_sequence(0.5, 0.2).unwrap();
        let stages = seq.stages();
        assert_eq!(stages.len(), 2);
        let beta = 2.0 * ((1.0 + 0.5f64.sqrt()) / 2.0).sqrt().acos();
        let c = (0.8f64 / 0.9).sqrt();
        let delta = 2.0 * ((1.0 + c) / 2.0).sqrt().acos();
        let damp = y_angles(&stages[0], QUBIT_H);
        let rec = y_angles(&stages[1], QUBIT_C);
        assert!((damp[0] - beta).abs() < 1e-12, "{damp:?}");
        assert!((rec[0] - delta).abs() < 1e-12, "{rec:?}");

        let seq = compile_ad_sequence(0.0, 0.2).unwrap();
        let stage = &seq.stages()[0];
        assert!(y_angles(stage, QUBIT_H)[0].abs() < 1e-12);
        let sys = SpinSystem::default();
        let u = embed(&plan_dqc(&amplitude_damping(0.0).unwrap()).unwrap().assemble_unitary(), &[0, 1], 3).unwrap();
        assert!(equiv_up_to_phase(&stage.unitary(&sys).unwrap(), &u, 1e-8).unwrap());
    }

    #[test]
    fn pd_sequence_angles() {
        let beta = |p: f64| 2.0 * (p / 2.0).sqrt().asin();
        for p in [0.0, 1.0, 0.6] {
            let seq = compile_pd_sequence(p, 0.8).unwrap();
            let damp = y_angles(&seq.stages()[0], QUBIT_H);
            assert!((damp[0] - beta(p)).abs() < 1e-12);
        }
        let co = PetzCoefficients::new(0.6, 0.8).unwrap();
        let d1 = 2.0 * (co.lambda_plus.powi(2) + co.mu_plus.powi(2)).sqrt().acos();
        let d2 = 2.0 * (co.lambda_minus.powi(2) + co.mu_plus.powi(2)).sqrt().asin();
        let rec = y_angles(&compile_pd_sequence(0.6, 0.8).unwrap().stages()[1], QUBIT_C);
        assert!((rec[0] - d1).abs() < 1e-12, "{rec:?} {d1}");
        assert!((rec[1] - d2).abs() < 1e-12, "{rec:?} {d2}");
    }

    #[test]
    fn stages_match_dqc_unitaries() {
        let sys = SpinSystem::default();
        for fam in [ChannelFamily::Ad, ChannelFamily::Pd] {
            for p in [0.0, 0.3, 0.6, 1.0] {
                for eps in [0.2, 0.5, 0.8] {
                    let (damp, rec) = experiment_programs(fam, p, eps).unwrap();
                    let seq = compile_experiment(fam, &sys, p, eps).unwrap();
                    let stages = seq.stages();
                    let g1 = embed(&damp.assemble_unitary(), &[QUBIT_F, QUBIT_H], 3).unwrap();
                    let g2 = embed(&rec.assemble_unitary(), &[QUBIT_F, QUBIT_C], 3).unwrap();
                    let u1 = stages[0].unitary(&sys).unwrap();
                    let u2 = stages[1].unitary(&sys).unwrap();
                    assert!(phase_distance(&u1, &g1).unwrap() < 1e-8, "{fam} p={p}");
                    assert!(phase_distance(&u2, &g2).unwrap() < 1e-8, "{fam} p={p} eps={eps}");
                    let total = seq.unitary(&sys).unwrap();
                    assert!(total.is_unitary(1e-9));
                    assert!(phase_distance(&total, &(&g2 * &g1)).unwrap() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn full_ad_sequence_on_excited_state() {
        let sys = SpinSystem::default();
        let mut seq = prepare_state(QUBIT_F, &[C64::new(0.0, 0.0), ONE]).unwrap();
        seq.barrier();
        seq.extend(&compile_ad_sequence(0.5, 0.2).unwrap());
        let pps = pps_state(1.0).unwrap();
        let got = run_on_pps(&seq, &sys, &pps, QUBIT_F).unwrap();
        let chain = compose(&petz_ad_closed(0.5, 0.2).unwrap(), &amplitude_damping(0.5).unwrap()).unwrap();
        let want = chain.apply(&DensityMatrix::basis(2, 1)).unwrap();
        assert!(got.matrix().approx_eq(want.matrix(), 1e-7));
    }

    #[test]
    fn pps_linearity() {
        let sys = SpinSystem::default();
        let psi = [C64::new(0.8, 0.0), C64::new(0.0, 0.6)];
        let mut seq = prepare_state(QUBIT_F, &psi).unwrap();
        seq.extend(&compile_pd_sequence(0.4, 0.8).unwrap());
        let pure = run_on_pps(&seq, &sys, &pps_state(1.0).unwrap(), QUBIT_F).unwrap();
        let weak = run_on_pps(&seq, &sys, &pps_state(1e-5).unwrap(), QUBIT_F).unwrap();
        assert!(pure.matrix().approx_eq(weak.matrix(), 1e-7));
        let chain = compose(&petz_pd_closed(0.4, 0.8).unwrap(), &phase_damping(0.4).unwrap()).unwrap();
        let want = chain.apply(&DensityMatrix::pure(&psi).unwrap()).unwrap();
        assert!(fidelity(&pure, &want).unwrap() > 1.0 - 1e-9);
    }

    #[test]
    fn simulate_examples() {
        let sys = SpinSystem::default();
        let pps = pps_state(1.0).unwrap();
        let same = simulate_sequence(&PulseSequence::new(), &sys, &pps.state).unwrap();
        assert_eq!(same, pps.state);
        let mut seq = PulseSequence::new();
        seq.rot(QUBIT_F, Axis::Y, FRAC_PI_2);
        let out = simulate_sequence(&seq, &sys, &pps.state).unwrap();
        let f = reduce(out.matrix(), 0, &[2, 2, 2]);
        assert!(f.approx_eq(&ComplexMatrix::from_real_rows(&[[0.5, 0.5], [0.5, 0.5]]), 1e-12));
        assert!((out.matrix().trace().re - 1.0).abs() < 1e-10);
        assert!(matches!(
            simulate_sequence(&seq, &sys, &DensityMatrix::basis(2, 0)),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn phase_equivalence_examples() {
        let u = rotation(Axis::X, 0.9);
        assert!(equiv_up_to_phase(&u, &u, 1e-12).unwrap());
        assert!(equiv_up_to_phase(&u, &u.scale_real(-1.0), 1e-12).unwrap());
        assert!(!equiv_up_to_phase(&ComplexMatrix::identity(2), &Pauli::Z.matrix(), 1e-8).unwrap());
        let bad = ComplexMatrix::diag_real(&[1.0, 2.0]);
        assert!(matches!(equiv_up_to_phase(&bad, &u, 1e-8), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn pps_examples() {
        let one = pps_state(1.0).unwrap();
        assert_eq!(one.state, DensityMatrix::basis(8, 0));
        let zero = pps_state(0.0).unwrap();
        assert!(zero.state.matrix().approx_eq(DensityMatrix::maximally_mixed(8).matrix(), 1e-15));
        let k = 1e-5;
        let weak = pps_state(k).unwrap();
        assert!((weak.state.matrix().trace().re - 1.0).abs() < 1e-12);
        let eig = crate::linalg::herm_eig(weak.state.matrix()).unwrap();
        for &e in &eig.eigenvalues[..7] {
            assert!((e - (1.0 - k) / 8.0).abs() < 1e-15);
        }
        assert!((eig.eigenvalues[7] - ((1.0 - k) / 8.0 + k)).abs() < 1e-15);
        assert!(pps_state(1.5).is_err());
    }

    #[test]
    fn export_parse_round_trip() {
        let seq = compile_pd_sequence(0.3, 0.2).unwrap();
        let text = seq.export();
        assert!(text.lines().any(|l| l == "BARRIER"));
        assert!(text.lines().all(|l| l.starts_with("ROT q=") || l.starts_with("FREE t=") || l == "BARRIER"));
        let back = PulseSequence::parse(&text).unwrap();
        assert_eq!(back, seq);
        assert!(PulseSequence::parse("ROT q=0 axis=w angle=1").is_err());
        assert!(PulseSequence::parse("FREE t=-1").is_err());
        assert!(PulseSequence::parse("JUMP").is_err());
    }
}
