use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channels::{check_dpi, choi_distance, compose, KrausChannel, MapKind};
use crate::dqc::{plan_dqc, reference_program, verify as dqc_verify, Pauli, Stage};
use crate::error::Result;
use crate::linalg::random::random_density;
use crate::linalg::{fidelity, herm_eig, ComplexMatrix, DensityMatrix, C64, ONE, ZERO};
use crate::nmr::{self, SpinSystem, QUBIT_C, QUBIT_F, QUBIT_H};
use crate::petz::{self, petz_general_for, reference_state, ChannelFamily};

type ClosedForm = fn(f64, f64) -> Result<KrausChannel>;

/// Knobs for [`verify_all`].
#[derive(Clone, Copy)]
pub struct VerifyOptions {
    /// Replaces every check's tolerance when set.
    pub tolerance_override: Option<f64>,
    pub petz_ad_closed: ClosedForm,
    pub petz_pd_closed: ClosedForm,
    pub dpi_trials: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            tolerance_override: None,
            petz_ad_closed: petz::petz_ad_closed,
            petz_pd_closed: petz::petz_pd_closed,
            dpi_trials: 200,
            seed: 2024,
        }
    }
}

impl VerifyOptions {
    fn closed(&self, fam: ChannelFamily, p: f64, eps: f64) -> Result<KrausChannel> {
        match fam {
            ChannelFamily::Ad => (self.petz_ad_closed)(p, eps),
            ChannelFamily::Pd => (self.petz_pd_closed)(p, eps),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst residual seen; compared against `tolerance`.
    pub max_residual: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "[{}] {:<28} max residual {:.3e} (tol {:.1e}){}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.max_residual,
                c.tolerance,
                if c.detail.is_empty() { String::new() } else { format!("  {}", c.detail) }
            )?;
        }
        let failed = self.failures().count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

/// Worst residual and where it occurred.
struct Worst {
    value: f64,
    at: String,
}

impl Worst {
    fn new() -> Self {
        Self {
            value: 0.0,
            at: String::new(),
        }
    }

    fn update(&mut self, value: f64, at: impl FnOnce() -> String) {
        // NaN counts as a failure
        if value.is_nan() || value > self.value {
            self.value = if value.is_nan() { f64::INFINITY } else { value };
            self.at = at();
        }
    }
}

pub const EPSILONS: [f64; 3] = [0.2, 0.5, 0.8];

/// p = 0.05, 0.10, …, 0.95.
pub fn interior_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 / 20.0).collect()
}

/// p = 0, 0.05, …, 1.
pub fn full_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

const FAMILIES: [ChannelFamily; 2] = [ChannelFamily::Ad, ChannelFamily::Pd];

fn closed_vs_general(opts: &VerifyOptions) -> Result<Worst> {
    let mut w = Worst::new();
    for fam in FAMILIES {
        for p in interior_grid() {
            for eps in EPSILONS {
                let d = choi_distance(&petz_general_for(fam, p, eps)?, &opts.closed(fam, p, eps)?)?;
                w.update(d, || format!("{fam} p={p} eps={eps}"));
            }
        }
    }
    Ok(w)
}

/// Every channel the library builds on the full grid.
fn constructed_channels(opts: &VerifyOptions) -> Result<Vec<KrausChannel>> {
    let mut out = Vec::new();
    for fam in FAMILIES {
        for p in full_grid() {
            let damping = fam.damping(p)?;
            for eps in EPSILONS {
                let closed = opts.closed(fam, p, eps)?;
                let general = petz_general_for(fam, p, eps)?;
                out.push(compose(&closed, &damping)?);
                out.push(compose(&damping, &closed)?);
                out.push(closed);
                out.push(general);
            }
            out.push(damping);
        }
    }
    Ok(out)
}

/// TP residual, or for support-deficient maps the excess of Σ M†M over 1
/// (such maps only have to be trace non-increasing).
fn trace_residual(ch: &KrausChannel) -> Result<f64> {
    if ch.kind() != MapKind::SupportDeficient {
        return Ok(ch.tp_residual());
    }
    let sum = ch
        .kraus()
        .iter()
        .fold(ComplexMatrix::zeros(ch.dim_in(), ch.dim_in()), |acc, k| &acc + &(&k.dagger() * k));
    Ok((herm_eig(&sum)?.max_eigenvalue() - 1.0).max(0.0))
}

fn cptp(opts: &VerifyOptions) -> Result<(Worst, Worst)> {
    let mut tp = Worst::new();
    let mut cp = Worst::new();
    for ch in constructed_channels(opts)? {
        tp.update(trace_residual(&ch)?, || ch.label().to_string());
        let min = ch.choi().min_eigenvalue();
        cp.update(-min, || ch.label().to_string());
    }
    Ok((tp, cp))
}

fn reference_recovery(opts: &VerifyOptions) -> Result<Worst> {
    let mut w = Worst::new();
    for fam in FAMILIES {
        for p in full_grid() {
            for eps in EPSILONS {
                let sigma = reference_state(fam.basis(), eps)?.state;
                let out = opts.closed(fam, p, eps)?.apply(&fam.damping(p)?.apply(&sigma)?)?;
                let f = fidelity(&out, &sigma)?;
                w.update((1.0 - f).abs(), || format!("{fam} p={p} eps={eps}"));
            }
        }
    }
    Ok(w)
}

fn dpi(opts: &VerifyOptions) -> Result<Worst> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let grid = full_grid();
    let mut w = Worst::new();
    for t in 0..opts.dpi_trials {
        let fam = FAMILIES[t % 2];
        let p = grid[(t / 2) % grid.len()];
        let ch = fam.damping(p)?;
        let rho = random_density(&mut rng, 2);
        let sigma = random_density(&mut rng, 2);
        let check = check_dpi(&ch, &rho, &sigma)?;
        w.update(check.after - check.before, || format!("trial {t}: {fam} p={p}"));
    }
    Ok(w)
}

fn dqc_programs(opts: &VerifyOptions) -> Result<Worst> {
    let mut w = Worst::new();
    for fam in FAMILIES {
        for p in full_grid() {
            let damping = fam.damping(p)?;
            w.update(dqc_verify(&plan_dqc(&damping)?, &damping)?, || damping.label().to_string());
            for eps in EPSILONS {
                let rec = opts.closed(fam, p, eps)?;
                w.update(dqc_verify(&plan_dqc(&rec)?, &rec)?, || rec.label().to_string());
            }
        }
    }
    Ok(w)
}

fn dqc_reference(opts: &VerifyOptions) -> Result<Worst> {
    let mut w = Worst::new();
    for fam in FAMILIES {
        for p in full_grid() {
            for eps in EPSILONS {
                let d = dqc_verify(&reference_program(fam, Stage::Damping, p, eps)?, &fam.damping(p)?)?;
                w.update(d, || format!("{fam} damping p={p}"));
                let r = dqc_verify(&reference_program(fam, Stage::Recovery, p, eps)?, &opts.closed(fam, p, eps)?)?;
                w.update(r, || format!("{fam} recovery p={p} eps={eps}"));
            }
        }
    }
    Ok(w)
}

fn gate_blocks() -> Result<Worst> {
    let sys = SpinSystem::default();
    let cz = ComplexMatrix::diag_real(&[1.0, 1.0, 1.0, -1.0]);
    let cnot = ComplexMatrix::from_real_rows(&[
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 0.0],
    ]);
    let mut w = Worst::new();
    for (a, b) in [(QUBIT_F, QUBIT_H), (QUBIT_F, QUBIT_C), (QUBIT_H, QUBIT_C)] {
        let u = nmr::cz_block(&sys, a, b)?.unitary(&sys)?;
        let d = nmr::phase_distance(&u, &nmr::embed(&cz, &[a, b], 3)?)?;
        w.update(d, || format!("CZ {a}{b}"));
        for (c, t) in [(a, b), (b, a)] {
            let u = nmr::controlled_pauli_block(&sys, c, t, Pauli::X)?.unitary(&sys)?;
            let d = nmr::phase_distance(&u, &nmr::embed(&cnot, &[c, t], 3)?)?;
            w.update(d, || format!("CNOT {c}->{t}"));
        }
    }
    Ok(w)
}

fn pulse_stages() -> Result<Worst> {
    let sys = SpinSystem::default();
    let mut w = Worst::new();
    for fam in FAMILIES {
        for p in full_grid() {
            for eps in EPSILONS {
                let (damp, rec) = nmr::experiment_programs(fam, p, eps)?;
                let stages = nmr::compile_experiment(fam, &sys, p, eps)?.stages();
                let g1 = nmr::embed(&damp.assemble_unitary(), &[QUBIT_F, QUBIT_H], 3)?;
                let g2 = nmr::embed(&rec.assemble_unitary(), &[QUBIT_F, QUBIT_C], 3)?;
                let d1 = nmr::phase_distance(&stages[0].unitary(&sys)?, &g1)?;
                let d2 = nmr::phase_distance(&stages[1].unitary(&sys)?, &g2)?;
                w.update(d1.max(d2), || format!("{fam} p={p} eps={eps}"));
            }
        }
    }
    Ok(w)
}

fn pulse_channels(opts: &VerifyOptions) -> Result<Worst> {
    let sys = SpinSystem::default();
    let pps = nmr::pps_state(1.0)?;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let inputs = [
        [ONE, ZERO],
        [ZERO, ONE],
        [C64::new(r, 0.0), C64::new(r, 0.0)],
        [C64::new(r, 0.0), C64::new(0.0, r)],
    ];
    let mut w = Worst::new();
    for fam in FAMILIES {
        for p in full_grid().into_iter().step_by(2) {
            for eps in EPSILONS {
                let seq = nmr::compile_experiment(fam, &sys, p, eps)?;
                let chain = compose(&opts.closed(fam, p, eps)?, &fam.damping(p)?)?;
                for psi in &inputs {
                    let mut full = nmr::prepare_state(QUBIT_F, psi)?;
                    full.extend(&seq);
                    let got = nmr::run_on_pps(&full, &sys, &pps, QUBIT_F)?;
                    let input = DensityMatrix::pure(psi)?;
                    let want = chain.apply(&input)?;
                    let d = (fidelity(&got, &input)? - fidelity(&want, &input)?).abs();
                    w.update(d, || format!("{fam} p={p} eps={eps}"));
                }
            }
        }
    }
    Ok(w)
}

fn record(
    report: &mut VerifyReport,
    opts: &VerifyOptions,
    name: &'static str,
    tolerance: f64,
    outcome: Result<Worst>,
) {
    record_str(report, opts, name, tolerance, outcome.map_err(|e| e.to_string()));
}

fn record_str(
    report: &mut VerifyReport,
    opts: &VerifyOptions,
    name: &'static str,
    tolerance: f64,
    outcome: std::result::Result<Worst, String>,
) {
    let tol = opts.tolerance_override.unwrap_or(tolerance);
    let check = match outcome {
        Ok(w) => CheckResult {
            name,
            passed: w.value <= tol,
            max_residual: w.value,
            tolerance: tol,
            detail: if w.value > tol { format!("worst at {}", w.at) } else { String::new() },
        },
        Err(e) => CheckResult {
            name,
            passed: false,
            max_residual: f64::INFINITY,
            tolerance: tol,
            detail: format!("error: {e}"),
        },
    };
    report.checks.push(check);
}

/// Runs every invariant suite of the channel, Petz, DQC and NMR layers.
/// Failures are report entries, never panics.
pub fn verify_all(opts: &VerifyOptions) -> VerifyReport {
    let mut report = VerifyReport::default();
    record(&mut report, opts, "petz closed vs general", 1e-8, closed_vs_general(opts));
    match cptp(opts) {
        Ok((tp, cp)) => {
            record(&mut report, opts, "trace preservation", 1e-8, Ok(tp));
            record(&mut report, opts, "complete positivity", 1e-9, Ok(cp));
        }
        Err(e) => {
            record_str(&mut report, opts, "trace preservation", 1e-8, Err(e.to_string()));
            record_str(&mut report, opts, "complete positivity", 1e-9, Err(e.to_string()));
        }
    }
    record(&mut report, opts, "reference recovery", 1e-9, reference_recovery(opts));
    record(&mut report, opts, "data processing", 1e-8, dpi(opts));
    record(&mut report, opts, "dqc programs", 1e-8, dqc_programs(opts));
    record(&mut report, opts, "dqc reference programs", 1e-8, dqc_reference(opts));
    record(&mut report, opts, "cz/cnot blocks", 1e-8, gate_blocks());
    record(&mut report, opts, "pulse stage unitaries", 1e-8, pulse_stages());
    record(&mut report, opts, "pulse channel fidelity", 1e-6, pulse_channels(opts));
    report
}
