use rayon::prelude::*;

use super::config::{Backend, NamedState, SweepConfig};
use crate::channels::KrausChannel;
use crate::dqc::plan_dqc;
use crate::error::Result;
use crate::linalg::{fidelity, DensityMatrix};
use crate::nmr::{self, SpinSystem, QUBIT_F};
use crate::petz::ChannelFamily;

/// One point of a fidelity curve. Damped-only rows have no ε and no
/// recovered fidelity.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub state_label: String,
    pub channel: ChannelFamily,
    pub backend: Backend,
    pub p: f64,
    pub epsilon: Option<f64>,
    pub f_damped: f64,
    pub f_recovered: Option<f64>,
}

/// Damped and recovered outputs for one input under one backend.
struct Outcome {
    damped: DensityMatrix,
    recovered: Vec<DensityMatrix>,
}

fn run_kraus(damping: &KrausChannel, recoveries: &[KrausChannel], rho: &DensityMatrix) -> Result<Outcome> {
    let damped = damping.apply(rho)?;
    let recovered = recoveries.iter().map(|r| r.apply(&damped)).collect::<Result<_>>()?;
    Ok(Outcome { damped, recovered })
}

fn run_dqc(damping: &KrausChannel, recoveries: &[KrausChannel], rho: &DensityMatrix) -> Result<Outcome> {
    let damped = plan_dqc(damping)?.simulate(rho)?.output;
    let recovered = recoveries
        .iter()
        .map(|r| Ok(plan_dqc(r)?.simulate(&damped)?.output))
        .collect::<Result<_>>()?;
    Ok(Outcome { damped, recovered })
}

fn run_pulses(cfg: &SweepConfig, state: &NamedState, p: f64) -> Result<Outcome> {
    let sys = SpinSystem::default();
    let pps = nmr::pps_state(cfg.kappa)?;
    let mut prep = nmr::prepare_state(QUBIT_F, &state.amplitudes)?;
    prep.barrier();
    let mut damped = None;
    let mut recovered = Vec::with_capacity(cfg.epsilons.len());
    for &eps in &cfg.epsilons {
        let experiment = nmr::compile_experiment(cfg.channel, &sys, p, eps)?;
        if damped.is_none() {
            let mut first = prep.clone();
            first.extend(&experiment.stages()[0]);
            damped = Some(nmr::run_on_pps(&first, &sys, &pps, QUBIT_F)?);
        }
        let mut seq = prep.clone();
        seq.extend(&experiment);
        recovered.push(nmr::run_on_pps(&seq, &sys, &pps, QUBIT_F)?);
    }
    Ok(Outcome {
        damped: damped.expect("validated configs have at least one epsilon"),
        recovered,
    })
}

fn point(cfg: &SweepConfig, state: &NamedState, p: f64) -> Result<(f64, Vec<f64>)> {
    let rho = state.density();
    let outcome = match cfg.backend {
        Backend::Pulses => run_pulses(cfg, state, p)?,
        backend => {
            let damping = cfg.channel.damping(p)?;
            let recoveries = cfg
                .epsilons
                .iter()
                .map(|&e| cfg.channel.recovery(p, e))
                .collect::<Result<Vec<_>>>()?;
            if backend == Backend::Kraus {
                run_kraus(&damping, &recoveries, &rho)?
            } else {
                run_dqc(&damping, &recoveries, &rho)?
            }
        }
    };
    let f_damped = fidelity(&outcome.damped, &rho)?;
    let f_rec = outcome
        .recovered
        .iter()
        .map(|r| fidelity(r, &rho))
        .collect::<Result<_>>()?;
    Ok((f_damped, f_rec))
}

/// Damped and recovered fidelity, against the original input, for every
/// (state, p, ε). Rows come out grouped by state in config order; within a
/// state the damped-only rows come first, then one block per ε, each with
/// p ascending.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    let cfg = cfg.clone().validate()?;
    let tasks: Vec<(usize, f64)> = (0..cfg.input_states.len())
        .flat_map(|s| cfg.p_grid.iter().map(move |&p| (s, p)))
        .collect();
    let results = tasks
        .par_iter()
        .map(|&(s, p)| point(&cfg, &cfg.input_states[s], p))
        .collect::<Result<Vec<_>>>()?;

    let n_p = cfg.p_grid.len();
    let mut records = Vec::with_capacity(results.len() * (cfg.epsilons.len() + 1));
    for (s, state) in cfg.input_states.iter().enumerate() {
        let row = &results[s * n_p..(s + 1) * n_p];
        let base = |p: f64, f_damped: f64| SweepRecord {
            state_label: state.label.clone(),
            channel: cfg.channel,
            backend: cfg.backend,
            p,
            epsilon: None,
            f_damped,
            f_recovered: None,
        };
        for (&p, (fd, _)) in cfg.p_grid.iter().zip(row) {
            records.push(base(p, *fd));
        }
        for (e, &eps) in cfg.epsilons.iter().enumerate() {
            for (&p, (fd, fr)) in cfg.p_grid.iter().zip(row) {
                records.push(SweepRecord {
                    epsilon: Some(eps),
                    f_recovered: Some(fr[e]),
                    ..base(p, *fd)
                });
            }
        }
    }
    Ok(records)
}
