use std::path::PathBuf;

use raqst::quantum::{purity, DensityMatrix};
use raqst::reporting::{
    aggregate, gill_massar_bound, improvement_from_means, write_atomic, write_results, write_trials_jsonl, write_upsilon, SweepRow,
    TrialRecord, UpsilonRow,
};
use raqst::simulator::{monte_carlo, state_rng, werner_state, ProtocolKind};
use serde::Serialize;

use crate::config::{werner_weight_for_purity, Experiment, RunConfig};
use crate::CliError;

pub const RESULTS_FILE: &str = "results.csv";
pub const TRIALS_FILE: &str = "trials.jsonl";
pub const UPSILON_FILE: &str = "upsilon.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub rows: Vec<SweepRow>,
    pub upsilon: Vec<UpsilonRow>,
    pub trials: usize,
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    library_version: &'static str,
    config: &'a RunConfig,
    outputs: Vec<String>,
    trials: usize,
}

/// Runs the experiment in `cfg` and writes its outputs under `cfg.out_dir`.
pub fn execute(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::Runtime(raqst::Error::Io {
        path: cfg.out_dir.clone(),
        source: e,
    }))?;
    let mut summary = match cfg.experiment {
        Experiment::Single | Experiment::SweepN => fixed_state(cfg)?,
        Experiment::SweepPurity => purity_sweep(cfg)?,
        Experiment::Histogram => histogram(cfg)?,
    };
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        library_version: raqst::VERSION,
        config: cfg,
        outputs: summary
            .files
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
        trials: summary.trials,
    };
    let path = cfg.out_dir.join(MANIFEST_FILE);
    write_atomic(&path, |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest)?;
        w.write_all(b"\n")
    })?;
    summary.files.push(path);
    Ok(summary)
}

fn write_sweep(cfg: &RunConfig, trials: Vec<TrialRecord>) -> Result<RunSummary, CliError> {
    let rows = aggregate(&trials)?;
    let results = cfg.out_dir.join(RESULTS_FILE);
    let jsonl = cfg.out_dir.join(TRIALS_FILE);
    write_results(&rows, &results)?;
    write_trials_jsonl(&trials, &jsonl)?;
    Ok(RunSummary {
        rows,
        upsilon: Vec::new(),
        trials: trials.len(),
        files: vec![results, jsonl],
    })
}

fn fixed_state(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let state = cfg.state.realize(&mut state_rng(cfg.seed))?;
    log::info!("{:?} on {} (purity {:.4})", cfg.experiment, cfg.state, purity(&state));
    let mc = monte_carlo(&cfg.protocols, &state, &cfg.n_list, cfg.reps, cfg.seed, cfg.workers)?;
    write_sweep(cfg, mc.trials)
}

fn purity_sweep(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let mut trials = Vec::new();
    for &target in &cfg.purities {
        let state = werner_state(werner_weight_for_purity(target))?;
        log::info!("Werner state with purity {target}");
        trials.extend(monte_carlo(&cfg.protocols, &state, &cfg.n_list, cfg.reps, cfg.seed, cfg.workers)?.trials);
    }
    write_sweep(cfg, trials)
}

/// Per-state Υ of every adaptive protocol against cube measurements on the
/// same seeds.
fn histogram(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let mut protocols = vec![ProtocolKind::Cube];
    protocols.extend(cfg.protocols.iter().filter(|&&p| p != ProtocolKind::Cube));
    let mut rng = state_rng(cfg.seed);
    let mut trials = Vec::new();
    let mut upsilon = Vec::new();
    for index in 0..cfg.histogram_states {
        let state: DensityMatrix = cfg.state.realize(&mut rng)?;
        let mc = monte_carlo(&protocols, &state, &cfg.n_list, cfg.reps, cfg.seed, cfg.workers)?;
        let mean = |p: ProtocolKind, n: u64| {
            mc.rows
                .iter()
                .find(|r| r.protocol == p.label() && r.n_copies == n)
                .map(|r| r.mean_infidelity)
                .expect("every (protocol, N) pair has a row")
        };
        for &p in &protocols[1..] {
            for &n in &cfg.n_list {
                let (reference, adaptive) = (mean(ProtocolKind::Cube, n), mean(p, n));
                upsilon.push(UpsilonRow {
                    protocol: p.label().to_string(),
                    state_kind: cfg.state.to_string(),
                    state_index: index,
                    n_copies: n,
                    reps: cfg.reps,
                    reference_mean: reference,
                    adaptive_mean: adaptive,
                    gm_bound: gill_massar_bound(4, n)?,
                    upsilon: improvement_from_means(reference, adaptive, n)?,
                });
            }
        }
        log::info!("state {index}: done");
        trials.extend(mc.trials.into_iter().map(|t| TrialRecord {
            state_index: Some(index),
            ..t
        }));
    }
    let ups_path = cfg.out_dir.join(UPSILON_FILE);
    let jsonl = cfg.out_dir.join(TRIALS_FILE);
    write_upsilon(&upsilon, &ups_path)?;
    write_trials_jsonl(&trials, &jsonl)?;
    Ok(RunSummary {
        rows: Vec::new(),
        upsilon,
        trials: trials.len(),
        files: vec![ups_path, jsonl],
    })
}
