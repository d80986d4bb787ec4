//! Config files, command-line overrides and the run driver that writes
//! output files.

use std::fs;
use std::path::{Path, PathBuf};

use crate::diagnostics::{energy_series, EnergyRow};
use crate::experiments::ExperimentConfig;
use crate::flow::{run_flow, FlowOutcome, FlowParams, FlowStatus};
use crate::output::{svg_energy, svg_triod, write_energy_csv, write_snapshot_csv, Snapshot, SnapshotRecorder};
use crate::{Error, Result};

/// Parses a config document; errors name the offending field.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Config {
            path: if path == "." { String::new() } else { path },
            message: e.into_inner().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn config_to_string(cfg: &ExperimentConfig) -> String {
    let mut s = serde_json::to_string_pretty(cfg).expect("config serializes");
    s.push('\n');
    s
}

pub fn save_config(cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    fs::write(path, config_to_string(cfg))?;
    Ok(())
}

/// Command-line values that replace config fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub segments: Option<usize>,
    pub dt: Option<String>,
    pub t_end: Option<f64>,
    pub eps_sing: Option<f64>,
    pub eps_steady: Option<f64>,
    pub svg: bool,
    pub snapshots: Option<Vec<f64>>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(j) = self.segments {
            cfg.segments = j;
        }
        if let Some(dt) = &self.dt {
            cfg.dt = dt.clone();
        }
        if let Some(t) = self.t_end {
            cfg.t_end = t;
        }
        if self.eps_sing.is_some() {
            cfg.eps_sing = self.eps_sing;
        }
        if let Some(e) = self.eps_steady {
            cfg.eps_steady = e;
        }
        if self.svg {
            cfg.outputs.svg = true;
        }
        if let Some(s) = &self.snapshots {
            cfg.outputs.snapshots = s.clone();
        }
        cfg.validate()
    }
}

/// Everything a run produced, in memory.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub outcome: FlowOutcome,
    pub energy: Vec<EnergyRow>,
    pub snapshots: Vec<Snapshot>,
    pub files: Vec<PathBuf>,
}

pub fn flow_params(cfg: &ExperimentConfig) -> Result<FlowParams> {
    let mut p = FlowParams::new(cfg.dt_value()?, cfg.t_end);
    p.eps_sing = cfg.eps_sing;
    p.eps_steady = cfg.eps_steady;
    Ok(p)
}

/// Runs `cfg`. With `out_dir` set, writes `energy.csv`, `snapshots.csv`,
/// the plots and the effective config there.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<RunResult> {
    let t0 = cfg.initial_state()?;
    let params = flow_params(cfg)?;
    let mut recorder = SnapshotRecorder::new(&cfg.outputs.snapshots, t0.time, params.dt);
    let outcome = run_flow(&t0, &params, |s, _| recorder.observe(s))?;
    let snapshots = recorder.finish(&outcome);
    let energy = energy_series(&outcome)?;

    let mut files = Vec::new();
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        let path = dir.join("config.json");
        save_config(cfg, &path)?;
        files.push(path);
        if cfg.outputs.csv {
            let path = dir.join("energy.csv");
            write_energy_csv(&energy, fs::File::create(&path)?)?;
            files.push(path);
        }
        if !snapshots.is_empty() {
            let path = dir.join("snapshots.csv");
            write_snapshot_csv(&snapshots, fs::File::create(&path)?)?;
            files.push(path);
        }
        if cfg.outputs.svg {
            let plots: Vec<Snapshot> = if snapshots.is_empty() {
                vec![Snapshot::of(&outcome.initial_state), Snapshot::of(&outcome.final_state)]
            } else {
                snapshots.clone()
            };
            let path = dir.join("triod.svg");
            fs::write(&path, svg_triod(&plots)?)?;
            files.push(path);
            let path = dir.join("triod_final.svg");
            fs::write(&path, svg_triod(&[Snapshot::of(&outcome.final_state)])?)?;
            files.push(path);
            let path = dir.join("energy.svg");
            fs::write(&path, svg_energy(&energy, outcome.vanished_curve)?)?;
            files.push(path);
        }
    }
    Ok(RunResult {
        outcome,
        energy,
        snapshots,
        files,
    })
}

/// Process exit code for a finished run.
pub fn exit_code(status: FlowStatus) -> i32 {
    match status {
        FlowStatus::ReachedT => 0,
        FlowStatus::SteadyState => 3,
        FlowStatus::Singularity => 4,
        FlowStatus::NumericFailure => 5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{builtin_experiment, EXPERIMENT_COUNT};

    #[test]
    fn builtin_configs_round_trip() {
        for id in 1..=EXPERIMENT_COUNT {
            let cfg = builtin_experiment(id).unwrap();
            let back = parse_config(&config_to_string(&cfg)).unwrap();
            assert_eq!(back, cfg, "experiment {id}");
        }
    }

    #[test]
    fn errors_carry_field_path() {
        let mut v: serde_json::Value = serde_json::to_value(builtin_experiment(1).unwrap()).unwrap();
        v["endpoints"][1]["x"] = serde_json::json!("one");
        match parse_config(&v.to_string()) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "endpoints[1].x"),
            other => panic!("{other:?}"),
        }
        v["endpoints"][1]["x"] = serde_json::json!(1.0);
        v["dt"] = serde_json::json!("fast");
        match parse_config(&v.to_string()) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "dt"),
            other => panic!("{other:?}"),
        }
        v["dt"] = serde_json::json!("1e-4");
        v["schema"] = serde_json::json!(7);
        assert!(matches!(parse_config(&v.to_string()), Err(Error::Config { path, .. }) if path == "schema"));
    }

    #[test]
    fn overrides_replace_fields() {
        let mut cfg = builtin_experiment(2).unwrap();
        let o = Overrides {
            segments: Some(50),
            dt: Some("1e-3".into()),
            t_end: Some(0.25),
            ..Default::default()
        };
        o.apply(&mut cfg).unwrap();
        assert_eq!((cfg.segments, cfg.dt.as_str(), cfg.t_end), (50, "1e-3", 0.25));
        let bad = Overrides {
            segments: Some(1),
            ..Default::default()
        };
        assert!(bad.apply(&mut cfg).is_err());
    }

    #[test]
    fn short_run_writes_files() {
        let dir = std::env::temp_dir().join(format!("heis-triod-runner-{}", std::process::id()));
        let mut cfg = builtin_experiment(2).unwrap();
        cfg.t_end = 0.01;
        cfg.dt = "1e-3".into();
        cfg.outputs.svg = true;
        cfg.outputs.snapshots = vec![0.0, 0.005];
        let r = run_experiment(&cfg, Some(&dir)).unwrap();
        assert_eq!(r.outcome.status, FlowStatus::ReachedT);
        assert_eq!(r.energy.len(), 11);
        for f in &r.files {
            assert!(f.exists(), "{}", f.display());
        }
        let _ = fs::remove_dir_all(&dir);
    }
}
