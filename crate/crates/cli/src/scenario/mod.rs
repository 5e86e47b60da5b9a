//! Scenario registry and dispatch: each kind declares its key schema and a
//! runner that writes CSV artifacts plus a summary with pass/fail checks.

mod evolve;
mod fluids;
mod gaussian;
mod rescaled;
mod solitons;
mod tau;
mod verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::{self, ConfigError, KeySpec, Params};
use crate::CliError;

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Output sink handed to a scenario runner.
pub struct ScenarioIo {
    pub dir: PathBuf,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub notes: Vec<(String, String)>,
}

impl ScenarioIo {
    pub fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    pub fn note(&mut self, key: &str, value: String) {
        self.notes.push((key.to_string(), value));
    }

    pub fn write_csv(&self, file: &str, header: &str, rows: &[String]) -> Result<(), CliError> {
        fs::create_dir_all(&self.dir)?;
        let mut text = String::with_capacity(rows.len() * 64 + header.len() + 2);
        text.push_str(header);
        text.push('\n');
        for row in rows {
            text.push_str(row);
            text.push('\n');
        }
        fs::write(self.dir.join(file), text)?;
        Ok(())
    }
}

pub struct ScenarioDef {
    pub kind: &'static str,
    pub about: &'static str,
    pub schema: &'static [KeySpec],
    pub run: fn(&Params, &mut ScenarioIo) -> Result<(), CliError>,
}

pub fn kinds() -> &'static [ScenarioDef] {
    &[
        ScenarioDef {
            kind: "tau",
            about: "dispersion scale ODE with its first-integral audit",
            schema: tau::SCHEMA,
            run: tau::run,
        },
        ScenarioDef {
            kind: "gaussian",
            about: "exact Gaussian width/amplitude trajectories, breather period",
            schema: gaussian::SCHEMA,
            run: gaussian::run,
        },
        ScenarioDef {
            kind: "evolve",
            about: "physical-frame split-step run with diagnostics",
            schema: evolve::SCHEMA,
            run: evolve::run,
        },
        ScenarioDef {
            kind: "rescaled",
            about: "rescaled-frame long-time run with moment and pseudo-energy audits",
            schema: rescaled::SCHEMA,
            run: rescaled::run,
        },
        ScenarioDef {
            kind: "solitons",
            about: "gausson stationarity, orbital stability and superposition sweeps",
            schema: solitons::SCHEMA,
            run: solitons::run,
        },
        ScenarioDef {
            kind: "fluids",
            about: "isothermal gaussian-ansatz dynamics with energy/BD-entropy audits",
            schema: fluids::SCHEMA,
            run: fluids::run,
        },
        ScenarioDef {
            kind: "verify",
            about: "property suites: inequality audits and spectral invariants",
            schema: verify::SCHEMA,
            run: verify::run,
        },
    ]
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub name: String,
    pub kind: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub out_dir: PathBuf,
}

/// Parse and run one scenario config; writes artifacts and the summary file.
pub fn run_config_text(text: &str, out_root: &Path, seed: u64) -> Result<RunReport, CliError> {
    let entries = config::parse_entries(text)?;
    let kind_value = entries
        .iter()
        .find(|(k, _, _)| k == "kind")
        .map(|(_, v, _)| v.clone())
        .ok_or_else(|| ConfigError::general("missing required key `kind`"))?;
    let def = kinds()
        .iter()
        .find(|d| d.kind == kind_value)
        .ok_or_else(|| {
            ConfigError::general(format!(
                "unknown kind `{kind_value}` (see `lognls list-kinds`)"
            ))
        })?;
    let name = entries
        .iter()
        .find(|(k, _, _)| k == "name")
        .map(|(_, v, _)| v.clone())
        .unwrap_or_else(|| kind_value.clone());
    let rest: Vec<(String, String, usize)> = entries
        .into_iter()
        .filter(|(k, _, _)| k != "kind" && k != "name")
        .collect();
    let params = Params::build(&rest, def.schema)?;

    let mut io = ScenarioIo {
        dir: out_root.join(&name),
        seed,
        checks: Vec::new(),
        notes: Vec::new(),
    };
    fs::create_dir_all(&io.dir)?;
    let started = Instant::now();
    (def.run)(&params, &mut io)?;
    let wall = started.elapsed().as_secs_f64();

    let passed = io.checks.iter().all(|c| c.passed);
    let mut summary = String::new();
    summary.push_str(&format!("kind = {kind_value}\n"));
    summary.push_str(&format!("name = {name}\n"));
    summary.push_str(&format!("seed = {seed}\n"));
    for (k, v) in params.resolved() {
        summary.push_str(&format!("{k} = {v}\n"));
    }
    for (k, v) in &io.notes {
        summary.push_str(&format!("{k} = {v}\n"));
    }
    for c in &io.checks {
        summary.push_str(&format!(
            "check_{} = {}\n",
            c.name,
            if c.passed { "pass" } else { "fail" }
        ));
        summary.push_str(&format!("check_{}_detail = {}\n", c.name, c.detail));
    }
    summary.push_str(&format!("status = {}\n", if passed { "pass" } else { "fail" }));
    summary.push_str(&format!("wall_time_s = {wall:.3}\n"));
    fs::write(io.dir.join("summary.txt"), summary)?;

    Ok(RunReport {
        name,
        kind: kind_value,
        passed,
        checks: io.checks,
        out_dir: io.dir,
    })
}

pub fn run_config_file(path: &Path, out_root: &Path, seed: u64) -> Result<RunReport, CliError> {
    let text = fs::read_to_string(path)?;
    run_config_text(&text, out_root, seed)
}
