//! `export-smt`: write one query file per region (or one for all) and,
//! optionally, run an external solver on each.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use rbc_core::invariance::enumerate_boundary;
use rbc_core::smt_export::{decide_linear, export_invariance, export_set_condition, ExportOptions};
use rbc_core::{SetKind, SmtMode, SmtQuery};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::problem::Problem;

#[derive(Debug, Clone)]
pub struct ExportFlags {
    pub monolithic: bool,
    pub set_conditions: bool,
    pub assert_domain: bool,
    /// Command template; `{file}` is replaced by the query path.
    pub solver_cmd: Option<String>,
    pub solver_timeout: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub condition: String,
    pub regions: Vec<String>,
    pub logic: String,
    /// `sat` / `unsat` decided by LP when the query is linear.
    pub internal: Option<String>,
    pub solver: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bridge {
    pub command: Option<String>,
    /// `not-configured`, `ran` or `unavailable`.
    pub status: String,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub problem: String,
    pub mode: SmtMode,
    pub files: Vec<ManifestEntry>,
    pub bridge: Bridge,
}

pub fn run_export(problem: &Problem, out_dir: &Path, flags: &ExportFlags) -> Result<Manifest> {
    let cfg = &problem.config;
    let (enumeration, _) =
        enumerate_boundary(&problem.network, &problem.initial, &problem.unsafe_set, cfg)?;
    let mode = if flags.monolithic {
        SmtMode::Monolithic
    } else {
        SmtMode::PerRegion
    };
    let mut opts = ExportOptions::new(mode, cfg);
    if flags.assert_domain {
        opts.domain = Some(cfg.domain.clone());
    }
    let regions = &enumeration.regions;
    let mut batches: Vec<(&str, Vec<SmtQuery>)> = vec![(
        "invariance",
        export_invariance(regions, &problem.dynamics, &opts)?,
    )];
    if flags.set_conditions {
        batches.push((
            "initial",
            export_set_condition(regions, &problem.initial, SetKind::Initial, &opts)?,
        ));
        batches.push((
            "unsafe",
            export_set_condition(regions, &problem.unsafe_set, SetKind::Unsafe, &opts)?,
        ));
    }

    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut files = Vec::new();
    let mut written = Vec::new();
    for (condition, queries) in &batches {
        for (k, q) in queries.iter().enumerate() {
            let name = match mode {
                SmtMode::PerRegion => format!(
                    "{condition}_{k:04}_{}.smt2",
                    q.region_ids[0].replace('|', "-")
                ),
                SmtMode::Monolithic => format!("{condition}.smt2"),
            };
            let path = out_dir.join(&name);
            written.push((path, q.text.clone()));
            let internal = decide_linear(&q.text, cfg.tol_feas)?
                .map(|sat| if sat { "sat" } else { "unsat" }.to_string());
            files.push(ManifestEntry {
                file: name,
                condition: condition.to_string(),
                regions: q.region_ids.clone(),
                logic: q.logic_tag.clone(),
                internal,
                solver: None,
            });
        }
    }
    for (path, text) in &written {
        fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    }

    let bridge = match &flags.solver_cmd {
        None => Bridge {
            command: None,
            status: "not-configured".into(),
            message: None,
        },
        Some(cmd) => run_solver(cmd, &written, &mut files, flags.solver_timeout),
    };
    let manifest = Manifest {
        problem: problem.path.display().to_string(),
        mode,
        files,
        bridge,
    };
    let manifest_path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    fs::write(&manifest_path, text + "\n").map_err(|e| CliError::io(&manifest_path, e))?;
    Ok(manifest)
}

fn run_solver(
    template: &str,
    written: &[(PathBuf, String)],
    files: &mut [ManifestEntry],
    timeout: Duration,
) -> Bridge {
    let words: Vec<&str> = template.split_whitespace().collect();
    let Some((program, args)) = words.split_first() else {
        return Bridge {
            command: Some(template.into()),
            status: "unavailable".into(),
            message: Some("empty solver command".into()),
        };
    };
    for ((path, _), entry) in written.iter().zip(files.iter_mut()) {
        let file = path.display().to_string();
        let args: Vec<String> = args.iter().map(|a| a.replace("{file}", &file)).collect();
        match run_one(program, &args, timeout) {
            Ok(answer) => entry.solver = Some(answer),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Bridge {
                    command: Some(template.into()),
                    status: "unavailable".into(),
                    message: Some(format!("`{program}` not found")),
                };
            }
            Err(e) => entry.solver = Some(format!("error: {e}")),
        }
    }
    Bridge {
        command: Some(template.into()),
        status: "ran".into(),
        message: None,
    }
}

/// First non-empty output line of the solver, or `timeout`.
fn run_one(program: &str, args: &[String], timeout: Duration) -> std::io::Result<String> {
    let mut child = Command::new(program)
        .args(args)
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()?;
    let mut stdout = child.stdout.take().expect("stdout is piped");
    let reader = thread::spawn(move || {
        let mut buf = String::new();
        let _ = stdout.read_to_string(&mut buf);
        buf
    });
    let start = Instant::now();
    while child.try_wait()?.is_none() {
        if start.elapsed() > timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Ok("timeout".into());
        }
        thread::sleep(Duration::from_millis(10));
    }
    let text = reader.join().unwrap_or_default();
    Ok(text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or("no-output")
        .to_string())
}
