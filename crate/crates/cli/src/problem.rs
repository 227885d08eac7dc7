//! Problem files: a JSON document naming the network, the vector field and
//! the two sets.

use std::fs;
use std::path::{Path, PathBuf};

use rbc_core::dynamics::parse;
use rbc_core::{Config, DynamicsSystem, Expr, ReluNetwork};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    pub tol_feas: Option<f64>,
    pub tol_rank: Option<f64>,
    pub tol_eq: Option<f64>,
    pub tol_zero: Option<f64>,
    pub tol_propagate: Option<f64>,
    pub tol_margin: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSpec {
    pub branch_cap: Option<usize>,
    pub bisection_eps: Option<f64>,
    pub max_attempts: Option<usize>,
    pub falsify_budget: Option<usize>,
    pub max_boxes: Option<usize>,
    pub min_box_width: Option<f64>,
    pub membership_samples: Option<usize>,
    pub max_regions: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    /// Relative to the directory of the problem file.
    pub network_path: String,
    pub dynamics: Vec<String>,
    /// `h_I`; the initial set is `{h_I > 0}`.
    pub initial_set: String,
    /// `h_U`; the unsafe set is `{h_U > 0}`.
    pub unsafe_set: String,
    #[serde(default)]
    pub domain_box: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    #[serde(default)]
    pub budgets: BudgetSpec,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// A validated problem ready to run.
#[derive(Debug, Clone)]
pub struct Problem {
    pub path: PathBuf,
    pub spec: ProblemSpec,
    pub network: ReluNetwork,
    pub dynamics: DynamicsSystem,
    pub initial: Expr,
    pub unsafe_set: Expr,
    pub config: Config,
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.network.input_dim
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn load_network(path: &Path) -> Result<ReluNetwork> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::json(path, e))
}

pub fn load_problem(path: &Path) -> Result<Problem> {
    let spec: ProblemSpec =
        serde_json::from_str(&read(path)?).map_err(|e| CliError::json(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let network = load_network(&base.join(&spec.network_path))?;
    let n = network.input_dim;
    if spec.dynamics.len() != n {
        return Err(CliError::DimensionMismatch(format!(
            "{} dynamics components for a network with {} inputs",
            spec.dynamics.len(),
            n
        )));
    }
    let dynamics = DynamicsSystem::parse(&spec.dynamics, n)?;
    let initial = parse(&spec.initial_set, n)?;
    let unsafe_set = parse(&spec.unsafe_set, n)?;
    let config = build_config(&spec, n)?;
    Ok(Problem {
        path: path.to_path_buf(),
        spec,
        network,
        dynamics,
        initial,
        unsafe_set,
        config,
    })
}

fn build_config(spec: &ProblemSpec, n: usize) -> Result<Config> {
    let domain: Vec<(f64, f64)> = match &spec.domain_box {
        Some(b) => {
            if b.len() != n {
                return Err(CliError::DimensionMismatch(format!(
                    "domain box has {} intervals for dimension {}",
                    b.len(),
                    n
                )));
            }
            b.iter().map(|[lo, hi]| (*lo, *hi)).collect()
        }
        None => vec![(-3.0, 3.0); n],
    };
    if let Some(i) = domain.iter().position(|(lo, hi)| !(lo < hi)) {
        return Err(CliError::Invalid(format!(
            "domain interval {} is empty: [{}, {}]",
            i + 1,
            domain[i].0,
            domain[i].1
        )));
    }
    let mut c = Config {
        domain,
        seed: spec.seed.unwrap_or(0),
        ..Config::default()
    };
    let t = &spec.tolerances;
    macro_rules! apply {
        ($src:expr, $($field:ident),*) => {
            $(if let Some(v) = $src.$field { c.$field = v; })*
        };
    }
    apply!(
        t,
        tol_feas,
        tol_rank,
        tol_eq,
        tol_zero,
        tol_propagate,
        tol_margin
    );
    let b = &spec.budgets;
    apply!(
        b,
        branch_cap,
        bisection_eps,
        max_attempts,
        falsify_budget,
        max_boxes,
        min_box_width,
        membership_samples
    );
    if b.max_regions.is_some() {
        c.max_regions = b.max_regions;
    }
    Ok(c)
}
