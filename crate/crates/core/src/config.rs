use serde::{Deserialize, Serialize};

use crate::polyhedron::Tolerances;

/// Tolerances and budgets shared by every phase of the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub tol_feas: f64,
    pub tol_rank: f64,
    pub tol_eq: f64,
    /// Pre-activations within this distance of zero count as both on and off.
    pub tol_zero: f64,
    /// Zero tolerance used at facet-intersection points during propagation;
    /// LP points carry roundoff well above `tol_zero`.
    pub tol_propagate: f64,
    /// Slack granted to verified lower bounds. Falsification additionally
    /// requires violations beyond [`FALSIFY_NOISE_GATE`].
    pub tol_margin: f64,
    pub branch_cap: usize,
    pub bisection_eps: f64,
    pub max_attempts: usize,
    pub falsify_budget: usize,
    pub max_boxes: usize,
    pub min_box_width: f64,
    /// Bounds used to compactify unbounded slices and for domain sampling.
    pub domain: Vec<(f64, f64)>,
    /// Half-width of the box used to extract a witness when an affine LP is unbounded.
    pub unbounded_box: f64,
    pub membership_samples: usize,
    pub max_regions: Option<usize>,
    pub oracle_cap: usize,
    pub seed: u64,
}

/// Violations smaller than this are treated as roundoff and never falsify.
pub const FALSIFY_NOISE_GATE: f64 = 1e-9;

impl Default for Config {
    fn default() -> Self {
        Config {
            tol_feas: crate::numeric::DEFAULT_TOL_FEAS,
            tol_rank: crate::numeric::DEFAULT_TOL_RANK,
            tol_eq: crate::polyhedron::DEFAULT_TOL_EQ,
            tol_zero: crate::relu_net::DEFAULT_TOL_ZERO,
            tol_propagate: 1e-6,
            tol_margin: 0.0,
            branch_cap: crate::relu_net::DEFAULT_BRANCH_CAP,
            bisection_eps: 1e-4,
            max_attempts: 10_000,
            falsify_budget: 200,
            max_boxes: 20_000,
            min_box_width: 1e-6,
            domain: Vec::new(),
            unbounded_box: 1e6,
            membership_samples: 100_000,
            max_regions: None,
            oracle_cap: 16,
            seed: 0,
        }
    }
}

impl Config {
    /// Default configuration over the box `[lo, hi]^n`.
    pub fn with_domain(n: usize, lo: f64, hi: f64) -> Self {
        Config {
            domain: vec![(lo, hi); n],
            ..Config::default()
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            feas: self.tol_feas,
            rank: self.tol_rank,
            eq: self.tol_eq,
        }
    }

    /// Threshold a value must fall below to count as a violation.
    pub fn falsify_threshold(&self) -> f64 {
        self.tol_margin.max(FALSIFY_NOISE_GATE)
    }

    pub fn domain_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        self.domain.iter().copied().unzip()
    }
}
