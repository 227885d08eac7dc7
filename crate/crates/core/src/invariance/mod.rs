//! The three barrier conditions, decided region by region over the slices
//! produced by enumeration.
//!
//! Every per-region question has the same shape: find the minimum of an
//! objective over a slice and compare it with `-tol_margin`. Affine
//! objectives are settled by one LP. Other objectives go through a local
//! falsification search and then interval branch-and-bound.

mod bab;
mod lp;
mod pipeline;
mod search;

pub use bab::verify_region_bab;
pub use lp::check_region_affine;
pub use pipeline::{
    enumerate_boundary, verify_certificate, Certification, Failure, SearchMode, Timings,
};
pub use search::falsify_region;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::dynamics::{DynamicsSystem, Expr, Interval};
use crate::enumeration::ValidRegion;
use crate::error::{Error, Result};
use crate::numeric::{dot, inf_norm, lp_solve, LpProblem, LpStatus};
use crate::polyhedron::SlicePolyhedron;
use crate::relu_net::{ActivationIndicator, ReluNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Verified,
    Falsified,
    Unknown,
}

impl Status {
    /// Falsified if any part is, Verified if all are, Unknown otherwise.
    pub fn combine<I: IntoIterator<Item = Status>>(parts: I) -> Status {
        let mut all_verified = true;
        for s in parts {
            match s {
                Status::Falsified => return Status::Falsified,
                Status::Unknown => all_verified = false,
                Status::Verified => {}
            }
        }
        if all_verified {
            Status::Verified
        } else {
            Status::Unknown
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Verified => "verified",
            Status::Falsified => "falsified",
            Status::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Lp,
    Falsification,
    BranchAndBound,
    Error,
}

/// Outcome of one minimisation over one region's slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub indicator: ActivationIndicator,
    pub status: Status,
    pub witness: Option<Vec<f64>>,
    /// Objective value at the witness.
    pub witness_value: Option<f64>,
    /// LP optimum, or the certified lower bound from branch-and-bound.
    pub bound: Option<f64>,
    pub method: Method,
    /// The slice turned out empty, so the condition holds trivially.
    pub vacuous: bool,
    /// The slice was unbounded and only its part inside the domain box was examined.
    pub domain_restricted: bool,
    pub boxes: usize,
    pub note: Option<String>,
}

impl RegionVerdict {
    fn new(indicator: &ActivationIndicator, status: Status, method: Method) -> Self {
        RegionVerdict {
            indicator: indicator.clone(),
            status,
            witness: None,
            witness_value: None,
            bound: None,
            method,
            vacuous: false,
            domain_restricted: false,
            boxes: 0,
            note: None,
        }
    }

    fn failed(indicator: &ActivationIndicator, err: &Error) -> Self {
        RegionVerdict {
            note: Some(err.to_string()),
            ..RegionVerdict::new(indicator, Status::Unknown, Method::Error)
        }
    }
}

/// A concrete point at which some condition fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub label: String,
    pub point: Vec<f64>,
    pub value: f64,
    pub indicator: Option<ActivationIndicator>,
}

/// A scalar function to be minimised over a slice.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    Linear { coeffs: Vec<f64>, offset: f64 },
    Nonlinear(Expr),
}

impl Objective {
    /// Linear when the expression is syntactically affine.
    pub fn from_expr(e: Expr, n: usize) -> Objective {
        match e.linear_form(n) {
            Some((coeffs, offset)) => Objective::Linear { coeffs, offset },
            None => Objective::Nonlinear(e),
        }
    }

    /// `w·f(x)` for the region normal `w`.
    pub fn invariance(sys: &DynamicsSystem, w: &[f64]) -> Objective {
        match sys.affine_decomposition() {
            Some((f, c)) => affine_directional(&f, &c, w),
            None => Objective::Nonlinear(sys.directional(w)),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            Objective::Linear { coeffs, offset } => Ok(dot(coeffs, x) + offset),
            Objective::Nonlinear(e) => e.eval(x),
        }
    }

    pub fn enclose(&self, bx: &[Interval]) -> Result<Interval> {
        match self {
            Objective::Linear { coeffs, offset } => Ok(coeffs
                .iter()
                .zip(bx)
                .fold(Interval::point(*offset), |acc, (&c, &iv)| {
                    acc + Interval::point(c) * iv
                })),
            Objective::Nonlinear(e) => e.eval_interval(bx),
        }
    }
}

/// `w·(F x + c)` as a linear objective.
pub fn affine_directional(f: &[Vec<f64>], c: &[f64], w: &[f64]) -> Objective {
    let n = w.len();
    let coeffs = (0..n)
        .map(|j| (0..n).map(|i| w[i] * f[i][j]).sum())
        .collect();
    Objective::Linear {
        coeffs,
        offset: dot(w, c),
    }
}

/// A slice as an LP constraint system, optionally cut down to a box.
#[derive(Debug, Clone)]
pub(crate) struct SliceSystem {
    pub n: usize,
    pub le: Vec<Vec<f64>>,
    pub le_rhs: Vec<f64>,
    pub eq: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
}

impl SliceSystem {
    pub fn new(s: &SlicePolyhedron) -> Self {
        let (eq, eq_rhs) = if inf_norm(&s.w) > 0.0 {
            (vec![s.w.clone()], vec![-s.b])
        } else {
            (Vec::new(), Vec::new())
        };
        SliceSystem {
            n: s.dim(),
            le: s.base.rows.clone(),
            le_rhs: s.base.rhs.clone(),
            eq,
            eq_rhs,
        }
    }

    pub fn with_box(&self, lo: &[f64], hi: &[f64]) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            let mut e = vec![0.0; self.n];
            e[i] = 1.0;
            out.le.push(e.clone());
            out.le_rhs.push(hi[i]);
            e[i] = -1.0;
            out.le.push(e);
            out.le_rhs.push(-lo[i]);
        }
        out
    }

    pub fn problem(&self, objective: Vec<f64>, maximize: bool) -> LpProblem {
        let p = if maximize {
            LpProblem::maximize(objective)
        } else {
            LpProblem::minimize(objective)
        };
        p.with_le(&self.le, &self.le_rhs)
            .with_eq(&self.eq, &self.eq_rhs)
    }

    /// Largest constraint violation, each row scaled by `max(1, ‖row‖∞)`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let le = self
            .le
            .iter()
            .zip(&self.le_rhs)
            .map(|(a, d)| (dot(a, x) - d) / inf_norm(a).max(1.0));
        let eq = self
            .eq
            .iter()
            .zip(&self.eq_rhs)
            .map(|(a, g)| (dot(a, x) - g).abs() / inf_norm(a).max(1.0));
        le.chain(eq).fold(0.0, f64::max)
    }

    /// Per-coordinate extremes, the points attaining them, or `None` when empty.
    #[allow(clippy::type_complexity)]
    pub fn bounding_box(
        &self,
        tol_feas: f64,
    ) -> Result<Option<(Vec<Option<f64>>, Vec<Option<f64>>, Vec<Vec<f64>>)>> {
        let mut lo = Vec::with_capacity(self.n);
        let mut hi = Vec::with_capacity(self.n);
        let mut points = Vec::new();
        for i in 0..self.n {
            let mut e = vec![0.0; self.n];
            e[i] = 1.0;
            for maximize in [false, true] {
                let out = lp_solve(&self.problem(e.clone(), maximize), tol_feas)?;
                if out.status == LpStatus::Infeasible {
                    return Ok(None);
                }
                let v = out.value;
                if let Some(p) = out.point {
                    points.push(p);
                }
                if maximize {
                    hi.push(v);
                } else {
                    lo.push(v);
                }
            }
        }
        Ok(Some((lo, hi, points)))
    }
}

/// Deterministic per-region random stream, independent of processing order.
pub(crate) fn region_rng(seed: u64, c: &ActivationIndicator, tag: u64) -> ChaCha8Rng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for bit in c.layers.iter().flatten().map(|&b| b as u64).chain([2, tag]) {
        h ^= bit;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(seed ^ h)
}

/// Classifies a candidate minimiser: `Some(verdict)` when `x` is a
/// re-validated witness.
pub(crate) fn confirm_witness(
    sys: &SliceSystem,
    obj: &Objective,
    x: &[f64],
    cfg: &Config,
) -> Option<(Vec<f64>, f64)> {
    if sys.violation(x) > cfg.tol_feas {
        return None;
    }
    match obj.eval(x) {
        Ok(v) if v < -cfg.falsify_threshold() => Some((x.to_vec(), v)),
        _ => None,
    }
}

/// Minimum of `obj` over the slice of `r`, routed by objective type.
pub fn check_region(r: &ValidRegion, obj: &Objective, cfg: &Config) -> Result<RegionVerdict> {
    match obj {
        Objective::Linear { coeffs, offset } => lp::minimize_linear(r, coeffs, *offset, cfg),
        Objective::Nonlinear(_) => {
            if let Some(w) = falsify_region(r, obj, cfg)? {
                let mut v =
                    RegionVerdict::new(&r.indicator, Status::Falsified, Method::Falsification);
                v.witness_value = Some(w.1);
                v.witness = Some(w.0);
                return Ok(v);
            }
            verify_region_bab(r, obj, cfg)
        }
    }
}

fn check_all(
    regions: &[ValidRegion],
    cfg: &Config,
    obj: impl Fn(&ValidRegion) -> Objective + Sync,
) -> Vec<RegionVerdict> {
    regions
        .par_iter()
        .map(|r| {
            check_region(r, &obj(r), cfg)
                .unwrap_or_else(|e| RegionVerdict::failed(&r.indicator, &e))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceVerdict {
    pub status: Status,
    pub region_verdicts: Vec<RegionVerdict>,
}

/// `w(C)·f(x) >= 0` on every slice.
pub fn check_invariance(
    regions: &[ValidRegion],
    sys: &DynamicsSystem,
    cfg: &Config,
) -> Result<InvarianceVerdict> {
    if regions.is_empty() {
        return Err(Error::NoRegions);
    }
    if regions[0].affine.w.len() != sys.dim {
        return Err(Error::DimensionMismatch(format!(
            "network over R^{} but dynamics over R^{}",
            regions[0].affine.w.len(),
            sys.dim
        )));
    }
    let region_verdicts = check_all(regions, cfg, |r| Objective::invariance(sys, &r.affine.w));
    Ok(InvarianceVerdict {
        status: Status::combine(region_verdicts.iter().map(|v| v.status)),
        region_verdicts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetKind {
    Initial,
    Unsafe,
}

impl SetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SetKind::Initial => "initial",
            SetKind::Unsafe => "unsafe",
        }
    }

    /// The sign the certificate must have at points of the set.
    fn sign_ok(self, h: f64) -> bool {
        match self {
            SetKind::Initial => h > 0.0,
            SetKind::Unsafe => h < 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerMode {
    Rejection,
    LocalAscent,
}

/// A point of `{h_set > 0}` and the certificate's value there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub point: Vec<f64>,
    pub set_value: f64,
    pub h: f64,
    pub samples: usize,
    pub mode: SamplerMode,
    pub sign_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub kind: SetKind,
    pub status: Status,
    pub membership: Membership,
    pub region_verdicts: Vec<RegionVerdict>,
}

/// Finds a point with `h_set > 0` inside the domain box: uniform rejection
/// sampling first, then a coordinate ascent from the best sample.
pub fn sample_set_member(
    h_set: &Expr,
    n: usize,
    cfg: &Config,
    tag: u64,
) -> Result<Option<(Vec<f64>, f64, usize, SamplerMode)>> {
    use rand::Rng;
    let (lo, hi) = domain_or_default(cfg, n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut best: Option<(Vec<f64>, f64)> = None;
    for k in 0..cfg.membership_samples {
        let x: Vec<f64> = (0..n).map(|i| rng.gen_range(lo[i]..=hi[i])).collect();
        let Ok(v) = h_set.eval(&x) else { continue };
        if v > 0.0 {
            return Ok(Some((x, v, k + 1, SamplerMode::Rejection)));
        }
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((x, v));
        }
    }
    let Some((mut x, mut v)) = best else {
        return Ok(None);
    };
    let mut step = hi.iter().zip(&lo).map(|(a, b)| a - b).fold(0.0, f64::max) / 4.0;
    let mut evals = 0;
    while step > 1e-9 && evals < 20_000 {
        let mut improved = false;
        for i in 0..n {
            for s in [step, -step] {
                let mut y = x.clone();
                y[i] = (y[i] + s).clamp(lo[i], hi[i]);
                evals += 1;
                if let Ok(u) = h_set.eval(&y) {
                    if u > v {
                        x = y;
                        v = u;
                        improved = true;
                    }
                }
            }
        }
        if v > 0.0 {
            return Ok(Some((
                x,
                v,
                cfg.membership_samples + evals,
                SamplerMode::LocalAscent,
            )));
        }
        if !improved {
            step /= 2.0;
        }
    }
    Ok(None)
}

pub(crate) fn domain_or_default(cfg: &Config, n: usize) -> (Vec<f64>, Vec<f64>) {
    if cfg.domain.len() == n {
        cfg.domain_bounds()
    } else {
        (vec![-3.0; n], vec![3.0; n])
    }
}

/// The set `{h_set > 0}` must miss the boundary, and a sample of it must
/// lie on the correct side (`h > 0` for the initial set, `h < 0` for the
/// unsafe set).
pub fn check_set_condition(
    net: &ReluNetwork,
    regions: &[ValidRegion],
    h_set: &Expr,
    kind: SetKind,
    cfg: &Config,
) -> Result<ConditionVerdict> {
    if regions.is_empty() {
        return Err(Error::NoRegions);
    }
    let n = net.input_dim;
    let tag = match kind {
        SetKind::Initial => 1,
        SetKind::Unsafe => 2,
    };
    let Some((point, set_value, samples, mode)) = sample_set_member(h_set, n, cfg, tag)? else {
        return Err(Error::SamplerExhausted {
            set: kind.as_str().to_string(),
            samples: cfg.membership_samples,
        });
    };
    let h = net.forward(&point)?;
    let membership = Membership {
        sign_ok: kind.sign_ok(h),
        point,
        set_value,
        h,
        samples,
        mode,
    };
    let negated = Expr::neg(h_set.clone());
    let region_verdicts = check_all(regions, cfg, |_| Objective::from_expr(negated.clone(), n));
    let member_status = if membership.sign_ok {
        Status::Verified
    } else {
        Status::Falsified
    };
    let status = Status::combine(
        region_verdicts
            .iter()
            .map(|v| v.status)
            .chain(std::iter::once(member_status)),
    );
    Ok(ConditionVerdict {
        kind,
        status,
        membership,
        region_verdicts,
    })
}

pub fn check_initial_condition(
    net: &ReluNetwork,
    regions: &[ValidRegion],
    h_init: &Expr,
    cfg: &Config,
) -> Result<ConditionVerdict> {
    check_set_condition(net, regions, h_init, SetKind::Initial, cfg)
}

pub fn check_unsafe_condition(
    net: &ReluNetwork,
    regions: &[ValidRegion],
    h_unsafe: &Expr,
    cfg: &Config,
) -> Result<ConditionVerdict> {
    check_set_condition(net, regions, h_unsafe, SetKind::Unsafe, cfg)
}
