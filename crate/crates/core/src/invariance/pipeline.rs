//! End-to-end certificate check: locate the boundary, enumerate its regions,
//! then decide the three conditions.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    check_invariance, check_set_condition, domain_or_default, sample_set_member, ConditionVerdict,
    InvarianceVerdict, RegionVerdict, SetKind, Status, Witness,
};
use crate::config::Config;
use crate::dynamics::{DynamicsSystem, Expr};
use crate::enumeration::{boundary_propagation, find_initial_region, EnumerationResult};
use crate::error::{Error, Result};
use crate::relu_net::ReluNetwork;

/// Where the seed pair for the initial region came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    SetSamples,
    DomainUniform,
}

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub enumeration: f64,
    pub invariance: f64,
    pub initial: f64,
    pub unsafe_set: f64,
    pub total: f64,
}

/// Why the pipeline could not produce verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub invariance: Status,
    pub initial_condition: Status,
    pub unsafe_condition: Status,
    pub region_verdicts: Vec<RegionVerdict>,
    pub initial: Option<ConditionVerdict>,
    pub unsafe_set: Option<ConditionVerdict>,
    pub witnesses: Vec<Witness>,
    pub enumeration: Option<EnumerationResult>,
    pub search_mode: Option<SearchMode>,
    pub failure: Option<Failure>,
    pub caveats: Vec<String>,
    pub timings: Timings,
}

impl Certification {
    fn failed(kind: &str, err: &Error, timings: Timings) -> Self {
        Certification {
            invariance: Status::Unknown,
            initial_condition: Status::Unknown,
            unsafe_condition: Status::Unknown,
            region_verdicts: Vec::new(),
            initial: None,
            unsafe_set: None,
            witnesses: Vec::new(),
            enumeration: None,
            search_mode: None,
            failure: Some(Failure {
                kind: kind.into(),
                message: err.to_string(),
            }),
            caveats: Vec::new(),
            timings,
        }
    }

    /// All three conditions verified.
    pub fn is_verified(&self) -> bool {
        self.failure.is_none()
            && [
                self.invariance,
                self.initial_condition,
                self.unsafe_condition,
            ]
            .iter()
            .all(|s| *s == Status::Verified)
    }

    pub fn is_falsified(&self) -> bool {
        [
            self.invariance,
            self.initial_condition,
            self.unsafe_condition,
        ]
        .contains(&Status::Falsified)
    }
}

/// Runs the full check of `net` as a barrier certificate for `ẋ = f(x)` with
/// initial set `{h_init > 0}` and unsafe set `{h_unsafe > 0}`.
pub fn verify_certificate(
    net: &ReluNetwork,
    sys: &DynamicsSystem,
    h_init: &Expr,
    h_unsafe: &Expr,
    cfg: &Config,
) -> Result<Certification> {
    let n = net.input_dim;
    if sys.dim != n {
        return Err(Error::DimensionMismatch(format!(
            "network over R^{n} but dynamics over R^{}",
            sys.dim
        )));
    }
    for (name, e) in [("initial set", h_init), ("unsafe set", h_unsafe)] {
        if e.arity() > n {
            return Err(Error::DimensionMismatch(format!(
                "{name} uses x{} but the state has dimension {n}",
                e.arity()
            )));
        }
    }
    let start = Instant::now();
    let mut timings = Timings::default();

    let t = Instant::now();
    let (enumeration, search_mode) = match enumerate_boundary(net, h_init, h_unsafe, cfg) {
        Ok(found) => found,
        Err(e @ Error::SearchExhausted { .. }) => {
            timings.enumeration = t.elapsed().as_secs_f64();
            timings.total = start.elapsed().as_secs_f64();
            return Ok(Certification::failed("boundary-not-found", &e, timings));
        }
        Err(e) => return Err(e),
    };
    timings.enumeration = t.elapsed().as_secs_f64();
    let regions = &enumeration.regions;

    let t = Instant::now();
    let inv = check_invariance(regions, sys, cfg)?;
    timings.invariance = t.elapsed().as_secs_f64();

    let mut caveats = Vec::new();
    let mut set_check =
        |kind: SetKind, e: &Expr| -> Result<(Option<ConditionVerdict>, Status, f64)> {
            let t = Instant::now();
            let res = match check_set_condition(net, regions, e, kind, cfg) {
                Ok(v) => {
                    let s = v.status;
                    (Some(v), s)
                }
                Err(err @ Error::SamplerExhausted { .. }) => {
                    caveats.push(format!(
                        "{} set: {err}; condition left unknown",
                        kind.as_str()
                    ));
                    (None, Status::Unknown)
                }
                Err(err) => return Err(err),
            };
            Ok((res.0, res.1, t.elapsed().as_secs_f64()))
        };
    let (initial, initial_status, ti) = set_check(SetKind::Initial, h_init)?;
    let (unsafe_set, unsafe_status, tu) = set_check(SetKind::Unsafe, h_unsafe)?;
    timings.initial = ti;
    timings.unsafe_set = tu;

    let witnesses = collect_witnesses(&inv, initial.as_ref(), unsafe_set.as_ref());
    caveats.extend(standard_caveats(
        &enumeration,
        &inv,
        [initial.as_ref(), unsafe_set.as_ref()],
        search_mode,
    ));
    timings.total = start.elapsed().as_secs_f64();
    Ok(Certification {
        invariance: inv.status,
        initial_condition: initial_status,
        unsafe_condition: unsafe_status,
        region_verdicts: inv.region_verdicts,
        initial,
        unsafe_set,
        witnesses,
        enumeration: Some(enumeration),
        search_mode: Some(search_mode),
        failure: None,
        caveats,
        timings,
    })
}

/// Finds a seed region from a pair of set samples (falling back to uniform
/// sampling of the domain) and propagates from it.
pub fn enumerate_boundary(
    net: &ReluNetwork,
    h_init: &Expr,
    h_unsafe: &Expr,
    cfg: &Config,
) -> Result<(EnumerationResult, SearchMode)> {
    let n = net.input_dim;
    let mut prepared = Vec::new();
    for (k, e) in [(1u64, h_init), (2, h_unsafe)] {
        if let Some((x, ..)) = sample_set_member(e, n, cfg, k)? {
            prepared.push(x);
        }
    }
    let prepared_len = prepared.len();
    let (lo, hi) = domain_or_default(cfg, n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut queue = prepared.into_iter();
    let mut source = || -> Option<Vec<f64>> {
        queue
            .next()
            .or_else(|| Some((0..n).map(|i| rng.gen_range(lo[i]..=hi[i])).collect()))
    };
    let seed = find_initial_region(net, &mut source, cfg.max_attempts, cfg)?;
    let mode = if seed.samples <= prepared_len {
        SearchMode::SetSamples
    } else {
        SearchMode::DomainUniform
    };
    Ok((boundary_propagation(net, seed.region, cfg)?, mode))
}

fn collect_witnesses(
    inv: &InvarianceVerdict,
    initial: Option<&ConditionVerdict>,
    unsafe_set: Option<&ConditionVerdict>,
) -> Vec<Witness> {
    let mut out = Vec::new();
    let mut push_regions = |label: &str, verdicts: &[RegionVerdict]| {
        for v in verdicts {
            if let (Some(x), Some(val)) = (&v.witness, v.witness_value) {
                out.push(Witness {
                    label: label.into(),
                    point: x.clone(),
                    value: val,
                    indicator: Some(v.indicator.clone()),
                });
            }
        }
    };
    push_regions("invariance", &inv.region_verdicts);
    for c in [initial, unsafe_set].into_iter().flatten() {
        push_regions(&format!("{}-boundary", c.kind.as_str()), &c.region_verdicts);
    }
    for c in [initial, unsafe_set].into_iter().flatten() {
        if !c.membership.sign_ok {
            out.push(Witness {
                label: format!("{}-membership", c.kind.as_str()),
                point: c.membership.point.clone(),
                value: c.membership.h,
                indicator: None,
            });
        }
    }
    out
}

fn standard_caveats(
    enumeration: &EnumerationResult,
    inv: &InvarianceVerdict,
    conditions: [Option<&ConditionVerdict>; 2],
    mode: SearchMode,
) -> Vec<String> {
    let mut out = Vec::new();
    if enumeration.connectivity_assumed {
        out.push(
            "regions were enumerated from one seed; verdicts concern the connected boundary component it lies on"
                .into(),
        );
    }
    if mode == SearchMode::DomainUniform {
        out.push("seed pair found by uniform sampling of the domain, not from the initial and unsafe sets".into());
    }
    if enumeration.truncated {
        out.push(format!(
            "enumeration stopped at {} regions",
            enumeration.regions.len()
        ));
    }
    if !enumeration.errors.is_empty() {
        out.push(format!(
            "{} regions failed during enumeration",
            enumeration.errors.len()
        ));
    }
    let all: Vec<&RegionVerdict> = inv
        .region_verdicts
        .iter()
        .chain(
            conditions
                .iter()
                .flatten()
                .flat_map(|c| c.region_verdicts.iter()),
        )
        .collect();
    let restricted = all.iter().filter(|v| v.domain_restricted).count();
    if restricted > 0 {
        out.push(format!(
            "{restricted} region checks were restricted to the domain box"
        ));
    }
    let unknown = all.iter().filter(|v| v.status == Status::Unknown).count();
    if unknown > 0 {
        out.push(format!("{unknown} region checks ended unknown"));
    }
    if conditions.iter().flatten().next().is_some() {
        out.push("set membership samples are checked by sign only, not by component".into());
    }
    out
}
