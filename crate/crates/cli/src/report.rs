//! The JSON report written by `verify`, and its plain-text summary.

use std::fmt::Write as _;

use rbc_core::invariance::{Failure, Membership, Method, SearchMode, Timings};
use rbc_core::{Certification, Config, RegionVerdict, Status, Witness};
use serde::{Deserialize, Serialize};

use crate::problem::Problem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub problem: String,
    pub dimension: usize,
    pub neurons: usize,
    pub verdicts: Verdicts,
    pub failure: Option<Failure>,
    pub enumeration: Option<EnumerationSummary>,
    pub regions: Vec<RegionRow>,
    pub membership: MembershipPair,
    pub witnesses: Vec<Witness>,
    pub timings: Timings,
    pub config: Config,
    pub caveats: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub invariance: Status,
    pub initial_condition: Status,
    pub unsafe_condition: Status,
    pub overall: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationSummary {
    pub regions: usize,
    pub visited: usize,
    pub facet_lps: usize,
    pub valid_tests: usize,
    pub connectivity_assumed: bool,
    pub truncated: bool,
    pub search_mode: Option<SearchMode>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCheck {
    pub status: Status,
    pub method: Method,
    pub bound: Option<f64>,
    pub witness: Option<Vec<f64>>,
    pub witness_value: Option<f64>,
    pub vacuous: bool,
    pub domain_restricted: bool,
    pub boxes: usize,
    pub note: Option<String>,
}

impl From<&RegionVerdict> for RegionCheck {
    fn from(v: &RegionVerdict) -> Self {
        RegionCheck {
            status: v.status,
            method: v.method,
            bound: v.bound,
            witness: v.witness.clone(),
            witness_value: v.witness_value,
            vacuous: v.vacuous,
            domain_restricted: v.domain_restricted,
            boxes: v.boxes,
            note: v.note.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRow {
    pub index: usize,
    pub indicator: String,
    pub w: Vec<f64>,
    pub b: f64,
    pub slice_dimension: usize,
    pub degenerate: bool,
    pub invariance: Option<RegionCheck>,
    pub initial: Option<RegionCheck>,
    pub unsafe_set: Option<RegionCheck>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MembershipPair {
    pub initial: Option<Membership>,
    pub unsafe_set: Option<Membership>,
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

impl Report {
    pub fn new(problem: &Problem, cert: &Certification) -> Self {
        let n = problem.dim();
        let find = |list: Option<&Vec<RegionVerdict>>, bits: &str| {
            list.and_then(|l| l.iter().find(|v| v.indicator.to_string() == bits))
                .map(RegionCheck::from)
        };
        let initial_list = cert.initial.as_ref().map(|c| &c.region_verdicts);
        let unsafe_list = cert.unsafe_set.as_ref().map(|c| &c.region_verdicts);
        let regions = cert
            .enumeration
            .as_ref()
            .map(|e| {
                e.regions
                    .iter()
                    .enumerate()
                    .map(|(index, r)| {
                        let bits = r.indicator.to_string();
                        RegionRow {
                            index,
                            w: r.affine.w.clone(),
                            b: r.affine.b,
                            slice_dimension: if r.degenerate { n } else { n - 1 },
                            degenerate: r.degenerate,
                            invariance: find(Some(&cert.region_verdicts), &bits),
                            initial: find(initial_list, &bits),
                            unsafe_set: find(unsafe_list, &bits),
                            indicator: bits,
                        }
                    })
                    .collect()
            })
            .unwrap_or_default();
        let enumeration = cert.enumeration.as_ref().map(|e| EnumerationSummary {
            regions: e.regions.len(),
            visited: e.visited_count,
            facet_lps: e.facet_lps,
            valid_tests: e.valid_tests,
            connectivity_assumed: e.connectivity_assumed,
            truncated: e.truncated,
            search_mode: cert.search_mode,
            errors: e
                .errors
                .iter()
                .map(|x| format!("{}: {}", x.indicator, x.message))
                .collect(),
        });
        let overall = if cert.failure.is_some() {
            Status::Unknown
        } else {
            Status::combine([
                cert.invariance,
                cert.initial_condition,
                cert.unsafe_condition,
            ])
        };
        let t = cert.timings;
        Report {
            tool: "rbc".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            problem: problem.path.display().to_string(),
            dimension: n,
            neurons: problem.network.neuron_count(),
            verdicts: Verdicts {
                invariance: cert.invariance,
                initial_condition: cert.initial_condition,
                unsafe_condition: cert.unsafe_condition,
                overall,
            },
            failure: cert.failure.clone(),
            enumeration,
            regions,
            membership: MembershipPair {
                initial: cert.initial.as_ref().map(|c| c.membership.clone()),
                unsafe_set: cert.unsafe_set.as_ref().map(|c| c.membership.clone()),
            },
            witnesses: cert.witnesses.clone(),
            timings: Timings {
                enumeration: round2(t.enumeration),
                invariance: round2(t.invariance),
                initial: round2(t.initial),
                unsafe_set: round2(t.unsafe_set),
                total: round2(t.total),
            },
            config: problem.config.clone(),
            caveats: cert.caveats.clone(),
        }
    }

    /// 0 all verified, 1 something falsified, 2 something unknown, 3 no verdict.
    pub fn exit_code(&self) -> i32 {
        if self.failure.is_some() {
            3
        } else {
            match self.verdicts.overall {
                Status::Verified => 0,
                Status::Falsified => 1,
                Status::Unknown => 2,
            }
        }
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "problem: {}", self.problem);
        if let Some(f) = &self.failure {
            let _ = writeln!(s, "no verdict ({}): {}", f.kind, f.message);
            return s;
        }
        if let Some(e) = &self.enumeration {
            let _ = writeln!(
                s,
                "valid regions: {} ({} facet LPs, {} validity tests)",
                e.regions, e.facet_lps, e.valid_tests
            );
        }
        let v = &self.verdicts;
        let _ = writeln!(s, "invariance:        {}", v.invariance.as_str());
        let _ = writeln!(s, "initial condition: {}", v.initial_condition.as_str());
        let _ = writeln!(s, "unsafe condition:  {}", v.unsafe_condition.as_str());
        for w in &self.witnesses {
            let pt: Vec<String> = w.point.iter().map(|x| format!("{x:.6}")).collect();
            let _ = writeln!(
                s,
                "witness [{}] at ({}) value {:.3e}",
                w.label,
                pt.join(", "),
                w.value
            );
        }
        let t = &self.timings;
        let _ = writeln!(
            s,
            "time (s): enumeration {:.2}, invariance {:.2}, initial {:.2}, unsafe {:.2}, total {:.2}",
            t.enumeration, t.invariance, t.initial, t.unsafe_set, t.total
        );
        for c in &self.caveats {
            let _ = writeln!(s, "note: {c}");
        }
        s
    }

    /// A copy with the timings block zeroed, for comparing runs.
    pub fn without_timings(&self) -> Report {
        Report {
            timings: Timings::default(),
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use std::path::Path;

    use super::*;
    use crate::problem::load_problem;

    fn report(name: &str) -> Report {
        let path = Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("tests/fixtures")
            .join(name);
        crate::verify(&load_problem(&path).unwrap()).unwrap()
    }

    #[test]
    fn exit_code_follows_the_overall_verdict() {
        let mut r = report("diamond_contract.problem.json");
        assert_eq!(r.exit_code(), 0);
        for (status, code) in [
            (Status::Falsified, 1),
            (Status::Unknown, 2),
            (Status::Verified, 0),
        ] {
            r.verdicts.overall = status;
            assert_eq!(r.exit_code(), code);
        }
        r.failure = Some(Failure {
            kind: "boundary-not-found".into(),
            message: String::new(),
        });
        assert_eq!(r.exit_code(), 3);
    }

    #[test]
    fn rows_are_in_canonical_order_with_two_decimal_timings() {
        let r = report("diamond_drift.problem.json");
        let bits: Vec<&str> = r.regions.iter().map(|row| row.indicator.as_str()).collect();
        let mut sorted = bits.clone();
        sorted.sort();
        assert_eq!(bits, sorted);
        assert!(r.regions.iter().enumerate().all(|(i, row)| row.index == i));
        for t in [r.timings.enumeration, r.timings.invariance, r.timings.total] {
            assert_eq!((t * 100.0).round() / 100.0, t);
        }
        assert_eq!(r.without_timings().timings, Timings::default());
    }

    #[test]
    fn summary_lists_verdicts_and_witnesses() {
        let s = report("diamond_drift.problem.json").summary();
        assert!(s.contains("invariance:        falsified"));
        assert!(s.contains("witness [invariance] at (1.000000, 0.000000)"));
    }
}
