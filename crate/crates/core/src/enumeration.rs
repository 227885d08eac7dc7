//! Locating and enumerating the linear regions whose zero hyperplane meets
//! the certificate boundary.
//!
//! The search starts from a single region found by bisecting between a point
//! with `h < 0` and a point with `h > 0`, then walks across facets: for every
//! facet of a known region, a point where the facet meets the boundary is
//! computed by LP, and every activation pattern realised at that point is
//! tested for validity.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::numeric::{inf_norm, lp_feasible, matrix_rank};
use crate::polyhedron::{Polyhedron, SlicePolyhedron};
use crate::relu_net::{ActivationIndicator, RegionAffine, ReluNetwork};

/// A region whose piece of the zero level set is `(n-1)`-dimensional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidRegion {
    pub indicator: ActivationIndicator,
    pub affine: RegionAffine,
    /// Region constraints with redundant rows removed.
    pub constraints: Polyhedron,
    /// `constraints ∩ {w·x + b = 0}`.
    pub slice: SlicePolyhedron,
    /// The network is identically zero on the region (`w = 0`, `b = 0`), so
    /// the whole region lies on the boundary.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionError {
    pub indicator: ActivationIndicator,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationResult {
    /// Sorted by indicator.
    pub regions: Vec<ValidRegion>,
    pub visited_count: usize,
    /// Completeness relies on the boundary being connected, which is not checked.
    pub connectivity_assumed: bool,
    pub errors: Vec<RegionError>,
    /// `max_regions` was reached before the worklist drained.
    pub truncated: bool,
    pub facet_lps: usize,
    pub valid_tests: usize,
}

impl EnumerationResult {
    pub fn indicators(&self) -> Vec<ActivationIndicator> {
        self.regions.iter().map(|r| r.indicator.clone()).collect()
    }

    pub fn is_partial(&self) -> bool {
        self.truncated || !self.errors.is_empty()
    }
}

/// Builds the [`ValidRegion`] for `c`, or `None` when `c` fails the validity
/// test.
pub fn valid_region(
    net: &ReluNetwork,
    c: &ActivationIndicator,
    cfg: &Config,
) -> Result<Option<ValidRegion>> {
    let tol = cfg.tolerances();
    let affine = net.affine_map(c)?;
    let region = affine.region_constraints(c);
    let Some((_, radius)) = region.interior_point(tol.feas)? else {
        return Ok(None);
    };
    if radius <= tol.eq && region.dimension(&tol)? < net.input_dim {
        return Ok(None);
    }
    let degenerate = inf_norm(&affine.w) <= cfg.tol_zero;
    if degenerate && affine.b.abs() > cfg.tol_zero {
        return Ok(None);
    }
    if !degenerate {
        let cut = region.slice(&affine.w, affine.b)?.as_polyhedron();
        let eq = match cut.implicit_equalities(&tol) {
            Ok(eq) => eq,
            Err(Error::InfeasiblePolyhedron) => return Ok(None),
            Err(e) => return Err(e),
        };
        let rows: Vec<Vec<f64>> = eq.iter().map(|&j| cut.rows[j].clone()).collect();
        if matrix_rank(&rows, tol.rank) != 1 {
            return Ok(None);
        }
    }
    let constraints = region.remove_redundant(&tol)?;
    let slice = constraints.slice(&affine.w, affine.b)?;
    Ok(Some(ValidRegion {
        indicator: c.clone(),
        affine,
        constraints,
        slice,
        degenerate,
    }))
}

/// Whether `c` selects a full-dimensional region whose zero hyperplane cuts
/// an `(n-1)`-dimensional slice out of it.
pub fn valid_test(net: &ReluNetwork, c: &ActivationIndicator, cfg: &Config) -> Result<bool> {
    Ok(valid_region(net, c, cfg)?.is_some())
}

/// Shrinks the segment between `neg` (`h < 0`) and `pos` (`h > 0`) until its
/// endpoints are within `eps` of each other in the Euclidean norm.
pub fn bisect_boundary(
    net: &ReluNetwork,
    neg: &[f64],
    pos: &[f64],
    eps: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut a, mut b) = (neg.to_vec(), pos.to_vec());
    while dist(&a, &b) > eps {
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        if mid == a || mid == b {
            break;
        }
        let h = net.forward(&mid)?;
        if h < 0.0 {
            a = mid;
        } else if h > 0.0 {
            b = mid;
        } else {
            a = mid.clone();
            b = mid;
        }
    }
    Ok((a, b))
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// The first valid region among the IBP candidates for the hull of a
/// bisected pair. A candidate with too many undetermined neurons triggers a
/// tighter bisection.
pub fn initial_region_from_pair(
    net: &ReluNetwork,
    neg: &[f64],
    pos: &[f64],
    cfg: &Config,
) -> Result<Option<ValidRegion>> {
    let mut eps = cfg.bisection_eps;
    loop {
        let (a, b) = bisect_boundary(net, neg, pos, eps)?;
        let lo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
        let hi: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
        let candidate = net.ibp_candidate(&lo, &hi)?;
        match candidate.expand(cfg.branch_cap) {
            Ok(list) => {
                for c in list {
                    if let Some(r) = valid_region(net, &c, cfg)? {
                        return Ok(Some(r));
                    }
                }
                return Ok(None);
            }
            Err(Error::CombinatorialBlowup { .. }) if eps > 1e-12 && dist(&a, &b) > 0.0 => {
                eps /= 10.0;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Outcome of [`find_initial_region`].
#[derive(Debug, Clone, PartialEq)]
pub struct InitialRegion {
    pub region: ValidRegion,
    /// Points drawn from the source before success.
    pub samples: usize,
    pub neg: Vec<f64>,
    pub pos: Vec<f64>,
}

/// Draws points from `source` until a point of each sign is available, then
/// bisects between them and tests the resulting candidates. Pairs that yield
/// no valid region are discarded. Gives up after `max_attempts` draws or when
/// the source runs dry.
pub fn find_initial_region(
    net: &ReluNetwork,
    source: &mut dyn FnMut() -> Option<Vec<f64>>,
    max_attempts: usize,
    cfg: &Config,
) -> Result<InitialRegion> {
    if !(cfg.bisection_eps > 0.0) {
        return Err(Error::MalformedProblem(
            "bisection eps must be positive".into(),
        ));
    }
    let mut neg: Option<Vec<f64>> = None;
    let mut pos: Option<Vec<f64>> = None;
    let mut samples = 0;
    while samples < max_attempts {
        let Some(x) = source() else { break };
        samples += 1;
        let h = net.forward(&x)?;
        if h < 0.0 {
            neg = Some(x);
        } else if h > 0.0 {
            pos = Some(x);
        }
        if let (Some(a), Some(b)) = (&neg, &pos) {
            if let Some(region) = initial_region_from_pair(net, a, b, cfg)? {
                return Ok(InitialRegion {
                    region,
                    samples,
                    neg: a.clone(),
                    pos: b.clone(),
                });
            }
            neg = None;
            pos = None;
        }
    }
    Err(Error::SearchExhausted { attempts: samples })
}

/// Walks from `seed` across facets until no new valid region appears.
///
/// Each round processes the whole frontier in parallel and merges the
/// discoveries in sorted order, so the result does not depend on scheduling.
pub fn boundary_propagation(
    net: &ReluNetwork,
    seed: ValidRegion,
    cfg: &Config,
) -> Result<EnumerationResult> {
    let mut known: BTreeMap<ActivationIndicator, ValidRegion> = BTreeMap::new();
    let mut tested: BTreeSet<ActivationIndicator> = BTreeSet::new();
    let mut frontier: VecDeque<ActivationIndicator> = VecDeque::new();
    let mut errors = Vec::new();
    let mut facet_lps = 0;
    let mut valid_tests = 0;
    let mut visited_count = 0;
    let mut truncated = false;
    let cap = cfg.max_regions.unwrap_or(usize::MAX);

    tested.insert(seed.indicator.clone());
    frontier.push_back(seed.indicator.clone());
    known.insert(seed.indicator.clone(), seed);

    while !frontier.is_empty() && !truncated {
        let batch: Vec<ActivationIndicator> = frontier.drain(..).collect();
        visited_count += batch.len();
        let found: Vec<(
            ActivationIndicator,
            Result<(Vec<ActivationIndicator>, usize)>,
        )> = batch
            .par_iter()
            .map(|c| (c.clone(), neighbours(net, &known[c], cfg)))
            .collect();
        let mut fresh = BTreeSet::new();
        for (c, res) in found {
            match res {
                Ok((list, lps)) => {
                    facet_lps += lps;
                    fresh.extend(list.into_iter().filter(|d| !tested.contains(d)));
                }
                Err(e) => errors.push(RegionError {
                    indicator: c,
                    message: e.to_string(),
                }),
            }
        }
        let fresh: Vec<ActivationIndicator> = fresh.into_iter().collect();
        tested.extend(fresh.iter().cloned());
        valid_tests += fresh.len();
        let checked: Vec<(ActivationIndicator, Result<Option<ValidRegion>>)> = fresh
            .into_par_iter()
            .map(|c| {
                let r = valid_region(net, &c, cfg);
                (c, r)
            })
            .collect();
        for (c, res) in checked {
            match res {
                Ok(Some(r)) => {
                    if known.len() >= cap {
                        truncated = true;
                        break;
                    }
                    frontier.push_back(c.clone());
                    known.insert(c, r);
                }
                Ok(None) => {}
                Err(e) => errors.push(RegionError {
                    indicator: c,
                    message: e.to_string(),
                }),
            }
        }
    }
    if !frontier.is_empty() {
        truncated = true;
    }

    Ok(EnumerationResult {
        regions: known.into_values().collect(),
        visited_count,
        connectivity_assumed: true,
        errors,
        truncated,
        facet_lps,
        valid_tests,
    })
}

/// Activation patterns realised where each facet of `r` meets the boundary,
/// and the number of facet LPs solved.
fn neighbours(
    net: &ReluNetwork,
    r: &ValidRegion,
    cfg: &Config,
) -> Result<(Vec<ActivationIndicator>, usize)> {
    let n = net.input_dim;
    let p = &r.constraints;
    let mut out = BTreeSet::new();
    let mut hits = 0;
    let mut lps = 0;
    for j in 0..p.len() {
        let (others, others_rhs): (Vec<Vec<f64>>, Vec<f64>) = (0..p.len())
            .filter(|&k| k != j)
            .map(|k| (p.rows[k].clone(), p.rhs[k]))
            .unzip();
        let eq_rows = vec![r.affine.w.clone(), p.rows[j].clone()];
        let eq_rhs = vec![-r.affine.b, p.rhs[j]];
        lps += 1;
        let Some(x) = lp_feasible(n, (&others, &others_rhs), (&eq_rows, &eq_rhs), cfg.tol_feas)?
        else {
            continue;
        };
        out.extend(net.feasible_indicators(&x, cfg.tol_propagate, cfg.branch_cap)?);
        hits += 1;
        if n == 2 && hits >= 4 {
            break;
        }
    }
    Ok((out.into_iter().collect(), lps))
}

/// Every valid indicator, by exhaustive testing. Only practical for small
/// networks; refuses more than `cfg.oracle_cap` neurons.
pub fn brute_force_valid_regions(
    net: &ReluNetwork,
    cfg: &Config,
) -> Result<Vec<ActivationIndicator>> {
    let neurons = net.neuron_count();
    if neurons > cfg.oracle_cap || neurons >= 64 {
        return Err(Error::OracleTooLarge {
            neurons,
            cap: cfg.oracle_cap,
        });
    }
    let widths = net.widths();
    let results: Vec<Result<Option<ActivationIndicator>>> = (0..1u64 << neurons)
        .into_par_iter()
        .map(|k| {
            let c = ActivationIndicator::from_index(&widths, k);
            Ok(valid_test(net, &c, cfg)?.then_some(c))
        })
        .collect();
    let mut out = Vec::new();
    for r in results {
        if let Some(c) = r? {
            out.push(c);
        }
    }
    out.sort();
    Ok(out)
}

/// Groups regions into connected pieces of the boundary: two regions are
/// joined when their slices share a point. Returns one component label per
/// region, labels numbered from 0 in order of first appearance.
pub fn boundary_components(regions: &[ValidRegion], cfg: &Config) -> Result<Vec<usize>> {
    let m = regions.len();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .collect();
    let touching: Vec<Result<bool>> = pairs
        .par_iter()
        .map(|&(i, j)| slices_touch(&regions[i].slice, &regions[j].slice, cfg))
        .collect();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (&(i, j), t) in pairs.iter().zip(touching) {
        if t? {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut labels = BTreeMap::new();
    Ok((0..m)
        .map(|i| {
            let root = find(&mut parent, i);
            let next = labels.len();
            *labels.entry(root).or_insert(next)
        })
        .collect())
}

fn slices_touch(a: &SlicePolyhedron, b: &SlicePolyhedron, cfg: &Config) -> Result<bool> {
    let n = a.dim();
    let mut le = a.base.rows.clone();
    le.extend_from_slice(&b.base.rows);
    let mut le_rhs = a.base.rhs.clone();
    le_rhs.extend_from_slice(&b.base.rhs);
    let mut eq = Vec::new();
    let mut eq_rhs = Vec::new();
    for s in [a, b] {
        if inf_norm(&s.w) > 0.0 {
            eq.push(s.w.clone());
            eq_rhs.push(-s.b);
        }
    }
    Ok(lp_feasible(n, (&le, &le_rhs), (&eq, &eq_rhs), cfg.tol_feas)?.is_some())
}

/// Whether the slices of `regions` form a single connected set.
pub fn boundary_is_connected(regions: &[ValidRegion], cfg: &Config) -> Result<bool> {
    Ok(boundary_components(regions, cfg)?.iter().all(|&l| l == 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relu_net::fixtures::{constant_one, diamond, strip};
    use crate::relu_net::Layer;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> Config {
        Config::with_domain(2, -3.0, 3.0)
    }

    fn ind(bits: &[u8]) -> ActivationIndicator {
        ActivationIndicator::from_bits(&[bits])
    }

    fn quadrants() -> Vec<ActivationIndicator> {
        let mut v = vec![
            ind(&[1, 0, 1, 0]),
            ind(&[0, 1, 1, 0]),
            ind(&[0, 1, 0, 1]),
            ind(&[1, 0, 0, 1]),
        ];
        v.sort();
        v
    }

    /// `h(x) = 1 - ReLU(x1)` on the real line.
    fn half_line() -> ReluNetwork {
        ReluNetwork::new(
            1,
            vec![Layer {
                weights: vec![vec![1.0]],
                bias: vec![0.0],
            }],
            vec![-1.0],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn valid_test_on_diamond_quadrant() {
        let net = diamond();
        let r = valid_region(&net, &ind(&[1, 0, 1, 0]), &cfg())
            .unwrap()
            .unwrap();
        assert!(!r.degenerate);
        assert!(r.slice.contains(&[1.0, 0.0], 1e-9));
        assert!(r.slice.contains(&[0.0, 1.0], 1e-9));
        assert!(!r.slice.contains(&[1.0, 1.0], 1e-9));
    }

    #[test]
    fn valid_test_rejects_lower_dimensional_region() {
        assert!(!valid_test(&diamond(), &ind(&[1, 1, 1, 0]), &cfg()).unwrap());
    }

    #[test]
    fn valid_test_rejects_region_missing_the_boundary() {
        let net = ReluNetwork::new(
            1,
            vec![Layer {
                weights: vec![vec![1.0]],
                bias: vec![0.0],
            }],
            vec![1.0],
            1.0,
        )
        .unwrap();
        assert!(!valid_test(&net, &ind(&[1]), &cfg()).unwrap());
    }

    #[test]
    fn valid_test_flags_identically_zero_region() {
        let net = ReluNetwork::new(
            2,
            vec![Layer {
                weights: vec![vec![1.0, 0.0]],
                bias: vec![0.0],
            }],
            vec![1.0],
            0.0,
        )
        .unwrap();
        let r = valid_region(&net, &ind(&[0]), &cfg()).unwrap().unwrap();
        assert!(r.degenerate);
        let on = valid_region(&net, &ind(&[1]), &cfg()).unwrap().unwrap();
        assert!(!on.degenerate);
    }

    #[test]
    fn bisection_on_the_diagonal() {
        let (a, b) = bisect_boundary(&diamond(), &[3.0, 3.0], &[0.0, 0.0], 1e-3).unwrap();
        assert!(dist(&a, &b) <= 1e-3);
        assert!((a[0] - 0.5).abs() < 1e-3 && (b[1] - 0.5).abs() < 1e-3);
        let r = initial_region_from_pair(&diamond(), &[3.0, 3.0], &[0.0, 0.0], &cfg())
            .unwrap()
            .unwrap();
        assert_eq!(r.indicator, ind(&[1, 0, 1, 0]));
    }

    #[test]
    fn straddling_a_vertex_still_finds_a_region() {
        let net = diamond();
        let (a, b) = bisect_boundary(&net, &[2.0, 0.0], &[0.0, 0.0], 1e-4).unwrap();
        let lo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
        let hi: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
        let cand = net.ibp_candidate(&lo, &hi).unwrap();
        assert!(cand.undetermined_count() > 0);
        assert!(cand.expand(20).unwrap().len() <= 4);
        let r = initial_region_from_pair(&net, &[2.0, 0.0], &[0.0, 0.0], &cfg())
            .unwrap()
            .unwrap();
        assert!(quadrants().contains(&r.indicator));
    }

    #[test]
    fn constant_network_exhausts_search() {
        let net = constant_one(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut src = || Some(vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]);
        let err = find_initial_region(&net, &mut src, 500, &cfg()).unwrap_err();
        assert_eq!(err, Error::SearchExhausted { attempts: 500 });
        assert!(brute_force_valid_regions(&net, &cfg()).unwrap().is_empty());
    }

    #[test]
    fn diamond_propagation_finds_all_quadrants() {
        let net = diamond();
        let seed = valid_region(&net, &ind(&[1, 0, 1, 0]), &cfg())
            .unwrap()
            .unwrap();
        let res = boundary_propagation(&net, seed, &cfg()).unwrap();
        assert_eq!(res.indicators(), quadrants());
        assert!(res.connectivity_assumed && !res.is_partial());
        assert_eq!(
            brute_force_valid_regions(&net, &cfg()).unwrap(),
            quadrants()
        );
        assert!(boundary_is_connected(&res.regions, &cfg()).unwrap());
    }

    #[test]
    fn strip_propagation_stays_on_one_line() {
        let net = strip();
        let seed = valid_region(&net, &ind(&[1, 0]), &cfg()).unwrap().unwrap();
        let res = boundary_propagation(&net, seed, &cfg()).unwrap();
        assert_eq!(res.indicators(), vec![ind(&[1, 0])]);
        let all = brute_force_valid_regions(&net, &cfg()).unwrap();
        assert_eq!(all, vec![ind(&[0, 1]), ind(&[1, 0])]);
        let regions: Vec<ValidRegion> = all
            .iter()
            .map(|c| valid_region(&net, c, &cfg()).unwrap().unwrap())
            .collect();
        assert_eq!(boundary_components(&regions, &cfg()).unwrap(), vec![0, 1]);
    }

    #[test]
    fn one_dimensional_base_case() {
        let net = half_line();
        let seed = valid_region(&net, &ind(&[1]), &cfg()).unwrap().unwrap();
        let res = boundary_propagation(&net, seed, &cfg()).unwrap();
        assert_eq!(res.indicators(), vec![ind(&[1])]);
    }

    #[test]
    fn max_regions_truncates() {
        let net = diamond();
        let seed = valid_region(&net, &ind(&[1, 0, 1, 0]), &cfg())
            .unwrap()
            .unwrap();
        let c = Config {
            max_regions: Some(2),
            ..cfg()
        };
        let res = boundary_propagation(&net, seed, &c).unwrap();
        assert!(res.truncated && res.regions.len() == 2);
    }

    #[test]
    fn oracle_refuses_large_networks() {
        let c = Config {
            oracle_cap: 3,
            ..cfg()
        };
        assert!(matches!(
            brute_force_valid_regions(&diamond(), &c),
            Err(Error::OracleTooLarge { neurons: 4, cap: 3 })
        ));
    }

    #[test]
    fn validity_is_invariant_under_output_scaling() {
        let net = diamond();
        let scaled = net.scale_output(7.0);
        for k in 0..16 {
            let c = ActivationIndicator::from_index(&net.widths(), k);
            assert_eq!(
                valid_test(&net, &c, &cfg()).unwrap(),
                valid_test(&scaled, &c, &cfg()).unwrap()
            );
        }
    }

    #[test]
    fn repeated_runs_agree() {
        let net = diamond();
        let seed = valid_region(&net, &ind(&[0, 1, 0, 1]), &cfg())
            .unwrap()
            .unwrap();
        let a = boundary_propagation(&net, seed.clone(), &cfg()).unwrap();
        let b = boundary_propagation(&net, seed, &cfg()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bisection_points_are_covered_by_enumerated_regions() {
        let net = diamond();
        let seed = valid_region(&net, &ind(&[1, 0, 1, 0]), &cfg())
            .unwrap()
            .unwrap();
        let res = boundary_propagation(&net, seed, &cfg()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            let far = [3.0 * t.cos(), 3.0 * t.sin()];
            let (a, _) = bisect_boundary(&net, &far, &[0.0, 0.0], 1e-9).unwrap();
            assert!(res.regions.iter().any(|r| r.constraints.contains(&a, 1e-7)));
        }
    }
}
