//! Derivative-free search for a slice point with a negative objective value.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use super::{confirm_witness, domain_or_default, region_rng, Objective, SliceSystem};
use crate::config::Config;
use crate::enumeration::ValidRegion;
use crate::error::{Error, Result};
use crate::numeric::{lp_solve, LpProblem};

/// Looks for a slice point where `obj < -max(tol_margin, noise gate)`,
/// spending at most `cfg.falsify_budget` objective evaluations. The search
/// runs over the slice cut to the domain box (or to the large fallback box
/// when the slice misses the domain). Returns the point and its value.
pub fn falsify_region(
    r: &ValidRegion,
    obj: &Objective,
    cfg: &Config,
) -> Result<Option<(Vec<f64>, f64)>> {
    let budget = cfg.falsify_budget.max(1);
    let base = SliceSystem::new(&r.slice);
    let n = base.n;
    let (lo, hi) = domain_or_default(cfg, n);
    let mut sys = base.with_box(&lo, &hi);
    let mut rng = region_rng(cfg.seed, &r.indicator, 0xfa15);

    let mut evals = 0;
    let mut pts: Vec<(Vec<f64>, f64)> = Vec::new();
    let consider = |x: Vec<f64>,
                    pts: &mut Vec<(Vec<f64>, f64)>,
                    evals: &mut usize|
     -> Result<Option<(Vec<f64>, f64)>> {
        *evals += 1;
        if let Some(w) = confirm_witness(&base, obj, &x, cfg) {
            return Ok(Some(w));
        }
        match obj.eval(&x) {
            Ok(v) => pts.push((x, v)),
            Err(Error::Domain(_)) => {}
            Err(e) => return Err(e),
        }
        Ok(None)
    };

    // Vertices of the search polyhedron in random directions.
    let vertex_lps = (budget / 3).clamp(1, 4 * n + 4);
    for _ in 0..vertex_lps {
        let dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mut out = lp_solve(&sys.problem(dir.clone(), false), cfg.tol_feas)?;
        if out.point.is_none() && pts.is_empty() {
            let m = cfg.unbounded_box;
            sys = base.with_box(&vec![-m; n], &vec![m; n]);
            out = lp_solve(&sys.problem(dir, false), cfg.tol_feas)?;
        }
        let Some(x) = out.point else { return Ok(None) };
        if let Some(w) = consider(x, &mut pts, &mut evals)? {
            return Ok(Some(w));
        }
    }
    if pts.is_empty() {
        return Ok(None);
    }

    // Random convex combinations stay inside the polyhedron.
    let corners: Vec<Vec<f64>> = pts.iter().map(|(x, _)| x.clone()).collect();
    while evals < 2 * budget / 3 {
        let weights: Vec<f64> = (0..corners.len())
            .map(|_| rng.sample::<f64, _>(Exp1))
            .collect();
        let total: f64 = weights.iter().sum();
        let x: Vec<f64> = (0..n)
            .map(|i| {
                corners
                    .iter()
                    .zip(&weights)
                    .map(|(c, wt)| c[i] * wt)
                    .sum::<f64>()
                    / total
            })
            .collect();
        if let Some(w) = consider(x, &mut pts, &mut evals)? {
            return Ok(Some(w));
        }
    }

    // Pattern search from the best point found, projecting moves back onto the slice.
    let (mut x, mut v) = pts
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .cloned()
        .expect("at least one point");
    let extent = (0..n)
        .map(|i| {
            let (a, b) = corners
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), c| {
                    (a.min(c[i]), b.max(c[i]))
                });
            b - a
        })
        .fold(0.0, f64::max);
    let mut step = if extent > 0.0 { extent / 4.0 } else { 1.0 };
    while evals < budget && step > 1e-9 {
        let mut improved = false;
        'moves: for i in 0..n {
            for s in [step, -step] {
                if evals >= budget {
                    break 'moves;
                }
                let mut y = x.clone();
                y[i] += s;
                let y = r.slice.project_to_hyperplane(&y);
                let y = if sys.violation(&y) > cfg.tol_feas {
                    match repair(&sys, &y, cfg)? {
                        Some(z) => z,
                        None => continue,
                    }
                } else {
                    y
                };
                let before = pts.len();
                if let Some(w) = consider(y.clone(), &mut pts, &mut evals)? {
                    return Ok(Some(w));
                }
                if pts.len() > before && pts[before].1 < v {
                    v = pts[before].1;
                    x = y;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    Ok(None)
}

/// Nearest point of the system to `x` in the L1 norm.
fn repair(sys: &SliceSystem, x: &[f64], cfg: &Config) -> Result<Option<Vec<f64>>> {
    let n = sys.n;
    let mut obj = vec![0.0; 2 * n];
    obj[n..].iter_mut().for_each(|v| *v = 1.0);
    let mut lp = LpProblem::minimize(obj);
    let widen = |a: &[f64]| -> Vec<f64> {
        let mut r = a.to_vec();
        r.resize(2 * n, 0.0);
        r
    };
    for (a, &d) in sys.le.iter().zip(&sys.le_rhs) {
        lp.push_le(widen(a), d);
    }
    for (a, &g) in sys.eq.iter().zip(&sys.eq_rhs) {
        lp.push_eq(widen(a), g);
    }
    for i in 0..n {
        let mut row = vec![0.0; 2 * n];
        row[i] = 1.0;
        row[n + i] = -1.0;
        lp.push_le(row.clone(), x[i]);
        row[i] = -1.0;
        lp.push_le(row, -x[i]);
    }
    let out = lp_solve(&lp, cfg.tol_feas)?;
    Ok(out.point.map(|mut p| {
        p.truncate(n);
        p
    }))
}
