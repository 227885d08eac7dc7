//! Interval branch-and-bound over a slice.

use super::{confirm_witness, Method, Objective, RegionVerdict, SliceSystem, Status};
use crate::config::Config;
use crate::dynamics::Interval;
use crate::enumeration::ValidRegion;
use crate::error::{Error, Result};

/// Certifies `obj >= -tol_margin` on the slice of `r` or finds a violating
/// point. Boxes are pruned by their interval enclosure or by LP
/// infeasibility, and each surviving box is first shrunk to the bounding box
/// of its part of the slice. Unbounded slices are cut to the domain box.
pub fn verify_region_bab(r: &ValidRegion, obj: &Objective, cfg: &Config) -> Result<RegionVerdict> {
    let mut verdict = RegionVerdict::new(&r.indicator, Status::Unknown, Method::BranchAndBound);
    let base = SliceSystem::new(&r.slice);
    let n = base.n;
    let mut sys = base.clone();
    let Some((mut lo, mut hi, _)) = sys.bounding_box(cfg.tol_feas)? else {
        verdict.status = Status::Verified;
        verdict.vacuous = true;
        return Ok(verdict);
    };
    if lo.iter().chain(&hi).any(Option::is_none) {
        if cfg.domain.len() != n {
            verdict.note = Some("unbounded slice and no domain box".into());
            return Ok(verdict);
        }
        let (dlo, dhi) = cfg.domain_bounds();
        sys = base.with_box(&dlo, &dhi);
        verdict.domain_restricted = true;
        match sys.bounding_box(cfg.tol_feas)? {
            Some((l, h, _)) => {
                lo = l;
                hi = h;
            }
            None => {
                verdict.status = Status::Verified;
                verdict.vacuous = true;
                return Ok(verdict);
            }
        }
    }
    let root: Vec<Interval> = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| {
            let (l, h) = (l.unwrap(), h.unwrap());
            let pad = |v: f64| cfg.tol_feas * v.abs().max(1.0);
            Interval::new(l.min(h) - pad(l), h.max(l) + pad(h))
        })
        .collect();

    let margin = -cfg.tol_margin;
    let mut stack = vec![root];
    let mut lowest = f64::INFINITY;
    let mut undecided = 0usize;
    let mut first = true;
    while let Some(bx) = stack.pop() {
        verdict.boxes += 1;
        if verdict.boxes > cfg.max_boxes {
            verdict.note = Some(format!("box budget of {} exhausted", cfg.max_boxes));
            verdict.bound = finite(lowest);
            return Ok(verdict);
        }
        if let Some(e) = enclosure(obj, &bx)? {
            if e.lo >= margin {
                lowest = lowest.min(e.lo);
                continue;
            }
        }
        let tight = if first {
            first = false;
            Some((bx.clone(), Vec::new()))
        } else {
            tighten(&sys, &bx, cfg)?
        };
        let Some((tbx, points)) = tight else { continue };
        for p in points.iter().chain(std::iter::once(&mid(&tbx))) {
            let p = r.slice.project_to_hyperplane(p);
            if let Some((x, v)) = confirm_witness(&base, obj, &p, cfg) {
                verdict.status = Status::Falsified;
                verdict.witness = Some(x);
                verdict.witness_value = Some(v);
                return Ok(verdict);
            }
        }
        let enc = enclosure(obj, &tbx)?;
        if let Some(e) = enc {
            if e.lo >= margin {
                lowest = lowest.min(e.lo);
                continue;
            }
        }
        let (k, width) =
            tbx.iter()
                .map(Interval::width)
                .enumerate()
                .fold(
                    (0, -1.0),
                    |acc, (i, w)| if w > acc.1 { (i, w) } else { acc },
                );
        if width < cfg.min_box_width {
            undecided += 1;
            lowest = lowest.min(enc.map_or(f64::NEG_INFINITY, |e| e.lo));
            continue;
        }
        let m = tbx[k].mid();
        let (mut left, mut right) = (tbx.clone(), tbx);
        left[k].hi = m;
        right[k].lo = m;
        stack.push(right);
        stack.push(left);
    }
    verdict.bound = finite(lowest);
    if undecided > 0 {
        verdict.note = Some(format!(
            "{undecided} boxes reached the minimum width undecided"
        ));
    } else {
        verdict.status = Status::Verified;
        verdict.vacuous = lowest == f64::INFINITY;
    }
    Ok(verdict)
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn mid(bx: &[Interval]) -> Vec<f64> {
    bx.iter().map(Interval::mid).collect()
}

/// `None` when the objective is undefined somewhere in the box.
fn enclosure(obj: &Objective, bx: &[Interval]) -> Result<Option<Interval>> {
    match obj.enclose(bx) {
        Ok(e) if e.lo.is_nan() || e.hi.is_nan() => Ok(None),
        Ok(e) => Ok(Some(e)),
        Err(Error::Domain(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Bounding box of the slice inside `bx`, with the LP points found on the
/// way, or `None` when they do not meet.
fn tighten(
    sys: &SliceSystem,
    bx: &[Interval],
    cfg: &Config,
) -> Result<Option<(Vec<Interval>, Vec<Vec<f64>>)>> {
    let lo: Vec<f64> = bx.iter().map(|i| i.lo).collect();
    let hi: Vec<f64> = bx.iter().map(|i| i.hi).collect();
    let Some((l, h, points)) = sys.with_box(&lo, &hi).bounding_box(cfg.tol_feas)? else {
        return Ok(None);
    };
    let out = bx
        .iter()
        .zip(l.iter().zip(&h))
        .map(|(iv, (l, h))| {
            let pad = |v: f64| cfg.tol_feas * v.abs().max(1.0);
            let a = l.map_or(iv.lo, |v| v - pad(v)).max(iv.lo);
            let b = h.map_or(iv.hi, |v| v + pad(v)).min(iv.hi);
            if a <= b {
                Interval::new(a, b)
            } else {
                Interval::new(b, a)
            }
        })
        .collect();
    Ok(Some((out, points)))
}
