use super::{confirm_witness, Method, Objective, RegionVerdict, SliceSystem, Status};
use crate::config::Config;
use crate::enumeration::ValidRegion;
use crate::error::Result;
use crate::numeric::{lp_solve, LpStatus};

/// Minimum of `w·(F x + c)` over the slice of `r`, by a single LP.
pub fn check_region_affine(
    r: &ValidRegion,
    f: &[Vec<f64>],
    c: &[f64],
    cfg: &Config,
) -> Result<RegionVerdict> {
    match super::affine_directional(f, c, &r.affine.w) {
        Objective::Linear { coeffs, offset } => minimize_linear(r, &coeffs, offset, cfg),
        Objective::Nonlinear(_) => unreachable!("affine dynamics give a linear objective"),
    }
}

pub(crate) fn minimize_linear(
    r: &ValidRegion,
    coeffs: &[f64],
    offset: f64,
    cfg: &Config,
) -> Result<RegionVerdict> {
    let sys = SliceSystem::new(&r.slice);
    let obj = Objective::Linear {
        coeffs: coeffs.to_vec(),
        offset,
    };
    let mut verdict = RegionVerdict::new(&r.indicator, Status::Unknown, Method::Lp);
    let out = lp_solve(&sys.problem(coeffs.to_vec(), false), cfg.tol_feas)?;
    let (point, value) = match out.status {
        LpStatus::Infeasible => {
            verdict.status = Status::Verified;
            verdict.vacuous = true;
            return Ok(verdict);
        }
        LpStatus::Optimal => (out.point.unwrap(), out.value.unwrap() + offset),
        LpStatus::Unbounded => {
            let m = cfg.unbounded_box;
            let boxed = sys.with_box(&vec![-m; sys.n], &vec![m; sys.n]);
            let out = lp_solve(&boxed.problem(coeffs.to_vec(), false), cfg.tol_feas)?;
            verdict.note = Some("objective unbounded below on the slice".into());
            match (out.point, out.value) {
                (Some(p), Some(v)) => (p, v + offset),
                _ => return Ok(verdict),
            }
        }
    };
    if out.status == LpStatus::Optimal {
        verdict.bound = Some(value);
    }
    if value >= -cfg.tol_margin {
        verdict.status = Status::Verified;
    } else if value < -cfg.falsify_threshold() {
        if let Some((x, v)) = confirm_witness(&sys, &obj, &point, cfg) {
            verdict.status = Status::Falsified;
            verdict.witness = Some(x);
            verdict.witness_value = Some(v);
        } else {
            verdict.note = Some("LP minimiser failed re-validation".into());
        }
    } else {
        verdict.note = Some("minimum lies between the margin and the noise gate".into());
    }
    Ok(verdict)
}
