//! Polyhedra `{x : A x <= d}` and the LP-based questions asked about them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{dot, inf_norm, lp_feasible, lp_solve, matrix_rank, LpProblem, LpStatus};

/// Tolerance on `max - min` of a row over the polyhedron for that row to be
/// an implicit equality.
pub const DEFAULT_TOL_EQ: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub feas: f64,
    pub rank: f64,
    pub eq: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feas: crate::numeric::DEFAULT_TOL_FEAS,
            rank: crate::numeric::DEFAULT_TOL_RANK,
            eq: DEFAULT_TOL_EQ,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyhedron {
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

impl Polyhedron {
    /// All of `R^dim`.
    pub fn universe(dim: usize) -> Self {
        Polyhedron {
            dim,
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn new(dim: usize, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        if rows.len() != rhs.len() || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "{} rows and {} right-hand sides over R^{}",
                rows.len(),
                rhs.len(),
                dim
            )));
        }
        Ok(Polyhedron { dim, rows, rhs })
    }

    /// The axis-aligned box `lo <= x <= hi`.
    pub fn boxed(lo: &[f64], hi: &[f64]) -> Self {
        let mut p = Polyhedron::universe(lo.len());
        p.add_box(lo, hi);
        p
    }

    pub fn push(&mut self, row: Vec<f64>, rhs: f64) {
        debug_assert_eq!(row.len(), self.dim);
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    pub fn add_box(&mut self, lo: &[f64], hi: &[f64]) {
        for i in 0..self.dim {
            let mut e = vec![0.0; self.dim];
            e[i] = 1.0;
            self.push(e.clone(), hi[i]);
            e[i] = -1.0;
            self.push(e, -lo[i]);
        }
    }

    pub fn intersect(&self, other: &Polyhedron) -> Polyhedron {
        let mut p = self.clone();
        p.rows.extend_from_slice(&other.rows);
        p.rhs.extend_from_slice(&other.rhs);
        p
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.max_violation(x) <= tol
    }

    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(r, d)| dot(r, x) - d)
            .fold(0.0, f64::max)
    }

    pub fn feasible_point(&self, tol_feas: f64) -> Result<Option<Vec<f64>>> {
        lp_feasible(self.dim, (&self.rows, &self.rhs), (&[], &[]), tol_feas)
    }

    /// Centre of a largest inscribed ball (radius capped at 1), or `None` when
    /// empty. A positive radius certifies full dimension.
    pub fn interior_point(&self, tol_feas: f64) -> Result<Option<(Vec<f64>, f64)>> {
        let n = self.dim;
        let mut obj = vec![0.0; n + 1];
        obj[n] = 1.0;
        let mut lp = LpProblem::maximize(obj);
        for (row, &d) in self.rows.iter().zip(&self.rhs) {
            let norm = dot(row, row).sqrt();
            let mut r = row.clone();
            r.push(norm);
            lp.push_le(r, d);
        }
        let mut cap = vec![0.0; n + 1];
        cap[n] = 1.0;
        lp.push_le(cap.clone(), 1.0);
        cap[n] = -1.0;
        lp.push_le(cap, 0.0);
        let out = lp_solve(&lp, tol_feas)?;
        Ok(out.point.map(|mut x| {
            let t = x.pop().unwrap_or(0.0);
            (x, t)
        }))
    }

    /// Rows `j` for which `A(j) x = d(j)` holds over the whole polyhedron:
    /// both `min` and `max` of `A(j) x` are attained and agree.
    pub fn implicit_equalities(&self, tol: &Tolerances) -> Result<Vec<usize>> {
        let (x0, _) = self
            .interior_point(tol.feas)?
            .ok_or(Error::InfeasiblePolyhedron)?;
        let mut out = Vec::new();
        for (j, (row, &d)) in self.rows.iter().zip(&self.rhs).enumerate() {
            let scale = inf_norm(row);
            if scale == 0.0 {
                // 0 <= d: either every point or no point; only the former reaches here
                if d.abs() <= tol.eq {
                    out.push(j);
                }
                continue;
            }
            // A feasible point with slack already rules the row out.
            if (d - dot(row, &x0)) / scale > tol.eq {
                continue;
            }
            let min = lp_solve(
                &LpProblem::minimize(row.clone()).with_le(&self.rows, &self.rhs),
                tol.feas,
            )?;
            let max = lp_solve(
                &LpProblem::maximize(row.clone()).with_le(&self.rows, &self.rhs),
                tol.feas,
            )?;
            match (min.status, max.status) {
                (LpStatus::Optimal, LpStatus::Optimal) => {
                    let gap = max.value.unwrap() - min.value.unwrap();
                    if gap / scale <= tol.eq {
                        out.push(j);
                    }
                }
                (LpStatus::Infeasible, _) | (_, LpStatus::Infeasible) => {
                    return Err(Error::InfeasiblePolyhedron)
                }
                _ => {}
            }
        }
        Ok(out)
    }

    pub fn dimension(&self, tol: &Tolerances) -> Result<usize> {
        let eq = self.implicit_equalities(tol)?;
        if eq.is_empty() {
            return Ok(self.dim);
        }
        let m: Vec<Vec<f64>> = eq.iter().map(|&j| self.rows[j].clone()).collect();
        Ok(self.dim - matrix_rank(&m, tol.rank))
    }

    /// Drops rows implied by the others, scanning rows in ascending order
    /// against the shrinking system.
    pub fn remove_redundant(&self, tol: &Tolerances) -> Result<Polyhedron> {
        if self.feasible_point(tol.feas)?.is_none() {
            return Err(Error::InfeasiblePolyhedron);
        }
        let mut keep = vec![true; self.rows.len()];
        for j in 0..self.rows.len() {
            let (others, others_rhs): (Vec<Vec<f64>>, Vec<f64>) = (0..self.rows.len())
                .filter(|&k| k != j && keep[k])
                .map(|k| (self.rows[k].clone(), self.rhs[k]))
                .unzip();
            let out = lp_solve(
                &LpProblem::maximize(self.rows[j].clone()).with_le(&others, &others_rhs),
                tol.feas,
            )?;
            let redundant = match out.status {
                LpStatus::Optimal => out.value.unwrap() <= self.rhs[j] + tol.feas,
                LpStatus::Infeasible => true,
                LpStatus::Unbounded => false,
            };
            if redundant {
                keep[j] = false;
            }
        }
        let (rows, rhs) = self
            .rows
            .iter()
            .zip(&self.rhs)
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|((r, &d), _)| (r.clone(), d))
            .unzip();
        Ok(Polyhedron {
            dim: self.dim,
            rows,
            rhs,
        })
    }

    /// `self ∩ {w·x + b = 0}`, stored with the hyperplane as two trailing rows.
    pub fn slice(&self, w: &[f64], b: f64) -> Result<SlicePolyhedron> {
        if w.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "hyperplane over R^{} for a polyhedron in R^{}",
                w.len(),
                self.dim
            )));
        }
        Ok(SlicePolyhedron {
            base: self.clone(),
            w: w.to_vec(),
            b,
        })
    }

    /// Per-coordinate `[min, max]` over the polyhedron. `None` entries mark
    /// unbounded directions.
    pub fn bounding_box(&self, tol_feas: f64) -> Result<Vec<(Option<f64>, Option<f64>)>> {
        (0..self.dim)
            .map(|i| {
                let mut e = vec![0.0; self.dim];
                e[i] = 1.0;
                let lo = lp_solve(
                    &LpProblem::minimize(e.clone()).with_le(&self.rows, &self.rhs),
                    tol_feas,
                )?;
                let hi = lp_solve(
                    &LpProblem::maximize(e).with_le(&self.rows, &self.rhs),
                    tol_feas,
                )?;
                if lo.status == LpStatus::Infeasible || hi.status == LpStatus::Infeasible {
                    return Err(Error::InfeasiblePolyhedron);
                }
                Ok((lo.value, hi.value))
            })
            .collect()
    }
}

/// A polyhedron cut by the hyperplane `w·x + b = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlicePolyhedron {
    pub base: Polyhedron,
    pub w: Vec<f64>,
    pub b: f64,
}

impl SlicePolyhedron {
    /// The base rows followed by `w·x <= -b` and `-w·x <= b`.
    pub fn as_polyhedron(&self) -> Polyhedron {
        let mut p = self.base.clone();
        p.push(self.w.clone(), -self.b);
        p.push(self.w.iter().map(|v| -v).collect(), self.b);
        p
    }

    pub fn dim(&self) -> usize {
        self.base.dim
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.base.contains(x, tol) && (dot(&self.w, x) + self.b).abs() <= tol
    }

    pub fn feasible_point(&self, tol_feas: f64) -> Result<Option<Vec<f64>>> {
        lp_feasible(
            self.dim(),
            (&self.base.rows, &self.base.rhs),
            (std::slice::from_ref(&self.w), &[-self.b]),
            tol_feas,
        )
    }

    /// Euclidean projection onto the hyperplane (ignores the base rows).
    pub fn project_to_hyperplane(&self, x: &[f64]) -> Vec<f64> {
        let nn = dot(&self.w, &self.w);
        if nn == 0.0 {
            return x.to_vec();
        }
        let t = (dot(&self.w, x) + self.b) / nn;
        x.iter().zip(&self.w).map(|(xi, wi)| xi - t * wi).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn poly(rows: &[[f64; 2]], rhs: &[f64]) -> Polyhedron {
        Polyhedron::new(2, rows.iter().map(|r| r.to_vec()).collect(), rhs.to_vec()).unwrap()
    }

    fn quadrant() -> Polyhedron {
        poly(&[[-1.0, 0.0], [0.0, -1.0]], &[0.0, 0.0])
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn implicit_equality_examples() {
        let p = poly(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]], &[1.0, -1.0, 2.0]);
        assert_eq!(p.implicit_equalities(&tol()).unwrap(), vec![0, 1]);
        assert!(quadrant().implicit_equalities(&tol()).unwrap().is_empty());
        let seg = quadrant()
            .slice(&[-1.0, -1.0], 1.0)
            .unwrap()
            .as_polyhedron();
        assert_eq!(seg.rows[2], vec![-1.0, -1.0]);
        assert_eq!(seg.implicit_equalities(&tol()).unwrap(), vec![2, 3]);
        let empty = poly(&[[1.0, 0.0], [-1.0, 0.0]], &[0.0, -1.0]);
        assert_eq!(
            empty.implicit_equalities(&tol()),
            Err(Error::InfeasiblePolyhedron)
        );
    }

    #[test]
    fn dimension_examples() {
        assert_eq!(quadrant().dimension(&tol()).unwrap(), 2);
        let seg = quadrant()
            .slice(&[-1.0, -1.0], 1.0)
            .unwrap()
            .as_polyhedron();
        assert_eq!(seg.dimension(&tol()).unwrap(), 1);
        let point = poly(
            &[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]],
            &[0.0, 0.0, 0.0, 0.0],
        );
        assert_eq!(point.dimension(&tol()).unwrap(), 0);
    }

    #[test]
    fn redundancy_examples() {
        let dup = poly(
            &[[-1.0, 0.0], [-1.0, 0.0], [0.0, -1.0], [0.0, -1.0]],
            &[0.0; 4],
        );
        assert_eq!(dup.remove_redundant(&tol()).unwrap().len(), 2);

        let one = Polyhedron::new(1, vec![vec![1.0], vec![1.0]], vec![1.0, 2.0]).unwrap();
        let r = one.remove_redundant(&tol()).unwrap();
        assert_eq!((r.rows, r.rhs), (vec![vec![1.0]], vec![1.0]));

        let extra = poly(&[[-1.0, 0.0], [0.0, -1.0], [-1.0, -1.0]], &[0.0, 0.0, 1.0]);
        assert_eq!(extra.remove_redundant(&tol()).unwrap(), quadrant());
    }

    #[test]
    fn slice_examples() {
        let s = quadrant().slice(&[-1.0, -1.0], 1.0).unwrap();
        let p = s.as_polyhedron();
        assert_eq!(p.rows[2..], [vec![-1.0, -1.0], vec![1.0, 1.0]]);
        assert_eq!(p.rhs[2..], [-1.0, 1.0]);
        assert!(s.contains(&[0.5, 0.5], 1e-12));

        let empty = poly(&[[1.0, 0.0], [-1.0, 0.0]], &[0.0, -1.0]);
        let s = empty.slice(&[0.0, 1.0], 0.0).unwrap();
        assert!(s.feasible_point(1e-7).unwrap().is_none());

        let axis = Polyhedron::universe(2).slice(&[1.0, 0.0], 0.0).unwrap();
        let p = axis.as_polyhedron();
        assert_eq!(p.dimension(&tol()).unwrap(), 1);
        assert!(axis.contains(&[0.0, 17.0], 0.0));

        assert!(quadrant().slice(&[1.0], 0.0).is_err());
    }

    #[test]
    fn bounding_box_of_segment() {
        let s = quadrant()
            .slice(&[-1.0, -1.0], 1.0)
            .unwrap()
            .as_polyhedron();
        let bb = s.bounding_box(1e-7).unwrap();
        for (lo, hi) in bb {
            assert!(lo.unwrap().abs() < 1e-9 && (hi.unwrap() - 1.0).abs() < 1e-9);
        }
        let bb = quadrant().bounding_box(1e-7).unwrap();
        assert_eq!(bb[0].1, None);
    }

    fn random_polytope(rng: &mut ChaCha8Rng) -> Polyhedron {
        let mut p = Polyhedron::boxed(&[-2.0, -2.0], &[2.0, 2.0]);
        for _ in 0..rng.gen_range(1..6) {
            let a = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let d = rng.gen_range(0.0..2.0);
            p.push(a.to_vec(), d);
            if rng.gen_bool(0.3) {
                // a duplicate, a dominated copy
                p.push(a.to_vec(), d + 0.5);
            }
        }
        p
    }

    #[test]
    fn redundancy_preserves_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let p = random_polytope(&mut rng);
            let r = p.remove_redundant(&tol()).unwrap();
            assert!(r.len() <= p.len());
            for _ in 0..500 {
                let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                // skip points numerically on a boundary
                let margin = p
                    .rows
                    .iter()
                    .zip(&p.rhs)
                    .map(|(r, d)| (dot(r, &x) - d).abs())
                    .fold(f64::MAX, f64::min);
                if margin < 1e-6 {
                    continue;
                }
                assert_eq!(p.contains(&x, 0.0), r.contains(&x, 0.0));
            }
            assert_eq!(p.dimension(&tol()).unwrap(), r.dimension(&tol()).unwrap());
        }
    }

    proptest! {
        #[test]
        fn hyperplane_pair_becomes_implicit(
            seed in 0u64..500,
            w in prop::collection::vec(-1.0f64..1.0, 2),
        ) {
            prop_assume!(w.iter().any(|v| v.abs() > 0.1));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_polytope(&mut rng);
            let x0 = p.feasible_point(1e-7).unwrap().unwrap();
            prop_assert!(p.implicit_equalities(&tol()).unwrap().is_empty());
            prop_assert_eq!(p.dimension(&tol()).unwrap(), 2);
            let c = dot(&w, &x0);
            let mut q = p.clone();
            q.push(w.clone(), c);
            q.push(w.iter().map(|v| -v).collect(), -c);
            let eq = q.implicit_equalities(&tol()).unwrap();
            prop_assert!(eq.contains(&p.len()) && eq.contains(&(p.len() + 1)));
            prop_assert!(q.dimension(&tol()).unwrap() <= 1);
            // a redundant extra row changes nothing
            let mut r = p.clone();
            r.push(vec![1.0, 0.0], 10.0);
            prop_assert_eq!(r.dimension(&tol()).unwrap(), 2);
        }
    }
}
