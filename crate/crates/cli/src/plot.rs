//! `plot`: an SVG picture of a 2-D problem and its report.

use std::fmt::Write as _;

use rbc_core::numeric::dot;
use rbc_core::{ActivationIndicator, Expr};

use crate::error::{CliError, Result};
use crate::problem::Problem;
use crate::report::Report;

const SIZE: f64 = 600.0;
const MARGIN: f64 = 30.0;
const GRID: usize = 256;

type Pt = [f64; 2];

/// Clips a convex polygon to `a·x <= d`.
fn clip(poly: &[Pt], a: &[f64], d: f64) -> Vec<Pt> {
    let side = |p: &Pt| a[0] * p[0] + a[1] * p[1] - d;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let (sp, sq) = (side(&p), side(&q));
        if sp <= 0.0 {
            out.push(p);
        }
        if (sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// Where the line `w·x + b = 0` crosses a convex polygon.
fn chord(poly: &[Pt], w: &[f64], b: f64) -> Option<(Pt, Pt)> {
    if w.iter().all(|v| *v == 0.0) || poly.len() < 2 {
        return None;
    }
    let side = |p: &Pt| dot(w, p) + b;
    let mut hits = Vec::new();
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let (sp, sq) = (side(&p), side(&q));
        if sp == 0.0 {
            hits.push(p);
        } else if sp * sq < 0.0 {
            let t = sp / (sp - sq);
            hits.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    let dir = [-w[1], w[0]];
    let key = |p: &Pt| dir[0] * p[0] + dir[1] * p[1];
    let lo = hits
        .iter()
        .copied()
        .min_by(|a, b| key(a).total_cmp(&key(b)))?;
    let hi = hits
        .iter()
        .copied()
        .max_by(|a, b| key(a).total_cmp(&key(b)))?;
    Some((lo, hi))
}

/// Zero contour of `e` over the box by marching squares.
fn contour(e: &Expr, lo: Pt, hi: Pt) -> Vec<(Pt, Pt)> {
    let at = |i: usize, j: usize| -> Pt {
        [
            lo[0] + (hi[0] - lo[0]) * i as f64 / GRID as f64,
            lo[1] + (hi[1] - lo[1]) * j as f64 / GRID as f64,
        ]
    };
    let value = |p: &Pt| e.eval(p).unwrap_or(f64::NAN);
    let vals: Vec<Vec<f64>> = (0..=GRID)
        .map(|i| (0..=GRID).map(|j| value(&at(i, j))).collect())
        .collect();
    let mut segs = Vec::new();
    for i in 0..GRID {
        for j in 0..GRID {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let v: Vec<f64> = corners.iter().map(|&(a, b)| vals[a][b]).collect();
            if v.iter().any(|x| x.is_nan()) {
                continue;
            }
            let mut cross = Vec::with_capacity(4);
            for k in 0..4 {
                let (a, b) = (v[k], v[(k + 1) % 4]);
                if (a > 0.0) != (b > 0.0) {
                    let t = a / (a - b);
                    let (p, q) = (
                        at(corners[k].0, corners[k].1),
                        at(corners[(k + 1) % 4].0, corners[(k + 1) % 4].1),
                    );
                    cross.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
                }
            }
            match cross.len() {
                2 => segs.push((cross[0], cross[1])),
                4 => {
                    let centre = value(&[
                        (at(i, j)[0] + at(i + 1, j)[0]) / 2.0,
                        (at(i, j)[1] + at(i, j + 1)[1]) / 2.0,
                    ]);
                    if (centre > 0.0) == (v[0] > 0.0) {
                        segs.push((cross[0], cross[3]));
                        segs.push((cross[1], cross[2]));
                    } else {
                        segs.push((cross[0], cross[1]));
                        segs.push((cross[2], cross[3]));
                    }
                }
                _ => {}
            }
        }
    }
    segs
}

fn colour(index: usize) -> String {
    let hue = (index as f64 * 137.508) % 360.0;
    format!("hsl({hue:.1},65%,72%)")
}

pub fn render(problem: &Problem, report: &Report) -> Result<String> {
    let n = problem.dim();
    if n != 2 {
        return Err(CliError::UnsupportedDimension(n));
    }
    let (dlo, dhi) = problem.config.domain_bounds();
    let lo = [dlo[0], dlo[1]];
    let hi = [dhi[0], dhi[1]];
    let span = SIZE - 2.0 * MARGIN;
    let px = |p: &Pt| -> (f64, f64) {
        (
            MARGIN + (p[0] - lo[0]) / (hi[0] - lo[0]) * span,
            SIZE - MARGIN - (p[1] - lo[1]) / (hi[1] - lo[1]) * span,
        )
    };
    let rect: Vec<Pt> = vec![lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]];

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let (x0, y1) = px(&lo);
    let (x1, y0) = px(&hi);
    let _ = writeln!(
        s,
        r#"<rect class="domain" x="{x0:.3}" y="{y0:.3}" width="{:.3}" height="{:.3}" fill="white" stroke="black"/>"#,
        x1 - x0,
        y1 - y0
    );

    let mut polygons = String::new();
    let mut chords = String::new();
    for row in &report.regions {
        let Some(c) = ActivationIndicator::parse(&row.indicator) else {
            continue;
        };
        let region = problem.network.region_constraints(&c)?;
        let poly = region
            .rows
            .iter()
            .zip(&region.rhs)
            .fold(rect.clone(), |p, (a, &d)| clip(&p, a, d));
        if poly.len() >= 3 {
            let pts: Vec<String> = poly
                .iter()
                .map(|p| {
                    let (x, y) = px(p);
                    format!("{x:.3},{y:.3}")
                })
                .collect();
            let _ = writeln!(
                polygons,
                r#"<polygon class="region" data-indicator="{}" points="{}" fill="{}" fill-opacity="0.7" stroke="grey" stroke-width="0.5"/>"#,
                row.indicator,
                pts.join(" "),
                colour(row.index)
            );
        }
        if let Some((a, b)) = chord(&poly, &row.w, row.b) {
            let ((ax, ay), (bx, by)) = (px(&a), px(&b));
            let _ = writeln!(
                chords,
                r#"<line class="slice" x1="{ax:.3}" y1="{ay:.3}" x2="{bx:.3}" y2="{by:.3}" stroke="black" stroke-width="2"/>"#
            );
        }
    }
    let _ = writeln!(s, "<g id=\"regions\">\n{polygons}</g>");
    let _ = writeln!(s, "<g id=\"boundary\">\n{chords}</g>");

    for (name, e, stroke) in [
        ("initial", &problem.initial, "green"),
        ("unsafe", &problem.unsafe_set, "red"),
    ] {
        let mut d = String::new();
        for (a, b) in contour(e, lo, hi) {
            let ((ax, ay), (bx, by)) = (px(&a), px(&b));
            let _ = write!(d, "M{ax:.3} {ay:.3}L{bx:.3} {by:.3}");
        }
        let _ = writeln!(
            s,
            r#"<path class="contour {name}" d="{d}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#
        );
    }

    let _ = writeln!(s, "<g id=\"witnesses\">");
    for w in report.witnesses.iter().filter(|w| w.point.len() == 2) {
        let (x, y) = px(&[w.point[0], w.point[1]]);
        let _ = writeln!(
            s,
            r#"<circle class="witness" data-label="{}" cx="{x:.3}" cy="{y:.3}" r="4" fill="none" stroke="crimson" stroke-width="2"/>"#,
            w.label
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{:.0}" font-family="sans-serif" font-size="12">{} valid regions; invariance {}</text>"#,
        MARGIN - 10.0,
        report.regions.len(),
        report.verdicts.invariance.as_str()
    );
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipping_a_square_by_a_diagonal() {
        let sq = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let tri = clip(&sq, &[1.0, 1.0], 1.0);
        assert_eq!(tri.len(), 3);
        let (a, b) = chord(&sq, &[1.0, 1.0], -1.0).unwrap();
        let mut ends = [a, b];
        ends.sort_by(|p, q| p[0].total_cmp(&q[0]));
        assert_eq!(ends, [[0.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn circle_contour_stays_on_the_circle() {
        let e = rbc_core::dynamics::parse("1 - x1^2 - x2^2", 2).unwrap();
        let segs = contour(&e, [-2.0, -2.0], [2.0, 2.0]);
        assert!(segs.len() > 100);
        for (a, b) in segs {
            for p in [a, b] {
                assert!((p[0].hypot(p[1]) - 1.0).abs() < 0.02);
            }
        }
    }
}
