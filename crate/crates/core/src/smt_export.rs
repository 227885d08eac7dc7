//! SMT-LIB 2 queries whose unsatisfiability certifies the barrier conditions.
//!
//! Numbers are printed as the exact decimal value of the underlying double,
//! so a solver sees precisely the constraints the LP route checked.
//! Negative literals use `(- c)`.

use std::fmt::Write as _;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::dynamics::{BinOp, DynamicsSystem, Expr, Func};
use crate::enumeration::ValidRegion;
use crate::error::{Error, Result};
use crate::invariance::{Objective, SetKind};
use crate::numeric::{lp_solve, LpProblem, LpStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmtMode {
    PerRegion,
    Monolithic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmtQuery {
    pub text: String,
    pub mode: SmtMode,
    pub logic_tag: String,
    /// Indicator bits of the regions covered by this query.
    pub region_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExportOptions {
    pub mode: SmtMode,
    /// Also assert the domain box.
    pub domain: Option<Vec<(f64, f64)>>,
    pub tol_feas: f64,
    pub tol_margin: f64,
}

impl ExportOptions {
    pub fn new(mode: SmtMode, cfg: &Config) -> Self {
        ExportOptions {
            mode,
            domain: None,
            tol_feas: cfg.tol_feas,
            tol_margin: cfg.tol_margin,
        }
    }
}

/// The exact decimal expansion of a finite double, without sign.
fn unsigned_decimal(v: f64) -> String {
    let bits = v.abs().to_bits();
    let exp = (bits >> 52) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (m, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    if m == 0 {
        return "0".into();
    }
    if e >= 0 {
        return (BigUint::from(m) << e as usize).to_string();
    }
    let k = (-e) as u32;
    let digits = (BigUint::from(m) * BigUint::from(5u32).pow(k)).to_string();
    let k = k as usize;
    let (int, frac) = if digits.len() > k {
        let (a, b) = digits.split_at(digits.len() - k);
        (a.to_string(), b.to_string())
    } else {
        (
            "0".to_string(),
            format!("{}{}", "0".repeat(k - digits.len()), digits),
        )
    };
    let frac = frac.trim_end_matches('0');
    if frac.is_empty() {
        int
    } else {
        format!("{int}.{frac}")
    }
}

/// SMT-LIB literal for `v`; negative values become `(- c)`.
pub fn literal(v: f64) -> String {
    assert!(v.is_finite(), "non-finite coefficient {v}");
    let s = unsigned_decimal(v);
    if v < 0.0 && s != "0" {
        format!("(- {s})")
    } else {
        s
    }
}

fn var(i: usize) -> String {
    format!("x{}", i + 1)
}

/// `Σ c_i x_i + k`, dropping zero terms and unit coefficients.
fn linear_term(coeffs: &[f64], offset: f64) -> String {
    let mut parts: Vec<String> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(i, &c)| {
            if c == 1.0 {
                var(i)
            } else {
                format!("(* {} {})", literal(c), var(i))
            }
        })
        .collect();
    if offset != 0.0 || parts.is_empty() {
        parts.push(literal(offset));
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        format!("(+ {})", parts.join(" "))
    }
}

/// S-expression for a dynamics expression. `ln` is written `log`.
pub fn expr_term(e: &Expr) -> String {
    match e {
        Expr::Var(i) => var(*i),
        Expr::Const(c) => literal(*c),
        Expr::Neg(a) => format!("(- {})", expr_term(a)),
        Expr::Binary(op, a, b) => {
            let sym = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                BinOp::Div => "/",
            };
            format!("({sym} {} {})", expr_term(a), expr_term(b))
        }
        Expr::Pow(a, k) => format!("(^ {} {k})", expr_term(a)),
        Expr::Call(f, a) => {
            let name = match f {
                Func::Ln => "log",
                other => other.name(),
            };
            format!("({name} {})", expr_term(a))
        }
    }
}

fn objective_term(obj: &Objective) -> String {
    match obj {
        Objective::Linear { coeffs, offset } => linear_term(coeffs, *offset),
        Objective::Nonlinear(e) => expr_term(e),
    }
}

/// Hyperplane, region rows and optional domain box of one region.
fn region_atoms(r: &ValidRegion, domain: Option<&[(f64, f64)]>) -> Vec<String> {
    let mut atoms = Vec::new();
    if !r.degenerate {
        atoms.push(format!("(= {} 0)", linear_term(&r.affine.w, r.affine.b)));
    }
    for (row, &d) in r.constraints.rows.iter().zip(&r.constraints.rhs) {
        atoms.push(format!("(<= {} {})", linear_term(row, 0.0), literal(d)));
    }
    if let Some(bx) = domain {
        for (i, &(lo, hi)) in bx.iter().enumerate() {
            atoms.push(format!("(<= {} {})", literal(lo), var(i)));
            atoms.push(format!("(<= {} {})", var(i), literal(hi)));
        }
    }
    atoms
}

fn conjunction(atoms: &[String]) -> String {
    if atoms.len() == 1 {
        atoms[0].clone()
    } else {
        format!("(and {})", atoms.join(" "))
    }
}

struct Header<'a> {
    what: &'a str,
    meaning: &'a str,
    polynomial: bool,
    regions: &'a [String],
    opts: &'a ExportOptions,
}

fn logic_tag(polynomial: bool) -> &'static str {
    if polynomial {
        "QF_NRA"
    } else {
        "QF_NRA with transcendental functions"
    }
}

fn document(n: usize, header: Header<'_>, body: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "; generated by rbc {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "; query: {}", header.what);
    let _ = writeln!(s, "; {}", header.meaning);
    let _ = writeln!(s, "; regions: {}", header.regions.join(" "));
    let _ = writeln!(
        s,
        "; tol_feas = {:e}, tol_margin = {:e}",
        header.opts.tol_feas, header.opts.tol_margin
    );
    let _ = writeln!(
        s,
        "; domain box asserted: {}",
        if header.opts.domain.is_some() {
            "yes"
        } else {
            "no"
        }
    );
    let _ = writeln!(s, "; logic: {}", logic_tag(header.polynomial));
    s.push_str("(set-logic QF_NRA)\n");
    for i in 0..n {
        let _ = writeln!(s, "(declare-fun {} () Real)", var(i));
    }
    let _ = writeln!(s, "(assert {body})");
    s.push_str("(check-sat)\n(exit)\n");
    s
}

/// One query per region (or one disjunction over all regions) asserting a
/// slice point where `obj` of that region is negative.
fn export_generic(
    regions: &[ValidRegion],
    opts: &ExportOptions,
    polynomial: bool,
    what: &str,
    meaning: &str,
    violation: impl Fn(&ValidRegion) -> String,
) -> Result<Vec<SmtQuery>> {
    let Some(first) = regions.first() else {
        return Err(Error::NoRegions);
    };
    let n = first.affine.w.len();
    let domain = opts.domain.as_deref();
    let disjunct = |r: &ValidRegion| {
        let mut atoms = region_atoms(r, domain);
        atoms.push(violation(r));
        conjunction(&atoms)
    };
    let ids: Vec<String> = regions.iter().map(|r| r.indicator.to_string()).collect();
    let make = |text: String, region_ids: Vec<String>| SmtQuery {
        text,
        mode: opts.mode,
        logic_tag: logic_tag(polynomial).to_string(),
        region_ids,
    };
    Ok(match opts.mode {
        SmtMode::PerRegion => regions
            .iter()
            .zip(&ids)
            .map(|(r, id)| {
                let header = Header {
                    what: &format!("{what}, per region"),
                    meaning,
                    polynomial,
                    regions: std::slice::from_ref(id),
                    opts,
                };
                make(document(n, header, &disjunct(r)), vec![id.clone()])
            })
            .collect(),
        SmtMode::Monolithic => {
            let parts: Vec<String> = regions.iter().map(disjunct).collect();
            let body = if parts.len() == 1 {
                parts[0].clone()
            } else {
                format!("(or {})", parts.join(" "))
            };
            let header = Header {
                what: &format!("{what}, disjunction over all regions"),
                meaning,
                polynomial,
                regions: &ids,
                opts,
            };
            vec![make(document(n, header, &body), ids.clone())]
        }
    })
}

/// Queries for `w(C)·f(x) < 0` on each slice.
pub fn export_invariance(
    regions: &[ValidRegion],
    sys: &DynamicsSystem,
    opts: &ExportOptions,
) -> Result<Vec<SmtQuery>> {
    if sys.components.is_empty() {
        return Err(Error::MalformedProblem("dynamics has no components".into()));
    }
    export_generic(
        regions,
        opts,
        sys.is_polynomial(),
        "invariance",
        "unsat for every query <=> w.f(x) >= 0 on every enumerated slice",
        |r| {
            format!(
                "(< {} 0)",
                objective_term(&Objective::invariance(sys, &r.affine.w))
            )
        },
    )
}

/// Queries for a slice point inside `{g > 0}`.
pub fn export_set_condition(
    regions: &[ValidRegion],
    g: &Expr,
    which: SetKind,
    opts: &ExportOptions,
) -> Result<Vec<SmtQuery>> {
    let what = format!("{} set meets the boundary", which.as_str());
    let meaning = format!(
        "unsat for every query <=> the {} set misses the enumerated boundary",
        which.as_str()
    );
    let n = regions.first().map_or(0, |r| r.affine.w.len());
    let obj = Objective::from_expr(g.clone(), n);
    export_generic(regions, opts, g.is_polynomial(), &what, &meaning, |_| {
        format!("(> {} 0)", objective_term(&obj))
    })
}

/// Satisfiability of a query whose assertion is linear, decided by LP.
/// Returns `None` when the assertion is not a disjunction of conjunctions of
/// linear atoms.
pub fn decide_linear(text: &str, tol: f64) -> Result<Option<bool>> {
    let mut n = 0;
    let mut assertion = None;
    for form in parse_sexprs(text)? {
        let Sexp::List(items) = &form else { continue };
        match items.first() {
            Some(Sexp::Atom(h)) if h == "declare-fun" => n += 1,
            Some(Sexp::Atom(h)) if h == "assert" => assertion = items.get(1).cloned(),
            _ => {}
        }
    }
    let Some(a) = assertion else {
        return Err(Error::MalformedProblem("query has no assertion".into()));
    };
    let disjuncts = match &a {
        Sexp::List(items) if matches!(items.first(), Some(Sexp::Atom(h)) if h == "or") => {
            items[1..].to_vec()
        }
        _ => vec![a.clone()],
    };
    for d in disjuncts {
        let atoms = match &d {
            Sexp::List(items) if matches!(items.first(), Some(Sexp::Atom(h)) if h == "and") => {
                items[1..].to_vec()
            }
            _ => vec![d.clone()],
        };
        let mut rows = Vec::new();
        for atom in &atoms {
            match linear_atom(atom, n) {
                Some(r) => rows.push(r),
                None => return Ok(None),
            }
        }
        if conjunction_sat(&rows, n, tol)? {
            return Ok(Some(true));
        }
    }
    Ok(Some(false))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Rel {
    Le,
    Lt,
    Eq,
}

/// `coeffs·x + offset  rel  0`.
struct LinearAtom {
    coeffs: Vec<f64>,
    offset: f64,
    rel: Rel,
}

fn conjunction_sat(atoms: &[LinearAtom], n: usize, tol: f64) -> Result<bool> {
    // Maximise a common slack s <= 1 added to every strict inequality.
    let mut obj = vec![0.0; n + 1];
    obj[n] = 1.0;
    let mut lp = LpProblem::maximize(obj);
    let mut cap = vec![0.0; n + 1];
    cap[n] = 1.0;
    lp.push_le(cap, 1.0);
    let mut strict = false;
    for a in atoms {
        let mut row = a.coeffs.clone();
        row.push(0.0);
        match a.rel {
            Rel::Eq => lp.push_eq(row, -a.offset),
            Rel::Le => lp.push_le(row, -a.offset),
            Rel::Lt => {
                strict = true;
                row[n] = 1.0;
                lp.push_le(row, -a.offset);
            }
        }
    }
    let out = lp_solve(&lp, tol)?;
    Ok(match out.status {
        LpStatus::Infeasible => false,
        LpStatus::Unbounded => true,
        LpStatus::Optimal => !strict || out.value.unwrap() > tol,
    })
}

fn linear_atom(s: &Sexp, n: usize) -> Option<LinearAtom> {
    let Sexp::List(items) = s else { return None };
    let [Sexp::Atom(op), lhs, rhs] = items.as_slice() else {
        return None;
    };
    let (lc, lk) = linear_expr(lhs, n)?;
    let (rc, rk) = linear_expr(rhs, n)?;
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>();
    let (coeffs, offset, rel) = match op.as_str() {
        "<=" => (diff(&lc, &rc), lk - rk, Rel::Le),
        "<" => (diff(&lc, &rc), lk - rk, Rel::Lt),
        ">=" => (diff(&rc, &lc), rk - lk, Rel::Le),
        ">" => (diff(&rc, &lc), rk - lk, Rel::Lt),
        "=" => (diff(&lc, &rc), lk - rk, Rel::Eq),
        _ => return None,
    };
    Some(LinearAtom {
        coeffs,
        offset,
        rel,
    })
}

fn linear_expr(s: &Sexp, n: usize) -> Option<(Vec<f64>, f64)> {
    match s {
        Sexp::Atom(a) => {
            if let Some(i) = a.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
                if i == 0 || i > n {
                    return None;
                }
                let mut c = vec![0.0; n];
                c[i - 1] = 1.0;
                Some((c, 0.0))
            } else {
                Some((vec![0.0; n], a.parse().ok()?))
            }
        }
        Sexp::List(items) => {
            let Sexp::Atom(op) = items.first()? else {
                return None;
            };
            let args: Vec<(Vec<f64>, f64)> = items[1..]
                .iter()
                .map(|a| linear_expr(a, n))
                .collect::<Option<_>>()?;
            let add = |a: &(Vec<f64>, f64), b: &(Vec<f64>, f64), sign: f64| {
                (
                    a.0.iter()
                        .zip(&b.0)
                        .map(|(x, y)| x + sign * y)
                        .collect::<Vec<_>>(),
                    a.1 + sign * b.1,
                )
            };
            let is_const = |a: &(Vec<f64>, f64)| a.0.iter().all(|v| *v == 0.0);
            match (op.as_str(), args.len()) {
                ("+", _) => args.iter().skip(1).fold(args.first().cloned(), |acc, a| {
                    acc.map(|acc| add(&acc, a, 1.0))
                }),
                ("-", 1) => Some((args[0].0.iter().map(|v| -v).collect(), -args[0].1)),
                ("-", _) => args.iter().skip(1).fold(args.first().cloned(), |acc, a| {
                    acc.map(|acc| add(&acc, a, -1.0))
                }),
                ("*", 2) => {
                    let (a, b) = (&args[0], &args[1]);
                    let (k, t) = if is_const(a) {
                        (a.1, b)
                    } else if is_const(b) {
                        (b.1, a)
                    } else {
                        return None;
                    };
                    Some((t.0.iter().map(|v| k * v).collect(), k * t.1))
                }
                ("/", 2) if is_const(&args[1]) && args[1].1 != 0.0 => {
                    let k = args[1].1;
                    Some((args[0].0.iter().map(|v| v / k).collect(), args[0].1 / k))
                }
                _ => None,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn parse_sexprs(text: &str) -> Result<Vec<Sexp>> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut token = String::new();
    let flush = |token: &mut String, stack: &mut Vec<Vec<Sexp>>| {
        if !token.is_empty() {
            stack
                .last_mut()
                .unwrap()
                .push(Sexp::Atom(std::mem::take(token)));
        }
    };
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            ';' => {
                flush(&mut token, &mut stack);
                for d in chars.by_ref() {
                    if d == '\n' {
                        break;
                    }
                }
            }
            '(' => {
                flush(&mut token, &mut stack);
                stack.push(Vec::new());
            }
            ')' => {
                flush(&mut token, &mut stack);
                let list = stack.pop().unwrap();
                let Some(parent) = stack.last_mut() else {
                    return Err(Error::MalformedProblem("unbalanced `)` in SMT text".into()));
                };
                parent.push(Sexp::List(list));
            }
            c if c.is_whitespace() => flush(&mut token, &mut stack),
            c => token.push(c),
        }
    }
    flush(&mut token, &mut stack);
    if stack.len() != 1 {
        return Err(Error::MalformedProblem("unbalanced `(` in SMT text".into()));
    }
    Ok(stack.pop().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{parse, systems};
    use crate::enumeration::{boundary_propagation, valid_region};
    use crate::invariance::{check_region_affine, Status};
    use crate::relu_net::fixtures::diamond;
    use crate::relu_net::ActivationIndicator;
    use proptest::prelude::*;

    fn cfg() -> Config {
        Config::with_domain(2, -3.0, 3.0)
    }

    fn regions() -> Vec<ValidRegion> {
        let net = diamond();
        let seed = valid_region(
            &net,
            &ActivationIndicator::from_bits(&[&[1, 0, 1, 0]]),
            &cfg(),
        )
        .unwrap()
        .unwrap();
        boundary_propagation(&net, seed, &cfg()).unwrap().regions
    }

    fn per_region() -> ExportOptions {
        ExportOptions::new(SmtMode::PerRegion, &cfg())
    }

    fn balanced(s: &str) -> bool {
        let mut depth = 0i64;
        for line in s.lines().filter(|l| !l.starts_with(';')) {
            for c in line.chars() {
                depth += match c {
                    '(' => 1,
                    ')' => -1,
                    _ => 0,
                };
                if depth < 0 {
                    return false;
                }
            }
        }
        depth == 0
    }

    #[test]
    fn literals_are_exact() {
        assert_eq!(literal(1.0), "1");
        assert_eq!(literal(-1.0), "(- 1)");
        assert_eq!(literal(0.5), "0.5");
        assert_eq!(literal(-0.0), "0");
        assert_eq!(
            literal(0.1),
            "0.1000000000000000055511151231257827021181583404541015625"
        );
        assert_eq!(literal(1e20), "100000000000000000000");
        assert!(literal(f64::MIN_POSITIVE * 0.5).len() > 300);
    }

    #[test]
    fn contracting_field_queries() {
        let sys = DynamicsSystem::parse(&["-x1", "-x2"], 2).unwrap();
        let qs = export_invariance(&regions(), &sys, &per_region()).unwrap();
        assert_eq!(qs.len(), 4);
        let q = qs
            .iter()
            .find(|q| q.region_ids == vec!["1010".to_string()])
            .unwrap();
        assert!(
            q.text.contains("(= (+ (* (- 1) x1) (* (- 1) x2) 1) 0)"),
            "{}",
            q.text
        );
        assert!(q.text.contains("(< (+ x1 x2) 0)"));
        assert!(q.text.contains("(set-logic QF_NRA)"));
        assert!(q.text.contains("(declare-fun x2 () Real)"));
        assert!(
            q.text.trim_end().ends_with("(check-sat)\n(exit)")
                || q.text.ends_with("(check-sat)\n(exit)\n")
        );
        for q in &qs {
            assert!(balanced(&q.text));
            assert_eq!(decide_linear(&q.text, 1e-9).unwrap(), Some(false));
        }
    }

    #[test]
    fn drifting_field_query_is_satisfiable() {
        let sys = DynamicsSystem::parse(&["1", "0"], 2).unwrap();
        let qs = export_invariance(&regions(), &sys, &per_region()).unwrap();
        let q = qs
            .iter()
            .find(|q| q.region_ids == vec!["1010".to_string()])
            .unwrap();
        assert_eq!(decide_linear(&q.text, 1e-9).unwrap(), Some(true));
    }

    #[test]
    fn monolithic_query_has_one_disjunct_per_region() {
        let sys = DynamicsSystem::parse(&["-x1", "-x2"], 2).unwrap();
        let opts = ExportOptions::new(SmtMode::Monolithic, &cfg());
        let qs = export_invariance(&regions(), &sys, &opts).unwrap();
        assert_eq!(qs.len(), 1);
        assert_eq!(qs[0].region_ids.len(), 4);
        assert_eq!(qs[0].text.matches("(and ").count(), 4);
        assert!(qs[0].text.contains("(assert (or "));
        assert_eq!(decide_linear(&qs[0].text, 1e-9).unwrap(), Some(false));
    }

    #[test]
    fn empty_dynamics_is_rejected() {
        let sys = DynamicsSystem {
            dim: 2,
            components: vec![],
        };
        assert!(export_invariance(&regions(), &sys, &per_region()).is_err());
        assert!(matches!(
            export_invariance(
                &[],
                &DynamicsSystem::parse(&["1", "0"], 2).unwrap(),
                &per_region()
            ),
            Err(Error::NoRegions)
        ));
    }

    #[test]
    fn set_condition_queries() {
        let g = parse(&systems::initial_set(2), 2).unwrap();
        let qs = export_set_condition(&regions(), &g, SetKind::Initial, &per_region()).unwrap();
        assert!(qs.iter().all(|q| q.text.contains("(> (- (- 0.04")));
        assert!(qs.iter().all(|q| q.logic_tag == "QF_NRA"));
        let never = parse("-1", 2).unwrap();
        let qs = export_set_condition(&regions(), &never, SetKind::Unsafe, &per_region()).unwrap();
        for q in &qs {
            assert!(q.text.contains("(> (- 1) 0)"));
            assert_eq!(decide_linear(&q.text, 1e-9).unwrap(), Some(false));
        }
        let halfplane = parse("x1 - 0.9", 2).unwrap();
        let qs =
            export_set_condition(&regions(), &halfplane, SetKind::Initial, &per_region()).unwrap();
        let sat = qs
            .iter()
            .filter(|q| decide_linear(&q.text, 1e-9).unwrap() == Some(true))
            .count();
        assert_eq!(sat, 2);
    }

    #[test]
    fn nonlinear_queries_use_solver_function_names() {
        let sys = DynamicsSystem::parse(&["-x1*ln(1 + x2^2)", "-x2*tanh(x1)"], 2).unwrap();
        let qs = export_invariance(&regions(), &sys, &per_region()).unwrap();
        assert!(qs[0].text.contains("(log (+ 1 (^ x2 2)))"));
        assert!(qs[0].text.contains("(tanh x1)"));
        assert!(qs[0].logic_tag.contains("transcendental"));
        assert_eq!(decide_linear(&qs[0].text, 1e-9).unwrap(), None);
    }

    #[test]
    fn domain_box_is_asserted_when_requested() {
        let sys = DynamicsSystem::parse(&["-x1", "-x2"], 2).unwrap();
        let mut opts = per_region();
        opts.domain = Some(vec![(-3.0, 3.0); 2]);
        let qs = export_invariance(&regions(), &sys, &opts).unwrap();
        assert!(qs[0].text.contains("(<= (- 3) x1)"));
        assert!(qs[0].text.contains("; domain box asserted: yes"));
    }

    #[test]
    fn output_is_deterministic() {
        let sys = DynamicsSystem::parse(&systems::ARCH3, 2).unwrap();
        let a = export_invariance(&regions(), &sys, &per_region()).unwrap();
        let b = export_invariance(&regions(), &sys, &per_region()).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn literals_parse_back_to_the_same_double(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            let s = unsigned_decimal(v);
            prop_assert_eq!(s.parse::<f64>().unwrap(), v.abs());
        }

        #[test]
        fn linear_decisions_match_lp_verdicts(
            f in prop::collection::vec(-2.0f64..2.0, 4),
            c in prop::collection::vec(-1.0f64..1.0, 2),
        ) {
            let sys = DynamicsSystem::parse(
                &[format!("{} * x1 + {} * x2 + {}", f[0], f[1], c[0]), format!("{} * x1 + {} * x2 + {}", f[2], f[3], c[1])],
                2,
            ).unwrap();
            let (fm, cv) = sys.affine_decomposition().unwrap();
            let rs = regions();
            let qs = export_invariance(&rs, &sys, &per_region()).unwrap();
            for (r, q) in rs.iter().zip(&qs) {
                let v = check_region_affine(r, &fm, &cv, &cfg()).unwrap();
                let sat = decide_linear(&q.text, 1e-9).unwrap().unwrap();
                match v.status {
                    Status::Verified => prop_assert!(!sat || v.bound.unwrap() > -1e-9),
                    Status::Falsified => prop_assert!(sat),
                    Status::Unknown => {}
                }
            }
        }
    }
}
