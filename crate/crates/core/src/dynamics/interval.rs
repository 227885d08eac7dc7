use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]`. Every operation rounds its endpoints outward
/// by at least one ulp so enclosures survive floating-point rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

fn down(v: f64, ulps: u32) -> f64 {
    (0..ulps).fold(v, |a, _| a.next_down())
}

fn up(v: f64, ulps: u32) -> f64 {
    (0..ulps).fold(v, |a, _| a.next_up())
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    fn outward(lo: f64, hi: f64, ulps: u32) -> Self {
        Interval {
            lo: down(lo, ulps),
            hi: up(hi, ulps),
        }
    }

    pub fn checked_div(self, rhs: Interval) -> Result<Interval> {
        if rhs.contains_zero() {
            return Err(Error::Domain(format!(
                "division by an interval containing zero [{}, {}]",
                rhs.lo, rhs.hi
            )));
        }
        let q = [
            self.lo / rhs.lo,
            self.lo / rhs.hi,
            self.hi / rhs.lo,
            self.hi / rhs.hi,
        ];
        Ok(Self::outward(min4(q), max4(q), 1))
    }

    pub fn powi(self, k: u32) -> Interval {
        if k == 0 {
            return Interval::point(1.0);
        }
        let p = |v: f64| v.powi(k as i32);
        if k % 2 == 1 || self.lo >= 0.0 {
            Self::outward(p(self.lo), p(self.hi), 2)
        } else if self.hi <= 0.0 {
            Self::outward(p(self.hi), p(self.lo), 2)
        } else {
            Interval {
                lo: 0.0,
                hi: up(p(self.lo).max(p(self.hi)), 2),
            }
        }
    }

    pub fn exp(self) -> Interval {
        let r = Self::outward(self.lo.exp(), self.hi.exp(), 2);
        Interval {
            lo: r.lo.max(0.0),
            hi: r.hi,
        }
    }

    pub fn tanh(self) -> Interval {
        let r = Self::outward(self.lo.tanh(), self.hi.tanh(), 2);
        Interval {
            lo: r.lo.max(-1.0),
            hi: r.hi.min(1.0),
        }
    }

    pub fn ln(self) -> Result<Interval> {
        if self.lo <= 0.0 {
            return Err(Error::Domain(format!(
                "ln over an interval reaching non-positive values [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(Self::outward(self.lo.ln(), self.hi.ln(), 2))
    }

    /// Range of `sin` including interior extrema at `π/2 + 2kπ` (max) and
    /// `-π/2 + 2kπ` (min).
    pub fn sin(self) -> Interval {
        self.periodic(|v| v.sin(), FRAC_PI_2, -FRAC_PI_2)
    }

    /// Range of `cos`, extrema at `2kπ` (max) and `π + 2kπ` (min).
    pub fn cos(self) -> Interval {
        self.periodic(|v| v.cos(), 0.0, PI)
    }

    fn periodic(self, f: impl Fn(f64) -> f64, max_at: f64, min_at: f64) -> Interval {
        if !(self.width() < TAU) {
            return Interval::new(-1.0, 1.0);
        }
        let hits = |phase: f64| {
            let k = ((self.lo - phase) / TAU).ceil();
            phase + k * TAU <= self.hi
        };
        let (a, b) = (f(self.lo), f(self.hi));
        let hi = if hits(max_at) {
            1.0
        } else {
            up(a.max(b), 2).min(1.0)
        };
        let lo = if hits(min_at) {
            -1.0
        } else {
            down(a.min(b), 2).max(-1.0)
        };
        Interval { lo, hi }
    }
}

fn min4(v: [f64; 4]) -> f64 {
    v.into_iter().fold(f64::INFINITY, f64::min)
}

fn max4(v: [f64; 4]) -> f64 {
    v.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Self::outward(self.lo + rhs.lo, self.hi + rhs.hi, 1)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Self::outward(self.lo - rhs.hi, self.hi - rhs.lo, 1)
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let p = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        Self::outward(min4(p), max4(p), 1)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}
