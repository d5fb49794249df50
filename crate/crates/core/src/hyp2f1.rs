//! Gauss hypergeometric function `₂F₁(a, b; c; z)` by its power series.
//!
//! Only `|z| <= z_max` is supported (default 0.95); no transformation formulas
//! are applied.

use crate::{Error, Result, C64};

pub const DEFAULT_Z_MAX: f64 = 0.95;
const MAX_TERMS: usize = 20_000;
const TAIL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyp2F1Params {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub z: C64,
}

/// `Σ (a)_n (b)_n / ((c)_n n!) z^n` with `|z| <= 0.95`.
pub fn hyp2f1(p: &Hyp2F1Params) -> Result<C64> {
    hyp2f1_with_limit(p, DEFAULT_Z_MAX)
}

pub fn hyp2f1_with_limit(p: &Hyp2F1Params, z_max: f64) -> Result<C64> {
    let Hyp2F1Params { a, b, c, z } = *p;
    if c.im == 0.0 && c.re <= 0.0 && c.re.fract() == 0.0 {
        return Err(Error::Domain {
            op: "hyp2f1",
            reason: format!("c = {c} is a nonpositive integer"),
        });
    }
    let az = z.norm();
    if !(az <= z_max) {
        return Err(Error::Domain {
            op: "hyp2f1",
            reason: format!("|z| = {az} exceeds z_max = {z_max}"),
        });
    }
    let mut sum = C64::new(1.0, 0.0);
    let mut term = C64::new(1.0, 0.0);
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        let ratio = (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0));
        term *= ratio * z;
        sum += term;
        if term.norm() == 0.0 {
            return Ok(sum);
        }
        // once the term ratio has settled below 1 the remaining tail is bounded
        // by a geometric series
        let next = ((a + nf + 1.0) * (b + nf + 1.0) / ((c + nf + 1.0) * (nf + 2.0))).norm() * az;
        if next < 1.0 && term.norm() * next / (1.0 - next) < TAIL_TOL * sum.norm() {
            return Ok(sum);
        }
    }
    Err(Error::Hyp2f1NoConvergence {
        terms: MAX_TERMS,
        z: az,
    })
}

/// `₂F₁(a, b; c; z)` for real `z`.
pub fn f(a: C64, b: C64, c: f64, z: f64) -> Result<C64> {
    hyp2f1(&Hyp2F1Params {
        a,
        b,
        c: C64::new(c, 0.0),
        z: C64::new(z, 0.0),
    })
}

/// `d/dz ₂F₁(a, b; 1; z) = ab ₂F₁(a+1, b+1; 2; z)`.
pub fn d_dz_c1(a: C64, b: C64, z: f64) -> Result<C64> {
    Ok(a * b * f(a + 1.0, b + 1.0, 2.0, z)?)
}
