//! Blow-up regimes, the lifespan bound `T_bu` and empirical blow-up runs for the
//! `c₀|ψ|^α iγ⁰ψ` nonlinearity.
//!
//! With `J(T) = ∫₁^T (R + 𝒜(s))^{-3α/2} s^{-3αℓ/2 - α|Im m|} ds` the lifespan
//! bound solves `E(1)^{-α/2} = (α/2) c₀ J(T_bu)`.

use serde::{Deserialize, Serialize};

use crate::field::SpinorField;
use crate::models::NonlinearitySpec;
use crate::quadrature;
use crate::solver::{RunRecord, Solver, SolverConfig};
use crate::spacetime::{Cosmology, ELL_ONE_TOL};
use crate::{Error, Result};

/// Tolerance on the branch quantity when comparing it with 1.
pub const THRESHOLD_TOL: f64 = 1e-12;
const J_TOL: f64 = 1e-13;
const LIFESPAN_TOL: f64 = 1e-12;

fn default_a0() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupCase {
    pub ell: f64,
    /// Nonlinearity exponent `α`.
    pub alpha: f64,
    pub im_m_abs: f64,
    pub c0: f64,
    /// Initial support radius.
    pub r: f64,
    /// Initial energy `E(1)`.
    pub e1: f64,
    /// Scale-factor constant entering `𝒜(t)`.
    #[serde(default = "default_a0")]
    pub a0: f64,
}

impl BlowupCase {
    pub fn new(ell: f64, alpha: f64, im_m_abs: f64, c0: f64, r: f64, e1: f64) -> Self {
        BlowupCase {
            ell,
            alpha,
            im_m_abs,
            c0,
            r,
            e1,
            a0: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(
                    name,
                    format!("must be positive and finite, got {v}"),
                ))
            }
        };
        if !self.ell.is_finite() || self.ell < 0.0 {
            return Err(Error::invalid(
                "case.ell",
                format!("must be >= 0, got {}", self.ell),
            ));
        }
        pos("case.alpha", self.alpha)?;
        if !(self.im_m_abs >= 0.0 && self.im_m_abs.is_finite()) {
            return Err(Error::invalid("case.im_m_abs", "must be >= 0"));
        }
        pos("case.c0", self.c0)?;
        pos("case.r", self.r)?;
        pos("case.e1", self.e1)?;
        pos("case.a0", self.a0)
    }

    fn cosmology(&self) -> Cosmology {
        Cosmology {
            ell: self.ell,
            a0: self.a0,
        }
    }

    fn is_ell_one(&self) -> bool {
        (self.ell - 1.0).abs() < ELL_ONE_TOL
    }

    /// `3α/2 + α|Im m|` for `ℓ <= 1`, `3αℓ/2 + α|Im m|` for `ℓ > 1`.
    pub fn branch_quantity(&self) -> f64 {
        let l = if self.ell > 1.0 && !self.is_ell_one() {
            self.ell
        } else {
            1.0
        };
        1.5 * self.alpha * l + self.alpha * self.im_m_abs
    }

    /// Integrand of `J` at `s`.
    fn j_integrand(&self, s: f64) -> f64 {
        let a = self.cosmology().travel_unchecked(s);
        (self.r + a).powf(-1.5 * self.alpha)
            * s.powf(-1.5 * self.alpha * self.ell - self.alpha * self.im_m_abs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// No global solution for any nonzero data size.
    NoGlobalAnySize,
    /// No global solution for sufficiently large data.
    NoGlobalLargeData,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "ell_lt_1_any_size")]
    EllLt1AnySize,
    #[serde(rename = "ell_eq_1_any_size")]
    EllEq1AnySize,
    #[serde(rename = "ell_gt_1_any_size")]
    EllGt1AnySize,
    #[serde(rename = "ell_lt_1_large_data")]
    EllLt1LargeData,
    #[serde(rename = "ell_eq_1_large_data")]
    EllEq1LargeData,
    #[serde(rename = "ell_gt_1_large_data")]
    EllGt1LargeData,
}

impl Branch {
    pub fn name(&self) -> &'static str {
        match self {
            Branch::EllLt1AnySize => "ell_lt_1_any_size",
            Branch::EllEq1AnySize => "ell_eq_1_any_size",
            Branch::EllGt1AnySize => "ell_gt_1_any_size",
            Branch::EllLt1LargeData => "ell_lt_1_large_data",
            Branch::EllEq1LargeData => "ell_eq_1_large_data",
            Branch::EllGt1LargeData => "ell_gt_1_large_data",
        }
    }
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::NoGlobalAnySize => "no_global_any_size",
            Regime::NoGlobalLargeData => "no_global_large_data",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeVerdict {
    pub regime: Regime,
    pub branch: Branch,
    /// The quantity compared with 1.
    pub threshold_value: f64,
}

pub fn classify(case: &BlowupCase) -> RegimeVerdict {
    let q = case.branch_quantity();
    let any = q <= 1.0 + THRESHOLD_TOL;
    let branch = match (case.is_ell_one(), case.ell < 1.0, any) {
        (true, _, true) => Branch::EllEq1AnySize,
        (true, _, false) => Branch::EllEq1LargeData,
        (false, true, true) => Branch::EllLt1AnySize,
        (false, true, false) => Branch::EllLt1LargeData,
        (false, false, true) => Branch::EllGt1AnySize,
        (false, false, false) => Branch::EllGt1LargeData,
    };
    RegimeVerdict {
        regime: if any {
            Regime::NoGlobalAnySize
        } else {
            Regime::NoGlobalLargeData
        },
        branch,
        threshold_value: q,
    }
}

/// `J(t)`, integrated in `u = ln s`.
pub fn j_integral(case: &BlowupCase, t: f64) -> Result<f64> {
    case.validate()?;
    if !(t >= 1.0 && t.is_finite()) {
        return Err(Error::Domain {
            op: "j_integral",
            reason: format!("requires finite t >= 1, got {t}"),
        });
    }
    if t == 1.0 {
        return Ok(0.0);
    }
    quadrature::adaptive_real(
        |u| {
            let s = u.exp();
            s * case.j_integrand(s)
        },
        0.0,
        t.ln(),
        J_TOL,
    )
}

/// Whether `J(t)` stays bounded as `t → ∞`.
pub fn j_is_bounded(case: &BlowupCase) -> bool {
    let q = case.branch_quantity();
    if q > 1.0 + THRESHOLD_TOL {
        true
    } else if case.is_ell_one() && (q - 1.0).abs() <= THRESHOLD_TOL {
        // s^{-1} (R + ln s)^{-3α/2}
        1.5 * case.alpha > 1.0
    } else {
        false
    }
}

/// `J(∞)`, or `None` when the integral diverges.
pub fn j_infinity(case: &BlowupCase) -> Result<Option<f64>> {
    case.validate()?;
    if !j_is_bounded(case) {
        return Ok(None);
    }
    // s = e^u, u = v/(1-v) maps [1, ∞) onto v ∈ [0, 1)
    let v = quadrature::adaptive_real(
        |v| {
            if v >= 1.0 {
                return 0.0;
            }
            let u = v / (1.0 - v);
            let s = u.exp();
            let g = s * case.j_integrand(s) / ((1.0 - v) * (1.0 - v));
            if g.is_finite() {
                g
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        J_TOL,
    )?;
    Ok(Some(v))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Lifespan {
    Finite(f64),
    /// The bound is inconclusive: `(α/2)c₀J(∞) <= E(1)^{-α/2}`.
    Infinite,
}

impl Lifespan {
    pub fn value(&self) -> Option<f64> {
        match self {
            Lifespan::Finite(t) => Some(*t),
            Lifespan::Infinite => None,
        }
    }
}

/// Solves `E(1)^{-α/2} = (α/2)c₀J(T)` for `T` by bisection in `ln T`.
pub fn lifespan(case: &BlowupCase) -> Result<Lifespan> {
    case.validate()?;
    let lhs = case.e1.powf(-0.5 * case.alpha);
    let k = 0.5 * case.alpha * case.c0;
    if let Some(j) = j_infinity(case)? {
        if k * j <= lhs {
            return Ok(Lifespan::Infinite);
        }
    }
    let g = |u: f64| -> Result<f64> { Ok(k * j_integral(case, u.exp())? - lhs) };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while g(hi)? <= 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 700.0 {
            // J grows at most logarithmically here; beyond e^700 the bound is of no practical use
            return Ok(Lifespan::Infinite);
        }
    }
    if g(lo)? > 0.0 {
        return Err(Error::Domain {
            op: "lifespan",
            reason: "bracket lost its sign change".into(),
        });
    }
    while hi - lo > LIFESPAN_TOL {
        let mid = 0.5 * (lo + hi);
        if g(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Lifespan::Finite((0.5 * (lo + hi)).exp()))
}

/// Smallest `E(1)` for which the lifespan bound is finite (`None` when it is finite for all `E(1)`).
pub fn solvability_threshold(case: &BlowupCase) -> Result<Option<f64>> {
    Ok(j_infinity(case)?.map(|j| (0.5 * case.alpha * case.c0 * j).powf(-2.0 / case.alpha)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalReport {
    pub case: BlowupCase,
    pub verdict: RegimeVerdict,
    pub t_bu: Lifespan,
    pub t_numerical: Option<f64>,
    /// `t_numerical <= T_bu (1 + slack)`; `None` when either time is unavailable.
    pub satisfied: Option<bool>,
    /// Largest relative shortfall of `dE/dt` below the right side of the energy inequality
    /// over interior recorded times (negative when it holds with room to spare).
    pub inequality_violation: f64,
    /// Interior records at which the inequality was evaluated.
    pub inequality_points: usize,
    pub inequality_holds: bool,
    /// No blow-up within `t_end` in an any-size regime.
    pub inconclusive_budget: bool,
}

/// Largest relative change of `E` over a recorded interval for the discrete
/// derivative at a record to be trusted.
pub const RESOLVED_STEP_CHANGE: f64 = 1e-2;

/// Relative shortfall of the recorded `dE/dt` below
/// `c₀(R+𝒜(t))^{-3α/2}E^{(2+α)/2} - (3ℓ + 2|Im m|)E/t` at interior times, and
/// the number of times checked. Only records whose derivative stencil spans
/// intervals with relative energy change below [`RESOLVED_STEP_CHANGE`] are
/// used; the last few steps before detected blow-up are not resolved by the
/// time step and are skipped.
pub fn energy_inequality_violation(rec: &RunRecord, case: &BlowupCase) -> (f64, usize) {
    let t = &rec.times;
    let n = t.len();
    if n < 3 {
        return (f64::NEG_INFINITY, 0);
    }
    let e = &rec.l2;
    let jump: Vec<f64> = (0..n - 1)
        .map(|i| (e[i + 1] - e[i]).abs() / e[i].abs().max(f64::MIN_POSITIVE))
        .collect();
    let de = quadrature::derivative(t, e);
    let c = case.cosmology();
    let mut worst = f64::NEG_INFINITY;
    let mut checked = 0;
    for i in 1..n - 1 {
        let lo = i.saturating_sub(2);
        let hi = (i + 2).min(n - 2);
        if jump[lo..=hi].iter().any(|&j| !(j < RESOLVED_STEP_CHANGE)) {
            continue;
        }
        let a = c.travel_unchecked(t[i]);
        let rhs =
            case.c0 * (case.r + a).powf(-1.5 * case.alpha) * e[i].powf(1.0 + 0.5 * case.alpha)
                - (3.0 * case.ell + 2.0 * case.im_m_abs) * e[i] / t[i];
        let scale = rhs.abs().max(de[i].abs());
        if scale > 0.0 {
            worst = worst.max((rhs - de[i]) / scale);
            checked += 1;
        }
    }
    (worst, checked)
}

/// Runs `solver` (which must carry the `blowup_g` nonlinearity) from `f0` and
/// compares the detected blow-up time with `T_bu` computed from the discrete
/// initial energy and the measured support radius.
pub fn empirical_blowup(
    solver: &Solver,
    f0: SpinorField,
    cfg: &SolverConfig,
    slack: f64,
    inequality_slack: f64,
) -> Result<(EmpiricalReport, RunRecord)> {
    let model = solver.model();
    let (alpha, c0) = match model.nonlinearity {
        NonlinearitySpec::BlowupG { alpha, c0 } => (alpha, c0),
        _ => {
            return Err(Error::invalid(
                "nonlinearity",
                "empirical blow-up requires the blowup_g nonlinearity",
            ))
        }
    };
    let out = solver.run(f0, cfg, None, &mut |_| Ok(()))?;
    let rec = out.record;
    let e1 = rec.l2[0];
    let mut case = BlowupCase::new(
        model.cosmology.ell,
        alpha,
        model.mass.im.abs(),
        c0,
        rec.meta.support.radius,
        e1,
    );
    case.a0 = model.cosmology.a0;
    let verdict = classify(&case);
    let t_bu = if e1 > 0.0 && case.r > 0.0 {
        lifespan(&case)?
    } else {
        Lifespan::Infinite
    };
    let t_numerical = rec.meta.blowup.map(|b| b.t_blowup);
    let satisfied = match (t_numerical, t_bu.value()) {
        (Some(tn), Some(tb)) => Some(tn <= tb * (1.0 + slack)),
        _ => None,
    };
    let (violation, checked) = if e1 > 0.0 {
        energy_inequality_violation(&rec, &case)
    } else {
        (f64::NEG_INFINITY, 0)
    };
    let report = EmpiricalReport {
        case,
        verdict,
        t_bu,
        t_numerical,
        satisfied,
        inequality_violation: violation,
        inequality_points: checked,
        inequality_holds: violation <= inequality_slack,
        inconclusive_budget: t_numerical.is_none() && verdict.regime == Regime::NoGlobalAnySize,
    };
    Ok((report, rec))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_examples() {
        let v = classify(&BlowupCase::new(2.0 / 3.0, 2.0 / 3.0, 0.0, 1.0, 1.0, 1.0));
        assert_eq!(v.regime, Regime::NoGlobalAnySize);
        assert_eq!(v.branch, Branch::EllLt1AnySize);
        let v = classify(&BlowupCase::new(2.0 / 3.0, 2.0, 0.0, 1.0, 1.0, 1.0));
        assert_eq!(v.branch, Branch::EllLt1LargeData);
        assert!((v.threshold_value - 3.0).abs() < 1e-15);
        let v = classify(&BlowupCase::new(2.0, 1.0, 0.0, 1.0, 1.0, 1.0));
        assert_eq!(v.branch, Branch::EllGt1LargeData);
        assert!((v.threshold_value - 3.0).abs() < 1e-15);
        assert_eq!(
            classify(&BlowupCase::new(1.0, 0.5, 0.0, 1.0, 1.0, 1.0)).branch,
            Branch::EllEq1AnySize
        );
    }

    #[test]
    fn lifespan_closed_form() {
        let case = BlowupCase::new(0.0, 2.0, 0.0, 1.0, 1.0, 4.0);
        let t = lifespan(&case).unwrap().value().unwrap();
        assert!((t - 2f64.sqrt()).abs() < 1e-8, "{t}");
        // J(T) = (1 - T^{-2})/2
        for t in [1.5, 3.0, 10.0] {
            assert!((j_integral(&case, t).unwrap() - 0.5 * (1.0 - t.powi(-2))).abs() < 1e-11);
        }
        assert!((j_infinity(&case).unwrap().unwrap() - 0.5).abs() < 1e-10);
        assert!((solvability_threshold(&case).unwrap().unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn small_energy_is_inconclusive() {
        let case = BlowupCase::new(0.0, 2.0, 0.0, 1.0, 1.0, 1.5);
        assert_eq!(lifespan(&case).unwrap(), Lifespan::Infinite);
    }

    #[test]
    fn validation() {
        assert!(lifespan(&BlowupCase::new(0.0, -1.0, 0.0, 1.0, 1.0, 4.0)).is_err());
        assert!(j_integral(&BlowupCase::new(0.0, 2.0, 0.0, 1.0, 1.0, 4.0), 0.5).is_err());
    }
}
