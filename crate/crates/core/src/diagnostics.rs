//! Checks computed from recorded series: the weighted energy identity, decay
//! fits, `γ²`-bilinear conservation, Lochak-Majorana defect evolution, the
//! forward energy bound and cone leakage. Also the scattering construction.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::field::SpinorField;
use crate::quadrature::{self, GaussLegendre};
use crate::solver::{RunRecord, Solver, Support, SUPPORT_FRACTION};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub status: Status,
    pub max_mismatch: f64,
    pub fitted_constants: BTreeMap<String, f64>,
    pub window: Option<(f64, f64)>,
}

impl Report {
    fn new(check: &str, mismatch: f64, tol: f64) -> Self {
        Report {
            check: check.to_string(),
            status: if mismatch <= tol {
                Status::Pass
            } else {
                Status::Fail
            },
            max_mismatch: mismatch,
            fitted_constants: BTreeMap::new(),
            window: None,
        }
    }

    fn with_constant(mut self, name: &str, v: f64) -> Self {
        self.fitted_constants.insert(name.to_string(), v);
        self
    }

    fn with_window(mut self, w: (f64, f64)) -> Self {
        self.window = Some(w);
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

fn incompatible(op: &'static str, reason: &str) -> Error {
    Error::Domain {
        op,
        reason: reason.to_string(),
    }
}

fn require_records(rec: &RunRecord) -> Result<()> {
    rec.validate()?;
    if rec.is_empty() {
        return Err(Error::MissingSeries("times".into()));
    }
    Ok(())
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// Both sides of the weighted energy identity
/// `t^{3ℓ}E(t) = t₀^{3ℓ}E(t₀) + ∫ (2 Im m s^{3ℓ-1} ∫ξ - 2 s^{3ℓ} ∫ψ* Im V ψ) ds`.
pub fn energy_identity_sides(rec: &RunRecord) -> Result<(Vec<f64>, Vec<f64>)> {
    require_records(rec)?;
    let ell3 = 3.0 * rec.meta.cosmology.ell;
    let im_m = rec.meta.mass.im;
    let t = &rec.times;
    let lhs: Vec<f64> = t
        .iter()
        .zip(&rec.l2)
        .map(|(t, e)| t.powf(ell3) * e)
        .collect();
    let integrand: Vec<f64> = (0..t.len())
        .map(|i| {
            2.0 * im_m * t[i].powf(ell3 - 1.0) * rec.xi_int[i]
                - 2.0 * t[i].powf(ell3) * rec.im_v_int[i]
        })
        .collect();
    let cum = quadrature::cumulative(t, &integrand);
    let rhs = cum.iter().map(|c| lhs[0] + c).collect();
    Ok((lhs, rhs))
}

/// Weighted energy identity; requires an unsourced run whose right side has the `iγ⁰A` form.
pub fn check_energy_identity(rec: &RunRecord, tol: f64) -> Result<Report> {
    if !rec.meta.a_form || rec.meta.sourced {
        return Err(incompatible(
            "check_energy_identity",
            "record was produced by a sourced run or a right side without the iγ⁰A form",
        ));
    }
    let (lhs, rhs) = energy_identity_sides(rec)?;
    let m = lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| rel(*a, *b))
        .fold(0.0, f64::max);
    Ok(Report::new("energy_identity", m, tol)
        .with_window((rec.times[0], *rec.times.last().unwrap())))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub window: (f64, f64),
}

/// Least-squares fit `ln v = intercept + exponent ln t` over samples with `t` in `window`.
pub fn fit_decay(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::invalid("values", "length differs from times"));
    }
    if !(window.0 < window.1) {
        return Err(Error::invalid("window", "requires t_lo < t_hi"));
    }
    let mut pts = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t >= window.0 && t <= window.1 {
            if !(v > 0.0) {
                return Err(Error::invalid(
                    "values",
                    format!("nonpositive value {v} at t = {t}"),
                ));
            }
            pts.push((t.ln(), v.ln()));
        }
    }
    if pts.len() < 2 {
        return Err(Error::invalid("window", "contains fewer than two samples"));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - intercept - exponent * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(DecayFit {
        exponent,
        intercept,
        residual,
        window,
    })
}

/// Fits the decay exponent of `‖ψ(t)‖` and passes when it lies within `tol` of `expected`.
pub fn check_decay_exponent(
    rec: &RunRecord,
    window: (f64, f64),
    expected: f64,
    tol: f64,
) -> Result<Report> {
    require_records(rec)?;
    let norms: Vec<f64> = rec.l2.iter().map(|e| e.sqrt()).collect();
    let fit = fit_decay(&rec.times, &norms, window)?;
    Ok(
        Report::new("decay_exponent", (fit.exponent - expected).abs(), tol)
            .with_constant("exponent", fit.exponent)
            .with_constant("intercept", fit.intercept)
            .with_constant("residual", fit.residual)
            .with_window(window),
    )
}

fn require_gamma2_compatible(rec: &RunRecord, op: &'static str) -> Result<()> {
    if !rec.meta.a_form || rec.meta.sourced || !rec.meta.potential_gamma2 {
        return Err(incompatible(
            op,
            "needs an unsourced run with iγ⁰A right side and a potential satisfying Vᵀγ² + γ²V = 0",
        ));
    }
    Ok(())
}

/// `t^{3ℓ} ∫ψᵀγ²ψ dx` constant in time.
pub fn check_gamma2_conservation(rec: &RunRecord, tol: f64) -> Result<Report> {
    require_gamma2_compatible(rec, "check_gamma2_conservation")?;
    require_records(rec)?;
    let ell3 = 3.0 * rec.meta.cosmology.ell;
    let w: Vec<C64> = rec
        .times
        .iter()
        .zip(&rec.gamma2)
        .map(|(t, g)| g * t.powf(ell3))
        .collect();
    let mut scale = w[0].norm();
    if scale == 0.0 {
        scale = rec.l2[0] * rec.times[0].powf(ell3);
    }
    let dev = w.iter().map(|v| (v - w[0]).norm()).fold(0.0, f64::max);
    let m = if scale == 0.0 { 0.0 } else { dev / scale };
    Ok(Report::new("gamma2_conservation", m, tol))
}

/// Lochak-Majorana defect evolution with `z = rec.meta.defect_z`.
///
/// Real mass: `t^{3ℓ} defect(t)` is constant; the mismatch is relative to the
/// initial weighted defect, or to the initial weighted energy when the initial
/// defect is below `10⁻⁶ E`. Complex mass: `defect(t)` is bounded by
/// `t^{-3ℓ}(t₀^{3ℓ} defect(t₀) + 4|Im m| ∫ s^{3ℓ-1} ∫ρ ds)`; the mismatch is the
/// largest excess over the bound relative to `E(t₀)`.
pub fn check_lm_evolution(rec: &RunRecord, tol: f64) -> Result<Report> {
    require_gamma2_compatible(rec, "check_lm_evolution")?;
    require_records(rec)?;
    let ell3 = 3.0 * rec.meta.cosmology.ell;
    let t = &rec.times;
    let e0 = rec.l2[0];
    let w0 = t[0].powf(ell3);
    let im_m = rec.meta.mass.im;
    let max_defect_ratio = if e0 > 0.0 {
        rec.defect.iter().fold(0.0, |a: f64, d| a.max(d / e0))
    } else {
        0.0
    };
    if im_m == 0.0 {
        let d0 = rec.defect[0] * w0;
        let dev = t
            .iter()
            .zip(&rec.defect)
            .map(|(t, d)| (t.powf(ell3) * d - d0).abs())
            .fold(0.0, f64::max);
        let scale = if rec.defect[0] >= 1e-6 * e0 {
            d0
        } else {
            e0 * w0
        };
        let m = if scale == 0.0 { 0.0 } else { dev / scale };
        Ok(Report::new("lm_evolution", m, tol)
            .with_constant("max_defect_over_energy", max_defect_ratio))
    } else {
        let integrand: Vec<f64> = (0..t.len())
            .map(|i| t[i].powf(ell3 - 1.0) * rec.rho_int[i])
            .collect();
        let cum = quadrature::cumulative(t, &integrand);
        let mut excess: f64 = 0.0;
        for i in 0..t.len() {
            let bound = t[i].powf(-ell3) * (w0 * rec.defect[0] + 4.0 * im_m.abs() * cum[i]);
            excess = excess.max(rec.defect[i] - bound);
        }
        let m = if e0 > 0.0 { excess.max(0.0) / e0 } else { 0.0 };
        Ok(Report::new("lm_evolution", m, tol)
            .with_constant("max_defect_over_energy", max_defect_ratio))
    }
}

/// Smallest `c` with `X(t) <= c (X(s) + Q(s,t))` over all recorded `s <= t`, where
/// `X(t) = t^{3ℓ/2-|Im m|}‖ψ(t)‖_k` and `Q(s,t) = ∫_s^t τ^{3ℓ/2-|Im m|}‖f(τ)‖_k dτ`
/// for sourced runs. Passes when `c <= margin`.
pub fn check_forward_bound(rec: &RunRecord, margin: f64) -> Result<Report> {
    require_records(rec)?;
    if rec.meta.sourced && rec.source_norm.is_empty() {
        return Err(Error::MissingSeries("source_norm".into()));
    }
    let w = 1.5 * rec.meta.cosmology.ell - rec.meta.mass.im.abs();
    let t = &rec.times;
    let x: Vec<f64> = t
        .iter()
        .zip(&rec.sobolev_k)
        .map(|(t, v)| t.powf(w) * v)
        .collect();
    let q = if rec.source_norm.is_empty() {
        vec![0.0; t.len()]
    } else {
        let y: Vec<f64> = t
            .iter()
            .zip(&rec.source_norm)
            .map(|(t, v)| t.powf(w) * v)
            .collect();
        quadrature::cumulative(t, &y)
    };
    let mut c: f64 = 0.0;
    for j in 0..t.len() {
        for i in 0..=j {
            let den = x[i] + (q[j] - q[i]).max(0.0);
            if den > 0.0 {
                c = c.max(x[j] / den);
            } else if x[j] > 0.0 {
                c = f64::INFINITY;
            }
        }
    }
    Ok(Report::new("forward_bound", c, margin).with_constant("c", c))
}

/// Mass outside the forward cone of the initial support, relative to `E(t₀)`.
pub fn check_cone_leak(rec: &RunRecord, tol: f64) -> Result<Report> {
    require_records(rec)?;
    let e0 = rec.l2[0];
    let m = if e0 > 0.0 {
        rec.cone_leak.iter().fold(0.0, |a: f64, v| a.max(v / e0))
    } else {
        0.0
    };
    Ok(Report::new("cone_leak", m, tol))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScatterConfig {
    /// Increasing checkpoints; the first is the initial time.
    pub checkpoints: Vec<f64>,
    /// Gauss-Legendre nodes per checkpoint panel.
    pub nodes: usize,
    pub cfl: f64,
    pub dt_max: f64,
    /// Convergence threshold on the last increment `‖I(T_{k+1}) - I(T_k)‖`.
    pub tol: f64,
}

impl ScatterConfig {
    /// Checkpoints `2^k`, `k = 0..=max_power`.
    pub fn dyadic(max_power: u32) -> Self {
        ScatterConfig {
            checkpoints: (0..=max_power).map(|k| 2f64.powi(k as i32)).collect(),
            nodes: 8,
            cfl: 0.5,
            dt_max: f64::INFINITY,
            tol: 1e-6,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.checkpoints.len() < 2 {
            return Err(Error::invalid(
                "scatter.checkpoints",
                "needs at least two checkpoints",
            ));
        }
        if self.checkpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "scatter.checkpoints",
                "must be strictly increasing",
            ));
        }
        if self.nodes == 0 {
            return Err(Error::invalid("scatter.nodes", "must be at least 1"));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::invalid("scatter.cfl", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

pub struct ScatterResult {
    /// Modified datum `ψ₀ + I(T_last)` at the initial time.
    pub psi_plus: SpinorField,
    /// Checkpoints actually reached.
    pub checkpoints: Vec<f64>,
    /// `‖I(T_{k+1}) - I(T_k)‖` for each completed panel.
    pub increments: Vec<f64>,
    /// `‖ψ(T_k) - ψ̃(T_k)‖` at each reached checkpoint.
    pub tail_norms: Vec<f64>,
    pub converged: bool,
}

/// Duhamel tail integral `I(T) = ∫_{t₀}^T S(t₀,τ) F(ψ(τ)) dτ` along the
/// nonlinear solution from `psi0`, the modified datum `ψ₀⁺ = ψ₀ + I(T_last)` and
/// the distance between `ψ` and the free evolution of `ψ₀⁺` at the checkpoints.
///
/// `S(t₀,τ)` is realised by the linear solver run backwards. Each panel's
/// nodes are accumulated in one backward sweep to the panel start before the
/// sum is carried back to `t₀`. The run stops early (not converged) if the
/// nonlinear solution leaves the finite range or grows by `10⁶`.
pub fn scattering_profile(
    solver: &Solver,
    psi0: &SpinorField,
    cfg: &ScatterConfig,
) -> Result<ScatterResult> {
    cfg.validate()?;
    let t0 = cfg.checkpoints[0];
    if (psi0.time - t0).abs() > 1e-12 * t0 {
        return Err(Error::invalid(
            "scatter.checkpoints",
            "first checkpoint must equal the data time",
        ));
    }
    let center = psi0.peak_location();
    let support = Support {
        center,
        radius: psi0.support_radius(&center, SUPPORT_FRACTION),
    };
    solver.check_cone_safety(&support, t0, *cfg.checkpoints.last().unwrap())?;

    let linear = solver.linear()?;
    let nonlin = &solver.model().nonlinearity;
    let rule = GaussLegendre::cached(cfg.nodes);
    let norm0 = psi0.l2_norm();
    let mut psi = psi0.clone();
    let mut integral = SpinorField::zeros(*psi0.grid(), t0);
    let mut states = vec![psi0.clone()];
    let mut reached = vec![t0];
    let mut increments = Vec::new();
    let mut failed = false;

    'panels: for w in cfg.checkpoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut samples: Vec<(f64, SpinorField)> = Vec::with_capacity(cfg.nodes);
        for (tau, wt) in rule.mapped(a, b) {
            if solver
                .advance(&mut psi, tau, cfg.cfl, cfg.dt_max, None)
                .is_err()
                || psi.l2_norm() > 1e6 * norm0.max(f64::MIN_POSITIVE)
            {
                failed = true;
                break 'panels;
            }
            samples.push((tau, nonlin.source_field(&psi).scaled(C64::new(wt, 0.0))));
        }
        if solver
            .advance(&mut psi, b, cfg.cfl, cfg.dt_max, None)
            .is_err()
        {
            failed = true;
            break;
        }
        // backward sweep: acc(τ_k) = Σ_{j >= k} S(τ_k, τ_j) w_j F_j, then to a and to t₀
        let mut acc: Option<SpinorField> = None;
        for (tau, f) in samples.into_iter().rev() {
            acc = Some(match acc {
                None => f,
                Some(mut g) => {
                    linear.advance(&mut g, tau, cfg.cfl, cfg.dt_max, None)?;
                    g.axpy(C64::new(1.0, 0.0), &f)
                }
            });
        }
        let mut inc = acc.expect("at least one node per panel");
        linear.advance(&mut inc, t0, cfg.cfl, cfg.dt_max, None)?;
        inc.time = t0;
        increments.push(inc.l2_norm());
        integral = integral.axpy(C64::new(1.0, 0.0), &inc);
        states.push(psi.clone());
        reached.push(b);
    }

    let psi_plus = psi0.axpy(C64::new(1.0, 0.0), &integral);
    let mut free = psi_plus.clone();
    let mut tail_norms = Vec::with_capacity(reached.len());
    for (t, state) in reached.iter().zip(&states) {
        linear.advance(&mut free, *t, cfg.cfl, cfg.dt_max, None)?;
        tail_norms.push(state.axpy(C64::new(-1.0, 0.0), &free).l2_norm());
    }
    let shrinking = increments.windows(2).all(|w| w[1] <= w[0]);
    let converged = !failed && shrinking && increments.last().is_some_and(|&v| v < cfg.tol);
    Ok(ScatterResult {
        psi_plus,
        checkpoints: reached,
        increments,
        tail_norms,
        converged,
    })
}

/// Runs a named check; `params` supplies check-specific values
/// (`window_lo`, `window_hi`, `expected` for `decay_exponent`).
pub fn run_check(
    name: &str,
    rec: &RunRecord,
    tol: f64,
    params: &BTreeMap<String, f64>,
) -> Result<Report> {
    match name {
        "energy_identity" => check_energy_identity(rec, tol),
        "gamma2_conservation" => check_gamma2_conservation(rec, tol),
        "lm_evolution" => check_lm_evolution(rec, tol),
        "forward_bound" => check_forward_bound(rec, tol),
        "cone_leak" => check_cone_leak(rec, tol),
        "decay_exponent" => {
            let get = |k: &str| {
                params.get(k).copied().ok_or_else(|| {
                    Error::invalid(format!("params.{k}"), "required by decay_exponent")
                })
            };
            check_decay_exponent(
                rec,
                (get("window_lo")?, get("window_hi")?),
                get("expected")?,
                tol,
            )
        }
        other => Err(Error::invalid("check", format!("unknown check {other:?}"))),
    }
}

/// Names accepted by [`run_check`].
pub const CHECKS: &[&str] = &[
    "energy_identity",
    "gamma2_conservation",
    "lm_evolution",
    "forward_bound",
    "cone_leak",
    "decay_exponent",
];
