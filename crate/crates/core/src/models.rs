//! Model terms: complex mass, matrix potentials and nonlinearities.
//!
//! Nonlinearities come in two conventions. `power_abs` and `power_g0g5` are
//! right-hand sides of the symmetric system `∂_t ψ + … = F(ψ)`. `lochak_form`
//! (`(α I + iβ γ⁵) ψ`) and `blowup_G` (`G(ψ) iγ⁰ψ`) are right-hand sides of the
//! Dirac form `𝒟ψ = g`, which enters the symmetric system as `-iγ⁰ g`.
//! [`NonlinearitySpec::eval_point`] returns the term as written;
//! [`NonlinearitySpec::source_point`] returns what the solver adds to `∂_t ψ`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::field::{xi_eta, Grid, SpinorField};
use crate::gamma::{self, basis, Mat4C, Spinor};
use crate::{Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum PotentialKind {
    Zero,
    /// `A exp(-|x-x0|²/w²) t^p I₄`.
    ScalarBump,
    /// `A exp(-|x-x0|²/w²) t^p M` for a fixed matrix `M`.
    CustomMatrix(Mat4CSerde),
}

/// Serialisable stand-in for [`Mat4C`]: rows of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat4CSerde(pub [[[f64; 2]; 4]; 4]);

impl From<Mat4C> for Mat4CSerde {
    fn from(m: Mat4C) -> Self {
        Mat4CSerde(m.0.map(|row| row.map(|c| [c.re, c.im])))
    }
}

impl From<&Mat4CSerde> for Mat4C {
    fn from(m: &Mat4CSerde) -> Self {
        Mat4C(m.0.map(|row| row.map(|c| C64::new(c[0], c[1]))))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub amplitude: f64,
    pub center: [f64; 3],
    pub width: f64,
    /// Exponent `p` of the `t^p` time profile.
    pub time_power: f64,
    pub hermitian_required: bool,
    pub gamma2_condition_required: bool,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec::zero()
    }
}

impl PotentialSpec {
    pub fn zero() -> Self {
        PotentialSpec {
            kind: PotentialKind::Zero,
            amplitude: 0.0,
            center: [0.0; 3],
            width: 1.0,
            time_power: 0.0,
            hermitian_required: false,
            gamma2_condition_required: false,
        }
    }

    pub fn scalar_bump(amplitude: f64, center: [f64; 3], width: f64) -> Self {
        PotentialSpec {
            kind: PotentialKind::ScalarBump,
            amplitude,
            center,
            width,
            ..PotentialSpec::zero()
        }
    }

    pub fn custom(matrix: Mat4C, amplitude: f64, center: [f64; 3], width: f64) -> Self {
        PotentialSpec {
            kind: PotentialKind::CustomMatrix(matrix.into()),
            amplitude,
            center,
            width,
            ..PotentialSpec::zero()
        }
    }

    pub fn with_flags(mut self, hermitian: bool, gamma2: bool) -> Self {
        self.hermitian_required = hermitian;
        self.gamma2_condition_required = gamma2;
        self
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, PotentialKind::Zero) || self.amplitude == 0.0
    }

    /// The constant matrix factor `M` (identity for scalar bumps).
    pub fn matrix(&self) -> Mat4C {
        match &self.kind {
            PotentialKind::Zero => Mat4C::ZERO,
            PotentialKind::ScalarBump => Mat4C::IDENTITY,
            PotentialKind::CustomMatrix(m) => m.into(),
        }
    }

    /// Real profile `A exp(-|x-x0|²/w²) t^p`.
    pub fn envelope(&self, x: &[f64; 3], t: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let r2: f64 = (0..3).map(|a| (x[a] - self.center[a]).powi(2)).sum();
        self.amplitude * (-r2 / (self.width * self.width)).exp() * t.powf(self.time_power)
    }

    /// Checks the static parameters.
    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(Error::invalid("potential.amplitude", "must be finite"));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::invalid("potential.width", "must be positive"));
        }
        if !self.time_power.is_finite() {
            return Err(Error::invalid("potential.time_power", "must be finite"));
        }
        if !self.matrix().is_finite() {
            return Err(Error::invalid("potential.matrix", "entries must be finite"));
        }
        Ok(())
    }

    /// `V(x, t)` without flag checks.
    pub fn eval_unchecked(&self, x: &[f64; 3], t: f64) -> Mat4C {
        self.matrix().scale_re(self.envelope(x, t))
    }

    /// `V(x, t)`, verifying the requested flags at this point.
    pub fn eval(&self, x: &[f64; 3], t: f64) -> Result<Mat4C> {
        if !(t > 0.0) {
            return Err(Error::Domain {
                op: "eval_potential",
                reason: format!("time must be positive, got {t}"),
            });
        }
        let v = self.eval_unchecked(x, t);
        let tol = 1e-12 * (1.0 + v.max_abs());
        if self.hermitian_required {
            let defect = (v - v.adjoint()).max_abs();
            if defect > tol {
                return Err(Error::PotentialFlag {
                    flag: "hermitian",
                    x: *x,
                    t,
                    defect,
                });
            }
        }
        if self.gamma2_condition_required {
            let g2 = basis().g2;
            let defect = (v.transpose() * g2 + g2 * v).max_abs();
            if defect > tol {
                return Err(Error::PotentialFlag {
                    flag: "gamma2",
                    x: *x,
                    t,
                    defect,
                });
            }
        }
        Ok(v)
    }

    /// `Im V = (V - V*)/(2i)`, the Hermitian part entering the energy balance.
    pub fn im_part(&self, x: &[f64; 3], t: f64) -> Mat4C {
        let v = self.eval_unchecked(x, t);
        (v - v.adjoint()).scale(C64::new(0.0, -0.5))
    }

    /// Samples the flags at random grid points at `t_start` and at eight random
    /// later times in `[t_start, t_end]`.
    pub fn validate_on_grid(&self, grid: &Grid, t_start: f64, t_end: f64, seed: u64) -> Result<()> {
        self.validate()?;
        if self.is_zero() || !(self.hermitian_required || self.gamma2_condition_required) {
            return Ok(());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let np = grid.points();
        let hi = t_end.max(t_start);
        let times = std::iter::once(t_start).chain((0..8).map(|_| rng.random_range(t_start..=hi)));
        let times: Vec<f64> = times.collect();
        for t in times {
            for _ in 0..64 {
                let p = rng.random_range(0..np);
                self.eval(&grid.coords(p), t)?;
            }
            // always include the bump centre where the envelope peaks
            self.eval(&self.center, t)?;
        }
        Ok(())
    }
}

/// Free-function form of [`PotentialSpec::eval`].
pub fn eval_potential(spec: &PotentialSpec, x: &[f64; 3], t: f64) -> Result<Mat4C> {
    spec.eval(x, t)
}

type BilinearFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Real coefficient functions `α(ξ, η)`, `β(ξ, η)` of the Lochak form.
#[derive(Clone)]
pub enum LochakFns {
    /// `α = a_ξ ξ + a_η η`, `β = b_ξ ξ + b_η η`.
    Linear {
        alpha_xi: f64,
        alpha_eta: f64,
        beta_xi: f64,
        beta_eta: f64,
    },
    Custom {
        alpha: BilinearFn,
        beta: BilinearFn,
    },
}

impl fmt::Debug for LochakFns {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LochakFns::Linear {
                alpha_xi,
                alpha_eta,
                beta_xi,
                beta_eta,
            } => write!(
                f,
                "Linear(α = {alpha_xi}ξ + {alpha_eta}η, β = {beta_xi}ξ + {beta_eta}η)"
            ),
            LochakFns::Custom { .. } => f.write_str("Custom"),
        }
    }
}

impl LochakFns {
    #[inline]
    pub fn eval(&self, xi: f64, eta: f64) -> (f64, f64) {
        match self {
            LochakFns::Linear {
                alpha_xi,
                alpha_eta,
                beta_xi,
                beta_eta,
            } => (
                alpha_xi * xi + alpha_eta * eta,
                beta_xi * xi + beta_eta * eta,
            ),
            LochakFns::Custom { alpha, beta } => (alpha(xi, eta), beta(xi, eta)),
        }
    }
}

#[derive(Clone, Debug)]
pub enum NonlinearitySpec {
    None,
    /// `sign |ψ|^α ψ`.
    PowerAbs {
        alpha: f64,
        sign: f64,
    },
    /// `|γ⁰γ⁵ψ|^α ψ`.
    PowerG0G5 {
        alpha: f64,
    },
    /// `(α(ξ,η) I + iβ(ξ,η) γ⁵) ψ` in Dirac form.
    LochakForm(LochakFns),
    /// `c0 |ψ|^α iγ⁰ψ` in Dirac form.
    BlowupG {
        alpha: f64,
        c0: f64,
    },
}

impl NonlinearitySpec {
    pub fn name(&self) -> &'static str {
        match self {
            NonlinearitySpec::None => "none",
            NonlinearitySpec::PowerAbs { .. } => "power_abs",
            NonlinearitySpec::PowerG0G5 { .. } => "power_g0g5",
            NonlinearitySpec::LochakForm(_) => "lochak_form",
            NonlinearitySpec::BlowupG { .. } => "blowup_G",
        }
    }

    /// Growth exponent `α` of the power families.
    pub fn exponent(&self) -> Option<f64> {
        match self {
            NonlinearitySpec::PowerAbs { alpha, .. }
            | NonlinearitySpec::PowerG0G5 { alpha }
            | NonlinearitySpec::BlowupG { alpha, .. } => Some(*alpha),
            _ => None,
        }
    }

    /// True when the right side has the `iγ⁰A` structure under which the
    /// energy and `γ²` identities hold exactly (no nonlinearity, or Lochak form).
    pub fn is_a_form(&self) -> bool {
        matches!(
            self,
            NonlinearitySpec::None | NonlinearitySpec::LochakForm(_)
        )
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(
                    format!("nonlinearity.{name}"),
                    format!("must be positive, got {v}"),
                ))
            }
        };
        match self {
            NonlinearitySpec::None => Ok(()),
            NonlinearitySpec::PowerAbs { alpha, sign } => {
                positive("alpha_exp", *alpha)?;
                if *sign != 1.0 && *sign != -1.0 {
                    return Err(Error::invalid(
                        "nonlinearity.sign",
                        format!("must be +1 or -1, got {sign}"),
                    ));
                }
                Ok(())
            }
            NonlinearitySpec::PowerG0G5 { alpha } => positive("alpha_exp", *alpha),
            NonlinearitySpec::BlowupG { alpha, c0 } => {
                positive("alpha_exp", *alpha)?;
                positive("c0", *c0)
            }
            NonlinearitySpec::LochakForm(fns) => check_vanishing(fns),
        }
    }

    /// The nonlinear term as written (Dirac form for Lochak and blow-up families).
    #[inline]
    pub fn eval_point(&self, s: &Spinor) -> Spinor {
        match self {
            NonlinearitySpec::None => [C64::default(); 4],
            NonlinearitySpec::PowerAbs { alpha, sign } => {
                let w = sign * gamma::norm_sq(s).powf(0.5 * alpha);
                s.map(|c| c * w)
            }
            NonlinearitySpec::PowerG0G5 { alpha } => {
                let g = basis().g0 * basis().g5;
                let w = gamma::norm_sq(&g.apply(s)).powf(0.5 * alpha);
                s.map(|c| c * w)
            }
            NonlinearitySpec::LochakForm(fns) => {
                let (xi, eta) = xi_eta(s);
                let (a, b) = fns.eval(xi, eta);
                lochak_apply(a, b, s)
            }
            NonlinearitySpec::BlowupG { alpha, c0 } => {
                let w = c0 * gamma::norm_sq(s).powf(0.5 * alpha);
                let g0s = basis().g0.apply(s);
                g0s.map(|c| I * w * c)
            }
        }
    }

    /// Contribution to `∂_t ψ` in the symmetric system.
    #[inline]
    pub fn source_point(&self, s: &Spinor) -> Spinor {
        match self {
            NonlinearitySpec::None
            | NonlinearitySpec::PowerAbs { .. }
            | NonlinearitySpec::PowerG0G5 { .. } => self.eval_point(s),
            NonlinearitySpec::LochakForm(_) | NonlinearitySpec::BlowupG { .. } => {
                let g = self.eval_point(s);
                let g0g = basis().g0.apply(&g);
                g0g.map(|c| -I * c)
            }
        }
    }

    /// Pointwise [`Self::eval_point`] over a field.
    pub fn eval_nonlinearity(&self, f: &SpinorField) -> Result<SpinorField> {
        if matches!(self, NonlinearitySpec::None) {
            return Err(Error::invalid(
                "nonlinearity.kind",
                "no nonlinearity configured",
            ));
        }
        Ok(f.map_points(|s| self.eval_point(s)))
    }

    /// Pointwise [`Self::source_point`] over a field.
    pub fn source_field(&self, f: &SpinorField) -> SpinorField {
        f.map_points(|s| self.source_point(s))
    }

    /// `α(ξ,η)`, `β(ξ,η)` fields of the Lochak form.
    pub fn induced_potential(&self, f: &SpinorField) -> Result<InducedPotential> {
        let NonlinearitySpec::LochakForm(fns) = self else {
            return Err(Error::invalid(
                "nonlinearity.kind",
                "induced potential requires lochak_form",
            ));
        };
        let d = f.bilinear_densities();
        let (alpha_field, beta_field) =
            d.xi.iter()
                .zip(&d.eta)
                .map(|(&x, &e)| fns.eval(x, e))
                .unzip();
        Ok(InducedPotential {
            alpha_field,
            beta_field,
        })
    }
}

/// Free-function form of [`NonlinearitySpec::eval_nonlinearity`].
pub fn eval_nonlinearity(spec: &NonlinearitySpec, f: &SpinorField) -> Result<SpinorField> {
    spec.eval_nonlinearity(f)
}

/// `(a I + i b γ⁵) ψ`.
#[inline]
pub fn lochak_apply(a: f64, b: f64, s: &Spinor) -> Spinor {
    // γ⁵ψ = -(ψ3, ψ4, ψ1, ψ2)
    let ib = C64::new(0.0, b);
    [
        s[0] * a - ib * s[2],
        s[1] * a - ib * s[3],
        s[2] * a - ib * s[0],
        s[3] * a - ib * s[1],
    ]
}

fn check_vanishing(fns: &LochakFns) -> Result<()> {
    let dirs = [(1.0, 0.0), (0.0, 1.0), (0.6, -0.8), (-0.8, -0.6)];
    for (dx, de) in dirs {
        let slope = |eps: f64| {
            let (a, b) = fns.eval(eps * dx, eps * de);
            a.abs().max(b.abs()) / eps
        };
        let reference = slope(1e-2);
        if !reference.is_finite() {
            return Err(Error::invalid(
                "nonlinearity.lochak",
                "α, β must be finite near the origin",
            ));
        }
        for eps in [1e-4, 1e-6] {
            let s = slope(eps);
            if !(s <= 10.0 * reference + 1.0) {
                return Err(Error::invalid(
                    "nonlinearity.lochak",
                    format!(
                        "α, β must vanish like O(|ξ|+|η|) at the origin (slope {s:e} at {eps:e})"
                    ),
                ));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct InducedPotential {
    pub alpha_field: Vec<f64>,
    pub beta_field: Vec<f64>,
}

/// Empirical Lipschitz constant of the nonlinearity in `H(k)`:
/// the maximum over random smooth pairs of
/// `‖F(ψ1) - F(ψ2)‖_k / (‖ψ1 - ψ2‖_k (‖ψ1‖_k^α + ‖ψ2‖_k^α))`.
///
/// Fields are band-limited (wavenumbers up to 4 fundamental modes) so the
/// same functions are sampled on any grid of the same box.
pub fn lipschitz_probe(
    spec: &NonlinearitySpec,
    grid: &Grid,
    k: u32,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if matches!(spec, NonlinearitySpec::None) {
        return Err(Error::invalid(
            "nonlinearity.kind",
            "lipschitz probe needs a nonlinearity",
        ));
    }
    if k < 2 {
        return Err(Error::invalid("k", format!("must be >= 2, got {k}")));
    }
    let alpha = spec.exponent().unwrap_or(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..trials {
        let amp = rng.random_range(0.05..0.5);
        let a = random_smooth(grid, &mut rng, amp);
        let delta = rng.random_range(1e-3..0.2) * amp;
        let b = a.axpy(C64::new(1.0, 0.0), &random_smooth(grid, &mut rng, delta));
        let diff = a.axpy(C64::new(-1.0, 0.0), &b).sobolev_norm(k)?;
        if diff == 0.0 {
            continue;
        }
        let fa = spec.eval_nonlinearity(&a)?;
        let fb = spec.eval_nonlinearity(&b)?;
        let num = fa.axpy(C64::new(-1.0, 0.0), &fb).sobolev_norm(k)?;
        let den = diff * (a.sobolev_norm(k)?.powf(alpha) + b.sobolev_norm(k)?.powf(alpha));
        best = best.max(num / den);
    }
    Ok(best)
}

fn random_smooth(grid: &Grid, rng: &mut ChaCha8Rng, amp: f64) -> SpinorField {
    const MODES: i32 = 4;
    let dk = 2.0 * std::f64::consts::PI / grid.box_length;
    let count = (2 * MODES + 1) as usize;
    let waves: usize = count.pow(grid.dim as u32);
    let coeffs: Vec<[C64; 4]> = (0..waves)
        .map(|_| {
            std::array::from_fn(|_| {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            })
        })
        .collect();
    let dim = grid.dim;
    let norm = amp / (waves as f64).sqrt();
    SpinorField::from_fn(*grid, 1.0, |x| {
        let mut s = [C64::default(); 4];
        for (w, c) in coeffs.iter().enumerate() {
            let mut phase = 0.0;
            let mut jsq = 0;
            let mut rest = w;
            for xa in x.iter().take(dim) {
                let j = (rest % count) as i32 - MODES;
                rest /= count;
                phase += j as f64 * dk * xa;
                jsq += j * j;
            }
            let e = C64::from_polar(norm * (-0.2 * jsq as f64).exp(), phase);
            for a in 0..4 {
                s[a] += c[a] * e;
            }
        }
        s
    })
}
