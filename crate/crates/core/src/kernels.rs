//! Explicit free propagator for `a(t) = t^ℓ`, `0 <= ℓ < 1`.
//!
//! Kernels `E(r,t;t₀;m)` and `K₁(r,t;m;ε)` are built from `₂F₁(iμ, iμ; 1; z)`
//! with `μ = m/(1-ℓ)`. The wave-type averaging operator acts on a Fourier mode
//! `e^{iξ·x}` as `cos(r|ξ|)`, so every operator here is a Fourier multiplier
//! obtained from a one-dimensional `r`-integral per distinct `|ξ|`.
//!
//! Spatial frequencies are the solver's derivative wavenumbers (Nyquist mode
//! zeroed), so the reconstruction solves the same semi-discrete system as
//! [`crate::solver`].

use std::collections::HashMap;

use rayon::prelude::*;

use crate::field::{Grid, SpinorField};
use crate::gamma::{self, Spinor};
use crate::hyp2f1;
use crate::quadrature::{self, GaussLegendre};
use crate::spacetime::Cosmology;
use crate::spectral::{derivative_wavenumbers, plans};
use crate::{Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);

/// Largest supported `t/ε` (keeps the hypergeometric argument below 0.95).
pub const MAX_TIME_RATIO: f64 = 50.0;
/// Relative mismatch between analytic and finite-difference `∂_t` that fails a reconstruction.
pub const AUDIT_TOL: f64 = 1e-6;
/// Absolute tolerance of the adaptive `r`-quadrature in [`apply_k1_operator`].
pub const K1_QUAD_TOL: f64 = 1e-10;

const R_NODES: usize = 20;
const B_NODES: usize = 12;
const DEFAULT_B_PANELS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelEval {
    pub cosmology: Cosmology,
    pub m: C64,
    pub epsilon: f64,
}

impl KernelEval {
    pub fn new(cosmology: Cosmology, m: C64, epsilon: f64) -> Result<Self> {
        let ell = cosmology.ell;
        if !(0.0..1.0).contains(&ell) {
            return Err(Error::Domain {
                op: "kernel",
                reason: format!("kernel mode requires 0 <= ell < 1, got {ell}"),
            });
        }
        if cosmology.a0 != 1.0 {
            return Err(Error::Domain {
                op: "kernel",
                reason: format!("kernel mode requires a0 = 1, got {}", cosmology.a0),
            });
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid(
                "kernel.epsilon",
                format!("must be positive, got {epsilon}"),
            ));
        }
        if !m.is_finite() {
            return Err(Error::invalid("mass", "must be finite"));
        }
        Ok(KernelEval {
            cosmology,
            m,
            epsilon,
        })
    }

    /// Same kernel with mass `m` replaced.
    pub fn with_mass(&self, m: C64) -> Self {
        KernelEval { m, ..*self }
    }

    fn ell(&self) -> f64 {
        self.cosmology.ell
    }

    fn mu(&self) -> C64 {
        self.m / (1.0 - self.ell())
    }

    fn phi(&self, t: f64) -> f64 {
        self.cosmology.phi_unchecked(t)
    }

    fn check_times(&self, t: f64, t0: f64) -> Result<()> {
        if !(t0 > 0.0 && t >= t0 && t.is_finite()) {
            return Err(Error::Domain {
                op: "kernel",
                reason: format!("need t >= t0 > 0, got t = {t}, t0 = {t0}"),
            });
        }
        if t / t0 > MAX_TIME_RATIO {
            return Err(Error::Domain {
                op: "kernel",
                reason: format!("t/t0 = {} exceeds {MAX_TIME_RATIO}", t / t0),
            });
        }
        Ok(())
    }

    /// `W = (φ(t)+φ(t₀))² - r²` and `z = ((φ(t)-φ(t₀))² - r²)/W` after checking the cone range.
    fn w_and_z(&self, r: f64, t: f64, t0: f64) -> Result<(f64, f64)> {
        let (p, p0) = (self.phi(t), self.phi(t0));
        let span = p - p0;
        if !(r >= 0.0 && r <= span * (1.0 + 1e-12) + 1e-300) {
            return Err(Error::Domain {
                op: "kernel",
                reason: format!("r = {r} outside [0, {span}]"),
            });
        }
        let r = r.min(span);
        let w = (p + p0) * (p + p0) - r * r;
        let z = ((span * span - r * r) / w).max(0.0);
        Ok((w, z))
    }
}

/// `x^(-iμ)` for `x > 0`.
fn unimodular_power(x: f64, mu: C64) -> C64 {
    (-I * mu * x.ln()).exp()
}

/// `E(r,t;t₀;m)`.
pub fn kernel_e(r: f64, t: f64, t0: f64, ke: &KernelEval) -> Result<C64> {
    ke.check_times(t, t0)?;
    let (w, z) = ke.w_and_z(r, t, t0)?;
    let ell = ke.ell();
    let mu = ke.mu();
    let pre = ((2.0 * I * mu - 1.0) * std::f64::consts::LN_2).exp()
        * (1.0 - ell).powf(ell / (1.0 - ell))
        * (((ell + 2.0 * I * ke.m) / (1.0 - ell)) * ke.phi(t0).ln()).exp();
    Ok(pre * unimodular_power(w, mu) * hyp2f1::f(I * mu, I * mu, 1.0, z)?)
}

/// `K₁(r,t;m;ε)`.
pub fn kernel_k1(r: f64, t: f64, ke: &KernelEval) -> Result<C64> {
    ke.check_times(t, ke.epsilon)?;
    let (w, z) = ke.w_and_z(r, t, ke.epsilon)?;
    Ok(k1_prefactor(ke)
        * unimodular_power(w, ke.mu())
        * hyp2f1::f(I * ke.mu(), I * ke.mu(), 1.0, z)?)
}

fn k1_prefactor(ke: &KernelEval) -> C64 {
    let mu = ke.mu();
    ((2.0 * I * mu) * std::f64::consts::LN_2).exp()
        * ((2.0 * I * mu - 1.0) * ke.phi(ke.epsilon).ln()).exp()
}

/// `∂_t K₁(r,t;m;ε)` at fixed `r`.
fn kernel_k1_dt(r: f64, t: f64, ke: &KernelEval) -> Result<C64> {
    let (w, z) = ke.w_and_z(r, t, ke.epsilon)?;
    let mu = ke.mu();
    let a = I * mu;
    let (p, pe) = (ke.phi(t), ke.phi(ke.epsilon));
    let dp = ke.cosmology.dphi(t);
    let w_t = 2.0 * (p + pe) * dp;
    let n = z * w;
    let n_t = 2.0 * (p - pe) * dp;
    let z_t = (n_t * w - n * w_t) / (w * w);
    let f = hyp2f1::f(a, a, 1.0, z)?;
    let df = hyp2f1::d_dz_c1(a, a, z)?;
    let wp = unimodular_power(w, mu);
    Ok(k1_prefactor(ke) * wp * (-a * w_t / w * f + df * z_t))
}

/// `-iε^(1+ℓ/2-im)/(1-ℓ)`.
fn k1_operator_constant(ke: &KernelEval) -> C64 {
    let ell = ke.ell();
    -I * ((1.0 + 0.5 * ell - I * ke.m) * ke.epsilon.ln()).exp() / (1.0 - ell)
}

/// Fourier multiplier of the `K₁` operator at `|ξ| = rho`, by adaptive quadrature.
pub fn k1_multiplier(rho: f64, t: f64, ke: &KernelEval) -> Result<C64> {
    ke.check_times(t, ke.epsilon)?;
    let span = ke.phi(t) - ke.phi(ke.epsilon);
    if span == 0.0 {
        return Ok(C64::default());
    }
    // kernel values are checked once at the endpoints; the integrand is then evaluated unchecked
    kernel_k1(0.0, t, ke)?;
    let mu = ke.mu();
    let pre = k1_prefactor(ke);
    let p = ke.phi(t) + ke.phi(ke.epsilon);
    let integrand = |r: f64| {
        let w = p * p - r * r;
        let z = ((span * span - r * r) / w).max(0.0);
        let f = hyp2f1::f(I * mu, I * mu, 1.0, z).unwrap_or(C64::new(f64::NAN, 0.0));
        pre * unimodular_power(w, mu) * f * (r * rho).cos()
    };
    let v = quadrature::adaptive(integrand, 0.0, span, K1_QUAD_TOL)?;
    if !v.is_finite() {
        return Err(Error::Quadrature { a: 0.0, b: span });
    }
    Ok(k1_operator_constant(ke) * v)
}

/// `K₁` and `∂_t K₁` tabulated on fixed composite Gauss-Legendre nodes over
/// `[0, φ(t)-φ(ε)]`, reusable for every `|ξ|`.
struct K1Table {
    r: Vec<f64>,
    w: Vec<f64>,
    k1: Vec<C64>,
    k1_t: Vec<C64>,
    edge: C64,
    span: f64,
    dspan: f64,
    constant: C64,
}

impl K1Table {
    fn new(t: f64, ke: &KernelEval, panels: usize, with_dt: bool) -> Result<Self> {
        ke.check_times(t, ke.epsilon)?;
        let span = ke.phi(t) - ke.phi(ke.epsilon);
        let rule = GaussLegendre::cached(R_NODES);
        let h = span / panels as f64;
        let mut r = Vec::with_capacity(panels * R_NODES);
        let mut w = Vec::with_capacity(panels * R_NODES);
        for p in 0..panels {
            for (x, wt) in rule.mapped(p as f64 * h, (p + 1) as f64 * h) {
                r.push(x);
                w.push(wt);
            }
        }
        let k1 = r
            .iter()
            .map(|&x| kernel_k1(x, t, ke))
            .collect::<Result<Vec<_>>>()?;
        let k1_t = if with_dt {
            r.iter()
                .map(|&x| kernel_k1_dt(x, t, ke))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        Ok(K1Table {
            edge: kernel_k1(span, t, ke)?,
            r,
            w,
            k1,
            k1_t,
            span,
            dspan: ke.cosmology.dphi(t),
            constant: k1_operator_constant(ke),
        })
    }

    fn value(&self, rho: f64) -> C64 {
        let s: C64 = (0..self.r.len())
            .map(|i| self.k1[i] * (self.w[i] * (self.r[i] * rho).cos()))
            .sum();
        self.constant * s
    }

    fn derivative(&self, rho: f64) -> C64 {
        let s: C64 = (0..self.r.len())
            .map(|i| self.k1_t[i] * (self.w[i] * (self.r[i] * rho).cos()))
            .sum();
        self.constant * (s + self.edge * ((self.span * rho).cos() * self.dspan))
    }
}

/// Distinct `|ξ|` values of a grid and the index of each mode into them.
struct ModeTable {
    key_of: Vec<usize>,
    rho: Vec<f64>,
    xi: Vec<[f64; 3]>,
}

impl ModeTable {
    fn new(grid: &Grid) -> Self {
        let kd = derivative_wavenumbers(grid.n, grid.box_length);
        let unit = 2.0 * std::f64::consts::PI / grid.box_length;
        let mut keys: HashMap<u64, usize> = HashMap::new();
        let mut rho = Vec::new();
        let mut key_of = Vec::with_capacity(grid.points());
        let mut xi = Vec::with_capacity(grid.points());
        for p in 0..grid.points() {
            let idx = grid.index(p);
            let mut k = [0.0; 3];
            for a in 0..grid.dim {
                k[a] = kd[idx[a]];
            }
            let r2: f64 = k.iter().map(|v| v * v).sum();
            let key = (r2 / (unit * unit)).round() as u64;
            let next = rho.len();
            let id = *keys.entry(key).or_insert_with(|| {
                rho.push(r2.sqrt());
                next
            });
            key_of.push(id);
            xi.push(k);
        }
        ModeTable { key_of, rho, xi }
    }

    fn rho_max(&self) -> f64 {
        self.rho.iter().copied().fold(0.0, f64::max)
    }
}

fn r_panels(rho_max: f64, span: f64) -> usize {
    (rho_max * span / std::f64::consts::PI).ceil() as usize + 4
}

fn require_dim3(grid: &Grid, op: &'static str) -> Result<()> {
    if grid.dim != 3 {
        return Err(Error::Domain {
            op,
            reason: format!("requires a 3-dimensional grid, got dim = {}", grid.dim),
        });
    }
    Ok(())
}

fn check_len(grid: &Grid, data: &[C64], name: &str) -> Result<()> {
    if data.len() != grid.points() {
        return Err(Error::invalid(
            name,
            format!("expected {} values, got {}", grid.points(), data.len()),
        ));
    }
    Ok(())
}

/// Multiplies a scalar field by `cos(r|ξ|)`.
pub fn apply_wave_multiplier(grid: &Grid, data: &[C64], r: f64) -> Result<Vec<C64>> {
    check_len(grid, data, "field")?;
    let modes = ModeTable::new(grid);
    let pl = plans(grid.n);
    let mut buf = data.to_vec();
    pl.forward(grid.dim, &mut buf);
    buf.par_iter_mut()
        .enumerate()
        .for_each(|(p, v)| *v *= (r * modes.rho[modes.key_of[p]]).cos());
    pl.inverse(grid.dim, &mut buf);
    Ok(buf)
}

/// The `K₁` operator applied to a scalar field at time `t`.
pub fn apply_k1_operator(grid: &Grid, phi0: &[C64], t: f64, ke: &KernelEval) -> Result<Vec<C64>> {
    require_dim3(grid, "apply_k1_operator")?;
    check_len(grid, phi0, "phi0")?;
    ke.check_times(t, ke.epsilon)?;
    let modes = ModeTable::new(grid);
    let mult = modes
        .rho
        .par_iter()
        .map(|&rho| k1_multiplier(rho, t, ke))
        .collect::<Result<Vec<_>>>()?;
    let pl = plans(grid.n);
    let mut buf = phi0.to_vec();
    pl.forward(3, &mut buf);
    buf.par_iter_mut()
        .enumerate()
        .for_each(|(p, v)| *v *= mult[modes.key_of[p]]);
    pl.inverse(3, &mut buf);
    Ok(buf)
}

/// `(k(ρ), ∂_t k(ρ))` for all distinct `ρ`, plus the audit mismatch.
fn multipliers_with_audit(
    t: f64,
    ke: &KernelEval,
    modes: &ModeTable,
) -> Result<(Vec<(C64, C64)>, f64)> {
    let span = ke.phi(t) - ke.phi(ke.epsilon);
    let panels = r_panels(modes.rho_max(), span);
    let table = K1Table::new(t, ke, panels, true)?;
    let vals: Vec<(C64, C64)> = modes
        .rho
        .par_iter()
        .map(|&r| (table.value(r), table.derivative(r)))
        .collect();

    // 4th-order central difference of the tabulated multiplier as an audit of the analytic ∂_t
    let dt = 1e-4 * t;
    let shifted = |s: f64| -> Result<Vec<C64>> {
        let tt = t + s * dt;
        if tt < ke.epsilon {
            // one-sided near t = ε: the multiplier is smooth across, evaluate by continuation
            return Ok(Vec::new());
        }
        let tb = K1Table::new(tt, ke, panels, false)?;
        Ok(modes.rho.iter().map(|&r| tb.value(r)).collect())
    };
    let (m2, m1, p1, p2) = (shifted(-2.0)?, shifted(-1.0)?, shifted(1.0)?, shifted(2.0)?);
    let mismatch = if m2.is_empty() || m1.is_empty() {
        0.0
    } else {
        let mut diff: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (i, v) in vals.iter().enumerate() {
            let fd = (m2[i] - m1[i] * 8.0 + p1[i] * 8.0 - p2[i]) / (12.0 * dt);
            diff = diff.max((fd - v.1).norm());
            scale = scale.max(v.1.norm());
        }
        if scale > 0.0 {
            diff / scale
        } else {
            0.0
        }
    };
    Ok((vals, mismatch))
}

/// Result of [`reconstruct_free`].
pub struct Reconstruction {
    pub field: SpinorField,
    /// Relative mismatch between analytic and finite-difference time derivatives
    /// (0 when `t` is too close to `ε` for the centred stencil).
    pub audit_mismatch: f64,
}

/// Free (`V = 0`) solution at time `t` from data `psi1` at `t = ε` via the
/// explicit kernel representation.
pub fn reconstruct_free(psi1: &SpinorField, t: f64, ke: &KernelEval) -> Result<Reconstruction> {
    let grid = *psi1.grid();
    require_dim3(&grid, "reconstruct_free")?;
    if (psi1.time - ke.epsilon).abs() > 1e-12 * ke.epsilon {
        return Err(Error::invalid(
            "psi1.time",
            format!("must equal epsilon = {}, got {}", ke.epsilon, psi1.time),
        ));
    }
    ke.check_times(t, ke.epsilon)?;
    let modes = ModeTable::new(&grid);
    let (plus, mis_p) = multipliers_with_audit(t, ke, &modes)?;
    let (minus, mis_m) = multipliers_with_audit(t, &ke.with_mass(-ke.m), &modes)?;
    let mismatch = mis_p.max(mis_m);
    if !(mismatch <= AUDIT_TOL) {
        return Err(Error::KernelAudit { mismatch });
    }

    let np = grid.points();
    let pl = plans(grid.n);
    let mut hat = psi1.data().to_vec();
    hat.par_chunks_mut(np).for_each(|c| pl.forward(3, c));

    let b = gamma::basis();
    let ell = ke.ell();
    let tim = (I * ke.m * t.ln()).exp();
    let p_mat = b.gamma_u.scale(tim) + b.gamma_l.scale(tim.inv());
    let time_op = (b.g0 * p_mat).scale(I * t.powf(-0.5 * ell));
    let space_ops: [_; 3] =
        std::array::from_fn(|k| (*b.spatial()[k] * p_mat).scale(I * t.powf(-1.5 * ell)));

    let mut out = vec![C64::default(); 4 * np];
    let results: Vec<Spinor> = (0..np)
        .into_par_iter()
        .with_min_len(512)
        .map(|p| {
            let s = [hat[p], hat[np + p], hat[2 * np + p], hat[3 * np + p]];
            let (kp, kpt) = plus[modes.key_of[p]];
            let (km, kmt) = minus[modes.key_of[p]];
            // w = γ⁰ diag(k_m I₂, k_{-m} I₂) ψ̂₁
            let w = [kp * s[0], kp * s[1], -km * s[2], -km * s[3]];
            let wt = [kpt * s[0], kpt * s[1], -kmt * s[2], -kmt * s[3]];
            let mut r = time_op.apply(&wt);
            let xi = modes.xi[p];
            for k in 0..3 {
                if xi[k] != 0.0 {
                    let v = space_ops[k].apply(&w);
                    for q in 0..4 {
                        r[q] += I * xi[k] * v[q];
                    }
                }
            }
            r
        })
        .collect();
    for (p, r) in results.iter().enumerate() {
        for q in 0..4 {
            out[q * np + p] = r[q];
        }
    }
    out.par_chunks_mut(np).for_each(|c| pl.inverse(3, c));
    Ok(Reconstruction {
        field: SpinorField::new(grid, out, t)?,
        audit_mismatch: mismatch,
    })
}

/// Time-indexed scalar source `f(·, b)` for [`apply_g_operator`].
pub trait ScalarSource: Sync {
    fn sample(&self, b: f64, out: &mut [C64]);
}

impl<F: Fn(f64, &mut [C64]) + Sync> ScalarSource for F {
    fn sample(&self, b: f64, out: &mut [C64]) {
        self(b, out)
    }
}

/// The `G` (inhomogeneous) operator at time `t` with the default `b`-quadrature.
pub fn apply_g_operator(
    grid: &Grid,
    source: &dyn ScalarSource,
    t: f64,
    ke: &KernelEval,
) -> Result<Vec<C64>> {
    apply_g_operator_with(grid, source, t, ke, DEFAULT_B_PANELS)
}

/// [`apply_g_operator`] with `b_panels` composite Gauss-Legendre panels over `[ε, t]`.
pub fn apply_g_operator_with(
    grid: &Grid,
    source: &dyn ScalarSource,
    t: f64,
    ke: &KernelEval,
    b_panels: usize,
) -> Result<Vec<C64>> {
    require_dim3(grid, "apply_g_operator")?;
    ke.check_times(t, ke.epsilon)?;
    if b_panels == 0 {
        return Err(Error::invalid("b_panels", "must be at least 1"));
    }
    let np = grid.points();
    let mut acc = vec![C64::default(); np];
    if t == ke.epsilon {
        return Ok(acc);
    }
    let modes = ModeTable::new(grid);
    let rho_max = modes.rho_max();
    let pl = plans(grid.n);
    let rule = GaussLegendre::cached(B_NODES);
    let h = (t - ke.epsilon) / b_panels as f64;
    let ell = ke.ell();
    let mut fb = vec![C64::default(); np];
    for pan in 0..b_panels {
        let a = ke.epsilon + pan as f64 * h;
        for (b, wb) in rule.mapped(a, a + h) {
            let span = ke.phi(t) - ke.phi(b);
            let panels = r_panels(rho_max, span);
            let nodes: Vec<(f64, f64)> = (0..panels)
                .flat_map(|p| {
                    let hp = span / panels as f64;
                    GaussLegendre::cached(R_NODES)
                        .mapped(p as f64 * hp, (p + 1) as f64 * hp)
                        .collect::<Vec<_>>()
                })
                .collect();
            let e = nodes
                .iter()
                .map(|&(r, _)| kernel_e(r, t, b, ke))
                .collect::<Result<Vec<_>>>()?;
            let weight = -wb * ((0.5 * ell - I * ke.m) * b.ln()).exp();
            let mult: Vec<C64> = modes
                .rho
                .par_iter()
                .map(|&rho| {
                    let g: C64 = nodes
                        .iter()
                        .zip(&e)
                        .map(|(&(r, w), ev)| ev * (2.0 * w * (r * rho).cos()))
                        .sum();
                    weight * g
                })
                .collect();
            fb.iter_mut().for_each(|v| *v = C64::default());
            source.sample(b, &mut fb);
            pl.forward(3, &mut fb);
            acc.par_iter_mut()
                .zip(fb.par_iter())
                .enumerate()
                .for_each(|(p, (a, f))| *a += mult[modes.key_of[p]] * f);
        }
    }
    pl.inverse(3, &mut acc);
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ke(ell: f64, m: C64) -> KernelEval {
        KernelEval::new(Cosmology::new(ell, 1.0).unwrap(), m, 1.0).unwrap()
    }

    #[test]
    fn validation() {
        assert!(KernelEval::new(Cosmology::new(1.0, 1.0).unwrap(), C64::default(), 1.0).is_err());
        assert!(KernelEval::new(Cosmology::new(1.5, 1.0).unwrap(), C64::default(), 1.0).is_err());
        assert!(KernelEval::new(Cosmology::new(0.5, 2.0).unwrap(), C64::default(), 1.0).is_err());
        let k = ke(0.5, C64::new(0.3, 0.0));
        assert!(kernel_k1(0.0, 60.0, &k).is_err());
        assert!(kernel_k1(5.0, 2.0, &k).is_err());
        assert!(kernel_e(0.0, 1.0, 2.0, &k).is_err());
    }

    #[test]
    fn massless_kernels() {
        for ell in [0.0, 0.5, 2.0 / 3.0] {
            let k = ke(ell, C64::default());
            let pe = k.phi(1.0);
            for (r, t) in [(0.0, 2.0), (0.3, 3.0)] {
                assert!((kernel_k1(r, t, &k).unwrap() - 1.0 / pe).norm() < 1e-15);
            }
            let t0 = 1.5;
            let expect =
                0.5 * (1.0 - ell).powf(ell / (1.0 - ell)) * k.phi(t0).powf(ell / (1.0 - ell));
            assert!((kernel_e(0.2, 3.0, t0, &k).unwrap() - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn cone_edge_uses_prefactors_only() {
        let k = ke(0.5, C64::new(0.4, 0.1));
        let (t, span) = (3.0, k.phi(3.0) - k.phi(1.0));
        let w = 4.0 * k.phi(t) * k.phi(1.0);
        let expect = k1_prefactor(&k) * unimodular_power(w, k.mu());
        assert!((kernel_k1(span, t, &k).unwrap() - expect).norm() < 1e-14);
    }

    #[test]
    fn real_mass_powers_are_unimodular() {
        let mu = ke(0.5, C64::new(0.7, 0.0)).mu();
        for x in [0.01, 1.0, 7.5, 1e3] {
            assert!((unimodular_power(x, mu).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn k1_time_derivative_matches_differences() {
        let k = ke(2.0 / 3.0, C64::new(0.5, 0.1));
        let (r, t, h) = (0.2, 2.5, 1e-4);
        let fd = (kernel_k1(r, t - 2.0 * h, &k).unwrap() - kernel_k1(r, t - h, &k).unwrap() * 8.0
            + kernel_k1(r, t + h, &k).unwrap() * 8.0
            - kernel_k1(r, t + 2.0 * h, &k).unwrap())
            / (12.0 * h);
        let an = kernel_k1_dt(r, t, &k).unwrap();
        assert!((fd - an).norm() < 1e-8 * an.norm());
    }

    #[test]
    fn massless_multiplier_closed_form() {
        let ell = 0.5;
        let k = ke(ell, C64::default());
        let t = 2.0;
        let span = k.phi(t) - k.phi(1.0);
        for rho in [0.0, 0.7, 4.0] {
            let s = if rho == 0.0 {
                span
            } else {
                (rho * span).sin() / rho
            };
            let expect = -I / (1.0 - ell) / k.phi(1.0) * s;
            assert!((k1_multiplier(rho, t, &k).unwrap() - expect).norm() < 1e-9);
        }
        assert_eq!(k1_multiplier(1.0, 1.0, &k).unwrap(), C64::default());
    }

    #[test]
    fn tabulated_and_adaptive_multipliers_agree() {
        let k = ke(0.5, C64::new(0.3, 0.2));
        let t = 3.0;
        let span = k.phi(t) - k.phi(1.0);
        let table = K1Table::new(t, &k, r_panels(6.0, span), false).unwrap();
        for rho in [0.0, 1.0, 6.0] {
            assert!((table.value(rho) - k1_multiplier(rho, t, &k).unwrap()).norm() < 1e-10);
        }
    }
}
