//! Method-of-lines integration of the symmetric hyperbolic system
//!
//! ```text
//! ∂_t ψ = -(1/a(t)) Σ αʲ ∂_j ψ - (3ℓ/2t) ψ - i (m/t) γ⁰ ψ + i V ψ + S(ψ) + f
//! ```
//!
//! with spectral spatial derivatives and classical RK4 in time. `S` is the
//! nonlinearity in symmetric form (see [`crate::models`]) and `f` an optional
//! prescribed source.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::{chunked_sum, Grid, SpinorField};
use crate::gamma::{self, Mat4C, Spinor};
use crate::models::{NonlinearitySpec, PotentialSpec};
use crate::spacetime::{Cone, Cosmology};
use crate::spectral::{derivative_wavenumbers, plans};
use crate::{Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);

/// Mass fraction defining the measured support radius of initial data.
pub const SUPPORT_FRACTION: f64 = 1.0 - 1e-5;

/// Everything entering the right-hand side.
#[derive(Clone, Debug)]
pub struct Model {
    pub cosmology: Cosmology,
    pub mass: C64,
    pub potential: PotentialSpec,
    pub nonlinearity: NonlinearitySpec,
}

impl Model {
    /// Free model: zero potential, no nonlinearity.
    pub fn free(cosmology: Cosmology, mass: C64) -> Self {
        Model {
            cosmology,
            mass,
            potential: PotentialSpec::zero(),
            nonlinearity: NonlinearitySpec::None,
        }
    }

    pub fn with_potential(mut self, v: PotentialSpec) -> Self {
        self.potential = v;
        self
    }

    pub fn with_nonlinearity(mut self, n: NonlinearitySpec) -> Self {
        self.nonlinearity = n;
        self
    }

    /// The same model with the nonlinearity removed.
    pub fn linear(&self) -> Model {
        Model {
            nonlinearity: NonlinearitySpec::None,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mass.is_finite() {
            return Err(Error::invalid("mass", "must be finite"));
        }
        self.potential.validate()?;
        self.nonlinearity.validate()
    }
}

/// Ball containing (essentially all of) the initial data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub center: [f64; 3],
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub t_start: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub dt_max: f64,
    /// Blow-up is declared once `‖ψ‖` exceeds this multiple of `‖ψ(t_start)‖`.
    pub blowup_factor: f64,
    /// Record diagnostics every this many steps (the final state is always recorded).
    pub record_every: usize,
    pub sobolev_k: u32,
    /// Support of the initial data; measured from the data when absent.
    pub support: Option<Support>,
    /// `z` used for the recorded Majorana defect; the initial minimiser when absent.
    pub defect_z: Option<C64>,
    /// Seed for sampling the potential flags.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            t_start: 1.0,
            t_end: 2.0,
            cfl: 0.5,
            dt_max: 0.1,
            blowup_factor: 1e6,
            record_every: 1,
            sobolev_k: 2,
            support: None,
            defect_z: None,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_start >= 1.0 && self.t_start.is_finite()) {
            return Err(Error::invalid(
                "solver.t_start",
                format!("must be >= 1, got {}", self.t_start),
            ));
        }
        if !(self.t_end >= self.t_start && self.t_end.is_finite()) {
            return Err(Error::invalid(
                "solver.t_end",
                format!("must be >= t_start, got {}", self.t_end),
            ));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::invalid(
                "solver.cfl",
                format!("must lie in (0, 1), got {}", self.cfl),
            ));
        }
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(Error::invalid(
                "solver.dt_max",
                format!("must be positive, got {}", self.dt_max),
            ));
        }
        if !(self.blowup_factor > 1.0) {
            return Err(Error::invalid(
                "solver.blowup_factor",
                format!("must exceed 1, got {}", self.blowup_factor),
            ));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("solver.record_every", "must be at least 1"));
        }
        if self.sobolev_k > 6 {
            return Err(Error::invalid(
                "solver.sobolev_k",
                format!("must be <= 6, got {}", self.sobolev_k),
            ));
        }
        if let Some(z) = self.defect_z {
            if (z.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::invalid("solver.defect_z", "must have unit modulus"));
            }
        }
        Ok(())
    }
}

/// Prescribed source `f(·, t)` for Duhamel runs.
pub trait SourceProvider: Sync {
    /// Writes `f(·, t)` into `out` (component-major, `4 n^dim` values).
    fn sample(&self, t: f64, out: &mut [C64]);
}

impl<F: Fn(f64, &mut [C64]) + Sync> SourceProvider for F {
    fn sample(&self, t: f64, out: &mut [C64]) {
        self(t, out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupReason {
    NonFinite,
    NormThreshold,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupInfo {
    /// Last accepted time plus half the failing step.
    pub t_blowup: f64,
    pub last_finite_time: f64,
    pub reason: BlowupReason,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub cosmology: Cosmology,
    pub mass: C64,
    pub grid: Grid,
    pub t_start: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub dt_max: f64,
    pub sobolev_k: u32,
    pub nonlinearity: String,
    /// Right side has the `iγ⁰A` structure (energy/γ² identities apply).
    pub a_form: bool,
    /// `V* = V` (the `Im V` series is then identically zero).
    pub potential_hermitian: bool,
    /// `Vᵀγ² + γ²V = 0`.
    pub potential_gamma2: bool,
    pub sourced: bool,
    pub defect_z: C64,
    pub support: Support,
    pub steps: usize,
    pub blowup: Option<BlowupInfo>,
}

/// Time series of norms and invariants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub meta: RecordMeta,
    pub times: Vec<f64>,
    /// `E(t) = ‖ψ(t)‖²`.
    pub l2: Vec<f64>,
    /// `‖ψ(t)‖_k` with `k = meta.sobolev_k`.
    pub sobolev_k: Vec<f64>,
    pub xi_int: Vec<f64>,
    pub eta_int: Vec<f64>,
    pub gamma2: Vec<C64>,
    pub rho2_int: Vec<f64>,
    /// `∫ sqrt(ρ²) dx`.
    pub rho_int: Vec<f64>,
    /// `∫ ψ* Im(V) ψ dx`.
    pub im_v_int: Vec<f64>,
    /// `∫ |ψ - z γ² ψ̄|² dx` with `z = meta.defect_z`.
    pub defect: Vec<f64>,
    /// Mass outside the forward cone of the initial support.
    pub cone_leak: Vec<f64>,
    /// `‖f(t)‖_k` of the prescribed source (empty for unsourced runs).
    pub source_norm: Vec<f64>,
    pub snapshots: Vec<String>,
}

impl RunRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Checks that all present series match `times` in length and that times increase.
    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        let lens = [
            ("l2", self.l2.len()),
            ("sobolev_k", self.sobolev_k.len()),
            ("xi_int", self.xi_int.len()),
            ("eta_int", self.eta_int.len()),
            ("gamma2", self.gamma2.len()),
            ("rho2_int", self.rho2_int.len()),
            ("rho_int", self.rho_int.len()),
            ("im_v_int", self.im_v_int.len()),
            ("defect", self.defect.len()),
            ("cone_leak", self.cone_leak.len()),
        ];
        for (name, len) in lens {
            if len != n {
                return Err(Error::MissingSeries(name.to_string()));
            }
        }
        if !self.source_norm.is_empty() && self.source_norm.len() != n {
            return Err(Error::MissingSeries("source_norm".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "record.times",
                "must be strictly increasing",
            ));
        }
        Ok(())
    }
}

pub struct RunOutput {
    pub record: RunRecord,
    /// Last accepted state (the pre-blow-up state if blow-up was detected).
    pub field: SpinorField,
}

struct PotentialCache {
    envelope: Vec<f64>,
    matrix: Mat4C,
    im_matrix: Mat4C,
    time_power: f64,
}

/// RK4 integrator for a fixed model and grid.
pub struct Solver {
    model: Model,
    grid: Grid,
    kd: Vec<f64>,
    potential: Option<PotentialCache>,
}

impl Solver {
    pub fn new(model: Model, grid: Grid) -> Result<Self> {
        model.validate()?;
        let potential = if model.potential.is_zero() {
            None
        } else {
            let spec = &model.potential;
            let m = spec.matrix();
            let envelope = (0..grid.points())
                .map(|p| spec.envelope(&grid.coords(p), 1.0))
                .collect();
            Some(PotentialCache {
                envelope,
                matrix: m,
                im_matrix: (m - m.adjoint()).scale(C64::new(0.0, -0.5)),
                time_power: spec.time_power,
            })
        };
        Ok(Solver {
            kd: derivative_wavenumbers(grid.n, grid.box_length),
            model,
            grid,
            potential,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Linear solver for the same model (nonlinearity removed).
    pub fn linear(&self) -> Result<Solver> {
        Solver::new(self.model.linear(), self.grid)
    }

    /// Largest stable step at time `t` before the CFL factor: `h a(t)`.
    pub fn cfl_limit(&self, t: f64) -> f64 {
        self.grid.spacing() / self.model.cosmology.speed(t)
    }

    /// Step size `min(dt_max, cfl h a(t))` for a step starting at `t` in
    /// direction `sign`, using the smaller scale factor of the two endpoints.
    pub fn step_size(&self, t: f64, cfl: f64, dt_max: f64, sign: f64) -> f64 {
        let mut dt = dt_max.min(cfl * self.cfl_limit(t));
        let t_other = t + sign * dt;
        if t_other > 0.0 {
            dt = dt.min(cfl * self.cfl_limit(t_other));
        }
        dt
    }

    /// `dψ/dt` for the component-major state `psi` at time `t`.
    pub fn rhs_data(&self, psi: &[C64], t: f64, source: Option<&[C64]>) -> Vec<C64> {
        let g = &self.grid;
        let np = g.points();
        let dim = g.dim;
        let cosmo = &self.model.cosmology;

        let mut out = psi.to_vec();
        let pl = plans(g.n);
        out.par_chunks_mut(np).for_each(|c| pl.forward(dim, c));

        let speed = cosmo.speed(t);
        let kd = &self.kd;
        {
            let (a, rest) = out.split_at_mut(np);
            let (b, rest) = rest.split_at_mut(np);
            let (c, d) = rest.split_at_mut(np);
            (
                a.par_iter_mut(),
                b.par_iter_mut(),
                c.par_iter_mut(),
                d.par_iter_mut(),
            )
                .into_par_iter()
                .enumerate()
                .with_min_len(1024)
                .for_each(|(p, (v0, v1, v2, v3))| {
                    let idx = g.index(p);
                    let kx = kd[idx[0]];
                    let (ky, kz) = if dim == 3 {
                        (kd[idx[1]], kd[idx[2]])
                    } else {
                        (0.0, 0.0)
                    };
                    let v = [*v0, *v1, *v2, *v3];
                    // (Σ k_j αʲ) v with αʲ written out
                    let m = [
                        v[3] * C64::new(kx, -ky) + v[2] * kz,
                        v[2] * C64::new(kx, ky) - v[3] * kz,
                        v[1] * C64::new(kx, -ky) + v[0] * kz,
                        v[0] * C64::new(kx, ky) - v[1] * kz,
                    ];
                    let s = C64::new(0.0, -speed);
                    *v0 = s * m[0];
                    *v1 = s * m[1];
                    *v2 = s * m[2];
                    *v3 = s * m[3];
                });
        }
        out.par_chunks_mut(np).for_each(|c| pl.inverse(dim, c));

        let damp = -1.5 * cosmo.ell / t;
        let mt = self.model.mass / t;
        let upper = C64::new(damp, 0.0) - I * mt;
        let lower = C64::new(damp, 0.0) + I * mt;
        let nonlin = &self.model.nonlinearity;
        let has_nonlin = !matches!(nonlin, NonlinearitySpec::None);
        let pot = self
            .potential
            .as_ref()
            .map(|pc| (pc, t.powf(pc.time_power)));

        let (a, rest) = out.split_at_mut(np);
        let (b, rest) = rest.split_at_mut(np);
        let (c, d) = rest.split_at_mut(np);
        (
            a.par_iter_mut(),
            b.par_iter_mut(),
            c.par_iter_mut(),
            d.par_iter_mut(),
        )
            .into_par_iter()
            .enumerate()
            .with_min_len(1024)
            .for_each(|(p, (o0, o1, o2, o3))| {
                let s = [psi[p], psi[np + p], psi[2 * np + p], psi[3 * np + p]];
                let mut acc = [upper * s[0], upper * s[1], lower * s[2], lower * s[3]];
                if let Some((pc, tp)) = pot {
                    let vs = pc.matrix.apply(&s);
                    let e = I * (pc.envelope[p] * tp);
                    for q in 0..4 {
                        acc[q] += e * vs[q];
                    }
                }
                if has_nonlin {
                    let ns = nonlin.source_point(&s);
                    for q in 0..4 {
                        acc[q] += ns[q];
                    }
                }
                if let Some(src) = source {
                    for (q, a) in acc.iter_mut().enumerate() {
                        *a += src[q * np + p];
                    }
                }
                *o0 += acc[0];
                *o1 += acc[1];
                *o2 += acc[2];
                *o3 += acc[3];
            });
        out
    }

    /// `dψ/dt` as a field (no prescribed source).
    pub fn rhs(&self, f: &SpinorField) -> SpinorField {
        let data = self.rhs_data(f.data(), f.time, None);
        SpinorField::new(self.grid, data, f.time).expect("rhs preserves layout")
    }

    /// One classical RK4 step of size `dt` (negative for backward steps).
    pub fn step(
        &self,
        f: &mut SpinorField,
        dt: f64,
        source: Option<&dyn SourceProvider>,
    ) -> Result<()> {
        let t = f.time;
        let t_low = t.min(t + dt);
        if t_low <= 0.0 {
            return Err(Error::Domain {
                op: "step",
                reason: format!("step from {t} by {dt} leaves t > 0"),
            });
        }
        let limit = self.cfl_limit(t_low);
        if dt.abs() > limit * (1.0 + 1e-12) {
            return Err(Error::Cfl {
                dt: dt.abs(),
                limit,
            });
        }
        let n = f.data().len();
        let sample = |tt: f64| -> Option<Vec<C64>> {
            source.map(|s| {
                let mut buf = vec![C64::default(); n];
                s.sample(tt, &mut buf);
                buf
            })
        };
        let y = f.data();
        let axpy =
            |k: &[C64], h: f64| -> Vec<C64> { y.iter().zip(k).map(|(a, b)| a + b * h).collect() };

        let k1 = self.rhs_data(y, t, sample(t).as_deref());
        let s_half = sample(t + 0.5 * dt);
        let k2 = self.rhs_data(&axpy(&k1, 0.5 * dt), t + 0.5 * dt, s_half.as_deref());
        let k3 = self.rhs_data(&axpy(&k2, 0.5 * dt), t + 0.5 * dt, s_half.as_deref());
        let k4 = self.rhs_data(&axpy(&k3, dt), t + dt, sample(t + dt).as_deref());
        let w = dt / 6.0;
        f.data_mut()
            .par_iter_mut()
            .with_min_len(4096)
            .enumerate()
            .for_each(|(i, v)| *v += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * w);
        f.time = t + dt;
        Ok(())
    }

    /// Steps `f` to `t_target` (either direction) without recording.
    pub fn advance(
        &self,
        f: &mut SpinorField,
        t_target: f64,
        cfl: f64,
        dt_max: f64,
        source: Option<&dyn SourceProvider>,
    ) -> Result<()> {
        let sign = if t_target >= f.time { 1.0 } else { -1.0 };
        while (t_target - f.time) * sign > 1e-14 * t_target.abs() {
            let mut dt = self.step_size(f.time, cfl, dt_max, sign);
            let remaining = (t_target - f.time).abs();
            if dt >= remaining * (1.0 - 1e-12) {
                dt = remaining;
            }
            self.step(f, sign * dt, source)?;
            if !f.is_finite() {
                return Err(Error::Domain {
                    op: "advance",
                    reason: format!("non-finite state at t = {}", f.time),
                });
            }
        }
        f.time = t_target;
        Ok(())
    }

    /// Free or nonlinear evolution from `f0` (at `cfg.t_start`) to `cfg.t_end`.
    /// With no nonlinearity this realises the propagator `S(t_end, t_start)`.
    pub fn propagate(&self, f0: SpinorField, cfg: &SolverConfig) -> Result<RunOutput> {
        self.run(f0, cfg, None, &mut |_| Ok(()))
    }

    /// Evolution with a prescribed source `f(·, t)` added to the right side.
    pub fn duhamel_source(
        &self,
        f0: SpinorField,
        source: &dyn SourceProvider,
        cfg: &SolverConfig,
    ) -> Result<RunOutput> {
        self.run(f0, cfg, Some(source), &mut |_| Ok(()))
    }

    /// General driver; `observer` sees the field at every recorded time.
    pub fn run(
        &self,
        f0: SpinorField,
        cfg: &SolverConfig,
        source: Option<&dyn SourceProvider>,
        observer: &mut dyn FnMut(&SpinorField) -> Result<()>,
    ) -> Result<RunOutput> {
        cfg.validate()?;
        if f0.grid() != &self.grid {
            return Err(Error::invalid(
                "field.grid",
                "does not match the solver grid",
            ));
        }
        if (f0.time - cfg.t_start).abs() > 1e-12 * cfg.t_start {
            return Err(Error::invalid(
                "solver.t_start",
                format!(
                    "initial field is at t = {}, config starts at {}",
                    f0.time, cfg.t_start
                ),
            ));
        }
        self.model
            .potential
            .validate_on_grid(&self.grid, cfg.t_start, cfg.t_end, cfg.seed)?;

        let support = cfg.support.unwrap_or_else(|| {
            let center = f0.peak_location();
            Support {
                center,
                radius: f0.support_radius(&center, SUPPORT_FRACTION),
            }
        });
        self.check_cone_safety(&support, cfg.t_start, cfg.t_end)?;

        let cone = Cone::forward(support.center, cfg.t_start).with_base_radius(support.radius);
        let defect_z = cfg.defect_z.unwrap_or_else(|| f0.minimizing_z());
        let potential = &self.model.potential;
        let meta = RecordMeta {
            cosmology: self.model.cosmology,
            mass: self.model.mass,
            grid: self.grid,
            t_start: cfg.t_start,
            t_end: cfg.t_end,
            cfl: cfg.cfl,
            dt_max: cfg.dt_max,
            sobolev_k: cfg.sobolev_k,
            nonlinearity: self.model.nonlinearity.name().to_string(),
            a_form: self.model.nonlinearity.is_a_form(),
            potential_hermitian: self
                .potential
                .as_ref()
                .is_none_or(|pc| pc.im_matrix.max_abs() == 0.0),
            potential_gamma2: potential.is_zero() || {
                let m = potential.matrix();
                let g2 = gamma::basis().g2;
                (m.transpose() * g2 + g2 * m).max_abs() == 0.0
            },
            sourced: source.is_some(),
            defect_z,
            support,
            steps: 0,
            blowup: None,
        };
        let mut rec = RunRecord {
            meta,
            times: vec![],
            l2: vec![],
            sobolev_k: vec![],
            xi_int: vec![],
            eta_int: vec![],
            gamma2: vec![],
            rho2_int: vec![],
            rho_int: vec![],
            im_v_int: vec![],
            defect: vec![],
            cone_leak: vec![],
            source_norm: vec![],
            snapshots: vec![],
        };

        let mut f = f0;
        self.record(&mut rec, &f, &cone, source)?;
        observer(&f)?;
        let norm0 = f.l2_norm();
        let threshold = cfg.blowup_factor * norm0;
        let mut steps = 0usize;
        let mut last_recorded = true;
        while cfg.t_end - f.time > 1e-13 * cfg.t_end {
            let mut dt = self.step_size(f.time, cfg.cfl, cfg.dt_max, 1.0);
            let remaining = cfg.t_end - f.time;
            if dt >= remaining * (1.0 - 1e-12) {
                dt = remaining;
            }
            let prev = f.clone();
            self.step(&mut f, dt, source)?;
            steps += 1;
            let finite = f.is_finite();
            let norm = if finite { f.l2_norm() } else { f64::NAN };
            if !finite || (norm0 > 0.0 && norm > threshold) {
                rec.meta.blowup = Some(BlowupInfo {
                    t_blowup: prev.time + 0.5 * dt,
                    last_finite_time: prev.time,
                    reason: if finite {
                        BlowupReason::NormThreshold
                    } else {
                        BlowupReason::NonFinite
                    },
                });
                f = prev;
                break;
            }
            last_recorded = false;
            if steps.is_multiple_of(cfg.record_every) {
                self.record(&mut rec, &f, &cone, source)?;
                observer(&f)?;
                last_recorded = true;
            }
        }
        if !last_recorded {
            self.record(&mut rec, &f, &cone, source)?;
            observer(&f)?;
        }
        rec.meta.steps = steps;
        Ok(RunOutput {
            record: rec,
            field: f,
        })
    }

    /// Fails if the forward cone of `support` reaches `L/2 - 2h` before `t_end`.
    pub fn check_cone_safety(&self, support: &Support, t_start: f64, t_end: f64) -> Result<()> {
        let limit = 0.5 * self.grid.box_length - 2.0 * self.grid.spacing();
        let radius = self.model.cosmology.distance(t_start, t_end);
        if support.radius + radius >= limit {
            return Err(Error::ConeViolation {
                t: t_end,
                support: support.radius,
                radius,
                limit,
            });
        }
        Ok(())
    }

    fn record(
        &self,
        rec: &mut RunRecord,
        f: &SpinorField,
        cone: &Cone,
        source: Option<&dyn SourceProvider>,
    ) -> Result<()> {
        let m = f.moments();
        rec.times.push(f.time);
        rec.l2.push(m.l2);
        rec.sobolev_k.push(f.sobolev_norm(rec.meta.sobolev_k)?);
        rec.xi_int.push(m.xi);
        rec.eta_int.push(m.eta);
        rec.gamma2.push(m.gamma2);
        rec.rho2_int.push(m.rho2);
        rec.rho_int.push(m.rho);
        rec.im_v_int.push(self.im_v_integral(f));
        rec.defect.push(f.majorana_defect(rec.meta.defect_z)?);
        rec.cone_leak
            .push(f.cone_mass(cone, &self.model.cosmology)?);
        if let Some(s) = source {
            let mut buf = vec![C64::default(); f.data().len()];
            s.sample(f.time, &mut buf);
            let sf = SpinorField::new(self.grid, buf, f.time)?;
            rec.source_norm.push(sf.sobolev_norm(rec.meta.sobolev_k)?);
        }
        Ok(())
    }

    /// `∫ ψ* Im(V) ψ dx`.
    pub fn im_v_integral(&self, f: &SpinorField) -> f64 {
        let Some(pc) = &self.potential else {
            return 0.0;
        };
        if pc.im_matrix.max_abs() == 0.0 {
            return 0.0;
        }
        let tp = f.time.powf(pc.time_power);
        let point = |p: usize| {
            let s = f.at(p);
            let w = pc.im_matrix.apply(&s);
            pc.envelope[p] * tp * (0..4).map(|q| (s[q].conj() * w[q]).re).sum::<f64>()
        };
        self.grid.cell_volume() * chunked_sum(self.grid.points(), 0.0, point, |a, b| a + b)
    }
}

/// Exact solution of the spatially homogeneous linear system from `s` to `t`:
/// `(t/s)^(-3ℓ/2) diag((t/s)^(-im) I₂, (t/s)^(im) I₂) ψ(s)`.
pub fn homogeneous_solution(c: &Cosmology, m: C64, psi: &Spinor, s: f64, t: f64) -> Spinor {
    let r = t / s;
    let damp = r.powf(-1.5 * c.ell);
    let lr = r.ln();
    let up = (-I * m * lr).exp() * damp;
    let down = (I * m * lr).exp() * damp;
    [psi[0] * up, psi[1] * up, psi[2] * down, psi[3] * down]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::InitialData;

    fn line(n: usize, l: f64) -> Grid {
        Grid::new(1, n, l).unwrap()
    }

    #[test]
    fn rhs_of_constant_field() {
        let g = line(16, 4.0);
        let c = Cosmology::new(2.0 / 3.0, 1.0).unwrap();
        let m = C64::new(0.7, 0.2);
        let s = [
            C64::new(1.0, 0.5),
            C64::new(-0.3, 0.0),
            C64::new(0.0, 2.0),
            C64::new(0.4, -0.4),
        ];
        let t = 1.7;
        let f = SpinorField::from_fn(g, t, |_| s);
        let solver = Solver::new(Model::free(c, m), g).unwrap();
        let r = solver.rhs(&f);
        let g0s = gamma::basis().g0.apply(&s);
        for q in 0..4 {
            let expect = -s[q] * (1.5 * c.ell / t) - I * m / t * g0s[q];
            assert!((r.at(3)[q] - expect).norm() < 1e-14);
        }
        let z = solver.rhs(&SpinorField::zeros(g, t));
        assert_eq!(z.l2_norm(), 0.0);
    }

    #[test]
    fn massless_minkowski_mode_has_frequencies_plus_minus_q() {
        let l = 2.0 * std::f64::consts::PI;
        let g = line(32, l);
        let c = Cosmology::new(0.0, 1.0).unwrap();
        let solver = Solver::new(Model::free(c, C64::default()), g).unwrap();
        let q = 3.0;
        // eigenvectors of α¹ with eigenvalues ±1
        let plus = [
            C64::new(1.0, 0.0),
            C64::default(),
            C64::default(),
            C64::new(1.0, 0.0),
        ];
        let minus = [
            C64::new(1.0, 0.0),
            C64::default(),
            C64::default(),
            C64::new(-1.0, 0.0),
        ];
        for (v, sign) in [(plus, 1.0), (minus, -1.0)] {
            let f = SpinorField::from_fn(g, 1.0, |x| {
                let e = (I * q * x[0]).exp();
                v.map(|c| c * e)
            });
            let r = solver.rhs(&f);
            // rhs = -iω ψ with ω = ±q
            let expect = f.scaled(-I * q * sign);
            assert!(r.axpy(C64::new(-1.0, 0.0), &expect).l2_norm() < 1e-12);
        }
    }

    #[test]
    fn step_matches_homogeneous_solution() {
        let g = line(8, 1.0);
        let c = Cosmology::new(2.0 / 3.0, 1.0).unwrap();
        let m = C64::new(1.0, 0.5);
        let s = [
            C64::new(1.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(0.5, 0.5),
            C64::new(-1.0, 0.0),
        ];
        let solver = Solver::new(Model::free(c, m), g).unwrap();
        let err = |dt: f64| {
            let mut f = SpinorField::from_fn(g, 1.0, |_| s);
            f = {
                let mut f2 = f.clone();
                let steps = (0.5 / dt).round() as usize;
                for _ in 0..steps {
                    solver.step(&mut f2, dt, None).unwrap();
                }
                f2
            };
            let exact = homogeneous_solution(&c, m, &s, 1.0, f.time);
            (0..4)
                .map(|q| (f.at(0)[q] - exact[q]).norm())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.05), err(0.025));
        let order = (e1 / e2).log2();
        assert!((order - 4.0).abs() < 0.2, "order {order}");

        let mut f = SpinorField::from_fn(g, 1.0, |_| s);
        let before = f.clone();
        solver.step(&mut f, 1e-14, None).unwrap();
        assert!(f.axpy(C64::new(-1.0, 0.0), &before).l2_norm() < 1e-12);
    }

    #[test]
    fn step_rejects_cfl_violation() {
        let g = line(16, 1.0);
        let solver = Solver::new(
            Model::free(Cosmology::new(0.0, 1.0).unwrap(), C64::default()),
            g,
        )
        .unwrap();
        let mut f = SpinorField::zeros(g, 1.0);
        assert!(matches!(
            solver.step(&mut f, 0.1, None),
            Err(Error::Cfl { .. })
        ));
    }

    #[test]
    fn config_validation_names_fields() {
        let bad = SolverConfig {
            cfl: 1.5,
            ..SolverConfig::default()
        };
        let msg = bad.validate().unwrap_err().to_string();
        assert!(msg.contains("solver.cfl"), "{msg}");
        let bad = SolverConfig {
            t_start: 0.5,
            ..SolverConfig::default()
        };
        assert!(bad
            .validate()
            .unwrap_err()
            .to_string()
            .contains("solver.t_start"));
    }

    #[test]
    fn zero_data_gives_zero_record() {
        let g = line(32, 20.0);
        let solver = Solver::new(
            Model::free(Cosmology::new(0.5, 1.0).unwrap(), C64::new(1.0, 0.0)),
            g,
        )
        .unwrap();
        let cfg = SolverConfig {
            t_end: 1.5,
            ..SolverConfig::default()
        };
        let out = solver.propagate(SpinorField::zeros(g, 1.0), &cfg).unwrap();
        assert!(out.record.l2.iter().all(|&v| v == 0.0));
        assert!(out.record.meta.blowup.is_none());
        out.record.validate().unwrap();
    }

    #[test]
    fn cone_precheck_refuses_long_runs() {
        let g = line(64, 10.0);
        let solver = Solver::new(
            Model::free(Cosmology::new(0.0, 1.0).unwrap(), C64::default()),
            g,
        )
        .unwrap();
        let f0 = InitialData::gaussian(1.0, 0.5, g.center())
            .sample(&g, 1.0)
            .unwrap();
        let cfg = SolverConfig {
            t_end: 6.0,
            ..SolverConfig::default()
        };
        assert!(matches!(
            solver.propagate(f0, &cfg),
            Err(Error::ConeViolation { .. })
        ));
    }

    #[test]
    fn propagator_composes() {
        let g = line(64, 24.0);
        let c = Cosmology::new(0.5, 1.0).unwrap();
        let solver = Solver::new(Model::free(c, C64::new(0.8, 0.1)), g).unwrap();
        let f0 = InitialData::gaussian(1.0, 1.0, g.center())
            .with_seed(4)
            .sample(&g, 1.0)
            .unwrap();
        let mut direct = f0.clone();
        solver.advance(&mut direct, 3.0, 0.2, 0.01, None).unwrap();
        let mut two = f0.clone();
        solver.advance(&mut two, 1.7, 0.2, 0.01, None).unwrap();
        solver.advance(&mut two, 3.0, 0.2, 0.01, None).unwrap();
        let diff = direct.axpy(C64::new(-1.0, 0.0), &two).l2_norm();
        assert!(diff < 1e-8 * direct.l2_norm(), "{diff}");
    }
}
