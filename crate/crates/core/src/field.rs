//! Four-spinor fields on a periodic grid.
//!
//! Storage is component-major: component `c` occupies
//! `data[c * N..(c + 1) * N]` with `N = n^dim` and point index
//! `p = i1 + n * (i2 + n * i3)`. Grid coordinates are `x_j = i_j * h`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gamma::{self, Spinor};
use crate::spacetime::{Cone, ConeDirection, Cosmology};
use crate::spectral::{self, plans};
use crate::{Error, Result, C64};

const PAR_MIN: usize = 4096;

/// Sum of `f(0..len)` with a fixed chunking and an ordered final combine, so
/// the result does not depend on thread scheduling.
pub(crate) fn chunked_sum<T, F, A>(len: usize, zero: T, f: F, add: A) -> T
where
    T: Send + Sync + Copy,
    F: Fn(usize) -> T + Sync,
    A: Fn(T, T) -> T + Sync,
{
    let partial: Vec<T> = (0..len.div_ceil(PAR_MIN))
        .into_par_iter()
        .map(|c| (c * PAR_MIN..((c + 1) * PAR_MIN).min(len)).fold(zero, |acc, p| add(acc, f(p))))
        .collect();
    partial.into_iter().fold(zero, &add)
}

fn add_f64(a: f64, b: f64) -> f64 {
    a + b
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub n: usize,
    pub box_length: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, box_length: f64) -> Result<Self> {
        if dim != 1 && dim != 3 {
            return Err(Error::invalid(
                "grid.dim",
                format!("must be 1 or 3, got {dim}"),
            ));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::invalid(
                "grid.n",
                format!("must be a power of two >= 8, got {n}"),
            ));
        }
        if !(box_length > 0.0 && box_length.is_finite()) {
            return Err(Error::invalid(
                "grid.box_length",
                format!("must be positive, got {box_length}"),
            ));
        }
        Ok(Grid { dim, n, box_length })
    }

    /// Grid spacing `h = L / n`.
    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    /// Number of grid points `n^dim`.
    pub fn points(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Quadrature weight `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn index(&self, p: usize) -> [usize; 3] {
        let n = self.n;
        match self.dim {
            1 => [p, 0, 0],
            _ => [p % n, (p / n) % n, p / (n * n)],
        }
    }

    pub fn coords(&self, p: usize) -> [f64; 3] {
        let h = self.spacing();
        let i = self.index(p);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = i[a] as f64 * h;
        }
        x
    }

    /// Centre of the box in every active axis.
    pub fn center(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        for v in c.iter_mut().take(self.dim) {
            *v = 0.5 * self.box_length;
        }
        c
    }

    /// Periodic (minimum-image) distance over the active axes.
    pub fn distance(&self, x: &[f64; 3], y: &[f64; 3]) -> f64 {
        let l = self.box_length;
        (0..self.dim)
            .map(|a| {
                let d = (x[a] - y[a]).rem_euclid(l);
                d.min(l - d).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Angular wavenumbers along one axis in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        spectral::wavenumbers(self.n, self.box_length)
    }

    /// `|ξ|²` for every Fourier index, using the full symbol (Nyquist kept).
    pub fn wavenumber_sq(&self) -> Vec<f64> {
        let k = self.wavenumbers();
        (0..self.points())
            .map(|p| self.index(p)[..self.dim].iter().map(|&i| k[i] * k[i]).sum())
            .collect()
    }
}

/// `ψ(·, t)` sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinorField {
    grid: Grid,
    data: Vec<C64>,
    pub time: f64,
}

/// Pointwise bilinear densities.
#[derive(Clone, Debug, PartialEq)]
pub struct BilinearDensities {
    /// `ψ*γ⁰ψ`.
    pub xi: Vec<f64>,
    /// `2Im(ψ1ψ̄3) + 2Im(ψ2ψ̄4)`; `ψ*γ⁰γ⁵ψ = i·η`.
    pub eta: Vec<f64>,
    pub rho2: Vec<f64>,
    pub abs2: Vec<f64>,
}

/// Grid integrals of the densities gathered in one pass.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub l2: f64,
    pub xi: f64,
    pub eta: f64,
    pub rho2: f64,
    /// `∫ sqrt(ρ²)`.
    pub rho: f64,
    pub gamma2: C64,
}

impl std::ops::Add for Moments {
    type Output = Moments;
    fn add(self, o: Moments) -> Moments {
        Moments {
            l2: self.l2 + o.l2,
            xi: self.xi + o.xi,
            eta: self.eta + o.eta,
            rho2: self.rho2 + o.rho2,
            rho: self.rho + o.rho,
            gamma2: self.gamma2 + o.gamma2,
        }
    }
}

/// `(ξ, η)` of a single spinor.
#[inline]
pub fn xi_eta(s: &Spinor) -> (f64, f64) {
    let xi = s[0].norm_sqr() + s[1].norm_sqr() - s[2].norm_sqr() - s[3].norm_sqr();
    let eta = 2.0 * (s[0] * s[2].conj()).im + 2.0 * (s[1] * s[3].conj()).im;
    (xi, eta)
}

impl SpinorField {
    pub fn new(grid: Grid, data: Vec<C64>, time: f64) -> Result<Self> {
        if data.len() != 4 * grid.points() {
            return Err(Error::invalid(
                "field.data",
                format!("expected {} values, got {}", 4 * grid.points(), data.len()),
            ));
        }
        if !(time > 0.0) {
            return Err(Error::invalid(
                "field.time",
                format!("must be positive, got {time}"),
            ));
        }
        Ok(SpinorField { grid, data, time })
    }

    pub fn zeros(grid: Grid, time: f64) -> Self {
        SpinorField {
            grid,
            data: vec![C64::default(); 4 * grid.points()],
            time,
        }
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn(grid: Grid, time: f64, f: impl Fn([f64; 3]) -> Spinor + Sync) -> Self {
        let np = grid.points();
        let values: Vec<Spinor> = (0..np).into_par_iter().map(|p| f(grid.coords(p))).collect();
        let mut out = SpinorField::zeros(grid, time);
        for (p, s) in values.iter().enumerate() {
            out.set(p, s);
        }
        out
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn component(&self, c: usize) -> &[C64] {
        let np = self.grid.points();
        &self.data[c * np..(c + 1) * np]
    }

    #[inline]
    pub fn at(&self, p: usize) -> Spinor {
        spinor_at(&self.data, self.grid.points(), p)
    }

    #[inline]
    pub fn set(&mut self, p: usize, s: &Spinor) {
        let np = self.grid.points();
        for (c, v) in s.iter().enumerate() {
            self.data[c * np + p] = *v;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .par_iter()
            .with_min_len(PAR_MIN)
            .all(|v| v.is_finite())
    }

    /// Applies `f` pointwise, producing a new field at the same time.
    pub fn map_points(&self, f: impl Fn(&Spinor) -> Spinor + Sync) -> SpinorField {
        let np = self.grid.points();
        let values: Vec<Spinor> = (0..np)
            .into_par_iter()
            .with_min_len(PAR_MIN)
            .map(|p| f(&self.at(p)))
            .collect();
        let mut out = SpinorField::zeros(self.grid, self.time);
        for (p, s) in values.iter().enumerate() {
            out.set(p, s);
        }
        out
    }

    pub fn scaled(&self, s: C64) -> SpinorField {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: C64, other: &SpinorField) -> SpinorField {
        let mut out = self.clone();
        out.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += s * b);
        out
    }

    /// `h^dim Σ |ψ|²`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.grid.cell_volume()
            * chunked_sum(self.data.len(), 0.0, |i| self.data[i].norm_sqr(), add_f64)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Discrete inner product `h^dim Σ ψ̄ φ`.
    pub fn inner(&self, other: &SpinorField) -> C64 {
        let sum = chunked_sum(
            self.data.len(),
            C64::default(),
            |i| self.data[i].conj() * other.data[i],
            |a, b| a + b,
        );
        sum * self.grid.cell_volume()
    }

    /// `H(k)` norm with symbol `(1 + |ξ|²)^k`:
    /// `sqrt(h^dim / N · Σ_ξ (1+|ξ|²)^k |ψ̂(ξ)|²)` with an unnormalised DFT.
    pub fn sobolev_norm(&self, k: u32) -> Result<f64> {
        if k > 6 {
            return Err(Error::invalid(
                "sobolev k",
                format!("must be <= 6, got {k}"),
            ));
        }
        if k == 0 {
            return Ok(self.l2_norm());
        }
        let np = self.grid.points();
        let weights: Vec<f64> = self
            .grid
            .wavenumber_sq()
            .iter()
            .map(|q| (1.0 + q).powi(k as i32))
            .collect();
        let pl = plans(self.grid.n);
        let dim = self.grid.dim;
        let per_component: Vec<f64> = self
            .data
            .par_chunks(np)
            .map(|comp| {
                let mut buf = comp.to_vec();
                pl.forward(dim, &mut buf);
                buf.iter()
                    .zip(&weights)
                    .map(|(v, w)| w * v.norm_sqr())
                    .sum::<f64>()
            })
            .collect();
        let total: f64 = per_component.iter().sum();
        Ok((self.grid.cell_volume() / np as f64 * total).sqrt())
    }

    /// `∂_axis ψ` (axis in `1..=dim`) by multiplication with `iξ` in Fourier space.
    pub fn spectral_derivative(&self, axis: usize) -> Result<SpinorField> {
        if axis == 0 || axis > self.grid.dim {
            return Err(Error::invalid(
                "axis",
                format!("must lie in 1..={}, got {axis}", self.grid.dim),
            ));
        }
        let np = self.grid.points();
        let k = spectral::derivative_wavenumbers(self.grid.n, self.grid.box_length);
        let pl = plans(self.grid.n);
        let grid = self.grid;
        let mut out = self.clone();
        out.data.par_chunks_mut(np).for_each(|buf| {
            pl.forward(grid.dim, buf);
            for (p, v) in buf.iter_mut().enumerate() {
                *v *= C64::new(0.0, k[grid.index(p)[axis - 1]]);
            }
            pl.inverse(grid.dim, buf);
        });
        Ok(out)
    }

    pub fn bilinear_densities(&self) -> BilinearDensities {
        let np = self.grid.points();
        let rows: Vec<(f64, f64, f64)> = (0..np)
            .into_par_iter()
            .with_min_len(PAR_MIN)
            .map(|p| {
                let s = self.at(p);
                let (xi, eta) = xi_eta(&s);
                (xi, eta, gamma::norm_sq(&s))
            })
            .collect();
        let xi: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let eta: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let rho2 = xi.iter().zip(&eta).map(|(a, b)| a * a + b * b).collect();
        let abs2 = rows.iter().map(|r| r.2).collect();
        BilinearDensities {
            xi,
            eta,
            rho2,
            abs2,
        }
    }

    /// Grid integrals of `|ψ|²`, `ξ`, `η`, `ρ²`, `ρ` and `ψᵀγ²ψ`.
    pub fn moments(&self) -> Moments {
        let np = self.grid.points();
        let point = |p| {
            let s = self.at(p);
            let (xi, eta) = xi_eta(&s);
            let rho2 = xi * xi + eta * eta;
            Moments {
                l2: gamma::norm_sq(&s),
                xi,
                eta,
                rho2,
                rho: rho2.sqrt(),
                gamma2: gamma::gamma2_form(&s),
            }
        };
        let sum = chunked_sum(np, Moments::default(), point, |a, b| a + b);
        let w = self.grid.cell_volume();
        Moments {
            l2: w * sum.l2,
            xi: w * sum.xi,
            eta: w * sum.eta,
            rho2: w * sum.rho2,
            rho: w * sum.rho,
            gamma2: sum.gamma2 * w,
        }
    }

    /// `∫ ψᵀ γ² ψ dx` (transpose, not adjoint).
    pub fn gamma2_bilinear(&self) -> C64 {
        self.moments().gamma2
    }

    /// `∫ |ψ − z γ² ψ̄|² dx` evaluated from the definition.
    pub fn majorana_defect(&self, z: C64) -> Result<f64> {
        if (z.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "z",
                format!("must have unit modulus, got |z| = {}", z.norm()),
            ));
        }
        let np = self.grid.points();
        let point = |p| {
            let s = self.at(p);
            let g = gamma::gamma2_conj(&s);
            (0..4).map(|c| (s[c] - z * g[c]).norm_sqr()).sum::<f64>()
        };
        let sum = chunked_sum(np, 0.0, point, add_f64);
        Ok(self.grid.cell_volume() * sum)
    }

    /// Unit `z` minimising [`Self::majorana_defect`]: `-B/|B|` with `B = ∫ψᵀγ²ψ`, or 1 if `B = 0`.
    pub fn minimizing_z(&self) -> C64 {
        let b = self.gamma2_bilinear();
        if b.norm() > 0.0 {
            -b / b.norm()
        } else {
            C64::new(1.0, 0.0)
        }
    }

    /// `L²` mass outside the cone section at `self.time`.
    pub fn cone_mass(&self, cone: &Cone, c: &Cosmology) -> Result<f64> {
        let consistent = match cone.direction {
            ConeDirection::Forward => self.time >= cone.t0,
            ConeDirection::Backward => self.time <= cone.t0,
        };
        if !consistent {
            return Err(Error::Domain {
                op: "cone_mass",
                reason: format!(
                    "field time {} inconsistent with cone apex t0 = {}",
                    self.time, cone.t0
                ),
            });
        }
        let r = cone.radius(c, self.time)?;
        Ok(self.mass_outside(&cone.x0, r))
    }

    /// `∫_{dist(x, center) > r} |ψ|² dx`.
    pub fn mass_outside(&self, center: &[f64; 3], r: f64) -> f64 {
        let np = self.grid.points();
        let point = |p| {
            if self.grid.distance(&self.grid.coords(p), center) > r {
                gamma::norm_sq(&self.at(p))
            } else {
                0.0
            }
        };
        let sum = chunked_sum(np, 0.0, point, add_f64);
        self.grid.cell_volume() * sum
    }

    /// Smallest radius about `center` enclosing `fraction` of the `L²` mass.
    pub fn support_radius(&self, center: &[f64; 3], fraction: f64) -> f64 {
        let np = self.grid.points();
        let mut pts: Vec<(f64, f64)> = (0..np)
            .map(|p| {
                (
                    self.grid.distance(&self.grid.coords(p), center),
                    gamma::norm_sq(&self.at(p)),
                )
            })
            .collect();
        let total: f64 = pts.iter().map(|q| q.1).sum();
        if total == 0.0 {
            return 0.0;
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0.0;
        for (d, m) in pts {
            acc += m;
            if acc >= fraction * total {
                return d;
            }
        }
        f64::INFINITY
    }

    /// Grid point carrying the largest `|ψ|²`.
    pub fn peak_location(&self) -> [f64; 3] {
        let np = self.grid.points();
        let best = (0..np)
            .map(|p| (p, gamma::norm_sq(&self.at(p))))
            .fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
        self.grid.coords(best.0)
    }
}

#[inline]
pub(crate) fn spinor_at(data: &[C64], np: usize, p: usize) -> Spinor {
    [data[p], data[np + p], data[2 * np + p], data[3 * np + p]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const ONE: C64 = C64::new(1.0, 0.0);
    const ZERO: C64 = C64::new(0.0, 0.0);
    const I: C64 = C64::new(0.0, 1.0);

    fn line(n: usize, l: f64) -> Grid {
        Grid::new(1, n, l).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(2, 16, 1.0).is_err());
        assert!(Grid::new(1, 12, 1.0).is_err());
        assert!(Grid::new(1, 4, 1.0).is_err());
        assert!(Grid::new(3, 8, 0.0).is_err());
        assert_eq!(Grid::new(3, 8, 2.0).unwrap().points(), 512);
    }

    #[test]
    fn l2_examples() {
        let g = line(64, 2.0 * PI);
        let c = SpinorField::from_fn(g, 1.0, |_| [ONE, ZERO, ZERO, ZERO]);
        assert_relative_eq!(c.l2_norm_sq(), 2.0 * PI, epsilon = 1e-12);
        assert_eq!(SpinorField::zeros(g, 1.0).l2_norm_sq(), 0.0);
        let w = SpinorField::from_fn(g, 1.0, |x| [ZERO, (I * x[0]).exp(), ZERO, ZERO]);
        assert_relative_eq!(w.l2_norm_sq(), 2.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn sobolev_single_mode_matches_closed_form() {
        for (dim, n) in [(1usize, 32usize), (3, 8)] {
            let l = 3.0;
            let g = Grid::new(dim, n, l).unwrap();
            let q = [2.0 * 2.0 * PI / l, -2.0 * PI / l, 3.0 * 2.0 * PI / l];
            let v = [
                C64::new(0.5, 0.2),
                C64::new(-1.0, 0.0),
                ZERO,
                C64::new(0.0, 0.3),
            ];
            let f = SpinorField::from_fn(g, 1.0, |x| {
                let ph: f64 = (0..dim).map(|a| q[a] * x[a]).sum();
                let e = (I * ph).exp();
                v.map(|c| c * e)
            });
            let q2: f64 = q[..dim].iter().map(|a| a * a).sum();
            let vn: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            for k in 0..=4 {
                let expect = (1.0 + q2).powi(k as i32).sqrt() * vn * l.powf(dim as f64 / 2.0);
                assert_relative_eq!(f.sobolev_norm(k).unwrap(), expect, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn sobolev_matches_direct_dft_oracle() {
        let g = line(16, 5.0);
        let f = SpinorField::from_fn(g, 1.0, |x| {
            let a = (-(x[0] - 2.5).powi(2)).exp();
            [
                C64::new(a, 0.1 * a),
                C64::new(0.0, a * x[0]),
                ZERO,
                C64::new(a * a, 0.0),
            ]
        });
        let n = g.n;
        let k = g.wavenumbers();
        let mut total = 0.0;
        for c in 0..4 {
            let comp = f.component(c);
            for (j, kj) in k.iter().enumerate() {
                let hat: C64 = (0..n)
                    .map(|p| comp[p] * (-I * 2.0 * PI * (j * p) as f64 / n as f64).exp())
                    .sum();
                total += (1.0 + kj * kj).powi(3) * hat.norm_sqr();
            }
        }
        let expect = (g.cell_volume() / n as f64 * total).sqrt();
        assert_relative_eq!(f.sobolev_norm(3).unwrap(), expect, max_relative = 1e-12);
        assert!(f.sobolev_norm(7).is_err());
    }

    #[test]
    fn derivative_of_sine() {
        let g = line(64, 2.0 * PI);
        let v = [ONE, C64::new(0.0, 2.0), ZERO, C64::new(-1.0, 1.0)];
        let f = SpinorField::from_fn(g, 1.0, |x| v.map(|c| c * x[0].sin()));
        let d = f.spectral_derivative(1).unwrap();
        let expect = SpinorField::from_fn(g, 1.0, |x| v.map(|c| c * x[0].cos()));
        let err = d
            .data()
            .iter()
            .zip(expect.data())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "max error {err}");

        let c = SpinorField::from_fn(g, 1.0, |_| v);
        assert!(c.spectral_derivative(1).unwrap().l2_norm() < 1e-13);
        assert!(f.spectral_derivative(2).is_err());
        assert!(f.spectral_derivative(0).is_err());
    }

    #[test]
    fn mixed_derivatives_commute_in_3d() {
        let g = Grid::new(3, 8, 2.0 * PI).unwrap();
        let f = SpinorField::from_fn(g, 1.0, |x| {
            let a = (x[0].sin() * (2.0 * x[1]).cos() + x[2].cos()).exp();
            [
                C64::new(a, 0.0),
                C64::new(0.0, a),
                ZERO,
                C64::new(a.sqrt(), 1.0),
            ]
        });
        let d12 = f
            .spectral_derivative(1)
            .unwrap()
            .spectral_derivative(2)
            .unwrap();
        let d21 = f
            .spectral_derivative(2)
            .unwrap()
            .spectral_derivative(1)
            .unwrap();
        let err = d12.axpy(-ONE, &d21).l2_norm();
        assert!(err < 1e-11 * d12.l2_norm().max(1.0));
    }

    #[test]
    fn bilinear_examples() {
        let g = line(8, 1.0);
        let cases = [
            ([ONE, ZERO, ONE, ZERO], (0.0, 0.0, 0.0)),
            ([ONE, ZERO, ZERO, ZERO], (1.0, 0.0, 1.0)),
            ([ONE, ZERO, I, ZERO], (0.0, -2.0, 4.0)),
        ];
        for (s, (xi, eta, rho2)) in cases {
            let b = SpinorField::from_fn(g, 1.0, |_| s).bilinear_densities();
            assert_relative_eq!(b.xi[3], xi);
            assert_relative_eq!(b.eta[3], eta);
            assert_relative_eq!(b.rho2[3], rho2);
        }
    }

    #[test]
    fn gamma2_examples() {
        let g = line(16, 2.0 * PI);
        let f = SpinorField::from_fn(g, 1.0, |_| [ONE, ZERO, ZERO, ZERO]);
        assert_eq!(f.gamma2_bilinear(), ZERO);
        assert_eq!(SpinorField::zeros(g, 1.0).gamma2_bilinear(), ZERO);
        let h = SpinorField::from_fn(g, 1.0, |x| {
            [C64::new(x[0].cos(), 0.2), I, C64::new(0.5, x[0]), ONE]
        });
        let c = C64::new(0.7, -1.3);
        let lhs = h.scaled(c).gamma2_bilinear();
        let rhs = h.gamma2_bilinear() * c * c;
        assert!((lhs - rhs).norm() < 1e-12 * rhs.norm());
    }

    #[test]
    fn majorana_defect_identity_and_minimum() {
        let g = line(16, 2.0 * PI);
        let h = SpinorField::from_fn(g, 1.0, |x| {
            [C64::new(x[0].cos(), 0.2), I, C64::new(0.5, x[0]), ONE]
        });
        for th in [0.0, 1.0, 2.5, -2.0] {
            let z = C64::from_polar(1.0, th);
            let direct = h.majorana_defect(z).unwrap();
            let ident = 2.0 * h.l2_norm_sq() + 2.0 * (z.conj() * h.gamma2_bilinear()).re;
            assert_relative_eq!(direct, ident, max_relative = 1e-10);
        }
        assert!(h.majorana_defect(C64::new(2.0, 0.0)).is_err());
        assert_eq!(
            SpinorField::zeros(g, 1.0).majorana_defect(ONE).unwrap(),
            0.0
        );

        // Majorana-form spinor (g, 0, 0, -i z ḡ) reaches zero defect at its z
        let z = C64::from_polar(1.0, 0.7);
        let m = SpinorField::from_fn(g, 1.0, |x| {
            let a = C64::new(1.0 + 0.3 * x[0].sin(), 0.4);
            [a, ZERO, ZERO, -I * z * a.conj()]
        });
        assert!(m.majorana_defect(z).unwrap() < 1e-12);
        assert!((m.minimizing_z() - z).norm() < 1e-12);

        // the (1,0,1,0) pair has zero ρ² yet zero γ²-form, so its defect is 2E for every z
        let pair = SpinorField::from_fn(g, 1.0, |_| [ONE, ZERO, ONE, ZERO]);
        let e = pair.l2_norm_sq();
        for k in 0..16 {
            let z = C64::from_polar(1.0, 2.0 * PI * k as f64 / 16.0);
            assert_relative_eq!(
                pair.majorana_defect(z).unwrap(),
                2.0 * e,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn cone_mass_examples() {
        let g = line(64, 8.0);
        let c = Cosmology::new(0.0, 1.0).unwrap();
        let center = g.center();
        assert_eq!(
            SpinorField::zeros(g, 2.0)
                .cone_mass(&Cone::forward(center, 1.0), &c)
                .unwrap(),
            0.0
        );

        let bump = SpinorField::from_fn(g, 2.0, |x| {
            let r = (x[0] - 4.0).abs();
            let a = if r < 0.5 { 1.0 } else { 0.0 };
            [C64::new(a, 0.0), ZERO, ZERO, ZERO]
        });
        let cone = Cone::forward(center, 1.0).with_base_radius(0.5);
        assert_eq!(bump.cone_mass(&cone, &c).unwrap(), 0.0);

        // uniform field, section radius 2 covers half of the length-8 box
        let uni = SpinorField::from_fn(g, 2.0, |_| [ONE, ZERO, ZERO, ZERO]);
        let cone = Cone::forward(center, 1.0).with_base_radius(1.0);
        let outside = uni.cone_mass(&cone, &c).unwrap();
        let counted = (0..64)
            .filter(|&p| (p as f64 * 0.125 - 4.0).abs() > 2.0)
            .count() as f64
            * 0.125;
        assert_relative_eq!(outside, counted, epsilon = 1e-12);
        assert!((outside - 0.5 * uni.l2_norm_sq()).abs() <= 2.0 * 0.125);
        assert!(uni.cone_mass(&Cone::forward(center, 3.0), &c).is_err());
    }

    #[test]
    fn support_radius_of_box() {
        let g = line(128, 16.0);
        let f = SpinorField::from_fn(g, 1.0, |x| {
            let a = if (x[0] - 8.0).abs() <= 2.0 { 1.0 } else { 0.0 };
            [C64::new(a, 0.0), ZERO, ZERO, ZERO]
        });
        assert_relative_eq!(f.support_radius(&g.center(), 1.0), 2.0);
        assert_eq!(f.peak_location()[0], 6.0);
    }
}
