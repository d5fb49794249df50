//! Power-law FLRW background `a(t) = a0 t^ell`, conformal-type time `phi`,
//! travel distance and null cones.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Below this distance from 1, `ell` is treated as exactly 1 (logarithmic `phi`).
pub const ELL_ONE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cosmology {
    pub ell: f64,
    pub a0: f64,
}

fn check_time(op: &'static str, t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            op,
            reason: format!("time must be positive and finite, got {t}"),
        })
    }
}

impl Cosmology {
    pub fn new(ell: f64, a0: f64) -> Result<Self> {
        if !ell.is_finite() {
            return Err(Error::invalid("cosmology.ell", "must be finite"));
        }
        if !(a0 > 0.0 && a0.is_finite()) {
            return Err(Error::invalid(
                "cosmology.a0",
                format!("must be positive, got {a0}"),
            ));
        }
        Ok(Cosmology { ell, a0 })
    }

    pub fn is_ell_one(&self) -> bool {
        (self.ell - 1.0).abs() < ELL_ONE_TOL
    }

    /// `a(t) = a0 t^ell`.
    pub fn scale(&self, t: f64) -> Result<f64> {
        check_time("scale", t)?;
        Ok(self.a0 * t.powf(self.ell))
    }

    /// `phi(t) = t^(1-ell)/(1-ell)`, or `ln t` at `ell = 1`. Independent of `a0`.
    pub fn phi(&self, t: f64) -> Result<f64> {
        check_time("phi", t)?;
        Ok(self.phi_unchecked(t))
    }

    pub(crate) fn phi_unchecked(&self, t: f64) -> f64 {
        if self.is_ell_one() {
            t.ln()
        } else {
            t.powf(1.0 - self.ell) / (1.0 - self.ell)
        }
    }

    /// `phi'(t) = t^(-ell)`.
    pub fn dphi(&self, t: f64) -> f64 {
        t.powf(-self.ell)
    }

    /// Signal speed `1/a(t)` of the transport term.
    pub fn speed(&self, t: f64) -> f64 {
        t.powf(-self.ell) / self.a0
    }

    /// `A(t) = ∫_1^t dτ / a(τ)`.
    pub fn travel_distance(&self, t: f64) -> Result<f64> {
        if !(t >= 1.0 && t.is_finite()) {
            return Err(Error::Domain {
                op: "travel_distance",
                reason: format!("requires t >= 1, got {t}"),
            });
        }
        Ok(self.travel_unchecked(t))
    }

    pub(crate) fn travel_unchecked(&self, t: f64) -> f64 {
        if self.is_ell_one() {
            t.ln() / self.a0
        } else {
            // expm1 keeps precision for t close to 1
            let p = 1.0 - self.ell;
            (p * t.ln()).exp_m1() / (self.a0 * p)
        }
    }

    /// Distance a signal emitted at `s` travels by time `t`.
    pub fn distance(&self, s: f64, t: f64) -> f64 {
        (self.phi_unchecked(t) - self.phi_unchecked(s)).abs() / self.a0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeDirection {
    Forward,
    Backward,
}

/// Cone over the ball `|x - x0| <= base_radius` at time `t0`.
///
/// A zero `base_radius` gives the null cone of the apex `(x0, t0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub x0: [f64; 3],
    pub t0: f64,
    pub direction: ConeDirection,
    #[serde(default)]
    pub base_radius: f64,
}

impl Cone {
    pub fn forward(x0: [f64; 3], t0: f64) -> Self {
        Cone {
            x0,
            t0,
            direction: ConeDirection::Forward,
            base_radius: 0.0,
        }
    }

    pub fn backward(x0: [f64; 3], t0: f64) -> Self {
        Cone {
            direction: ConeDirection::Backward,
            ..Cone::forward(x0, t0)
        }
    }

    pub fn with_base_radius(mut self, r: f64) -> Self {
        self.base_radius = r;
        self
    }

    /// Radius of the section at time `t`: `base_radius + |phi(t) - phi(t0)| / a0`.
    ///
    /// Both cones widen away from the apex; `t` must lie on the cone's side.
    pub fn radius(&self, c: &Cosmology, t: f64) -> Result<f64> {
        check_time("cone_radius", t)?;
        let wrong_side = match self.direction {
            ConeDirection::Forward => t < self.t0,
            ConeDirection::Backward => t > self.t0,
        };
        if wrong_side {
            return Err(Error::Domain {
                op: "cone_radius",
                reason: format!(
                    "t = {t} lies on the wrong side of the apex t0 = {}",
                    self.t0
                ),
            });
        }
        Ok(self.base_radius + c.distance(self.t0, t))
    }
}

/// Free-function form of [`Cone::radius`].
pub fn cone_radius(cone: &Cone, c: &Cosmology, t: f64) -> Result<f64> {
    cone.radius(c, t)
}
