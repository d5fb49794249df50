//! Dirac-representation gamma matrices.
//!
//! `g0 = diag(I2, -I2)`, `gk = [[0, sk], [-sk, 0]]` with Pauli blocks `sk`,
//! `g5 = -i g0 g1 g2 g3`. Every basis matrix is written out from integer and
//! `±i` literals, so algebraic identities between them hold bit-exactly.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use crate::C64;

/// A four-component Dirac spinor.
pub type Spinor = [C64; 4];

const O: C64 = C64::new(0.0, 0.0);
const P1: C64 = C64::new(1.0, 0.0);
const M1: C64 = C64::new(-1.0, 0.0);
const PI: C64 = C64::new(0.0, 1.0);
const MI: C64 = C64::new(0.0, -1.0);

/// Dense 4×4 complex matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat4C(pub [[C64; 4]; 4]);

/// Dense 2×2 complex matrix, row-major.
pub type Mat2C = [[C64; 2]; 2];

impl Mat4C {
    pub const ZERO: Mat4C = Mat4C([[O; 4]; 4]);
    pub const IDENTITY: Mat4C = Mat4C([[P1, O, O, O], [O, P1, O, O], [O, O, P1, O], [O, O, O, P1]]);

    pub fn scale(&self, s: C64) -> Mat4C {
        let mut out = *self;
        out.0.iter_mut().flatten().for_each(|e| *e *= s);
        out
    }

    pub fn scale_re(&self, s: f64) -> Mat4C {
        self.scale(C64::new(s, 0.0))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Mat4C {
        let mut out = Mat4C::ZERO;
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = self.0[j][i].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat4C {
        let mut out = Mat4C::ZERO;
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = self.0[j][i];
            }
        }
        out
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|e| e.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|e| e.is_finite())
    }

    /// Matrix-vector product.
    #[inline]
    pub fn apply(&self, s: &Spinor) -> Spinor {
        let m = &self.0;
        std::array::from_fn(|i| m[i][0] * s[0] + m[i][1] * s[1] + m[i][2] * s[2] + m[i][3] * s[3])
    }
}

impl Mul for Mat4C {
    type Output = Mat4C;
    fn mul(self, rhs: Mat4C) -> Mat4C {
        let mut out = Mat4C::ZERO;
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = (0..4).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        out
    }
}

impl Add for Mat4C {
    type Output = Mat4C;
    fn add(self, rhs: Mat4C) -> Mat4C {
        let mut out = self;
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] += rhs.0[i][j];
            }
        }
        out
    }
}

impl Sub for Mat4C {
    type Output = Mat4C;
    fn sub(self, rhs: Mat4C) -> Mat4C {
        self + (-rhs)
    }
}

impl Neg for Mat4C {
    type Output = Mat4C;
    fn neg(self) -> Mat4C {
        self.scale_re(-1.0)
    }
}

/// The fixed Dirac basis.
#[derive(Clone, Debug)]
pub struct GammaBasis {
    pub g0: Mat4C,
    pub g1: Mat4C,
    pub g2: Mat4C,
    pub g3: Mat4C,
    pub g5: Mat4C,
    pub alpha1: Mat4C,
    pub alpha2: Mat4C,
    pub alpha3: Mat4C,
    pub gamma_u: Mat4C,
    pub gamma_l: Mat4C,
    pub sigma1: Mat2C,
    pub sigma2: Mat2C,
    pub sigma3: Mat2C,
}

impl GammaBasis {
    /// `[g1, g2, g3]`.
    pub fn spatial(&self) -> [&Mat4C; 3] {
        [&self.g1, &self.g2, &self.g3]
    }

    /// `[alpha1, alpha2, alpha3]`.
    pub fn alphas(&self) -> [&Mat4C; 3] {
        [&self.alpha1, &self.alpha2, &self.alpha3]
    }
}

/// Builds the basis from literals.
pub fn build_basis() -> GammaBasis {
    let g0 = Mat4C([[P1, O, O, O], [O, P1, O, O], [O, O, M1, O], [O, O, O, M1]]);
    let g1 = Mat4C([[O, O, O, P1], [O, O, P1, O], [O, M1, O, O], [M1, O, O, O]]);
    let g2 = Mat4C([[O, O, O, MI], [O, O, PI, O], [O, PI, O, O], [MI, O, O, O]]);
    let g3 = Mat4C([[O, O, P1, O], [O, O, O, M1], [M1, O, O, O], [O, P1, O, O]]);
    let g5 = Mat4C([[O, O, M1, O], [O, O, O, M1], [M1, O, O, O], [O, M1, O, O]]);
    let alpha1 = Mat4C([[O, O, O, P1], [O, O, P1, O], [O, P1, O, O], [P1, O, O, O]]);
    let alpha2 = Mat4C([[O, O, O, MI], [O, O, PI, O], [O, MI, O, O], [PI, O, O, O]]);
    let alpha3 = Mat4C([[O, O, P1, O], [O, O, O, M1], [P1, O, O, O], [O, M1, O, O]]);
    let gamma_u = Mat4C([[P1, O, O, O], [O, P1, O, O], [O, O, O, O], [O, O, O, O]]);
    let gamma_l = Mat4C([[O, O, O, O], [O, O, O, O], [O, O, P1, O], [O, O, O, P1]]);
    GammaBasis {
        g0,
        g1,
        g2,
        g3,
        g5,
        alpha1,
        alpha2,
        alpha3,
        gamma_u,
        gamma_l,
        sigma1: [[O, P1], [P1, O]],
        sigma2: [[O, MI], [PI, O]],
        sigma3: [[P1, O], [O, M1]],
    }
}

/// Shared instance of [`build_basis`].
pub fn basis() -> &'static GammaBasis {
    static BASIS: OnceLock<GammaBasis> = OnceLock::new();
    BASIS.get_or_init(build_basis)
}

/// `AB + BA`.
pub fn anticommutator(a: &Mat4C, b: &Mat4C) -> Mat4C {
    *a * *b + *b * *a
}

/// Matrix-vector product (free-function form of [`Mat4C::apply`]).
pub fn apply(a: &Mat4C, s: &Spinor) -> Spinor {
    a.apply(s)
}

/// `γ² ψ̄`, written out componentwise.
#[inline]
pub fn gamma2_conj(s: &Spinor) -> Spinor {
    [
        MI * s[3].conj(),
        PI * s[2].conj(),
        PI * s[1].conj(),
        MI * s[0].conj(),
    ]
}

/// `ψᵀ γ² ψ = 2i (ψ2 ψ3 − ψ1 ψ4)`.
#[inline]
pub fn gamma2_form(s: &Spinor) -> C64 {
    PI * 2.0 * (s[1] * s[2] - s[0] * s[3])
}

/// `|ψ|²`.
#[inline]
pub fn norm_sq(s: &Spinor) -> f64 {
    s.iter().map(|c| c.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(a: Mat2C, b: Mat2C, c: Mat2C, d: Mat2C) -> Mat4C {
        let mut m = Mat4C::ZERO;
        for i in 0..2 {
            for j in 0..2 {
                m.0[i][j] = a[i][j];
                m.0[i][j + 2] = b[i][j];
                m.0[i + 2][j] = c[i][j];
                m.0[i + 2][j + 2] = d[i][j];
            }
        }
        m
    }

    fn neg2(a: Mat2C) -> Mat2C {
        [[-a[0][0], -a[0][1]], [-a[1][0], -a[1][1]]]
    }

    const Z2: Mat2C = [[O, O], [O, O]];
    const I2: Mat2C = [[P1, O], [O, P1]];

    #[test]
    fn literals_match_block_definitions() {
        let b = build_basis();
        assert_eq!(b.g0, block(I2, Z2, Z2, neg2(I2)));
        assert_eq!(b.g1, block(Z2, b.sigma1, neg2(b.sigma1), Z2));
        assert_eq!(b.g2, block(Z2, b.sigma2, neg2(b.sigma2), Z2));
        assert_eq!(b.g3, block(Z2, b.sigma3, neg2(b.sigma3), Z2));
        assert_eq!(b.alpha1, b.g0 * b.g1);
        assert_eq!(b.alpha2, b.g0 * b.g2);
        assert_eq!(b.alpha3, b.g0 * b.g3);
        assert_eq!(b.gamma_u, (Mat4C::IDENTITY + b.g0).scale_re(0.5));
        assert_eq!(b.gamma_l, (Mat4C::IDENTITY - b.g0).scale_re(0.5));
    }

    #[test]
    fn gamma5_product_and_block_form() {
        let b = build_basis();
        let prod = (b.g0 * b.g1 * b.g2 * b.g3).scale(MI);
        assert_eq!(prod, b.g5);
        assert_eq!(b.g5, block(Z2, neg2(I2), neg2(I2), Z2));
    }

    #[test]
    fn clifford_relations() {
        let b = build_basis();
        let gs = [b.g0, b.g1, b.g2, b.g3];
        for mu in 0..4 {
            for nu in 0..4 {
                let eta = if mu != nu {
                    0.0
                } else if mu == 0 {
                    2.0
                } else {
                    -2.0
                };
                assert_eq!(
                    anticommutator(&gs[mu], &gs[nu]),
                    Mat4C::IDENTITY.scale_re(eta)
                );
            }
        }
        assert_eq!(b.g0 * b.g0, Mat4C::IDENTITY);
        assert_eq!(anticommutator(&b.g5, &b.g2), Mat4C::ZERO);
        assert_eq!(b.g0 * b.g5, -(b.g5 * b.g0));
    }

    #[test]
    fn projectors() {
        let b = build_basis();
        assert_eq!(b.gamma_u * b.gamma_l, Mat4C::ZERO);
        assert_eq!(b.gamma_u * b.gamma_u, b.gamma_u);
        assert_eq!(b.gamma_l * b.gamma_l, b.gamma_l);
        assert_eq!(b.gamma_u + b.gamma_l, Mat4C::IDENTITY);
    }

    #[test]
    fn alphas_hermitian() {
        let b = build_basis();
        for a in b.alphas() {
            assert_eq!(a.adjoint(), *a);
        }
    }

    #[test]
    fn transpose_identities() {
        let b = build_basis();
        let g = b.g2 * b.g0;
        assert_eq!(b.g1.transpose() * b.g0 * b.g2, g * b.g1);
        assert_eq!(b.g2.transpose() * b.g0 * b.g2, g * b.g2);
        assert_eq!(b.g3.transpose() * b.g0 * b.g2, g * b.g3);
    }

    #[test]
    fn apply_examples() {
        let b = build_basis();
        let v = [P1, O, P1, O];
        assert_eq!(apply(&Mat4C::IDENTITY, &v), v);
        assert_eq!(apply(&b.g0, &v), [P1, O, M1, O]);

        let s3 = b.sigma3;
        let d = block(s3, Z2, Z2, neg2(s3)).scale(MI);
        let w = [
            C64::new(0.3, -1.0),
            C64::new(2.0, 0.5),
            C64::new(-0.7, 0.1),
            C64::new(0.0, 1.5),
        ];
        assert_eq!(apply(&(b.g2 * b.g0 * b.g1), &w), apply(&d, &w));
    }

    #[test]
    fn helper_bilinears_match_matrix_forms() {
        let b = build_basis();
        let w = [
            C64::new(0.3, -1.0),
            C64::new(2.0, 0.5),
            C64::new(-0.7, 0.1),
            C64::new(0.0, 1.5),
        ];
        let conj: Spinor = std::array::from_fn(|i| w[i].conj());
        assert_eq!(gamma2_conj(&w), b.g2.apply(&conj));
        let g2w = b.g2.apply(&w);
        let direct: C64 = (0..4).map(|i| w[i] * g2w[i]).sum();
        assert!((gamma2_form(&w) - direct).norm() < 1e-14);
    }
}
