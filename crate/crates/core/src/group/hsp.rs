//! Hermitian-symplectic matrices `T* J T = J`, `J = [[0, 1],[-1, 0]]`.
//!
//! The Cayley factor `C` conjugates `HSp(2d)` onto `U(d,d)`, and the rotations
//! `R_θ` are the image of `U_θ` up to the phase `e^{-iπθ}`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;
use serde::Serialize;

use super::{certification_threshold, check_size, sample_pseudo_unitary, PseudoUnitaryMatrix, Signature};
use crate::error::{Error, Result};
use crate::numkernel::{ComplexMatrix, C64, DEFAULT_EPS};

/// `J = [[0, 1_d], [-1_d, 0]]`.
pub fn symplectic_form(d: usize) -> ComplexMatrix {
    let mut j = ComplexMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        j.set(i, d + i, C64::new(1.0, 0.0));
        j.set(d + i, i, C64::new(-1.0, 0.0));
    }
    j
}

/// `C = (1/√2) [[1, i], [1, -i]] ⊗ 1_d`, unitary.
pub fn cayley(d: usize) -> ComplexMatrix {
    let s = FRAC_1_SQRT_2;
    let mut m = ComplexMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        m.set(i, i, C64::new(s, 0.0));
        m.set(i, d + i, C64::new(0.0, s));
        m.set(d + i, i, C64::new(s, 0.0));
        m.set(d + i, d + i, C64::new(0.0, -s));
    }
    m
}

/// `|t* J t - J|_F`.
pub fn hsp_defect(t: &ComplexMatrix, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidArgument("HSp(2d) needs d >= 1".into()));
    }
    check_size(t, 2 * d)?;
    let j = symplectic_form(d);
    Ok((&(&(&t.adjoint() * &j) * t) - &j).frobenius_norm())
}

/// `R_θ = [[cos πθ, -sin πθ], [sin πθ, cos πθ]] ⊗ 1_d`.
pub fn r_theta(d: usize, theta: f64) -> ComplexMatrix {
    let (s, c) = (PI * theta).sin_cos();
    let mut m = ComplexMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        m.set(i, i, C64::new(c, 0.0));
        m.set(i, d + i, C64::new(-s, 0.0));
        m.set(d + i, i, C64::new(s, 0.0));
        m.set(d + i, d + i, C64::new(c, 0.0));
    }
    m
}

/// `SL(2,ℝ) ⊂ HSp(2)`.
pub fn embed_sl2(a: [[f64; 2]; 2]) -> Result<ComplexMatrix> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if (det - 1.0).abs() > DEFAULT_EPS || a.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "embed_sl2 needs a real matrix with determinant 1, got det {det}"
        )));
    }
    Ok(ComplexMatrix::from_real(2, 2, &[a[0][0], a[0][1], a[1][0], a[1][1]])?)
}

/// Transfer matrix `[[(E - V) T⁻¹, -T*], [T⁻¹, 0]]` of the strip operator
/// `(HΨ)_n = T Ψ_{n+1} + V Ψ_n + T* Ψ_{n-1}` at energy `e`.
pub fn schrodinger_transfer(t_hop: &ComplexMatrix, v: &ComplexMatrix, e: f64) -> Result<ComplexMatrix> {
    let d = t_hop.rows();
    check_size(t_hop, d)?;
    check_size(v, d)?;
    let asym = (v - &v.adjoint()).frobenius_norm();
    if asym > DEFAULT_EPS * (1.0 + v.frobenius_norm()) {
        return Err(Error::InvalidArgument(format!(
            "potential is not hermitian (asymmetry {asym:e})"
        )));
    }
    let cond = t_hop.condition_number()?;
    if !(cond < 1e8) {
        return Err(Error::InvalidArgument(format!(
            "hopping matrix is numerically singular (condition {cond:e})"
        )));
    }
    let t_inv = t_hop.inverse()?;
    let shifted = &ComplexMatrix::identity(d).scale_real(e) - v;
    let mut m = ComplexMatrix::zeros(2 * d, 2 * d);
    m.set_block(0, 0, &(&shifted * &t_inv));
    m.set_block(0, d, &(-&t_hop.adjoint()));
    m.set_block(d, 0, &t_inv);
    Ok(m)
}

/// A matrix certified to lie in `HSp(2d)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HermitianSymplecticMatrix {
    mat: ComplexMatrix,
    d: usize,
    defect: f64,
}

impl HermitianSymplecticMatrix {
    pub fn new(mat: ComplexMatrix, d: usize) -> Result<Self> {
        let defect = hsp_defect(&mat, d)?;
        let threshold = certification_threshold(&mat);
        if defect > threshold {
            return Err(Error::Certification { defect, threshold });
        }
        Ok(Self { mat, d, defect })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn defect(&self) -> f64 {
        self.defect
    }

    /// `C T C*`, certified in `U(d,d)`.
    pub fn to_pseudo_unitary(&self) -> Result<PseudoUnitaryMatrix> {
        let c = cayley(self.d);
        let sig = Signature::new(self.d, self.d)?;
        PseudoUnitaryMatrix::new(&(&c * &self.mat) * &c.adjoint(), sig)
    }
}

/// Random `HSp(2d)` element `C* T C` with `T` from [`sample_pseudo_unitary`] on `U(d,d)`.
pub fn sample_hsp<R: Rng + ?Sized>(d: usize, gamma_max: f64, rng: &mut R) -> Result<HermitianSymplecticMatrix> {
    let t = sample_pseudo_unitary(Signature::new(d, d)?, gamma_max, rng)?;
    let c = cayley(d);
    HermitianSymplecticMatrix::new(&(&c.adjoint() * t.matrix()) * &c, d)
}
