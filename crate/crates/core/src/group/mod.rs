//! The pseudo-unitary groups `U(c,d)`, the hermitian-symplectic groups
//! `HSp(2d)` and groups preserving a general non-degenerate hermitian form.
//!
//! `U(c,d)` is the set of `(c+d)x(c+d)` matrices with `T* G T = G` for
//! `G = diag(1_c, -1_d)`. Membership is checked numerically: a matrix is
//! *certified* when its defect `|T* G T - G|_F` is below
//! [`certification_threshold`].

mod decompose;
mod form;
mod hsp;
mod sample;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{ComplexMatrix, C64};

pub use decompose::{hyperbolic_decompose, HyperbolicDecomposition};
pub use form::{conjugator_from_form, HermitianFormSpec};
pub use hsp::{
    cayley, embed_sl2, hsp_defect, r_theta, sample_hsp, schrodinger_transfer, symplectic_form,
    HermitianSymplecticMatrix,
};
pub use sample::{sample_haar_unitary, sample_pseudo_unitary};

/// Signature `(c, d)`: `c` positive and `d` negative directions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSignature")]
pub struct Signature {
    c: usize,
    d: usize,
}

#[derive(Deserialize)]
struct RawSignature {
    c: usize,
    d: usize,
}

impl TryFrom<RawSignature> for Signature {
    type Error = Error;
    fn try_from(raw: RawSignature) -> Result<Self> {
        Signature::new(raw.c, raw.d)
    }
}

impl Signature {
    pub fn new(c: usize, d: usize) -> Result<Self> {
        if c == 0 || d == 0 {
            return Err(Error::InvalidArgument(format!(
                "signature ({c},{d}) needs c >= 1 and d >= 1"
            )));
        }
        Ok(Self { c, d })
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.c + self.d
    }

    /// `min(c, d)`: the number of hyperbolic angles.
    pub fn rank(&self) -> usize {
        self.c.min(self.d)
    }

    pub fn swapped(&self) -> Self {
        Self { c: self.d, d: self.c }
    }
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.c, self.d)
    }
}

/// Which invariant form a cocycle's matrices preserve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "group")]
pub enum Group {
    PseudoUnitary { sig: Signature },
    HermitianSymplectic { d: usize },
}

impl Group {
    pub fn dim(&self) -> usize {
        match self {
            Group::PseudoUnitary { sig } => sig.dim(),
            Group::HermitianSymplectic { d } => 2 * d,
        }
    }

    /// The `d` of the averaging identity: number of top exponents summed.
    pub fn top(&self) -> usize {
        match self {
            Group::PseudoUnitary { sig } => sig.d(),
            Group::HermitianSymplectic { d } => *d,
        }
    }

    pub fn defect(&self, t: &ComplexMatrix) -> Result<f64> {
        match self {
            Group::PseudoUnitary { sig } => membership_defect(t, *sig),
            Group::HermitianSymplectic { d } => hsp_defect(t, *d),
        }
    }

    /// Defect of `t`, or a certification error above the threshold.
    pub fn certify(&self, t: &ComplexMatrix) -> Result<f64> {
        let defect = self.defect(t)?;
        let threshold = certification_threshold(t);
        if defect <= threshold {
            Ok(defect)
        } else {
            Err(Error::Certification { defect, threshold })
        }
    }

    /// The rotation family: `U_θ` for `U(c,d)`, `R_θ` for `HSp(2d)`.
    pub fn rotation(&self, theta: f64) -> ComplexMatrix {
        match self {
            Group::PseudoUnitary { sig } => u_theta(*sig, theta).into_matrix(),
            Group::HermitianSymplectic { d } => r_theta(*d, theta),
        }
    }
}

/// `1e-8 (1 + |t|_F²)`; quadratic because the defect is quadratic in `t`.
pub fn certification_threshold(t: &ComplexMatrix) -> f64 {
    let n = t.frobenius_norm();
    1e-8 * (1.0 + n * n)
}

/// `G_{c,d} = diag(1_c, -1_d)`.
pub fn form_matrix(sig: Signature) -> ComplexMatrix {
    let diag: Vec<f64> = (0..sig.dim())
        .map(|i| if i < sig.c() { 1.0 } else { -1.0 })
        .collect();
    ComplexMatrix::from_real_diagonal(&diag)
}

/// `|t* G t - G|_F`.
pub fn membership_defect(t: &ComplexMatrix, sig: Signature) -> Result<f64> {
    check_size(t, sig.dim())?;
    let g = form_matrix(sig);
    let lhs = &(&t.adjoint() * &g) * t;
    Ok((&lhs - &g).frobenius_norm())
}

pub(crate) fn check_size(t: &ComplexMatrix, n: usize) -> Result<()> {
    if t.rows() == n && t.cols() == n {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "expected a {n}x{n} matrix, got {}x{}",
            t.rows(),
            t.cols()
        )))
    }
}

/// A matrix certified to lie in `U(c,d)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PseudoUnitaryMatrix {
    mat: ComplexMatrix,
    sig: Signature,
    defect: f64,
}

impl PseudoUnitaryMatrix {
    pub fn new(mat: ComplexMatrix, sig: Signature) -> Result<Self> {
        let defect = Group::PseudoUnitary { sig }.certify(&mat)?;
        Ok(Self { mat, sig, defect })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn defect(&self) -> f64 {
        self.defect
    }

    /// Blocks `(A, B, C, D)` of sizes `c x c`, `c x d`, `d x c`, `d x d`.
    pub fn blocks(&self) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix, ComplexMatrix) {
        split_blocks(&self.mat, self.sig)
    }

    /// Product in the group, re-certified.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.sig != other.sig {
            return Err(Error::InvalidArgument(format!(
                "cannot compose {} with {}",
                self.sig, other.sig
            )));
        }
        Self::new(&self.mat * &other.mat, self.sig)
    }

    /// Group inverse `G T* G`.
    pub fn inverse(&self) -> Self {
        let g = form_matrix(self.sig);
        let mat = &(&g * &self.mat.adjoint()) * &g;
        Self {
            defect: membership_defect(&mat, self.sig).unwrap_or(f64::INFINITY),
            mat,
            sig: self.sig,
        }
    }
}

pub(crate) fn split_blocks(
    t: &ComplexMatrix,
    sig: Signature,
) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix, ComplexMatrix) {
    let (c, d) = (sig.c(), sig.d());
    (
        t.block(0, 0, c, c),
        t.block(0, c, c, d),
        t.block(c, 0, d, c),
        t.block(c, c, d, d),
    )
}

/// `U_θ = diag(e^{2πiθ} 1_c, 1_d)`.
pub fn u_theta(sig: Signature, theta: f64) -> PseudoUnitaryMatrix {
    let mat = b_z(sig, C64::from_polar(1.0, 2.0 * PI * theta));
    let defect = membership_defect(&mat, sig).expect("size matches by construction");
    PseudoUnitaryMatrix { mat, sig, defect }
}

/// `B(z) = diag(z 1_c, 1_d)`.
pub fn b_z(sig: Signature, z: C64) -> ComplexMatrix {
    let diag: Vec<C64> = (0..sig.dim())
        .map(|i| if i < sig.c() { z } else { C64::new(1.0, 0.0) })
        .collect();
    ComplexMatrix::from_diagonal(&diag)
}

/// The middle factor `K(Γ)` of the hyperbolic decomposition: coordinate
/// `i < min(c,d)` of the positive block is paired with coordinate `i` of the
/// negative block through `cosh γ_i`, `sinh γ_i`; all other directions are fixed.
pub fn boost(sig: Signature, gamma: &[f64]) -> Result<PseudoUnitaryMatrix> {
    if gamma.len() != sig.rank() {
        return Err(Error::InvalidArgument(format!(
            "signature {sig} needs {} hyperbolic angles, got {}",
            sig.rank(),
            gamma.len()
        )));
    }
    let mut mat = ComplexMatrix::identity(sig.dim());
    let c = sig.c();
    for (i, &g) in gamma.iter().enumerate() {
        let (ch, sh) = (C64::new(g.cosh(), 0.0), C64::new(g.sinh(), 0.0));
        mat.set(i, i, ch);
        mat.set(i, c + i, sh);
        mat.set(c + i, i, sh);
        mat.set(c + i, c + i, ch);
    }
    PseudoUnitaryMatrix::new(mat, sig)
}

/// `N_r(T) = Σ_{i≤r} ln((σ_i + σ_i⁻¹)/2)`.
pub fn n_r(t: &ComplexMatrix, r: usize) -> Result<f64> {
    if r == 0 || r > t.rows().min(t.cols()) {
        return Err(Error::InvalidArgument(format!(
            "N_r needs 1 <= r <= {}, got {r}",
            t.rows().min(t.cols())
        )));
    }
    let s = t.singular_values()?;
    if *s.last().expect("nonempty") <= 0.0 {
        return Err(crate::numkernel::LinalgError::Singular.into());
    }
    // ln((σ + 1/σ)/2) = ln σ + ln((1 + σ⁻²)/2) avoids overflow for large σ
    Ok(s[..r]
        .iter()
        .map(|&x| x.ln() + (0.5 * (1.0 + 1.0 / (x * x))).ln())
        .sum())
}

/// The lower-right `d x d` block `D` of a certified matrix.
pub fn d_block(t: &PseudoUnitaryMatrix) -> ComplexMatrix {
    t.blocks().3
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(c: usize, d: usize) -> Signature {
        Signature::new(c, d).unwrap()
    }

    fn h(gamma: f64) -> ComplexMatrix {
        boost(sig(1, 1), &[gamma]).unwrap().into_matrix()
    }

    #[test]
    fn signature_rejects_zero() {
        assert!(Signature::new(0, 2).is_err());
        assert!(Signature::new(2, 0).is_err());
        assert!(serde_json::from_str::<Signature>(r#"{"c":0,"d":1}"#).is_err());
    }

    #[test]
    fn form_matrix_examples() {
        let cases = [((1, 1), vec![1.0, -1.0]), ((2, 1), vec![1.0, 1.0, -1.0]), ((1, 2), vec![1.0, -1.0, -1.0])];
        for ((c, d), diag) in cases {
            assert_eq!(form_matrix(sig(c, d)), ComplexMatrix::from_real_diagonal(&diag));
        }
    }

    #[test]
    fn membership_defect_examples() {
        assert_eq!(membership_defect(&ComplexMatrix::identity(3), sig(2, 1)).unwrap(), 0.0);
        let h2 = ComplexMatrix::from_real(2, 2, &[1.25, 0.75, 0.75, 1.25]).unwrap();
        assert!(membership_defect(&h2, sig(1, 1)).unwrap() < 1e-15);
        let two = ComplexMatrix::from_real_diagonal(&[2.0, 2.0]);
        let defect = membership_defect(&two, sig(1, 1)).unwrap();
        assert!((defect - 3.0 * 2f64.sqrt()).abs() < 1e-14);
        assert!(PseudoUnitaryMatrix::new(two, sig(1, 1)).is_err());
        assert!(membership_defect(&ComplexMatrix::identity(2), sig(2, 1)).is_err());
    }

    #[test]
    fn u_theta_examples() {
        assert_eq!(u_theta(sig(2, 1), 0.0).matrix(), &ComplexMatrix::identity(3));
        let half = u_theta(sig(1, 1), 0.5);
        assert!((half.matrix() - &ComplexMatrix::from_real_diagonal(&[-1.0, 1.0])).frobenius_norm() < 1e-15);
        let quarter = u_theta(sig(2, 1), 0.25);
        let expect = ComplexMatrix::from_diagonal(&[C64::i(), C64::i(), C64::new(1.0, 0.0)]);
        assert!((quarter.matrix() - &expect).frobenius_norm() < 1e-15);
        assert!(quarter.defect() < 1e-15);
        let uu = &quarter.matrix().adjoint() * quarter.matrix();
        assert!((&uu - &ComplexMatrix::identity(3)).frobenius_norm() < 1e-15);
    }

    #[test]
    fn b_z_examples() {
        let s = sig(1, 1);
        assert_eq!(b_z(s, C64::new(1.0, 0.0)), ComplexMatrix::identity(2));
        assert_eq!(b_z(s, C64::new(0.0, 0.0)), ComplexMatrix::from_real_diagonal(&[0.0, 1.0]));
        assert_eq!(
            b_z(s, C64::new(0.0, 0.5)),
            ComplexMatrix::from_diagonal(&[C64::new(0.0, 0.5), C64::new(1.0, 0.0)])
        );
        let theta = 0.3;
        assert_eq!(
            &b_z(sig(2, 2), C64::from_polar(1.0, 2.0 * PI * theta)),
            u_theta(sig(2, 2), theta).matrix()
        );
    }

    #[test]
    fn n_r_examples() {
        let w = ComplexMatrix::from_row_major(
            2,
            2,
            &[C64::new(0.0, 1.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0)],
        )
        .unwrap();
        assert!(n_r(&w, 1).unwrap().abs() < 1e-15);
        assert!(n_r(&w, 2).unwrap().abs() < 1e-15);
        let v = n_r(&h(2f64.ln()), 1).unwrap();
        assert!((v - 1.25f64.ln()).abs() < 1e-14);
        assert!((v - 0.2231436).abs() < 1e-7);
        let sl2 = ComplexMatrix::from_real_diagonal(&[2.0, 0.5]);
        assert!((n_r(&sl2, 1).unwrap() - (5.0f64 / 4.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn n_r_errors() {
        assert!(n_r(&ComplexMatrix::identity(2), 3).is_err());
        assert!(n_r(&ComplexMatrix::identity(2), 0).is_err());
        assert!(n_r(&ComplexMatrix::from_real_diagonal(&[1.0, 0.0]), 1).is_err());
    }

    #[test]
    fn d_block_examples() {
        let id = PseudoUnitaryMatrix::new(ComplexMatrix::identity(3), sig(2, 1)).unwrap();
        assert_eq!(d_block(&id), ComplexMatrix::identity(1));
        let t = PseudoUnitaryMatrix::new(h(2f64.ln()), sig(1, 1)).unwrap();
        let dd = d_block(&t);
        assert!((dd.get(0, 0).re - 1.25).abs() < 1e-15);
        assert!((dd.det().unwrap().norm().ln() - n_r(t.matrix(), 1).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn boost_matches_hyperbolic_boost() {
        let expect = ComplexMatrix::from_real(2, 2, &[1.25, 0.75, 0.75, 1.25]).unwrap();
        assert!((&h(2f64.ln()) - &expect).frobenius_norm() < 1e-15);
        assert!(boost(sig(3, 2), &[1.0]).is_err());
    }

    #[test]
    fn inverse_and_compose() {
        let t = PseudoUnitaryMatrix::new(h(0.7), sig(1, 1)).unwrap();
        let prod = t.compose(&t.inverse()).unwrap();
        assert!((prod.matrix() - &ComplexMatrix::identity(2)).frobenius_norm() < 1e-14);
        let other = PseudoUnitaryMatrix::new(ComplexMatrix::identity(3), sig(2, 1)).unwrap();
        assert!(t.compose(&other).is_err());
    }

    #[test]
    fn group_rotation_is_u_theta_or_r_theta() {
        let g = Group::PseudoUnitary { sig: sig(2, 1) };
        assert_eq!(g.rotation(0.1), u_theta(sig(2, 1), 0.1).into_matrix());
        let g = Group::HermitianSymplectic { d: 2 };
        assert_eq!(g.rotation(0.1), r_theta(2, 0.1));
        assert_eq!(g.top(), 2);
        assert_eq!(g.dim(), 4);
    }
}
