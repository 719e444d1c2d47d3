//! Groups preserving a general non-degenerate hermitian form `v* G w`.
//!
//! Diagonalizing `G = Q Λ Q*` and rescaling by `|Λ|^{1/2}` gives `B` with
//! `G = B* G_{c,d} B`, so `B 𝔾 B⁻¹ = U(c,d)`.

use serde::Serialize;

use super::{form_matrix, PseudoUnitaryMatrix, Signature};
use crate::error::{Error, Result};
use crate::numkernel::{ComplexMatrix, DEFAULT_EPS};

#[derive(Clone, Debug, Serialize)]
pub struct HermitianFormSpec {
    pub g: ComplexMatrix,
    pub sig: Signature,
    pub conjugator_b: ComplexMatrix,
}

pub fn conjugator_from_form(g: &ComplexMatrix) -> Result<HermitianFormSpec> {
    let eig = g.hermitian_eig()?;
    let scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(v) = eig.values.iter().find(|v| v.abs() <= DEFAULT_EPS * scale.max(1.0)) {
        return Err(Error::InvalidArgument(format!(
            "form is singular: eigenvalue {v:e}"
        )));
    }
    let c = eig.values.iter().filter(|&&v| v > 0.0).count();
    let sig = Signature::new(c, eig.values.len() - c)?;
    // eigenvalues arrive descending, so positives already come first
    let root: Vec<f64> = eig.values.iter().map(|v| v.abs().sqrt()).collect();
    let conjugator_b = &ComplexMatrix::from_real_diagonal(&root) * &eig.vectors.adjoint();
    Ok(HermitianFormSpec {
        g: g.clone(),
        sig,
        conjugator_b,
    })
}

impl HermitianFormSpec {
    /// `|g - B* G_{c,d} B|_F`.
    pub fn residual(&self) -> f64 {
        let back = &(&self.conjugator_b.adjoint() * &form_matrix(self.sig)) * &self.conjugator_b;
        (&back - &self.g).frobenius_norm()
    }

    /// `|t* g t - g|_F`: membership defect in the group of this form.
    pub fn defect(&self, t: &ComplexMatrix) -> Result<f64> {
        super::check_size(t, self.sig.dim())?;
        Ok((&(&(&t.adjoint() * &self.g) * t) - &self.g).frobenius_norm())
    }

    /// `B t B⁻¹`, certified in `U(c,d)`.
    pub fn to_standard(&self, t: &ComplexMatrix) -> Result<PseudoUnitaryMatrix> {
        super::check_size(t, self.sig.dim())?;
        let inv = self.conjugator_b.inverse()?;
        PseudoUnitaryMatrix::new(&(&self.conjugator_b * t) * &inv, self.sig)
    }

    /// `B⁻¹ t B`: maps `U(c,d)` back into the group of this form.
    pub fn from_standard(&self, t: &PseudoUnitaryMatrix) -> Result<ComplexMatrix> {
        let inv = self.conjugator_b.inverse()?;
        Ok(&(&inv * t.matrix()) * &self.conjugator_b)
    }
}
