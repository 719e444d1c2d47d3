//! Hyperbolic decomposition `T = diag(U₁,U₂) K(Γ) diag(V₁,V₂)`.
//!
//! For `c >= d` the factors are built block by block: the SVD of the upper
//! right block gives `B = U₁ (sinh Γ; 0) V₂`, then `U₂ = D V₂* cosh(Γ)⁻¹` and
//! `V₁ = (cosh Γ ⊕ 1)⁻¹ U₁* A`. The lower left block is never used; it is
//! reproduced by the group relations, which is what the reconstruction test
//! checks. For `c < d` the matrix is conjugated by the block swap into
//! `U(d,c)`, decomposed there and swapped back.

use serde::Serialize;

use super::{boost, split_blocks, PseudoUnitaryMatrix, Signature};
use crate::error::Result;
use crate::numkernel::{ComplexMatrix, C64};

#[derive(Clone, Debug, Serialize)]
pub struct HyperbolicDecomposition {
    pub sig: Signature,
    pub u1: ComplexMatrix,
    pub u2: ComplexMatrix,
    pub v1: ComplexMatrix,
    pub v2: ComplexMatrix,
    /// Hyperbolic angles, descending and nonnegative; `e^{γ_i}` are the top singular values.
    pub gamma: Vec<f64>,
}

impl HyperbolicDecomposition {
    pub fn middle(&self) -> ComplexMatrix {
        boost(self.sig, &self.gamma)
            .expect("gamma length fixed at construction")
            .into_matrix()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let left = ComplexMatrix::block_diag(&self.u1, &self.u2);
        let right = ComplexMatrix::block_diag(&self.v1, &self.v2);
        &(&left * &self.middle()) * &right
    }
}

pub fn hyperbolic_decompose(t: &PseudoUnitaryMatrix) -> Result<HyperbolicDecomposition> {
    let sig = t.signature();
    if sig.c() >= sig.d() {
        return decompose_tall(t.matrix(), sig);
    }
    let p = block_swap(sig);
    let swapped = &(&p * t.matrix()) * &p.transpose();
    let inner = decompose_tall(&swapped, sig.swapped())?;
    Ok(HyperbolicDecomposition {
        sig,
        u1: inner.u2,
        u2: inner.u1,
        v1: inner.v2,
        v2: inner.v1,
        gamma: inner.gamma,
    })
}

/// Permutation taking coordinates `(x_c, y_d)` to `(y_d, x_c)`; it maps
/// `U(c,d)` onto `U(d,c)` by conjugation.
pub(crate) fn block_swap(sig: Signature) -> ComplexMatrix {
    let (c, d) = (sig.c(), sig.d());
    let one = C64::new(1.0, 0.0);
    let mut p = ComplexMatrix::zeros(c + d, c + d);
    for i in 0..c {
        p.set(d + i, i, one);
    }
    for j in 0..d {
        p.set(j, c + j, one);
    }
    p
}

fn decompose_tall(t: &ComplexMatrix, sig: Signature) -> Result<HyperbolicDecomposition> {
    let (c, d) = (sig.c(), sig.d());
    debug_assert!(c >= d);
    let (a, b, _, dd) = split_blocks(t, sig);

    let svd_b = b.svd()?;
    // asinh of σ(B) stays accurate for tiny angles where arcosh σ(D) does not
    let gamma: Vec<f64> = svd_b.singular_values.iter().map(|s| s.asinh()).collect();
    let u1 = complete_columns(&svd_b.u)?;
    let v2 = svd_b.v.adjoint();

    let inv_cosh: Vec<f64> = gamma.iter().map(|g| 1.0 / g.cosh()).collect();
    let u2 = &(&dd * &svd_b.v) * &ComplexMatrix::from_real_diagonal(&inv_cosh);

    let mut scale = vec![1.0; c];
    scale[..d].copy_from_slice(&inv_cosh);
    let v1 = &(&ComplexMatrix::from_real_diagonal(&scale) * &u1.adjoint()) * &a;

    Ok(HyperbolicDecomposition {
        sig,
        u1,
        u2,
        v1,
        v2,
        gamma,
    })
}

/// Extends orthonormal columns `u` (`n x k`) to an `n x n` unitary.
fn complete_columns(u: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (n, k) = (u.rows(), u.cols());
    if n == k {
        return Ok(u.clone());
    }
    // the complement spans the unit eigenspace of the projector I - uu*
    let projector = &ComplexMatrix::identity(n) - &(u * &u.adjoint());
    let eig = projector.hermitian_eig()?;
    let mut full = ComplexMatrix::zeros(n, n);
    full.set_block(0, 0, u);
    full.set_block(0, k, &eig.vectors.block(0, 0, n, n - k));
    Ok(full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{d_block, n_r, sample_haar_unitary, sample_pseudo_unitary};
    use crate::rng::RngStream;

    fn sig(c: usize, d: usize) -> Signature {
        Signature::new(c, d).unwrap()
    }

    fn unitary_defect(u: &ComplexMatrix) -> f64 {
        (&(&u.adjoint() * u) - &ComplexMatrix::identity(u.cols())).frobenius_norm()
    }

    fn check(t: &PseudoUnitaryMatrix) -> HyperbolicDecomposition {
        let dec = hyperbolic_decompose(t).unwrap();
        let err = (&dec.reconstruct() - t.matrix()).frobenius_norm();
        assert!(err <= 1e-9 * (1.0 + t.matrix().frobenius_norm()), "reconstruction error {err:e}");
        for f in [&dec.u1, &dec.u2, &dec.v1, &dec.v2] {
            assert!(unitary_defect(f) < 1e-9);
        }
        assert!(dec.gamma.windows(2).all(|w| w[0] >= w[1]));
        assert!(dec.gamma.iter().all(|&g| g >= 0.0));
        let s = t.matrix().singular_values().unwrap();
        for (i, g) in dec.gamma.iter().enumerate() {
            assert!((g - s[i].ln()).abs() < 1e-8, "gamma {i}: {g} vs ln σ = {}", s[i].ln());
        }
        dec
    }

    #[test]
    fn identity_decomposes_to_zero_angle() {
        let t = PseudoUnitaryMatrix::new(ComplexMatrix::identity(3), sig(2, 1)).unwrap();
        let dec = check(&t);
        assert_eq!(dec.gamma, vec![0.0]);
    }

    #[test]
    fn boost_recovers_its_angle() {
        let t = boost(sig(1, 1), &[2f64.ln()]).unwrap();
        let dec = check(&t);
        assert!((dec.gamma[0] - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn assembled_matrix_round_trips() {
        let s = sig(3, 2);
        let rng = RngStream::new(11);
        let mut r = rng.rng();
        let u1 = sample_haar_unitary(3, &mut r);
        let u2 = sample_haar_unitary(2, &mut r);
        let v1 = sample_haar_unitary(3, &mut r);
        let v2 = sample_haar_unitary(2, &mut r);
        let k = boost(s, &[1.0, 0.3]).unwrap();
        let t = &(&ComplexMatrix::block_diag(&u1, &u2) * k.matrix()) * &ComplexMatrix::block_diag(&v1, &v2);
        let t = PseudoUnitaryMatrix::new(t, s).unwrap();
        let dec = check(&t);
        assert!((dec.gamma[0] - 1.0).abs() < 1e-8);
        assert!((dec.gamma[1] - 0.3).abs() < 1e-8);
        // |det D| = cosh(1.0) cosh(0.3)
        let det = d_block(&t).det().unwrap().norm();
        assert!((det - 1.0f64.cosh() * 0.3f64.cosh()).abs() < 1e-12);
        assert!((det - 1.6130416).abs() < 1e-6);
    }

    #[test]
    fn wide_signature_uses_block_swap() {
        for (c, d) in [(1,2), (1, 3), (2, 3), (2, 4)] {
            let s = sig(c, d);
            for k in 0..5 {
                let t = sample_pseudo_unitary(s, 1.5, &mut RngStream::new(k).rng()).unwrap();
                let dec = check(&t);
                assert_eq!(dec.u1.rows(), c);
                assert_eq!(dec.u2.rows(), d);
                assert_eq!(dec.gamma.len(), c);
                let det = d_block(&t).det().unwrap().norm();
                assert!((det.ln() - n_r(t.matrix(), d).unwrap()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn block_swap_conjugates_forms() {
        let s = sig(2, 3);
        let p = block_swap(s);
        let swapped = &(&p * &crate::group::form_matrix(s)) * &p.transpose();
        let expect = crate::group::form_matrix(s.swapped()).scale_real(-1.0);
        assert_eq!(swapped, expect);
    }

    #[test]
    fn repeated_and_zero_angles() {
        for gamma in [vec![0.5, 0.5], vec![0.0, 0.0], vec![1.0, 0.0]] {
            let t = boost(sig(3, 2), &gamma).unwrap();
            let dec = check(&t);
            for (g, e) in dec.gamma.iter().zip(&gamma) {
                assert!((g - e).abs() < 1e-12);
            }
        }
    }
}
