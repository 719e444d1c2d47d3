use rand::Rng;
use rand_distr::StandardNormal;

use super::{boost, PseudoUnitaryMatrix, Signature};
use crate::error::{Error, Result};
use crate::numkernel::{ComplexMatrix, C64};

/// Haar-distributed `n x n` unitary: positive-diagonal QR of a standard
/// complex Gaussian matrix.
pub fn sample_haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    loop {
        let z = ComplexMatrix::from_fn(n, n, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re * scale, im * scale)
        });
        // a rank-deficient Gaussian draw has probability zero; redraw if it happens
        if let Ok(qr) = z.qr_positive() {
            return qr.q;
        }
    }
}

/// Random `U(c,d)` element `diag(U₁,U₂) K(Γ) diag(V₁,V₂)` with Haar unitary
/// factors and angles i.i.d. uniform on `[0, gamma_max]`, sorted descending.
pub fn sample_pseudo_unitary<R: Rng + ?Sized>(
    sig: Signature,
    gamma_max: f64,
    rng: &mut R,
) -> Result<PseudoUnitaryMatrix> {
    if !(gamma_max >= 0.0 && gamma_max.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "gamma_max must be finite and >= 0, got {gamma_max}"
        )));
    }
    let u1 = sample_haar_unitary(sig.c(), rng);
    let u2 = sample_haar_unitary(sig.d(), rng);
    let v1 = sample_haar_unitary(sig.c(), rng);
    let v2 = sample_haar_unitary(sig.d(), rng);
    let mut gamma: Vec<f64> = (0..sig.rank())
        .map(|_| if gamma_max > 0.0 { rng.random_range(0.0..=gamma_max) } else { 0.0 })
        .collect();
    gamma.sort_by(|a, b| b.total_cmp(a));
    let k = boost(sig, &gamma)?;
    let t = &(&ComplexMatrix::block_diag(&u1, &u2) * k.matrix()) * &ComplexMatrix::block_diag(&v1, &v2);
    PseudoUnitaryMatrix::new(t, sig)
}
