//! The classical domain `R_I(c,d) = {M : M*M < 1}` and the Möbius action
//! `T·M = (AM + B)(CM + D)⁻¹` of `U(c,d)` on it.
//!
//! A point `M` stands for the `d`-plane spanned by the columns of `(M; 1_d)`.
//! For `|z| < 1` the product `D(z) = B(z)T₁ B(z)T₂ ⋯ B(z)Tₙ` maps the closed
//! domain strictly inside itself, so iterating its Möbius action from `0`
//! converges to the invariant plane `W(z)` belonging to the `d` largest
//! eigenvalue moduli. `ln ρ(Λ^d D(z)) = ln |det D_W(z)|` is harmonic in `z`,
//! which is what [`mean_value_check`] probes.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{b_z, n_r, split_blocks, PseudoUnitaryMatrix, Signature};
use crate::numkernel::{ComplexMatrix, C64};

/// `M ∈ R_I(c,d)` together with its slack `1 - σ_max(M)²`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DomainPoint {
    m: ComplexMatrix,
    slack: f64,
}

impl DomainPoint {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let s = m.singular_values()?;
        let slack = 1.0 - s[0] * s[0];
        if slack > 0.0 {
            Ok(Self { m, slack })
        } else {
            Err(Error::OutsideDomain { slack })
        }
    }

    /// The center `M = 0`, i.e. the plane spanned by the last `d` basis vectors.
    pub fn origin(sig: Signature) -> Self {
        Self {
            m: ComplexMatrix::zeros(sig.c(), sig.d()),
            slack: 1.0,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn slack(&self) -> f64 {
        self.slack
    }

    /// Chart representative `(M; 1_d)` of the plane.
    pub fn frame(&self) -> ComplexMatrix {
        let (c, d) = (self.m.rows(), self.m.cols());
        let mut f = ComplexMatrix::zeros(c + d, d);
        f.set_block(0, 0, &self.m);
        f.set_block(c, 0, &ComplexMatrix::identity(d));
        f
    }
}

/// Ordered factors `T₁, …, Tₙ` sharing one signature.
#[derive(Clone, Debug, Serialize)]
pub struct ProductFamily {
    factors: Vec<PseudoUnitaryMatrix>,
    sig: Signature,
}

impl ProductFamily {
    pub fn new(factors: Vec<PseudoUnitaryMatrix>) -> Result<Self> {
        let sig = factors
            .first()
            .ok_or_else(|| Error::InvalidArgument("product family needs at least one factor".into()))?
            .signature();
        if let Some(bad) = factors.iter().find(|t| t.signature() != sig) {
            return Err(Error::InvalidArgument(format!(
                "mixed signatures {sig} and {}",
                bad.signature()
            )));
        }
        Ok(Self { factors, sig })
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn factors(&self) -> &[PseudoUnitaryMatrix] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// `Σ_j N_d(T_j)`, the common value of both sides of the averaging identity.
    pub fn sum_n_d(&self) -> Result<f64> {
        self.factors
            .iter()
            .map(|t| n_r(t.matrix(), self.sig.d()))
            .sum()
    }
}

/// `(AM + B)(CM + D)⁻¹` for any square `t` of size `c + d`.
pub(crate) fn moebius_raw(t: &ComplexMatrix, sig: Signature, m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (a, b, c, d) = split_blocks(t, sig);
    let num = &(&a * m) + &b;
    let den = &(&c * m) + &d;
    let inv = den.inverse().map_err(|_| {
        Error::InvalidArgument("CM + D is singular: the Möbius action is undefined here".into())
    })?;
    Ok(&num * &inv)
}

pub fn moebius_apply(t: &PseudoUnitaryMatrix, m: &DomainPoint) -> Result<DomainPoint> {
    let sig = t.signature();
    if m.m.rows() != sig.c() || m.m.cols() != sig.d() {
        return Err(Error::InvalidArgument(format!(
            "domain point is {}x{}, signature {sig} needs {}x{}",
            m.m.rows(),
            m.m.cols(),
            sig.c(),
            sig.d()
        )));
    }
    DomainPoint::new(moebius_raw(t.matrix(), sig, &m.m)?)
}

/// `D(z) = B(z) T₁ B(z) T₂ ⋯ B(z) Tₙ`.
pub fn product_eval(fam: &ProductFamily, z: C64) -> ComplexMatrix {
    let bz = b_z(fam.sig, z);
    let mut out = ComplexMatrix::identity(fam.sig.dim());
    for t in &fam.factors {
        out = &(&out * &bz) * t.matrix();
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedPointResult {
    pub m_star: DomainPoint,
    pub iterations: usize,
    /// `|D(z)·M - M|_F` at the returned point.
    pub residual: f64,
    /// Matrix of `D(z)` restricted to `W(z)` in the basis `(M(z); 1_d)`.
    pub d_w: ComplexMatrix,
    pub log_abs_det: f64,
}

/// Attracting fixed point of `M ↦ D(z)·M`, iterated from `M = 0` until the
/// largest entry change drops below `tol`.
pub fn fixed_point(fam: &ProductFamily, z: C64, tol: f64, max_iter: usize) -> Result<FixedPointResult> {
    if !(z.norm() < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "fixed point needs |z| < 1, got |z| = {}",
            z.norm()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let sig = fam.sig;
    let dz = product_eval(fam, z);
    let mut m = ComplexMatrix::zeros(sig.c(), sig.d());
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        let next = moebius_raw(&dz, sig, &m)?;
        change = (&next - &m).max_abs();
        m = next;
        iterations += 1;
        if change < tol {
            break;
        }
    }
    if !(change < tol) {
        return Err(Error::FixedPointStalled { iterations, change });
    }
    let residual = (&moebius_raw(&dz, sig, &m)? - &m).frobenius_norm();
    let (_, _, c_blk, d_blk) = split_blocks(&dz, sig);
    let d_w = &(&c_blk * &m) + &d_blk;
    let log_abs_det = d_w.det()?.norm().ln();
    Ok(FixedPointResult {
        m_star: DomainPoint::new(m)?,
        iterations,
        residual,
        d_w,
        log_abs_det,
    })
}

/// `ln ρ(Λ^k t)`: log of the product of the `k` largest eigenvalue moduli.
pub fn log_spectral_radius_wedge(t: &ComplexMatrix, k: usize) -> Result<f64> {
    if k == 0 || k > t.rows() {
        return Err(Error::InvalidArgument(format!(
            "wedge order must satisfy 1 <= k <= {}, got {k}",
            t.rows()
        )));
    }
    let mut moduli: Vec<f64> = t.eigenvalues()?.iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    Ok(moduli[..k].iter().map(|x| x.ln()).sum())
}

/// `ρ(Λ^k t)`.
pub fn spectral_radius_wedge(t: &ComplexMatrix, k: usize) -> Result<f64> {
    log_spectral_radius_wedge(t, k).map(f64::exp)
}

/// `ln ‖Λ^k t‖ = Σ_{i≤k} ln σ_i(t)`.
pub fn wedge_log_norm(t: &ComplexMatrix, k: usize) -> Result<f64> {
    if k == 0 || k > t.rows().min(t.cols()) {
        return Err(Error::InvalidArgument(format!(
            "wedge order must satisfy 1 <= k <= {}, got {k}",
            t.rows().min(t.cols())
        )));
    }
    let s = t.singular_values()?;
    Ok(s[..k].iter().map(|x| x.ln()).sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanValueCheck {
    pub circle_mean: f64,
    pub center_value: f64,
    pub gap: f64,
}

/// Mean of `ln ρ(Λ^d D(z))` over `n_points` equispaced nodes on `|z| = radius`,
/// compared with the center value `Σ N_d(T_j)`.
pub fn mean_value_check(fam: &ProductFamily, radius: f64, n_points: usize) -> Result<MeanValueCheck> {
    if !(radius > 0.0 && radius < 1.0) {
        return Err(Error::InvalidArgument(format!("radius must lie in (0,1), got {radius}")));
    }
    if n_points < 8 || !n_points.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "n_points must be a power of two >= 8, got {n_points}"
        )));
    }
    let d = fam.sig.d();
    let values: Vec<f64> = (0..n_points)
        .into_par_iter()
        .map(|k| {
            let z = C64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / n_points as f64);
            log_spectral_radius_wedge(&product_eval(fam, z), d)
        })
        .collect::<Result<_>>()?;
    // index-order reduction keeps the sum independent of the thread count
    let circle_mean = values.iter().sum::<f64>() / n_points as f64;
    let center_value = fam.sum_n_d()?;
    Ok(MeanValueCheck {
        circle_mean,
        center_value,
        gap: (circle_mean - center_value).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{boost, sample_pseudo_unitary, u_theta};
    use crate::rng::RngStream;
    use proptest::prelude::*;

    fn sig(c: usize, d: usize) -> Signature {
        Signature::new(c, d).unwrap()
    }

    fn h(gamma: f64) -> PseudoUnitaryMatrix {
        boost(sig(1, 1), &[gamma]).unwrap()
    }

    fn scalar(m: &DomainPoint) -> C64 {
        m.matrix().get(0, 0)
    }

    fn random_family(s: Signature, n: usize, seed: u64) -> ProductFamily {
        let mut rng = RngStream::new(seed).rng();
        let factors = (0..n)
            .map(|_| sample_pseudo_unitary(s, 1.5, &mut rng).unwrap())
            .collect();
        ProductFamily::new(factors).unwrap()
    }

    #[test]
    fn domain_point_rejects_boundary() {
        assert!(DomainPoint::new(ComplexMatrix::from_real(1, 1, &[1.0]).unwrap()).is_err());
        let p = DomainPoint::new(ComplexMatrix::from_real(1, 1, &[0.6]).unwrap()).unwrap();
        assert!((p.slack() - 0.64).abs() < 1e-15);
    }

    #[test]
    fn moebius_examples() {
        let s = sig(2, 1);
        let id = PseudoUnitaryMatrix::new(ComplexMatrix::identity(3), s).unwrap();
        let m = DomainPoint::new(ComplexMatrix::from_real(2, 1, &[0.3, -0.2]).unwrap()).unwrap();
        assert_eq!(moebius_apply(&id, &m).unwrap().matrix(), m.matrix());

        let zero = DomainPoint::origin(sig(1, 1));
        let img = moebius_apply(&h(2f64.ln()), &zero).unwrap();
        assert!((scalar(&img) - C64::new(0.6, 0.0)).norm() < 1e-15);

        let theta = 0.3;
        let m = DomainPoint::new(ComplexMatrix::from_real(1, 1, &[0.4]).unwrap()).unwrap();
        let img = moebius_apply(&u_theta(sig(1, 1), theta), &m).unwrap();
        let expect = C64::from_polar(0.4, 2.0 * std::f64::consts::PI * theta);
        assert!((scalar(&img) - expect).norm() < 1e-15);
        assert!((img.slack() - m.slack()).abs() < 1e-15);
    }

    #[test]
    fn moebius_rejects_wrong_shape() {
        let m = DomainPoint::origin(sig(2, 1));
        assert!(moebius_apply(&h(0.1), &m).is_err());
    }

    #[test]
    fn product_eval_examples() {
        let t = random_family(sig(2, 1), 1, 4);
        assert_eq!(&product_eval(&t, C64::new(1.0, 0.0)), t.factors()[0].matrix());

        let d0 = product_eval(&t, C64::new(0.0, 0.0));
        let (_, _, c, d) = t.factors()[0].blocks();
        let mut expect = ComplexMatrix::zeros(3, 3);
        expect.set_block(2, 0, &c);
        expect.set_block(2, 2, &d);
        assert!((&d0 - &expect).frobenius_norm() < 1e-15);

        let fam = ProductFamily::new(vec![h(2f64.ln()), h(2f64.ln())]).unwrap();
        let p = product_eval(&fam, C64::new(1.0, 0.0));
        let expect = ComplexMatrix::from_real(2, 2, &[2.125, 1.875, 1.875, 2.125]).unwrap();
        assert!((&p - &expect).frobenius_norm() < 1e-14);

        let theta = 0.17;
        let fam = random_family(sig(3, 2), 3, 8);
        let on_circle = product_eval(&fam, C64::from_polar(1.0, 2.0 * std::f64::consts::PI * theta));
        let u = u_theta(sig(3, 2), theta);
        let mut direct = ComplexMatrix::identity(5);
        for t in fam.factors() {
            direct = &(&direct * u.matrix()) * t.matrix();
        }
        assert!((&on_circle - &direct).frobenius_norm() < 1e-12 * direct.frobenius_norm());
    }

    #[test]
    fn family_rejects_mixed_signatures() {
        let a = h(0.1);
        let b = PseudoUnitaryMatrix::new(ComplexMatrix::identity(3), sig(2, 1)).unwrap();
        assert!(ProductFamily::new(vec![a, b]).is_err());
        assert!(ProductFamily::new(vec![]).is_err());
    }

    #[test]
    fn fixed_point_at_origin_is_zero() {
        let fam = random_family(sig(3, 2), 3, 2);
        let fp = fixed_point(&fam, C64::new(0.0, 0.0), 1e-12, 100_000).unwrap();
        assert_eq!(fp.m_star.matrix().max_abs(), 0.0);
        assert!((fp.log_abs_det - fam.sum_n_d().unwrap()).abs() < 1e-10);
    }

    #[test]
    fn fixed_point_scalar_oracle() {
        // sinh γ M² + 0.5 cosh γ M − 0.5 sinh γ = 0 for γ = ln 2
        let fam = ProductFamily::new(vec![h(2f64.ln())]).unwrap();
        let fp = fixed_point(&fam, C64::new(0.5, 0.0), 1e-12, 100_000).unwrap();
        let expect = (-0.625 + 1.515625f64.sqrt()) / 1.5;
        assert!((scalar(&fp.m_star) - C64::new(expect, 0.0)).norm() < 1e-11);
        assert!((expect - 0.4040715).abs() < 1e-6);
        assert!(fp.residual <= 1e-12 * (1.0 + fp.m_star.matrix().frobenius_norm()));
    }

    #[test]
    fn fixed_point_for_unitary_stays_at_origin() {
        let u = PseudoUnitaryMatrix::new(
            ComplexMatrix::from_diagonal(&[C64::from_polar(1.0, 0.7), C64::new(1.0, 0.0)]),
            sig(1, 1),
        )
        .unwrap();
        let fam = ProductFamily::new(vec![u]).unwrap();
        let fp = fixed_point(&fam, C64::new(0.9, 0.0), 1e-12, 100_000).unwrap();
        assert_eq!(fp.m_star.matrix().max_abs(), 0.0);
        assert_eq!(fp.log_abs_det, 0.0);
    }

    #[test]
    fn fixed_point_rejects_boundary_and_stalls_loudly() {
        let fam = ProductFamily::new(vec![h(1.0)]).unwrap();
        assert!(fixed_point(&fam, C64::new(1.0, 0.0), 1e-12, 10).is_err());
        assert!(fixed_point(&fam, C64::new(0.5, 0.0), 0.0, 10).is_err());
        assert!(matches!(
            fixed_point(&fam, C64::new(0.0, 0.99), 1e-14, 3),
            Err(Error::FixedPointStalled { iterations: 3, .. })
        ));
    }

    #[test]
    fn spectral_radius_and_wedge_norm_examples() {
        assert!((spectral_radius_wedge(&ComplexMatrix::identity(4), 3).unwrap() - 1.0).abs() < 1e-15);
        assert!((spectral_radius_wedge(h(2f64.ln()).matrix(), 1).unwrap() - 2.0).abs() < 1e-14);
        let d = ComplexMatrix::from_real_diagonal(&[3.0, 2.0, 0.1]);
        assert!((spectral_radius_wedge(&d, 2).unwrap() - 6.0).abs() < 1e-14);
        assert!(spectral_radius_wedge(&d, 4).is_err());

        let u = u_theta(sig(2, 1), 0.3);
        assert!(wedge_log_norm(u.matrix(), 2).unwrap().abs() < 1e-15);
        assert!((wedge_log_norm(h(2f64.ln()).matrix(), 1).unwrap() - 2f64.ln()).abs() < 1e-14);
        assert!(wedge_log_norm(h(2f64.ln()).matrix(), 2).unwrap().abs() < 1e-14);
    }

    #[test]
    fn mean_value_examples() {
        let u = PseudoUnitaryMatrix::new(
            ComplexMatrix::from_diagonal(&[C64::from_polar(1.0, 0.2), C64::from_polar(1.0, -1.0)]),
            sig(1, 1),
        )
        .unwrap();
        let mv = mean_value_check(&ProductFamily::new(vec![u]).unwrap(), 0.5, 64).unwrap();
        assert!(mv.circle_mean.abs() < 1e-14 && mv.center_value.abs() < 1e-14);

        let fam = ProductFamily::new(vec![h(2f64.ln())]).unwrap();
        let mv = mean_value_check(&fam, 0.5, 256).unwrap();
        assert!(mv.gap <= 1e-10);
        assert!((mv.center_value - 1.25f64.ln()).abs() < 1e-14);

        let fam = ProductFamily::new(vec![h(2f64.ln()), h(3f64.ln())]).unwrap();
        let mv = mean_value_check(&fam, 0.9, 1024).unwrap();
        let expect = 1.25f64.ln() + (5.0f64 / 3.0).ln();
        assert!((mv.center_value - expect).abs() < 1e-14);
        assert!((expect - 0.733969).abs() < 1e-6);
        assert!(mv.gap <= 1e-8, "gap {}", mv.gap);
    }

    #[test]
    fn mean_value_gap_shrinks_under_doubling() {
        let fam = random_family(sig(2, 2), 3, 17);
        let mut last = f64::INFINITY;
        for n in [8, 32, 128, 512] {
            let gap = mean_value_check(&fam, 0.6, n).unwrap().gap;
            assert!(gap <= last.max(1e-13), "n = {n}: gap {gap} after {last}");
            last = gap;
        }
        assert!(last < 1e-9);
    }

    #[test]
    fn mean_value_rejects_bad_settings() {
        let fam = ProductFamily::new(vec![h(0.3)]).unwrap();
        assert!(mean_value_check(&fam, 1.0, 64).is_err());
        assert!(mean_value_check(&fam, 0.5, 48).is_err());
        assert!(mean_value_check(&fam, 0.5, 4).is_err());
    }

    #[test]
    fn restriction_matches_spectral_radius() {
        for (c, d) in [(1, 1), (2, 1), (2, 2), (3, 2)] {
            for n in 1..=3 {
                let fam = random_family(sig(c, d), n, 50 + (c * 10 + d) as u64 * 7 + n as u64);
                for z in [C64::new(0.3, 0.0), C64::new(0.0, 0.5), C64::new(-0.7, 0.0), C64::from_polar(0.95, 2.0)] {
                    let fp = fixed_point(&fam, z, 1e-12, 100_000).unwrap();
                    let rho = log_spectral_radius_wedge(&product_eval(&fam, z), d).unwrap();
                    assert!((fp.log_abs_det - rho).abs() < 1e-8, "({c},{d}) n={n} z={z}: {} vs {rho}", fp.log_abs_det);
                }
            }
        }
    }

    #[test]
    fn iterates_contract_monotonically_after_burn_in() {
        let fam = random_family(sig(2, 2), 2, 77);
        let dz = product_eval(&fam, C64::new(0.4, 0.3));
        let mut m = ComplexMatrix::zeros(2, 2);
        let mut deltas = Vec::new();
        for _ in 0..40 {
            let next = moebius_raw(&dz, fam.signature(), &m).unwrap();
            deltas.push((&next - &m).max_abs());
            m = next;
        }
        for w in deltas[10..].windows(2) {
            assert!(w[1] <= w[0] || w[1] < 1e-14, "{} then {}", w[0], w[1]);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn composition_law_and_chart_equivariance(seed in any::<u64>(), c in 1usize..4, d in 1usize..3) {
            let s = sig(c, d);
            let mut rng = RngStream::new(seed).rng();
            let t1 = sample_pseudo_unitary(s, 1.0, &mut rng).unwrap();
            let t2 = sample_pseudo_unitary(s, 1.0, &mut rng).unwrap();
            let m0 = sample_pseudo_unitary(s, 1.0, &mut rng).unwrap();
            let m = moebius_apply(&m0, &DomainPoint::origin(s)).unwrap();
            let lhs = moebius_apply(&t1.compose(&t2).unwrap(), &m).unwrap();
            let rhs = moebius_apply(&t1, &moebius_apply(&t2, &m).unwrap()).unwrap();
            prop_assert!((lhs.matrix() - rhs.matrix()).frobenius_norm() <= 1e-10);
            prop_assert!(lhs.slack() > 0.0);

            // span(T (M;1)) == span((T·M; 1)) via orthogonal projectors
            let projector = |f: &ComplexMatrix| {
                let q = f.qr_positive().unwrap().q;
                &q * &q.adjoint()
            };
            let img = t1.matrix() * &m.frame();
            let chart = moebius_apply(&t1, &m).unwrap().frame();
            prop_assert!((&projector(&img) - &projector(&chart)).frobenius_norm() <= 1e-9);
        }
    }
}
