use hab_core::cocycle::{lyapunov_topd, CocycleSpec, Dynamics, Generator};
use hab_core::group::{
    d_block, hyperbolic_decompose, n_r, sample_hsp, sample_pseudo_unitary, Group, HermitianSymplecticMatrix,
    PseudoUnitaryMatrix, Signature,
};
use hab_core::hab::{hab_sweep, product_identity, QuadratureSettings, SweepSettings};
use hab_core::json::MatrixLiteral;
use hab_core::moebius::{mean_value_check, ProductFamily};
use hab_core::rng::RngStream;
use hab_core::ComplexMatrix;
use proptest::prelude::*;

fn family(seed: u64, c: usize, d: usize, n: usize, gamma_max: f64) -> ProductFamily {
    let s = Signature::new(c, d).unwrap();
    let mut rng = RngStream::new(seed).rng();
    ProductFamily::new((0..n).map(|_| sample_pseudo_unitary(s, gamma_max, &mut rng).unwrap()).collect()).unwrap()
}

#[test]
fn identity_rhs_is_the_mean_value_center() {
    for (c, d) in [(1, 1), (2, 1), (3, 2)] {
        let fam = family(10 + c as u64, c, d, 3, 1.0);
        let q = QuadratureSettings { n_start: 64, n_max: 128, tol: 1e-8 };
        let (nf, rho) = product_identity(&fam, &q).unwrap();
        let center = mean_value_check(&fam, 0.7, 256).unwrap().center_value;
        assert_eq!(nf.rhs, center);
        assert_eq!(rho.rhs, center);
    }
}

#[test]
fn decomposition_determinant_and_json_round_trip() {
    let s = Signature::new(3, 2).unwrap();
    let mut rng = RngStream::new(1).rng();
    for _ in 0..10 {
        let t = sample_pseudo_unitary(s, 2.0, &mut rng).unwrap();
        let text = serde_json::to_string(&MatrixLiteral::from(t.matrix())).unwrap();
        let back: MatrixLiteral = serde_json::from_str(&text).unwrap();
        let back = PseudoUnitaryMatrix::new(ComplexMatrix::try_from(&back).unwrap(), s).unwrap();
        assert_eq!(back.matrix(), t.matrix());
        let dec = hyperbolic_decompose(&back).unwrap();
        let log_cosh: f64 = dec.gamma.iter().map(|g| g.cosh().ln()).sum();
        assert!((log_cosh - n_r(t.matrix(), 2).unwrap()).abs() < 1e-10);
        assert!((d_block(&t).det().unwrap().norm().ln() - log_cosh).abs() < 1e-10);
    }
}

#[test]
fn cayley_image_of_hsp_is_pseudo_unitary() {
    let mut rng = RngStream::new(2).rng();
    for d in 1..=3 {
        let t: HermitianSymplecticMatrix = sample_hsp(d, 1.0, &mut rng).unwrap();
        let u = t.to_pseudo_unitary().unwrap();
        assert!((n_r(u.matrix(), d).unwrap() - n_r(t.matrix(), d).unwrap()).abs() < 1e-10);
    }
}

#[test]
fn periodic_sweep_matches_lyapunov_estimates() {
    let s = Signature::new(2, 1).unwrap();
    let mut rng = RngStream::new(6).rng();
    let table: Vec<ComplexMatrix> = (0..2).map(|_| sample_pseudo_unitary(s, 1.0, &mut rng).unwrap().into_matrix()).collect();
    let spec = CocycleSpec::new(Dynamics::Periodic { order: vec![0, 1] }, Generator::Table(table), Group::PseudoUnitary { sig: s }).unwrap();
    let settings = SweepSettings { theta_grid: 8, quadrature: QuadratureSettings { n_start: 8, n_max: 8, tol: 1e-8 }, ..Default::default() };
    let report = hab_sweep(&spec, &settings, &RngStream::new(0)).unwrap();
    for row in &report.per_theta {
        let est = lyapunov_topd(&spec.rotated(row.theta), 1, 20_000, 500, &RngStream::new(0)).unwrap();
        assert!((est.value - row.value).abs() <= (4.0 * est.std_error).max(1e-6), "θ = {}", row.theta);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn both_forms_agree(seed in any::<u64>(), n in 1usize..=2, wide in any::<bool>()) {
        let (c, d) = if wide { (2, 1) } else { (1, 1) };
        let fam = family(seed, c, d, n, 1.5);
        let q = QuadratureSettings { n_start: 64, n_max: 65_536, tol: 1e-6 };
        let (nf, rho) = product_identity(&fam, &q).unwrap();
        if nf.converged && rho.converged {
            prop_assert!((nf.lhs - rho.lhs).abs() <= 2e-6, "{} vs {}", nf.lhs, rho.lhs);
        }
        prop_assert!(nf.gap <= 1e-10);
        prop_assert!(rho.gap <= 1e-5);
    }
}
