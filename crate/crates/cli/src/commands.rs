use std::path::Path;

use hab_core::cocycle::{
    cosine_potential, exact_periodic_lyapunov_matrices, lyapunov_topd, schrodinger_cocycle, CocycleSpec, Dynamics,
    Generator, LyapunovEstimate, StripField,
};
use hab_core::group::{
    boost, certification_threshold, hyperbolic_decompose, n_r, sample_hsp, sample_pseudo_unitary, Group,
    HyperbolicDecomposition, PseudoUnitaryMatrix, Signature,
};
use hab_core::hab::{hab_sweep, hsp_product_identity, product_identity, IdentityReport};
use hab_core::json::MatrixLiteral;
use hab_core::moebius::{fixed_point, log_spectral_radius_wedge, mean_value_check, product_eval, MeanValueCheck, ProductFamily};
use hab_core::rng::RngStream;
use hab_core::{ComplexMatrix, C64};
use serde::Serialize;

use crate::config::{FamilyConfig, PotentialConfig, RunConfig};
use crate::output::Emitter;
use crate::{CliError, Outcome};

pub fn load_matrix(path: &Path) -> Result<ComplexMatrix, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let lit: MatrixLiteral =
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    Ok(ComplexMatrix::try_from(&lit).map_err(hab_core::Error::from)?)
}

fn gate(pass: bool) -> Outcome {
    if pass {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

/// The group a family or cocycle lives in: `HSp(2d)` if requested, else `U(c,d)`.
fn family_group(fam: &FamilyConfig, cfg: &RunConfig) -> Result<Group, CliError> {
    Ok(match fam.hsp {
        Some(d) => Group::HermitianSymplectic { d },
        None => Group::PseudoUnitary { sig: cfg.signature()? },
    })
}

fn build_matrices(fam: &FamilyConfig, group: Group, cfg: &RunConfig) -> Result<Vec<ComplexMatrix>, CliError> {
    let sources = [!fam.matrices.is_empty(), !fam.boosts.is_empty(), fam.random.is_some()];
    if sources.iter().filter(|s| **s).count() != 1 {
        return Err(CliError::Invalid(
            "give exactly one of `matrices`, `boosts` or `random` for the family".into(),
        ));
    }
    if !fam.matrices.is_empty() {
        return fam.matrices.iter().map(|p| load_matrix(p)).collect();
    }
    if !fam.boosts.is_empty() {
        let Group::PseudoUnitary { sig } = group else {
            return Err(CliError::Invalid("boosts are defined for U(c,d) families only".into()));
        };
        return Ok(fam
            .boosts
            .iter()
            .map(|g| boost(sig, g).map(PseudoUnitaryMatrix::into_matrix))
            .collect::<hab_core::Result<_>>()?);
    }
    let r = fam.random.expect("checked above");
    let mut rng = RngStream::new(cfg.seed()?).rng();
    (0..r.count)
        .map(|_| {
            Ok(match group {
                Group::PseudoUnitary { sig } => sample_pseudo_unitary(sig, r.gamma_max, &mut rng)?.into_matrix(),
                Group::HermitianSymplectic { d } => sample_hsp(d, r.gamma_max, &mut rng)?.into_matrix(),
            })
        })
        .collect()
}

fn product_family(matrices: Vec<ComplexMatrix>, sig: Signature) -> Result<ProductFamily, CliError> {
    let factors = matrices
        .into_iter()
        .map(|m| PseudoUnitaryMatrix::new(m, sig))
        .collect::<hab_core::Result<Vec<_>>>()?;
    Ok(ProductFamily::new(factors)?)
}

#[derive(Serialize)]
struct CheckOutput {
    group: Group,
    defect: f64,
    threshold: f64,
    pass: bool,
}

pub fn check(file: &Path, hsp: Option<usize>, cfg: &RunConfig, out: &Emitter) -> Result<Outcome, CliError> {
    let m = load_matrix(file)?;
    let group = match hsp {
        Some(d) => Group::HermitianSymplectic { d },
        None => Group::PseudoUnitary { sig: cfg.signature()? },
    };
    let defect = group.defect(&m)?;
    let threshold = certification_threshold(&m);
    let pass = defect <= threshold;
    println!("defect {defect:e}, threshold {threshold:e}: {}", if pass { "pass" } else { "fail" });
    out.json("check", &CheckOutput { group, defect, threshold, pass })?;
    Ok(gate(pass))
}

#[derive(Serialize)]
struct DecomposeOutput {
    decomposition: HyperbolicDecomposition,
    reconstruction_error: f64,
    pass: bool,
}

pub fn decompose(file: &Path, cfg: &RunConfig, out: &Emitter) -> Result<Outcome, CliError> {
    let t = PseudoUnitaryMatrix::new(load_matrix(file)?, cfg.signature()?)?;
    let decomposition = hyperbolic_decompose(&t)?;
    let reconstruction_error = (&decomposition.reconstruct() - t.matrix()).frobenius_norm();
    let pass = reconstruction_error <= 1e-9 * (1.0 + t.matrix().frobenius_norm());
    println!("gamma {:?}, reconstruction error {reconstruction_error:e}", decomposition.gamma);
    out.json(
        "decompose",
        &DecomposeOutput {
            decomposition,
            reconstruction_error,
            pass,
        },
    )?;
    Ok(gate(pass))
}

#[derive(Serialize)]
struct NfunOutput {
    r: usize,
    n_r: f64,
    singular_values: Vec<f64>,
}

pub fn nfun(file: &Path, r: Option<usize>, cfg: &RunConfig, out: &Emitter) -> Result<Outcome, CliError> {
    let m = load_matrix(file)?;
    let r = match r {
        Some(r) => r,
        None => cfg.signature()?.d(),
    };
    let value = n_r(&m, r)?;
    println!("N_{r} = {value}");
    out.json(
        "nfun",
        &NfunOutput {
            r,
            n_r: value,
            singular_values: m.singular_values().map_err(hab_core::Error::from)?,
        },
    )?;
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct IdentityOutput {
    tol: f64,
    n_form: IdentityReport,
    rho_form: IdentityReport,
    pass: bool,
}

pub fn product_identity_cmd(cfg: &RunConfig, out: &Emitter) -> Result<Outcome, CliError> {
    let group = family_group(&cfg.family, cfg)?;
    let matrices = build_matrices(&cfg.family, group, cfg)?;
    let (n_form, rho_form) = match group {
        Group::HermitianSymplectic { d } => hsp_product_identity(&matrices, d, &cfg.quadrature)?,
        Group::PseudoUnitary { sig } => product_identity(&product_family(matrices, sig)?, &cfg.quadrature)?,
    };
    let tol = cfg.tol();
    let pass = n_form.passes(tol) && rho_form.passes(tol);
    for (name, r) in [("N_d form", &n_form), ("ln rho form", &rho_form)] {
        println!(
            "{name}: lhs {} rhs {} gap {:e} grid {} converged {}",
            r.lhs, r.rhs, r.gap, r.grid, r.converged
        );
    }
    out.csv("product_identity_n_form", &n_form.to_csv())?;
    out.csv("product_identity_rho_form", &rho_form.to_csv())?;
    out.json(
        "product_identity",
        &IdentityOutput {
            tol,
            n_form,
            rho_form,
            pass,
        },
    )?;
    Ok(gate(pass))
}

#[derive(Serialize)]
struct FixedPointRow {
    z: [f64; 2],
    iterations: usize,
    log_abs_det: f64,
    log_spectral_radius: f64,
    gap: f64,
}

#[derive(Serialize)]
struct MeanValueOutput {
    tol: f64,
    circle: MeanValueCheck,
    fixed_points: Vec<FixedPointRow>,
    pass: bool,
}

pub fn mean_value(cfg: &RunConfig, out: &Emitter) -> Result<Outcome, CliError> {
    let sig = cfg.signature()?;
    let mv = &cfg.mean_value;
    let fam = product_family(build_matrices(&cfg.family, Group::PseudoUnitary { sig }, cfg)?, sig)?;
    let circle = mean_value_check(&fam, mv.radius, mv.n_points)?;
    let mut fixed_points = Vec::new();
    for &[re, im] in &mv.fixed_points {
        let z = C64::new(re, im);
        let fp = fixed_point(&fam, z, mv.fixed_point_tol, mv.max_iter)?;
        let rho = log_spectral_radius_wedge(&product_eval(&fam, z), sig.d())?;
        fixed_points.push(FixedPointRow {
            z: [re, im],
            iterations: fp.iterations,
            log_abs_det: fp.log_abs_det,
            log_spectral_radius: rho,
            gap: (fp.log_abs_det - rho).abs(),
        });
    }
    let tol = cfg.tol();
    let pass = circle.gap <= tol && fixed_points.iter().all(|r| r.gap <= tol);
    println!(
        "circle mean {} center {} gap {:e}; worst fixed-point gap {:e}",
        circle.circle_mean,
        circle.center_value,
        circle.gap,
        fixed_points.iter().map(|r| r.gap).fold(0.0, f64::max)
    );
    out.json(
        "mean_value",
        &MeanValueOutput {
            tol,
            circle,
            fixed_points,
            pass,
        },
    )?;
    Ok(gate(pass))
}

fn cocycle_spec(cfg: &RunConfig) -> Result<CocycleSpec, CliError> {
    let dynamics = cfg
        .cocycle
        .dynamics
        .clone()
        .ok_or_else(|| CliError::Invalid("`[cocycle.dynamics]` is required".into()))?;
    if matches!(dynamics, Dynamics::TorusRotation { .. }) {
        return Err(CliError::Invalid(
            "torus-rotation cocycles are built by the schrodinger subcommand".into(),
        ));
    }
    let group = family_group(&cfg.cocycle.table, cfg)?;
    let table = build_matrices(&cfg.cocycle.table, group, cfg)?;
    Ok(CocycleSpec::new(dynamics, Generator::Table(table), group)?)
}

fn batch_csv(est: &LyapunovEstimate) -> String {
    let mut s = String::from("batch,mean\n");
    for (i, m) in est.batch_means.iter().enumerate() {
        s.push_str(&format!("{i},{m}\n"));
    }
    s
}

/// Estimate, plus the exact value and a 3σ gate when the dynamics are periodic.
fn estimate_with_exact(
    spec: &CocycleSpec,
    k: usize,
    cfg: &RunConfig,
) -> Result<(LyapunovEstimate, Option<f64>, bool), CliError> {
    let l = &cfg.lyapunov;
    let est = lyapunov_topd(spec, k, l.steps, l.burn_in, &RngStream::new(cfg.seed()?))?;
    let exact = spec
        .periodic_orbit()
        .map(|orbit| exact_periodic_lyapunov_matrices(&orbit, k))
        .transpose()?;
    let pass = exact.is_none_or(|x| (est.value - x).abs() <= cfg.tol().max(3.0 * est.std_error));
    Ok((est, exact, pass))
}

#[derive(Serialize)]
struct LyapunovOutput {
    theta: f64,
    estimate: LyapunovEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<f64>,
    pass: bool,
}

pub fn lyapunov(cfg: &RunConfig, out: &Emitter) -> Result<Outcome, CliError> {
    let theta = cfg.lyapunov.theta;
    let spec = cocycle_spec(cfg)?.rotated(theta);
    let k = cfg.lyapunov.k.unwrap_or(spec.group().top());
    let (estimate, exact, pass) = estimate_with_exact(&spec, k, cfg)?;
    println!(
        "L^{k} = {} ± {}{}",
        estimate.value,
        estimate.std_error,
        exact.map(|x| format!(" (exact {x})")).unwrap_or_default()
    );
    out.csv("lyapunov", &batch_csv(&estimate))?;
    out.json(
        "lyapunov",
        &LyapunovOutput {
            theta,
            estimate,
            exact,
            pass,
        },
    )?;
    Ok(gate(pass))
}

fn print_report(name: &str, r: &IdentityReport) {
    println!(
        "{name}: lhs {} rhs {} gap {:e}{}",
        r.lhs,
        r.rhs,
        r.gap,
        r.std_error.map(|s| format!(" std_error {s:e}")).unwrap_or_default()
    );
}

pub fn hab_sweep_cmd(cfg: &RunConfig, out: &Emitter) -> Result<Outcome, CliError> {
    let spec = cocycle_spec(cfg)?;
    let report = hab_sweep(&spec, &cfg.sweep, &RngStream::new(cfg.seed()?))?;
    let pass = report.passes(cfg.tol());
    print_report("hab sweep", &report);
    out.csv("hab_sweep", &report.to_csv())?;
    out.json("hab_sweep", &report)?;
    Ok(gate(pass))
}

#[derive(Serialize)]
struct SchrodingerOutput {
    d: usize,
    energy: f64,
    estimate: LyapunovEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<f64>,
    mean_n_d: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<IdentityReport>,
    pass: bool,
}

pub fn schrodinger(cfg: &RunConfig, out: &Emitter) -> Result<Outcome, CliError> {
    let s = &cfg.schrodinger;
    let d = s.d;
    let diag = |v: &[f64]| -> Result<ComplexMatrix, CliError> {
        if v.len() != d {
            return Err(CliError::Invalid(format!("potential diagonal must have {d} entries")));
        }
        Ok(ComplexMatrix::from_real_diagonal(v))
    };
    let potential = match &s.potential {
        PotentialConfig::Zero => StripField::Constant(ComplexMatrix::zeros(d, d)),
        PotentialConfig::Diagonal { values } => StripField::Constant(diag(values)?),
        PotentialConfig::Anderson { values } => {
            StripField::Table(values.iter().map(|v| diag(v)).collect::<Result<_, _>>()?)
        }
        PotentialConfig::Cosine { coupling, transverse } => StripField::Field(cosine_potential(d, *coupling, *transverse)),
    };
    let hopping = StripField::Constant(ComplexMatrix::identity(d).scale_real(s.hopping));
    let dynamics = s.dynamics.clone().unwrap_or(Dynamics::Periodic { order: vec![0] });
    let spec = schrodinger_cocycle(d, hopping, potential, s.energy, dynamics)?;
    let (estimate, exact, mut pass) = estimate_with_exact(&spec, d, cfg)?;
    let mean_n_d = spec.mean_n(d, cfg.sweep.torus_points)?;
    let sweep = if s.sweep {
        let report = hab_sweep(&spec, &cfg.sweep, &RngStream::new(cfg.seed()?).fork(u64::MAX))?;
        pass &= report.passes(cfg.tol());
        print_report("hab sweep", &report);
        out.csv("schrodinger_sweep", &report.to_csv())?;
        Some(report)
    } else {
        None
    };
    println!(
        "L^{d}(E = {}) = {} ± {}, mean N_{d} = {mean_n_d}",
        s.energy, estimate.value, estimate.std_error
    );
    out.json(
        "schrodinger",
        &SchrodingerOutput {
            d,
            energy: s.energy,
            estimate,
            exact,
            mean_n_d,
            sweep,
            pass,
        },
    )?;
    Ok(gate(pass))
}

#[derive(Serialize)]
struct SampleOutput {
    group: Group,
    gamma_max: f64,
    defects: Vec<f64>,
    files: Vec<String>,
}

pub fn sample(cfg: &RunConfig, out: &Emitter) -> Result<Outcome, CliError> {
    let sc = &cfg.sample;
    let group = match sc.hsp {
        Some(d) => Group::HermitianSymplectic { d },
        None => Group::PseudoUnitary { sig: cfg.signature()? },
    };
    let stream = RngStream::new(cfg.seed()?);
    let mut defects = Vec::new();
    let mut files = Vec::new();
    for i in 0..sc.count {
        let mut rng = stream.fork(i as u64).rng();
        let m = match group {
            Group::PseudoUnitary { sig } => sample_pseudo_unitary(sig, sc.gamma_max, &mut rng)?.into_matrix(),
            Group::HermitianSymplectic { d } => sample_hsp(d, sc.gamma_max, &mut rng)?.into_matrix(),
        };
        defects.push(group.defect(&m)?);
        let name = format!("sample_{i}");
        out.matrix(&name, &m)?;
        files.push(format!("{name}.json"));
    }
    println!("{} samples, worst defect {:e}", sc.count, defects.iter().copied().fold(0.0, f64::max));
    out.json(
        "sample",
        &SampleOutput {
            group,
            gamma_max: sc.gamma_max,
            defects,
            files,
        },
    )?;
    Ok(Outcome::Pass)
}
