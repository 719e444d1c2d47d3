//! θ-averaged identities.
//!
//! For a finite product `D(z) = B(z)T₁ ⋯ B(z)Tₙ` both `θ ↦ N_d(D(e^{2πiθ}))`
//! and `θ ↦ ln ρ(Λ^d D(e^{2πiθ}))` integrate to `Σ N_d(T_j)`. For a cocycle the
//! θ-average of `L^d(f, U_θ A)` equals `∫ N_d(A) dμ`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::{exact_periodic_lyapunov_matrices, lyapunov_topd, CocycleSpec, Dynamics};
use crate::error::{Error, Result};
use crate::group::{n_r, r_theta, Group};
use crate::moebius::{log_spectral_radius_wedge, product_eval, ProductFamily};
use crate::numkernel::{ComplexMatrix, C64};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSettings {
    pub n_start: usize,
    pub n_max: usize,
    pub tol: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            n_start: 64,
            n_max: 65_536,
            tol: 1e-8,
        }
    }
}

impl QuadratureSettings {
    pub fn validate(&self) -> Result<()> {
        if !self.n_start.is_power_of_two() || !self.n_max.is_power_of_two() || self.n_start > self.n_max {
            return Err(Error::InvalidArgument(format!(
                "quadrature grid sizes must be powers of two with n_start <= n_max, got {} and {}",
                self.n_start, self.n_max
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("quadrature tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactQuadrature,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThetaRow {
    pub theta: f64,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub method: Method,
    pub grid: usize,
    pub converged: bool,
    /// Aggregated standard error of `lhs`, Monte Carlo only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    /// Un-normalized `Σ_j N_d(T_j)` for periodic sweeps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_sum: Option<f64>,
    pub per_theta: Vec<ThetaRow>,
}

impl IdentityReport {
    fn new(lhs: f64, rhs: f64, method: Method, grid: usize, converged: bool, per_theta: Vec<ThetaRow>) -> Self {
        Self {
            lhs,
            rhs,
            gap: (lhs - rhs).abs(),
            method,
            grid,
            converged,
            std_error: None,
            raw_sum: None,
            per_theta,
        }
    }

    /// Gate: `gap ≤ tol` for quadrature, `gap ≤ max(tol, 3σ)` for Monte Carlo.
    pub fn passes(&self, tol: f64) -> bool {
        let slack = match self.method {
            Method::MonteCarlo => tol.max(3.0 * self.std_error.unwrap_or(0.0)),
            Method::ExactQuadrature => tol,
        };
        self.gap <= slack
    }

    /// Per-θ rows as CSV with header `theta,value,std_error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,value,std_error\n");
        for row in &self.per_theta {
            match row.std_error {
                Some(se) => writeln!(out, "{},{},{}", row.theta, row.value, se),
                None => writeln!(out, "{},{},", row.theta, row.value),
            }
            .expect("writing to a String");
        }
        out
    }
}

struct Quadrature {
    value: f64,
    grid: usize,
    converged: bool,
    rows: Vec<ThetaRow>,
}

/// Uniform rule on `[0,1)`, doubling until two successive changes fall below
/// `tol`. Each doubling evaluates only the new odd nodes.
fn doubling_quadrature<F>(f: F, n_start: usize, q: &QuadratureSettings) -> Result<Quadrature>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let eval = |n: usize, nodes: Vec<usize>| -> Result<Vec<f64>> {
        nodes.into_par_iter().map(|j| f(j as f64 / n as f64)).collect()
    };
    let mut n = n_start;
    let mut values = eval(n, (0..n).collect())?;
    let mut value = values.iter().sum::<f64>() / n as f64;
    let mut converged = false;
    let mut quiet = 0;
    while n < q.n_max {
        let odd = eval(2 * n, (0..n).map(|j| 2 * j + 1).collect())?;
        values = values.into_iter().zip(odd).flat_map(|(e, o)| [e, o]).collect();
        n *= 2;
        let next = values.iter().sum::<f64>() / n as f64;
        let change = (next - value).abs();
        value = next;
        // kinks make the error oscillate, so one small change is not enough
        quiet = if change < q.tol { quiet + 1 } else { 0 };
        if quiet == 2 {
            converged = true;
            break;
        }
    }
    let rows = values
        .into_iter()
        .enumerate()
        .map(|(j, v)| ThetaRow {
            theta: j as f64 / n as f64,
            value: v,
            std_error: None,
        })
        .collect();
    Ok(Quadrature {
        value,
        grid: n,
        converged,
        rows,
    })
}

fn circle(theta: f64) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * theta)
}

fn report_from(quad: Quadrature, rhs: f64) -> IdentityReport {
    IdentityReport::new(quad.value, rhs, Method::ExactQuadrature, quad.grid, quad.converged, quad.rows)
}

/// Both θ-integrals of a finite product: `(N_d form, ln ρ form)`.
pub fn product_identity(fam: &ProductFamily, q: &QuadratureSettings) -> Result<(IdentityReport, IdentityReport)> {
    q.validate()?;
    let d = fam.signature().d();
    let rhs = fam.sum_n_d()?;
    let n_form = doubling_quadrature(|t| n_r(&product_eval(fam, circle(t)), d), q.n_start, q)?;
    let rho_form = doubling_quadrature(
        |t| log_spectral_radius_wedge(&product_eval(fam, circle(t)), d),
        q.n_start,
        q,
    )?;
    Ok((report_from(n_form, rhs), report_from(rho_form, rhs)))
}

/// `R_θ T₁ R_θ T₂ ⋯ R_θ Tₙ`.
fn hsp_product(factors: &[ComplexMatrix], d: usize, theta: f64) -> ComplexMatrix {
    let r = r_theta(d, theta);
    let mut out = ComplexMatrix::identity(2 * d);
    for t in factors {
        out = &(&out * &r) * t;
    }
    out
}

/// [`product_identity`] for `HSp(2d)` factors with `R_θ` as the rotation family.
pub fn hsp_product_identity(
    factors: &[ComplexMatrix],
    d: usize,
    q: &QuadratureSettings,
) -> Result<(IdentityReport, IdentityReport)> {
    q.validate()?;
    if factors.is_empty() {
        return Err(Error::InvalidArgument("product family must be nonempty".into()));
    }
    let group = Group::HermitianSymplectic { d };
    for t in factors {
        group.certify(t)?;
    }
    let rhs = factors.iter().map(|t| n_r(t, d)).sum::<Result<f64>>()?;
    let n_form = doubling_quadrature(|t| n_r(&hsp_product(factors, d, t), d), q.n_start, q)?;
    let rho_form = doubling_quadrature(
        |t| log_spectral_radius_wedge(&hsp_product(factors, d, t), d),
        q.n_start,
        q,
    )?;
    Ok((report_from(n_form, rhs), report_from(rho_form, rhs)))
}

/// The Cayley-conjugated `U(d,d)` family `{C T_j C*}`.
pub fn cayley_family(factors: &[ComplexMatrix], d: usize) -> Result<ProductFamily> {
    let c = crate::group::cayley(d);
    let sig = crate::group::Signature::new(d, d)?;
    let conj = factors
        .iter()
        .map(|t| crate::group::PseudoUnitaryMatrix::new(&(&c * t) * &c.adjoint(), sig))
        .collect::<Result<Vec<_>>>()?;
    ProductFamily::new(conj)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSettings {
    pub theta_grid: usize,
    pub steps: usize,
    pub burn_in: usize,
    pub torus_points: usize,
    /// Doubling control for periodic dynamics, which start at `theta_grid` nodes.
    pub quadrature: QuadratureSettings,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            theta_grid: 64,
            steps: 200_000,
            burn_in: 1_000,
            torus_points: 256,
            quadrature: QuadratureSettings::default(),
        }
    }
}

/// Compares `∫₀¹ L^d(f, U_θ A) dθ` with `∫ N_d(A) dμ`.
///
/// Periodic dynamics are integrated exactly per θ with the doubling rule;
/// everything else uses one Lyapunov estimate per θ-node, node `j` driven by
/// `stream.fork(j)`.
pub fn hab_sweep(spec: &CocycleSpec, s: &SweepSettings, stream: &RngStream) -> Result<IdentityReport> {
    if s.theta_grid < 8 {
        return Err(Error::InvalidArgument(format!("theta_grid must be >= 8, got {}", s.theta_grid)));
    }
    let k = spec.group().top();
    let rhs = spec.mean_n(k, s.torus_points)?;
    if let Dynamics::Periodic { order } = spec.dynamics() {
        let q = QuadratureSettings {
            n_start: s.theta_grid,
            ..s.quadrature
        };
        q.validate()?;
        let quad = doubling_quadrature(
            |t| {
                let orbit = spec.rotated(t).periodic_orbit().expect("periodic dynamics");
                exact_periodic_lyapunov_matrices(&orbit, k)
            },
            q.n_start,
            &q,
        )?;
        let mut report = report_from(quad, rhs);
        report.raw_sum = Some(rhs * order.len() as f64);
        return Ok(report);
    }
    let g = s.theta_grid;
    let estimates = (0..g)
        .into_par_iter()
        .map(|j| {
            let theta = j as f64 / g as f64;
            lyapunov_topd(&spec.rotated(theta), k, s.steps, s.burn_in, &stream.fork(j as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    let lhs = estimates.iter().map(|e| e.value).sum::<f64>() / g as f64;
    let var: f64 = estimates.iter().map(|e| e.std_error * e.std_error).sum();
    let rows = estimates
        .iter()
        .enumerate()
        .map(|(j, e)| ThetaRow {
            theta: j as f64 / g as f64,
            value: e.value,
            std_error: Some(e.std_error),
        })
        .collect();
    let mut report = IdentityReport::new(lhs, rhs, Method::MonteCarlo, g, true, rows);
    report.std_error = Some(var.sqrt() / g as f64);
    Ok(report)
}
