//! Cocycles `(f, A)` over three base dynamics, and estimation of the sum of
//! the top `k` Lyapunov exponents `L^k = lim (1/n) ln ‖Λ^k A_n‖`.
//!
//! The estimator pushes a `k`-frame through the cocycle and re-orthonormalizes
//! it with a positive-diagonal QR at every step; the per-step growth is
//! `Σ ln R_ii`. The frame starts at the last `k` basis vectors, the center of
//! the classical domain.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{cayley, n_r, schrodinger_transfer, Group};
use crate::moebius::{log_spectral_radius_wedge, ProductFamily};
use crate::numkernel::{ComplexMatrix, C64};
use crate::rng::RngStream;

/// Fractional part of the golden mean, the default rotation number.
pub const GOLDEN_ALPHA: f64 = 0.618_033_988_749_894_9;

/// Number of batches used for the batch-means standard error.
pub const BATCHES: usize = 50;

/// Default number of discarded transient steps.
pub const DEFAULT_BURN_IN: usize = 1_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Dynamics {
    /// Deterministic cycle through table indices.
    Periodic { order: Vec<usize> },
    /// Independent draws of table indices.
    Iid { weights: Vec<f64> },
    /// `x ↦ x + α mod 1`; α is assumed irrational, which is not checked.
    TorusRotation {
        #[serde(default = "golden_alpha")]
        alpha: f64,
        #[serde(default)]
        x0: f64,
    },
}

fn golden_alpha() -> f64 {
    GOLDEN_ALPHA
}

impl Dynamics {
    pub fn validate(&self) -> Result<()> {
        match self {
            Dynamics::Periodic { order } if order.is_empty() => {
                Err(Error::InvalidArgument("periodic orbit must be nonempty".into()))
            }
            Dynamics::Iid { weights } => {
                let total: f64 = weights.iter().sum();
                if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-12 {
                    Err(Error::InvalidArgument(format!(
                        "iid weights must be a probability vector, sum is {total}"
                    )))
                } else {
                    Ok(())
                }
            }
            Dynamics::TorusRotation { alpha, x0 } => {
                if !(*alpha > 0.0 && *alpha < 1.0) || !(*x0 >= 0.0 && *x0 < 1.0) {
                    Err(Error::InvalidArgument(format!(
                        "torus rotation needs alpha in (0,1) and x0 in [0,1), got {alpha}, {x0}"
                    )))
                } else {
                    Ok(())
                }
            }
            Dynamics::Periodic { .. } => Ok(()),
        }
    }

    fn symbols_needed(&self) -> Option<usize> {
        match self {
            Dynamics::Periodic { order } => order.iter().max().map(|m| m + 1),
            Dynamics::Iid { weights } => Some(weights.len()),
            Dynamics::TorusRotation { .. } => None,
        }
    }
}

/// `x ↦ A(x)` on the circle `[0, 1)`.
pub type MatrixField = Arc<dyn Fn(f64) -> Result<ComplexMatrix> + Send + Sync>;

#[derive(Clone)]
pub enum Generator {
    /// One matrix per symbol, for periodic and iid dynamics.
    Table(Vec<ComplexMatrix>),
    /// A matrix-valued function, for the torus rotation.
    Field(MatrixField),
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Table(t) => f.debug_tuple("Table").field(t).finish(),
            Generator::Field(_) => f.write_str("Field(<fn>)"),
        }
    }
}

/// Number of points at which a [`Generator::Field`] is spot-certified.
const FIELD_PROBES: usize = 16;

#[derive(Clone, Debug)]
pub struct CocycleSpec {
    dynamics: Dynamics,
    generator: Generator,
    group: Group,
    premultiplier: Option<ComplexMatrix>,
}

impl CocycleSpec {
    pub fn new(dynamics: Dynamics, generator: Generator, group: Group) -> Result<Self> {
        dynamics.validate()?;
        match (&generator, dynamics.symbols_needed()) {
            (Generator::Table(table), Some(needed)) => {
                if table.len() < needed || table.is_empty() {
                    return Err(Error::InvalidArgument(format!(
                        "dynamics uses {needed} symbols but the table has {}",
                        table.len()
                    )));
                }
                if matches!(dynamics, Dynamics::Iid { .. }) && table.len() != needed {
                    return Err(Error::InvalidArgument(format!(
                        "{needed} iid weights for a table of {} matrices",
                        table.len()
                    )));
                }
                for t in table {
                    group.certify(t)?;
                }
            }
            (Generator::Field(field), None) => {
                for k in 0..FIELD_PROBES {
                    group.certify(&field(k as f64 / FIELD_PROBES as f64)?)?;
                }
            }
            (Generator::Table(_), None) => {
                return Err(Error::InvalidArgument(
                    "torus rotation needs a matrix field, not a table".into(),
                ))
            }
            (Generator::Field(_), Some(_)) => {
                return Err(Error::InvalidArgument(
                    "finite dynamics need a matrix table, not a field".into(),
                ))
            }
        }
        Ok(Self {
            dynamics,
            generator,
            group,
            premultiplier: None,
        })
    }

    /// Constant cocycle `A(x) = t`.
    pub fn constant(t: ComplexMatrix, group: Group) -> Result<Self> {
        Self::new(Dynamics::Periodic { order: vec![0] }, Generator::Table(vec![t]), group)
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn premultiplier(&self) -> Option<&ComplexMatrix> {
        self.premultiplier.as_ref()
    }

    /// Replace `A` by `P A`; `P` must lie in the same group.
    pub fn with_premultiplier(mut self, p: ComplexMatrix) -> Result<Self> {
        self.group.certify(&p)?;
        self.premultiplier = Some(p);
        Ok(self)
    }

    /// The rotated cocycle `U_θ A` (or `R_θ A`), composed with any existing premultiplier.
    pub fn rotated(&self, theta: f64) -> Self {
        let rot = self.group.rotation(theta);
        let premultiplier = Some(match &self.premultiplier {
            Some(p) => &rot * p,
            None => rot,
        });
        Self {
            premultiplier,
            ..self.clone()
        }
    }

    fn apply_premultiplier(&self, t: ComplexMatrix) -> ComplexMatrix {
        match &self.premultiplier {
            Some(p) => p * &t,
            None => t,
        }
    }

    /// Table entries with the premultiplier applied.
    fn effective_table(&self) -> Option<Vec<ComplexMatrix>> {
        match &self.generator {
            Generator::Table(t) => Some(t.iter().map(|m| self.apply_premultiplier(m.clone())).collect()),
            Generator::Field(_) => None,
        }
    }

    fn field_at(&self, x: f64) -> Result<ComplexMatrix> {
        match &self.generator {
            Generator::Field(f) => Ok(self.apply_premultiplier(f(x)?)),
            Generator::Table(_) => unreachable!("validated at construction"),
        }
    }

    /// The period-`n` orbit matrices in application order, for periodic dynamics.
    pub fn periodic_orbit(&self) -> Option<Vec<ComplexMatrix>> {
        match &self.dynamics {
            Dynamics::Periodic { order } => {
                let table = self.effective_table()?;
                Some(order.iter().map(|&i| table[i].clone()).collect())
            }
            _ => None,
        }
    }

    /// The factors of the period map as a [`ProductFamily`], ordered so that
    /// `D(1) = A(f^{n-1}x) ⋯ A(x)` (last applied first). `U(c,d)` only.
    pub fn period_family(&self) -> Result<ProductFamily> {
        let Group::PseudoUnitary { sig } = self.group else {
            return Err(Error::InvalidArgument("period family needs a U(c,d) cocycle".into()));
        };
        let orbit = self
            .periodic_orbit()
            .ok_or_else(|| Error::InvalidArgument("period family needs periodic dynamics".into()))?;
        let factors = orbit
            .into_iter()
            .rev()
            .map(|t| crate::group::PseudoUnitaryMatrix::new(t, sig))
            .collect::<Result<Vec<_>>>()?;
        ProductFamily::new(factors)
    }

    /// `∫ N_k(A(x)) dμ(x)`; the torus integral uses `torus_points` equispaced nodes.
    pub fn mean_n(&self, k: usize, torus_points: usize) -> Result<f64> {
        match &self.dynamics {
            Dynamics::Periodic { order } => {
                let table = self.effective_table().expect("table dynamics");
                let total: f64 = order.iter().map(|&i| n_r(&table[i], k)).sum::<Result<f64>>()?;
                Ok(total / order.len() as f64)
            }
            Dynamics::Iid { weights } => {
                let table = self.effective_table().expect("table dynamics");
                weights
                    .iter()
                    .zip(&table)
                    .map(|(w, t)| Ok(w * n_r(t, k)?))
                    .sum()
            }
            Dynamics::TorusRotation { .. } => {
                if torus_points == 0 {
                    return Err(Error::InvalidArgument("torus quadrature needs points".into()));
                }
                let total: f64 = (0..torus_points)
                    .map(|j| n_r(&self.field_at(j as f64 / torus_points as f64)?, k))
                    .sum::<Result<f64>>()?;
                Ok(total / torus_points as f64)
            }
        }
    }

    /// Unitary conjugation of an `HSp(2d)` cocycle into `U(d,d)` by the Cayley factor.
    pub fn cayley_conjugate(&self) -> Result<Self> {
        let Group::HermitianSymplectic { d } = self.group else {
            return Err(Error::InvalidArgument("Cayley conjugation needs an HSp(2d) cocycle".into()));
        };
        let c = cayley(d);
        let conj = move |t: &ComplexMatrix| &(&c * t) * &c.adjoint();
        let generator = match &self.generator {
            Generator::Table(t) => Generator::Table(t.iter().map(&conj).collect()),
            Generator::Field(f) => {
                let f = f.clone();
                let conj = conj.clone();
                Generator::Field(Arc::new(move |x| Ok(conj(&f(x)?))))
            }
        };
        let group = Group::PseudoUnitary {
            sig: crate::group::Signature::new(d, d)?,
        };
        let mut out = Self::new(self.dynamics.clone(), generator, group)?;
        if let Some(p) = &self.premultiplier {
            out = out.with_premultiplier(conj(p))?;
        }
        Ok(out)
    }

    fn orbit<'a>(&'a self, stream: &RngStream) -> Result<Orbit<'a>> {
        let state = match &self.dynamics {
            Dynamics::Periodic { order } => OrbitState::Periodic {
                order,
                table: self.effective_table().expect("table dynamics"),
                pos: 0,
            },
            Dynamics::Iid { weights } => OrbitState::Iid {
                table: self.effective_table().expect("table dynamics"),
                sampler: WeightedIndex::new(weights)
                    .map_err(|e| Error::InvalidArgument(format!("iid weights: {e}")))?,
                rng: stream.rng(),
            },
            Dynamics::TorusRotation { alpha, x0 } => OrbitState::Torus {
                alpha: *alpha,
                x0: *x0,
                step: 0,
            },
        };
        Ok(Orbit { spec: self, state })
    }
}

enum OrbitState<'a> {
    Periodic {
        order: &'a [usize],
        table: Vec<ComplexMatrix>,
        pos: usize,
    },
    Iid {
        table: Vec<ComplexMatrix>,
        sampler: WeightedIndex<f64>,
        rng: ChaCha8Rng,
    },
    Torus {
        alpha: f64,
        x0: f64,
        step: u64,
    },
}

/// Walks the base orbit, yielding `P A(f^t x)` for `t = 0, 1, …`.
struct Orbit<'a> {
    spec: &'a CocycleSpec,
    state: OrbitState<'a>,
}

impl Orbit<'_> {
    fn next_matrix(&mut self) -> Result<ComplexMatrix> {
        match &mut self.state {
            OrbitState::Periodic { order, table, pos } => {
                let m = table[order[*pos]].clone();
                *pos = (*pos + 1) % order.len();
                Ok(m)
            }
            OrbitState::Iid { table, sampler, rng } => Ok(table[sampler.sample(rng)].clone()),
            OrbitState::Torus { alpha, x0, step } => {
                // closed form keeps every replica on exactly the same orbit
                let x = (*x0 + *step as f64 * *alpha).rem_euclid(1.0);
                *step += 1;
                self.spec.field_at(x)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LyapunovEstimate {
    pub d: usize,
    pub value: f64,
    pub std_error: f64,
    pub steps: usize,
    pub batch_means: Vec<f64>,
}

/// Estimate of `L^k(f, A)` from one orbit: `burn_in` transient steps, then
/// `steps` accumulated steps split into [`BATCHES`] batches.
pub fn lyapunov_topd(
    spec: &CocycleSpec,
    k: usize,
    steps: usize,
    burn_in: usize,
    stream: &RngStream,
) -> Result<LyapunovEstimate> {
    let n = spec.group.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("wedge order must be in 1..={n}, got {k}")));
    }
    if steps < BATCHES || steps < 10 * burn_in {
        return Err(Error::InvalidArgument(format!(
            "need steps >= 10 * burn_in and steps >= {BATCHES}, got steps {steps}, burn_in {burn_in}"
        )));
    }
    let mut orbit = spec.orbit(stream)?;
    let mut frame = ComplexMatrix::zeros(n, k);
    frame.set_block(n - k, 0, &ComplexMatrix::identity(k));

    let mut step_once = |frame: &mut ComplexMatrix, step: usize| -> Result<f64> {
        let a = orbit.next_matrix()?;
        let qr = (&a * frame)
            .qr_positive()
            .map_err(|_| Error::FrameCollapse { step })?;
        *frame = qr.q;
        Ok((0..k).map(|i| qr.r.get(i, i).re.ln()).sum())
    };

    for s in 0..burn_in {
        step_once(&mut frame, s)?;
    }
    let mut batch_sums = vec![0.0; BATCHES];
    let mut batch_len = vec![0usize; BATCHES];
    for s in 0..steps {
        let b = s * BATCHES / steps;
        batch_sums[b] += step_once(&mut frame, burn_in + s)?;
        batch_len[b] += 1;
    }
    let value = batch_sums.iter().sum::<f64>() / steps as f64;
    let batch_means: Vec<f64> = batch_sums
        .iter()
        .zip(&batch_len)
        .map(|(s, &l)| s / l as f64)
        .collect();
    let mean = batch_means.iter().sum::<f64>() / BATCHES as f64;
    let var = batch_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    Ok(LyapunovEstimate {
        d: k,
        value,
        std_error: (var / BATCHES as f64).sqrt(),
        steps,
        batch_means,
    })
}

/// `(1/n) ln ρ(Λ^k(Tₙ ⋯ T₁))` for factors listed in application order.
pub fn exact_periodic_lyapunov_matrices(orbit: &[ComplexMatrix], k: usize) -> Result<f64> {
    let first = orbit
        .first()
        .ok_or_else(|| Error::InvalidArgument("periodic orbit must be nonempty".into()))?;
    let mut period = first.clone();
    for t in &orbit[1..] {
        period = t * &period;
    }
    Ok(log_spectral_radius_wedge(&period, k)? / orbit.len() as f64)
}

/// Exact `L^k` of the periodic cocycle visiting `T₁, T₂, …, Tₙ` in turn.
pub fn exact_periodic_lyapunov(fam: &ProductFamily, k: usize) -> Result<f64> {
    let orbit: Vec<ComplexMatrix> = fam.factors().iter().map(|t| t.matrix().clone()).collect();
    exact_periodic_lyapunov_matrices(&orbit, k)
}

/// Hopping or potential of a strip operator, as a function of the base point.
#[derive(Clone)]
pub enum StripField {
    Constant(ComplexMatrix),
    /// One value per symbol of finite dynamics.
    Table(Vec<ComplexMatrix>),
    /// A function of the torus coordinate.
    Field(MatrixField),
}

impl StripField {
    fn dim(&self) -> Result<usize> {
        Ok(match self {
            StripField::Constant(m) => m.rows(),
            StripField::Table(t) => t
                .first()
                .ok_or_else(|| Error::InvalidArgument("empty strip table".into()))?
                .rows(),
            StripField::Field(f) => f(0.0)?.rows(),
        })
    }

    fn at_symbol(&self, s: usize) -> Result<ComplexMatrix> {
        match self {
            StripField::Constant(m) => Ok(m.clone()),
            StripField::Table(t) => t
                .get(s)
                .cloned()
                .ok_or_else(|| Error::InvalidArgument(format!("strip table has no entry {s}"))),
            StripField::Field(_) => Err(Error::InvalidArgument(
                "finite dynamics need constant or tabulated strip data".into(),
            )),
        }
    }

    fn at_point(&self, x: f64) -> Result<ComplexMatrix> {
        match self {
            StripField::Constant(m) => Ok(m.clone()),
            StripField::Field(f) => f(x),
            StripField::Table(_) => Err(Error::InvalidArgument(
                "torus rotation needs constant or functional strip data".into(),
            )),
        }
    }

    fn table_len(&self) -> Option<usize> {
        match self {
            StripField::Table(t) => Some(t.len()),
            _ => None,
        }
    }
}

/// Quasi-periodic strip potential `V(x)_jj = λ cos 2π(x + j/d)` with a
/// hermitian nearest-neighbour transverse coupling `t⊥`.
pub fn cosine_potential(d: usize, coupling: f64, transverse: f64) -> MatrixField {
    Arc::new(move |x| {
        Ok(ComplexMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(coupling * (2.0 * PI * (x + i as f64 / d as f64)).cos(), 0.0)
            } else if i.abs_diff(j) == 1 {
                C64::new(transverse, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    })
}

/// Transfer-matrix cocycle `x ↦ T^E(x)` of a Schrödinger operator on a strip of width `d`.
pub fn schrodinger_cocycle(
    d: usize,
    hopping: StripField,
    potential: StripField,
    e: f64,
    dynamics: Dynamics,
) -> Result<CocycleSpec> {
    if hopping.dim()? != d || potential.dim()? != d {
        return Err(Error::InvalidArgument(format!("strip data must be {d}x{d}")));
    }
    let group = Group::HermitianSymplectic { d };
    match &dynamics {
        Dynamics::TorusRotation { .. } => {
            let field: MatrixField = Arc::new(move |x| {
                schrodinger_transfer(&hopping.at_point(x)?, &potential.at_point(x)?, e)
            });
            CocycleSpec::new(dynamics, Generator::Field(field), group)
        }
        _ => {
            let symbols = dynamics
                .symbols_needed()
                .into_iter()
                .chain(hopping.table_len())
                .chain(potential.table_len())
                .max()
                .unwrap_or(1);
            let table = (0..symbols)
                .map(|s| schrodinger_transfer(&hopping.at_symbol(s)?, &potential.at_symbol(s)?, e))
                .collect::<Result<Vec<_>>>()?;
            CocycleSpec::new(dynamics, Generator::Table(table), group)
        }
    }
}
