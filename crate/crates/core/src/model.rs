//! Physical parameters, species and flux fields, initial profiles and the
//! scenario description shared by every driver.
//!
//! Species numbering follows the hydrogen mixture: 1 = H₂, 2 = H₂⁺, 3 = H.
//! Only the first two mole fractions and fluxes are stored; the third is
//! always recovered from the closures `ξ₃ = 1 − ξ₁ − ξ₂` and `N₃ = −N₁ − N₂`.

use nalgebra::Matrix3;

use crate::discretization::{cfl_max_dt, Grid1D};
use crate::error::{Error, Result};

/// Binary diffusion coefficients (cm²/s) and the derived coupling constants
/// `α = 1/D₁₂ − 1/D₁₃`, `β = 1/D₁₂ − 1/D₂₃` (s/cm²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureParams {
    d12: f64,
    d13: f64,
    d23: f64,
    alpha: f64,
    beta: f64,
}

impl MixtureParams {
    pub fn new(d12: f64, d13: f64, d23: f64) -> Result<Self> {
        for (name, d) in [("d12", d12), ("d13", d13), ("d23", d23)] {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::Domain(format!(
                    "diffusion coefficient {name} must be positive and finite, got {d}"
                )));
            }
        }
        Ok(Self {
            d12,
            d13,
            d23,
            alpha: 1.0 / d12 - 1.0 / d13,
            beta: 1.0 / d12 - 1.0 / d23,
        })
    }

    /// Semi-degenerate Duncan–Toor mixture (`D₁₂ = D₁₃`, so `α = 0`).
    pub fn uphill() -> Self {
        Self::new(0.833, 0.833, 0.168).expect("constants are valid")
    }

    /// Duncan–Toor mixture showing asymptotic diffusion.
    pub fn asymptotic() -> Self {
        Self::new(0.0833, 0.680, 0.168).expect("constants are valid")
    }

    /// H₂ / H₂⁺ / H mixture.
    pub fn hydrogen() -> Self {
        Self::new(0.34, 0.21, 0.21).expect("constants are valid")
    }

    /// All three coefficients equal: the system reduces to Fick's law.
    pub fn fickian(d: f64) -> Result<Self> {
        Self::new(d, d, d)
    }

    pub fn d12(&self) -> f64 {
        self.d12
    }

    pub fn d13(&self) -> f64 {
        self.d13
    }

    pub fn d23(&self) -> f64 {
        self.d23
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn d_max(&self) -> f64 {
        self.d12.max(self.d13).max(self.d23)
    }
}

/// Column-sum tolerance for flagging a rate matrix as conservative. Entries
/// span roughly 1e-13 to 1e-1, so this is absolute.
pub const CONSERVATION_TOL: f64 = 1e-18;

/// A 3×3 matrix of linear reaction rates `λᵢⱼ` (1/s), acting on `(ξ₁, ξ₂, ξ₃)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReactionMatrix {
    lambda: Matrix3<f64>,
    conservative: bool,
}

impl ReactionMatrix {
    pub fn new(lambda: Matrix3<f64>) -> Result<Self> {
        if lambda.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("reaction matrix has non-finite entries".into()));
        }
        let conservative = (0..3).all(|c| lambda.column(c).sum().abs() < CONSERVATION_TOL);
        Ok(Self {
            lambda,
            conservative,
        })
    }

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::new(Matrix3::from_fn(|i, j| rows[i][j]))
    }

    pub fn zero() -> Self {
        Self::new(Matrix3::zeros()).expect("zero matrix is finite")
    }

    /// Build one of the three hydrogen rate sets from its diagonal. Each
    /// species loses at rate `λᵢᵢ` and the loss is split evenly between the
    /// other two species, so every column sums to zero.
    pub fn from_diagonal_split(l11: f64, l22: f64, l33: f64) -> Result<Self> {
        Self::from_rows([
            [l11, -l22 / 2.0, -l33 / 2.0],
            [-l11 / 2.0, l22, -l33 / 2.0],
            [-l11 / 2.0, -l22 / 2.0, l33],
        ])
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.lambda
    }

    /// Zero-based entry `(i, j)`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.lambda[(i, j)]
    }

    pub fn is_conservative(&self) -> bool {
        self.conservative
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..3)
            .map(|i| self.lambda.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Hydrogen rate examples 1–3 (increasing stiffness).
pub fn reaction_matrix_example(id: u8) -> Result<ReactionMatrix> {
    match id {
        1 => ReactionMatrix::from_diagonal_split(-4.276e-7, -2.082e-13, -4.276e-7),
        2 => ReactionMatrix::from_diagonal_split(-4.276e-2, -2.082e-8, -4.276e-8),
        3 => ReactionMatrix::from_diagonal_split(-4.276e-1, -2.082e-2, -4.276e-2),
        other => Err(Error::Domain(format!(
            "reaction example id must be 1, 2 or 3, got {other}"
        ))),
    }
}

/// Ionisation and dissociation rates `(λ₁, λ₂)` at electron temperature `t_e` (K).
pub fn arrhenius_rates(t_e: f64) -> Result<(f64, f64)> {
    if !(t_e.is_finite() && t_e > 0.0) {
        return Err(Error::Domain(format!(
            "electron temperature must be positive, got {t_e}"
        )));
    }
    let lambda1 = 1.58e-15 * t_e.sqrt() * (-15.378 / t_e).exp();
    let lambda2 = 1.413e-15 * t_e * t_e * (-4.48 / t_e).exp();
    Ok((lambda1, lambda2))
}

/// Mole fractions `ξ₁, ξ₂` at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesField {
    xi1: Vec<f64>,
    xi2: Vec<f64>,
}

impl SpeciesField {
    pub fn new(xi1: Vec<f64>, xi2: Vec<f64>) -> Result<Self> {
        if xi1.len() != xi2.len() {
            return Err(Error::Shape {
                expected: xi1.len(),
                actual: xi2.len(),
            });
        }
        Ok(Self { xi1, xi2 })
    }

    pub fn uniform(nodes: usize, xi1: f64, xi2: f64) -> Self {
        Self {
            xi1: vec![xi1; nodes],
            xi2: vec![xi2; nodes],
        }
    }

    pub fn len(&self) -> usize {
        self.xi1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi1.is_empty()
    }

    pub fn xi1(&self) -> &[f64] {
        &self.xi1
    }

    pub fn xi2(&self) -> &[f64] {
        &self.xi2
    }

    pub fn xi3(&self, j: usize) -> f64 {
        1.0 - self.xi1[j] - self.xi2[j]
    }

    pub fn xi3_vec(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.xi3(j)).collect()
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.xi1, &mut self.xi2)
    }

    pub(crate) fn expect_len(&self, nodes: usize) -> Result<()> {
        if self.len() != nodes {
            return Err(Error::Shape {
                expected: nodes,
                actual: self.len(),
            });
        }
        Ok(())
    }
}

/// Molar fluxes `N₁, N₂` at the grid nodes; zero at both boundary nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxField {
    n1: Vec<f64>,
    n2: Vec<f64>,
}

impl FluxField {
    /// Builds a flux field, forcing the no-flux boundary values to zero.
    pub fn new(mut n1: Vec<f64>, mut n2: Vec<f64>) -> Result<Self> {
        if n1.len() != n2.len() {
            return Err(Error::Shape {
                expected: n1.len(),
                actual: n2.len(),
            });
        }
        if n1.len() < 2 {
            return Err(Error::Domain("a flux field needs at least two nodes".into()));
        }
        zero_boundaries(&mut n1);
        zero_boundaries(&mut n2);
        Ok(Self { n1, n2 })
    }

    pub fn zeros(nodes: usize) -> Self {
        Self {
            n1: vec![0.0; nodes],
            n2: vec![0.0; nodes],
        }
    }

    pub fn len(&self) -> usize {
        self.n1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n1.is_empty()
    }

    pub fn n1(&self) -> &[f64] {
        &self.n1
    }

    pub fn n2(&self) -> &[f64] {
        &self.n2
    }

    pub fn n3(&self, j: usize) -> f64 {
        -self.n1[j] - self.n2[j]
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.n1, &mut self.n2)
    }

    pub(crate) fn expect_len(&self, nodes: usize) -> Result<()> {
        if self.len() != nodes {
            return Err(Error::Shape {
                expected: nodes,
                actual: self.len(),
            });
        }
        Ok(())
    }
}

pub(crate) fn zero_boundaries(v: &mut [f64]) {
    if let Some(first) = v.first_mut() {
        *first = 0.0;
    }
    if let Some(last) = v.last_mut() {
        *last = 0.0;
    }
}

/// Initial mole-fraction profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// ξ₁ = 0.8 plateau, linear ramp on [0.25, 0.75), zero beyond; ξ₂ = 0.2.
    Uphill,
    /// ξ₁ = 0.8 on [0, 0.5), zero beyond; ξ₂ = 0.2.
    Step,
    /// Constant fractions everywhere (control runs).
    Uniform { xi1: f64, xi2: f64 },
}

impl Profile {
    pub fn xi1_at(&self, x: f64) -> f64 {
        match *self {
            Profile::Uphill if x < 0.25 => 0.8,
            Profile::Uphill if x < 0.75 => 1.6 * (0.75 - x),
            Profile::Uphill => 0.0,
            Profile::Step if x < 0.5 => 0.8,
            Profile::Step => 0.0,
            Profile::Uniform { xi1, .. } => xi1,
        }
    }

    pub fn xi2_at(&self, _x: f64) -> f64 {
        match *self {
            Profile::Uniform { xi2, .. } => xi2,
            _ => 0.2,
        }
    }
}

/// Sample `profile` at the nodes `x_j = j/J`, `j = 0..=J`.
pub fn build_initial(profile: Profile, intervals: usize) -> Result<SpeciesField> {
    let grid = Grid1D::new(intervals)?;
    let (xi1, xi2) = (0..grid.node_count())
        .map(|j| {
            let x = grid.x(j);
            (profile.xi1_at(x), profile.xi2_at(x))
        })
        .unzip();
    SpeciesField::new(xi1, xi2)
}

/// Time integrator applied to a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    PureDiffusion,
    /// Lie splitting: diffusion then reaction.
    Ab,
    /// Strang splitting with one flux evaluation per step.
    AbaFrozen,
    /// Strang splitting with a flux refresh at the half step.
    AbaUpdated,
    /// Picard sweeps over coupled diffusion + reaction.
    PicardReaction { iters: usize },
    /// Inner reaction sweeps nested in outer flux updates.
    PicardNested { inner: usize, outer: usize },
}

impl Scheme {
    /// Short label used in reports; Picard with `I` sweeps is `iterI`.
    pub fn label(&self) -> String {
        match *self {
            Scheme::PureDiffusion => "diffusion".into(),
            Scheme::Ab => "ab".into(),
            Scheme::AbaFrozen => "aba-frozen".into(),
            Scheme::AbaUpdated => "aba-updated".into(),
            Scheme::PicardReaction { iters } => format!("iter{iters}"),
            Scheme::PicardNested { inner, outer } => format!("nested{inner}x{outer}"),
        }
    }

    pub fn needs_reaction(&self) -> bool {
        !matches!(self, Scheme::PureDiffusion)
    }
}

/// Default number of stored snapshots per run (plus the initial state).
pub const DEFAULT_SNAPSHOTS: usize = 200;

/// A fully validated experiment: mixture, optional chemistry, grid, scheme
/// and horizon. Construction enforces the explicit-diffusion CFL bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    profile: Profile,
    mixture: MixtureParams,
    reaction: Option<ReactionMatrix>,
    intervals: usize,
    time_steps: usize,
    horizon: f64,
    scheme: Scheme,
    snapshot_every: usize,
}

impl Scenario {
    /// Scenario on `[0, 1]` with horizon `T = 1` and the default snapshot
    /// cadence of `⌈N/200⌉` steps.
    pub fn new(
        profile: Profile,
        mixture: MixtureParams,
        reaction: Option<ReactionMatrix>,
        intervals: usize,
        time_steps: usize,
        scheme: Scheme,
    ) -> Result<Self> {
        let scenario = Self {
            profile,
            mixture,
            reaction,
            intervals,
            time_steps,
            horizon: 1.0,
            scheme,
            snapshot_every: time_steps.div_ceil(DEFAULT_SNAPSHOTS).max(1),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        self.horizon = horizon;
        self.validate()?;
        Ok(self)
    }

    pub fn with_snapshot_every(mut self, every: usize) -> Result<Self> {
        if every == 0 {
            return Err(Error::Domain("snapshot cadence must be at least 1".into()));
        }
        self.snapshot_every = every;
        Ok(self)
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Result<Self> {
        self.scheme = scheme;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.intervals < 2 {
            return Err(Error::Domain(format!(
                "need at least 2 grid intervals, got {}",
                self.intervals
            )));
        }
        if self.time_steps < 1 {
            return Err(Error::Domain("need at least one time step".into()));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Domain(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        match self.scheme {
            Scheme::PicardReaction { iters: 0 } => {
                return Err(Error::Domain("Picard needs at least one sweep".into()))
            }
            Scheme::PicardNested { inner, outer } if inner == 0 || outer == 0 => {
                return Err(Error::Domain(
                    "nested Picard needs at least one inner and one outer sweep".into(),
                ))
            }
            _ => {}
        }
        match (self.scheme.needs_reaction(), self.reaction.is_some()) {
            (true, false) => {
                return Err(Error::Domain(format!(
                    "scheme {} needs a reaction matrix",
                    self.scheme.label()
                )))
            }
            (false, true) => {
                return Err(Error::Domain(
                    "pure diffusion runs take no reaction matrix".into(),
                ))
            }
            _ => {}
        }
        let dt = self.dt();
        let dt_max = cfl_max_dt(self.grid().dx(), &self.mixture)?;
        if dt > dt_max {
            return Err(Error::Cfl { dt, dt_max });
        }
        Ok(())
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn mixture(&self) -> &MixtureParams {
        &self.mixture
    }

    pub fn reaction(&self) -> Option<&ReactionMatrix> {
        self.reaction.as_ref()
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn time_steps(&self) -> usize {
        self.time_steps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn snapshot_every(&self) -> usize {
        self.snapshot_every
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.time_steps as f64
    }

    /// Time of step `n`; computed as `n·T/N` so that runs on different
    /// grids land on bit-identical snapshot times where they coincide.
    pub fn time_of(&self, n: usize) -> f64 {
        // n/N first: runs whose step counts share the ratio produce
        // bit-identical snapshot times.
        n as f64 / self.time_steps as f64 * self.horizon
    }

    pub fn grid(&self) -> Grid1D {
        Grid1D::new(self.intervals).expect("validated at construction")
    }

    pub fn initial_field(&self) -> SpeciesField {
        build_initial(self.profile, self.intervals).expect("validated at construction")
    }
}
