//! Time-loop drivers: pure diffusion, Lie (AB) and Strang (ABA) splitting,
//! and the Picard iterative splittings.
//!
//! Every driver keeps the invariant that, between macro steps, the stored
//! flux field equals `N(ξ)` of the stored state. Each diffusion sub-step
//! applies `D₊` to the flux it is given, as in the printed algorithms.

use std::time::{Duration, Instant};

use nalgebra::Matrix3;

use crate::discretization::{Grid1D, UpwindOperator};
use crate::error::{Error, Result};
use crate::model::{FluxField, MixtureParams, ReactionMatrix, Scenario, Scheme, SpeciesField};
use crate::stefan_maxwell::{compute_fluxes, compute_fluxes_into, GradientScratch};
use crate::steppers::{
    apply_divergence, matrix_expm1_3x3, reaction_step_euler_in_place,
    DivergenceScratch, ReactionEulerCoeffs,
};

/// Snapshots of a run: states and fluxes at increasing times from 0 to T.
#[derive(Debug, Clone)]
pub struct Trajectory {
    scenario: Scenario,
    times: Vec<f64>,
    states: Vec<SpeciesField>,
    fluxes: Vec<FluxField>,
    loop_time: Duration,
}

impl Trajectory {
    /// Assembles a trajectory from stored data (e.g. a parsed CSV file).
    pub fn from_parts(
        scenario: Scenario,
        times: Vec<f64>,
        states: Vec<SpeciesField>,
        fluxes: Vec<FluxField>,
    ) -> Result<Self> {
        let nodes = scenario.grid().node_count();
        if times.is_empty() || states.len() != times.len() || fluxes.len() != times.len() {
            return Err(Error::Incompatible(format!(
                "{} times, {} states, {} flux fields",
                times.len(),
                states.len(),
                fluxes.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Incompatible("snapshot times must increase".into()));
        }
        for s in &states {
            s.expect_len(nodes)?;
        }
        for f in &fluxes {
            f.expect_len(nodes)?;
        }
        Ok(Self {
            scenario,
            times,
            states,
            fluxes,
            loop_time: Duration::ZERO,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[SpeciesField] {
        &self.states
    }

    pub fn fluxes(&self) -> &[FluxField] {
        &self.fluxes
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn grid(&self) -> Grid1D {
        self.scenario.grid()
    }

    pub fn final_state(&self) -> &SpeciesField {
        self.states.last().expect("trajectories are never empty")
    }

    /// Wall time of the time loop alone (no setup, no I/O).
    pub fn loop_time(&self) -> Duration {
        self.loop_time
    }
}

/// Runs the scenario with the scheme it names.
pub fn run(scenario: &Scenario) -> Result<Trajectory> {
    match scenario.scheme() {
        Scheme::PureDiffusion => run_pure_diffusion(scenario),
        Scheme::Ab => run_ab(scenario),
        Scheme::AbaFrozen => run_aba_frozen(scenario),
        Scheme::AbaUpdated => run_aba_updated(scenario),
        Scheme::PicardReaction { iters } => run_picard_reaction(scenario, iters),
        Scheme::PicardNested { inner, outer } => run_picard_nested(scenario, inner, outer),
    }
}

struct Recorder {
    every: usize,
    steps: usize,
    times: Vec<f64>,
    states: Vec<SpeciesField>,
    fluxes: Vec<FluxField>,
}

impl Recorder {
    fn new(scenario: &Scenario) -> Self {
        let capacity = scenario.time_steps() / scenario.snapshot_every() + 2;
        Self {
            every: scenario.snapshot_every(),
            steps: scenario.time_steps(),
            times: Vec::with_capacity(capacity),
            states: Vec::with_capacity(capacity),
            fluxes: Vec::with_capacity(capacity),
        }
    }

    fn offer(&mut self, step: usize, scenario: &Scenario, state: &State) {
        if step % self.every == 0 || step == self.steps {
            self.times.push(scenario.time_of(step));
            self.states.push(state.field.clone());
            self.fluxes.push(state.flux.clone());
        }
    }

    fn finish(self, scenario: Scenario, loop_time: Duration) -> Trajectory {
        Trajectory {
            scenario,
            times: self.times,
            states: self.states,
            fluxes: self.fluxes,
            loop_time,
        }
    }
}

/// Mutable solver state plus the scratch buffers of the hot loop.
struct State {
    params: MixtureParams,
    d_plus: UpwindOperator,
    d_minus: UpwindOperator,
    field: SpeciesField,
    flux: FluxField,
    grad: GradientScratch,
    div: DivergenceScratch,
}

impl State {
    fn new(scenario: &Scenario) -> Result<Self> {
        let grid = scenario.grid();
        let field = scenario.initial_field();
        let nodes = field.len();
        let mut state = Self {
            params: *scenario.mixture(),
            d_plus: grid.forward(),
            d_minus: grid.backward(),
            field,
            flux: FluxField::zeros(nodes),
            grad: GradientScratch::new(nodes),
            div: DivergenceScratch::new(nodes),
        };
        state.refresh_flux()?;
        Ok(state)
    }

    fn refresh_flux(&mut self) -> Result<()> {
        compute_fluxes_into(
            &self.field,
            &self.params,
            &self.d_minus,
            &mut self.flux,
            &mut self.grad,
        )
    }

    fn fluxes_of(&mut self, field: &SpeciesField, out: &mut FluxField) -> Result<()> {
        compute_fluxes_into(field, &self.params, &self.d_minus, out, &mut self.grad)
    }

    /// Explicit diffusion over `tau` driven by the stored flux.
    fn diffuse(&mut self, tau: f64) -> Result<()> {
        self.div.compute(&self.flux, &self.d_plus)?;
        apply_divergence(&mut self.field, &self.div, tau);
        Ok(())
    }
}

fn prepare(scenario: &Scenario, scheme: Scheme) -> Result<(Scenario, State, Recorder)> {
    let scenario = scenario.clone().with_scheme(scheme)?;
    let state = State::new(&scenario)?;
    let mut recorder = Recorder::new(&scenario);
    recorder.offer(0, &scenario, &state);
    Ok((scenario, state, recorder))
}

fn coeffs_of(scenario: &Scenario) -> ReactionEulerCoeffs {
    ReactionEulerCoeffs::from_matrix(scenario.reaction().expect("validated by with_scheme"))
}

/// Explicit Stefan–Maxwell diffusion: `ξⁿ⁺¹ = ξⁿ − Δt·D₊Nⁿ`, then `Nⁿ⁺¹ = N(ξⁿ⁺¹)`.
pub fn run_pure_diffusion(scenario: &Scenario) -> Result<Trajectory> {
    let (scenario, mut state, mut recorder) = prepare(scenario, Scheme::PureDiffusion)?;
    let dt = scenario.dt();
    let start = Instant::now();
    for n in 1..=scenario.time_steps() {
        state.diffuse(dt)?;
        state.refresh_flux()?;
        recorder.offer(n, &scenario, &state);
    }
    let elapsed = start.elapsed();
    Ok(recorder.finish(scenario, elapsed))
}

/// Lie splitting: a full diffusion step with fluxes of the current state,
/// then a full explicit Euler reaction step.
pub fn run_ab(scenario: &Scenario) -> Result<Trajectory> {
    let (scenario, mut state, mut recorder) = prepare(scenario, Scheme::Ab)?;
    let coeffs = coeffs_of(&scenario);
    let dt = scenario.dt();
    let start = Instant::now();
    for n in 1..=scenario.time_steps() {
        state.diffuse(dt)?;
        reaction_step_euler_in_place(&mut state.field, &coeffs, dt);
        state.refresh_flux()?;
        recorder.offer(n, &scenario, &state);
    }
    let elapsed = start.elapsed();
    Ok(recorder.finish(scenario, elapsed))
}

/// Strang splitting with the flux predicted once per step: diffusion over
/// Δt/2, reaction over Δt, diffusion over Δt/2 with the same flux.
pub fn run_aba_frozen(scenario: &Scenario) -> Result<Trajectory> {
    let (scenario, mut state, mut recorder) = prepare(scenario, Scheme::AbaFrozen)?;
    let coeffs = coeffs_of(&scenario);
    let dt = scenario.dt();
    let half = 0.5 * dt;
    let start = Instant::now();
    for n in 1..=scenario.time_steps() {
        state.diffuse(half)?;
        reaction_step_euler_in_place(&mut state.field, &coeffs, dt);
        state.diffuse(half)?;
        state.refresh_flux()?;
        recorder.offer(n, &scenario, &state);
    }
    let elapsed = start.elapsed();
    Ok(recorder.finish(scenario, elapsed))
}

/// Strang splitting with a flux update at the half step: diffusion Δt/2,
/// reaction Δt/2, new flux, reaction Δt/2, diffusion Δt/2.
pub fn run_aba_updated(scenario: &Scenario) -> Result<Trajectory> {
    let (scenario, mut state, mut recorder) = prepare(scenario, Scheme::AbaUpdated)?;
    let coeffs = coeffs_of(&scenario);
    let dt = scenario.dt();
    let half = 0.5 * dt;
    let start = Instant::now();
    for n in 1..=scenario.time_steps() {
        state.diffuse(half)?;
        reaction_step_euler_in_place(&mut state.field, &coeffs, half);
        state.refresh_flux()?;
        reaction_step_euler_in_place(&mut state.field, &coeffs, half);
        state.diffuse(half)?;
        state.refresh_flux()?;
        recorder.offer(n, &scenario, &state);
    }
    let elapsed = start.elapsed();
    Ok(recorder.finish(scenario, elapsed))
}

/// One coupled sweep: `ξᵢ = ξⁿ − Δt·div + Δt·R(ξᵢ₋₁)`.
fn picard_sweep(
    base: &SpeciesField,
    prev: &SpeciesField,
    div: &DivergenceScratch,
    coeffs: &ReactionEulerCoeffs,
    dt: f64,
    out: &mut SpeciesField,
) {
    let (o1, o2) = out.parts_mut();
    let nodes = o1.len();
    for j in 0..nodes {
        let (r1, r2) = coeffs.rates(prev.xi1()[j], prev.xi2()[j]);
        o1[j] = (base.xi1()[j] - dt * div.div1[j]) + dt * r1;
        o2[j] = (base.xi2()[j] - dt * div.div2[j]) + dt * r2;
    }
}

/// Picard iteration for the reaction: `iters` coupled sweeps against the
/// lagged flux `Nⁿ`, each reading the previous iterate in the reaction
/// term, then a flux update from the last iterate.
pub fn run_picard_reaction(scenario: &Scenario, iters: usize) -> Result<Trajectory> {
    let (scenario, mut state, mut recorder) =
        prepare(scenario, Scheme::PicardReaction { iters })?;
    let coeffs = coeffs_of(&scenario);
    let dt = scenario.dt();
    let mut prev = state.field.clone();
    let mut next = state.field.clone();
    let start = Instant::now();
    for n in 1..=scenario.time_steps() {
        prev.clone_from(&state.field);
        for _ in 0..iters {
            state.div.compute(&state.flux, &state.d_plus)?;
            picard_sweep(&state.field, &prev, &state.div, &coeffs, dt, &mut next);
            std::mem::swap(&mut prev, &mut next);
        }
        std::mem::swap(&mut state.field, &mut prev);
        state.refresh_flux()?;
        recorder.offer(n, &scenario, &state);
    }
    let elapsed = start.elapsed();
    Ok(recorder.finish(scenario, elapsed))
}

/// Nested Picard: `outer` flux iterations; in each, `inner` coupled sweeps
/// against the current flux iterate, continuing from the latest state
/// iterate, then a flux recomputation.
pub fn run_picard_nested(scenario: &Scenario, inner: usize, outer: usize) -> Result<Trajectory> {
    let (scenario, mut state, mut recorder) =
        prepare(scenario, Scheme::PicardNested { inner, outer })?;
    let coeffs = coeffs_of(&scenario);
    let dt = scenario.dt();
    let mut prev = state.field.clone();
    let mut next = state.field.clone();
    let mut flux_iter = state.flux.clone();
    let start = Instant::now();
    for n in 1..=scenario.time_steps() {
        prev.clone_from(&state.field);
        flux_iter.clone_from(&state.flux);
        for _ in 0..outer {
            for _ in 0..inner {
                state.div.compute(&flux_iter, &state.d_plus)?;
                picard_sweep(&state.field, &prev, &state.div, &coeffs, dt, &mut next);
                std::mem::swap(&mut prev, &mut next);
            }
            state.fluxes_of(&prev, &mut flux_iter)?;
        }
        std::mem::swap(&mut state.field, &mut prev);
        std::mem::swap(&mut state.flux, &mut flux_iter);
        recorder.offer(n, &scenario, &state);
    }
    let elapsed = start.elapsed();
    Ok(recorder.finish(scenario, elapsed))
}

/// Splittings of the linear surrogate problem used for order studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurrogateScheme {
    /// Diffusion Δt, reaction Δt.
    Lie,
    /// Diffusion Δt/2, reaction Δt, diffusion Δt/2.
    StrangFrozen,
    /// Diffusion Δt/2, reaction Δt/2, (flux update), reaction Δt/2, diffusion Δt/2.
    StrangUpdated,
}

/// Integrates `dξ/dt = −D₊F + Λξ` with a fixed flux field `F`, using exact
/// sub-flows for both parts so that only the splitting error remains.
/// With a frozen flux the diffusion sub-flow is exactly the explicit step,
/// and the reaction sub-flow is the matrix exponential. Returns the state at
/// `horizon` after `steps` steps.
///
/// The frozen forcing grows the state linearly in time, so the updates are
/// accumulated with compensated summation; otherwise rounding of ~10⁵
/// increments masks the second-order splitting error at the finest steps.
pub fn run_linear_surrogate(
    initial: &SpeciesField,
    frozen: &FluxField,
    grid: &Grid1D,
    reaction: &ReactionMatrix,
    horizon: f64,
    steps: usize,
    scheme: SurrogateScheme,
) -> Result<SpeciesField> {
    initial.expect_len(grid.node_count())?;
    frozen.expect_len(grid.node_count())?;
    if steps == 0 || !(horizon > 0.0) {
        return Err(Error::Domain("surrogate needs steps >= 1 and a positive horizon".into()));
    }
    let dt = horizon / steps as f64;
    let mut div = DivergenceScratch::new(initial.len());
    div.compute(frozen, &grid.forward())?;
    let full: Matrix3<f64> = matrix_expm1_3x3(reaction.matrix(), dt);
    let half: Matrix3<f64> = matrix_expm1_3x3(reaction.matrix(), 0.5 * dt);
    let mut state = CompensatedField::new(initial);
    for _ in 0..steps {
        match scheme {
            SurrogateScheme::Lie => {
                state.diffuse(&div, dt);
                state.react(&full);
            }
            SurrogateScheme::StrangFrozen => {
                state.diffuse(&div, 0.5 * dt);
                state.react(&full);
                state.diffuse(&div, 0.5 * dt);
            }
            SurrogateScheme::StrangUpdated => {
                state.diffuse(&div, 0.5 * dt);
                state.react(&half);
                state.react(&half);
                state.diffuse(&div, 0.5 * dt);
            }
        }
    }
    SpeciesField::new(state.xi[0].clone(), state.xi[1].clone())
}

/// Species 1 and 2 with Kahan compensation terms.
struct CompensatedField {
    xi: [Vec<f64>; 2],
    comp: [Vec<f64>; 2],
}

impl CompensatedField {
    fn new(field: &SpeciesField) -> Self {
        let zeros = vec![0.0; field.len()];
        Self {
            xi: [field.xi1().to_vec(), field.xi2().to_vec()],
            comp: [zeros.clone(), zeros],
        }
    }

    fn add(&mut self, species: usize, j: usize, delta: f64) {
        let x = self.xi[species][j];
        let y = delta - self.comp[species][j];
        let t = x + y;
        self.comp[species][j] = (t - x) - y;
        self.xi[species][j] = t;
    }

    fn diffuse(&mut self, div: &DivergenceScratch, tau: f64) {
        for j in 0..self.xi[0].len() {
            self.add(0, j, -tau * div.div1[j]);
            self.add(1, j, -tau * div.div2[j]);
        }
    }

    fn react(&mut self, increment: &Matrix3<f64>) {
        for j in 0..self.xi[0].len() {
            let (x1, x2) = (self.xi[0][j], self.xi[1][j]);
            let v = increment * nalgebra::Vector3::new(x1, x2, 1.0 - x1 - x2);
            self.add(0, j, v[0]);
            self.add(1, j, v[1]);
        }
    }
}

/// The flux field of `field` on `grid`, as used to freeze the surrogate.
pub fn initial_fluxes(field: &SpeciesField, params: &MixtureParams, grid: &Grid1D) -> Result<FluxField> {
    compute_fluxes(field, params, &grid.backward())
}
