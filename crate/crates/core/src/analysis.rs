//! Error metrics between trajectories, the coarse-grid index maps of the
//! refinement hierarchy, observed-order fits and the uphill indicator.
//!
//! All time sums weight snapshot `n` by `tₙ − tₙ₋₁` (with `t₋₁ = 0`), so a
//! constant offset `δ` integrates to `δ·T` whatever the snapshot cadence.

use crate::discretization::{apply_upwind, Grid1D};
use crate::error::{Error, Result};
use crate::model::SpeciesField;
use crate::splitting::Trajectory;

/// Which mole fraction a metric compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    First,
    Second,
    /// σ² sums the squared deviations of ξ₁ and ξ₂; the err metrics sum
    /// the absolute deviations of all three species (ξ₃ from closure).
    Vectorial,
}

/// Nodes entering a same-grid σ² evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeSelection {
    Node(usize),
    /// `Σ_k Δx·σ²_k` over every node.
    Integrated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    SigmaSq,
    ErrAtPoint,
    ErrTimeSpace,
}

/// Per-component and vectorial errors of one run against a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub kind: MetricKind,
    pub err1: f64,
    pub err2: f64,
    pub err_vec: f64,
    pub dt: f64,
    pub scheme: String,
}

impl ErrorReport {
    /// All three `err_time_space` components of `traj` against `reference`.
    pub fn time_space(traj: &Trajectory, reference: &Trajectory, hierarchy: &GridHierarchy) -> Result<Self> {
        Ok(Self {
            kind: MetricKind::ErrTimeSpace,
            err1: err_time_space(traj, reference, Component::First, hierarchy)?,
            err2: err_time_space(traj, reference, Component::Second, hierarchy)?,
            err_vec: err_time_space(traj, reference, Component::Vectorial, hierarchy)?,
            dt: traj.scenario().dt(),
            scheme: traj.scenario().scheme().label(),
        })
    }

    /// All three `err_at_point` components at probe `x`.
    pub fn at_point(traj: &Trajectory, reference: &Trajectory, x: f64) -> Result<Self> {
        Ok(Self {
            kind: MetricKind::ErrAtPoint,
            err1: err_at_point(traj, reference, x, Component::First)?,
            err2: err_at_point(traj, reference, x, Component::Second)?,
            err_vec: err_at_point(traj, reference, x, Component::Vectorial)?,
            dt: traj.scenario().dt(),
            scheme: traj.scenario().scheme().label(),
        })
    }
}

/// Pairs each snapshot of `traj` with the reference snapshot at the same
/// time and returns `(traj index, ref index, weight)`.
fn align_times(traj: &Trajectory, reference: &Trajectory) -> Result<Vec<(usize, usize, f64)>> {
    let rt = reference.times();
    let mut out = Vec::with_capacity(traj.len());
    let mut cursor = 0;
    let mut previous = 0.0;
    for (n, &t) in traj.times().iter().enumerate() {
        let tol = 1e-12 * t.abs().max(1.0);
        while cursor < rt.len() && rt[cursor] < t - tol {
            cursor += 1;
        }
        if cursor == rt.len() || (rt[cursor] - t).abs() > tol {
            return Err(Error::Incompatible(format!(
                "snapshot time {t} of the compared run is missing from the reference"
            )));
        }
        out.push((n, cursor, t - previous));
        previous = t;
    }
    let (t_end, r_end) = (*traj.times().last().unwrap_or(&0.0), *rt.last().unwrap_or(&0.0));
    if (t_end - r_end).abs() > 1e-12 * r_end.abs().max(1.0) {
        return Err(Error::Incompatible(format!(
            "horizons differ: {t_end} vs reference {r_end}"
        )));
    }
    Ok(out)
}

/// Deviations of the selected species at one node pair.
fn deviations(a: &SpeciesField, ja: usize, b: &SpeciesField, jb: usize) -> [f64; 3] {
    [
        a.xi1()[ja] - b.xi1()[jb],
        a.xi2()[ja] - b.xi2()[jb],
        a.xi3(ja) - b.xi3(jb),
    ]
}

fn abs_error(d: [f64; 3], component: Component) -> f64 {
    match component {
        Component::First => d[0].abs(),
        Component::Second => d[1].abs(),
        Component::Vectorial => d[0].abs() + d[1].abs() + d[2].abs(),
    }
}

fn sq_error(d: [f64; 3], component: Component) -> f64 {
    match component {
        Component::First => d[0] * d[0],
        Component::Second => d[1] * d[1],
        Component::Vectorial => d[0] * d[0] + d[1] * d[1],
    }
}

/// `Σ_pairs w_x Σ_n w_n f(Δ)` over spatial node pairs with weights.
fn space_time_sum(
    traj: &Trajectory,
    reference: &Trajectory,
    nodes: &[(usize, usize, f64)],
    f: impl Fn([f64; 3]) -> f64,
) -> Result<f64> {
    let times = align_times(traj, reference)?;
    let mut total = 0.0;
    for &(jt, jr, wx) in nodes {
        let mut in_time = 0.0;
        for &(n, m, wt) in &times {
            in_time += wt * f(deviations(&traj.states()[n], jt, &reference.states()[m], jr));
        }
        total += wx * in_time;
    }
    Ok(total)
}

fn same_grid(traj: &Trajectory, reference: &Trajectory) -> Result<Grid1D> {
    let (a, b) = (traj.grid(), reference.grid());
    if a.intervals() != b.intervals() {
        return Err(Error::Incompatible(format!(
            "grids differ: J = {} vs reference J = {}",
            a.intervals(),
            b.intervals()
        )));
    }
    Ok(a)
}

/// Time-averaged mean-square deviation `(1/T) Σₙ Δtₙ (ξ − ξ_ref)²` on a
/// shared grid.
pub fn sigma_sq(
    traj: &Trajectory,
    reference: &Trajectory,
    component: Component,
    selection: NodeSelection,
) -> Result<f64> {
    let grid = same_grid(traj, reference)?;
    let nodes: Vec<(usize, usize, f64)> = match selection {
        NodeSelection::Node(j) => {
            if j >= grid.node_count() {
                return Err(Error::Domain(format!("node {j} outside grid of {} nodes", grid.node_count())));
            }
            vec![(j, j, 1.0)]
        }
        NodeSelection::Integrated => (0..grid.node_count()).map(|j| (j, j, grid.dx())).collect(),
    };
    let horizon = traj.scenario().horizon();
    Ok(space_time_sum(traj, reference, &nodes, |d| sq_error(d, component))? / horizon)
}

/// σ² restricted to the coarse grid of `hierarchy`: `Σ_k Δx_c σ²_k`.
pub fn sigma_sq_time_space(
    traj: &Trajectory,
    reference: &Trajectory,
    component: Component,
    hierarchy: &GridHierarchy,
) -> Result<f64> {
    let nodes = hierarchy.node_pairs(traj.grid().intervals(), reference.grid().intervals())?;
    let horizon = traj.scenario().horizon();
    Ok(space_time_sum(traj, reference, &nodes, |d| sq_error(d, component))? / horizon)
}

/// L1-in-time error `Σₙ Δtₙ |ξ_ref(x) − ξ(x)|` at the nodes nearest to `x`.
pub fn err_at_point(traj: &Trajectory, reference: &Trajectory, x: f64, component: Component) -> Result<f64> {
    let jt = traj.grid().nearest_node(x)?;
    let jr = reference.grid().nearest_node(x)?;
    space_time_sum(traj, reference, &[(jt, jr, 1.0)], |d| abs_error(d, component))
}

/// `Σ_k Δx_c Σₙ Δtₙ |ξ_ref(x_k) − ξ(x_k)|` over the coarse nodes, each
/// trajectory sampled through its own level of `hierarchy`.
pub fn err_time_space(
    traj: &Trajectory,
    reference: &Trajectory,
    component: Component,
    hierarchy: &GridHierarchy,
) -> Result<f64> {
    let nodes = hierarchy.node_pairs(traj.grid().intervals(), reference.grid().intervals())?;
    space_time_sum(traj, reference, &nodes, |d| abs_error(d, component))
}

/// Coarsest grid of the Table 1 hierarchy.
pub const COARSE_INTERVALS: usize = 50;

/// Intervals of each Table 1 level, coarsest first.
pub const TABLE1_LEVELS: [usize; 5] = [50, 70, 100, 140, 190];

/// Unclamped index map: identity, `⌊k√2⌋`, `2k`, `⌊2√2·k⌋`, `4k`.
fn raw_map(k: usize, level: u8) -> usize {
    let kf = k as f64;
    match level {
        0 => k,
        1 => (kf * std::f64::consts::SQRT_2).floor() as usize,
        2 => 2 * k,
        3 => (kf * 2.0 * std::f64::consts::SQRT_2).floor() as usize,
        _ => 4 * k,
    }
}

/// Fine-grid index of coarse node `k` at Table 1 `level`, clamped to the
/// level's last node (the printed maps overshoot at levels 3 and 4).
pub fn coarse_grid_map(k: usize, level: u8) -> Result<usize> {
    if k > COARSE_INTERVALS {
        return Err(Error::Domain(format!("coarse index {k} outside [0, {COARSE_INTERVALS}]")));
    }
    if level > 4 {
        return Err(Error::Domain(format!("level {level} outside 0..=4")));
    }
    Ok(raw_map(k, level).min(TABLE1_LEVELS[level as usize]))
}

/// A refinement hierarchy: the coarse grid and, for every member grid,
/// the map level that samples it at the coarse nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridHierarchy {
    coarse: usize,
    levels: Vec<(usize, u8)>,
}

impl GridHierarchy {
    pub fn new(coarse: usize, levels: Vec<(usize, u8)>) -> Result<Self> {
        Grid1D::new(coarse)?;
        if let Some(&(j, l)) = levels.iter().find(|(j, l)| *l > 4 || *j < coarse) {
            return Err(Error::Domain(format!("bad hierarchy member J = {j}, level {l}")));
        }
        Ok(Self { coarse, levels })
    }

    /// 50 → 70 → 100 → 140 → 190 with levels 0..4.
    pub fn table1() -> Self {
        let levels = TABLE1_LEVELS.iter().enumerate().map(|(l, &j)| (j, l as u8)).collect();
        Self {
            coarse: COARSE_INTERVALS,
            levels,
        }
    }

    pub fn coarse(&self) -> usize {
        self.coarse
    }

    pub fn level_of(&self, intervals: usize) -> Result<u8> {
        self.levels
            .iter()
            .find(|(j, _)| *j == intervals)
            .map(|&(_, l)| l)
            .ok_or_else(|| Error::Incompatible(format!("grid J = {intervals} is not in the hierarchy")))
    }

    /// Index on grid `intervals` sampled by coarse node `k`.
    pub fn map(&self, k: usize, intervals: usize) -> Result<usize> {
        if k > self.coarse {
            return Err(Error::Domain(format!("coarse index {k} outside [0, {}]", self.coarse)));
        }
        Ok(raw_map(k, self.level_of(intervals)?).min(intervals))
    }

    /// `(traj node, ref node, Δx_coarse)` for every coarse node.
    fn node_pairs(&self, traj_j: usize, ref_j: usize) -> Result<Vec<(usize, usize, f64)>> {
        let dx = 1.0 / self.coarse as f64;
        (0..=self.coarse)
            .map(|k| Ok((self.map(k, traj_j)?, self.map(k, ref_j)?, dx)))
            .collect()
    }
}

/// Least-squares slope of `log(err)` against `log(Δt)`. `Ok(None)` when
/// some error is not positive (no slope can be estimated).
pub fn observed_order(errors: &[f64], dts: &[f64]) -> Result<Option<f64>> {
    if errors.len() != dts.len() {
        return Err(Error::Shape {
            expected: dts.len(),
            actual: errors.len(),
        });
    }
    if errors.len() < 3 {
        return Err(Error::Domain(format!("need at least 3 points, got {}", errors.len())));
    }
    if dts.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::Domain("time steps must be positive".into()));
    }
    if errors.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Ok(None);
    }
    let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all time steps are equal".into()));
    }
    Ok(Some(sxy / sxx))
}

/// Self-convergence order from solutions on one grid at successively
/// halved steps, coarsest first: fits `max |ξ(Δtᵢ) − ξ(Δtᵢ₊₁)|` over
/// species 1 and 2 against `Δtᵢ`. Successive differences scale exactly
/// like the error, so no reference bias enters the slope.
pub fn self_convergence_order(solutions: &[SpeciesField], dts: &[f64]) -> Result<Option<f64>> {
    if solutions.len() != dts.len() {
        return Err(Error::Shape {
            expected: dts.len(),
            actual: solutions.len(),
        });
    }
    let nodes = solutions.first().map_or(0, SpeciesField::len);
    let mut diffs = Vec::with_capacity(solutions.len().saturating_sub(1));
    for pair in solutions.windows(2) {
        pair[1].expect_len(nodes)?;
        let d = (0..nodes)
            .map(|j| {
                let dev = deviations(&pair[0], j, &pair[1], j);
                dev[0].abs().max(dev[1].abs())
            })
            .fold(0.0, f64::max);
        diffs.push(d);
    }
    observed_order(&diffs, &dts[..diffs.len()])
}

/// `sign(−N₂·D₋ξ₂)` per snapshot at the interior nodes `1..J−1`.
/// Negative cells carry flux up the ξ₂ gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct UphillIndicator {
    times: Vec<f64>,
    signs: Vec<Vec<i8>>,
}

impl UphillIndicator {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `signs()[n][j − 1]` is the indicator at snapshot `n`, node `j`.
    pub fn signs(&self) -> &[Vec<i8>] {
        &self.signs
    }

    fn count(&self, s: i8) -> usize {
        self.signs.iter().flatten().filter(|&&v| v == s).count()
    }

    pub fn counter_gradient_cells(&self) -> usize {
        self.count(-1)
    }

    pub fn down_gradient_cells(&self) -> usize {
        self.count(1)
    }

    pub fn zero_cells(&self) -> usize {
        self.count(0)
    }
}

pub fn uphill_region(traj: &Trajectory) -> Result<UphillIndicator> {
    if traj.fluxes().len() != traj.states().len() {
        return Err(Error::Incompatible("trajectory lacks flux snapshots".into()));
    }
    let grid = traj.grid();
    let d_minus = grid.backward();
    let nodes = grid.node_count();
    let mut signs = Vec::with_capacity(traj.len());
    for (state, flux) in traj.states().iter().zip(traj.fluxes()) {
        let g2 = apply_upwind(&d_minus, state.xi2(), nodes)?;
        let row = (1..nodes - 1)
            .map(|j| {
                let v = -flux.n2()[j] * g2[j];
                if v > 0.0 {
                    1
                } else if v < 0.0 {
                    -1
                } else {
                    0
                }
            })
            .collect();
        signs.push(row);
    }
    Ok(UphillIndicator {
        times: traj.times().to_vec(),
        signs,
    })
}
