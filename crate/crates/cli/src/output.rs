//! CSV and summary files. Floats are written with 17 significant digits
//! (`{:.16e}`), which round-trips every `f64` exactly; lines end in LF.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use smsplit_core::{FluxField, Scenario, SpeciesField, Trajectory};

use crate::error::{HarnessError, Result};

pub const TRAJECTORY_HEADER: &str = "t,x,xi1,xi2,xi3,N1,N2,N3";
pub const PROBE_HEADER: &str = "t,x,xi1,xi2,xi3";
pub const TABLEAU_HEADER: &str = "scheme,J,N,dt,err1,err2,err_vec,sigma_sq,observed_order";

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(HarnessError::io(path))
}

/// One row per (snapshot, node); ξ₃ and N₃ from the closures.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let grid = traj.grid();
    let mut s = String::with_capacity(traj.len() * grid.node_count() * 200);
    s.push_str(TRAJECTORY_HEADER);
    s.push('\n');
    for ((t, state), flux) in traj.times().iter().zip(traj.states()).zip(traj.fluxes()) {
        for j in 0..grid.node_count() {
            let cols = [
                *t,
                grid.x(j),
                state.xi1()[j],
                state.xi2()[j],
                state.xi3(j),
                flux.n1()[j],
                flux.n2()[j],
                flux.n3(j),
            ];
            let row: Vec<String> = cols.iter().map(|v| fmt_f64(*v)).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
    }
    s
}

/// Rebuilds a trajectory from `trajectory_csv` output. The scenario
/// supplies the grid and provenance; every row must match its node.
pub fn parse_trajectory_csv(text: &str, scenario: &Scenario) -> Result<Trajectory> {
    let bad = |line: usize, msg: &str| HarnessError::Validation(format!("trajectory.csv line {line}: {msg}"));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == TRAJECTORY_HEADER => {}
        _ => return Err(bad(1, "unexpected header")),
    }
    let nodes = scenario.grid().node_count();
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut fluxes = Vec::new();
    let mut buf: [Vec<f64>; 4] = Default::default();
    for (idx, line) in lines {
        let values: Vec<f64> = line
            .split(',')
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(idx + 1, "unparsable number"))?;
        if values.len() != 8 {
            return Err(bad(idx + 1, "expected 8 columns"));
        }
        let j = buf[0].len();
        if values[1] != scenario.grid().x(j) {
            return Err(bad(idx + 1, "x does not match the grid node"));
        }
        if j == 0 {
            times.push(values[0]);
        } else if values[0] != *times.last().expect("pushed at j = 0") {
            return Err(bad(idx + 1, "time changes inside a snapshot"));
        }
        for (b, v) in buf.iter_mut().zip([values[2], values[3], values[5], values[6]]) {
            b.push(v);
        }
        if j + 1 == nodes {
            let [x1, x2, n1, n2] = std::mem::take(&mut buf);
            states.push(SpeciesField::new(x1, x2).map_err(HarnessError::core("trajectory.csv"))?);
            fluxes.push(FluxField::new(n1, n2).map_err(HarnessError::core("trajectory.csv"))?);
        }
    }
    if !buf[0].is_empty() {
        return Err(bad(0, "incomplete final snapshot"));
    }
    Trajectory::from_parts(scenario.clone(), times, states, fluxes).map_err(HarnessError::core("trajectory.csv"))
}

/// Time series at node `j`.
pub fn probe_csv(traj: &Trajectory, j: usize) -> String {
    let x = traj.grid().x(j);
    let mut s = String::from(PROBE_HEADER);
    s.push('\n');
    for (t, state) in traj.times().iter().zip(traj.states()) {
        let cols = [*t, x, state.xi1()[j], state.xi2()[j], state.xi3(j)];
        let row: Vec<String> = cols.iter().map(|v| fmt_f64(*v)).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Conservation residuals of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// Largest relative drift of `Σⱼ ξᵢ[j]` over species and snapshots.
    /// Each species is conserved only without reaction.
    pub species_mass_drift: f64,
    /// Largest relative drift of `Σⱼ (ξ₁ + ξ₂ + ξ₃)[j]`.
    pub total_mass_drift: f64,
    /// Largest `|Nᵢ|` at `x = 0` and `x = 1`.
    pub boundary_flux_max: f64,
    /// Largest pointwise `|ξ₁ + ξ₂ + ξ₃ − 1|`.
    pub closure_max_deviation: f64,
}

impl Residuals {
    pub fn of(traj: &Trajectory) -> Self {
        let sums = |f: &SpeciesField| -> [f64; 3] {
            let mut s = [0.0; 3];
            for j in 0..f.len() {
                s[0] += f.xi1()[j];
                s[1] += f.xi2()[j];
                s[2] += f.xi3(j);
            }
            s
        };
        let rel = |a: f64, b: f64| if b == 0.0 { a.abs() } else { (a - b).abs() / b.abs() };
        let s0 = sums(&traj.states()[0]);
        let total0: f64 = s0.iter().sum();
        let mut r = Residuals {
            species_mass_drift: 0.0,
            total_mass_drift: 0.0,
            boundary_flux_max: 0.0,
            closure_max_deviation: 0.0,
        };
        for (state, flux) in traj.states().iter().zip(traj.fluxes()) {
            let s = sums(state);
            for i in 0..3 {
                r.species_mass_drift = r.species_mass_drift.max(rel(s[i], s0[i]));
            }
            r.total_mass_drift = r.total_mass_drift.max(rel(s.iter().sum(), total0));
            let last = flux.len() - 1;
            for j in [0, last] {
                for v in [flux.n1()[j], flux.n2()[j], flux.n3(j)] {
                    r.boundary_flux_max = r.boundary_flux_max.max(v.abs());
                }
            }
            for j in 0..state.len() {
                let dev = (state.xi1()[j] + state.xi2()[j] + state.xi3(j) - 1.0).abs();
                r.closure_max_deviation = r.closure_max_deviation.max(dev);
            }
        }
        r
    }

    /// The conserved-mass residual: per species for pure diffusion, the
    /// total for reaction runs (reactions move mass between species).
    pub fn mass_drift(&self, with_reaction: bool) -> f64 {
        if with_reaction {
            self.total_mass_drift
        } else {
            self.species_mass_drift
        }
    }
}

pub fn summary_txt(scenario_name: &str, traj: &Trajectory, probe_node: usize) -> String {
    let sc = traj.scenario();
    let r = Residuals::of(traj);
    let with_reaction = sc.reaction().is_some();
    let mut s = String::new();
    let _ = writeln!(s, "scenario: {scenario_name}");
    let _ = writeln!(s, "scheme: {}", sc.scheme().label());
    let _ = writeln!(s, "grid: {}x{}", sc.intervals(), sc.time_steps());
    let _ = writeln!(s, "dt: {}", fmt_f64(sc.dt()));
    let _ = writeln!(s, "snapshots: {}", traj.len());
    let _ = writeln!(s, "probe_node: {probe_node}");
    let _ = writeln!(s, "wall_time_seconds: {:.6}", traj.loop_time().as_secs_f64());
    let _ = writeln!(s, "mass_drift: {}", fmt_f64(r.mass_drift(with_reaction)));
    let _ = writeln!(s, "species_mass_drift: {}", fmt_f64(r.species_mass_drift));
    let _ = writeln!(s, "boundary_flux_max: {}", fmt_f64(r.boundary_flux_max));
    let _ = writeln!(s, "closure_max_deviation: {}", fmt_f64(r.closure_max_deviation));
    s
}

/// One row of `tableau.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TableauRow {
    pub scheme: String,
    pub intervals: usize,
    pub time_steps: usize,
    pub dt: f64,
    pub err1: f64,
    pub err2: f64,
    pub err_vec: f64,
    pub sigma_sq: f64,
    /// `None` when the slope is not estimable (written as `nan`).
    pub observed_order: Option<f64>,
}

pub fn tableau_csv(rows: &[TableauRow]) -> String {
    let mut s = String::from(TABLEAU_HEADER);
    s.push('\n');
    for r in rows {
        let order = r.observed_order.map_or_else(|| "nan".to_string(), fmt_f64);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.scheme,
            r.intervals,
            r.time_steps,
            fmt_f64(r.dt),
            fmt_f64(r.err1),
            fmt_f64(r.err2),
            fmt_f64(r.err_vec),
            fmt_f64(r.sigma_sq),
            order
        );
    }
    s
}

/// Parses `tableau.csv` back into rows.
pub fn parse_tableau_csv(text: &str) -> Result<Vec<TableauRow>> {
    let bad = |line: usize| HarnessError::Validation(format!("tableau.csv line {line}: malformed row"));
    let mut lines = text.lines().enumerate();
    if lines.next().map(|(_, h)| h) != Some(TABLEAU_HEADER) {
        return Err(bad(1));
    }
    lines
        .map(|(idx, line)| {
            let c: Vec<&str> = line.split(',').collect();
            if c.len() != 9 {
                return Err(bad(idx + 1));
            }
            let f = |i: usize| c[i].parse::<f64>().map_err(|_| bad(idx + 1));
            let u = |i: usize| c[i].parse::<usize>().map_err(|_| bad(idx + 1));
            Ok(TableauRow {
                scheme: c[0].to_string(),
                intervals: u(1)?,
                time_steps: u(2)?,
                dt: f(3)?,
                err1: f(4)?,
                err2: f(5)?,
                err_vec: f(6)?,
                sigma_sq: f(7)?,
                observed_order: if c[8] == "nan" { None } else { Some(f(8)?) },
            })
        })
        .collect()
}
