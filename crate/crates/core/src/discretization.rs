//! Uniform grid on `[0, 1]`, the two one-sided difference stencils and the
//! explicit-diffusion time-step bound.

use crate::error::{Error, Result};
use crate::model::MixtureParams;

/// `J + 1` equally spaced nodes `x_j = j/J` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    intervals: usize,
    dx: f64,
}

impl Grid1D {
    pub fn new(intervals: usize) -> Result<Self> {
        if intervals < 2 {
            return Err(Error::Domain(format!(
                "a grid needs at least 2 intervals, got {intervals}"
            )));
        }
        Ok(Self {
            intervals,
            dx: 1.0 / intervals as f64,
        })
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn node_count(&self) -> usize {
        self.intervals + 1
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 / self.intervals as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.node_count()).map(|j| self.x(j))
    }

    /// Nearest node to `x`; ties round away from zero.
    pub fn nearest_node(&self, x: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("probe {x} lies outside [0, 1]")));
        }
        Ok((x * self.intervals as f64).round() as usize)
    }

    pub fn forward(&self) -> UpwindOperator {
        UpwindOperator::new(Direction::Forward, self.dx)
    }

    pub fn backward(&self) -> UpwindOperator {
        UpwindOperator::new(Direction::Backward, self.dx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `D₊`, the divergence used in the conservation law:
    /// `(D₊v)_0 = v_0/Δx`, `(D₊v)_j = (v_j − v_{j−1})/Δx`.
    Forward,
    /// `D₋`, the gradient fed to the flux inversion:
    /// `(D₋v)_j = (v_{j+1} − v_j)/Δx`, `(D₋v)_J = −v_J/Δx`.
    Backward,
}

/// A bidiagonal one-sided difference stencil on the node array.
///
/// `D₊ = −D₋ᵀ`, so the diffusion update `ξ ← ξ + Δt·D₊(D·D₋ξ)` is a
/// discrete negative semi-definite Laplacian and `Σⱼ (D₊v)ⱼ = v_J`
/// telescopes to zero under no-flux boundaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpwindOperator {
    direction: Direction,
    dx: f64,
}

impl UpwindOperator {
    pub fn new(direction: Direction, dx: f64) -> Self {
        Self { direction, dx }
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Writes `A·v` into `out`.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        if out.len() != v.len() {
            return Err(Error::Shape {
                expected: v.len(),
                actual: out.len(),
            });
        }
        let Some(last) = v.len().checked_sub(1) else {
            return Ok(());
        };
        let inv = 1.0 / self.dx;
        match self.direction {
            Direction::Forward => {
                out[0] = v[0] * inv;
                for j in 1..=last {
                    out[j] = (v[j] - v[j - 1]) * inv;
                }
            }
            Direction::Backward => {
                for j in 0..last {
                    out[j] = (v[j + 1] - v[j]) * inv;
                }
                out[last] = -v[last] * inv;
            }
        }
        Ok(())
    }
}

/// `A·v` for a node array of length `J + 1`.
pub fn apply_upwind(op: &UpwindOperator, v: &[f64], nodes: usize) -> Result<Vec<f64>> {
    if v.len() != nodes {
        return Err(Error::Shape {
            expected: nodes,
            actual: v.len(),
        });
    }
    let mut out = vec![0.0; nodes];
    op.apply_into(v, &mut out)?;
    Ok(out)
}

/// Largest stable explicit step, `Δx² / (2·max(D₁₂, D₁₃, D₂₃))`.
pub fn cfl_max_dt(dx: f64, params: &MixtureParams) -> Result<f64> {
    if !(dx.is_finite() && dx > 0.0) {
        return Err(Error::Domain(format!("grid spacing must be positive, got {dx}")));
    }
    Ok(dx * dx / (2.0 * params.d_max()))
}

/// One row of the refinement hierarchy: `J` intervals and `N` time steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridPair {
    pub intervals: usize,
    pub time_steps: usize,
    pub reference: bool,
}

/// The refinement hierarchy, finest (reference) first. Each row keeps
/// `J² ≤ N`, i.e. `Δt ≲ Δx²`.
pub fn cfl_grid_pairs() -> [GridPair; 5] {
    let pair = |intervals, time_steps, reference| GridPair {
        intervals,
        time_steps,
        reference,
    };
    [
        pair(190, 80000, true),
        pair(140, 40000, false),
        pair(100, 20000, false),
        pair(70, 10000, false),
        pair(50, 5000, false),
    ]
}
