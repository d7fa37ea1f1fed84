//! Node-wise inversion of the reduced ternary Stefan–Maxwell relations.
//!
//! With `N₃ = −N₁ − N₂` eliminated the fluxes satisfy
//!
//! ```text
//! ⎡ 1/D₁₃ + αξ₂    −αξ₁       ⎤ ⎡N₁⎤   ⎡−∂ₓξ₁⎤
//! ⎣ −βξ₂           1/D₂₃ + βξ₁⎦ ⎣N₂⎦ = ⎣−∂ₓξ₂⎦
//! ```
//!
//! whose inverse is `γ·adj` with `γ = D₁₃D₂₃ / (1 + αD₁₃ξ₂ + βD₂₃ξ₁)`.

use crate::discretization::UpwindOperator;
use crate::error::{Error, Result};
use crate::model::{zero_boundaries, FluxField, MixtureParams, SpeciesField};

/// Below this magnitude the denominator of `γ` is treated as zero.
pub const SINGULARITY_TOL: f64 = 1e-14;

/// Local state at one node: mole fractions and their gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxSolveInput {
    pub xi1: f64,
    pub xi2: f64,
    pub g1: f64,
    pub g2: f64,
    pub params: MixtureParams,
}

/// Solves the 2×2 system at one node, returning `(N₁, N₂)`.
pub fn invert_flux_node(input: &FluxSolveInput) -> Result<(f64, f64)> {
    let FluxSolveInput {
        xi1,
        xi2,
        g1,
        g2,
        params: p,
    } = *input;
    let denominator = 1.0 + p.alpha() * p.d13() * xi2 + p.beta() * p.d23() * xi1;
    if !(denominator.abs() >= SINGULARITY_TOL) {
        return Err(Error::Singular {
            node: None,
            xi1,
            xi2,
            denominator,
        });
    }
    let gamma = p.d13() * p.d23() / denominator;
    let (r1, r2) = (-g1, -g2);
    let n1 = gamma * ((1.0 / p.d23() + p.beta() * xi1) * r1 + p.alpha() * xi1 * r2);
    let n2 = gamma * (p.beta() * xi2 * r1 + (1.0 / p.d13() + p.alpha() * xi2) * r2);
    Ok((n1, n2))
}

/// Applies the un-inverted system to `(N₁, N₂)`, giving `(−∂ₓξ₁, −∂ₓξ₂)`.
pub fn forward_map(params: &MixtureParams, xi1: f64, xi2: f64, n1: f64, n2: f64) -> (f64, f64) {
    let (a, b) = (params.alpha(), params.beta());
    (
        (1.0 / params.d13() + a * xi2) * n1 - a * xi1 * n2,
        -b * xi2 * n1 + (1.0 / params.d23() + b * xi1) * n2,
    )
}

/// Scratch buffers for the gradients so the time loops do not allocate.
#[derive(Debug, Clone)]
pub(crate) struct GradientScratch {
    g1: Vec<f64>,
    g2: Vec<f64>,
}

impl GradientScratch {
    pub(crate) fn new(nodes: usize) -> Self {
        Self {
            g1: vec![0.0; nodes],
            g2: vec![0.0; nodes],
        }
    }
}

/// Fluxes of `field` with gradients taken by `grad` (the backward stencil),
/// boundary values forced to zero afterwards.
pub fn compute_fluxes(
    field: &SpeciesField,
    params: &MixtureParams,
    grad: &UpwindOperator,
) -> Result<FluxField> {
    let nodes = field.len();
    let mut out = FluxField::zeros(nodes);
    let mut scratch = GradientScratch::new(nodes);
    compute_fluxes_into(field, params, grad, &mut out, &mut scratch)?;
    Ok(out)
}

pub(crate) fn compute_fluxes_into(
    field: &SpeciesField,
    params: &MixtureParams,
    grad: &UpwindOperator,
    out: &mut FluxField,
    scratch: &mut GradientScratch,
) -> Result<()> {
    let nodes = field.len();
    out.expect_len(nodes)?;
    if scratch.g1.len() != nodes {
        *scratch = GradientScratch::new(nodes);
    }
    grad.apply_into(field.xi1(), &mut scratch.g1)?;
    grad.apply_into(field.xi2(), &mut scratch.g2)?;
    let (n1, n2) = out.parts_mut();
    for j in 0..nodes {
        let input = FluxSolveInput {
            xi1: field.xi1()[j],
            xi2: field.xi2()[j],
            g1: scratch.g1[j],
            g2: scratch.g2[j],
            params: *params,
        };
        let (a, b) = invert_flux_node(&input).map_err(|e| match e {
            Error::Singular {
                xi1,
                xi2,
                denominator,
                ..
            } => Error::Singular {
                node: Some(j),
                xi1,
                xi2,
                denominator,
            },
            other => other,
        })?;
        n1[j] = a;
        n2[j] = b;
    }
    zero_boundaries(n1);
    zero_boundaries(n2);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Grid1D;
    use crate::model::{build_initial, Profile};
    use nalgebra::{Matrix2, Vector2};
    use proptest::prelude::*;

    fn input(params: MixtureParams, xi1: f64, xi2: f64, g1: f64, g2: f64) -> FluxSolveInput {
        FluxSolveInput {
            xi1,
            xi2,
            g1,
            g2,
            params,
        }
    }

    /// General LU solve of the un-inverted system.
    fn lu_oracle(p: &MixtureParams, xi1: f64, xi2: f64, g1: f64, g2: f64) -> (f64, f64) {
        let m = Matrix2::new(
            1.0 / p.d13() + p.alpha() * xi2,
            -p.alpha() * xi1,
            -p.beta() * xi2,
            1.0 / p.d23() + p.beta() * xi1,
        );
        let x = m.lu().solve(&Vector2::new(-g1, -g2)).expect("regular");
        (x[0], x[1])
    }

    #[test]
    fn zero_gradient_gives_zero_flux() {
        let (n1, n2) = invert_flux_node(&input(MixtureParams::hydrogen(), 0.3, 0.5, 0.0, 0.0)).unwrap();
        assert_eq!((n1, n2), (0.0, 0.0));
    }

    #[test]
    fn equal_coefficients_reduce_to_fick() {
        let d = 0.37;
        let p = MixtureParams::fickian(d).unwrap();
        let (n1, n2) = invert_flux_node(&input(p, 0.4, 0.35, 1.5, -2.0)).unwrap();
        assert!((n1 + d * 1.5).abs() < 1e-15);
        assert!((n2 - d * 2.0).abs() < 1e-15);
    }

    #[test]
    fn matches_lu_oracle() {
        let p = MixtureParams::asymptotic();
        let (n1, n2) = invert_flux_node(&input(p, 0.4, 0.2, 1.0, 0.0)).unwrap();
        let (o1, o2) = lu_oracle(&p, 0.4, 0.2, 1.0, 0.0);
        assert!((n1 - o1).abs() <= 1e-13 * o1.abs());
        assert!((n2 - o2).abs() <= 1e-13 * o2.abs().max(1e-300));
    }

    #[test]
    fn singular_denominator_is_reported() {
        // α·D₁₃·ξ₂ = −1 makes the denominator vanish when ξ₁ = 0.
        let p = MixtureParams::new(1.0, 0.5, 1.0).unwrap(); // α = −1, β = 0
        let err = invert_flux_node(&input(p, 0.0, 2.0, 1.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::Singular { xi2, .. } if xi2 == 2.0));
    }

    #[test]
    fn singular_node_index_is_attached() {
        let p = MixtureParams::new(1.0, 0.5, 1.0).unwrap();
        let field = SpeciesField::new(vec![0.0, 0.0, 0.0], vec![0.5, 2.0, 0.5]).unwrap();
        let grad = Grid1D::new(2).unwrap().backward();
        let err = compute_fluxes(&field, &p, &grad).unwrap_err();
        assert!(matches!(err, Error::Singular { node: Some(1), .. }));
    }

    #[test]
    fn uniform_field_has_no_flux() {
        let field = SpeciesField::uniform(11, 0.3, 0.2);
        let grad = Grid1D::new(10).unwrap().backward();
        let f = compute_fluxes(&field, &MixtureParams::hydrogen(), &grad).unwrap();
        assert!(f.n1().iter().chain(f.n2()).all(|&v| v == 0.0));
    }

    #[test]
    fn boundaries_are_zeroed() {
        let field = build_initial(Profile::Step, 20).unwrap();
        let grad = Grid1D::new(20).unwrap().backward();
        let f = compute_fluxes(&field, &MixtureParams::asymptotic(), &grad).unwrap();
        assert_eq!((f.n1()[0], f.n1()[20], f.n2()[0], f.n2()[20]), (0.0, 0.0, 0.0, 0.0));
        assert!(f.n1().iter().any(|&v| v != 0.0));
    }

    #[test]
    fn full_system_assembly_oracle() {
        // Assemble the 2(J+1)×2(J+1) block system [[A, B], [C, D]] with
        // diagonal blocks and solve it densely.
        let intervals = 140;
        let n = intervals + 1;
        let grid = Grid1D::new(intervals).unwrap();
        let p = MixtureParams::uphill();
        let field = build_initial(Profile::Uphill, intervals).unwrap();
        let got = compute_fluxes(&field, &p, &grid.backward()).unwrap();

        let mut g1 = vec![0.0; n];
        let mut g2 = vec![0.0; n];
        for j in 0..n {
            let next1 = if j + 1 < n { field.xi1()[j + 1] } else { 0.0 };
            let next2 = if j + 1 < n { field.xi2()[j + 1] } else { 0.0 };
            g1[j] = (next1 - field.xi1()[j]) / grid.dx();
            g2[j] = (next2 - field.xi2()[j]) / grid.dx();
        }
        let mut m = nalgebra::DMatrix::<f64>::zeros(2 * n, 2 * n);
        let mut rhs = nalgebra::DVector::<f64>::zeros(2 * n);
        for j in 0..n {
            let (x1, x2) = (field.xi1()[j], field.xi2()[j]);
            m[(j, j)] = 1.0 / p.d13() + p.alpha() * x2;
            m[(j, n + j)] = -p.alpha() * x1;
            m[(n + j, j)] = -p.beta() * x2;
            m[(n + j, n + j)] = 1.0 / p.d23() + p.beta() * x1;
            rhs[j] = -g1[j];
            rhs[n + j] = -g2[j];
        }
        let sol = m.lu().solve(&rhs).unwrap();
        for j in 1..intervals {
            let scale = sol[j].abs().max(sol[n + j].abs()).max(1e-12);
            assert!((got.n1()[j] - sol[j]).abs() <= 1e-12 * scale, "node {j}");
            assert!((got.n2()[j] - sol[n + j]).abs() <= 1e-12 * scale, "node {j}");
        }
    }

    #[test]
    fn fluxes_are_pointwise() {
        let intervals = 12;
        let grid = Grid1D::new(intervals).unwrap();
        let p = MixtureParams::asymptotic();
        let xi1: Vec<f64> = (0..=intervals).map(|j| 0.05 * j as f64).collect();
        let xi2: Vec<f64> = (0..=intervals).map(|j| 0.3 - 0.01 * (j * j) as f64 / 12.0).collect();
        let field = SpeciesField::new(xi1.clone(), xi2.clone()).unwrap();
        let flux = compute_fluxes(&field, &p, &grid.backward()).unwrap();

        let g1 = crate::discretization::apply_upwind(&grid.backward(), &xi1, 13).unwrap();
        let g2 = crate::discretization::apply_upwind(&grid.backward(), &xi2, 13).unwrap();
        // Each interior output depends only on its own (ξ, g) pair, so a
        // permutation of the pairs permutes the outputs.
        let perm = [0, 8, 2, 3, 4, 5, 6, 7, 1, 9, 10, 11, 12];
        for j in 1..intervals {
            let k = perm[j];
            let (n1, n2) = invert_flux_node(&input(p, xi1[k], xi2[k], g1[k], g2[k])).unwrap();
            assert_eq!(n1, flux.n1()[k]);
            assert_eq!(n2, flux.n2()[k]);
        }
    }

    fn mixtures() -> impl Strategy<Value = MixtureParams> {
        prop_oneof![
            Just(MixtureParams::uphill()),
            Just(MixtureParams::asymptotic()),
            Just(MixtureParams::hydrogen()),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn round_trip_recovers_gradients(
            p in mixtures(),
            a in 0.0f64..1.0,
            b in 0.0f64..1.0,
            g1 in -50.0f64..50.0,
            g2 in -50.0f64..50.0,
        ) {
            let (xi1, xi2) = (a, b * (1.0 - a));
            let (n1, n2) = invert_flux_node(&input(p, xi1, xi2, g1, g2)).unwrap();
            let (r1, r2) = forward_map(&p, xi1, xi2, n1, n2);
            let scale = g1.abs().max(g2.abs()).max(1e-300);
            prop_assert!((r1 + g1).abs() <= 1e-12 * scale);
            prop_assert!((r2 + g2).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn degenerates_linearly_to_fick() {
        // Perturb D₁₂ and D₂₃ around a common D; the deviation from the Fick
        // flux should shrink proportionally to max(|α|, |β|).
        let d = 0.5;
        let (xi1, xi2, g1, g2) = (0.3, 0.25, 2.0, -1.0);
        let mut prev: Option<(f64, f64)> = None;
        for eps in [1e-2, 5e-3, 2.5e-3, 1.25e-3] {
            let p = MixtureParams::new(d * (1.0 + eps), d, d * (1.0 - eps)).unwrap();
            let (n1, n2) = invert_flux_node(&input(p, xi1, xi2, g1, g2)).unwrap();
            let dev = (n1 + d * g1).abs().max((n2 + d * g2).abs());
            let size = p.alpha().abs().max(p.beta().abs());
            if let Some((pdev, psize)) = prev {
                let ratio = (pdev / dev) / (psize / size);
                assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
            }
            prev = Some((dev, size));
        }
    }
}
