//! Single sub-step integrators used by the splitting drivers.

use nalgebra::{Matrix3, Vector3};

use crate::discretization::UpwindOperator;
use crate::error::{Error, Result};
use crate::model::{FluxField, ReactionMatrix, SpeciesField};

/// The reaction right-hand side with `ξ₃ = 1 − ξ₁ − ξ₂` substituted:
/// `dξ₁/dt = a11·ξ₁ + a12·ξ₂ + c1`, `dξ₂/dt = a21·ξ₁ + a22·ξ₂ + c2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReactionEulerCoeffs {
    pub a11: f64,
    pub a12: f64,
    pub c1: f64,
    pub a21: f64,
    pub a22: f64,
    pub c2: f64,
}

impl ReactionEulerCoeffs {
    pub fn from_matrix(m: &ReactionMatrix) -> Self {
        let l = |i, j| m.entry(i, j);
        Self {
            a11: l(0, 0) - l(0, 2),
            a12: l(0, 1) - l(0, 2),
            c1: l(0, 2),
            a21: l(1, 0) - l(1, 2),
            a22: l(1, 1) - l(1, 2),
            c2: l(1, 2),
        }
    }

    #[inline]
    pub fn rates(&self, xi1: f64, xi2: f64) -> (f64, f64) {
        (
            self.a11 * xi1 + self.a12 * xi2 + self.c1,
            self.a21 * xi1 + self.a22 * xi2 + self.c2,
        )
    }
}

/// `ξᵢ ← ξᵢ − dt·D₊Nᵢ` for both stored species.
pub fn diffusion_step(
    field: &SpeciesField,
    flux: &FluxField,
    dt: f64,
    d_plus: &UpwindOperator,
) -> Result<SpeciesField> {
    let mut out = field.clone();
    let mut scratch = DivergenceScratch::new(field.len());
    diffusion_step_in_place(&mut out, flux, dt, d_plus, &mut scratch)?;
    Ok(out)
}

/// Holds `D₊N₁` and `D₊N₂` between uses.
#[derive(Debug, Clone)]
pub(crate) struct DivergenceScratch {
    pub(crate) div1: Vec<f64>,
    pub(crate) div2: Vec<f64>,
}

impl DivergenceScratch {
    pub(crate) fn new(nodes: usize) -> Self {
        Self {
            div1: vec![0.0; nodes],
            div2: vec![0.0; nodes],
        }
    }

    pub(crate) fn compute(&mut self, flux: &FluxField, d_plus: &UpwindOperator) -> Result<()> {
        if self.div1.len() != flux.len() {
            *self = Self::new(flux.len());
        }
        d_plus.apply_into(flux.n1(), &mut self.div1)?;
        d_plus.apply_into(flux.n2(), &mut self.div2)
    }
}

pub(crate) fn diffusion_step_in_place(
    field: &mut SpeciesField,
    flux: &FluxField,
    dt: f64,
    d_plus: &UpwindOperator,
    scratch: &mut DivergenceScratch,
) -> Result<()> {
    check_dt(dt)?;
    flux.expect_len(field.len())?;
    scratch.compute(flux, d_plus)?;
    apply_divergence(field, scratch, dt);
    Ok(())
}

/// `ξ ← ξ − dt·div`, with the divergence already computed.
#[inline]
pub(crate) fn apply_divergence(field: &mut SpeciesField, div: &DivergenceScratch, dt: f64) {
    let (xi1, xi2) = field.parts_mut();
    for (x, d) in xi1.iter_mut().zip(&div.div1) {
        *x -= dt * d;
    }
    for (x, d) in xi2.iter_mut().zip(&div.div2) {
        *x -= dt * d;
    }
}

/// One explicit Euler step of the reaction system, node by node.
pub fn reaction_step_euler(
    field: &SpeciesField,
    coeffs: &ReactionEulerCoeffs,
    dt: f64,
) -> Result<SpeciesField> {
    check_dt(dt)?;
    let mut out = field.clone();
    reaction_step_euler_in_place(&mut out, coeffs, dt);
    Ok(out)
}

pub(crate) fn reaction_step_euler_in_place(
    field: &mut SpeciesField,
    coeffs: &ReactionEulerCoeffs,
    dt: f64,
) {
    let (xi1, xi2) = field.parts_mut();
    for (x1, x2) in xi1.iter_mut().zip(xi2.iter_mut()) {
        let (r1, r2) = coeffs.rates(*x1, *x2);
        *x1 += dt * r1;
        *x2 += dt * r2;
    }
}

/// `exp(S·t)` by scaling and squaring; see [`matrix_expm1_3x3`].
pub fn matrix_exp_3x3(s: &Matrix3<f64>, t: f64) -> Matrix3<f64> {
    Matrix3::identity() + matrix_expm1_3x3(s, t)
}

/// `exp(S·t) − I` without forming the identity: scale until
/// `‖S·t‖₁ / 2ˢ ≤ 1/2`, sum the Taylor series from the linear term to below
/// machine precision, then undo the scaling with `E ← E·E + 2E`. For small
/// `t` the increment keeps full relative precision, which the propagator
/// itself (entries ≈ 1) cannot.
pub fn matrix_expm1_3x3(s: &Matrix3<f64>, t: f64) -> Matrix3<f64> {
    let a = s * t;
    let norm = one_norm(&a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings);

    let mut sum = scaled;
    let mut term = scaled;
    for k in 2..=30 {
        term = term * scaled / k as f64;
        sum += term;
        if one_norm(&term) <= f64::EPSILON * one_norm(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum * sum + sum * 2.0;
    }
    sum
}

fn one_norm(m: &Matrix3<f64>) -> f64 {
    (0..3)
        .map(|c| m.column(c).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Exact reaction flow over `dt`: `(ξ₁, ξ₂, ξ₃) ← exp(S·dt)·(ξ₁, ξ₂, 1 − ξ₁ − ξ₂)`.
pub fn reaction_step_exact(
    field: &SpeciesField,
    s: &ReactionMatrix,
    dt: f64,
) -> Result<SpeciesField> {
    check_dt(dt)?;
    let increment = matrix_expm1_3x3(s.matrix(), dt);
    let mut out = field.clone();
    apply_propagator(&mut out, &increment);
    Ok(out)
}

/// `ξ ← ξ + E·ξ` with `E = exp(S·τ) − I` from [`matrix_expm1_3x3`].
pub(crate) fn apply_propagator(field: &mut SpeciesField, increment: &Matrix3<f64>) {
    let (xi1, xi2) = field.parts_mut();
    for (x1, x2) in xi1.iter_mut().zip(xi2.iter_mut()) {
        let v = increment * Vector3::new(*x1, *x2, 1.0 - *x1 - *x2);
        *x1 += v[0];
        *x2 += v[1];
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Grid1D;
    use crate::model::reaction_matrix_example;
    use proptest::prelude::*;

    /// Classical RK4 on `dξ/dt = S·ξ`.
    pub(crate) fn rk4(s: &Matrix3<f64>, x0: Vector3<f64>, t: f64, steps: usize) -> Vector3<f64> {
        let h = t / steps as f64;
        let mut x = x0;
        for _ in 0..steps {
            let k1 = s * x;
            let k2 = s * (x + k1 * (h / 2.0));
            let k3 = s * (x + k2 * (h / 2.0));
            let k4 = s * (x + k3 * h);
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        x
    }

    #[test]
    fn zero_flux_leaves_field_unchanged() {
        let g = Grid1D::new(4).unwrap();
        let f = SpeciesField::new(vec![0.8, 0.8, 0.4, 0.0, 0.0], vec![0.2; 5]).unwrap();
        let out = diffusion_step(&f, &FluxField::zeros(5), 0.01, &g.forward()).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn diffusion_step_matches_dense_oracle() {
        let g = Grid1D::new(4).unwrap();
        let f = SpeciesField::new(vec![0.8, 0.8, 0.4, 0.0, 0.0], vec![0.2; 5]).unwrap();
        let flux = FluxField::new(vec![0.0, 0.1, 0.2, 0.1, 0.0], vec![0.0; 5]).unwrap();
        let out = diffusion_step(&f, &flux, 0.01, &g.forward()).unwrap();

        // Dense D₊: 1/Δx on the diagonal, −1/Δx on the subdiagonal.
        let n1 = flux.n1();
        let mut div = [0.0; 5];
        for (i, d) in div.iter_mut().enumerate() {
            for (j, n) in n1.iter().enumerate() {
                let m = if i == j {
                    4.0
                } else if j + 1 == i {
                    -4.0
                } else {
                    0.0
                };
                *d += m * n;
            }
        }
        assert_eq!(div, [0.0, 0.4, 0.4, -0.4, -0.4]);
        let want = [0.8, 0.796, 0.396, 0.004, 0.004];
        for j in 0..5 {
            assert!((out.xi1()[j] - (f.xi1()[j] - 0.01 * div[j])).abs() < 1e-15);
            assert!((out.xi1()[j] - want[j]).abs() < 1e-15);
        }
        let before: f64 = f.xi1().iter().sum();
        let after: f64 = out.xi1().iter().sum();
        assert!((before - after).abs() < 1e-15);
    }

    #[test]
    fn zero_rates_leave_field_unchanged() {
        let f = SpeciesField::new(vec![0.5, 0.1], vec![0.2, 0.7]).unwrap();
        let coeffs = ReactionEulerCoeffs::from_matrix(&ReactionMatrix::zero());
        assert_eq!(reaction_step_euler(&f, &coeffs, 0.1).unwrap(), f);
        assert_eq!(reaction_step_exact(&f, &ReactionMatrix::zero(), 0.1).unwrap(), f);
    }

    #[test]
    fn euler_matches_full_system_euler() {
        let m = reaction_matrix_example(1).unwrap();
        let coeffs = ReactionEulerCoeffs::from_matrix(&m);
        let f = SpeciesField::new(vec![0.5], vec![0.2]).unwrap();
        let dt = 1e-3;
        let out = reaction_step_euler(&f, &coeffs, dt).unwrap();
        let x = Vector3::new(0.5, 0.2, 0.3);
        let oracle = x + m.matrix() * x * dt;
        assert!((out.xi1()[0] - oracle[0]).abs() < 1e-16);
        assert!((out.xi2()[0] - oracle[1]).abs() < 1e-16);
        // Implied ξ₃ follows the third row, since the columns sum to zero.
        assert!((out.xi3(0) - oracle[2]).abs() < 1e-15);
    }

    #[test]
    fn exp_of_zero_and_diagonal() {
        assert_eq!(matrix_exp_3x3(&Matrix3::zeros(), 3.0), Matrix3::identity());
        let d = Matrix3::from_diagonal(&Vector3::new(-2.0, 0.5, -0.01));
        let e = matrix_exp_3x3(&d, 1.7);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { (d[(i, i)] * 1.7).exp() } else { 0.0 };
                assert!((e[(i, j)] - want).abs() < 1e-13, "({i},{j})");
            }
        }
    }

    #[test]
    fn exp_matches_rk4() {
        let m = reaction_matrix_example(1).unwrap();
        let x0 = Vector3::new(0.5, 0.2, 0.3);
        let got = matrix_exp_3x3(m.matrix(), 0.1) * x0;
        let want = rk4(m.matrix(), x0, 0.1, 100_000);
        assert!((got - want).amax() < 1e-10);
    }

    #[test]
    fn exact_step_matches_rk4_on_uniform_field() {
        let m = reaction_matrix_example(1).unwrap();
        let f = SpeciesField::uniform(3, 0.5, 0.2);
        let dt = 2.5e-5;
        let out = reaction_step_exact(&f, &m, dt).unwrap();
        let want = rk4(m.matrix(), Vector3::new(0.5, 0.2, 0.3), dt, 100);
        for j in 0..3 {
            assert!((out.xi1()[j] - want[0]).abs() < 1e-12);
            assert!((out.xi2()[j] - want[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_step_conserves_total_over_many_steps() {
        let m = reaction_matrix_example(3).unwrap();
        let increment = matrix_expm1_3x3(m.matrix(), 1e-3);
        let mut f = SpeciesField::new(vec![0.8, 0.1, 0.0], vec![0.2, 0.3, 0.9]).unwrap();
        let start = f.clone();
        for _ in 0..100_000 {
            apply_propagator(&mut f, &increment);
        }
        // ξ₃ is a closure, so check that the increment's columns carry no mass
        // and that the state actually moved towards equilibrium.
        for c in 0..3 {
            assert!(increment.column(c).sum().abs() < 1e-16);
        }
        for j in 0..3 {
            let v = increment * Vector3::new(f.xi1()[j], f.xi2()[j], f.xi3(j));
            assert!(v.sum().abs() < 1e-16);
            assert!((f.xi1()[j] + f.xi2()[j] + f.xi3(j) - 1.0).abs() < 1e-13);
        }
        assert_ne!(f, start);
    }

    #[test]
    fn expm1_agrees_with_exp_minus_identity() {
        let m = reaction_matrix_example(2).unwrap();
        for t in [1e-6, 1e-2, 3.0, 40.0] {
            let e = matrix_expm1_3x3(m.matrix(), t);
            let p = matrix_exp_3x3(m.matrix(), t);
            let diff = p - Matrix3::identity() - e;
            assert!(diff.abs().max() < 1e-15, "t = {t}");
        }
        // Small t keeps relative precision: E ≈ S·t.
        let e = matrix_expm1_3x3(m.matrix(), 1e-12);
        let lin = m.matrix() * 1e-12;
        assert!(((e - lin).abs().max()) < 1e-20);
    }

    #[test]
    fn euler_defect_is_second_order_per_step() {
        let m = reaction_matrix_example(3).unwrap();
        let coeffs = ReactionEulerCoeffs::from_matrix(&m);
        let f = SpeciesField::uniform(1, 0.6, 0.3);
        let defect = |dt: f64| {
            let e = reaction_step_euler(&f, &coeffs, dt).unwrap();
            let x = reaction_step_exact(&f, &m, dt).unwrap();
            (e.xi1()[0] - x.xi1()[0]).abs().max((e.xi2()[0] - x.xi2()[0]).abs())
        };
        let d = [defect(1e-2), defect(5e-3), defect(2.5e-3)];
        for w in d.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn rejects_bad_dt() {
        let f = SpeciesField::uniform(2, 0.1, 0.1);
        let c = ReactionEulerCoeffs::from_matrix(&ReactionMatrix::zero());
        assert!(reaction_step_euler(&f, &c, 0.0).is_err());
        assert!(reaction_step_exact(&f, &ReactionMatrix::zero(), -1.0).is_err());
    }

    proptest! {
        #[test]
        fn exp_semigroup(
            entries in prop::collection::vec(-1.0f64..1.0, 9),
            t1 in 0.0f64..2.0,
            t2 in 0.0f64..2.0,
        ) {
            let s = Matrix3::from_iterator(entries);
            let lhs = matrix_exp_3x3(&s, t1 + t2);
            let rhs = matrix_exp_3x3(&s, t1) * matrix_exp_3x3(&s, t2);
            prop_assert!((lhs - rhs).amax() < 1e-11);
        }
    }
}
