//! Whole-run properties: conservation, the uphill region and agreement
//! of the pure-diffusion hierarchy.

use smsplit_core::{
    err_time_space, run, run_pure_diffusion, uphill_region, Component, GridHierarchy, MixtureParams, Profile,
    Scenario, Scheme,
};

fn diffusion(params: MixtureParams, profile: Profile, j: usize, n: usize) -> Scenario {
    Scenario::new(profile, params, None, j, n, Scheme::PureDiffusion).unwrap()
}

#[test]
fn asymptotic_step_profile_conserves_each_species() {
    let t = run_pure_diffusion(&diffusion(MixtureParams::asymptotic(), Profile::Step, 140, 40000)).unwrap();
    let first = &t.states()[0];
    let sums = |f: &smsplit_core::SpeciesField| -> [f64; 3] {
        let n = f.len();
        [f.xi1().iter().sum(), f.xi2().iter().sum(), (0..n).map(|j| f.xi3(j)).sum()]
    };
    let s0 = sums(first);
    for st in t.states() {
        let s = sums(st);
        for i in 0..3 {
            assert!((s[i] - s0[i]).abs() <= 1e-12 * s0[i], "species {i}: {} vs {}", s[i], s0[i]);
        }
    }
}

#[test]
fn duncan_toor_has_counter_gradient_cells_and_fick_has_none() {
    let uphill = run(&diffusion(MixtureParams::uphill(), Profile::Uphill, 140, 40000)).unwrap();
    let ind = uphill_region(&uphill).unwrap();
    assert!(ind.counter_gradient_cells() > 0);
    assert!(ind.down_gradient_cells() > 0);

    let fick = run(&diffusion(MixtureParams::fickian(0.34).unwrap(), Profile::Uphill, 140, 40000)).unwrap();
    assert_eq!(uphill_region(&fick).unwrap().counter_gradient_cells(), 0);
}

#[test]
fn semi_degenerate_run_approaches_the_reference() {
    let h = GridHierarchy::table1();
    let reference = run(&diffusion(MixtureParams::uphill(), Profile::Uphill, 190, 80000)).unwrap();
    let mut errs = Vec::new();
    for (j, n) in [(50, 5000), (100, 20000), (140, 40000)] {
        let t = run(&diffusion(MixtureParams::uphill(), Profile::Uphill, j, n)).unwrap();
        errs.push(err_time_space(&t, &reference, Component::Vectorial, &h).unwrap());
    }
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}
