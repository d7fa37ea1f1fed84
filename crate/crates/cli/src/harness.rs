//! `run` and `convergence` orchestration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use smsplit_core::{
    observed_order, run as run_scenario, sigma_sq_time_space, Component, ErrorReport, GridHierarchy, Scenario,
    Scheme, Trajectory,
};

use crate::config::{ConvergenceConfig, RunConfig};
use crate::error::{HarnessError, Result};
use crate::output::{self, fmt_f64, TableauRow};

/// Output directory when neither `--out` nor `out=` is given.
pub const DEFAULT_OUT: &str = "out";

/// Reference grid and scheme of the convergence study.
pub const REFERENCE_GRID: (usize, usize) = (190, 80000);
pub const REFERENCE_SCHEME: Scheme = Scheme::PicardReaction { iters: 3 };
pub const REFERENCE_LABEL: &str = "reference-iter3";

fn out_dir(cli: Option<&Path>, config: Option<&PathBuf>) -> PathBuf {
    cli.map(Path::to_path_buf)
        .or_else(|| config.cloned())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(HarnessError::io(dir))
}

#[derive(Debug)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub out_dir: PathBuf,
    pub probe_node: usize,
}

/// Runs one configuration and writes `trajectory.csv`, `summary.txt` and,
/// for reaction scenarios, `probe.csv`.
pub fn run(config: &RunConfig, out: Option<&Path>) -> Result<RunOutcome> {
    let dir = out_dir(out, config.out.as_ref());
    let probe_node = config
        .scenario
        .grid()
        .nearest_node(config.probe)
        .map_err(HarnessError::core("probe"))?;
    let context = format!(
        "{} with {} on {}x{}",
        config.kind.name(),
        config.scenario.scheme().label(),
        config.scenario.intervals(),
        config.scenario.time_steps()
    );
    let trajectory = run_scenario(&config.scenario).map_err(HarnessError::core(context))?;
    create_dir(&dir)?;
    output::write_file(&dir.join("trajectory.csv"), &output::trajectory_csv(&trajectory))?;
    output::write_file(
        &dir.join("summary.txt"),
        &output::summary_txt(&config.kind.name(), &trajectory, probe_node),
    )?;
    if config.kind.has_reaction() {
        output::write_file(&dir.join("probe.csv"), &output::probe_csv(&trajectory, probe_node))?;
    }
    Ok(RunOutcome {
        trajectory,
        out_dir: dir,
        probe_node,
    })
}

/// Loop time of one convergence run.
#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeRow {
    pub scheme: String,
    pub intervals: usize,
    pub time_steps: usize,
    pub loop_seconds: f64,
}

#[derive(Debug)]
pub struct ConvergenceOutcome {
    pub rows: Vec<TableauRow>,
    pub runtimes: Vec<RuntimeRow>,
    pub out_dir: PathBuf,
}

fn scenario_for(config: &ConvergenceConfig, scheme: Scheme, (j, n): (usize, usize)) -> Result<Scenario> {
    Scenario::new(config.profile, config.kind.mixture(), config.kind.reaction(), j, n, scheme)
        .map_err(HarnessError::core(format!("{} on {j}x{n}", scheme.label())))
}

fn runtimes_csv(rows: &[RuntimeRow]) -> String {
    let mut s = String::from("scheme,J,N,loop_seconds\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{:.6}", r.scheme, r.intervals, r.time_steps, r.loop_seconds);
    }
    s
}

/// Runs the (190, 80000) iter3 reference, then every (scheme, level) pair
/// on up to `workers` threads, and writes `tableau.csv` (deterministic)
/// and `runtimes.csv` (wall times).
pub fn convergence(config: &ConvergenceConfig, workers: usize, out: Option<&Path>) -> Result<ConvergenceOutcome> {
    if workers == 0 {
        return Err(HarnessError::Validation("--workers must be at least 1".into()));
    }
    let dir = out_dir(out, config.out.as_ref());
    let hierarchy = GridHierarchy::table1();
    let reference_scenario = scenario_for(config, REFERENCE_SCHEME, REFERENCE_GRID)?;
    let jobs: Vec<(Scheme, (usize, usize))> = config
        .schemes
        .iter()
        .flat_map(|&s| config.levels.iter().map(move |&l| (s, l)))
        .collect();
    let scenarios: Vec<Scenario> = jobs
        .iter()
        .map(|&(s, l)| scenario_for(config, s, l))
        .collect::<Result<_>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Validation(format!("cannot start {workers} workers: {e}")))?;
    let reference = run_scenario(&reference_scenario).map_err(HarnessError::core("reference run"))?;

    let evaluate = |sc: &Scenario| -> Result<(TableauRow, RuntimeRow)> {
        let label = sc.scheme().label();
        let context = format!("{label} on {}x{}", sc.intervals(), sc.time_steps());
        let traj = run_scenario(sc).map_err(HarnessError::core(context.clone()))?;
        let report = ErrorReport::time_space(&traj, &reference, &hierarchy).map_err(HarnessError::core(context.clone()))?;
        let sigma = sigma_sq_time_space(&traj, &reference, Component::Vectorial, &hierarchy)
            .map_err(HarnessError::core(context))?;
        Ok((
            TableauRow {
                scheme: label.clone(),
                intervals: sc.intervals(),
                time_steps: sc.time_steps(),
                dt: report.dt,
                err1: report.err1,
                err2: report.err2,
                err_vec: report.err_vec,
                sigma_sq: sigma,
                observed_order: None,
            },
            RuntimeRow {
                scheme: label,
                intervals: sc.intervals(),
                time_steps: sc.time_steps(),
                loop_seconds: traj.loop_time().as_secs_f64(),
            },
        ))
    };
    let results: Vec<Result<(TableauRow, RuntimeRow)>> = pool.install(|| scenarios.par_iter().map(evaluate).collect());

    let mut rows = vec![TableauRow {
        scheme: REFERENCE_LABEL.into(),
        intervals: REFERENCE_GRID.0,
        time_steps: REFERENCE_GRID.1,
        dt: reference_scenario.dt(),
        err1: 0.0,
        err2: 0.0,
        err_vec: 0.0,
        sigma_sq: 0.0,
        observed_order: None,
    }];
    let mut runtimes = vec![RuntimeRow {
        scheme: REFERENCE_LABEL.into(),
        intervals: REFERENCE_GRID.0,
        time_steps: REFERENCE_GRID.1,
        loop_seconds: reference.loop_time().as_secs_f64(),
    }];
    let mut first_error = None;
    for result in results {
        match result {
            Ok((row, rt)) => {
                rows.push(row);
                runtimes.push(rt);
            }
            Err(e) if first_error.is_none() => first_error = Some(e),
            Err(_) => {}
        }
    }
    fill_orders(&mut rows[1..]);

    create_dir(&dir)?;
    output::write_file(&dir.join("tableau.csv"), &output::tableau_csv(&rows))?;
    output::write_file(&dir.join("runtimes.csv"), &runtimes_csv(&runtimes))?;
    if let Some(e) = first_error {
        return Err(HarnessError::Partial {
            message: format!(
                "{e}; partial results ({} of {} runs) written to {}",
                rows.len() - 1,
                jobs.len(),
                dir.display()
            ),
            exit_code: e.exit_code(),
        });
    }
    Ok(ConvergenceOutcome {
        rows,
        runtimes,
        out_dir: dir,
    })
}

/// Fits `err_vec` against Δt per scheme. Three or more levels use the
/// least-squares `observed_order`; exactly two use the two-point slope
/// (which is what a least-squares fit through two points gives). One level
/// or a zero error leaves the order unset.
fn fill_orders(rows: &mut [TableauRow]) {
    let mut labels: Vec<String> = rows.iter().map(|r| r.scheme.clone()).collect();
    labels.dedup();
    for label in labels {
        let (errs, dts): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|r| r.scheme == label)
            .map(|r| (r.err_vec, r.dt))
            .unzip();
        let order = match errs.len() {
            2 => two_point_slope(&errs, &dts),
            _ => observed_order(&errs, &dts).ok().flatten(),
        };
        for r in rows.iter_mut().filter(|r| r.scheme == label) {
            r.observed_order = order;
        }
    }
}

fn two_point_slope(errs: &[f64], dts: &[f64]) -> Option<f64> {
    let positive = |v: &f64| v.is_finite() && *v > 0.0;
    if !(errs.iter().all(positive) && dts.iter().all(positive)) || dts[0] == dts[1] {
        return None;
    }
    Some((errs[0] / errs[1]).ln() / (dts[0] / dts[1]).ln())
}

/// `rates --Te VALUE` output.
pub fn rates_report(t_e: f64) -> Result<String> {
    let (l1, l2) = smsplit_core::arrhenius_rates(t_e).map_err(HarnessError::core("rates"))?;
    Ok(format!("Te = {t_e}\nlambda1 = {l1:.6e}\nlambda2 = {l2:.6e}\n"))
}

/// `cfl --grid JxN --scenario NAME` output and verdict.
pub fn cfl_report(grid: (usize, usize), scenario: &str) -> Result<(String, bool)> {
    let kind = crate::config::ScenarioKind::parse(scenario)
        .ok_or_else(|| HarnessError::Validation(format!("unknown scenario {scenario:?}")))?;
    let (j, n) = grid;
    if j < 2 || n < 1 {
        return Err(HarnessError::Validation(format!("grid {j}x{n} needs J >= 2 and N >= 1")));
    }
    let dx = 1.0 / j as f64;
    let dt = 1.0 / n as f64;
    let dt_max = smsplit_core::cfl_max_dt(dx, &kind.mixture()).map_err(HarnessError::core("cfl"))?;
    let ok = dt <= dt_max;
    let report = format!(
        "grid = {j}x{n}\ndx = {}\ndt = {}\ndt_max = {}\n{}\n",
        fmt_f64(dx),
        fmt_f64(dt),
        fmt_f64(dt_max),
        if ok { "PASS" } else { "FAIL" }
    );
    Ok((report, ok))
}

#[cfg(test)]
mod tests {
    use std::fs;

    use crate::output::{parse_tableau_csv, parse_trajectory_csv};
    use crate::{convergence, parse_config, parse_convergence_config, run};

    #[test]
    fn trajectory_csv_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config("scenario=hydrogen-3\nscheme=aba-updated\nlevel=0\ncadence=100\n").unwrap();
        let outcome = run(&cfg, Some(dir.path())).unwrap();
        let text = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
        let back = parse_trajectory_csv(&text, &cfg.scenario).unwrap();
        assert_eq!(back.times(), outcome.trajectory.times());
        assert_eq!(back.states(), outcome.trajectory.states());
        assert_eq!(back.fluxes(), outcome.trajectory.fluxes());
        assert_eq!(back.len(), 51);
    }

    #[test]
    fn reaction_run_writes_probe_series_at_node_nearest_072() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config("scenario=hydrogen-1\nscheme=iter2\ngrid=140x40000\n").unwrap();
        let outcome = run(&cfg, Some(dir.path())).unwrap();
        assert_eq!(outcome.probe_node, 101);
        let probe = fs::read_to_string(dir.path().join("probe.csv")).unwrap();
        let mut lines = probe.lines();
        assert_eq!(lines.next(), Some("t,x,xi1,xi2,xi3"));
        let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first[1], 101.0 / 140.0);
        assert_eq!(lines.count(), 200);
    }

    #[test]
    fn identical_configs_give_identical_files() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let cfg = parse_config("scenario=hydrogen-2\nscheme=nested\nlevel=1\n").unwrap();
        run(&cfg, Some(a.path())).unwrap();
        run(&cfg, Some(b.path())).unwrap();
        for file in ["trajectory.csv", "probe.csv"] {
            assert_eq!(
                fs::read(a.path().join(file)).unwrap(),
                fs::read(b.path().join(file)).unwrap(),
                "{file}"
            );
        }
    }

    #[test]
    fn small_convergence_study() {
        let one = tempfile::tempdir().unwrap();
        let two = tempfile::tempdir().unwrap();
        let cfg = parse_convergence_config("schemes=ab\nlevels=0,1\n").unwrap();
        let a = convergence(&cfg, 1, Some(one.path())).unwrap();
        convergence(&cfg, 2, Some(two.path())).unwrap();
        assert_eq!(a.rows.len(), 3);
        assert_eq!(a.rows[0].scheme, "reference-iter3");
        assert_eq!((a.rows[1].intervals, a.rows[2].intervals), (50, 70));
        // Two levels give the two-point slope; the single reference row none.
        assert!(a.rows[0].observed_order.is_none());
        let (e, d) = ([a.rows[1].err_vec, a.rows[2].err_vec], [a.rows[1].dt, a.rows[2].dt]);
        let slope = (e[0] / e[1]).ln() / (d[0] / d[1]).ln();
        assert_eq!(a.rows[1].observed_order, Some(slope));
        assert_eq!(a.rows[2].observed_order, Some(slope));
        let text = fs::read_to_string(one.path().join("tableau.csv")).unwrap();
        assert_eq!(parse_tableau_csv(&text).unwrap(), a.rows);
        // Worker count does not change the deterministic output.
        assert_eq!(text, fs::read_to_string(two.path().join("tableau.csv")).unwrap());
        assert!(one.path().join("runtimes.csv").exists());
    }
}
