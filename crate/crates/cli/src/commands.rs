//! The four commands. Each turns a [`RunConfig`] into a set of output files
//! plus a short summary for stdout; writing is left to the caller.

use std::path::Path;

use orbitron_core::dynamics::{propagate, StepPlan};
use orbitron_core::montecarlo::{DEFAULT_BOUND_THRESHOLD, RNG_ALGORITHM};
use orbitron_core::{
    conserved_quantities, make_equilibrium, min_spin, orbital_frequency, run_batch, stability_conditions,
    verify_critical_point, DipoleState, DriftStats, EquilibriumSolution, OrbitronParams, PerturbationSpec,
    StabilityReport, Variation,
};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{csv_row, float, KvReport, STABILITY_MAP_HEADER, TRAJECTORY_HEADER, TRIALS_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Simulate,
    Equilibrium,
    Stability,
    Montecarlo,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CommandOutput {
    pub summary: String,
    pub files: Vec<OutputFile>,
    /// Set when the run produced partial output after a numerical fault.
    pub fault: Option<String>,
}

impl CommandOutput {
    fn push(&mut self, name: &str, contents: String) {
        self.files.push(OutputFile {
            name: name.to_owned(),
            contents,
        });
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|f| f.name == name).map(|f| f.contents.as_str())
    }
}

pub fn run_command(command: Command, cfg: &RunConfig, opts: &RunOptions) -> Result<CommandOutput, CliError> {
    let params = cfg.orbitron_params()?;
    match command {
        Command::Equilibrium => equilibrium(&params, cfg),
        Command::Stability => stability(&params, cfg),
        Command::Simulate => simulate(&params, cfg),
        Command::Montecarlo => montecarlo(&params, cfg, opts),
    }
}

pub fn write_outputs(output: &CommandOutput, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    for f in &output.files {
        let path = dir.join(&f.name);
        std::fs::write(&path, &f.contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn missing(block: &str) -> CliError {
    CliError::validation(format!("config has no [{block}] block"))
}

fn params_section(r: &mut KvReport, params: &OrbitronParams) {
    r.num("kappa", params.kappa)
        .num("h", params.h)
        .num("mu", params.mu)
        .num("mass", params.mass)
        .num("i_perp", params.i_perp)
        .num("i_axial", params.i_axial)
        .num("mu0", params.mu0);
}

fn equilibrium_section(r: &mut KvReport, params: &OrbitronParams, eq: &EquilibriumSolution) {
    r.num("r0", eq.r0)
        .num("r0_over_h", eq.r0 / params.h)
        .num("n0", eq.n0)
        .num("omega", eq.omega)
        .num("period", eq.period())
        .num("p0", eq.p0)
        .num("k", eq.k)
        .num("lambda1", eq.lambda1)
        .num("lambda2", eq.lambda2);
}

fn equilibrium(params: &OrbitronParams, cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let block = cfg.equilibrium.as_ref().ok_or_else(|| missing("equilibrium"))?;
    let n0 = block.spin().resolve(params, block.r0)?;
    let eq = make_equilibrium(params, block.r0, n0)?;
    let residual = verify_critical_point(params, &eq)?;
    let mut r = KvReport::new();
    params_section(&mut r, params);
    equilibrium_section(&mut r, params, &eq);
    r.num("critical_point_residual", residual);
    let mut out = CommandOutput {
        summary: format!(
            "equilibrium r0 = {} m: omega = {} rad/s, K = {} J, residual = {:.3e}",
            eq.r0, eq.omega, eq.k, residual
        ),
        ..Default::default()
    };
    out.push("equilibrium.txt", r.render());
    Ok(out)
}

fn verdict(report: &StabilityReport) -> &'static str {
    if report.conditions_hold() {
        "sufficient conditions hold"
    } else {
        "sufficient conditions fail"
    }
}

fn stability_point(params: &OrbitronParams, report: &StabilityReport) -> String {
    let mut r = KvReport::new();
    params_section(&mut r, params);
    equilibrium_section(&mut r, params, &report.equilibrium);
    r.num("geometric_lo", report.geometric_lo)
        .num("geometric_hi", report.geometric_hi)
        .flag("geometric_ok", report.geometric_ok)
        .num("dynamic_lhs", report.dynamic_lhs)
        .num("dynamic_rhs", report.dynamic_rhs)
        .flag("dynamic_ok", report.dynamic_ok)
        .flag("q_positive_definite", report.q_positive_definite)
        .flag("verdicts_agree", report.verdicts_agree())
        .text("verdict", verdict(report));
    match report.spin_bound {
        Some(b) => r.num("min_n0", b.n0_min).num("min_spin_rate", b.spin_rate_min),
        None => r.text("min_n0", "undefined").text("min_spin_rate", "undefined"),
    };
    for a in Variation::ALL {
        for b in Variation::ALL.into_iter().filter(|b| b.index() >= a.index()) {
            r.num(&format!("q_{}_{}", a.label(), b.label()), report.q.get(a, b));
        }
    }
    r.render()
}

fn stability(params: &OrbitronParams, cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let block = cfg.stability.as_ref().ok_or_else(|| missing("stability"))?;
    if block.r0.is_none() && block.sweep.is_none() {
        return Err(CliError::validation(
            "[stability] needs r0 or a [stability.sweep] table",
        ));
    }
    let mut out = CommandOutput::default();
    let mut lines = Vec::new();
    if let Some(r0) = block.r0 {
        let n0 = block.spin().resolve(params, r0)?;
        let report = stability_conditions(params, r0, n0)?;
        lines.push(format!("r0/h = {}: {}", report.ratio, verdict(&report)));
        out.push("stability.txt", stability_point(params, &report));
    }
    if let Some(sweep) = &block.sweep {
        let ratios = sweep.ratios()?;
        let spins = sweep.spins()?;
        let mut csv = String::from(STABILITY_MAP_HEADER);
        csv.push('\n');
        let (mut holds, mut pd, mut disagree) = (0usize, 0usize, 0usize);
        let mut window: Option<(f64, f64)> = None;
        for &ratio in &ratios {
            let r0 = ratio * params.h;
            for &n0 in &spins {
                let rep = stability_conditions(params, r0, n0)?;
                holds += rep.conditions_hold() as usize;
                pd += rep.q_positive_definite as usize;
                disagree += !rep.verdicts_agree() as usize;
                if rep.geometric_ok {
                    window = Some(window.map_or((ratio, ratio), |(lo, _)| (lo, ratio)));
                }
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    float(ratio),
                    float(r0),
                    float(n0),
                    rep.geometric_ok,
                    rep.dynamic_ok,
                    rep.q_positive_definite,
                    float(rep.dynamic_lhs),
                    float(rep.dynamic_rhs)
                ));
            }
        }
        let mut r = KvReport::new();
        r.int("points", ratios.len() * spins.len())
            .int("ratio_points", ratios.len())
            .int("n0_points", spins.len())
            .int("conditions_hold", holds)
            .int("q_positive_definite", pd)
            .int("disagreements", disagree);
        match window {
            Some((lo, hi)) => r.num("geometric_first_ratio", lo).num("geometric_last_ratio", hi),
            None => r
                .text("geometric_first_ratio", "none")
                .text("geometric_last_ratio", "none"),
        };
        lines.push(format!(
            "swept {} points: {holds} satisfy the conditions, {disagree} disagreements",
            ratios.len() * spins.len()
        ));
        out.push("stability_map.csv", csv);
        out.push("stability_sweep.txt", r.render());
    }
    out.summary = lines.join("\n");
    Ok(out)
}

fn simulate(params: &OrbitronParams, cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let block = cfg.simulate.as_ref().ok_or_else(|| missing("simulate"))?;
    let (initial, reference_radius) = match (&block.initial, block.r0) {
        (Some(init), None) => {
            let s = init.to_state()?;
            (s, s.x[0].hypot(s.x[1]))
        }
        (None, Some(r0)) => {
            let n0 = block.spin().resolve(params, r0)?;
            (make_equilibrium(params, r0, n0)?.state, r0)
        }
        _ => {
            return Err(CliError::validation(
                "[simulate] needs exactly one of r0 or [simulate.initial]",
            ))
        }
    };
    let period = || -> Result<f64, CliError> {
        if reference_radius > 0.0 {
            Ok(2.0 * std::f64::consts::PI / orbital_frequency(params, reference_radius)?)
        } else {
            Err(CliError::validation(
                "initial position is on the axis; give t_end and dt explicitly",
            ))
        }
    };
    let t_end = match (block.t_end, block.periods) {
        (Some(t), None) => t,
        (None, Some(n)) => n * period()?,
        _ => return Err(CliError::validation("[simulate] needs exactly one of t_end or periods")),
    };
    let dt = match (block.dt, block.steps_per_period) {
        (Some(dt), None) => dt,
        (None, spp) => {
            let spp = spp.unwrap_or(orbitron_core::montecarlo::DEFAULT_STEPS_PER_PERIOD);
            if spp == 0 {
                return Err(CliError::validation("steps_per_period must be at least 1"));
            }
            period()? / spp as f64
        }
        (Some(_), Some(_)) => return Err(CliError::validation("dt and steps_per_period are mutually exclusive")),
    };
    let save_every = block.save_every.unwrap_or(1);
    if save_every == 0 {
        return Err(CliError::validation("save_every must be at least 1"));
    }
    let plan = StepPlan::new(t_end, dt, block.renormalize.unwrap_or(true))?;
    let total = plan.steps();

    let mut csv = String::from(TRAJECTORY_HEADER);
    csv.push('\n');
    let mut states: Vec<DipoleState> = Vec::new();
    let mut conserved = Vec::new();
    let mut step = 0usize;
    let mut observer_error = None;
    let run = propagate(params, &initial, &plan, |t, s| {
        let index = step;
        step += 1;
        if observer_error.is_some() {
            return;
        }
        let c = match conserved_quantities(params, s) {
            Ok(c) => c,
            Err(e) => {
                observer_error = Some(e);
                return;
            }
        };
        states.push(*s);
        conserved.push(c);
        if index.is_multiple_of(save_every) || index == total {
            let mut row = vec![t];
            row.extend_from_slice(&s.to_array());
            row.extend_from_slice(&[c.energy, c.j3, c.casimir_nu2, c.casimir_nun]);
            csv.push_str(&csv_row(&row));
            csv.push('\n');
        }
    })?;
    let fault = match (&run.fault, observer_error) {
        (Some(f), _) => Some(format!("t = {}: {}", f.time, f.error)),
        (None, Some(e)) => Some(e.to_string()),
        (None, None) => None,
    };
    // a fault cuts the run short; make sure the last good state is recorded
    if fault.is_some() && !run.steps_taken.is_multiple_of(save_every) {
        if let (Some(s), Some(c)) = (states.last(), conserved.last()) {
            let mut row = vec![run.final_time];
            row.extend_from_slice(&s.to_array());
            row.extend_from_slice(&[c.energy, c.j3, c.casimir_nu2, c.casimir_nun]);
            csv.push_str(&csv_row(&row));
            csv.push('\n');
        }
    }
    let drift = DriftStats::from_samples(&states, &conserved);
    let mut r = KvReport::new();
    params_section(&mut r, params);
    r.num("t_end", t_end)
        .num("dt", dt)
        .int("steps_planned", total)
        .int("steps_taken", run.steps_taken)
        .num("final_time", run.final_time)
        .flag("renormalize", plan.renormalize)
        .int("save_every", save_every)
        .num("energy_rel_drift", drift.energy_rel)
        .num("j3_rel_drift", drift.j3_rel)
        .num("casimir_nun_abs_drift", drift.casimir_nun_abs)
        .num("unit_axis_abs_drift", drift.unit_axis_abs)
        .text("fault", fault.clone().unwrap_or_else(|| "none".into()));
    let mut out = CommandOutput {
        summary: format!(
            "simulated {} of {total} steps to t = {} s; energy drift {:.3e}",
            run.steps_taken, run.final_time, drift.energy_rel
        ),
        fault,
        ..Default::default()
    };
    out.push("trajectory.csv", csv);
    out.push("simulate.txt", r.render());
    Ok(out)
}

fn montecarlo(params: &OrbitronParams, cfg: &RunConfig, opts: &RunOptions) -> Result<CommandOutput, CliError> {
    let block = cfg.montecarlo.as_ref().ok_or_else(|| missing("montecarlo"))?;
    let n0 = block.spin().resolve(params, block.r0)?;
    let eq = make_equilibrium(params, block.r0, n0)?;
    let defaults = PerturbationSpec::default();
    let spec = PerturbationSpec {
        rel_eps: block.rel_eps.unwrap_or(defaults.rel_eps),
        seed: opts.seed.or(block.seed).unwrap_or(defaults.seed),
        n_trials: block.n_trials,
        horizon_periods: block.horizon_periods.unwrap_or(defaults.horizon_periods),
        steps_per_period: block.steps_per_period.unwrap_or(defaults.steps_per_period),
        renormalize: block.renormalize.unwrap_or(defaults.renormalize),
    };
    let threshold = block.threshold.unwrap_or(DEFAULT_BOUND_THRESHOLD);
    let batch = run_batch(params, &eq, &spec, threshold)?;

    let mut csv = String::from(TRIALS_HEADER);
    csv.push('\n');
    for t in &batch.trials {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            t.index,
            t.seed,
            float(t.max_deviation),
            t.bounded,
            t.fault
        ));
    }
    let mut r = KvReport::new();
    params_section(&mut r, params);
    equilibrium_section(&mut r, params, &eq);
    match min_spin(params, eq.r0) {
        Ok(b) => r.num("min_n0", b.n0_min),
        Err(_) => r.text("min_n0", "undefined"),
    };
    r.flag("equilibrium_conditions_hold", batch.equilibrium_conditions_hold)
        .text("rng", RNG_ALGORITHM)
        .int("seed", spec.seed)
        .int("n_trials", spec.n_trials)
        .num("rel_eps", spec.rel_eps)
        .num("horizon_periods", spec.horizon_periods)
        .int("steps_per_period", spec.steps_per_period)
        .flag("renormalize", spec.renormalize)
        .num("bound_threshold", threshold)
        .int("bounded", batch.bounded_count)
        .int("unbounded", batch.unbounded_count)
        .int("faults", batch.fault_count)
        .num("bounded_fraction", batch.bounded_fraction())
        .num("max_deviation_min", batch.summary.min)
        .num("max_deviation_p50", batch.summary.p50)
        .num("max_deviation_p90", batch.summary.p90)
        .num("max_deviation_p99", batch.summary.p99)
        .num("max_deviation_max", batch.summary.max);
    let mut out = CommandOutput {
        summary: format!(
            "{} of {} trials bounded ({} faults), worst deviation {:.3e}",
            batch.bounded_count, spec.n_trials, batch.fault_count, batch.summary.max
        ),
        ..Default::default()
    };
    out.push("montecarlo_trials.csv", csv);
    out.push("montecarlo.txt", r.render());
    Ok(out)
}
