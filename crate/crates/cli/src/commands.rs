//! One runner per subcommand. Each returns its report, flat table and checks;
//! [`crate::run`] turns them into artifacts.

use meanfield_core::analysis::{
    ablation_study, apriori_bound, coupling_distance, error_functional, lyapunov_check, moment_study, rate_study,
    stationarity_residuals, AblationConfig, BoundInputs, LyapunovSeries, MomentStudyConfig, RateStudyConfig,
};
use meanfield_core::finite_net::{
    init_params, train, GroupRates, LearningRateSchedule, Params, ScheduleMode, TrainConfig, TrainTrajectory,
};
use meanfield_core::activation::OuterActivation;
use meanfield_core::limit_ode::{
    integrate, integrate_limit, integrate_limit_three_layer, intermediate_system, IntegrateConfig, LimitState,
    LimitTrajectory, ParticlePools, SnapshotPlan, ThreeLayerPools, TwoLayerLimit,
};
use meanfield_core::{Exec, Result};
use serde_json::{json, Value};

use crate::artifact::{Check, Table};
use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Subcommand {
    Train,
    Limit,
    Compare,
    RateStudy,
    Lyapunov,
    Ablation,
    Moments,
}

impl Subcommand {
    pub const ALL: [Subcommand; 7] = [
        Subcommand::Train,
        Subcommand::Limit,
        Subcommand::Compare,
        Subcommand::RateStudy,
        Subcommand::Lyapunov,
        Subcommand::Ablation,
        Subcommand::Moments,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Train => "train",
            Subcommand::Limit => "limit",
            Subcommand::Compare => "compare",
            Subcommand::RateStudy => "rate-study",
            Subcommand::Lyapunov => "lyapunov",
            Subcommand::Ablation => "ablation",
            Subcommand::Moments => "moments",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// What a runner produces before it is written out.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Value,
    pub table: Table,
    pub checks: Vec<Check>,
    /// Key figures for the one-line summary.
    pub headline: String,
}

pub fn execute(sub: Subcommand, cfg: &ExperimentConfig, exec: Exec) -> Result<Outcome> {
    match sub {
        Subcommand::Train => run_train(cfg),
        Subcommand::Limit => run_limit(cfg, exec),
        Subcommand::Compare => run_compare(cfg, exec),
        Subcommand::RateStudy => run_rate_study(cfg, exec),
        Subcommand::Lyapunov => run_lyapunov(cfg, exec),
        Subcommand::Ablation => run_ablation(cfg, exec),
        Subcommand::Moments => run_moments(cfg, exec),
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize to JSON")
}

fn strip_states(traj: &mut LimitTrajectory<LimitState>) {
    for s in &mut traj.snapshots {
        s.state = None;
    }
}

fn limit_plan(times: &[f64], every: usize) -> SnapshotPlan {
    if every > 0 {
        SnapshotPlan::Every(every)
    } else {
        SnapshotPlan::Times(times.to_vec())
    }
}

fn snapshot_table(rows: impl Iterator<Item = (f64, usize, f64, meanfield_core::finite_net::ParamNorms)>) -> Table {
    let mut t = Table::new(&["t", "step", "loss", "norm_c", "norm_w1", "norm_w2", "norm_w3", "norm_total"]);
    for (time, step, loss, n) in rows {
        t.push(vec![num(time), step.to_string(), num(loss), num(n.c), num(n.w1), num(n.w2), opt(n.w3), num(n.total())]);
    }
    t
}

/// Strict loss increases between consecutive snapshots.
fn loss_increases(losses: &[f64]) -> usize {
    losses.windows(2).filter(|w| w[1] > w[0]).count()
}

fn run_train(cfg: &ExperimentConfig) -> Result<Outcome> {
    let s = &cfg.train;
    let (data, grid) = cfg.task_data()?;
    let act = cfg.activation_fn();
    let depth = s.widths.len();
    let mut sched = match s.schedule {
        ScheduleMode::Scaled => LearningRateSchedule::scaled(depth),
        ScheduleMode::Constant => LearningRateSchedule::constant(depth, s.constant_alpha),
    };
    if s.freeze_c {
        sched = sched.with_base(GroupRates { c: 0.0, ..GroupRates::ONES });
    }
    let tcfg = TrainConfig { snapshot_times: s.snapshot_times.clone(), replicate: s.replicate, ..TrainConfig::new(s.horizon, cfg.seed) };
    let p0 = init_params(&cfg.init.distribution(), &s.widths, data.dim(), cfg.seed, s.replicate)?;
    let (traj, bound): (TrainTrajectory, _) = match p0 {
        Params::Two(mut p) => {
            if s.identity_outer {
                p.outer = OuterActivation::Identity;
            }
            let traj = train(&p, &data, &act, &sched, &tcfg, &grid)?;
            // The a-priori bound is derived for a bounded outer activation.
            let bound = match p.outer {
                OuterActivation::Hidden => Some(apriori_bound(&BoundInputs::for_network(&p, &traj.rates, &data, &act)?, s.horizon)),
                OuterActivation::Identity => None,
            };
            (traj, bound)
        }
        Params::Three(p) => (train(&p, &data, &act, &sched, &tcfg, &grid)?, None),
    };
    let mut checks = vec![];
    if let Some(b) = bound {
        checks.push(Check::at_most("max_param_total_vs_bound", traj.max_param_total(), b.total));
    }
    let (l0, lt) = (traj.initial().loss, traj.last().loss);
    Ok(Outcome {
        table: snapshot_table(traj.snapshots.iter().map(|s| (s.t, s.step, s.loss, s.param_norms))),
        headline: format!("steps={} loss {l0:.6e} -> {lt:.6e}", traj.last().step),
        report: json!({ "trajectory": to_value(&traj), "bound": to_value(&bound) }),
        checks,
    })
}

fn run_limit(cfg: &ExperimentConfig, exec: Exec) -> Result<Outcome> {
    let s = &cfg.limit;
    let (data, grid) = cfg.task_data()?;
    let act = cfg.activation_fn();
    let dist = cfg.init.distribution();
    let icfg = IntegrateConfig {
        scheme: s.scheme,
        snapshots: limit_plan(&s.snapshot_times, s.snapshot_every),
        ..IntegrateConfig::new(s.dt, s.horizon)
    };
    let mut checks = vec![];
    let mut extra = json!(null);
    let (traj_value, table, losses) = if s.depth == 2 {
        let pools = ParticlePools::draw(&dist, data.dim(), s.m_c, s.m_w, s.m_u, cfg.seed, s.replicate)?;
        let bound = apriori_bound(&BoundInputs::for_pools(&pools, &data, &act), s.horizon);
        let run = |dt: f64| {
            let c = IntegrateConfig { keep_states: s.coupling_check, ..icfg.clone() };
            integrate_limit(&pools, &data, &act, &IntegrateConfig { dt, ..c }, &grid, exec)
        };
        let mut traj = run(s.dt)?;
        checks.push(Check::at_most("max_norm_total_vs_bound", traj.max_norm_total(), bound.total));
        if s.coupling_check {
            let half = run(s.dt / 2.0)?;
            let quarter = run(s.dt / 4.0)?;
            let q1 = coupling_distance(&traj, &half, &act, &grid)?;
            let q2 = coupling_distance(&half, &quarter, &act, &grid)?;
            let factor = 2f64.powi(s.scheme.order() as i32);
            let ratio = (q1.last() / q2.last()).sqrt();
            let tol = s.coupling_tolerance;
            checks.push(Check::at_most("coupling_q0", q1.q[0].max(q2.q[0]), 0.0));
            checks.push(Check::within("coupling_sqrt_q_ratio", ratio, Some(factor * (1.0 - tol)), Some(factor * (1.0 + tol))));
            extra = json!({ "q_dt_vs_half": to_value(&q1), "q_half_vs_quarter": to_value(&q2), "sqrt_ratio": ratio });
            strip_states(&mut traj);
        }
        let losses: Vec<f64> = traj.snapshots.iter().map(|s| s.loss).collect();
        let table = snapshot_table(traj.snapshots.iter().map(|s| (s.t, s.step, s.loss, s.norms)));
        (json!({ "trajectory": to_value(&traj), "bound": to_value(&bound) }), table, losses)
    } else {
        let pools = ThreeLayerPools::draw(&dist, data.dim(), s.m_c, s.m_v, s.m_w, s.m_u, cfg.seed, s.replicate)?;
        let traj = integrate_limit_three_layer(&pools, &data, &act, &icfg, &grid, exec)?;
        let losses: Vec<f64> = traj.snapshots.iter().map(|s| s.loss).collect();
        let table = snapshot_table(traj.snapshots.iter().map(|s| (s.t, s.step, s.loss, s.norms)));
        (json!({ "trajectory": to_value(&traj) }), table, losses)
    };
    let increases = loss_increases(&losses);
    checks.push(Check::at_most("loss_increases", increases as f64, 0.0));
    let (l0, lt) = (losses[0], *losses.last().unwrap());
    let ratio = if l0 > 0.0 { lt / l0 } else { 0.0 };
    if let Some(max) = s.max_final_loss_ratio {
        checks.push(Check::at_most("final_loss_ratio", ratio, max));
    }
    Ok(Outcome {
        report: json!({ "limit": traj_value, "coupling": extra, "final_loss_ratio": ratio, "loss_increases": increases }),
        table,
        checks,
        headline: format!("loss {l0:.6e} -> {lt:.6e} (ratio {ratio:.4})"),
    })
}

fn run_compare(cfg: &ExperimentConfig, exec: Exec) -> Result<Outcome> {
    let s = &cfg.compare;
    let (data, grid) = cfg.task_data()?;
    let act = cfg.activation_fn();
    let dist = cfg.init.distribution();
    let pools = ParticlePools::draw(&dist, data.dim(), s.m_c, s.m_w, s.m_u, cfg.seed, s.replicate)?;
    let c0 = &pools.c[..s.n2];
    let icfg = IntegrateConfig {
        scheme: s.scheme,
        snapshots: SnapshotPlan::Times(s.snapshot_times.clone()),
        keep_states: true,
        ..IntegrateConfig::new(s.dt, s.horizon)
    };
    let mut reference = integrate_limit(&pools, &data, &act, &icfg, &grid, exec)?;
    let mut inter = intermediate_system(c0, &pools, &data, &act, &icfg, &grid, exec)?;
    let errors = error_functional(&inter, &reference, &act, &grid)?;
    let bound_ref = apriori_bound(&BoundInputs::for_pools(&pools, &data, &act), s.horizon);
    let bound_int = apriori_bound(&BoundInputs::for_pools(&pools.nested(s.n2)?, &data, &act), s.horizon);
    strip_states(&mut reference);
    strip_states(&mut inter);

    // The finite net starts from the same C₀; its first layer is an independent draw.
    let Params::Two(mut p0) = init_params(&dist, &[s.n1, s.n2], data.dim(), cfg.seed, s.replicate)? else {
        unreachable!("two widths give a two-layer network")
    };
    p0.c = c0.to_vec();
    let sched = LearningRateSchedule::scaled(2);
    let tcfg = TrainConfig { snapshot_times: s.snapshot_times.clone(), replicate: s.replicate, ..TrainConfig::new(s.horizon, cfg.seed) };
    let finite = train(&p0, &data, &act, &sched, &tcfg, &grid)?;
    let bound_fin = apriori_bound(&BoundInputs::for_network(&p0, &finite.rates, &data, &act)?, s.horizon);

    let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let mut table = Table::new(&[
        "t",
        "finite_t",
        "finite_loss",
        "intermediate_loss",
        "limit_loss",
        "sup_gap_finite_intermediate",
        "sup_gap_intermediate_limit",
        "error_functional",
    ]);
    let mut last_gaps = (0.0, 0.0);
    for (k, si) in inter.snapshots.iter().enumerate() {
        // The finite clock ticks in steps of 1/N₁; take its nearest snapshot.
        let sf = finite
            .snapshots
            .iter()
            .min_by(|a, b| (a.t - si.t).abs().total_cmp(&(b.t - si.t).abs()))
            .expect("training records at least one snapshot");
        let sr = &reference.snapshots[k];
        let gaps = (sup(&sf.g_on_grid, &si.g_on_grid), sup(&si.g_on_grid, &sr.g_on_grid));
        last_gaps = gaps;
        table.push(vec![
            num(si.t),
            num(sf.t),
            num(sf.loss),
            num(si.loss),
            num(sr.loss),
            num(gaps.0),
            num(gaps.1),
            num(errors.entries[k].total),
        ]);
    }
    let checks = vec![
        Check::at_most("finite_norm_vs_bound", finite.max_param_total(), bound_fin.total),
        Check::at_most("intermediate_norm_vs_bound", inter.max_norm_total(), bound_int.total),
        Check::at_most("limit_norm_vs_bound", reference.max_norm_total(), bound_ref.total),
    ];
    Ok(Outcome {
        report: json!({
            "finite": to_value(&finite),
            "intermediate": to_value(&inter),
            "limit": to_value(&reference),
            "error_functional": to_value(&errors),
        }),
        table,
        checks,
        headline: format!("sup|g_N1N2 - g_N2| = {:.4e}, sup|g_N2 - g| = {:.4e} at T", last_gaps.0, last_gaps.1),
    })
}

fn run_rate_study(cfg: &ExperimentConfig, exec: Exec) -> Result<Outcome> {
    let s = &cfg.rate_study;
    let (data, grid) = cfg.task_data()?;
    let rcfg = RateStudyConfig {
        n2_grid: s.n2_grid.clone(),
        m_c: s.m_c,
        m_w: s.m_w,
        m_u: s.m_u,
        dt: s.dt,
        horizon: s.horizon,
        scheme: s.scheme,
        replicates: s.replicates,
        seed: cfg.seed,
        init: cfg.init.distribution(),
        confidence: s.confidence,
    };
    let rep = rate_study(&rcfg, &data, &grid, &cfg.activation_fn(), exec)?;
    let mut header = vec!["n2".to_string(), "sup_mean_error".into(), "used".into()];
    header.extend((0..s.replicates).map(|r| format!("replicate_{r}")));
    let mut table = Table { header, rows: vec![] };
    for (w, &n2) in rep.fit.widths.iter().enumerate() {
        let mut row = vec![n2.to_string(), num(rep.fit.errors[w]), rep.fit.used[w].to_string()];
        row.extend(rep.per_replicate_sup_error[w].iter().map(|&e| num(e)));
        table.push(row);
    }
    let checks = vec![
        Check::within("slope", rep.fit.slope, Some(s.slope_band[0]), Some(s.slope_band[1])),
        Check::at_most("bound_violations", rep.bound_violations as f64, 0.0),
    ];
    Ok(Outcome {
        headline: format!("slope {:.4} ± {:.4}", rep.fit.slope, rep.fit.slope_half_width),
        report: to_value(&rep),
        table,
        checks,
    })
}

fn run_lyapunov(cfg: &ExperimentConfig, exec: Exec) -> Result<Outcome> {
    let s = &cfg.lyapunov;
    let (data, grid) = cfg.task_data()?;
    let act = cfg.activation_fn();
    let pools = ParticlePools::draw(&cfg.init.distribution(), data.dim(), s.m_c, s.m_w, s.m_u, cfg.seed, s.replicate)?;
    let bound = apriori_bound(&BoundInputs::for_pools(&pools, &data, &act), s.horizon);
    let sys = TwoLayerLimit { data: &data, act, grid: &grid, exec };
    let energy = |st: &LimitState| Ok(stationarity_residuals(st, &data, &act)?.s);
    let run = |dt: f64| -> Result<(LyapunovSeries, f64)> {
        let icfg = IntegrateConfig { scheme: s.scheme, snapshots: SnapshotPlan::Every(1), ..IntegrateConfig::new(dt, s.horizon) };
        let traj = integrate(&sys, &LimitState::from_pools(&pools), &icfg, Some(&energy))?;
        Ok((lyapunov_check(&traj, &data, &act)?, traj.max_norm_total()))
    };
    let p = s.scheme.order() as i32;
    let factor = 2f64.powi(p);
    let mut checks = vec![];
    let mut table = Table::new(&["dt", "t", "loss", "numeric_deriv", "minus_s"]);
    let mut series = vec![];
    for dt in [s.dt, s.dt / 2.0] {
        let (ser, norm) = run(dt)?;
        checks.push(Check::at_most(format!("identity_error@dt={dt}"), ser.max_identity_error, s.identity_constant * dt.powi(p)));
        checks.push(Check::at_most(
            format!("increases_above_c_dt2@dt={dt}"),
            ser.increases_above(s.increase_constant * dt * dt) as f64,
            0.0,
        ));
        checks.push(Check::at_most(format!("norm_vs_bound@dt={dt}"), norm, bound.total));
        for pt in &ser.points {
            table.push(vec![num(dt), num(pt.t), num(pt.loss), opt(pt.numeric_deriv), num(pt.minus_s)]);
        }
        series.push(ser);
    }
    let ratio = series[0].max_identity_error / series[1].max_identity_error;
    let tol = s.halving_tolerance;
    checks.push(Check::within("halving_ratio", ratio, Some(factor * (1.0 - tol)), Some(factor * (1.0 + tol))));
    Ok(Outcome {
        headline: format!(
            "identity error {:.3e} -> {:.3e} (ratio {ratio:.3}), max increase {:.3e}",
            series[0].max_identity_error, series[1].max_identity_error, series[0].max_increase
        ),
        report: json!({ "series": to_value(&series), "halving_ratio": ratio, "bound": to_value(&bound) }),
        table,
        checks,
    })
}

fn run_ablation(cfg: &ExperimentConfig, exec: Exec) -> Result<Outcome> {
    let s = &cfg.ablation;
    let (data, grid) = cfg.task_data()?;
    let acfg = AblationConfig {
        ladder: s.ladder.iter().map(|p| (p[0], p[1])).collect(),
        horizon: s.horizon,
        constant_alpha: s.constant_alpha,
        replicates: s.replicates,
        seed: cfg.seed,
        init: cfg.init.distribution(),
    };
    let rep = ablation_study(&acfg, &data, &grid, &cfg.activation_fn(), exec)?;
    let mut table = Table::new(&[
        "n1",
        "n2",
        "mode",
        "initial_loss",
        "final_loss",
        "loss_reduction",
        "displacement_c",
        "displacement_w1",
        "displacement_w2",
        "max_norm_total",
        "bound_violations",
    ]);
    let mut checks = vec![];
    for r in &rep.rows {
        let mode = match r.mode {
            ScheduleMode::Scaled => "scaled",
            ScheduleMode::Constant => "constant",
        };
        table.push(vec![
            r.n1.to_string(),
            r.n2.to_string(),
            mode.into(),
            num(r.initial_loss),
            num(r.final_loss),
            num(r.loss_reduction),
            num(r.displacement.c),
            num(r.displacement.w1),
            num(r.displacement.w2),
            num(r.max_norm_total),
            r.bound_violations.to_string(),
        ]);
        if r.mode == ScheduleMode::Scaled {
            checks.push(Check::at_least(format!("scaled_reduction@{}x{}", r.n1, r.n2), r.loss_reduction, s.min_scaled_reduction));
        }
    }
    checks.push(Check::flag("constant_reduction_decreasing", rep.is_decreasing(ScheduleMode::Constant, s.noise_allowance)));
    let violations: usize = rep.rows.iter().map(|r| r.bound_violations).sum();
    checks.push(Check::at_most("bound_violations", violations as f64, 0.0));
    let fmt = |v: Vec<f64>| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join("/");
    Ok(Outcome {
        headline: format!(
            "reduction scaled {} constant {}",
            fmt(rep.reductions(ScheduleMode::Scaled)),
            fmt(rep.reductions(ScheduleMode::Constant))
        ),
        report: to_value(&rep),
        table,
        checks,
    })
}

fn run_moments(cfg: &ExperimentConfig, exec: Exec) -> Result<Outcome> {
    let s = &cfg.moments;
    let (data, grid) = cfg.task_data()?;
    let mcfg = MomentStudyConfig {
        n1_ladder: s.n1_ladder.clone(),
        n2: s.n2,
        horizon: s.horizon,
        replicates: s.replicates,
        m_w: s.m_w,
        m_u: s.m_u,
        dt: s.dt,
        scheme: s.scheme,
        seed: cfg.seed,
        init: cfg.init.distribution(),
        functions: s.functions.clone(),
    };
    let rep = moment_study(&mcfg, &data, &grid, &cfg.activation_fn(), exec)?;
    let mut table = Table::new(&["n1", "function", "finite", "particle", "abs_diff"]);
    for (w, &n1) in rep.n1_ladder.iter().enumerate() {
        for (f, func) in rep.functions.iter().enumerate() {
            table.push(vec![n1.to_string(), func.label(), num(rep.finite[w][f]), num(rep.particle[f]), num(rep.abs_diff[w][f])]);
        }
    }
    let mean = rep.mean_abs_diff();
    let allowance = s.noise_allowance;
    let decreasing = mean.windows(2).all(|w| w[1] <= w[0] + allowance * w[0].abs());
    let mut checks = vec![Check::flag("mean_gap_decreasing_in_n1", decreasing)];
    if let Some(k) = rep.functions.iter().position(|f| *f == meanfield_core::analysis::TestFunction::One) {
        let dev = rep.finite.iter().map(|row| (row[k] - 1.0).abs()).fold((rep.particle[k] - 1.0).abs(), f64::max);
        checks.push(Check::at_most("unit_mass_deviation", dev, 1e-12));
    }
    Ok(Outcome {
        headline: format!("mean |finite - particle| {}", mean.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" -> ")),
        report: json!({ "study": to_value(&rep), "mean_abs_diff": mean }),
        table,
        checks,
    })
}
