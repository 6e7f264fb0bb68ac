use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::data::{Dataset, TestGrid};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::finite_net::{init_two_layer, train, InitDistribution, LearningRateSchedule, Params, ScheduleMode, TrainConfig};
use crate::reduce::pairwise_mean_by;

use super::bounds::{apriori_bound, BoundInputs};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationConfig {
    /// `(N₁, N₂)` ladder.
    pub ladder: Vec<(usize, usize)>,
    pub horizon: f64,
    /// `α` of the constant schedule.
    pub constant_alpha: f64,
    pub replicates: usize,
    pub seed: u64,
    pub init: InitDistribution,
}

/// Mean absolute change per entry (`W¹` rows by Euclidean norm).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupDisplacement {
    pub c: f64,
    pub w1: f64,
    pub w2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub n1: usize,
    pub n2: usize,
    pub mode: ScheduleMode,
    pub initial_loss: f64,
    pub final_loss: f64,
    /// Replicate mean of `(L₀ − L_T) / L₀`.
    pub loss_reduction: f64,
    pub displacement: GroupDisplacement,
    pub max_norm_total: f64,
    pub bound_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn reductions(&self, mode: ScheduleMode) -> Vec<f64> {
        self.rows.iter().filter(|r| r.mode == mode).map(|r| r.loss_reduction).collect()
    }

    /// Whether `mode`'s reduction never grows by more than `allowance · |previous|`
    /// from one ladder point to the next.
    pub fn is_decreasing(&self, mode: ScheduleMode, allowance: f64) -> bool {
        self.reductions(mode).windows(2).all(|w| w[1] <= w[0] + allowance * w[0].abs())
    }
}

struct Cell {
    l0: f64,
    lt: f64,
    disp: GroupDisplacement,
    norm: f64,
    violated: bool,
}

fn displacement(p0: &Params, p1: &Params) -> GroupDisplacement {
    let mean_abs = |a: &[f64], b: &[f64]| pairwise_mean_by(a.len(), |k| (a[k] - b[k]).abs());
    match (p0, p1) {
        (Params::Two(a), Params::Two(b)) => GroupDisplacement {
            c: mean_abs(&a.c, &b.c),
            w1: pairwise_mean_by(a.n1, |j| {
                (0..a.d).map(|l| (a.w1[j * a.d + l] - b.w1[j * a.d + l]).powi(2)).sum::<f64>().sqrt()
            }),
            w2: mean_abs(&a.w2, &b.w2),
        },
        _ => GroupDisplacement::default(),
    }
}

/// Trains every ladder point under the scaled and the constant schedule from
/// identical initializations and sample streams.
pub fn ablation_study(cfg: &AblationConfig, data: &Dataset, grid: &TestGrid, act: &Activation, exec: Exec) -> Result<AblationReport> {
    if cfg.ladder.is_empty() || cfg.replicates == 0 {
        return Err(Error::config("ablation needs a non-empty ladder and at least one replicate"));
    }
    let modes = [LearningRateSchedule::scaled(2), LearningRateSchedule::constant(2, cfg.constant_alpha)];
    let r = cfg.replicates;
    let cells = exec
        .map(cfg.ladder.len() * modes.len() * r, |k| -> Result<Cell> {
            let (w, m, rep) = (k / (modes.len() * r), (k / r) % modes.len(), k % r);
            let (n1, n2) = cfg.ladder[w];
            let p0 = init_two_layer(&cfg.init, n1, n2, data.dim(), cfg.seed, rep as u64)?;
            let tcfg = TrainConfig { replicate: rep as u64, keep_params: true, ..TrainConfig::new(cfg.horizon, cfg.seed) };
            let traj = train(&p0, data, act, &modes[m], &tcfg, grid)?;
            let rates = modes[m].learning_rates(&[n1, n2])?;
            let bound = apriori_bound(&BoundInputs::for_network(&p0, &rates, data, act)?, cfg.horizon).total;
            let (first, last) = (traj.initial(), traj.last());
            let disp = match (&first.params, &last.params) {
                (Some(a), Some(b)) => displacement(a, b),
                _ => GroupDisplacement::default(),
            };
            Ok(Cell { l0: first.loss, lt: last.loss, disp, norm: traj.max_param_total(), violated: traj.max_param_total() > bound })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (w, &(n1, n2)) in cfg.ladder.iter().enumerate() {
        for (m, sched) in modes.iter().enumerate() {
            let cs = &cells[(w * modes.len() + m) * r..(w * modes.len() + m + 1) * r];
            let mean = |f: &dyn Fn(&Cell) -> f64| pairwise_mean_by(r, |q| f(&cs[q]));
            rows.push(AblationRow {
                n1,
                n2,
                mode: sched.mode,
                initial_loss: mean(&|c| c.l0),
                final_loss: mean(&|c| c.lt),
                loss_reduction: mean(&|c| if c.l0 > 0.0 { (c.l0 - c.lt) / c.l0 } else { 0.0 }),
                displacement: GroupDisplacement {
                    c: mean(&|c| c.disp.c),
                    w1: mean(&|c| c.disp.w1),
                    w2: mean(&|c| c.disp.w2),
                },
                max_norm_total: cs.iter().map(|c| c.norm).fold(0.0, f64::max),
                bound_violations: cs.iter().filter(|c| c.violated).count(),
            });
        }
    }
    Ok(AblationReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_dataset, DomainBox, TeacherSpec};

    fn setup() -> (Dataset, TestGrid) {
        let dom = DomainBox::new(-1.0, 1.0).unwrap();
        let ds = generate_dataset(&TeacherSpec::trigonometric(&[(0.5, std::f64::consts::PI, 0.0)]), 1, 32, dom, 1).unwrap();
        (ds, TestGrid::draw(1, 8, dom, 1))
    }

    #[test]
    fn zero_constant_rate_freezes_everything() {
        let (ds, grid) = setup();
        let cfg = AblationConfig {
            ladder: vec![(16, 8)],
            horizon: 1.0,
            constant_alpha: 0.0,
            replicates: 2,
            seed: 3,
            init: InitDistribution::default(),
        };
        let rep = ablation_study(&cfg, &ds, &grid, &Activation::sigmoid(), Exec::Parallel).unwrap();
        let constant = rep.rows.iter().find(|r| r.mode == ScheduleMode::Constant).unwrap();
        assert_eq!(constant.loss_reduction, 0.0);
        assert_eq!(constant.displacement, GroupDisplacement::default());
        let scaled = rep.rows.iter().find(|r| r.mode == ScheduleMode::Scaled).unwrap();
        assert!(scaled.displacement.w2 > 0.0);
        assert_eq!(scaled.initial_loss, constant.initial_loss);
    }

    #[test]
    fn trend_helper() {
        let row = |mode, loss_reduction| AblationRow {
            n1: 1,
            n2: 1,
            mode,
            initial_loss: 1.0,
            final_loss: 1.0,
            loss_reduction,
            displacement: GroupDisplacement::default(),
            max_norm_total: 0.0,
            bound_violations: 0,
        };
        let rep = AblationReport {
            rows: vec![row(ScheduleMode::Constant, 0.3), row(ScheduleMode::Constant, 0.32), row(ScheduleMode::Constant, 0.1)],
        };
        assert!(rep.is_decreasing(ScheduleMode::Constant, 0.1));
        assert!(!rep.is_decreasing(ScheduleMode::Constant, 0.05));
    }
}
