use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::data::{Dataset, TestGrid};
use crate::error::{Error, Result};
use crate::reduce::{first_non_finite, pairwise_mean_by, sup_abs, sup_row_norm};
use crate::rng::{self, Purpose};

use super::forward::{forward_three_layer, forward_two_layer};
use super::params::{Params, ThreeLayerParams, TwoLayerParams};
use super::schedule::{LearningRateSchedule, LearningRates};
use super::sgd::{sgd_step_three_layer, sgd_step_two_layer};

/// Sup-norms per parameter group.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamNorms {
    /// `max_i |C_i|`
    pub c: f64,
    /// `max_j ‖W¹_j‖`
    pub w1: f64,
    pub w2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w3: Option<f64>,
}

impl ParamNorms {
    /// `max|C| + max‖W¹‖ + max|W²| (+ max|W³|)`, which dominates the per-path sums.
    pub fn total(&self) -> f64 {
        self.c + self.w1 + self.w2 + self.w3.unwrap_or(0.0)
    }
}

/// Common interface of the finite networks for training and diagnostics.
pub trait Network: Clone {
    fn depth(&self) -> usize;
    fn widths(&self) -> Vec<usize>;
    fn n1(&self) -> usize {
        self.widths()[0]
    }
    fn output(&self, act: &Activation, x: &[f64]) -> Result<f64>;
    fn step(&mut self, act: &Activation, x: &[f64], y: f64, rates: &LearningRates) -> Result<f64>;
    fn norms(&self) -> ParamNorms;
    /// Name of the first group holding a non-finite value, if any.
    fn non_finite_group(&self) -> Option<&'static str>;
    fn to_params(&self) -> Params;
}

impl Network for TwoLayerParams {
    fn depth(&self) -> usize {
        2
    }
    fn widths(&self) -> Vec<usize> {
        vec![self.n1, self.n2]
    }
    fn output(&self, act: &Activation, x: &[f64]) -> Result<f64> {
        Ok(forward_two_layer(self, act, x)?.g)
    }
    fn step(&mut self, act: &Activation, x: &[f64], y: f64, rates: &LearningRates) -> Result<f64> {
        sgd_step_two_layer(self, act, x, y, rates)
    }
    fn norms(&self) -> ParamNorms {
        ParamNorms { c: sup_abs(&self.c), w1: sup_row_norm(&self.w1, self.d), w2: sup_abs(&self.w2), w3: None }
    }
    fn non_finite_group(&self) -> Option<&'static str> {
        first_non_finite(&[("c", &self.c[..]), ("w1", &self.w1[..]), ("w2", &self.w2[..])])
    }
    fn to_params(&self) -> Params {
        Params::Two(self.clone())
    }
}

impl Network for ThreeLayerParams {
    fn depth(&self) -> usize {
        3
    }
    fn widths(&self) -> Vec<usize> {
        vec![self.n1, self.n2, self.n3]
    }
    fn output(&self, act: &Activation, x: &[f64]) -> Result<f64> {
        Ok(forward_three_layer(self, act, x)?.g)
    }
    fn step(&mut self, act: &Activation, x: &[f64], y: f64, rates: &LearningRates) -> Result<f64> {
        sgd_step_three_layer(self, act, x, y, rates)
    }
    fn norms(&self) -> ParamNorms {
        ParamNorms {
            c: sup_abs(&self.c),
            w1: sup_row_norm(&self.w1, self.d),
            w2: sup_abs(&self.w2),
            w3: Some(sup_abs(&self.w3)),
        }
    }
    fn non_finite_group(&self) -> Option<&'static str> {
        first_non_finite(&[("c", &self.c[..]), ("w1", &self.w1[..]), ("w2", &self.w2[..]), ("w3", &self.w3[..])])
    }
    fn to_params(&self) -> Params {
        Params::Three(self.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Limit-clock horizon `T`; `⌊N₁T⌋` steps are taken.
    pub horizon: f64,
    /// Limit times at which to snapshot; `0` and `T` are always included.
    pub snapshot_times: Vec<f64>,
    pub max_horizon: f64,
    pub seed: u64,
    /// Selects the SGD sampling stream for this run.
    pub replicate: u64,
    /// Keep full parameters in each snapshot.
    pub keep_params: bool,
}

impl TrainConfig {
    pub fn new(horizon: f64, seed: u64) -> Self {
        TrainConfig { horizon, snapshot_times: vec![], max_horizon: 1.0e3, seed, replicate: 0, keep_params: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSnapshot {
    pub t: f64,
    pub step: usize,
    /// Empirical loss over the whole dataset.
    pub loss: f64,
    pub g_on_grid: Vec<f64>,
    pub param_norms: ParamNorms,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<Params>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrajectory {
    pub widths: Vec<usize>,
    pub rates: LearningRates,
    pub snapshots: Vec<TrainSnapshot>,
}

impl TrainTrajectory {
    pub fn initial(&self) -> &TrainSnapshot {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &TrainSnapshot {
        self.snapshots.last().expect("trajectory always has an initial snapshot")
    }

    /// Largest `ParamNorms::total` along the recorded snapshots.
    pub fn max_param_total(&self) -> f64 {
        self.snapshots.iter().map(|s| s.param_norms.total()).fold(0.0, f64::max)
    }
}

/// Full-dataset loss of a network.
pub fn dataset_loss<N: Network>(net: &N, act: &Activation, data: &Dataset) -> Result<f64> {
    let preds = (0..data.len()).map(|s| net.output(act, data.input(s))).collect::<Result<Vec<_>>>()?;
    Ok(0.5 * pairwise_mean_by(data.len(), |s| {
        let r = data.target(s) - preds[s];
        r * r
    }))
}

fn snapshot<N: Network>(net: &N, act: &Activation, data: &Dataset, grid: &TestGrid, step: usize, keep: bool) -> Result<TrainSnapshot> {
    let n1 = net.n1() as f64;
    Ok(TrainSnapshot {
        t: step as f64 / n1,
        step,
        loss: dataset_loss(net, act, data)?,
        g_on_grid: (0..grid.len()).map(|k| net.output(act, grid.point(k))).collect::<Result<_>>()?,
        param_norms: net.norms(),
        params: keep.then(|| net.to_params()),
    })
}

/// Runs one-sample SGD from `p0` for `⌊N₁ T⌋` steps with samples drawn
/// uniformly with replacement from `data`.
///
/// A snapshot at limit time `t` is taken after `⌊N₁ t⌋` steps. Any non-finite
/// parameter aborts the run with [`Error::Divergence`].
pub fn train<N: Network>(
    p0: &N,
    data: &Dataset,
    act: &Activation,
    sched: &LearningRateSchedule,
    cfg: &TrainConfig,
    grid: &TestGrid,
) -> Result<TrainTrajectory> {
    if !(cfg.horizon >= 0.0 && cfg.horizon <= cfg.max_horizon) {
        return Err(Error::config(format!("horizon {} outside [0, {}]", cfg.horizon, cfg.max_horizon)));
    }
    if let Some(t) = cfg.snapshot_times.iter().find(|t| !(**t >= 0.0 && **t <= cfg.horizon)) {
        return Err(Error::config(format!("snapshot time {t} outside [0, {}]", cfg.horizon)));
    }
    let widths = p0.widths();
    if sched.depth != p0.depth() {
        return Err(Error::config(format!("schedule depth {} for a depth-{} network", sched.depth, p0.depth())));
    }
    let rates = sched.learning_rates(&widths)?;
    let n1 = p0.n1() as f64;
    let total = (n1 * cfg.horizon).floor() as usize;
    let mut marks: Vec<usize> = cfg
        .snapshot_times
        .iter()
        .map(|t| (n1 * t).floor() as usize)
        .chain([0, total])
        .collect();
    marks.sort_unstable();
    marks.dedup();

    let mut net = p0.clone();
    let mut rng = rng::stream(cfg.seed, Purpose::Sgd, cfg.replicate);
    let mut snapshots = Vec::with_capacity(marks.len());
    let mut next = 0;
    for k in 0..=total {
        if next < marks.len() && marks[next] == k {
            snapshots.push(snapshot(&net, act, data, grid, k, cfg.keep_params)?);
            next += 1;
        }
        if k == total {
            break;
        }
        let s = rng.random_range(0..data.len());
        net.step(act, data.input(s), data.target(s), &rates)?;
        if let Some(group) = net.non_finite_group() {
            return Err(Error::Divergence { step: k + 1, time: (k + 1) as f64 / n1, group });
        }
    }
    Ok(TrainTrajectory { widths, rates, snapshots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_dataset, DomainBox, TeacherSpec};
    use crate::finite_net::{init_two_layer, InitDistribution};

    fn setup() -> (Dataset, TestGrid, Activation) {
        let dom = DomainBox::new(-1.0, 1.0).unwrap();
        let ds = generate_dataset(&TeacherSpec::trigonometric(&[(0.5, 3.0, 0.0)]), 1, 32, dom, 1).unwrap();
        (ds, TestGrid::draw(1, 8, dom, 1), Activation::sigmoid())
    }

    #[test]
    fn zero_horizon_gives_initial_snapshot_only() {
        let (ds, grid, act) = setup();
        let p = init_two_layer(&InitDistribution::default(), 16, 4, 1, 1, 0).unwrap();
        let traj = train(&p, &ds, &act, &LearningRateSchedule::scaled(2), &TrainConfig::new(0.0, 1), &grid).unwrap();
        assert_eq!(traj.snapshots.len(), 1);
        assert_eq!(traj.snapshots[0].step, 0);
    }

    #[test]
    fn single_sample_fixed_point() {
        let (ds, grid, act) = setup();
        let p = init_two_layer(&InitDistribution::default(), 16, 4, 1, 1, 0).unwrap();
        let x = ds.input(0).to_vec();
        let y = p.output(&act, &x).unwrap();
        let dom = ds.domain();
        let one = Dataset::from_rows(1, x, vec![y], dom, (y, y)).unwrap();
        let mut cfg = TrainConfig::new(2.0, 3);
        cfg.snapshot_times = vec![0.5, 1.0, 1.5];
        let traj = train(&p, &one, &act, &LearningRateSchedule::scaled(2), &cfg, &grid).unwrap();
        assert_eq!(traj.snapshots.len(), 5);
        assert!(traj.snapshots.iter().all(|s| s.loss == traj.snapshots[0].loss));
    }

    #[test]
    fn snapshots_follow_the_limit_clock() {
        let (ds, grid, act) = setup();
        let p = init_two_layer(&InitDistribution::default(), 10, 3, 1, 2, 0).unwrap();
        let mut cfg = TrainConfig::new(1.0, 3);
        cfg.snapshot_times = vec![0.25, 0.55];
        let traj = train(&p, &ds, &act, &LearningRateSchedule::scaled(2), &cfg, &grid).unwrap();
        let steps: Vec<usize> = traj.snapshots.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![0, 2, 5, 10]);
    }

    #[test]
    fn divergence_is_detected() {
        let (ds, grid, act) = setup();
        let mut p = init_two_layer(&InitDistribution::default(), 4, 2, 1, 2, 0).unwrap();
        p.c[0] = f64::MAX;
        let sched = LearningRateSchedule::constant(2, 1e300);
        let err = train(&p, &ds, &act, &sched, &TrainConfig::new(5.0, 1), &grid).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err}");
    }

    #[test]
    fn bad_configuration_is_rejected() {
        let (ds, grid, act) = setup();
        let p = init_two_layer(&InitDistribution::default(), 4, 2, 1, 2, 0).unwrap();
        let sched = LearningRateSchedule::scaled(2);
        let mut cfg = TrainConfig::new(2.0, 1);
        cfg.snapshot_times = vec![3.0];
        assert!(train(&p, &ds, &act, &sched, &cfg, &grid).is_err());
        cfg = TrainConfig::new(1e9, 1);
        assert!(train(&p, &ds, &act, &sched, &cfg, &grid).is_err());
        assert!(train(&p, &ds, &act, &LearningRateSchedule::scaled(3), &TrainConfig::new(1.0, 1), &grid).is_err());
    }
}
