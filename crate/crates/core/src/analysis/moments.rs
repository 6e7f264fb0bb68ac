use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::data::{Dataset, TestGrid};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::finite_net::{init_two_layer, train, InitDistribution, LearningRateSchedule, Params, TrainConfig, TwoLayerParams};
use crate::limit_ode::{intermediate_system, IntegrateConfig, LimitState, ParticlePools, Scheme};
use crate::reduce::pairwise_mean_by;

/// Test functions of one first-layer point `(w¹, w²_{·}, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum TestFunction {
    One,
    /// Coordinate `l` of `w¹`.
    W1 { l: usize },
    W1Sq { l: usize },
    /// `σ(w¹_l)`
    SigmaW1 { l: usize },
    /// Entry `i` of `w²`.
    W2 { i: usize },
    W2Sq { i: usize },
    C { i: usize },
    /// `w²_i · σ(w¹_l)`
    W2SigmaW1 { i: usize, l: usize },
    /// `w¹_l · w²_i`
    W1W2 { i: usize, l: usize },
}

impl TestFunction {
    pub fn label(&self) -> String {
        match self {
            TestFunction::One => "1".into(),
            TestFunction::W1 { l } => format!("w1[{l}]"),
            TestFunction::W1Sq { l } => format!("w1[{l}]^2"),
            TestFunction::SigmaW1 { l } => format!("sigma(w1[{l}])"),
            TestFunction::W2 { i } => format!("w2[{i}]"),
            TestFunction::W2Sq { i } => format!("w2[{i}]^2"),
            TestFunction::C { i } => format!("c[{i}]"),
            TestFunction::W2SigmaW1 { i, l } => format!("w2[{i}]*sigma(w1[{l}])"),
            TestFunction::W1W2 { i, l } => format!("w1[{l}]*w2[{i}]"),
        }
    }

    pub fn check(&self, d: usize, n2: usize) -> Result<()> {
        let (i, l) = match *self {
            TestFunction::One => (None, None),
            TestFunction::W1 { l } | TestFunction::W1Sq { l } | TestFunction::SigmaW1 { l } => (None, Some(l)),
            TestFunction::W2 { i } | TestFunction::W2Sq { i } | TestFunction::C { i } => (Some(i), None),
            TestFunction::W2SigmaW1 { i, l } | TestFunction::W1W2 { i, l } => (Some(i), Some(l)),
        };
        if i.is_some_and(|i| i >= n2) || l.is_some_and(|l| l >= d) {
            return Err(Error::config(format!("test function {} out of range for d = {d}, N₂ = {n2}", self.label())));
        }
        Ok(())
    }

    /// `f(w¹, w²_i, c_i)` for the indices this function reads.
    fn eval(&self, act: &Activation, w1: &[f64], w2_i: impl Fn(usize) -> f64, c: &[f64]) -> f64 {
        match *self {
            TestFunction::One => 1.0,
            TestFunction::W1 { l } => w1[l],
            TestFunction::W1Sq { l } => w1[l] * w1[l],
            TestFunction::SigmaW1 { l } => act.value(w1[l]),
            TestFunction::W2 { i } => w2_i(i),
            TestFunction::W2Sq { i } => w2_i(i) * w2_i(i),
            TestFunction::C { i } => c[i],
            TestFunction::W2SigmaW1 { i, l } => w2_i(i) * act.value(w1[l]),
            TestFunction::W1W2 { i, l } => w1[l] * w2_i(i),
        }
    }
}

/// Where the first-layer points come from.
#[derive(Debug, Clone, Copy)]
pub enum MeasureSource<'a> {
    /// Points `(W¹_j, W²_{·j}, C)` for `j < N₁`.
    Network(&'a TwoLayerParams),
    /// Points `(W̃¹_j, W̃²_{·jk}, C̃)` for every `(j, k)`.
    Particles(&'a LimitState),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub function: TestFunction,
    pub value: f64,
    /// Sample standard deviation over points divided by `√points`.
    pub std_err: f64,
}

/// `⟨f, γ⟩` for each test function, with `γ` the uniform measure on the points.
pub fn measure_moments(src: MeasureSource<'_>, act: &Activation, functions: &[TestFunction]) -> Result<Vec<MomentRow>> {
    let (d, n2) = match src {
        MeasureSource::Network(p) => (p.d, p.n2),
        MeasureSource::Particles(s) => (s.d, s.m_c),
    };
    functions.iter().try_for_each(|f| f.check(d, n2))?;
    let values = |f: &TestFunction| -> Vec<f64> {
        match src {
            MeasureSource::Network(p) => (0..p.n1).map(|j| f.eval(act, p.w1_row(j), |i| p.w2[i * p.n1 + j], &p.c)).collect(),
            MeasureSource::Particles(s) => (0..s.m_w * s.m_u)
                .map(|jk| {
                    let (j, k) = (jk / s.m_u, jk % s.m_u);
                    f.eval(act, s.w1_row(j), |i| s.w2[(i * s.m_w + j) * s.m_u + k], &s.c)
                })
                .collect(),
        }
    };
    Ok(functions
        .iter()
        .map(|f| {
            let v = values(f);
            let n = v.len();
            let mean = pairwise_mean_by(n, |k| v[k]);
            let var = if n > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
            MomentRow { function: *f, value: mean, std_err: (var / n as f64).sqrt() }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentStudyConfig {
    pub n1_ladder: Vec<usize>,
    pub n2: usize,
    pub horizon: f64,
    pub replicates: usize,
    pub m_w: usize,
    pub m_u: usize,
    pub dt: f64,
    pub scheme: Scheme,
    pub seed: u64,
    pub init: InitDistribution,
    pub functions: Vec<TestFunction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentStudyReport {
    pub n1_ladder: Vec<usize>,
    pub functions: Vec<TestFunction>,
    /// `[n1][function]`, replicate means.
    pub finite: Vec<Vec<f64>>,
    /// `[function]`, replicate means; independent of `N₁`.
    pub particle: Vec<f64>,
    /// `[n1][function]`, replicate mean of `|finite − particle|`.
    pub abs_diff: Vec<Vec<f64>>,
}

impl MomentStudyReport {
    /// Mean over functions of `abs_diff`, one value per ladder point.
    pub fn mean_abs_diff(&self) -> Vec<f64> {
        self.abs_diff.iter().map(|row| pairwise_mean_by(row.len(), |k| row[k])).collect()
    }
}

/// Moments of the trained finite network's empirical measure at `T` along an
/// `N₁` ladder, against the intermediate system started from the same `C₀`.
pub fn moment_study(cfg: &MomentStudyConfig, data: &Dataset, grid: &TestGrid, act: &Activation, exec: Exec) -> Result<MomentStudyReport> {
    if cfg.n1_ladder.is_empty() || cfg.replicates == 0 || cfg.functions.is_empty() {
        return Err(Error::config("moment study needs a ladder, replicates and test functions"));
    }
    let r = cfg.replicates;
    let nf = cfg.functions.len();
    let sched = LearningRateSchedule::scaled(2);
    let icfg = IntegrateConfig { scheme: cfg.scheme, keep_states: true, ..IntegrateConfig::new(cfg.dt, cfg.horizon) };
    let particle = exec
        .map(r, |rep| -> Result<Vec<f64>> {
            // C₀ is drawn first, so it does not depend on N₁.
            let c0 = init_two_layer(&cfg.init, 1, cfg.n2, data.dim(), cfg.seed, rep as u64)?.c;
            let pools = ParticlePools::draw(&cfg.init, data.dim(), cfg.n2, cfg.m_w, cfg.m_u, cfg.seed, rep as u64)?;
            let traj = intermediate_system(&c0, &pools, data, act, &icfg, grid, Exec::Sequential)?;
            let st = traj.last().state.as_ref().expect("states were kept");
            Ok(measure_moments(MeasureSource::Particles(st), act, &cfg.functions)?.iter().map(|m| m.value).collect())
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let finite = exec
        .map(cfg.n1_ladder.len() * r, |k| -> Result<Vec<f64>> {
            let (w, rep) = (k / r, k % r);
            let p0 = init_two_layer(&cfg.init, cfg.n1_ladder[w], cfg.n2, data.dim(), cfg.seed, rep as u64)?;
            let tcfg = TrainConfig { replicate: rep as u64, keep_params: true, ..TrainConfig::new(cfg.horizon, cfg.seed) };
            let traj = train(&p0, data, act, &sched, &tcfg, grid)?;
            let Some(Params::Two(p)) = &traj.last().params else {
                return Err(Error::Study("finite run did not keep its parameters".into()));
            };
            Ok(measure_moments(MeasureSource::Network(p), act, &cfg.functions)?.iter().map(|m| m.value).collect())
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let nl = cfg.n1_ladder.len();
    let finite_mean = (0..nl).map(|w| (0..nf).map(|f| pairwise_mean_by(r, |q| finite[w * r + q][f])).collect()).collect();
    let abs_diff = (0..nl)
        .map(|w| (0..nf).map(|f| pairwise_mean_by(r, |q| (finite[w * r + q][f] - particle[q][f]).abs())).collect())
        .collect();
    Ok(MomentStudyReport {
        n1_ladder: cfg.n1_ladder.clone(),
        functions: cfg.functions.clone(),
        finite: finite_mean,
        particle: (0..nf).map(|f| pairwise_mean_by(r, |q| particle[q][f])).collect(),
        abs_diff,
    })
}
