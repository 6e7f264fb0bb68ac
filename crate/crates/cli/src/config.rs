//! Experiment configuration: one TOML file, every key optional.
//!
//! Missing keys take the defaults documented on each field; unknown keys are
//! rejected. [`ExperimentConfig::validate`] reports the first bad field by its
//! dotted path.

use std::fmt;
use std::path::PathBuf;

use meanfield_core::analysis::TestFunction;
use meanfield_core::data::{generate_dataset, TestGrid};
use meanfield_core::finite_net::{InitBox, InitDistribution, ScheduleMode};
use meanfield_core::limit_ode::Scheme;
use meanfield_core::{Activation, ActivationKind, Dataset, DomainBox, TeacherKind, TeacherSpec};
use serde::{Deserialize, Serialize};

/// A rejected configuration value, addressed by its dotted key path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.msg)
    }
}

impl std::error::Error for ConfigError {}

fn bad(path: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError { path: path.into(), msg: msg.into() }
}

type Check = Result<(), ConfigError>;

fn positive(path: &str, v: f64) -> Check {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(bad(path, format!("must be positive and finite, got {v}")))
    }
}

fn non_negative(path: &str, v: f64) -> Check {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(bad(path, format!("must be non-negative and finite, got {v}")))
    }
}

fn at_least(path: &str, v: usize, min: usize) -> Check {
    if v >= min {
        Ok(())
    } else {
        Err(bad(path, format!("must be at least {min}, got {v}")))
    }
}

fn times_within(path: &str, times: &[f64], horizon: f64) -> Check {
    match times.iter().find(|t| !(t.is_finite() && **t >= 0.0 && **t <= horizon)) {
        Some(t) => Err(bad(path, format!("time {t} outside [0, {horizon}]"))),
        None => Ok(()),
    }
}

/// Snapshot times of a limit run must be multiples of its step.
fn on_step_grid(path: &str, times: &[f64], dt: f64) -> Check {
    for &t in times {
        let k = (t / dt).round();
        if (k * dt - t).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(bad(path, format!("time {t} is not a multiple of dt = {dt}")));
        }
    }
    Ok(())
}

fn doubling(path: &str, widths: &[usize]) -> Check {
    if widths.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(bad(path, format!("must double from one entry to the next, got {widths:?}")));
    }
    Ok(())
}

fn band(path: &str, b: [f64; 2]) -> Check {
    if b[0].is_finite() && b[1].is_finite() && b[0] < b[1] {
        Ok(())
    } else {
        Err(bad(path, format!("must be an increasing pair, got {b:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every random stream is split from it. Default `0`.
    pub seed: u64,
    /// `sigmoid` (default), `tanh` or `smooth-custom`.
    pub activation: ActivationKind,
    /// Number of test-grid inputs for sup-over-x quantities. Default `64`.
    pub grid_size: usize,
    pub task: TaskConfig,
    pub init: InitConfig,
    pub train: TrainSection,
    pub limit: LimitSection,
    pub compare: CompareSection,
    pub rate_study: RateStudySection,
    pub lyapunov: LyapunovSection,
    pub ablation: AblationSection,
    pub moments: MomentsSection,
    /// Where artifacts go. Not part of the experiment, so it is neither hashed
    /// nor embedded in artifacts; `MFNET_OUT_DIR` overrides it.
    #[serde(skip_serializing)]
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            activation: ActivationKind::Sigmoid,
            grid_size: 64,
            task: TaskConfig::default(),
            init: InitConfig::default(),
            train: TrainSection::default(),
            limit: LimitSection::default(),
            compare: CompareSection::default(),
            rate_study: RateStudySection::default(),
            lyapunov: LyapunovSection::default(),
            ablation: AblationSection::default(),
            moments: MomentsSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    /// `trigonometric` (default), `affine-sigmoid-mixture` or `constant`.
    pub teacher: TeacherKind,
    /// `(a, b, e)` triples, or one value for `constant`.
    /// Default `[0.5, π/2, 0]`, i.e. `f(x) = 0.5 sin(πx/2)`.
    pub teacher_params: Vec<f64>,
    /// Input dimension. Default `1`.
    pub d: usize,
    /// Dataset size `D`. Default `64`.
    pub samples: usize,
    /// Input box `[lo, hi]^d`. Default `[-1, 1]`.
    pub domain: [f64; 2],
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            teacher: TeacherKind::Trigonometric,
            teacher_params: vec![0.5, std::f64::consts::FRAC_PI_2, 0.0],
            d: 1,
            samples: 64,
            domain: [-1.0, 1.0],
        }
    }
}

/// Uniform initialization boxes `[lo, hi]` per parameter group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitConfig {
    /// Default `[-5, 5]`.
    pub c: [f64; 2],
    /// Per coordinate. Default `[-4, 4]`.
    pub w1: [f64; 2],
    /// Default `[-1, 1]`.
    pub w2: [f64; 2],
    /// Default `[-1, 1]`.
    pub w3: [f64; 2],
}

impl Default for InitConfig {
    fn default() -> Self {
        let d = InitDistribution::default();
        InitConfig { c: [d.c.lo, d.c.hi], w1: [d.w1.lo, d.w1.hi], w2: [d.w2.lo, d.w2.hi], w3: [d.w3.lo, d.w3.hi] }
    }
}

impl InitConfig {
    pub fn distribution(&self) -> InitDistribution {
        let b = |v: [f64; 2]| InitBox::new(v[0], v[1]);
        InitDistribution { c: b(self.c), w1: b(self.w1), w2: b(self.w2), w3: b(self.w3) }
    }
}

/// `train`: one finite network trained by SGD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    /// `[N₁, N₂]` or `[N₁, N₂, N₃]`; the length sets the depth. Default `[64, 64]`.
    pub widths: Vec<usize>,
    /// `scaled` (default) or `constant`.
    pub schedule: ScheduleMode,
    /// Common rate of the constant schedule. Default `1`.
    pub constant_alpha: f64,
    /// Limit-clock horizon `T`; `⌊N₁T⌋` steps. Default `1`.
    pub horizon: f64,
    /// Extra snapshot times; `0` and `T` are always recorded. Default none.
    pub snapshot_times: Vec<f64>,
    /// Depth 2 only: identity outer activation. Default `false`.
    pub identity_outer: bool,
    /// Freeze `C` at its initial value. Default `false`.
    pub freeze_c: bool,
    /// Replicate index selecting the init and sampling streams. Default `0`.
    pub replicate: u64,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            widths: vec![64, 64],
            schedule: ScheduleMode::Scaled,
            constant_alpha: 1.0,
            horizon: 1.0,
            snapshot_times: vec![],
            identity_outer: false,
            freeze_c: false,
            replicate: 0,
        }
    }
}

/// `limit`: one run of the limit particle system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitSection {
    /// `2` (default) or `3`.
    pub depth: usize,
    /// c-particles. Default `256`.
    pub m_c: usize,
    /// Depth 3 only: middle-layer particles. Default `64`.
    pub m_v: usize,
    /// w-particles. Default `64`.
    pub m_w: usize,
    /// u-draws per `(c, w)` pair. Default `4`.
    pub m_u: usize,
    /// Default `1/200`.
    pub dt: f64,
    /// `euler` (default) or `heun`.
    pub scheme: Scheme,
    /// Default `1`.
    pub horizon: f64,
    /// Extra snapshot times, multiples of `dt`. Default none.
    pub snapshot_times: Vec<f64>,
    /// Record every `k`-th step instead of `snapshot_times`; `0` (default) is off.
    pub snapshot_every: usize,
    pub replicate: u64,
    /// If set, fail unless `L̄(T) ≤ ratio · L̄(0)`. Default unset.
    pub max_final_loss_ratio: Option<f64>,
    /// Depth 2 only: also run at `dt/2` and `dt/4` and check that
    /// `sqrt(Q_T)` shrinks by the scheme's order factor. Default `false`.
    pub coupling_check: bool,
    /// Allowed relative deviation of that factor. Default `0.3`.
    pub coupling_tolerance: f64,
}

impl Default for LimitSection {
    fn default() -> Self {
        LimitSection {
            depth: 2,
            m_c: 256,
            m_v: 64,
            m_w: 64,
            m_u: 4,
            dt: 1.0 / 200.0,
            scheme: Scheme::Euler,
            horizon: 1.0,
            snapshot_times: vec![],
            snapshot_every: 0,
            replicate: 0,
            max_final_loss_ratio: None,
            coupling_check: false,
            coupling_tolerance: 0.3,
        }
    }
}

/// `compare`: a finite net, its intermediate system and the limit reference,
/// all started from the same `C₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    /// Default `256`.
    pub n1: usize,
    /// Default `16`.
    pub n2: usize,
    /// Reference c-pool, at least `n2`. Default `1024`.
    pub m_c: usize,
    /// Default `256`.
    pub m_w: usize,
    /// Default `4`.
    pub m_u: usize,
    /// Default `1/200`.
    pub dt: f64,
    pub scheme: Scheme,
    /// Default `0.5`.
    pub horizon: f64,
    /// Extra snapshot times, multiples of `dt`. Default `[0.25]`.
    pub snapshot_times: Vec<f64>,
    pub replicate: u64,
}

impl Default for CompareSection {
    fn default() -> Self {
        CompareSection {
            n1: 256,
            n2: 16,
            m_c: 1024,
            m_w: 256,
            m_u: 4,
            dt: 1.0 / 200.0,
            scheme: Scheme::Euler,
            horizon: 0.5,
            snapshot_times: vec![0.25],
            replicate: 0,
        }
    }
}

/// `rate-study`: intermediate-vs-limit error along an `N₂` ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateStudySection {
    /// Doubling ladder, at least four entries. Default `[8, 16, 32, 64, 128]`.
    pub n2_grid: Vec<usize>,
    /// Default `1024`.
    pub m_c: usize,
    /// Default `256`.
    pub m_w: usize,
    /// Default `4`.
    pub m_u: usize,
    /// Default `1/200`.
    pub dt: f64,
    pub scheme: Scheme,
    /// Default `0.5`.
    pub horizon: f64,
    /// Seed replicates averaged per width. Default `8`.
    pub replicates: usize,
    /// Level of the reported slope interval. Default `0.95`.
    pub confidence: f64,
    /// Accepted fitted slopes. Default `[-0.65, -0.35]`.
    pub slope_band: [f64; 2],
}

impl Default for RateStudySection {
    fn default() -> Self {
        RateStudySection {
            n2_grid: vec![8, 16, 32, 64, 128],
            m_c: 1024,
            m_w: 256,
            m_u: 4,
            dt: 1.0 / 200.0,
            scheme: Scheme::Euler,
            horizon: 0.5,
            replicates: 8,
            confidence: 0.95,
            slope_band: [-0.65, -0.35],
        }
    }
}

/// `lyapunov`: loss derivative against `−S` at `dt` and `dt/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovSection {
    /// Default `256`.
    pub m_c: usize,
    /// Default `64`.
    pub m_w: usize,
    /// Default `4`.
    pub m_u: usize,
    /// Coarse step; the check reruns at `dt/2`. Default `1/200`.
    pub dt: f64,
    pub scheme: Scheme,
    /// Default `2`.
    pub horizon: f64,
    pub replicate: u64,
    /// `C` in `|dL̄/dt + S| ≤ C·Δt^p`, `p` the scheme order. Default `1.5e-3`.
    pub identity_constant: f64,
    /// `c` in `L̄(t+Δt) ≤ L̄(t) + c·Δt²`. Default `1`.
    pub increase_constant: f64,
    /// Allowed relative deviation of the halving factor `2^p`. Default `0.3`.
    pub halving_tolerance: f64,
}

impl Default for LyapunovSection {
    fn default() -> Self {
        LyapunovSection {
            m_c: 256,
            m_w: 64,
            m_u: 4,
            dt: 1.0 / 200.0,
            scheme: Scheme::Euler,
            horizon: 2.0,
            replicate: 0,
            identity_constant: 1.5e-3,
            increase_constant: 1.0,
            halving_tolerance: 0.3,
        }
    }
}

/// `ablation`: scaled against constant learning rates along a width ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationSection {
    /// `(N₁, N₂)` pairs, at least three. Default `[[64,64],[128,128],[256,256]]`.
    pub ladder: Vec<[usize; 2]>,
    /// Default `20`.
    pub horizon: f64,
    /// Default `1`.
    pub constant_alpha: f64,
    /// Default `4`.
    pub replicates: usize,
    /// Scaled-schedule loss reduction required at every point. Default `0.5`.
    pub min_scaled_reduction: f64,
    /// Relative slack in the decreasing constant-schedule trend. Default `0.1`.
    pub noise_allowance: f64,
}

impl Default for AblationSection {
    fn default() -> Self {
        AblationSection {
            ladder: vec![[64, 64], [128, 128], [256, 256]],
            horizon: 20.0,
            constant_alpha: 1.0,
            replicates: 4,
            min_scaled_reduction: 0.5,
            noise_allowance: 0.1,
        }
    }
}

/// `moments`: empirical-measure moments of finite nets against particles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentsSection {
    /// Doubling `N₁` ladder, at least three. Default `[64, 128, 256, 512]`.
    pub n1_ladder: Vec<usize>,
    /// Default `4`.
    pub n2: usize,
    /// Default `0.5`.
    pub horizon: f64,
    /// Default `8`.
    pub replicates: usize,
    /// Default `2048`.
    pub m_w: usize,
    /// Default `2`.
    pub m_u: usize,
    /// Default `1/200`.
    pub dt: f64,
    pub scheme: Scheme,
    /// Default: `1`, `w¹₀`, `(w¹₀)²`, `σ(w¹₀)`, `w²₀`, `(w²₀)²`, `c₀`,
    /// `w²₀σ(w¹₀)`, `w¹₀w²₀`.
    pub functions: Vec<TestFunction>,
    /// Relative slack in the decreasing gap trend. Default `0.1`.
    pub noise_allowance: f64,
}

impl Default for MomentsSection {
    fn default() -> Self {
        use TestFunction::*;
        MomentsSection {
            n1_ladder: vec![64, 128, 256, 512],
            n2: 4,
            horizon: 0.5,
            replicates: 8,
            m_w: 2048,
            m_u: 2,
            dt: 1.0 / 200.0,
            scheme: Scheme::Euler,
            functions: vec![
                One,
                W1 { l: 0 },
                W1Sq { l: 0 },
                SigmaW1 { l: 0 },
                W2 { i: 0 },
                W2Sq { i: 0 },
                C { i: 0 },
                W2SigmaW1 { i: 0, l: 0 },
                W1W2 { i: 0, l: 0 },
            ],
            noise_allowance: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Default `artifacts`.
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("artifacts") }
    }
}

impl ExperimentConfig {
    /// Parses TOML; unknown keys and type mismatches are reported with their location.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| bad("config", e.to_string().trim_end().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn activation_fn(&self) -> Activation {
        Activation::new(self.activation)
    }

    pub fn teacher(&self) -> TeacherSpec {
        TeacherSpec { kind: self.task.teacher, params: self.task.teacher_params.clone() }
    }

    pub fn domain(&self) -> DomainBox {
        DomainBox { lo: self.task.domain[0], hi: self.task.domain[1] }
    }

    /// The dataset and test grid, both drawn from the master seed.
    pub fn task_data(&self) -> meanfield_core::Result<(Dataset, TestGrid)> {
        let dom = self.domain();
        let data = generate_dataset(&self.teacher(), self.task.d, self.task.samples, dom, self.seed)?;
        Ok((data, TestGrid::draw(self.task.d, self.grid_size, dom, self.seed)))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        at_least("grid_size", self.grid_size, 1)?;
        self.validate_task()?;
        for (name, b) in [("init.c", self.init.c), ("init.w1", self.init.w1), ("init.w2", self.init.w2), ("init.w3", self.init.w3)] {
            if !(b[0].is_finite() && b[1].is_finite() && b[0] <= b[1]) {
                return Err(bad(name, format!("must be a finite [lo, hi] with lo ≤ hi, got {b:?}")));
            }
        }
        self.validate_train()?;
        self.validate_limit()?;
        self.validate_compare()?;
        self.validate_rate_study()?;
        self.validate_lyapunov()?;
        self.validate_ablation()?;
        self.validate_moments()
    }

    fn validate_task(&self) -> Check {
        let t = &self.task;
        at_least("task.d", t.d, 1)?;
        at_least("task.samples", t.samples, 1)?;
        DomainBox::new(t.domain[0], t.domain[1]).map_err(|e| bad("task.domain", e.to_string()))?;
        self.teacher().validate().map_err(|e| bad("task.teacher_params", e.to_string()))
    }

    fn validate_train(&self) -> Check {
        let s = &self.train;
        if !(2..=3).contains(&s.widths.len()) || s.widths.contains(&0) {
            return Err(bad("train.widths", format!("need two or three positive widths, got {:?}", s.widths)));
        }
        non_negative("train.constant_alpha", s.constant_alpha)?;
        non_negative("train.horizon", s.horizon)?;
        times_within("train.snapshot_times", &s.snapshot_times, s.horizon)?;
        if s.identity_outer && s.widths.len() != 2 {
            return Err(bad("train.identity_outer", "only available for depth 2"));
        }
        Ok(())
    }

    fn validate_limit(&self) -> Check {
        let s = &self.limit;
        if !(2..=3).contains(&s.depth) {
            return Err(bad("limit.depth", format!("must be 2 or 3, got {}", s.depth)));
        }
        at_least("limit.m_c", s.m_c, 1)?;
        at_least("limit.m_v", s.m_v, 1)?;
        at_least("limit.m_w", s.m_w, 1)?;
        at_least("limit.m_u", s.m_u, 1)?;
        positive("limit.dt", s.dt)?;
        non_negative("limit.horizon", s.horizon)?;
        on_step_grid("limit.horizon", &[s.horizon], s.dt)?;
        times_within("limit.snapshot_times", &s.snapshot_times, s.horizon)?;
        on_step_grid("limit.snapshot_times", &s.snapshot_times, s.dt)?;
        if s.snapshot_every > 0 && !s.snapshot_times.is_empty() {
            return Err(bad("limit.snapshot_every", "set either snapshot_every or snapshot_times"));
        }
        if let Some(r) = s.max_final_loss_ratio {
            positive("limit.max_final_loss_ratio", r)?;
        }
        if s.coupling_check && s.depth != 2 {
            return Err(bad("limit.coupling_check", "only available for depth 2"));
        }
        positive("limit.coupling_tolerance", s.coupling_tolerance)
    }

    fn validate_compare(&self) -> Check {
        let s = &self.compare;
        at_least("compare.n1", s.n1, 1)?;
        at_least("compare.n2", s.n2, 1)?;
        at_least("compare.m_c", s.m_c, s.n2)?;
        at_least("compare.m_w", s.m_w, 1)?;
        at_least("compare.m_u", s.m_u, 1)?;
        positive("compare.dt", s.dt)?;
        non_negative("compare.horizon", s.horizon)?;
        on_step_grid("compare.horizon", &[s.horizon], s.dt)?;
        times_within("compare.snapshot_times", &s.snapshot_times, s.horizon)?;
        on_step_grid("compare.snapshot_times", &s.snapshot_times, s.dt)
    }

    fn validate_rate_study(&self) -> Check {
        let s = &self.rate_study;
        if s.n2_grid.len() < 4 || s.n2_grid[0] == 0 {
            return Err(bad("rate_study.n2_grid", format!("need at least four positive widths, got {:?}", s.n2_grid)));
        }
        doubling("rate_study.n2_grid", &s.n2_grid)?;
        at_least("rate_study.m_c", s.m_c, *s.n2_grid.last().unwrap())?;
        at_least("rate_study.m_w", s.m_w, 1)?;
        at_least("rate_study.m_u", s.m_u, 1)?;
        positive("rate_study.dt", s.dt)?;
        positive("rate_study.horizon", s.horizon)?;
        on_step_grid("rate_study.horizon", &[s.horizon], s.dt)?;
        at_least("rate_study.replicates", s.replicates, 1)?;
        if !(s.confidence > 0.0 && s.confidence < 1.0) {
            return Err(bad("rate_study.confidence", format!("must lie in (0, 1), got {}", s.confidence)));
        }
        band("rate_study.slope_band", s.slope_band)
    }

    fn validate_lyapunov(&self) -> Check {
        let s = &self.lyapunov;
        at_least("lyapunov.m_c", s.m_c, 1)?;
        at_least("lyapunov.m_w", s.m_w, 1)?;
        at_least("lyapunov.m_u", s.m_u, 1)?;
        positive("lyapunov.dt", s.dt)?;
        positive("lyapunov.horizon", s.horizon)?;
        on_step_grid("lyapunov.horizon", &[s.horizon], s.dt)?;
        if s.horizon < 3.0 * s.dt {
            return Err(bad("lyapunov.horizon", "needs at least three steps for central differences"));
        }
        positive("lyapunov.identity_constant", s.identity_constant)?;
        non_negative("lyapunov.increase_constant", s.increase_constant)?;
        positive("lyapunov.halving_tolerance", s.halving_tolerance)
    }

    fn validate_ablation(&self) -> Check {
        let s = &self.ablation;
        at_least("ablation.ladder", s.ladder.len(), 3)?;
        if s.ladder.iter().flatten().any(|&n| n == 0) {
            return Err(bad("ablation.ladder", "widths must be positive"));
        }
        let n1: Vec<usize> = s.ladder.iter().map(|p| p[0]).collect();
        let n2: Vec<usize> = s.ladder.iter().map(|p| p[1]).collect();
        doubling("ablation.ladder", &n1)?;
        doubling("ablation.ladder", &n2)?;
        positive("ablation.horizon", s.horizon)?;
        non_negative("ablation.constant_alpha", s.constant_alpha)?;
        at_least("ablation.replicates", s.replicates, 1)?;
        non_negative("ablation.min_scaled_reduction", s.min_scaled_reduction)?;
        non_negative("ablation.noise_allowance", s.noise_allowance)
    }

    fn validate_moments(&self) -> Check {
        let s = &self.moments;
        at_least("moments.n1_ladder", s.n1_ladder.len(), 3)?;
        if s.n1_ladder[0] == 0 {
            return Err(bad("moments.n1_ladder", "widths must be positive"));
        }
        doubling("moments.n1_ladder", &s.n1_ladder)?;
        at_least("moments.n2", s.n2, 1)?;
        non_negative("moments.horizon", s.horizon)?;
        on_step_grid("moments.horizon", &[s.horizon], s.dt)?;
        at_least("moments.replicates", s.replicates, 1)?;
        at_least("moments.m_w", s.m_w, 1)?;
        at_least("moments.m_u", s.m_u, 1)?;
        positive("moments.dt", s.dt)?;
        at_least("moments.functions", s.functions.len(), 1)?;
        for (k, f) in s.functions.iter().enumerate() {
            f.check(self.task.d, s.n2).map_err(|e| bad(&format!("moments.functions[{k}]"), e.to_string()))?;
        }
        non_negative("moments.noise_allowance", s.noise_allowance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn empty_file_is_the_default() {
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn toml_round_trip() {
        let mut c = ExperimentConfig::default();
        c.limit.max_final_loss_ratio = Some(0.1);
        c.moments.functions.push(TestFunction::W2 { i: 3 });
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = ExperimentConfig::from_toml("[limit]\ndtt = 0.1\n").unwrap_err();
        assert!(e.msg.contains("dtt"), "{e}");
        assert!(ExperimentConfig::from_toml("bogus = 1\n").is_err());
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let c = ExperimentConfig::from_toml("seed = 7\n[limit]\nm_c = 32\nscheme = \"heun\"\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.limit.m_c, 32);
        assert_eq!(c.limit.scheme, Scheme::Heun);
        assert_eq!(c.limit.m_w, LimitSection::default().m_w);
        assert_eq!(c.train, TrainSection::default());
    }

    #[test]
    fn validation_names_the_field() {
        let cases: [(&str, &str); 7] = [
            ("[limit]\ndt = 0.0\n", "limit.dt"),
            ("[limit]\ndt = 0.003\n", "limit.horizon"),
            ("[rate_study]\nn2_grid = [8, 16, 24, 48]\n", "rate_study.n2_grid"),
            ("[train]\nwidths = [4]\n", "train.widths"),
            ("[task]\ndomain = [1.0, -1.0]\n", "task.domain"),
            ("[moments]\nfunctions = [{ kind = \"w1\", l = 3 }]\n", "moments.functions[0]"),
            ("[init]\nc = [2.0, 1.0]\n", "init.c"),
        ];
        for (text, path) in cases {
            let e = ExperimentConfig::from_toml(text).unwrap().validate().unwrap_err();
            assert_eq!(e.path, path, "{text}: {e}");
        }
    }

    #[test]
    fn output_dir_is_not_serialized() {
        let mut c = ExperimentConfig::default();
        c.output.dir = "/elsewhere".into();
        assert_eq!(c.to_toml(), ExperimentConfig::default().to_toml());
    }
}
