//! Studies return identical bits sequentially, on rayon pools of several
//! sizes, and on repeated runs.
//!
//! Results are compared through their `Debug` text, which prints every `f64`
//! in shortest round-trip form.

use std::fmt::Debug;

use meanfield_core::analysis::{
    ablation_study, moment_study, rate_study, AblationConfig, MomentStudyConfig, RateStudyConfig, TestFunction,
};
use meanfield_core::data::{generate_dataset, TestGrid};
use meanfield_core::finite_net::InitDistribution;
use meanfield_core::limit_ode::{integrate_limit, IntegrateConfig, ParticlePools, Scheme, SnapshotPlan};
use meanfield_core::{Activation, Dataset, DomainBox, Exec, TeacherSpec};

const THREADS: [usize; 3] = [1, 2, 5];

fn task() -> (Dataset, TestGrid) {
    let dom = DomainBox::new(-1.0, 1.0).unwrap();
    let data = generate_dataset(&TeacherSpec::trigonometric(&[(0.5, std::f64::consts::FRAC_PI_2, 0.0)]), 1, 24, dom, 3).unwrap();
    (data, TestGrid::draw(1, 8, dom, 3))
}

/// Runs `f` sequentially, twice in parallel on each pool size, and requires
/// every result to print identically.
fn assert_deterministic<T: Debug + Send>(f: impl Fn(Exec) -> T + Sync) {
    let reference = format!("{:?}", f(Exec::Sequential));
    for threads in THREADS {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        for run in 0..2 {
            let got = format!("{:?}", pool.install(|| f(Exec::Parallel)));
            assert!(got == reference, "{threads} threads, run {run}: result differs from sequential");
        }
    }
}

#[test]
fn limit_integration_is_deterministic() {
    let (data, grid) = task();
    let act = Activation::tanh();
    let pools = ParticlePools::draw(&InitDistribution::default(), 1, 24, 16, 3, 9, 0).unwrap();
    let cfg = IntegrateConfig {
        scheme: Scheme::Heun,
        snapshots: SnapshotPlan::Every(5),
        keep_states: true,
        ..IntegrateConfig::new(0.01, 0.2)
    };
    assert_deterministic(|exec| integrate_limit(&pools, &data, &act, &cfg, &grid, exec).unwrap());
}

#[test]
fn rate_study_is_deterministic() {
    let (data, grid) = task();
    let cfg = RateStudyConfig {
        n2_grid: vec![2, 4, 8, 16],
        m_c: 32,
        m_w: 16,
        m_u: 2,
        dt: 0.02,
        horizon: 0.1,
        scheme: Scheme::Euler,
        replicates: 3,
        seed: 5,
        init: InitDistribution::default(),
        confidence: 0.95,
    };
    assert_deterministic(|exec| rate_study(&cfg, &data, &grid, &Activation::sigmoid(), exec).unwrap());
}

#[test]
fn ablation_study_is_deterministic() {
    let (data, grid) = task();
    let cfg = AblationConfig {
        ladder: vec![(8, 8), (16, 16)],
        horizon: 0.5,
        constant_alpha: 1.0,
        replicates: 3,
        seed: 6,
        init: InitDistribution::default(),
    };
    assert_deterministic(|exec| ablation_study(&cfg, &data, &grid, &Activation::sigmoid(), exec).unwrap());
}

#[test]
fn moment_study_is_deterministic() {
    let (data, grid) = task();
    let cfg = MomentStudyConfig {
        n1_ladder: vec![8, 16],
        n2: 2,
        horizon: 0.1,
        replicates: 3,
        m_w: 32,
        m_u: 2,
        dt: 1.0 / 80.0,
        scheme: Scheme::Euler,
        seed: 7,
        init: InitDistribution::default(),
        functions: vec![TestFunction::One, TestFunction::W1 { l: 0 }, TestFunction::W2SigmaW1 { i: 1, l: 0 }, TestFunction::C { i: 0 }],
    };
    assert_deterministic(|exec| moment_study(&cfg, &data, &grid, &Activation::sigmoid(), exec).unwrap());
}
