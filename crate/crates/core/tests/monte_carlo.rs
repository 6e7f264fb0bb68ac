//! Particle-count convergence of the limit system: enlarging the w/u pools
//! moves `g_T` by less than three Monte Carlo standard errors.

use meanfield_core::data::{generate_dataset, TestGrid};
use meanfield_core::finite_net::InitDistribution;
use meanfield_core::limit_ode::{compute_fields, integrate_limit, IntegrateConfig, LimitState, ParticlePools};
use meanfield_core::{Activation, DomainBox, Exec, TeacherSpec};

const M_C: usize = 16;
const SMALL: usize = 64;
const LARGE: usize = 256;
const HORIZON: f64 = 0.25;
const DT: f64 = 1.0 / 200.0;

/// Standard deviation over `(j, k)` of the first-order influence of one
/// `(w, u)` particle on `g(x)`: `mean_i C_i σ'(Z_i) W̃²_{ijk} σ(W̃¹_j·x)`.
fn influence_std(st: &LimitState, act: &Activation, x: &[f64]) -> f64 {
    let f = compute_fields(st, act, x).unwrap();
    let (mc, mw, mu) = (st.m_c, st.m_w, st.m_u);
    let mut vals = Vec::with_capacity(mw * mu);
    for j in 0..mw {
        for k in 0..mu {
            let v: f64 = (0..mc).map(|i| st.c[i] * f.s2[i] * st.w2[(i * mw + j) * mu + k]).sum::<f64>() / mc as f64;
            vals.push(v * f.h1[j]);
        }
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[test]
fn larger_pools_stay_within_three_standard_errors() {
    let dom = DomainBox::new(-1.0, 1.0).unwrap();
    let data = generate_dataset(&TeacherSpec::trigonometric(&[(0.5, std::f64::consts::FRAC_PI_2, 0.0)]), 1, 64, dom, 0).unwrap();
    let grid = TestGrid::draw(1, 16, dom, 0);
    let act = Activation::sigmoid();
    let dist = InitDistribution::default();
    let cfg = IntegrateConfig { keep_states: true, ..IntegrateConfig::new(DT, HORIZON) };

    // Same c-particles; independent w/u pools of both sizes.
    let small = ParticlePools::draw(&dist, 1, M_C, SMALL, SMALL, 0, 1).unwrap();
    let large = ParticlePools::draw(&dist, 1, M_C, LARGE, LARGE, 0, 2).unwrap().with_c(&small.c).unwrap();
    let ts = integrate_limit(&small, &data, &act, &cfg, &grid, Exec::Parallel).unwrap();
    let tl = integrate_limit(&large, &data, &act, &cfg, &grid, Exec::Parallel).unwrap();
    let st = ts.last().state.as_ref().unwrap();

    let scale = 3.0 / ((SMALL * SMALL) as f64).sqrt();
    for x in 0..grid.len() {
        let change = (ts.last().g_on_grid[x] - tl.last().g_on_grid[x]).abs();
        let band = scale * influence_std(st, &act, grid.point(x));
        assert!(change < band, "x = {:?}: |Δg| = {change:e} vs 3σ/√M = {band:e}", grid.point(x));
    }
}
