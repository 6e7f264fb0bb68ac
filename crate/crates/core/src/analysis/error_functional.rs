use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::data::TestGrid;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::limit_ode::{compute_fields_batch, LimitState, LimitTrajectory};
use crate::reduce::pairwise_mean_by;

/// Components of the error functional at one time, averaged over the shared
/// `(c, w, u)` particles; x-dependent components are maximized over the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEntry {
    pub t: f64,
    pub dc2: f64,
    pub dw1_2: f64,
    pub dw2_2: f64,
    pub dh2_2: f64,
    pub dz2: f64,
    /// `max_x` of the summed components.
    pub total: f64,
    /// `|g^{N₂}_t(x) − g_t(x)|` at every grid point.
    pub g_abs_diff: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub n2: usize,
    pub entries: Vec<ErrorEntry>,
}

fn same_pools(a: &LimitState, b: &LimitState) -> bool {
    a.d == b.d && a.m_w == b.m_w && a.m_u == b.m_u && a.m_c <= b.m_c
}

/// Error functional between an intermediate run with `N₂` c-particles and a
/// limit reference whose first `N₂` c-particles share their initial values.
///
/// Both trajectories must keep their states at identical snapshot steps.
pub fn error_functional(
    intermediate: &LimitTrajectory<LimitState>,
    reference: &LimitTrajectory<LimitState>,
    act: &Activation,
    grid: &TestGrid,
) -> Result<ErrorReport> {
    if intermediate.snapshots.len() != reference.snapshots.len() || intermediate.dt != reference.dt {
        return Err(Error::contract("trajectories differ in step size or snapshot count"));
    }
    let mut entries = Vec::with_capacity(intermediate.snapshots.len());
    let mut n2 = 0;
    for (si, sr) in intermediate.snapshots.iter().zip(&reference.snapshots) {
        if si.step != sr.step {
            return Err(Error::contract("trajectories have different snapshot steps"));
        }
        let (a, b) = match (&si.state, &sr.state) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::contract("error functional needs stored states")),
        };
        if !same_pools(a, b) {
            return Err(Error::contract("intermediate and reference pools do not nest"));
        }
        n2 = a.m_c;
        entries.push(entry(a, b, act, grid, si.t)?);
    }
    Ok(ErrorReport { n2, entries })
}

fn entry(a: &LimitState, b: &LimitState, act: &Activation, grid: &TestGrid, t: f64) -> Result<ErrorEntry> {
    let (n2, mw, mu, d) = (a.m_c, a.m_w, a.m_u, a.d);
    let sq = |x: f64| x * x;
    let dc2 = pairwise_mean_by(n2, |i| sq(a.c[i] - b.c[i]));
    let dw1_2 = pairwise_mean_by(mw, |j| (0..d).map(|l| sq(a.w1[j * d + l] - b.w1[j * d + l])).sum());
    let dw2_2 = pairwise_mean_by(n2 * mw * mu, |k| sq(a.w2[k] - b.w2[k]));
    let fa = compute_fields_batch(a, act, &grid.points, Exec::Sequential)?;
    let fb = compute_fields_batch(b, act, &grid.points, Exec::Sequential)?;
    let (mut dh2_2, mut dz2, mut total) = (0.0f64, 0.0f64, 0.0f64);
    let mut g_abs_diff = Vec::with_capacity(grid.len());
    for (x, y) in fa.iter().zip(&fb) {
        let h = pairwise_mean_by(n2, |i| sq(x.h2[i] - y.h2[i]));
        let z = pairwise_mean_by(n2, |i| sq(x.z[i] - y.z[i]));
        dh2_2 = dh2_2.max(h);
        dz2 = dz2.max(z);
        total = total.max(dc2 + dw1_2 + dw2_2 + h + z);
        g_abs_diff.push((x.g - y.g).abs());
    }
    Ok(ErrorEntry { t, dc2, dw1_2, dw2_2, dh2_2, dz2, total, g_abs_diff })
}

/// Seed-averaged error functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub n2: usize,
    pub replicates: usize,
    pub t: Vec<f64>,
    pub dc2: Vec<f64>,
    pub dw1_2: Vec<f64>,
    pub dw2_2: Vec<f64>,
    pub dh2_2: Vec<f64>,
    pub dz2: Vec<f64>,
    pub total: Vec<f64>,
    /// `max_x mean_r |g^{N₂} − g|`.
    pub sup_mean_g_gap: Vec<f64>,
}

pub fn summarize_errors(reports: &[ErrorReport]) -> Result<ErrorSummary> {
    let first = reports.first().ok_or_else(|| Error::Study("no error reports to summarize".into()))?;
    let nt = first.entries.len();
    if reports.iter().any(|r| r.entries.len() != nt || r.n2 != first.n2) {
        return Err(Error::contract("error reports disagree in shape"));
    }
    let r = reports.len();
    let avg = |f: &dyn Fn(&ErrorEntry) -> f64| -> Vec<f64> {
        (0..nt).map(|k| pairwise_mean_by(r, |q| f(&reports[q].entries[k]))).collect()
    };
    let sup_mean_g_gap = (0..nt)
        .map(|k| {
            let ng = first.entries[k].g_abs_diff.len();
            (0..ng).map(|x| pairwise_mean_by(r, |q| reports[q].entries[k].g_abs_diff[x])).fold(0.0, f64::max)
        })
        .collect();
    Ok(ErrorSummary {
        n2: first.n2,
        replicates: r,
        t: first.entries.iter().map(|e| e.t).collect(),
        dc2: avg(&|e| e.dc2),
        dw1_2: avg(&|e| e.dw1_2),
        dw2_2: avg(&|e| e.dw2_2),
        dh2_2: avg(&|e| e.dh2_2),
        dz2: avg(&|e| e.dz2),
        total: avg(&|e| e.total),
        sup_mean_g_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_dataset, Dataset, DomainBox, TeacherSpec};
    use crate::finite_net::InitDistribution;
    use crate::limit_ode::{integrate_limit, intermediate_system, IntegrateConfig, ParticlePools, SnapshotPlan};

    fn setup() -> (Dataset, TestGrid, Activation, ParticlePools, IntegrateConfig) {
        let dom = DomainBox::new(-1.0, 1.0).unwrap();
        let ds = generate_dataset(&TeacherSpec::trigonometric(&[(0.5, std::f64::consts::PI, 0.0)]), 1, 16, dom, 1).unwrap();
        let pools = ParticlePools::draw(&InitDistribution::default(), 1, 12, 5, 2, 1, 0).unwrap();
        let cfg = IntegrateConfig { keep_states: true, snapshots: SnapshotPlan::Times(vec![0.25]), ..IntegrateConfig::new(0.05, 0.5) };
        (ds, TestGrid::draw(1, 6, dom, 1), Activation::sigmoid(), pools, cfg)
    }

    #[test]
    fn identical_runs_have_zero_error() {
        let (ds, grid, act, pools, cfg) = setup();
        let a = integrate_limit(&pools, &ds, &act, &cfg, &grid, Exec::Sequential).unwrap();
        let rep = error_functional(&a, &a, &act, &grid).unwrap();
        assert!(rep.entries.iter().all(|e| e.total == 0.0 && e.g_abs_diff.iter().all(|&g| g == 0.0)));
    }

    #[test]
    fn initial_parameter_components_vanish_and_match_oracle() {
        let (ds, grid, act, pools, cfg) = setup();
        let reference = integrate_limit(&pools, &ds, &act, &cfg, &grid, Exec::Sequential).unwrap();
        let inter = intermediate_system(&pools.c[..4], &pools, &ds, &act, &cfg, &grid, Exec::Sequential).unwrap();
        let rep = error_functional(&inter, &reference, &act, &grid).unwrap();
        let e0 = &rep.entries[0];
        assert_eq!((e0.dc2, e0.dw1_2, e0.dw2_2), (0.0, 0.0, 0.0));
        assert_eq!((e0.dz2, e0.dh2_2, e0.total), (0.0, 0.0, 0.0));

        // Independent accumulator at the final time.
        let (a, b) = (inter.last().state.as_ref().unwrap(), reference.last().state.as_ref().unwrap());
        let mut dc2 = 0.0;
        for i in 0..4 {
            dc2 += (a.c[i] - b.c[i]).powi(2);
        }
        let mut dw2 = 0.0;
        for k in 0..4 * 5 * 2 {
            dw2 += (a.w2[k] - b.w2[k]).powi(2);
        }
        let mut dz_max: f64 = 0.0;
        for k in 0..grid.len() {
            let fa = crate::limit_ode::compute_fields(a, &act, grid.point(k)).unwrap();
            let fb = crate::limit_ode::compute_fields(b, &act, grid.point(k)).unwrap();
            let dz: f64 = (0..4).map(|i| (fa.z[i] - fb.z[i]).powi(2)).sum::<f64>() / 4.0;
            dz_max = dz_max.max(dz);
        }
        let last = rep.entries.last().unwrap().clone();
        assert!((last.dc2 - dc2 / 4.0).abs() < 1e-12);
        assert!((last.dw2_2 - dw2 / 40.0).abs() < 1e-12);
        assert!((last.dz2 - dz_max).abs() < 1e-12);
        assert!(last.total >= last.dc2 + last.dw1_2 + last.dw2_2);

        let sum = summarize_errors(&[rep.clone(), rep]).unwrap();
        assert_eq!(sum.replicates, 2);
        assert_eq!(sum.dc2.last().copied().unwrap(), last.dc2);
        assert!(sum.sup_mean_g_gap.iter().all(|&g| g >= 0.0));
    }

    #[test]
    fn mismatched_trajectories_are_rejected() {
        let (ds, grid, act, pools, cfg) = setup();
        let a = integrate_limit(&pools, &ds, &act, &cfg, &grid, Exec::Sequential).unwrap();
        let other = IntegrateConfig { dt: 0.025, ..cfg.clone() };
        let b = integrate_limit(&pools, &ds, &act, &other, &grid, Exec::Sequential).unwrap();
        assert!(error_functional(&a, &b, &act, &grid).is_err());
        let c = integrate_limit(&pools, &ds, &act, &IntegrateConfig { keep_states: false, ..cfg }, &grid, Exec::Sequential).unwrap();
        assert!(error_functional(&a, &c, &act, &grid).is_err());
    }
}
