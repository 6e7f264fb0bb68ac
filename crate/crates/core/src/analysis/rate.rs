use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::activation::Activation;
use crate::data::{Dataset, TestGrid};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::finite_net::InitDistribution;
use crate::limit_ode::{integrate_limit, intermediate_system, IntegrateConfig, ParticlePools, Scheme};
use crate::reduce::pairwise_mean_by;

use super::bounds::{apriori_bound, BoundInputs};

/// Least-squares line through `(log N, log error)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub widths: Vec<usize>,
    pub errors: Vec<f64>,
    /// Whether each point entered the fit (non-positive errors do not).
    pub used: Vec<bool>,
    pub slope: f64,
    pub intercept: f64,
    /// Half-width of the two-sided `confidence` interval on the slope.
    pub slope_half_width: f64,
    pub confidence: f64,
}

pub fn fit_log_log(widths: &[usize], errors: &[f64], confidence: f64) -> Result<RateFit> {
    if widths.len() != errors.len() {
        return Err(Error::contract("widths and errors differ in length"));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::config(format!("confidence {confidence} outside (0, 1)")));
    }
    let used: Vec<bool> = errors.iter().map(|&e| e > 0.0 && e.is_finite()).collect();
    let pts: Vec<(f64, f64)> = widths
        .iter()
        .zip(errors)
        .zip(&used)
        .filter(|(_, &u)| u)
        .map(|((&n, &e), _)| ((n as f64).ln(), e.ln()))
        .collect();
    let n = pts.len();
    if n < 3 {
        return Err(Error::Study(format!("rate fit needs at least 3 usable points, got {n}")));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Study("rate fit needs at least two distinct widths".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let se = (ssr / (nf - 2.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, nf - 2.0)
        .map_err(|e| Error::Study(format!("t distribution: {e}")))?
        .inverse_cdf(0.5 + confidence / 2.0);
    Ok(RateFit {
        widths: widths.to_vec(),
        errors: errors.to_vec(),
        used,
        slope,
        intercept,
        slope_half_width: t * se,
        confidence,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStudyConfig {
    /// Doubling ladder of intermediate widths `N₂`.
    pub n2_grid: Vec<usize>,
    /// c-particles of the limit reference.
    pub m_c: usize,
    pub m_w: usize,
    pub m_u: usize,
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    pub replicates: usize,
    pub seed: u64,
    pub init: InitDistribution,
    pub confidence: f64,
}

impl RateStudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n2_grid.len() < 4 {
            return Err(Error::config("rate study needs at least 4 widths"));
        }
        if self.n2_grid[0] == 0 || self.n2_grid.windows(2).any(|w| w[1] != 2 * w[0]) {
            return Err(Error::config("rate-study widths must form a doubling ladder"));
        }
        if *self.n2_grid.last().unwrap() > self.m_c {
            return Err(Error::config(format!("widths exceed the reference pool M_c = {}", self.m_c)));
        }
        if self.replicates == 0 {
            return Err(Error::config("rate study needs at least one replicate"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStudyReport {
    pub fit: RateFit,
    /// `[width][replicate]` values of `max_x |g^{N₂}_T − g_T|`.
    pub per_replicate_sup_error: Vec<Vec<f64>>,
    pub reference_final_loss: Vec<f64>,
    /// Largest `max|C| + max‖W¹‖ + max|W²|` over every run and snapshot.
    pub max_norm_total: f64,
    /// Runs whose norms exceeded their a-priori bound.
    pub bound_violations: usize,
}

/// `sup_x mean_r |g^{N₂}_T(x) − g_T(x)|` on a doubling `N₂` ladder against a
/// large-`M_c` reference sharing w/u pools and nesting the c-pool, then a
/// log-log fit of error against `N₂`.
///
/// Replicate references run first, then every `(width, replicate)` cell; both
/// stages fan out through `exec` and each cell is sequential inside.
pub fn rate_study(cfg: &RateStudyConfig, data: &Dataset, grid: &TestGrid, act: &Activation, exec: Exec) -> Result<RateStudyReport> {
    cfg.validate()?;
    let icfg = IntegrateConfig { scheme: cfg.scheme, ..IntegrateConfig::new(cfg.dt, cfg.horizon) };
    let pools = exec
        .map(cfg.replicates, |r| ParticlePools::draw(&cfg.init, data.dim(), cfg.m_c, cfg.m_w, cfg.m_u, cfg.seed, r as u64))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let refs = exec
        .map(cfg.replicates, |r| integrate_limit(&pools[r], data, act, &icfg, grid, Exec::Sequential))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let nw = cfg.n2_grid.len();
    let cells = exec
        .map(nw * cfg.replicates, |k| {
            let (w, r) = (k / cfg.replicates, k % cfg.replicates);
            let n2 = cfg.n2_grid[w];
            intermediate_system(&pools[r].c[..n2], &pools[r], data, act, &icfg, grid, Exec::Sequential)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut violations = 0;
    let mut max_norm_total = 0.0f64;
    for (r, t) in refs.iter().enumerate() {
        let bound = apriori_bound(&BoundInputs::for_pools(&pools[r], data, act), cfg.horizon).total;
        max_norm_total = max_norm_total.max(t.max_norm_total());
        violations += usize::from(t.max_norm_total() > bound);
    }
    for (k, t) in cells.iter().enumerate() {
        let p = pools[k % cfg.replicates].nested(cfg.n2_grid[k / cfg.replicates])?;
        let bound = apriori_bound(&BoundInputs::for_pools(&p, data, act), cfg.horizon).total;
        max_norm_total = max_norm_total.max(t.max_norm_total());
        violations += usize::from(t.max_norm_total() > bound);
    }

    let gap = |w: usize, r: usize, x: usize| (cells[w * cfg.replicates + r].last().g_on_grid[x] - refs[r].last().g_on_grid[x]).abs();
    let errors: Vec<f64> = (0..nw)
        .map(|w| (0..grid.len()).map(|x| pairwise_mean_by(cfg.replicates, |r| gap(w, r, x))).fold(0.0, f64::max))
        .collect();
    let per_replicate_sup_error = (0..nw)
        .map(|w| (0..cfg.replicates).map(|r| (0..grid.len()).map(|x| gap(w, r, x)).fold(0.0, f64::max)).collect())
        .collect();
    Ok(RateStudyReport {
        fit: fit_log_log(&cfg.n2_grid, &errors, cfg.confidence)?,
        per_replicate_sup_error,
        reference_final_loss: refs.iter().map(|t| t.last().loss).collect(),
        max_norm_total,
        bound_violations: violations,
    })
}
