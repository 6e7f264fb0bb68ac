use serde::{Deserialize, Serialize};

use crate::activation::{Activation, OuterActivation};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::finite_net::{LearningRates, TwoLayerParams};
use crate::limit_ode::ParticlePools;
use crate::reduce::{sup_abs, sup_row_norm};

/// Inputs of the a-priori sup-norm bound for two-layer dynamics.
///
/// Rates are per unit of limit time: `ρ_C = α_C N₁/N₂`, `ρ₁ = α₁`,
/// `ρ₂ = α₂/N₂`. The limit systems have all three equal to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub c0: f64,
    pub w1_0: f64,
    pub w2_0: f64,
    pub rho_c: f64,
    pub rho_w1: f64,
    pub rho_w2: f64,
    /// `max |y|`
    pub y_max: f64,
    /// `max ‖x‖`
    pub x_max: f64,
    pub value_bound: f64,
    pub derivative_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GronwallBound {
    pub c: f64,
    pub w1: f64,
    pub w2: f64,
    pub total: f64,
}

impl BoundInputs {
    fn common(data: &Dataset, act: &Activation) -> (f64, f64, f64, f64) {
        (data.target_bound(), data.domain().max_norm(data.dim()), act.value_bound, act.derivative_bound)
    }

    pub fn for_network(p: &TwoLayerParams, rates: &LearningRates, data: &Dataset, act: &Activation) -> Result<Self> {
        if p.outer != OuterActivation::Hidden {
            return Err(Error::contract("the a-priori bound assumes a bounded outer activation"));
        }
        let (y_max, x_max, value_bound, derivative_bound) = Self::common(data, act);
        let (n1, n2) = (p.n1 as f64, p.n2 as f64);
        Ok(BoundInputs {
            c0: sup_abs(&p.c),
            w1_0: sup_row_norm(&p.w1, p.d),
            w2_0: sup_abs(&p.w2),
            rho_c: rates.c * n1 / n2,
            rho_w1: rates.w1,
            rho_w2: rates.w2 / n2,
            y_max,
            x_max,
            value_bound,
            derivative_bound,
        })
    }

    pub fn for_pools(p: &ParticlePools, data: &Dataset, act: &Activation) -> Self {
        let (y_max, x_max, value_bound, derivative_bound) = Self::common(data, act);
        BoundInputs {
            c0: sup_abs(&p.c),
            w1_0: sup_row_norm(&p.w, p.d),
            w2_0: sup_abs(&p.u),
            rho_c: 1.0,
            rho_w1: 1.0,
            rho_w2: 1.0,
            y_max,
            x_max,
            value_bound,
            derivative_bound,
        }
    }
}

/// Grönwall bound on `max|C|`, `max‖W¹‖`, `max|W²|` over `[0, T]`.
///
/// `|g| ≤ B max|C|` closes a linear inequality for `C`; `W²` and then `W¹`
/// follow by integrating their drift bounds.
pub fn apriori_bound(inp: &BoundInputs, horizon: f64) -> GronwallBound {
    let (b, bp, y, t) = (inp.value_bound, inp.derivative_bound, inp.y_max, horizon);
    let resid = |c: f64| y + b * c;
    let c = (inp.c0 + y / b) * (inp.rho_c * b * b * t).exp() - y / b;
    let w2 = inp.w2_0 + inp.rho_w2 * t * b * bp * c * resid(c);
    let w1 = inp.w1_0 + inp.rho_w1 * t * resid(c) * c * bp * w2 * bp * inp.x_max;
    GronwallBound { c, w1, w2, total: c + w1 + w2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_dataset, DomainBox, TeacherSpec, TestGrid};
    use crate::exec::Exec;
    use crate::finite_net::{init_two_layer, train, InitDistribution, LearningRateSchedule, TrainConfig};
    use crate::limit_ode::{integrate_limit, IntegrateConfig};

    fn setup() -> (Dataset, TestGrid, Activation) {
        let dom = DomainBox::new(-1.0, 1.0).unwrap();
        let ds = generate_dataset(&TeacherSpec::trigonometric(&[(0.5, std::f64::consts::PI, 0.0)]), 1, 32, dom, 7).unwrap();
        (ds, TestGrid::draw(1, 8, dom, 7), Activation::sigmoid())
    }

    #[test]
    fn zero_horizon_is_initial_norms() {
        let inp = BoundInputs {
            c0: 1.0,
            w1_0: 2.0,
            w2_0: 0.5,
            rho_c: 1.0,
            rho_w1: 1.0,
            rho_w2: 1.0,
            y_max: 0.5,
            x_max: 1.0,
            value_bound: 1.0,
            derivative_bound: 0.25,
        };
        let b = apriori_bound(&inp, 0.0);
        assert!((b.c - 1.0).abs() < 1e-15 && b.w1 == 2.0 && b.w2 == 0.5);
        assert!(apriori_bound(&inp, 1.0).total > b.total);
    }

    #[test]
    fn sgd_and_limit_runs_stay_below_the_bound() {
        let (ds, grid, act) = setup();
        let p = init_two_layer(&InitDistribution::default(), 64, 16, 1, 3, 0).unwrap();
        let sched = LearningRateSchedule::scaled(2);
        let rates = sched.learning_rates(&[64, 16]).unwrap();
        let traj = train(&p, &ds, &act, &sched, &TrainConfig { snapshot_times: vec![0.25, 0.5, 0.75], ..TrainConfig::new(1.0, 3) }, &grid).unwrap();
        let bound = apriori_bound(&BoundInputs::for_network(&p, &rates, &ds, &act).unwrap(), 1.0);
        assert!(traj.max_param_total() <= bound.total);

        let pools = ParticlePools::draw(&InitDistribution::default(), 1, 16, 8, 2, 3, 0).unwrap();
        let lt = integrate_limit(&pools, &ds, &act, &IntegrateConfig::new(0.05, 1.0), &grid, Exec::Sequential).unwrap();
        assert!(lt.max_norm_total() <= apriori_bound(&BoundInputs::for_pools(&pools, &ds, &act), 1.0).total);
    }
}
