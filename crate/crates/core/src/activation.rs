//! Bounded, twice continuously differentiable activations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivationKind {
    /// `e^z / (1 + e^z)`; real analytic with strictly positive derivative.
    Sigmoid,
    Tanh,
    /// `z / sqrt(1 + z^2)`, an algebraic sigmoid. Bounded and smooth.
    SmoothCustom,
}

impl ActivationKind {
    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Tanh => "tanh",
            ActivationKind::SmoothCustom => "smooth-custom",
        }
    }
}

impl std::str::FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(ActivationKind::Sigmoid),
            "tanh" => Ok(ActivationKind::Tanh),
            "smooth-custom" => Ok(ActivationKind::SmoothCustom),
            other => Err(Error::config(format!("unknown activation `{other}`"))),
        }
    }
}

/// A scalar nonlinearity `σ` with known sup-bounds on `|σ|` and `|σ'|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Activation {
    pub kind: ActivationKind,
    pub value_bound: f64,
    pub derivative_bound: f64,
}

impl Activation {
    pub fn new(kind: ActivationKind) -> Self {
        let (value_bound, derivative_bound) = match kind {
            ActivationKind::Sigmoid => (1.0, 0.25),
            ActivationKind::Tanh => (1.0, 1.0),
            ActivationKind::SmoothCustom => (1.0, 1.0),
        };
        Activation {
            kind,
            value_bound,
            derivative_bound,
        }
    }

    pub fn sigmoid() -> Self {
        Self::new(ActivationKind::Sigmoid)
    }

    pub fn tanh() -> Self {
        Self::new(ActivationKind::Tanh)
    }

    /// `σ(z)`, rejecting non-finite arguments.
    pub fn eval(&self, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return Err(Error::Domain(z));
        }
        Ok(self.value(z))
    }

    /// `σ'(z)`, rejecting non-finite arguments.
    pub fn deriv(&self, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return Err(Error::Domain(z));
        }
        Ok(self.slope(z))
    }

    /// Unchecked `σ(z)` for inner loops whose inputs are already known finite.
    #[inline]
    pub fn value(&self, z: f64) -> f64 {
        match self.kind {
            ActivationKind::Sigmoid => sigmoid(z),
            ActivationKind::Tanh => z.tanh(),
            ActivationKind::SmoothCustom => z / (1.0 + z * z).sqrt(),
        }
    }

    /// Unchecked `σ'(z)`.
    #[inline]
    pub fn slope(&self, z: f64) -> f64 {
        match self.kind {
            ActivationKind::Sigmoid => {
                // e^{-|z|} / (1 + e^{-|z|})^2 stays positive where σ(1 − σ) rounds to 0.
                let e = (-z.abs()).exp();
                let q = 1.0 + e;
                e / (q * q)
            }
            ActivationKind::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            ActivationKind::SmoothCustom => {
                let q = 1.0 + z * z;
                1.0 / (q * q.sqrt())
            }
        }
    }

    /// `(σ(z), σ'(z))` sharing the exponential.
    #[inline]
    pub fn value_and_slope(&self, z: f64) -> (f64, f64) {
        (self.value(z), self.slope(z))
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    // Both branches avoid overflow of exp for large |z|.
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Either a hidden-layer activation or the identity. Only the outer layer of
/// the two-layer network may be switched to the identity, which collapses it
/// onto a single-hidden-layer network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OuterActivation {
    #[default]
    Hidden,
    Identity,
}

impl OuterActivation {
    #[inline]
    pub fn value(self, act: &Activation, z: f64) -> f64 {
        match self {
            OuterActivation::Hidden => act.value(z),
            OuterActivation::Identity => z,
        }
    }

    #[inline]
    pub fn slope(self, act: &Activation, z: f64) -> f64 {
        match self {
            OuterActivation::Hidden => act.slope(z),
            OuterActivation::Identity => 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KINDS: [ActivationKind; 3] = [
        ActivationKind::Sigmoid,
        ActivationKind::Tanh,
        ActivationKind::SmoothCustom,
    ];

    fn grid() -> impl Iterator<Item = f64> {
        (0..=10_000).map(|k| -50.0 + 100.0 * k as f64 / 10_000.0)
    }

    #[test]
    fn values_at_zero() {
        assert_eq!(Activation::sigmoid().eval(0.0).unwrap(), 0.5);
        assert_eq!(Activation::tanh().eval(0.0).unwrap(), 0.0);
        assert_eq!(Activation::sigmoid().deriv(0.0).unwrap(), 0.25);
        assert_eq!(Activation::tanh().deriv(0.0).unwrap(), 1.0);
    }

    #[test]
    fn sigmoid_at_half_matches_high_precision_value() {
        // 1 / (1 + e^{-1/2}) evaluated with mpmath at 50 digits.
        let expected = 0.622_459_331_201_854_6_f64;
        let got = Activation::sigmoid().eval(0.5).unwrap();
        assert!((got - expected).abs() < 1e-15, "{got}");
    }

    #[test]
    fn non_finite_arguments_are_rejected() {
        for kind in KINDS {
            let a = Activation::new(kind);
            for z in [f64::NAN, f64::INFINITY, f64::NEG_INFINITY] {
                assert!(matches!(a.eval(z), Err(Error::Domain(_))));
                assert!(matches!(a.deriv(z), Err(Error::Domain(_))));
            }
        }
    }

    #[test]
    fn bounds_hold_on_grid() {
        for kind in KINDS {
            let a = Activation::new(kind);
            for z in grid() {
                assert!(a.eval(z).unwrap().abs() <= a.value_bound);
                assert!(a.deriv(z).unwrap().abs() <= a.derivative_bound);
            }
        }
    }

    #[test]
    fn derivative_positive_for_sigmoid_and_tanh() {
        // tanh' underflows to exactly zero past |z| ~ 19 in double precision, so
        // positivity is checked where it is representable.
        for z in grid() {
            assert!(Activation::sigmoid().deriv(z).unwrap() > 0.0, "sigmoid at {z}");
            if z.abs() <= 18.0 {
                assert!(Activation::tanh().deriv(z).unwrap() > 0.0, "tanh at {z}");
            }
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let h = 1e-5;
        for kind in KINDS {
            let a = Activation::new(kind);
            for z in grid() {
                let fd = (a.value(z + h) - a.value(z - h)) / (2.0 * h);
                let d = a.slope(z);
                // Relative where the derivative is resolvable, absolute in the flat tails.
                let tol = 1e-6 * d.abs().max(1e-4);
                assert!((fd - d).abs() <= tol, "{kind:?} at {z}: fd {fd} vs {d}");
            }
        }
        let a = Activation::sigmoid();
        let fd = (a.value(2.0 + h) - a.value(2.0 - h)) / (2.0 * h);
        assert!((fd - a.slope(2.0)).abs() < 1e-8);
    }

    #[test]
    fn evaluation_is_pure() {
        for kind in KINDS {
            let a = Activation::new(kind);
            for z in [-3.2, 0.0, 0.7, 41.0] {
                assert_eq!(a.value(z).to_bits(), a.value(z).to_bits());
                assert_eq!(a.slope(z).to_bits(), a.slope(z).to_bits());
            }
        }
    }
}
