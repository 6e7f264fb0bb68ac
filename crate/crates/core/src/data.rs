//! Synthetic regression data on a compact box, and the empirical loss.

use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::reduce::pairwise_mean_by;
use crate::rng::{self, Purpose};

/// The input box `[lo, hi]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub lo: f64,
    pub hi: f64,
}

impl DomainBox {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::config(format!("empty or non-finite domain [{lo}, {hi}]")));
        }
        Ok(DomainBox { lo, hi })
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.lo..=self.hi).contains(&v)
    }

    /// Largest Euclidean norm of a point of `[lo, hi]^d`.
    pub fn max_norm(&self, d: usize) -> f64 {
        self.lo.abs().max(self.hi.abs()) * (d as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TeacherKind {
    /// `f(x) = Σ_m a_m σ(b_m · s(x) + e_m)` with `s(x) = Σ_i x_i`; parameters
    /// are `(a, b, e)` triples.
    AffineSigmoidMixture,
    /// `f(x) = Σ_m a_m sin(ω_m · s(x) + φ_m)`; parameters are `(a, ω, φ)` triples.
    Trigonometric,
    /// `f(x) = c`; a single parameter.
    Constant,
}

/// Target function `f` with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherSpec {
    pub kind: TeacherKind,
    pub params: Vec<f64>,
}

impl TeacherSpec {
    pub fn constant(c: f64) -> Self {
        TeacherSpec {
            kind: TeacherKind::Constant,
            params: vec![c],
        }
    }

    pub fn trigonometric(terms: &[(f64, f64, f64)]) -> Self {
        TeacherSpec {
            kind: TeacherKind::Trigonometric,
            params: terms.iter().flat_map(|&(a, w, p)| [a, w, p]).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            TeacherKind::Constant => self.params.len() == 1,
            _ => !self.params.is_empty() && self.params.len().is_multiple_of(3),
        };
        if !ok || self.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::config(format!(
                "teacher {:?} has malformed parameters {:?}",
                self.kind, self.params
            )));
        }
        Ok(())
    }

    /// Evaluates `f(x)`. The mixture uses the sigmoid regardless of the
    /// network's activation so the task does not change with it.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let s: f64 = x.iter().sum();
        match self.kind {
            TeacherKind::Constant => self.params[0],
            TeacherKind::Trigonometric => self
                .params
                .chunks_exact(3)
                .map(|t| t[0] * (t[1] * s + t[2]).sin())
                .sum(),
            TeacherKind::AffineSigmoidMixture => {
                let sig = Activation::sigmoid();
                self.params
                    .chunks_exact(3)
                    .map(|t| t[0] * sig.value(t[1] * s + t[2]))
                    .sum()
            }
        }
    }

    /// A range `[y_lo, y_hi]` that contains every output of the teacher.
    pub fn output_range(&self) -> (f64, f64) {
        match self.kind {
            TeacherKind::Constant => (self.params[0], self.params[0]),
            TeacherKind::Trigonometric => {
                let r: f64 = self.params.chunks_exact(3).map(|t| t[0].abs()).sum();
                (-r, r)
            }
            TeacherKind::AffineSigmoidMixture => {
                let lo: f64 = self.params.chunks_exact(3).map(|t| t[0].min(0.0)).sum();
                let hi: f64 = self.params.chunks_exact(3).map(|t| t[0].max(0.0)).sum();
                (lo, hi)
            }
        }
    }
}

/// A finite sample `(x_s, y_s)` standing in for the data law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    d: usize,
    /// Row-major `D × d`.
    inputs: Vec<f64>,
    targets: Vec<f64>,
    domain: DomainBox,
    target_range: (f64, f64),
}

impl Dataset {
    /// Builds a dataset from explicit rows, checking the compact-support invariants.
    pub fn from_rows(
        d: usize,
        inputs: Vec<f64>,
        targets: Vec<f64>,
        domain: DomainBox,
        target_range: (f64, f64),
    ) -> Result<Self> {
        if d == 0 || targets.is_empty() {
            return Err(Error::config("dataset needs d ≥ 1 and at least one sample"));
        }
        if inputs.len() != d * targets.len() {
            return Err(Error::contract(format!(
                "{} input values for {} samples of dimension {d}",
                inputs.len(),
                targets.len()
            )));
        }
        if let Some(v) = inputs.iter().find(|v| !domain.contains(**v)) {
            return Err(Error::config(format!("input coordinate {v} outside the domain")));
        }
        let (ylo, yhi) = target_range;
        if let Some(y) = targets.iter().find(|y| !(ylo..=yhi).contains(*y)) {
            return Err(Error::config(format!("target {y} outside [{ylo}, {yhi}]")));
        }
        Ok(Dataset {
            d,
            inputs,
            targets,
            domain,
            target_range,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn input(&self, s: usize) -> &[f64] {
        &self.inputs[s * self.d..(s + 1) * self.d]
    }

    pub fn target(&self, s: usize) -> f64 {
        self.targets[s]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn domain(&self) -> DomainBox {
        self.domain
    }

    pub fn target_range(&self) -> (f64, f64) {
        self.target_range
    }

    /// `max_s |y_s|`.
    pub fn target_bound(&self) -> f64 {
        self.targets.iter().fold(0.0f64, |m, y| m.max(y.abs()))
    }

    /// Same inputs, new targets (e.g. a network's own outputs for a zero-residual task).
    pub fn with_targets(&self, targets: Vec<f64>) -> Result<Self> {
        let lo = targets.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Dataset::from_rows(self.d, self.inputs.clone(), targets, self.domain, (lo, hi))
    }

    /// Writes `x1,...,xd,y` CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.d).map(|i| format!("x{i}")).chain(["y".into()]).collect();
        writeln!(w, "{}", header.join(","))?;
        for s in 0..self.len() {
            let row: Vec<String> = self
                .input(s)
                .iter()
                .chain(std::iter::once(&self.targets[s]))
                .map(|v| format!("{v:?}"))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Reads `x1,...,xd,y` CSV. The domain and target range are the tight
    /// bounding intervals of the file's contents unless `domain` is given.
    pub fn read_csv<R: Read>(mut r: R, domain: Option<DomainBox>) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Csv("empty file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let d = cols.len().saturating_sub(1);
        let expected: Vec<String> = (1..=d).map(|i| format!("x{i}")).chain(["y".into()]).collect();
        if d == 0 || cols != expected {
            return Err(Error::Csv(format!("bad header `{header}`; expected `{}`", expected.join(","))));
        }
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for (n, line) in lines.enumerate() {
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Csv(format!("row {}: {e}", n + 1)))?;
            if vals.len() != d + 1 {
                return Err(Error::Csv(format!("row {} has {} fields, expected {}", n + 1, vals.len(), d + 1)));
            }
            inputs.extend_from_slice(&vals[..d]);
            targets.push(vals[d]);
        }
        let domain = match domain {
            Some(b) => b,
            None => {
                let lo = inputs.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = inputs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                DomainBox::new(lo, if hi > lo { hi } else { lo + 1.0 })?
            }
        };
        let ylo = targets.iter().copied().fold(f64::INFINITY, f64::min);
        let yhi = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Dataset::from_rows(d, inputs, targets, domain, (ylo, yhi))
    }
}

/// Draws `n` points i.i.d. uniform on `[lo, hi]^d`, row-major.
pub fn uniform_points<R: Rng>(rng: &mut R, n: usize, d: usize, domain: DomainBox) -> Vec<f64> {
    (0..n * d).map(|_| rng.random_range(domain.lo..=domain.hi)).collect()
}

/// `D` samples with inputs uniform on the box and targets `f(x)`.
pub fn generate_dataset(
    teacher: &TeacherSpec,
    d: usize,
    samples: usize,
    domain: DomainBox,
    seed: u64,
) -> Result<Dataset> {
    teacher.validate()?;
    if d == 0 || samples == 0 {
        return Err(Error::config(format!("need d ≥ 1 and D ≥ 1, got d = {d}, D = {samples}")));
    }
    let domain = DomainBox::new(domain.lo, domain.hi)?;
    let mut rng = rng::stream(seed, Purpose::Dataset, 0);
    let inputs = uniform_points(&mut rng, samples, d, domain);
    let targets = (0..samples).map(|s| teacher.eval(&inputs[s * d..(s + 1) * d])).collect();
    Dataset::from_rows(d, inputs, targets, domain, teacher.output_range())
}

/// Fixed evaluation inputs standing in for a sup over the input domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestGrid {
    pub d: usize,
    pub points: Vec<f64>,
}

impl TestGrid {
    pub fn draw(d: usize, n: usize, domain: DomainBox, seed: u64) -> Self {
        let mut rng = rng::stream(seed, Purpose::TestGrid, 0);
        TestGrid {
            d,
            points: uniform_points(&mut rng, n, d, domain),
        }
    }

    pub fn from_points(d: usize, points: Vec<f64>) -> Self {
        TestGrid { d, points }
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.d..(k + 1) * self.d]
    }
}

/// `(1/2) · mean_s (y_s − prediction_s)^2`.
pub fn expected_loss(predictions: &[f64], dataset: &Dataset) -> Result<f64> {
    if predictions.len() != dataset.len() {
        return Err(Error::contract(format!(
            "{} predictions for {} samples",
            predictions.len(),
            dataset.len()
        )));
    }
    let t = dataset.targets();
    Ok(0.5 * pairwise_mean_by(t.len(), |s| {
        let r = t[s] - predictions[s];
        r * r
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn unit() -> DomainBox {
        DomainBox::new(-1.0, 1.0).unwrap()
    }

    #[test]
    fn constant_teacher_gives_constant_targets() {
        let ds = generate_dataset(&TeacherSpec::constant(0.0), 3, 50, unit(), 1).unwrap();
        assert!(ds.targets().iter().all(|&y| y == 0.0));
        assert_eq!(ds.inputs().len(), 150);
    }

    #[test]
    fn generation_is_deterministic() {
        let t = TeacherSpec::trigonometric(&[(0.5, 3.0, 0.1)]);
        let a = generate_dataset(&t, 2, 40, unit(), 9).unwrap();
        let b = generate_dataset(&t, 2, 40, unit(), 9).unwrap();
        let c = generate_dataset(&t, 2, 40, unit(), 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn trigonometric_targets_match_formula() {
        let t = TeacherSpec::trigonometric(&[(0.5, std::f64::consts::PI, 0.0), (0.2, 5.0, 1.0)]);
        let ds = generate_dataset(&t, 1, 64, unit(), 3).unwrap();
        for s in 0..64 {
            let x = ds.input(s)[0];
            let oracle = 0.5 * (std::f64::consts::PI * x).sin() + 0.2 * (5.0 * x + 1.0).sin();
            assert!((ds.target(s) - oracle).abs() < 1e-15);
            assert!((-1.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn invalid_configurations() {
        let t = TeacherSpec::constant(1.0);
        assert!(matches!(generate_dataset(&t, 1, 0, unit(), 0), Err(Error::Config(_))));
        assert!(matches!(generate_dataset(&t, 0, 5, unit(), 0), Err(Error::Config(_))));
        assert!(DomainBox::new(1.0, 1.0).is_err());
        assert!(DomainBox::new(0.0, f64::INFINITY).is_err());
        let bad = TeacherSpec { kind: TeacherKind::Trigonometric, params: vec![1.0, 2.0] };
        assert!(generate_dataset(&bad, 1, 5, unit(), 0).is_err());
    }

    #[test]
    fn mixture_targets_stay_in_range() {
        let t = TeacherSpec {
            kind: TeacherKind::AffineSigmoidMixture,
            params: vec![1.0, 4.0, 0.0, -0.5, -3.0, 1.0],
        };
        let ds = generate_dataset(&t, 2, 200, unit(), 4).unwrap();
        let (lo, hi) = t.output_range();
        assert!(ds.targets().iter().all(|y| (lo..=hi).contains(y)));
    }

    #[test]
    fn loss_examples() {
        let ds = Dataset::from_rows(1, vec![0.0, 0.5], vec![1.0, -1.0], unit(), (-1.0, 1.0)).unwrap();
        assert_eq!(expected_loss(&[0.0, 0.0], &ds).unwrap(), 0.5);
        assert_eq!(expected_loss(&[1.0, -1.0], &ds).unwrap(), 0.0);
        assert!(matches!(expected_loss(&[0.0], &ds), Err(Error::Contract(_))));
    }

    #[test]
    fn loss_matches_summation_oracle() {
        let t = TeacherSpec::trigonometric(&[(0.7, 2.0, 0.3)]);
        let ds = generate_dataset(&t, 2, 333, unit(), 5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let preds: Vec<f64> = (0..ds.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut acc = 0.0;
        for (p, y) in preds.iter().zip(ds.targets()) {
            acc += (y - p) * (y - p);
        }
        let oracle = acc / (2.0 * ds.len() as f64);
        assert!((expected_loss(&preds, &ds).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn csv_roundtrip() {
        let t = TeacherSpec::trigonometric(&[(0.5, 3.0, 0.0)]);
        let ds = generate_dataset(&t, 2, 17, unit(), 2).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,y\n"));
        let back = Dataset::read_csv(&buf[..], Some(unit())).unwrap();
        assert_eq!(back.inputs(), ds.inputs());
        assert_eq!(back.targets(), ds.targets());
        assert!(Dataset::read_csv("a,b\n1,2\n".as_bytes(), None).is_err());
        assert!(Dataset::read_csv("x1,y\n1\n".as_bytes(), None).is_err());
    }

    proptest! {
        #[test]
        fn loss_nonnegative_and_zero_only_at_targets(
            ys in prop::collection::vec(-1.0f64..1.0, 1..40),
            shift in -1.0f64..1.0,
        ) {
            let n = ys.len();
            let ds = Dataset::from_rows(1, vec![0.0; n], ys.clone(), unit(), (-1.0, 1.0)).unwrap();
            let preds: Vec<f64> = ys.iter().map(|y| y + shift).collect();
            let l = expected_loss(&preds, &ds).unwrap();
            prop_assert!(l >= 0.0);
            prop_assert_eq!(l == 0.0, preds == ys);
        }
    }
}
