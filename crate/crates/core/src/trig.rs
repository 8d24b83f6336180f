use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

/// One harmonic `c·cos(2πnu) + s·sin(2πnu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub n: u32,
    pub cos: f64,
    pub sin: f64,
}

/// Finite trigonometric polynomial on the circle `R/Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    pub constant: f64,
    pub harmonics: Vec<Harmonic>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        Self {
            constant: 0.0,
            harmonics: Vec::new(),
        }
    }

    pub fn sine() -> Self {
        Self::zero().with(1, 0.0, 1.0)
    }

    pub fn with(mut self, n: u32, cos: f64, sin: f64) -> Self {
        self.harmonics.push(Harmonic { n, cos, sin });
        self
    }

    pub fn value(&self, u: f64) -> f64 {
        self.harmonics.iter().fold(self.constant, |acc, h| {
            let (s, c) = (TAU * h.n as f64 * u).sin_cos();
            acc + h.cos * c + h.sin * s
        })
    }

    pub fn derivative(&self, u: f64) -> f64 {
        self.harmonics.iter().fold(0.0, |acc, h| {
            let w = TAU * h.n as f64;
            let (s, c) = (w * u).sin_cos();
            acc + w * (h.sin * c - h.cos * s)
        })
    }

    /// Upper bound on `sup |d^m/du^m (p - constant)|` from the coefficients;
    /// tight for a single harmonic.
    pub fn derivative_bound(&self, order: u32) -> f64 {
        self.harmonics
            .iter()
            .map(|h| (TAU * h.n as f64).powi(order as i32) * h.cos.hypot(h.sin))
            .sum()
    }

    /// Upper bound on `sup |p|`.
    pub fn sup_bound(&self) -> f64 {
        self.constant.abs() + self.derivative_bound(0)
    }
}

/// A circle function exposing its value, derivative and (optionally) a
/// Lipschitz constant for the derivative.
pub trait CircleFunction {
    fn value(&self, u: f64) -> f64;
    fn derivative(&self, u: f64) -> f64;
    /// Lipschitz constant of `value`, if known.
    fn value_lipschitz(&self) -> Option<f64>;
    /// Lipschitz constant of `derivative`, if known.
    fn derivative_lipschitz(&self) -> Option<f64>;
}

impl CircleFunction for TrigPoly {
    fn value(&self, u: f64) -> f64 {
        TrigPoly::value(self, u)
    }
    fn derivative(&self, u: f64) -> f64 {
        TrigPoly::derivative(self, u)
    }
    fn value_lipschitz(&self) -> Option<f64> {
        Some(self.derivative_bound(1))
    }
    fn derivative_lipschitz(&self) -> Option<f64> {
        Some(self.derivative_bound(2))
    }
}

/// A function given only by closures, with no declared regularity.
pub struct Opaque<F, G> {
    pub value: F,
    pub derivative: G,
}

impl<F: Fn(f64) -> f64, G: Fn(f64) -> f64> CircleFunction for Opaque<F, G> {
    fn value(&self, u: f64) -> f64 {
        (self.value)(u)
    }
    fn derivative(&self, u: f64) -> f64 {
        (self.derivative)(u)
    }
    fn value_lipschitz(&self) -> Option<f64> {
        None
    }
    fn derivative_lipschitz(&self) -> Option<f64> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_values() {
        let s = TrigPoly::sine();
        assert_eq!(s.value(0.0), 0.0);
        assert!((s.derivative(0.0) - TAU).abs() < 1e-12);
        assert!((s.value(0.25) - 1.0).abs() < 1e-15);
        assert!((s.derivative_bound(1) - TAU).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = TrigPoly::zero().with(1, 0.3, -0.7).with(3, 0.05, 0.2);
        for i in 0..50 {
            let u = i as f64 / 50.0;
            let h = 1e-6;
            let fd = (p.value(u + h) - p.value(u - h)) / (2.0 * h);
            assert!((fd - p.derivative(u)).abs() < 1e-6);
        }
    }
}
