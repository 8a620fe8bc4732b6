//! Periodic pulse families, registered by name.
//!
//! Every family implements [`PulseShape`]; [`ShapeRegistry`] maps the names
//! used on the command line (`cosine`, `duty`, `constant`) to constructors.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Parameters shared by all families; `eta` is only read by `duty`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeParams {
    pub period: f64,
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

impl ShapeParams {
    pub fn new(period: f64, amplitude: f64) -> Self {
        ShapeParams {
            period,
            amplitude,
            eta: None,
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = Some(eta);
        self
    }
}

/// A `T`-periodic real control `u*`.
pub trait PulseShape: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn params(&self) -> ShapeParams;

    /// Value at time `t`, extended periodically.
    fn value(&self, t: f64) -> f64;

    /// `∫_0^T u*(t) e^{iωt} dt` in closed form.
    fn fourier_coefficient(&self, omega: f64) -> Complex64;

    /// `∫_0^T |u*(t)|^r dt`.
    fn power_integral(&self, r: f64) -> f64;

    /// One period as `(length, value)` pieces when the shape is piecewise constant.
    fn exact_period(&self) -> Option<Vec<(f64, f64)>>;

    fn with_amplitude(&self, amplitude: f64) -> Box<dyn PulseShape>;
}

/// `∫_0^T e^{iαt} dt`.
fn exp_integral(alpha: f64, period: f64) -> Complex64 {
    if (alpha * period).abs() < 1e-8 {
        return Complex64::new(period, alpha * period * period / 2.0);
    }
    (Complex64::from_polar(1.0, alpha * period) - 1.0) / Complex64::new(0.0, alpha)
}

fn check_period(period: f64) -> Result<()> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::validation(format!("pulse period must be positive, got {period}")));
    }
    Ok(())
}

fn check_amplitude(amplitude: f64) -> Result<()> {
    if !amplitude.is_finite() {
        return Err(Error::validation("pulse amplitude must be finite"));
    }
    Ok(())
}

/// `amplitude · cos(2πt/T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cosine {
    period: f64,
    amplitude: f64,
}

impl Cosine {
    pub fn new(period: f64, amplitude: f64) -> Result<Self> {
        check_period(period)?;
        check_amplitude(amplitude)?;
        Ok(Cosine { period, amplitude })
    }

    fn angular_frequency(&self) -> f64 {
        2.0 * PI / self.period
    }
}

impl PulseShape for Cosine {
    fn name(&self) -> &'static str {
        "cosine"
    }

    fn params(&self) -> ShapeParams {
        ShapeParams::new(self.period, self.amplitude)
    }

    fn value(&self, t: f64) -> f64 {
        self.amplitude * (self.angular_frequency() * t).cos()
    }

    fn fourier_coefficient(&self, omega: f64) -> Complex64 {
        let w0 = self.angular_frequency();
        (exp_integral(omega + w0, self.period) + exp_integral(omega - w0, self.period))
            * (self.amplitude / 2.0)
    }

    fn power_integral(&self, r: f64) -> f64 {
        // mean of |cos|^r over a period is Γ((r+1)/2) / (√π Γ(r/2 + 1))
        self.amplitude.abs().powf(r) * self.period * gamma((r + 1.0) / 2.0)
            / (PI.sqrt() * gamma(r / 2.0 + 1.0))
    }

    fn exact_period(&self) -> Option<Vec<(f64, f64)>> {
        None
    }

    fn with_amplitude(&self, amplitude: f64) -> Box<dyn PulseShape> {
        Box::new(Cosine { amplitude, ..*self })
    }
}

/// Duty cycle: `amplitude` on `(0, η)`, zero on `[η, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Duty {
    period: f64,
    eta: f64,
    amplitude: f64,
}

impl Duty {
    pub fn new(period: f64, eta: f64, amplitude: f64) -> Result<Self> {
        check_period(period)?;
        check_amplitude(amplitude)?;
        if !(eta > 0.0 && eta < period) {
            return Err(Error::validation(format!(
                "duty width eta must lie in (0, {period}), got {eta}"
            )));
        }
        Ok(Duty {
            period,
            eta,
            amplitude,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

impl PulseShape for Duty {
    fn name(&self) -> &'static str {
        "duty"
    }

    fn params(&self) -> ShapeParams {
        ShapeParams::new(self.period, self.amplitude).with_eta(self.eta)
    }

    fn value(&self, t: f64) -> f64 {
        let x = t.rem_euclid(self.period);
        if x > 0.0 && x < self.eta {
            self.amplitude
        } else {
            0.0
        }
    }

    fn fourier_coefficient(&self, omega: f64) -> Complex64 {
        exp_integral(omega, self.eta) * self.amplitude
    }

    fn power_integral(&self, r: f64) -> f64 {
        self.amplitude.abs().powf(r) * self.eta
    }

    fn exact_period(&self) -> Option<Vec<(f64, f64)>> {
        Some(vec![(self.eta, self.amplitude), (self.period - self.eta, 0.0)])
    }

    fn with_amplitude(&self, amplitude: f64) -> Box<dyn PulseShape> {
        Box::new(Duty { amplitude, ..*self })
    }
}

/// Constant `amplitude`, viewed as `T`-periodic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant {
    period: f64,
    amplitude: f64,
}

impl Constant {
    pub fn new(period: f64, amplitude: f64) -> Result<Self> {
        check_period(period)?;
        check_amplitude(amplitude)?;
        Ok(Constant { period, amplitude })
    }
}

impl PulseShape for Constant {
    fn name(&self) -> &'static str {
        "constant"
    }

    fn params(&self) -> ShapeParams {
        ShapeParams::new(self.period, self.amplitude)
    }

    fn value(&self, _t: f64) -> f64 {
        self.amplitude
    }

    fn fourier_coefficient(&self, omega: f64) -> Complex64 {
        exp_integral(omega, self.period) * self.amplitude
    }

    fn power_integral(&self, r: f64) -> f64 {
        self.amplitude.abs().powf(r) * self.period
    }

    fn exact_period(&self) -> Option<Vec<(f64, f64)>> {
        Some(vec![(self.period, self.amplitude)])
    }

    fn with_amplitude(&self, amplitude: f64) -> Box<dyn PulseShape> {
        Box::new(Constant { amplitude, ..*self })
    }
}

type ShapeCtor = fn(&ShapeParams) -> Result<Box<dyn PulseShape>>;

/// Name-indexed pulse families.
pub struct ShapeRegistry {
    entries: Vec<(&'static str, ShapeCtor)>,
}

impl ShapeRegistry {
    pub fn empty() -> Self {
        ShapeRegistry { entries: Vec::new() }
    }

    pub fn register(&mut self, name: &'static str, ctor: ShapeCtor) {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, ctor));
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn build(&self, name: &str, params: &ShapeParams) -> Result<PeriodicPulse> {
        let ctor = self
            .entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, c)| c)
            .ok_or_else(|| {
                Error::validation(format!(
                    "unknown pulse shape `{name}` (available: {})",
                    self.names().join(", ")
                ))
            })?;
        Ok(PeriodicPulse::from_shape(ctor(params)?))
    }
}

impl Default for ShapeRegistry {
    fn default() -> Self {
        let mut reg = ShapeRegistry::empty();
        reg.register("cosine", |p| Ok(Box::new(Cosine::new(p.period, p.amplitude)?)));
        reg.register("duty", |p| {
            let eta = p
                .eta
                .ok_or_else(|| Error::validation("duty pulse needs eta"))?;
            Ok(Box::new(Duty::new(p.period, eta, p.amplitude)?))
        });
        reg.register("constant", |p| Ok(Box::new(Constant::new(p.period, p.amplitude)?)));
        reg
    }
}

/// Shared handle to a pulse family instance.
#[derive(Debug, Clone)]
pub struct PeriodicPulse {
    shape: Arc<dyn PulseShape>,
}

impl PeriodicPulse {
    pub fn from_shape(shape: Box<dyn PulseShape>) -> Self {
        PeriodicPulse {
            shape: Arc::from(shape),
        }
    }

    pub fn cosine(period: f64, amplitude: f64) -> Result<Self> {
        Ok(Self::from_shape(Box::new(Cosine::new(period, amplitude)?)))
    }

    pub fn duty(period: f64, eta: f64, amplitude: f64) -> Result<Self> {
        Ok(Self::from_shape(Box::new(Duty::new(period, eta, amplitude)?)))
    }

    pub fn constant(period: f64, amplitude: f64) -> Result<Self> {
        Ok(Self::from_shape(Box::new(Constant::new(period, amplitude)?)))
    }

    pub fn shape(&self) -> &dyn PulseShape {
        self.shape.as_ref()
    }

    pub fn name(&self) -> &'static str {
        self.shape.name()
    }

    pub fn params(&self) -> ShapeParams {
        self.shape.params()
    }

    pub fn period(&self) -> f64 {
        self.params().period
    }

    pub fn amplitude(&self) -> f64 {
        self.params().amplitude
    }

    pub fn value(&self, t: f64) -> f64 {
        self.shape.value(t)
    }

    pub fn fourier_coefficient(&self, omega: f64) -> Complex64 {
        self.shape.fourier_coefficient(omega)
    }

    pub fn power_integral(&self, r: f64) -> f64 {
        self.shape.power_integral(r)
    }

    pub fn exact_period(&self) -> Option<Vec<(f64, f64)>> {
        self.shape.exact_period()
    }

    /// Same family with the amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_shape(self.shape.with_amplitude(self.amplitude() * factor))
    }
}
