//! Scalar time profiles `q(t)` used to build potentials.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::numerics::quad;

/// A complex-valued function of time, described by data so that scenario
/// files can name it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarProfile {
    Zero,
    /// `amp`
    Constant { amp: Complex64 },
    /// `amp (1+t)^{-power}`
    PowerDecay { amp: Complex64, power: f64 },
    /// `amp e^{-rate t}`
    Exponential { amp: Complex64, rate: f64 },
    /// `amp` on `[start, end)`, zero elsewhere.
    Indicator { amp: Complex64, start: f64, end: f64 },
    /// `amp (1+t)^{-power} cos(omega t + phase)`
    Oscillating { amp: Complex64, power: f64, omega: f64, phase: f64 },
    /// `amp (1+t)^{-power}` on `[0, end)`, zero afterwards.
    TruncatedPower { amp: Complex64, power: f64, end: f64 },
    /// Piecewise constant values on consecutive intervals starting at 0.
    Steps { widths: Vec<f64>, values: Vec<Complex64> },
    /// `amp sin(band s)/(π s) cos(omega s) e^{-s²/(2 width²)}` with
    /// `s = t − center`, kept on `[0, 2 center)`. Its transform has modulus
    /// close to `|amp|/2` for `|k| ∈ (omega − band, omega + band)` away from
    /// the edges.
    WavePacket { amp: Complex64, center: f64, width: f64, omega: f64, band: f64 },
    Sum { terms: Vec<ScalarProfile> },
}

impl ScalarProfile {
    pub fn constant(a: f64) -> Self {
        Self::Constant { amp: Complex64::new(a, 0.0) }
    }

    pub fn power(a: f64, power: f64) -> Self {
        Self::PowerDecay { amp: Complex64::new(a, 0.0), power }
    }

    pub fn exponential(a: Complex64, rate: f64) -> Self {
        Self::Exponential { amp: a, rate }
    }

    pub fn indicator(a: Complex64, start: f64, end: f64) -> Self {
        Self::Indicator { amp: a, start, end }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let z = Complex64::new(0.0, 0.0);
        match self {
            Self::Zero => z,
            Self::Constant { amp } => *amp,
            Self::PowerDecay { amp, power } => amp * (1.0 + t).powf(-power),
            Self::Exponential { amp, rate } => amp * (-rate * t).exp(),
            Self::Indicator { amp, start, end } => {
                if t >= *start && t < *end {
                    *amp
                } else {
                    z
                }
            }
            Self::Oscillating { amp, power, omega, phase } => amp * (1.0 + t).powf(-power) * (omega * t + phase).cos(),
            Self::TruncatedPower { amp, power, end } => {
                if t < *end {
                    amp * (1.0 + t).powf(-power)
                } else {
                    z
                }
            }
            Self::Steps { widths, values } => {
                let mut left = 0.0;
                for (w, v) in widths.iter().zip(values) {
                    if t >= left && t < left + w {
                        return *v;
                    }
                    left += w;
                }
                z
            }
            Self::WavePacket { amp, center, width, omega, band } => {
                if t < 0.0 || t >= 2.0 * center {
                    return z;
                }
                let s = t - center;
                let sinc = if s.abs() < 1e-12 { band / std::f64::consts::PI } else { (band * s).sin() / (std::f64::consts::PI * s) };
                amp * sinc * (omega * s).cos() * (-0.5 * s * s / (width * width)).exp()
            }
            Self::Sum { terms } => terms.iter().map(|p| p.eval(t)).sum(),
        }
    }

    /// Times where the profile is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Indicator { start, end, .. } => vec![*start, *end],
            Self::TruncatedPower { end, .. } => vec![*end],
            Self::WavePacket { center, .. } => vec![2.0 * center],
            Self::Steps { widths, .. } => {
                let mut acc = 0.0;
                widths
                    .iter()
                    .map(|w| {
                        acc += w;
                        acc
                    })
                    .collect()
            }
            Self::Sum { terms } => terms.iter().flat_map(|p| p.breakpoints()).collect(),
            _ => Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Constant { amp }
            | Self::PowerDecay { amp, .. }
            | Self::Exponential { amp, .. }
            | Self::Indicator { amp, .. }
            | Self::Oscillating { amp, .. }
            | Self::TruncatedPower { amp, .. }
            | Self::WavePacket { amp, .. } => amp.norm() == 0.0,
            Self::Steps { values, .. } => values.iter().all(|v| v.norm() == 0.0),
            Self::Sum { terms } => terms.iter().all(Self::is_zero),
        }
    }

    /// Last time at which the profile can be nonzero, if finite.
    pub fn support_end(&self) -> Option<f64> {
        match self {
            Self::Zero => Some(0.0),
            Self::Indicator { end, .. } | Self::TruncatedPower { end, .. } => Some(*end),
            Self::WavePacket { center, .. } => Some(2.0 * center),
            Self::Steps { widths, .. } => Some(widths.iter().sum()),
            Self::Sum { terms } => terms.iter().map(Self::support_end).try_fold(0.0f64, |m, e| e.map(|e| m.max(e))),
            p if p.is_zero() => Some(0.0),
            _ => None,
        }
    }

    /// The profile multiplied by a complex constant.
    pub fn scaled(&self, c: Complex64) -> Self {
        match self {
            Self::Zero => Self::Zero,
            Self::Constant { amp } => Self::Constant { amp: amp * c },
            Self::PowerDecay { amp, power } => Self::PowerDecay { amp: amp * c, power: *power },
            Self::Exponential { amp, rate } => Self::Exponential { amp: amp * c, rate: *rate },
            Self::Indicator { amp, start, end } => Self::Indicator { amp: amp * c, start: *start, end: *end },
            Self::Oscillating { amp, power, omega, phase } => {
                Self::Oscillating { amp: amp * c, power: *power, omega: *omega, phase: *phase }
            }
            Self::TruncatedPower { amp, power, end } => Self::TruncatedPower { amp: amp * c, power: *power, end: *end },
            Self::WavePacket { amp, center, width, omega, band } => {
                Self::WavePacket { amp: amp * c, center: *center, width: *width, omega: *omega, band: *band }
            }
            Self::Steps { widths, values } => {
                Self::Steps { widths: widths.clone(), values: values.iter().map(|v| v * c).collect() }
            }
            Self::Sum { terms } => Self::Sum { terms: terms.iter().map(|p| p.scaled(c)).collect() },
        }
    }

    /// `∫_a^b |q|²`, in closed form where one exists.
    pub fn l2_squared(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match self {
            Self::Zero => 0.0,
            Self::Constant { amp } => amp.norm_sqr() * (b - a),
            Self::PowerDecay { amp, power } => amp.norm_sqr() * power_integral(2.0 * power, a, b),
            Self::Exponential { amp, rate } => {
                if *rate == 0.0 {
                    amp.norm_sqr() * (b - a)
                } else {
                    amp.norm_sqr() * ((-2.0 * rate * a).exp() - (-2.0 * rate * b).exp()) / (2.0 * rate)
                }
            }
            Self::Indicator { amp, start, end } => amp.norm_sqr() * (b.min(*end) - a.max(*start)).max(0.0),
            Self::TruncatedPower { amp, power, end } => amp.norm_sqr() * power_integral(2.0 * power, a, b.min(*end)),
            _ => self.quadrature(a, b, |z| z.norm_sqr()),
        }
    }

    /// `∫_a^b |q|`.
    pub fn l1(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match self {
            Self::Zero => 0.0,
            Self::Constant { amp } => amp.norm() * (b - a),
            Self::PowerDecay { amp, power } => amp.norm() * power_integral(*power, a, b),
            Self::Indicator { amp, start, end } => amp.norm() * (b.min(*end) - a.max(*start)).max(0.0),
            Self::TruncatedPower { amp, power, end } => amp.norm() * power_integral(*power, a, b.min(*end)),
            _ => self.quadrature(a, b, |z| z.norm()),
        }
    }

    /// `∫_a^b q(τ) e^{-ikτ} dτ`, in closed form where one exists.
    pub fn fourier_integral(&self, k: f64, a: f64, b: f64) -> Complex64 {
        let zero = Complex64::new(0.0, 0.0);
        if b <= a {
            return zero;
        }
        let expint = |rate: Complex64, lo: f64, hi: f64| -> Complex64 {
            // ∫_lo^hi e^{-rate τ} dτ
            if rate.norm() * (hi - lo) < 1e-8 {
                Complex64::new(hi - lo, 0.0) * (-rate * lo).exp() * (1.0 - rate * (hi - lo) * 0.5)
            } else {
                ((-rate * lo).exp() - (-rate * hi).exp()) / rate
            }
        };
        let ik = Complex64::new(0.0, k);
        match self {
            Self::Zero => zero,
            Self::Constant { amp } => amp * expint(ik, a, b),
            Self::Exponential { amp, rate } => amp * expint(ik + rate, a, b),
            Self::Indicator { amp, start, end } => {
                let (lo, hi) = (a.max(*start), b.min(*end));
                if hi > lo {
                    amp * expint(ik, lo, hi)
                } else {
                    zero
                }
            }
            Self::Sum { terms } => terms.iter().map(|p| p.fourier_integral(k, a, b)).sum(),
            Self::Steps { .. } => {
                let mut nodes = vec![a];
                nodes.extend(self.breakpoints().into_iter().filter(|t| *t > a && *t < b));
                nodes.push(b);
                nodes.windows(2).map(|w| self.eval(0.5 * (w[0] + w[1])) * expint(ik, w[0], w[1])).sum()
            }
            _ => {
                let mut nodes = vec![a];
                nodes.extend(self.breakpoints().into_iter().filter(|t| *t > a && *t < b));
                nodes.push(b);
                let step = (1.0 / k.abs().max(1e-300)).min(self.quadrature_step());
                quad::composite(&nodes, step, |t| self.eval(t) * Complex64::from_polar(1.0, -k * t))
            }
        }
    }

    fn quadrature(&self, a: f64, b: f64, g: impl Fn(Complex64) -> f64) -> f64 {
        let mut nodes = vec![a];
        nodes.extend(self.breakpoints().into_iter().filter(|t| *t > a && *t < b));
        nodes.push(b);
        nodes.sort_by(f64::total_cmp);
        let step = self.quadrature_step();
        quad::composite(&nodes, step, |t| g(self.eval(t)))
    }

    fn quadrature_step(&self) -> f64 {
        match self {
            Self::Oscillating { omega, .. } => (0.5 / omega.abs().max(1e-12)).min(0.5),
            Self::WavePacket { omega, band, .. } => (0.5 / (omega.abs() + band.abs()).max(1e-12)).min(0.5),
            Self::Sum { terms } => terms.iter().map(Self::quadrature_step).fold(0.5, f64::min),
            _ => 0.5,
        }
    }
}

/// `∫_a^b (1+t)^{-p} dt`.
fn power_integral(p: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if (p - 1.0).abs() < 1e-14 {
        ((1.0 + b) / (1.0 + a)).ln()
    } else {
        ((1.0 + b).powf(1.0 - p) - (1.0 + a).powf(1.0 - p)) / (1.0 - p)
    }
}
