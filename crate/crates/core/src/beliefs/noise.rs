use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::tabulated::PiecewiseLinear;
use crate::error::{config, Result};

/// Standardized noise density on `[-1/2, 1/2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseDensity {
    Uniform,
    /// `f(u) = 2 - 4|u|`.
    Triangular,
    /// `f(u) = 1 + cos(2πu)`.
    RaisedCosine,
    /// Piecewise-linear `(u, f(u))` table spanning exactly `[-1/2, 1/2]`;
    /// normalized on load.
    Tabulated { points: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Uniform,
    Triangular,
    RaisedCosine,
    Tabulated(PiecewiseLinear),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseSpec {
    epsilon: f64,
    density: NoiseDensity,
}

/// Signal noise `x_i = x + ε η_i` with `η_i` drawn from a density on `[-1/2, 1/2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NoiseSpec")]
pub struct NoiseModel {
    epsilon: f64,
    density: NoiseDensity,
    #[serde(skip)]
    shape: Shape,
    #[serde(skip)]
    knots: Vec<f64>,
}

impl TryFrom<NoiseSpec> for NoiseModel {
    type Error = crate::Error;
    fn try_from(spec: NoiseSpec) -> Result<Self> {
        Self::new(spec.epsilon, spec.density)
    }
}

const EDGE_TOL: f64 = 1e-12;

impl NoiseModel {
    pub fn new(epsilon: f64, density: NoiseDensity) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(config(format!("noise scale must be positive and finite, got {epsilon}")));
        }
        let (shape, knots) = match &density {
            NoiseDensity::Uniform => (Shape::Uniform, vec![-0.5, 0.5]),
            NoiseDensity::Triangular => (Shape::Triangular, vec![-0.5, 0.0, 0.5]),
            NoiseDensity::RaisedCosine => (Shape::RaisedCosine, vec![-0.5, 0.5]),
            NoiseDensity::Tabulated { points } => {
                let pl = PiecewiseLinear::new(points, "noise density")?;
                let k = pl.knots();
                if (k[0] + 0.5).abs() > EDGE_TOL || (k[k.len() - 1] - 0.5).abs() > EDGE_TOL {
                    return Err(config("noise density table must span exactly [-0.5, 0.5]"));
                }
                let knots = k.to_vec();
                (Shape::Tabulated(pl), knots)
            }
        };
        Ok(Self { epsilon, density, shape, knots })
    }

    pub fn uniform(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, NoiseDensity::Uniform)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn density(&self) -> &NoiseDensity {
        &self.density
    }

    /// Same density at a different scale.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(epsilon, self.density.clone())
    }

    /// Points of `[-1/2, 1/2]` where the standardized density may fail to be
    /// smooth, endpoints included.
    pub(crate) fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Standardized density `f(u)`.
    pub fn pdf(&self, u: f64) -> f64 {
        if !(-0.5..=0.5).contains(&u) {
            return 0.0;
        }
        match &self.shape {
            Shape::Uniform => 1.0,
            Shape::Triangular => 2.0 - 4.0 * u.abs(),
            Shape::RaisedCosine => 1.0 + (2.0 * PI * u).cos(),
            Shape::Tabulated(pl) => pl.pdf(u),
        }
    }

    /// Standardized cdf `F(u)`.
    pub fn cdf(&self, u: f64) -> f64 {
        if u <= -0.5 {
            return 0.0;
        }
        if u >= 0.5 {
            return 1.0;
        }
        match &self.shape {
            Shape::Uniform => u + 0.5,
            Shape::Triangular => {
                if u <= 0.0 {
                    2.0 * (u + 0.5) * (u + 0.5)
                } else {
                    1.0 - 2.0 * (0.5 - u) * (0.5 - u)
                }
            }
            Shape::RaisedCosine => (u + 0.5 + (2.0 * PI * u).sin() / (2.0 * PI)).clamp(0.0, 1.0),
            Shape::Tabulated(pl) => pl.cdf(u),
        }
    }

    /// Standardized quantile `F^{-1}(p)`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match &self.shape {
            Shape::Uniform => p - 0.5,
            Shape::Triangular => {
                if p <= 0.5 {
                    (p / 2.0).sqrt() - 0.5
                } else {
                    0.5 - ((1.0 - p) / 2.0).sqrt()
                }
            }
            Shape::RaisedCosine => {
                let (mut lo, mut hi) = (-0.5, 0.5);
                for _ in 0..64 {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid) < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
            Shape::Tabulated(pl) => pl.quantile(p),
        }
    }

    /// Scaled density `φ(z) = f(z/ε)/ε`.
    pub fn scaled_pdf(&self, z: f64) -> f64 {
        self.pdf(z / self.epsilon) / self.epsilon
    }

    /// Scaled cdf `Φ(z) = F(z/ε)`.
    pub fn scaled_cdf(&self, z: f64) -> f64 {
        self.cdf(z / self.epsilon)
    }

    /// Probability that a player with switching point `threshold` plays 1 at state `x`.
    pub fn prob_above(&self, threshold: f64, x: f64) -> f64 {
        if threshold == f64::NEG_INFINITY {
            return 1.0;
        }
        if threshold == f64::INFINITY {
            return 0.0;
        }
        1.0 - self.cdf((threshold - x) / self.epsilon)
    }
}
