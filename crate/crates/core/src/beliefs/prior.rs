use serde::{Deserialize, Serialize};

use super::tabulated::PiecewiseLinear;
use crate::error::{config, Result};
use crate::game::StateBounds;

/// Prior density of the hidden state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorDensity {
    Uniform,
    /// Piecewise-linear `(x, g(x))` table whose first and last abscissae are
    /// the state bounds; normalized on load.
    Tabulated { points: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorModel {
    density: PriorDensity,
    bounds: StateBounds,
    table: Option<PiecewiseLinear>,
    knots: Vec<f64>,
}

impl PriorModel {
    pub fn new(density: PriorDensity, bounds: StateBounds) -> Result<Self> {
        let (table, knots) = match &density {
            PriorDensity::Uniform => (None, vec![bounds.lo, bounds.hi]),
            PriorDensity::Tabulated { points } => {
                let pl = PiecewiseLinear::new(points, "prior density")?;
                let k = pl.knots();
                let tol = 1e-9 * bounds.width().max(1.0);
                if (k[0] - bounds.lo).abs() > tol || (k[k.len() - 1] - bounds.hi).abs() > tol {
                    return Err(config(format!(
                        "prior table must span the state bounds [{}, {}]",
                        bounds.lo, bounds.hi
                    )));
                }
                if pl.values().iter().any(|&g| g <= 0.0) {
                    return Err(config("prior density must be strictly positive on its support"));
                }
                let knots = k.to_vec();
                (Some(pl), knots)
            }
        };
        Ok(Self { density, bounds, table, knots })
    }

    pub fn uniform(bounds: StateBounds) -> Self {
        Self::new(PriorDensity::Uniform, bounds).expect("uniform prior is always valid")
    }

    pub fn density(&self) -> &PriorDensity {
        &self.density
    }

    pub fn bounds(&self) -> StateBounds {
        self.bounds
    }

    pub fn is_uniform(&self) -> bool {
        self.table.is_none()
    }

    pub(crate) fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.bounds.lo || x > self.bounds.hi {
            return 0.0;
        }
        match &self.table {
            None => 1.0 / self.bounds.width(),
            Some(pl) => pl.pdf(x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match &self.table {
            None => ((x - self.bounds.lo) / self.bounds.width()).clamp(0.0, 1.0),
            Some(pl) => pl.cdf(x),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match &self.table {
            None => self.bounds.lo + p.clamp(0.0, 1.0) * self.bounds.width(),
            Some(pl) => pl.quantile(p),
        }
    }

    /// Smallest and largest prior density on `[a, b]` (clipped to the support).
    pub fn extrema(&self, a: f64, b: f64) -> (f64, f64) {
        let a = a.max(self.bounds.lo);
        let b = b.min(self.bounds.hi);
        match &self.table {
            None => {
                let g = 1.0 / self.bounds.width();
                (g, g)
            }
            Some(pl) => pl.extrema(a, b),
        }
    }
}

impl Serialize for PriorModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.density.serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tent() -> PriorModel {
        let b = StateBounds::new(-1.0, 1.0).unwrap();
        PriorModel::new(PriorDensity::Tabulated { points: vec![(-1.0, 1.0), (0.0, 3.0), (1.0, 1.0)] }, b).unwrap()
    }

    #[test]
    fn tent_normalizes() {
        let p = tent();
        assert!((p.pdf(0.0) - 0.75).abs() < 1e-15);
        assert!((p.cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((p.cdf(1.0) - 1.0).abs() < 1e-15);
        assert_eq!(p.extrema(-0.5, 0.5), (0.5, 0.75));
    }

    #[test]
    fn table_must_match_bounds_and_be_positive() {
        let b = StateBounds::new(-1.0, 1.0).unwrap();
        let short = PriorDensity::Tabulated { points: vec![(-1.0, 1.0), (0.5, 1.0)] };
        assert!(PriorModel::new(short, b).is_err());
        let zero = PriorDensity::Tabulated { points: vec![(-1.0, 0.0), (1.0, 1.0)] };
        assert!(PriorModel::new(zero, b).is_err());
    }
}
