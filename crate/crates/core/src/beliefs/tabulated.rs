use crate::error::{config, Result};

/// Normalized piecewise-linear density on `[xs[0], xs[last]]`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// `cum[k]` is the mass on `[xs[0], xs[k]]`.
    cum: Vec<f64>,
}

impl PiecewiseLinear {
    pub(crate) fn new(points: &[(f64, f64)], what: &str) -> Result<Self> {
        if points.len() < 2 {
            return Err(config(format!("{what}: tabulated density needs at least two points")));
        }
        let mut xs = Vec::with_capacity(points.len());
        let mut ys = Vec::with_capacity(points.len());
        for &(x, y) in points {
            if !(x.is_finite() && y.is_finite()) || y < 0.0 {
                return Err(config(format!("{what}: point ({x}, {y}) must be finite with nonnegative density")));
            }
            if let Some(&prev) = xs.last() {
                if x <= prev {
                    return Err(config(format!("{what}: abscissae must be strictly increasing")));
                }
            }
            xs.push(x);
            ys.push(y);
        }
        let total: f64 = xs.windows(2).zip(ys.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum();
        if total <= 0.0 {
            return Err(config(format!("{what}: tabulated density has zero mass")));
        }
        for y in &mut ys {
            *y /= total;
        }
        let mut cum = vec![0.0; xs.len()];
        for k in 1..xs.len() {
            cum[k] = cum[k - 1] + 0.5 * (xs[k] - xs[k - 1]) * (ys[k - 1] + ys[k]);
        }
        // Pin the last entry so the cdf reaches 1 exactly.
        let last = cum.len() - 1;
        cum[last] = 1.0;
        Ok(Self { xs, ys, cum })
    }

    pub(crate) fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.ys
    }

    fn segment(&self, x: f64) -> usize {
        // Index k with xs[k] <= x < xs[k+1], clamped to the last segment.
        let k = self.xs.partition_point(|&v| v <= x);
        k.saturating_sub(1).min(self.xs.len() - 2)
    }

    pub(crate) fn pdf(&self, x: f64) -> f64 {
        let (a, b) = (self.xs[0], self.xs[self.xs.len() - 1]);
        if x < a || x > b {
            return 0.0;
        }
        let k = self.segment(x);
        let t = (x - self.xs[k]) / (self.xs[k + 1] - self.xs[k]);
        self.ys[k] + t * (self.ys[k + 1] - self.ys[k])
    }

    pub(crate) fn cdf(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= self.xs[self.xs.len() - 1] {
            return 1.0;
        }
        let k = self.segment(x);
        let dx = x - self.xs[k];
        let slope = (self.ys[k + 1] - self.ys[k]) / (self.xs[k + 1] - self.xs[k]);
        (self.cum[k] + dx * (self.ys[k] + 0.5 * slope * dx)).min(1.0)
    }

    pub(crate) fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let n = self.xs.len();
        // First segment whose right cumulative mass reaches p.
        let k = (self.cum.partition_point(|&c| c < p)).clamp(1, n - 1) - 1;
        let r = p - self.cum[k];
        let y0 = self.ys[k];
        let width = self.xs[k + 1] - self.xs[k];
        let slope = (self.ys[k + 1] - y0) / width;
        // Solve y0*t + slope*t^2/2 = r in the cancellation-free form.
        let disc = (y0 * y0 + 2.0 * slope * r).max(0.0);
        let denom = y0 + disc.sqrt();
        let t = if denom > 0.0 { 2.0 * r / denom } else { 0.0 };
        self.xs[k] + t.clamp(0.0, width)
    }

    /// Smallest and largest density value on `[a, b]`.
    pub(crate) fn extrema(&self, a: f64, b: f64) -> (f64, f64) {
        let mut lo = self.pdf(a).min(self.pdf(b));
        let mut hi = self.pdf(a).max(self.pdf(b));
        for (&x, &y) in self.xs.iter().zip(&self.ys) {
            if x > a && x < b {
                lo = lo.min(y);
                hi = hi.max(y);
            }
        }
        (lo, hi)
    }
}
