//! Composite Simpson rules with an embedded half-resolution rule.
//!
//! Every rule is built on pieces split at the kinks of the integrand, so the
//! Simpson error expansion holds on each piece and the difference between the
//! fine and the embedded coarse estimate is a usable error indicator.

use crate::error::{numeric, Result};

/// Nodes with fine weights and the embedded coarse weights (zero on odd nodes).
#[derive(Debug, Clone)]
pub(crate) struct Rule {
    pub nodes: Vec<f64>,
    pub fine: Vec<f64>,
    pub coarse: Vec<f64>,
}

/// Builds a rule on `[a, b]` split at the given interior breakpoints.
/// `coarse_pairs` Simpson panel pairs of the coarse rule are spread over the
/// pieces by length, with at least one pair per piece.
pub(crate) fn simpson_rule(a: f64, b: f64, breaks: &mut Vec<f64>, coarse_pairs: usize) -> Rule {
    let len = b - a;
    let min_gap = 1e-12 * len.abs().max(1e-300);
    breaks.retain(|&x| x > a + min_gap && x < b - min_gap);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|x, y| (*x - *y).abs() <= min_gap);

    let mut edges = Vec::with_capacity(breaks.len() + 2);
    edges.push(a);
    edges.extend_from_slice(breaks);
    edges.push(b);

    let mut nodes = vec![a];
    let mut fine = vec![0.0];
    let mut coarse = vec![0.0];
    for piece in edges.windows(2) {
        let (p0, p1) = (piece[0], piece[1]);
        let share = ((p1 - p0) / len * coarse_pairs as f64).ceil() as usize;
        let pairs = share.max(1);
        let intervals = 4 * pairs;
        let h = (p1 - p0) / intervals as f64;
        let base = nodes.len() - 1;
        for k in 1..=intervals {
            nodes.push(if k == intervals { p1 } else { p0 + k as f64 * h });
            fine.push(0.0);
            coarse.push(0.0);
        }
        for k in 0..=intervals {
            let wf = if k == 0 || k == intervals {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            fine[base + k] += wf * h / 3.0;
            if k % 2 == 0 {
                let j = k / 2;
                let wc = if j == 0 || j == 2 * pairs {
                    1.0
                } else if j % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                coarse[base + k] += wc * 2.0 * h / 3.0;
            }
        }
    }
    Rule { nodes, fine, coarse }
}

/// A normalized probability rule: both weight vectors sum to one.
#[derive(Debug, Clone)]
pub(crate) struct WeightedRule {
    pub nodes: Vec<f64>,
    fine: Vec<f64>,
    coarse: Vec<f64>,
    tolerance: Option<f64>,
    location: f64,
}

impl WeightedRule {
    /// Point mass at `x`.
    pub(crate) fn point(x: f64) -> Self {
        Self { nodes: vec![x], fine: vec![1.0], coarse: vec![1.0], tolerance: None, location: x }
    }

    /// Reweights `rule` by a nonnegative density and normalizes each weight set.
    /// Returns the fine and coarse estimates of the density's total mass alongside.
    pub(crate) fn from_density(
        rule: Rule,
        density: impl Fn(f64) -> f64,
        tolerance: Option<f64>,
        location: f64,
    ) -> Result<(Self, f64, f64)> {
        let Rule { nodes, mut fine, mut coarse } = rule;
        let mut mass_f = 0.0;
        let mut mass_c = 0.0;
        for ((x, wf), wc) in nodes.iter().zip(&mut fine).zip(&mut coarse) {
            let d = density(*x);
            *wf *= d;
            *wc *= d;
            mass_f += *wf;
            mass_c += *wc;
        }
        if !(mass_f > 0.0 && mass_c > 0.0) {
            return Err(numeric(format!("posterior has no mass at quadrature nodes near {location}")));
        }
        fine.iter_mut().for_each(|w| *w /= mass_f);
        coarse.iter_mut().for_each(|w| *w /= mass_c);
        Ok((Self { nodes, fine, coarse, tolerance, location }, mass_f, mass_c))
    }

    /// Richardson-extrapolated expectation of `f`, with the embedded error check.
    pub(crate) fn expect(&self, mut f: impl FnMut(f64) -> f64) -> Result<f64> {
        let mut ef = 0.0;
        let mut ec = 0.0;
        for ((&x, &wf), &wc) in self.nodes.iter().zip(&self.fine).zip(&self.coarse) {
            let v = f(x);
            ef += wf * v;
            ec += wc * v;
        }
        self.finish(ef, ec)
    }

    /// Componentwise version of [`expect`](Self::expect) for vector-valued integrands.
    pub(crate) fn expect_vec(&self, dim: usize, mut f: impl FnMut(f64, &mut [f64])) -> Result<Vec<f64>> {
        let mut ef = vec![0.0; dim];
        let mut ec = vec![0.0; dim];
        let mut buf = vec![0.0; dim];
        for ((&x, &wf), &wc) in self.nodes.iter().zip(&self.fine).zip(&self.coarse) {
            f(x, &mut buf);
            for k in 0..dim {
                ef[k] += wf * buf[k];
                ec[k] += wc * buf[k];
            }
        }
        ef.iter().zip(&ec).map(|(&a, &b)| self.finish(a, b)).collect()
    }

    fn finish(&self, fine: f64, coarse: f64) -> Result<f64> {
        let diff = fine - coarse;
        if let Some(tol) = self.tolerance {
            if diff.abs() > tol {
                return Err(numeric(format!(
                    "quadrature node-doubling disagreement {:.3e} exceeds tolerance {tol:.1e} at signal {}",
                    diff.abs(),
                    self.location
                )));
            }
        }
        Ok(fine + diff / 15.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_cubics_exactly_on_both_levels() {
        let mut breaks = vec![0.3, 0.7, 2.0, -1.0];
        let rule = simpson_rule(0.0, 1.0, &mut breaks, 10);
        let cubic = |x: f64| 1.0 + x - 2.0 * x * x + 4.0 * x * x * x;
        let exact = 1.0 + 0.5 - 2.0 / 3.0 + 1.0;
        let f: f64 = rule.nodes.iter().zip(&rule.fine).map(|(x, w)| w * cubic(*x)).sum();
        let c: f64 = rule.nodes.iter().zip(&rule.coarse).map(|(x, w)| w * cubic(*x)).sum();
        assert!((f - exact).abs() < 1e-14 && (c - exact).abs() < 1e-14);
        assert!(rule.nodes.contains(&0.3) && rule.nodes.contains(&0.7));
    }

    #[test]
    fn kinked_integrand_exact_when_split() {
        let mut breaks = vec![0.25];
        let rule = simpson_rule(0.0, 1.0, &mut breaks, 5);
        let kink = |x: f64| (x - 0.25).abs();
        let exact = 0.25 * 0.25 / 2.0 + 0.75 * 0.75 / 2.0;
        let f: f64 = rule.nodes.iter().zip(&rule.fine).map(|(x, w)| w * kink(*x)).sum();
        assert!((f - exact).abs() < 1e-15);
    }

    #[test]
    fn richardson_check_flags_rough_integrands() {
        let rule = simpson_rule(0.0, 1.0, &mut vec![], 2);
        let (w, _, _) = WeightedRule::from_density(rule, |_| 1.0, Some(1e-6), 0.5).unwrap();
        assert!(w.expect(|x| (40.0 * x).sin()).is_err());
        assert!((w.expect(|x| x * x).unwrap() - 1.0 / 3.0).abs() < 1e-14);
    }
}
