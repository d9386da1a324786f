//! Posterior beliefs of a player who has seen a signal: over the hidden
//! state, over opponents' signals and over how many opponents play 1.

mod noise;
mod prior;
mod quadrature;
mod tabulated;

use serde::{Deserialize, Serialize};

pub use noise::{NoiseDensity, NoiseModel};
pub use prior::{PriorDensity, PriorModel};
pub(crate) use quadrature::WeightedRule;

use crate::error::{config, domain, Result};
use crate::game::StateBounds;
use quadrature::simpson_rule;

/// Node budget and error control for posterior integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Nodes of the fine composite Simpson rule; `nodes - 1` must be a multiple of 4
    /// so the half-resolution rule is embedded.
    pub nodes: usize,
    /// Fail when the fine and embedded coarse estimates disagree by more than `tolerance`.
    pub check: bool,
    pub tolerance: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { nodes: 201, check: true, tolerance: 1e-6 }
    }
}

impl QuadratureConfig {
    fn validate(&self) -> Result<()> {
        if self.nodes < 9 || (self.nodes - 1) % 4 != 0 {
            return Err(config(format!("quadrature nodes must be 4k+1 with k >= 2, got {}", self.nodes)));
        }
        if !(self.tolerance > 0.0) {
            return Err(config("quadrature tolerance must be positive"));
        }
        Ok(())
    }

    fn coarse_pairs(&self) -> usize {
        (self.nodes - 1) / 4
    }
}

/// Probability of each number of opponents playing 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountBelief {
    pub probabilities: Vec<f64>,
}

impl CountBelief {
    /// `P(count <= n)`.
    pub fn cdf(&self, n: usize) -> f64 {
        self.probabilities[..=n.min(self.probabilities.len() - 1)].iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

/// Worst as-if-uniform approximation envelope over a signal grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriorGap {
    /// `max (g⁺/g⁻ - 1)` where `g⁺`, `g⁻` bound the prior over a signal's state window.
    pub envelope: f64,
    /// Signal attaining the maximum.
    pub signal: f64,
}

/// Noise, prior and the numerical settings used to integrate against them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InformationStructure {
    noise: NoiseModel,
    prior: PriorModel,
    quadrature: QuadratureConfig,
}

impl InformationStructure {
    pub fn new(noise: NoiseModel, prior: PriorModel, quadrature: QuadratureConfig) -> Result<Self> {
        quadrature.validate()?;
        Ok(Self { noise, prior, quadrature })
    }

    /// Uniform noise and uniform prior with default quadrature.
    pub fn uniform(epsilon: f64, bounds: StateBounds) -> Result<Self> {
        Self::new(NoiseModel::uniform(epsilon)?, PriorModel::uniform(bounds), QuadratureConfig::default())
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn prior(&self) -> &PriorModel {
        &self.prior
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        self.quadrature
    }

    pub fn bounds(&self) -> StateBounds {
        self.prior.bounds()
    }

    pub fn epsilon(&self) -> f64 {
        self.noise.epsilon()
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.noise.with_epsilon(epsilon)?, self.prior.clone(), self.quadrature)
    }

    pub fn with_quadrature(&self, quadrature: QuadratureConfig) -> Result<Self> {
        Self::new(self.noise.clone(), self.prior.clone(), quadrature)
    }

    /// Range of signals that can occur: `[X_lo - ε/2, X_hi + ε/2]`.
    pub fn signal_envelope(&self) -> (f64, f64) {
        let b = self.bounds();
        let h = self.epsilon() / 2.0;
        (b.lo - h, b.hi + h)
    }

    /// State window `[z - ε/2, z + ε/2] ∩ [X_lo, X_hi]` consistent with signal `z`.
    pub fn state_window(&self, signal: f64) -> Result<(f64, f64)> {
        let (lo_env, hi_env) = self.signal_envelope();
        let slack = 1e-12 * (hi_env - lo_env);
        if !signal.is_finite() || signal < lo_env - slack || signal > hi_env + slack {
            return Err(domain(format!("signal {signal} outside feasible range [{lo_env}, {hi_env}]")));
        }
        let b = self.bounds();
        let h = self.epsilon() / 2.0;
        let lo = (signal - h).max(b.lo);
        let hi = (signal + h).min(b.hi);
        Ok((lo, hi.max(lo)))
    }

    /// Posterior quadrature rule for signal `z`, additionally split at `kinks`
    /// (state values where the caller's integrand is not smooth).
    pub(crate) fn posterior(&self, signal: f64, kinks: &mut Vec<f64>) -> Result<WeightedRule> {
        Ok(self.posterior_with_mass(signal, kinks)?.0)
    }

    fn posterior_with_mass(&self, signal: f64, kinks: &mut Vec<f64>) -> Result<(WeightedRule, f64)> {
        let (lo, hi) = self.state_window(signal)?;
        if hi - lo <= 1e-13 * self.epsilon() {
            let x = 0.5 * (lo + hi);
            let mass = self.prior.pdf(x);
            return Ok((WeightedRule::point(x), mass));
        }
        let eps = self.epsilon();
        kinks.extend(self.noise.knots().iter().map(|k| signal - eps * k));
        kinks.extend_from_slice(self.prior.knots());
        let rule = simpson_rule(lo, hi, kinks, self.quadrature.coarse_pairs());
        let tol = self.quadrature.check.then_some(self.quadrature.tolerance);
        let (w, mass_f, mass_c) = WeightedRule::from_density(
            rule,
            |x| self.prior.pdf(x) * self.noise.pdf(((signal - x) / eps).clamp(-0.5, 0.5)) / eps,
            tol,
            signal,
        )?;
        Ok((w, mass_f + (mass_f - mass_c) / 15.0))
    }

    /// Normalized posterior density over the state given signal `z`.
    pub fn posterior_state_density(&self, signal: f64) -> Result<PosteriorDensity<'_>> {
        let (rule, normalizer) = self.posterior_with_mass(signal, &mut Vec::new())?;
        let support = self.state_window(signal)?;
        let mean = signal + rule.expect(|x| x - signal)?;
        Ok(PosteriorDensity { info: self, signal, support, normalizer, mean })
    }

    /// Belief over the number of opponents (out of `n_players - 1`) whose
    /// signal is at least `threshold`.
    pub fn opponent_count_belief(&self, n_players: usize, threshold: f64, signal: f64) -> Result<CountBelief> {
        if n_players == 0 {
            return Err(domain("a game needs at least one player"));
        }
        let opponents = n_players - 1;
        let mut kinks = self.opponent_kinks(std::iter::once(threshold));
        let rule = self.posterior(signal, &mut kinks)?;
        let mut probs = rule.expect_vec(n_players, |x, out| {
            binomial_pmf(opponents, self.noise.prob_above(threshold, x), out)
        })?;
        probs.iter_mut().for_each(|p| *p = p.clamp(0.0, 1.0));
        Ok(CountBelief { probabilities: probs })
    }

    /// Count belief against opponents with individual switching points (±∞ allowed).
    pub fn profile_count_belief(&self, opponent_thresholds: &[f64], signal: f64) -> Result<CountBelief> {
        let mut kinks = self.opponent_kinks(opponent_thresholds.iter().copied());
        let rule = self.posterior(signal, &mut kinks)?;
        let dim = opponent_thresholds.len() + 1;
        let mut p = vec![0.0; opponent_thresholds.len()];
        let mut probs = rule.expect_vec(dim, |x, out| {
            for (pj, &y) in p.iter_mut().zip(opponent_thresholds) {
                *pj = self.noise.prob_above(y, x);
            }
            poisson_binomial(&p, out)
        })?;
        probs.iter_mut().for_each(|p| *p = p.clamp(0.0, 1.0));
        Ok(CountBelief { probabilities: probs })
    }

    /// States at which some opponent's play probability has a kink.
    pub(crate) fn opponent_kinks(&self, thresholds: impl Iterator<Item = f64>) -> Vec<f64> {
        let eps = self.epsilon();
        let knots = self.noise.knots();
        let mut out = Vec::new();
        for y in thresholds.filter(|y| y.is_finite()) {
            out.extend(knots.iter().map(|k| y - eps * k));
        }
        out
    }

    /// As-if-uniform diagnostic: `max (g⁺/g⁻ - 1)` over the state windows of `signals`.
    pub fn uniform_prior_gap(&self, signals: &[f64]) -> PriorGap {
        let b = self.bounds();
        let h = self.epsilon() / 2.0;
        let mut best = PriorGap { envelope: 0.0, signal: signals.first().copied().unwrap_or(f64::NAN) };
        for &z in signals {
            let lo = (z - h).max(b.lo);
            let hi = (z + h).min(b.hi);
            if hi < lo {
                continue;
            }
            let (gmin, gmax) = self.prior.extrema(lo, hi);
            let env = gmax / gmin - 1.0;
            if env > best.envelope {
                best = PriorGap { envelope: env, signal: z };
            }
        }
        best
    }
}

/// Posterior density over the state for a fixed signal.
#[derive(Debug, Clone)]
pub struct PosteriorDensity<'a> {
    info: &'a InformationStructure,
    pub signal: f64,
    pub support: (f64, f64),
    /// `∫ g(x) φ(z - x) dx` over the support.
    pub normalizer: f64,
    pub mean: f64,
}

impl PosteriorDensity<'_> {
    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.support.0 || x > self.support.1 {
            return 0.0;
        }
        self.info.prior.pdf(x) * self.info.noise.scaled_pdf(self.signal - x) / self.normalizer
    }
}

/// Uniform-prior (untruncated) probability that every opponent's signal lies
/// below its entry of `opponent_signals`, given own signal `signal`.
fn untruncated_joint_cdf(noise: &NoiseModel, signal: f64, opponent_signals: &[f64]) -> f64 {
    let eps = noise.epsilon();
    let mut kinks: Vec<f64> = noise.knots().iter().map(|k| signal - eps * k).collect();
    for &zj in opponent_signals {
        kinks.extend(noise.knots().iter().map(|k| zj - eps * k));
    }
    let rule = simpson_rule(signal - eps / 2.0, signal + eps / 2.0, &mut kinks, 50);
    let density = |x: f64| noise.pdf(((signal - x) / eps).clamp(-0.5, 0.5));
    let Ok((w, _, _)) = WeightedRule::from_density(rule, density, None, signal) else {
        return f64::NAN;
    };
    w.expect(|x| opponent_signals.iter().map(|&zj| noise.scaled_cdf(zj - x)).product())
        .unwrap_or(f64::NAN)
}

/// Measured violation of translation invariance of the uniform-prior joint
/// cdf of opponents' signals. Opponent signals are `base_signal + ε·offset`.
pub fn translation_check(noise: &NoiseModel, delta: f64, base_signal: f64, opponent_offsets: &[f64]) -> f64 {
    let eps = noise.epsilon();
    let here: Vec<f64> = opponent_offsets.iter().map(|t| base_signal + eps * t).collect();
    let there: Vec<f64> = here.iter().map(|z| z + delta).collect();
    let a = untruncated_joint_cdf(noise, base_signal, &here);
    let b = untruncated_joint_cdf(noise, base_signal + delta, &there);
    (a - b).abs()
}

/// Binomial pmf of `trials` draws with success probability `p`, written into `out[0..=trials]`.
pub(crate) fn binomial_pmf(trials: usize, p: f64, out: &mut [f64]) {
    let q = 1.0 - p;
    if p <= 0.0 || q <= 0.0 {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[if p <= 0.0 { 0 } else { trials }] = 1.0;
        return;
    }
    if trials <= 30 {
        let mut coef = 1.0;
        for k in 0..=trials {
            out[k] = coef * p.powi(k as i32) * q.powi((trials - k) as i32);
            coef = coef * (trials - k) as f64 / (k + 1) as f64;
        }
    } else {
        let (lp, lq) = (p.ln(), q.ln());
        let mut ln_coef = 0.0;
        for k in 0..=trials {
            out[k] = (ln_coef + k as f64 * lp + (trials - k) as f64 * lq).exp();
            ln_coef += ((trials - k) as f64).ln() - ((k + 1) as f64).ln();
        }
    }
}

/// Distribution of the number of successes among independent trials with
/// probabilities `p`, written into `out[0..=p.len()]`.
pub(crate) fn poisson_binomial(p: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    out[0] = 1.0;
    for (j, &pj) in p.iter().enumerate() {
        let qj = 1.0 - pj;
        for n in (1..=j + 1).rev() {
            out[n] = out[n] * qj + out[n - 1] * pj;
        }
        out[0] *= qj;
    }
}
