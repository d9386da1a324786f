//! Subsidy and reward schemes that make a chosen switching point the unique
//! equilibrium.
//!
//! All closed-form designers share one rule: a threshold type facing
//! opponents who use the same threshold believes every count of opponents
//! playing 1 is equally likely, so the subsidy must cover the cost net of the
//! target state and of the externality averaged over counts.

use serde::{Deserialize, Serialize};

use crate::beliefs::InformationStructure;
use crate::error::{config, domain, Result};
use crate::game::{CoordinationGame, ExternalitySchedule};
use crate::solver::{expected_incentive, ThresholdProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Limit formula, exact as the noise vanishes (and for any noise under a uniform prior).
    ClosedForm,
    /// Indifference conditions solved against the actual noise and prior.
    ExactNumeric,
}

/// One group of players sharing a target switching point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetGroup {
    pub members: Vec<usize>,
    pub target: f64,
}

/// Player partition with strictly increasing group targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TargetGroup>", into = "Vec<TargetGroup>")]
pub struct PartitionTarget {
    groups: Vec<TargetGroup>,
    n_players: usize,
}

impl TryFrom<Vec<TargetGroup>> for PartitionTarget {
    type Error = crate::Error;
    fn try_from(groups: Vec<TargetGroup>) -> Result<Self> {
        let n = groups.iter().map(|g| g.members.len()).sum();
        Self::new(groups, n)
    }
}

impl From<PartitionTarget> for Vec<TargetGroup> {
    fn from(p: PartitionTarget) -> Self {
        p.groups
    }
}

impl PartitionTarget {
    pub fn new(groups: Vec<TargetGroup>, n_players: usize) -> Result<Self> {
        if groups.is_empty() {
            return Err(config("partition needs at least one group"));
        }
        let mut seen = vec![false; n_players];
        for (k, g) in groups.iter().enumerate() {
            if g.members.is_empty() {
                return Err(config(format!("group {k} is empty")));
            }
            if !g.target.is_finite() {
                return Err(config(format!("group {k} target must be finite")));
            }
            for &i in &g.members {
                if i >= n_players {
                    return Err(config(format!("group {k}: player {i} out of range for {n_players} players")));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(config(format!("player {i} appears in more than one group")));
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(config(format!("player {i} belongs to no group")));
        }
        if groups.windows(2).any(|w| w[1].target <= w[0].target) {
            return Err(config("group targets must be strictly increasing"));
        }
        Ok(Self { groups, n_players })
    }

    pub fn groups(&self) -> &[TargetGroup] {
        &self.groups
    }

    pub fn n_players(&self) -> usize {
        self.n_players
    }

    /// Target switching point of every player.
    pub fn profile(&self) -> ThresholdProfile {
        let mut y = vec![0.0; self.n_players];
        for g in &self.groups {
            for &i in &g.members {
                y[i] = g.target;
            }
        }
        ThresholdProfile(y)
    }

    /// Consecutive targets must be more than `eps` apart so that players in
    /// a lower group surely play 1 at a higher group's target signal.
    pub fn check_separation(&self, eps: f64) -> Result<()> {
        for (k, w) in self.groups.windows(2).enumerate() {
            if w[1].target - w[0].target <= eps {
                return Err(config(format!(
                    "targets of groups {k} and {} are {} apart; separation must exceed the noise scale {eps}",
                    k + 1,
                    w[1].target - w[0].target
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    Uniform { x: f64 },
    Groups { groups: PartitionTarget },
}

impl Target {
    pub fn profile(&self, n_players: usize) -> ThresholdProfile {
        match self {
            Target::Uniform { x } => ThresholdProfile::common(n_players, *x),
            Target::Groups { groups } => groups.profile(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsidyScheme {
    pub subsidies: Vec<f64>,
    pub target: Target,
    pub provenance: Provenance,
}

impl SubsidyScheme {
    pub fn as_slice(&self) -> &[f64] {
        &self.subsidies
    }
}

fn check_target(game: &CoordinationGame, x: f64) -> Result<()> {
    let b = game.state_bounds();
    if !(x >= b.lo && x <= b.hi) {
        return Err(domain(format!("target {x} outside state bounds [{}, {}]", b.lo, b.hi)));
    }
    Ok(())
}

fn require_counts<'a>(game: &'a CoordinationGame, i: usize) -> Result<&'a [f64]> {
    game.count_schedule(i)
        .ok_or_else(|| domain(format!("player {i} has a subset-based schedule; use the heterogeneous designer")))
}

/// `Σ_{n in range} w(n) / |range|`.
fn range_average(w: &[f64], range: std::ops::Range<usize>) -> f64 {
    let len = range.len() as f64;
    w[range].iter().sum::<f64>() / len
}

/// `s_i = c_i - x̃ - Σ_n w_i(n)/N`.
pub fn design_closed_form(game: &CoordinationGame, target: f64) -> Result<SubsidyScheme> {
    check_target(game, target)?;
    let n = game.n_players();
    let subsidies = (0..n)
        .map(|i| Ok(game.cost(i) - target - range_average(require_counts(game, i)?, 0..n)))
        .collect::<Result<_>>()?;
    Ok(SubsidyScheme { subsidies, target: Target::Uniform { x: target }, provenance: Provenance::ClosedForm })
}

/// Solves the indifference condition of every player at the target against
/// opponents switching at the target. The incentive is affine in the own
/// subsidy with unit slope, so the solution is `-u_i(p^x̃ | x̃, 0)`.
pub fn design_exact(game: &CoordinationGame, info: &InformationStructure, target: f64) -> Result<SubsidyScheme> {
    check_target(game, target)?;
    let n = game.n_players();
    let profile = ThresholdProfile::common(n, target);
    let subsidies = (0..n)
        .map(|i| expected_incentive(game, info, &profile, i, target, 0.0).map(|u| -u))
        .collect::<Result<_>>()?;
    Ok(SubsidyScheme { subsidies, target: Target::Uniform { x: target }, provenance: Provenance::ExactNumeric })
}

/// Group-specific targets. A group-`k` player at its target expects every
/// lower-group player to play 1 and every higher-group player to play 0, so
/// only the counts `N_1+..+N_{k-1} ..= N_1+..+N_k - 1` are equally likely.
pub fn design_asymmetric(
    game: &CoordinationGame,
    info: &InformationStructure,
    partition: &PartitionTarget,
) -> Result<SubsidyScheme> {
    if partition.n_players() != game.n_players() {
        return Err(config(format!(
            "partition covers {} players, game has {}",
            partition.n_players(),
            game.n_players()
        )));
    }
    partition.check_separation(info.epsilon())?;
    let mut subsidies = vec![0.0; game.n_players()];
    let mut offset = 0;
    for g in partition.groups() {
        check_target(game, g.target)?;
        let size = g.members.len();
        for &i in &g.members {
            let w = require_counts(game, i)?;
            subsidies[i] = game.cost(i) - g.target - range_average(w, offset..offset + size);
        }
        offset += size;
    }
    Ok(SubsidyScheme {
        subsidies,
        target: Target::Groups { groups: partition.clone() },
        provenance: Provenance::ClosedForm,
    })
}

/// Subset-dependent externalities enter through their class averages
/// `w_i^n` over opponent sets of each size.
pub fn design_heterogeneous(game: &CoordinationGame, target: f64) -> Result<SubsidyScheme> {
    check_target(game, target)?;
    let n = game.n_players();
    let subsidies = (0..n)
        .map(|i| {
            let classes: Vec<f64> = (0..n).map(|k| game.class_average(i, k)).collect();
            game.cost(i) - target - range_average(&classes, 0..n)
        })
        .collect();
    Ok(SubsidyScheme { subsidies, target: Target::Uniform { x: target }, provenance: Provenance::ClosedForm })
}

/// Success rewards in a team-production game.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrincipalAgentDesign {
    pub target: f64,
    /// `q̄_i = Σ_n (q(n+1) - q(n)) / N`, per player.
    pub q_bar: Vec<f64>,
    /// `ṽ_i = (c_i - x̃) / q̄_i`.
    pub rewards: Vec<f64>,
    /// Set where the reward is negative, i.e. a tax on success.
    pub tax_on_success: Vec<bool>,
}

pub fn design_principal_agent(game: &CoordinationGame, target: f64) -> Result<PrincipalAgentDesign> {
    check_target(game, target)?;
    let n = game.n_players();
    let mut q_bar = Vec::with_capacity(n);
    let mut rewards = Vec::with_capacity(n);
    for i in 0..n {
        let ExternalitySchedule::ProductionDelta { q, .. } = &game.player(i).schedule else {
            return Err(domain(format!("player {i} has no production schedule")));
        };
        let qb = q.windows(2).map(|p| p[1] - p[0]).sum::<f64>() / n as f64;
        if !(qb > 0.0) {
            return Err(domain(format!("player {i}: average marginal success probability must be positive")));
        }
        q_bar.push(qb);
        rewards.push((game.cost(i) - target) / qb);
    }
    let tax_on_success = rewards.iter().map(|&v| v < 0.0).collect();
    Ok(PrincipalAgentDesign { target, q_bar, rewards, tax_on_success })
}

/// Regime-change subsidies implementing switching point 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeChangeDesign {
    pub scheme: SubsidyScheme,
    /// `K_I = #{n in 0..N-1 : n >= I - 1}`: opponent counts at which the regime falls.
    pub success_counts: Vec<usize>,
    /// `K_I / N`, the benefit share that enters the subsidy.
    pub benefit_share: Vec<f64>,
    /// `n*/N` with `N - n*` the smallest integer above `I`; reported for comparison.
    pub alternative_share: Vec<f64>,
    /// `c_i - (n*/N) b_i`.
    pub alternative_subsidies: Vec<f64>,
}

pub fn design_regime_change(game: &CoordinationGame) -> Result<RegimeChangeDesign> {
    let n = game.n_players();
    let mut success_counts = Vec::with_capacity(n);
    let mut benefit_share = Vec::with_capacity(n);
    let mut alternative_share = Vec::with_capacity(n);
    let mut alternative_subsidies = Vec::with_capacity(n);
    for i in 0..n {
        let ExternalitySchedule::Indicator { benefit, threshold } = game.player(i).schedule else {
            return Err(domain(format!("player {i} has no regime-change schedule")));
        };
        let k = (0..n).filter(|&m| m as f64 >= threshold - 1.0).count();
        let smallest_above = threshold.floor() as usize + 1;
        let n_star = n.saturating_sub(smallest_above);
        success_counts.push(k);
        benefit_share.push(k as f64 / n as f64);
        alternative_share.push(n_star as f64 / n as f64);
        alternative_subsidies.push(game.cost(i) - n_star as f64 / n as f64 * benefit);
    }
    let scheme = design_closed_form(game, 0.0)?;
    Ok(RegimeChangeDesign { scheme, success_counts, benefit_share, alternative_share, alternative_subsidies })
}

/// Smallest subsidy making all-1 the outcome at every state where it is efficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetricOptimum {
    /// `s* = w(N-1) - Σ_n w(n)/N`.
    pub subsidy: f64,
    /// `x̲ = c - w(N-1)`: all-1 is efficient exactly above it.
    pub efficiency_threshold: f64,
}

pub fn symmetric_optimal(game: &CoordinationGame) -> Result<SymmetricOptimum> {
    if !game.is_symmetric() {
        return Err(domain("players are not identical"));
    }
    let w = require_counts(game, 0)?;
    let n = game.n_players();
    let w_all = w[n - 1];
    Ok(SymmetricOptimum { subsidy: w_all - range_average(w, 0..n), efficiency_threshold: game.cost(0) - w_all })
}

/// States at which an oversized subsidy makes players coordinate on an inefficient all-1 outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FailureRegion {
    /// `x̂ = x̲ - (ŝ - s*)`: the switching point the subsidy induces.
    pub induced_threshold: f64,
    pub efficiency_threshold: f64,
    /// Open interval `(x̂, x̲ - ε/2)`.
    pub lower: f64,
    pub upper: f64,
}

impl FailureRegion {
    pub fn is_empty(&self) -> bool {
        self.lower >= self.upper
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lower && x < self.upper
    }
}

pub fn analyze_overshoot(game: &CoordinationGame, subsidy: f64, eps: f64) -> Result<FailureRegion> {
    let opt = symmetric_optimal(game)?;
    let induced = opt.efficiency_threshold - (subsidy - opt.subsidy);
    Ok(FailureRegion {
        induced_threshold: induced,
        efficiency_threshold: opt.efficiency_threshold,
        lower: induced,
        upper: opt.efficiency_threshold - eps / 2.0,
    })
}
