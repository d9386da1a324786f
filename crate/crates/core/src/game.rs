//! The complete-information game family: players, payoffs and incentives.
//!
//! Player `i` earns `c_i` from action 0 and `x + w_i(a_-i)` from action 1,
//! where `x` is the hidden state and `w_i` the externality the opponents'
//! actions impose on `i`. Every schedule variant is lowered at construction
//! to either a count table `w_i(0..N-1)` or a subset table indexed by the
//! compressed opponent mask, so the solver and designers share one
//! representation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};

/// Largest game accepted with subset-dependent externalities.
pub const MAX_SUBSET_PLAYERS: usize = 16;

/// How opponents' actions feed into a player's payoff from action 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExternalitySchedule {
    /// `values[n]` is the externality when `n` opponents play 1.
    CountBased { values: Vec<f64> },
    /// Keyed by the bitmask of opponents playing 1 (bit `j` = player `j`).
    SubsetBased {
        #[serde(with = "mask_keys")]
        weights: BTreeMap<u32, f64>,
    },
    /// Regime change: `benefit` accrues once the total number of players
    /// playing 1 (own action included) reaches `threshold`.
    Indicator { benefit: f64, threshold: f64 },
    /// Team production: `q[n]` is the success probability when `n` agents
    /// work, and `reward` is paid on success.
    ProductionDelta { q: Vec<f64>, reward: f64 },
}

/// Mask-keyed maps as JSON objects with decimal string keys. Needed because
/// the tagged enum buffers its content and then cannot parse integer keys.
mod mask_keys {
    use std::collections::BTreeMap;

    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<u32, f64>, s: S) -> Result<S::Ok, S::Error> {
        map.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<String, f64>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u32, f64>, D::Error> {
        BTreeMap::<String, f64>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| {
                k.trim().parse::<u32>().map(|m| (m, v)).map_err(|_| D::Error::custom(format!("invalid opponent mask {k:?}")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Externality {
    Count(Vec<f64>),
    /// Indexed by compressed mask: bit `k` is the `k`-th opponent in
    /// increasing player order with the owner skipped.
    Subset(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Player {
    pub cost: f64,
    pub schedule: ExternalitySchedule,
    #[serde(skip)]
    lowered: Externality,
}

impl Player {
    pub(crate) fn externality(&self) -> &Externality {
        &self.lowered
    }
}

/// Closed support `[lo, hi]` of the prior over the hidden state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateBounds {
    pub lo: f64,
    pub hi: f64,
}

impl StateBounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(config(format!("state bounds must satisfy lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Strict-dominance boundaries of one player in the complete-information game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominanceBounds {
    /// `c_i - w_i(all opponents)`: below it action 0 is strictly dominant.
    pub x_lower: f64,
    /// `c_i - w_i(no opponent)`: above it action 1 is strictly dominant.
    pub x_upper: f64,
}

impl DominanceBounds {
    /// The same boundaries on the signal axis for subsidy `s` and noise scale `eps`.
    pub fn in_signal_space(&self, subsidy: f64, eps: f64) -> (f64, f64) {
        (self.x_lower - subsidy - eps / 2.0, self.x_upper - subsidy + eps / 2.0)
    }
}

/// The game family Γ(x) indexed by the hidden state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinationGame {
    players: Vec<Player>,
    state_bounds: StateBounds,
}

impl CoordinationGame {
    pub fn new(players: Vec<(f64, ExternalitySchedule)>, state_bounds: StateBounds) -> Result<Self> {
        let n = players.len();
        if n == 0 {
            return Err(config("a game needs at least one player"));
        }
        let players = players
            .into_iter()
            .enumerate()
            .map(|(i, (cost, schedule))| {
                if !cost.is_finite() {
                    return Err(config(format!("player {i}: cost must be finite")));
                }
                let lowered = lower_schedule(i, n, cost, &schedule)?;
                Ok(Player { cost, schedule, lowered })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { players, state_bounds })
    }

    /// Convenience constructor: every player has a count-based schedule.
    pub fn count_based(costs: &[f64], schedules: &[Vec<f64>], state_bounds: StateBounds) -> Result<Self> {
        if costs.len() != schedules.len() {
            return Err(config("costs and schedules differ in length"));
        }
        Self::new(
            costs
                .iter()
                .zip(schedules)
                .map(|(&c, w)| (c, ExternalitySchedule::CountBased { values: w.clone() }))
                .collect(),
            state_bounds,
        )
    }

    /// `n` identical players sharing cost `c` and schedule `w`.
    pub fn symmetric(n: usize, cost: f64, w: &[f64], state_bounds: StateBounds) -> Result<Self> {
        Self::count_based(&vec![cost; n], &vec![w.to_vec(); n], state_bounds)
    }

    pub fn n_players(&self) -> usize {
        self.players.len()
    }

    pub fn players(&self) -> &[Player] {
        &self.players
    }

    pub fn player(&self, i: usize) -> &Player {
        &self.players[i]
    }

    pub fn cost(&self, i: usize) -> f64 {
        self.players[i].cost
    }

    pub fn costs(&self) -> Vec<f64> {
        self.players.iter().map(|p| p.cost).collect()
    }

    pub fn state_bounds(&self) -> StateBounds {
        self.state_bounds
    }

    /// Same game with a different prior support.
    pub fn with_state_bounds(&self, state_bounds: StateBounds) -> Self {
        Self { players: self.players.clone(), state_bounds }
    }

    /// Same game with every cost shifted by `delta`.
    pub fn with_cost_shift(&self, delta: f64) -> Self {
        let mut out = self.clone();
        for p in &mut out.players {
            p.cost += delta;
        }
        out
    }

    /// The count table `w_i(0..N-1)` if the player's externality depends on counts only.
    pub fn count_schedule(&self, i: usize) -> Option<&[f64]> {
        match &self.players[i].lowered {
            Externality::Count(w) => Some(w),
            Externality::Subset(_) => None,
        }
    }

    fn check_player(&self, i: usize) -> Result<()> {
        if i >= self.n_players() {
            return Err(domain(format!("player index {i} out of range for {} players", self.n_players())));
        }
        Ok(())
    }

    /// `w_i(n)` for a count-based player.
    pub fn externality_at_count(&self, i: usize, n: usize) -> Result<f64> {
        self.check_player(i)?;
        let w = self
            .count_schedule(i)
            .ok_or_else(|| domain(format!("player {i} has a subset-based schedule; use a mask")))?;
        w.get(n)
            .copied()
            .ok_or_else(|| domain(format!("opponent count {n} out of range 0..={}", w.len() - 1)))
    }

    /// `w_i(a_-i)` where `mask` marks (by player index) the opponents playing 1.
    pub fn externality_at_mask(&self, i: usize, mask: u32) -> Result<f64> {
        self.check_player(i)?;
        let n = self.n_players();
        if n < 32 && mask >> n != 0 {
            return Err(domain(format!("mask {mask:#b} names players beyond {n}")));
        }
        if mask & (1 << i) != 0 {
            return Err(domain(format!("mask {mask:#b} contains player {i}'s own bit")));
        }
        Ok(match &self.players[i].lowered {
            Externality::Count(w) => w[mask.count_ones() as usize],
            Externality::Subset(w) => w[compress_mask(mask, i) as usize],
        })
    }

    /// Ex-post incentive `x + w_i(n) - c_i + s_i` for count-based players.
    pub fn incentive(&self, i: usize, opp_count: usize, state: f64, subsidy: f64) -> Result<f64> {
        Ok(state + self.externality_at_count(i, opp_count)? - self.cost(i) + subsidy)
    }

    /// Ex-post incentive when the exact set of opponents playing 1 matters.
    pub fn incentive_subset(&self, i: usize, opp_mask: u32, state: f64, subsidy: f64) -> Result<f64> {
        Ok(state + self.externality_at_mask(i, opp_mask)? - self.cost(i) + subsidy)
    }

    /// Externality when nobody else plays 1 and when everybody else does.
    fn extreme_externalities(&self, i: usize) -> (f64, f64) {
        match &self.players[i].lowered {
            Externality::Count(w) => (w[0], w[w.len() - 1]),
            Externality::Subset(w) => (w[0], w[w.len() - 1]),
        }
    }

    pub fn dominance_bounds(&self, i: usize) -> DominanceBounds {
        let (w_none, w_all) = self.extreme_externalities(i);
        let c = self.cost(i);
        DominanceBounds { x_lower: c - w_all, x_upper: c - w_none }
    }

    /// Game-level multiplicity interval: smallest lower and largest upper
    /// per-player dominance boundary.
    pub fn game_dominance_bounds(&self) -> DominanceBounds {
        (0..self.n_players()).map(|i| self.dominance_bounds(i)).fold(
            DominanceBounds { x_lower: f64::INFINITY, x_upper: f64::NEG_INFINITY },
            |acc, b| DominanceBounds { x_lower: acc.x_lower.min(b.x_lower), x_upper: acc.x_upper.max(b.x_upper) },
        )
    }

    /// Checks that every player's shifted dominance regions fit inside the
    /// prior support; the iterated-dominance sequences need a strictly
    /// dominant action at both ends of the signal axis.
    pub fn validate_state_bounds(&self, subsidies: &[f64], eps: f64) -> Result<()> {
        if subsidies.len() != self.n_players() {
            return Err(config(format!(
                "scheme has {} entries for {} players",
                subsidies.len(),
                self.n_players()
            )));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(config(format!("noise scale must be positive, got {eps}")));
        }
        let StateBounds { lo, hi } = self.state_bounds;
        for (i, &s) in subsidies.iter().enumerate() {
            let (low_edge, high_edge) = self.dominance_bounds(i).in_signal_space(s, eps);
            if high_edge > hi {
                return Err(config(format!(
                    "player {i}: upper dominance boundary {high_edge} exceeds state upper bound {hi}"
                )));
            }
            if low_edge < lo {
                return Err(config(format!(
                    "player {i}: lower dominance boundary {low_edge} is below state lower bound {lo}"
                )));
            }
        }
        Ok(())
    }

    /// Strategic complementarity of every player's lowered schedule. Always
    /// holds except for production tables with a concave stretch.
    pub fn check_complementarity(&self) -> Result<()> {
        for (i, p) in self.players.iter().enumerate() {
            if let Externality::Count(w) = &p.lowered {
                check_count_monotone(i, w)?;
            }
        }
        Ok(())
    }

    /// Identical costs and identical lowered schedules across all players.
    pub fn is_symmetric(&self) -> bool {
        let first = &self.players[0];
        self.players.iter().all(|p| p.cost == first.cost && p.lowered == first.lowered)
    }

    /// `w_i^n`: the externality averaged uniformly over all opponent sets of size `n`.
    pub fn class_average(&self, i: usize, n: usize) -> f64 {
        match &self.players[i].lowered {
            Externality::Count(w) => w[n],
            Externality::Subset(w) => {
                let (sum, count) = w
                    .iter()
                    .enumerate()
                    .filter(|(m, _)| m.count_ones() as usize == n)
                    .fold((0.0, 0usize), |(s, c), (_, v)| (s + v, c + 1));
                sum / count as f64
            }
        }
    }

    /// `Σ_n w_i^n / N`, the externality a threshold type expects under
    /// uniform beliefs over the number of opponents playing 1.
    pub fn mean_externality(&self, i: usize) -> f64 {
        let n = self.n_players();
        (0..n).map(|k| self.class_average(i, k)).sum::<f64>() / n as f64
    }
}

/// Maps a full player bitmask (owner bit clear) to the owner's opponent index space.
pub(crate) fn compress_mask(mask: u32, owner: usize) -> u32 {
    let low = mask & ((1u32 << owner) - 1);
    let high = (mask >> (owner + 1)) << owner;
    low | high
}

/// Inverse of [`compress_mask`].
pub(crate) fn expand_mask(compressed: u32, owner: usize) -> u32 {
    let low = compressed & ((1u32 << owner) - 1);
    let high = (compressed >> owner) << (owner + 1);
    low | high
}

fn lower_schedule(i: usize, n: usize, cost: f64, schedule: &ExternalitySchedule) -> Result<Externality> {
    match schedule {
        ExternalitySchedule::CountBased { values } => {
            if values.len() != n {
                return Err(config(format!(
                    "player {i}: count schedule needs {n} entries (0..={}), got {}",
                    n - 1,
                    values.len()
                )));
            }
            check_count_table(i, values)?;
            Ok(Externality::Count(values.clone()))
        }
        ExternalitySchedule::SubsetBased { weights } => {
            if n > MAX_SUBSET_PLAYERS {
                return Err(config(format!(
                    "subset-based externalities support at most {MAX_SUBSET_PLAYERS} players"
                )));
            }
            let size = 1usize << (n - 1);
            let mut table = vec![f64::NAN; size];
            for (&mask, &value) in weights {
                if mask >> n != 0 || mask & (1 << i) != 0 {
                    return Err(config(format!("player {i}: invalid opponent mask {mask}")));
                }
                if !value.is_finite() {
                    return Err(config(format!("player {i}: weight for mask {mask} is not finite")));
                }
                table[compress_mask(mask, i) as usize] = value;
            }
            if let Some(missing) = table.iter().position(|v| v.is_nan()) {
                return Err(config(format!(
                    "player {i}: missing weight for opponent mask {}",
                    expand_mask(missing as u32, i)
                )));
            }
            // Monotone under inclusion: adding any single opponent never lowers w.
            for m in 0..size {
                for b in 0..(n - 1) {
                    let sup = m | (1 << b);
                    if sup != m && table[sup] < table[m] {
                        return Err(config(format!(
                            "player {i}: externality decreases from mask {} to mask {}",
                            expand_mask(m as u32, i),
                            expand_mask(sup as u32, i)
                        )));
                    }
                }
            }
            Ok(Externality::Subset(table))
        }
        ExternalitySchedule::Indicator { benefit, threshold } => {
            if !(benefit.is_finite() && threshold.is_finite()) {
                return Err(config(format!("player {i}: indicator parameters must be finite")));
            }
            if !(*threshold > 0.0 && *threshold < n as f64) {
                return Err(config(format!(
                    "player {i}: success threshold {threshold} must lie strictly between 0 and {n}"
                )));
            }
            if *benefit <= cost {
                return Err(config(format!("player {i}: benefit {benefit} must exceed cost {cost}")));
            }
            // Success needs A >= I with A counting the player himself.
            let values = (0..n).map(|k| if k as f64 >= threshold - 1.0 { *benefit } else { 0.0 }).collect();
            Ok(Externality::Count(values))
        }
        ExternalitySchedule::ProductionDelta { q, reward } => {
            if q.len() != n + 1 {
                return Err(config(format!("player {i}: production table needs {} entries, got {}", n + 1, q.len())));
            }
            if q.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(config(format!("player {i}: success probabilities must lie in [0, 1]")));
            }
            if q.windows(2).any(|p| p[1] <= p[0]) {
                return Err(config(format!("player {i}: success probabilities must be strictly increasing")));
            }
            if !reward.is_finite() {
                return Err(config(format!("player {i}: reward must be finite")));
            }
            // Complementarity is not required here: the success-reward design only
            // needs increasing q. The equilibrium solvers check it separately.
            Ok(Externality::Count(q.windows(2).map(|p| reward * (p[1] - p[0])).collect()))
        }
    }
}

fn check_count_table(i: usize, values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(config(format!("player {i}: externalities must be finite")));
    }
    check_count_monotone(i, values)
}

fn check_count_monotone(i: usize, values: &[f64]) -> Result<()> {
    if let Some(k) = values.windows(2).position(|p| p[1] < p[0]) {
        return Err(config(format!(
            "player {i}: externality decreases from n={k} to n={} (complementarity violated)",
            k + 1
        )));
    }
    Ok(())
}
