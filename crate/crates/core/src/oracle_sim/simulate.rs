//! Monte Carlo play of switching-point strategies.
//!
//! Draw `d` uses ChaCha20 seeded with `seed` on stream `d`, so every draw is
//! reproducible on its own and the run does not depend on thread scheduling.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beliefs::InformationStructure;
use crate::error::{config, domain, Result};
use crate::game::CoordinationGame;
use crate::solver::ThresholdProfile;

/// Name of the generator, recorded in run summaries.
pub const RNG_ALGORITHM: &str = "chacha20-stream-per-draw";

/// Largest game whose every action profile is enumerated for the efficiency check.
const FULL_WELFARE_PLAYERS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationOptions {
    pub draws: usize,
    pub seed: u64,
    /// Restrict states to this open range (the prior conditioned on it).
    pub state_range: Option<(f64, f64)>,
    /// Planner's critical state, for the conditional all-1 frequency.
    pub target: Option<f64>,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self { draws: 10_000, seed: 0, state_range: None, target: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DrawRecord {
    pub draw: usize,
    pub state: f64,
    pub signals: Vec<f64>,
    pub actions: Vec<u8>,
    /// Realized payoffs, subsidies included.
    pub payoffs: Vec<f64>,
    pub spend: f64,
    pub all_one: bool,
    pub all_zero: bool,
    /// Played profile maximizes total payoff excluding transfers.
    pub efficient: bool,
}

/// Where the state fell relative to the game's dominance boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct RegionCounts {
    pub below_lower: usize,
    pub multiplicity: usize,
    pub above_upper: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub rng: String,
    pub seed: u64,
    pub draws: usize,
    pub all_one_frequency: f64,
    pub all_zero_frequency: f64,
    /// Frequency of all-1 among draws with state above `target + ε/2`.
    pub all_one_above_target: Option<f64>,
    pub draws_above_target: usize,
    /// Mean subsidy outlay over draws where somebody plays 1.
    pub mean_spend_given_play: Option<f64>,
    pub inefficiency_frequency: f64,
    pub inefficient_all_one: usize,
    pub regions: RegionCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationRun {
    pub records: Vec<DrawRecord>,
    pub summary: SimulationSummary,
}

fn welfare(game: &CoordinationGame, x: f64, mask: u32) -> f64 {
    (0..game.n_players())
        .map(|i| {
            if mask & (1 << i) != 0 {
                x + game.externality_at_mask(i, mask & !(1 << i)).expect("mask excludes own bit")
            } else {
                game.cost(i)
            }
        })
        .sum()
}

pub fn simulate_play(
    game: &CoordinationGame,
    info: &InformationStructure,
    subsidies: &[f64],
    profile: &ThresholdProfile,
    opts: &SimulationOptions,
) -> Result<SimulationRun> {
    let n = game.n_players();
    if subsidies.len() != n || profile.len() != n {
        return Err(config(format!("scheme and profile must both have {n} entries")));
    }
    if n > 31 {
        return Err(config("simulation supports at most 31 players"));
    }
    if opts.draws == 0 {
        return Err(config("draws must be positive"));
    }
    let prior = info.prior();
    let noise = info.noise();
    let eps = info.epsilon();
    let b = info.bounds();
    let (p_lo, p_hi) = match opts.state_range {
        None => (0.0, 1.0),
        Some((a, z)) => {
            let (a, z) = (a.max(b.lo), z.min(b.hi));
            if !(a < z) {
                return Err(domain(format!("state range ({a}, {z}) is empty within the prior support")));
            }
            (prior.cdf(a), prior.cdf(z))
        }
    };
    let y = profile.as_slice();
    let full = (1u32 << n) - 1;

    let records: Vec<DrawRecord> = (0..opts.draws)
        .into_par_iter()
        .map(|d| {
            let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
            rng.set_stream(d as u64);
            let u: f64 = rng.gen();
            let mut state = prior.quantile(p_lo + u * (p_hi - p_lo));
            if let Some((a, z)) = opts.state_range {
                // Keep the open range open under rounding of the inverse cdf.
                if state <= a || state >= z {
                    state = 0.5 * (a.max(b.lo) + z.min(b.hi));
                }
            }
            let signals: Vec<f64> = (0..n).map(|_| state + eps * noise.quantile(rng.gen())).collect();
            let actions: Vec<u8> = signals.iter().zip(y).map(|(z, t)| u8::from(z >= t)).collect();
            let mask = actions.iter().enumerate().fold(0u32, |m, (i, &a)| m | (u32::from(a) << i));
            let payoffs: Vec<f64> = (0..n)
                .map(|i| {
                    if actions[i] == 1 {
                        let w = game.externality_at_mask(i, mask & !(1 << i)).expect("mask excludes own bit");
                        state + w + subsidies[i]
                    } else {
                        game.cost(i)
                    }
                })
                .collect();
            let spend = (0..n).filter(|&i| actions[i] == 1).fold(0.0, |acc, i| acc + subsidies[i]);
            let played = welfare(game, state, mask);
            let best = if n <= FULL_WELFARE_PLAYERS {
                (0..=full).map(|m| welfare(game, state, m)).fold(f64::NEG_INFINITY, f64::max)
            } else {
                welfare(game, state, 0).max(welfare(game, state, full)).max(played)
            };
            let efficient = played >= best - 1e-12 * best.abs().max(1.0);
            DrawRecord {
                draw: d,
                state,
                signals,
                actions,
                payoffs,
                spend,
                all_one: mask == full,
                all_zero: mask == 0,
                efficient,
            }
        })
        .collect();

    let summary = summarize(game, eps, opts, &records);
    Ok(SimulationRun { records, summary })
}

fn summarize(game: &CoordinationGame, eps: f64, opts: &SimulationOptions, records: &[DrawRecord]) -> SimulationSummary {
    let total = records.len() as f64;
    let freq = |pred: &dyn Fn(&DrawRecord) -> bool| records.iter().filter(|r| pred(r)).count() as f64 / total;
    let (above, above_all_one) = match opts.target {
        Some(t) => {
            let sel: Vec<&DrawRecord> = records.iter().filter(|r| r.state > t + eps / 2.0).collect();
            let k = sel.len();
            let f = (k > 0).then(|| sel.iter().filter(|r| r.all_one).count() as f64 / k as f64);
            (k, f)
        }
        None => (0, None),
    };
    let playing: Vec<f64> = records.iter().filter(|r| !r.all_zero).map(|r| r.spend).collect();
    let mean_spend = (!playing.is_empty()).then(|| playing.iter().sum::<f64>() / playing.len() as f64);
    let bounds = game.game_dominance_bounds();
    let mut regions = RegionCounts::default();
    for r in records {
        if r.state < bounds.x_lower {
            regions.below_lower += 1;
        } else if r.state > bounds.x_upper {
            regions.above_upper += 1;
        } else {
            regions.multiplicity += 1;
        }
    }
    SimulationSummary {
        rng: RNG_ALGORITHM.to_string(),
        seed: opts.seed,
        draws: records.len(),
        all_one_frequency: freq(&|r| r.all_one),
        all_zero_frequency: freq(&|r| r.all_zero),
        all_one_above_target: above_all_one,
        draws_above_target: above,
        mean_spend_given_play: mean_spend,
        inefficiency_frequency: freq(&|r| !r.efficient),
        inefficient_all_one: records.iter().filter(|r| r.all_one && !r.efficient).count(),
        regions,
    }
}

impl SimulationRun {
    /// One CSV row per draw.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.records.first().map_or(0, |r| r.signals.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["draw".to_string(), "state".to_string()];
        for prefix in ["signal", "action", "payoff"] {
            header.extend((0..n).map(|i| format!("{prefix}_{i}")));
        }
        header.extend(["spend", "all_one", "efficient"].map(String::from));
        w.write_record(&header).map_err(io_err)?;
        for r in &self.records {
            let mut row = vec![r.draw.to_string(), r.state.to_string()];
            row.extend(r.signals.iter().map(f64::to_string));
            row.extend(r.actions.iter().map(u8::to_string));
            row.extend(r.payoffs.iter().map(f64::to_string));
            row.push(r.spend.to_string());
            row.push(u8::from(r.all_one).to_string());
            row.push(u8::from(r.efficient).to_string());
            w.write_record(&row).map_err(io_err)?;
        }
        w.flush().map_err(|e| crate::Error::Config(format!("write failed: {e}")))?;
        Ok(())
    }
}

pub(crate) fn io_err(e: csv::Error) -> crate::Error {
    crate::Error::Config(format!("write failed: {e}"))
}
