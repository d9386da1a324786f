//! Exhaustive elimination on a discretized signal grid.
//!
//! Each player's strategy is an arbitrary action per signal cell (no
//! monotonicity assumed). A cell's action is eliminated when it is strictly
//! dominated against every opponent strategy still allowed: the incentive
//! is bounded above by letting undecided opponent cells play 1 and below by
//! letting them play 0, which is exact under strategic complementarity.

use serde::Serialize;

use crate::beliefs::{poisson_binomial, InformationStructure};
use crate::error::{config, numeric, Result};
use crate::game::{CoordinationGame, Externality};

pub const MAX_ORACLE_PLAYERS: usize = 4;
pub const MAX_ORACLE_CELLS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionSet {
    Zero,
    One,
    Both,
}

/// Undecided band of one player.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Band {
    /// Signal of the first cell where 1 survives.
    pub lo: f64,
    /// Signal of the last cell where 0 survives.
    pub hi: f64,
    /// `(lo + hi) / 2`: the switching point the band certifies.
    pub midpoint: f64,
    pub undecided_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretizedGame {
    pub step: f64,
    pub signal_grid: Vec<f64>,
    pub state_grid: Vec<f64>,
    /// `action_table[i][c]`: surviving actions of player `i` at signal cell `c`.
    pub action_table: Vec<Vec<ActionSet>>,
    /// Pass in which each cell was decided (0 = never).
    pub decided_in_pass: Vec<Vec<usize>>,
    pub bands: Vec<Band>,
    pub passes: usize,
}

fn integral_ratio(value: f64, what: &str) -> Result<usize> {
    let r = value.round();
    if r < 1.0 || (value - r).abs() > 1e-6 * r.max(1.0) {
        return Err(config(format!("{what} must be a positive integer multiple of the grid step, got ratio {value}")));
    }
    Ok(r as usize)
}

/// Runs elimination passes until nothing changes. `step` must divide both
/// `ε/2` and the width of the state bounds.
pub fn brute_force_iesds(
    game: &CoordinationGame,
    info: &InformationStructure,
    subsidies: &[f64],
    step: f64,
) -> Result<DiscretizedGame> {
    let n = game.n_players();
    if n > MAX_ORACLE_PLAYERS {
        return Err(config(format!("oracle supports at most {MAX_ORACLE_PLAYERS} players, got {n}")));
    }
    if subsidies.len() != n {
        return Err(config(format!("scheme has {} entries for {n} players", subsidies.len())));
    }
    if game.state_bounds() != info.bounds() {
        return Err(config("game state bounds differ from the prior support"));
    }
    game.check_complementarity()?;
    if !(step > 0.0) {
        return Err(config("grid step must be positive"));
    }
    let eps = info.epsilon();
    let b = info.bounds();
    let half = integral_ratio(eps / (2.0 * step), "half the noise scale")?;
    let states = integral_ratio(b.width() / step, "state interval width")?;
    let cells = states + 2 * half + 1;
    if cells > MAX_ORACLE_CELLS {
        return Err(config(format!("grid has {cells} signal cells per player; at most {MAX_ORACLE_CELLS} allowed")));
    }
    let state_grid: Vec<f64> = (0..=states).map(|k| b.lo + k as f64 * step).collect();
    let signal_grid: Vec<f64> = (0..cells).map(|c| b.lo + (c as f64 - half as f64) * step).collect();

    let noise = info.noise();
    let prior = info.prior();
    // Probability that an opponent's signal lands in the cell m steps from the state.
    let kernel: Vec<f64> = (-(half as isize)..=half as isize)
        .map(|m| {
            let hi = ((m as f64 + 0.5) * step / eps).min(0.5);
            let lo = ((m as f64 - 0.5) * step / eps).max(-0.5);
            noise.cdf(hi) - noise.cdf(lo)
        })
        .collect();
    // Posterior weights of own cell c over state nodes k = c - half - m, m in -half..=half,
    // trapezoid in the state with the window and the support truncating it.
    let posterior: Vec<Vec<(usize, f64)>> = (0..cells)
        .map(|c| {
            let mut w: Vec<(usize, f64)> = Vec::with_capacity(2 * half + 1);
            let first = c.saturating_sub(2 * half);
            let last = c.min(states);
            for k in first..=last {
                let m = c as isize - half as isize - k as isize;
                let edge = m.unsigned_abs() == half || k == 0 || k == states;
                let trap = if edge { 0.5 } else { 1.0 };
                let d = trap * prior.pdf(state_grid[k]) * noise.pdf((m as f64 * step / eps).clamp(-0.5, 0.5));
                if d > 0.0 {
                    w.push((k, d));
                }
            }
            let total: f64 = w.iter().map(|(_, d)| d).sum();
            if total > 0.0 {
                w.iter_mut().for_each(|(_, d)| *d /= total);
            } else if first <= last {
                // Degenerate window at the envelope edge: point mass on the nearest state.
                w = vec![(if c < half { 0 } else { states }, 1.0)];
            }
            w
        })
        .collect();

    let mut table = vec![vec![ActionSet::Both; cells]; n];
    let mut decided = vec![vec![0usize; cells]; n];
    // play_prob[j][k] = (P_j plays 1 at state k | undecided play 0, | undecided play 1)
    let prob_of = |actions: &[ActionSet]| -> Vec<(f64, f64)> {
        (0..=states)
            .map(|k| {
                let mut lo = 0.0;
                let mut hi = 0.0;
                for (mi, &kv) in kernel.iter().enumerate() {
                    match actions[k + mi] {
                        ActionSet::One => {
                            lo += kv;
                            hi += kv;
                        }
                        ActionSet::Both => hi += kv,
                        ActionSet::Zero => {}
                    }
                }
                (lo.min(1.0), hi.min(1.0))
            })
            .collect()
    };
    let mut play_prob: Vec<Vec<(f64, f64)>> = table.iter().map(|t| prob_of(t)).collect();

    let mut passes = 0;
    let mut dist = vec![0.0; n];
    let mut p = vec![0.0; n.saturating_sub(1)];
    loop {
        passes += 1;
        let mut changed = false;
        for i in 0..n {
            let c_i = game.cost(i) - subsidies[i];
            let ext = game.player(i).externality();
            let opponents: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let mut expected_w = |k: usize, optimistic: bool| -> f64 {
                for (pj, &j) in p.iter_mut().zip(&opponents) {
                    let (lo, hi) = play_prob[j][k];
                    *pj = if optimistic { hi } else { lo };
                }
                match ext {
                    Externality::Count(w) => {
                        poisson_binomial(&p, &mut dist);
                        w.iter().zip(&dist).map(|(a, b)| a * b).sum()
                    }
                    Externality::Subset(w) => {
                        let mut t = w.clone();
                        let mut len = t.len();
                        for &pj in p.iter().rev() {
                            len /= 2;
                            for m in 0..len {
                                t[m] = (1.0 - pj) * t[m] + pj * t[m + len];
                            }
                        }
                        t[0]
                    }
                }
            };
            let mut row_changed = false;
            for c in 0..cells {
                if table[i][c] != ActionSet::Both {
                    continue;
                }
                let (mut best, mut worst) = (0.0, 0.0);
                for &(k, wt) in &posterior[c] {
                    let x = state_grid[k];
                    best += wt * (x + expected_w(k, true));
                    worst += wt * (x + expected_w(k, false));
                }
                if worst - c_i > 0.0 {
                    table[i][c] = ActionSet::One;
                } else if best - c_i < 0.0 {
                    table[i][c] = ActionSet::Zero;
                } else {
                    continue;
                }
                decided[i][c] = passes;
                row_changed = true;
            }
            if row_changed {
                play_prob[i] = prob_of(&table[i]);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let bands = (0..n)
        .map(|i| {
            let row = &table[i];
            let lo = row.iter().position(|a| *a != ActionSet::Zero);
            let hi = row.iter().rposition(|a| *a != ActionSet::One);
            let (Some(lo), Some(hi)) = (lo, hi) else {
                return Err(numeric(format!("player {i}: one action survives on the whole grid")));
            };
            // Outside [min(lo,hi), max(lo,hi)] the pattern must be Zero below and One above.
            let (a, z) = (lo.min(hi), lo.max(hi));
            if row[a..=z].iter().any(|s| *s != ActionSet::Both) && hi >= lo {
                return Err(numeric(format!(
                    "player {i}: surviving actions are not monotone in the signal; grid too coarse to resolve the band"
                )));
            }
            Ok(Band {
                lo: signal_grid[lo],
                hi: signal_grid[hi],
                midpoint: 0.5 * (signal_grid[lo] + signal_grid[hi]),
                undecided_cells: if hi >= lo { hi - lo + 1 } else { 0 },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(DiscretizedGame {
        step,
        signal_grid,
        state_grid,
        action_table: table,
        decided_in_pass: decided,
        bands,
        passes,
    })
}
