//! Iterated elimination of dominated strategies restricted to switching-point
//! profiles.
//!
//! The upper sequence starts from the profile where everybody switches at
//! `X_hi` and repeatedly replaces each switching point by the signal at which
//! a player is indifferent against the previous profile; the lower sequence
//! does the same from `X_lo`. Their limits bound every strategy that survives
//! elimination, so when they meet the equilibrium is unique.

use log::debug;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::beliefs::{poisson_binomial, InformationStructure};
use crate::error::{config, domain, Result};
use crate::game::{CoordinationGame, Externality};

/// Tolerances and limits of the elimination sequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Bisection width on the signal axis.
    pub root_tolerance: f64,
    /// Stop once no switching point moves by this much in one round.
    pub outer_tolerance: f64,
    pub max_iter: usize,
    /// Largest `max_i (r_i - l_i)` reported as converged.
    pub gap_tolerance: f64,
    /// Polish each sequence limit with Newton steps on the indifference system.
    pub refine: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { root_tolerance: 1e-8, outer_tolerance: 1e-7, max_iter: 10_000, gap_tolerance: 1e-6, refine: true }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.root_tolerance > 0.0 && self.outer_tolerance > 0.0 && self.gap_tolerance > 0.0) {
            return Err(config("solver tolerances must be positive"));
        }
        if self.max_iter == 0 {
            return Err(config("max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// Switching points: player `i` plays 1 iff their signal is at least `y_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThresholdProfile(pub Vec<f64>);

impl ThresholdProfile {
    pub fn common(n: usize, y: f64) -> Self {
        Self(vec![y; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest coordinatewise distance to `other`.
    pub fn max_distance(&self, other: &ThresholdProfile) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Expected gain from playing 1 rather than 0 for player `i` with signal
/// `signal` and subsidy `subsidy`, when opponents follow `profile`
/// (entries may be ±∞ for opponents who always / never play 1).
pub fn expected_incentive(
    game: &CoordinationGame,
    info: &InformationStructure,
    profile: &ThresholdProfile,
    i: usize,
    signal: f64,
    subsidy: f64,
) -> Result<f64> {
    IncentiveEval::new(game, info)?.eval(profile.as_slice(), i, signal, subsidy)
}

struct IncentiveEval<'a> {
    game: &'a CoordinationGame,
    info: &'a InformationStructure,
}

impl<'a> IncentiveEval<'a> {
    fn new(game: &'a CoordinationGame, info: &'a InformationStructure) -> Result<Self> {
        if game.state_bounds() != info.bounds() {
            return Err(config("game state bounds differ from the prior support"));
        }
        Ok(Self { game, info })
    }

    fn eval(&self, profile: &[f64], i: usize, signal: f64, subsidy: f64) -> Result<f64> {
        let n = self.game.n_players();
        if profile.len() != n {
            return Err(domain(format!("profile has {} entries for {n} players", profile.len())));
        }
        if i >= n {
            return Err(domain(format!("player index {i} out of range")));
        }
        let noise = self.info.noise();
        let opp: Vec<f64> = profile.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &y)| y).collect();
        let mut kinks = self.info.opponent_kinks(opp.iter().copied());
        let rule = self.info.posterior(signal, &mut kinks)?;
        let mut p = vec![0.0; opp.len()];
        let ext = match self.game.player(i).externality() {
            Externality::Count(w) => {
                let mut dist = vec![0.0; n];
                rule.expect(|x| {
                    for (pj, &y) in p.iter_mut().zip(&opp) {
                        *pj = noise.prob_above(y, x);
                    }
                    poisson_binomial(&p, &mut dist);
                    (x - signal) + w.iter().zip(&dist).map(|(a, b)| a * b).sum::<f64>()
                })?
            }
            Externality::Subset(w) => {
                let mut table = w.clone();
                rule.expect(|x| {
                    table.copy_from_slice(w);
                    // Multilinear extension: fold out one opponent bit at a time.
                    let mut len = table.len();
                    for &y in opp.iter().rev() {
                        let pj = noise.prob_above(y, x);
                        len /= 2;
                        for m in 0..len {
                            table[m] = (1.0 - pj) * table[m] + pj * table[m + len];
                        }
                    }
                    (x - signal) + table[0]
                })?
            }
        };
        Ok(signal + ext - self.game.cost(i) + subsidy)
    }
}

/// Iterates and limit of one elimination sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceReport {
    /// `iterates[0]` is the starting profile.
    pub iterates: Vec<Vec<f64>>,
    pub limit: ThresholdProfile,
    pub iterations: usize,
    pub converged: bool,
    /// Whether Newton polishing replaced the last iterate.
    pub refined: bool,
    /// Estimated distance from the last iterate to the limit (geometric tail bound).
    pub tail_estimate: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum Direction {
    /// From `X_hi` downward.
    Down,
    /// From `X_lo` upward.
    Up,
}

fn run_sequence(
    game: &CoordinationGame,
    info: &InformationStructure,
    subsidies: &[f64],
    cfg: &SolverConfig,
    dir: Direction,
) -> Result<SequenceReport> {
    cfg.validate()?;
    game.check_complementarity()?;
    let n = game.n_players();
    if subsidies.len() != n {
        return Err(config(format!("scheme has {} entries for {n} players", subsidies.len())));
    }
    let ev = IncentiveEval::new(game, info)?;
    let b = info.bounds();
    let (floor, ceiling) = info.signal_envelope();
    let start = if dir == Direction::Down { b.hi } else { b.lo };
    let mut current = vec![start; n];
    for (i, &s) in subsidies.iter().enumerate() {
        let u = ev.eval(&current, i, start, s)?;
        let bracketed = if dir == Direction::Down { u >= 0.0 } else { u <= 0.0 };
        if !bracketed {
            let (edge, want) = if dir == Direction::Down { ("upper", ">= 0") } else { ("lower", "<= 0") };
            return Err(config(format!(
                "player {i}: expected incentive {u:.3e} at the {edge} state bound should be {want}; \
                 dominance regions do not fit inside the state bounds"
            )));
        }
    }
    let mut iterates = vec![current.clone()];
    let mut moves = vec![info.epsilon() / 4.0; n];
    let mut last_moves: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let mut next = current.clone();
        for i in 0..n {
            let step = (2.0 * moves[i]).max(4.0 * cfg.root_tolerance);
            let u = |z: f64| ev.eval(&current, i, z, subsidies[i]);
            next[i] = match dir {
                Direction::Down => root_below(u, current[i], step, floor, cfg.root_tolerance)?,
                Direction::Up => root_above(u, current[i], step, ceiling, cfg.root_tolerance)?,
            };
        }
        iterations += 1;
        let movement: Vec<f64> = next.iter().zip(&current).map(|(a, b)| (a - b).abs()).collect();
        let max_move = movement.iter().copied().fold(0.0, f64::max);
        moves = movement;
        last_moves.push(max_move);
        current = next;
        iterates.push(current.clone());
        if max_move < cfg.outer_tolerance {
            converged = true;
            break;
        }
    }
    let tail = tail_estimate(&last_moves);
    debug!("{} sequence: {iterations} rounds, converged={converged}, tail≈{tail:.2e}", dir_name(dir));

    let mut limit = current.clone();
    let mut refined = false;
    if cfg.refine && converged {
        let band = (4.0 * tail).max(10.0 * cfg.root_tolerance);
        let free: Vec<usize> = (0..n).filter(|&i| current[i] > floor && current[i] < ceiling).collect();
        if let Some(y) = newton_polish(&ev, subsidies, &current, &free, cfg.root_tolerance) {
            let slack = 10.0 * cfg.root_tolerance;
            let ok = free.iter().all(|&i| match dir {
                Direction::Down => y[i] <= current[i] + slack && y[i] >= current[i] - band,
                Direction::Up => y[i] >= current[i] - slack && y[i] <= current[i] + band,
            });
            if ok {
                limit = y;
                refined = true;
            } else {
                debug!("{} sequence: Newton root left the tail band, keeping last iterate", dir_name(dir));
            }
        }
    }
    Ok(SequenceReport {
        iterates,
        limit: ThresholdProfile(limit),
        iterations,
        converged,
        refined,
        tail_estimate: tail,
    })
}

fn dir_name(dir: Direction) -> &'static str {
    match dir {
        Direction::Down => "upper",
        Direction::Up => "lower",
    }
}

/// Geometric tail `m ρ/(1-ρ)` of the movements, with the ratio measured over
/// up to 20 rounds because single-step ratios are dominated by bisection noise.
fn tail_estimate(moves: &[f64]) -> f64 {
    let Some(&last) = moves.last() else {
        return 0.0;
    };
    let span = (moves.len() - 1).min(20);
    if span == 0 {
        return last;
    }
    let earlier = moves[moves.len() - 1 - span];
    let rho = if earlier > 0.0 && last > 0.0 { (last / earlier).powf(1.0 / span as f64).min(0.999) } else { 0.999 };
    last * rho / (1.0 - rho)
}

/// Largest root of an increasing function at or below `start`; returns `floor`
/// when the function is still nonnegative there.
fn root_below(
    u: impl Fn(f64) -> Result<f64>,
    start: f64,
    mut step: f64,
    floor: f64,
    tol: f64,
) -> Result<f64> {
    let mut hi = start;
    let lo = loop {
        let lo = (hi - step).max(floor);
        if u(lo)? < 0.0 {
            break lo;
        }
        if lo <= floor {
            return Ok(floor);
        }
        hi = lo;
        step *= 2.0;
    };
    let mut lo = lo;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if u(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Mirror image of [`root_below`].
fn root_above(
    u: impl Fn(f64) -> Result<f64>,
    start: f64,
    mut step: f64,
    ceiling: f64,
    tol: f64,
) -> Result<f64> {
    let mut lo = start;
    let hi = loop {
        let hi = (lo + step).min(ceiling);
        if u(hi)? > 0.0 {
            break hi;
        }
        if hi >= ceiling {
            return Ok(ceiling);
        }
        lo = hi;
        step *= 2.0;
    };
    let mut hi = hi;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if u(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo)
}

/// Newton iteration on `u_i(p^y_{-i} | y_i, s_i) = 0` over the `free` coordinates.
fn newton_polish(ev: &IncentiveEval, subsidies: &[f64], start: &[f64], free: &[usize], tol: f64) -> Option<Vec<f64>> {
    if free.is_empty() {
        return Some(start.to_vec());
    }
    let residual = |y: &[f64]| -> Option<DVector<f64>> {
        let mut r = DVector::zeros(free.len());
        for (row, &i) in free.iter().enumerate() {
            r[row] = ev.eval(y, i, y[i], subsidies[i]).ok()?;
        }
        Some(r)
    };
    let h = 1e-7;
    let mut y = start.to_vec();
    for _ in 0..25 {
        let f = residual(&y)?;
        let mut jac = DMatrix::zeros(free.len(), free.len());
        for (col, &j) in free.iter().enumerate() {
            let mut yh = y.clone();
            yh[j] += h;
            let fh = residual(&yh)?;
            jac.set_column(col, &((fh - &f) / h));
        }
        let step = jac.lu().solve(&(-&f))?;
        for (k, &i) in free.iter().enumerate() {
            y[i] += step[k];
        }
        if step.amax() < 1e-3 * tol {
            return Some(y);
        }
    }
    None
}

/// Upper elimination sequence `r^k` starting from `X_hi`.
pub fn upper_sequence(
    game: &CoordinationGame,
    info: &InformationStructure,
    subsidies: &[f64],
    cfg: &SolverConfig,
) -> Result<SequenceReport> {
    run_sequence(game, info, subsidies, cfg, Direction::Down)
}

/// Lower elimination sequence `l^k` starting from `X_lo`.
pub fn lower_sequence(
    game: &CoordinationGame,
    info: &InformationStructure,
    subsidies: &[f64],
    cfg: &SolverConfig,
) -> Result<SequenceReport> {
    run_sequence(game, info, subsidies, cfg, Direction::Up)
}

/// Both sequences, their limits and the switching points they pin down.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub subsidies: Vec<f64>,
    pub upper_limit: ThresholdProfile,
    pub lower_limit: ThresholdProfile,
    /// `max_i (r_i - l_i)`.
    pub gap: f64,
    /// Midpoint of the two limits.
    pub x_of_s: ThresholdProfile,
    pub converged: bool,
    pub upper: SequenceReport,
    pub lower: SequenceReport,
}

pub fn solve_thresholds(
    game: &CoordinationGame,
    info: &InformationStructure,
    subsidies: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    if game.state_bounds() != info.bounds() {
        return Err(config("game state bounds differ from the prior support"));
    }
    game.validate_state_bounds(subsidies, info.epsilon())?;
    let upper = upper_sequence(game, info, subsidies, cfg)?;
    let lower = lower_sequence(game, info, subsidies, cfg)?;
    let mut r = upper.limit.0.clone();
    let mut l = lower.limit.0.clone();
    for (ri, li) in r.iter_mut().zip(l.iter_mut()) {
        if *li > *ri {
            let mid = 0.5 * (*li + *ri);
            *li = mid;
            *ri = mid;
        }
    }
    let gap = r.iter().zip(&l).map(|(a, b)| a - b).fold(0.0, f64::max);
    let x_of_s = r.iter().zip(&l).map(|(a, b)| 0.5 * (a + b)).collect();
    let converged = upper.converged && lower.converged && gap < cfg.gap_tolerance;
    Ok(SolveReport {
        subsidies: subsidies.to_vec(),
        upper_limit: ThresholdProfile(r),
        lower_limit: ThresholdProfile(l),
        gap,
        x_of_s: ThresholdProfile(x_of_s),
        converged,
        upper,
        lower,
    })
}

/// Worst best-response violation of a claimed switching-point profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BneCheck {
    pub max_violation: f64,
    pub player: Option<usize>,
    pub signal: Option<f64>,
}

/// Checks the signs of expected incentives on `grid` against the actions the
/// profile prescribes: no positive incentive below `y_i`, no negative one at or
/// above. The two grid points bracketing each `y_i` are exempt; instead the
/// threshold type itself must be indifferent, since the incentive is
/// continuous in the signal.
pub fn verify_bne(
    game: &CoordinationGame,
    info: &InformationStructure,
    profile: &ThresholdProfile,
    subsidies: &[f64],
    grid: &[f64],
) -> Result<BneCheck> {
    let ev = IncentiveEval::new(game, info)?;
    let (env_lo, env_hi) = info.signal_envelope();
    let mut worst = BneCheck { max_violation: 0.0, player: None, signal: None };
    let mut record = |v: f64, i: usize, z: f64| {
        if v > worst.max_violation {
            worst = BneCheck { max_violation: v, player: Some(i), signal: Some(z) };
        }
    };
    let y = profile.as_slice();
    let mut sorted: Vec<f64> = grid.iter().copied().filter(|z| *z >= env_lo && *z <= env_hi).collect();
    sorted.sort_by(f64::total_cmp);
    for i in 0..game.n_players() {
        let above = sorted.partition_point(|&z| z < y[i]);
        for (k, &z) in sorted.iter().enumerate() {
            if k + 1 == above || k == above {
                continue;
            }
            let u = ev.eval(y, i, z, subsidies[i])?;
            let v = if z < y[i] { u.max(0.0) } else { (-u).max(0.0) };
            record(v, i, z);
        }
        if y[i] >= env_lo && y[i] <= env_hi {
            let u = ev.eval(y, i, y[i], subsidies[i])?;
            record(u.abs(), i, y[i]);
        }
    }
    Ok(worst)
}
