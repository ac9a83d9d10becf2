//! Stochastic simulation on the untruncated network.
//!
//! Trajectory `k` draws from its own ChaCha8 stream `(seed, k)`, and
//! trajectories are grouped in fixed chunks whose accumulators merge in
//! chunk order. Any schedule that respects that order, serial or parallel,
//! produces bit-identical statistics.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::ops::Range;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::evolution::ProbVec;
use crate::label::StateLabel;
use crate::linalg::CompensatedSum;
use crate::network::Network;
use crate::subset::FiniteSubset;

/// Trajectories per accumulator chunk.
pub const CHUNK: u64 = 1024;

/// Jumps after which a trajectory is treated as censored.
const MAX_JUMPS: u64 = 1 << 32;

/// The random stream of trajectory `index`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform on `(0, 1]`.
fn unit_open_closed(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Chunk index ranges covering `0..n`.
pub fn chunks(n: u64) -> impl Iterator<Item = Range<u64>> {
    (0..n.div_ceil(CHUNK)).map(move |c| c * CHUNK..((c + 1) * CHUNK).min(n))
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Running first and second moments.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MomentSum {
    sum: CompensatedSum,
    sum_sq: CompensatedSum,
}

impl MomentSum {
    pub fn add(&mut self, x: f64) {
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }

    pub fn merge(&mut self, other: &MomentSum) {
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
    }

    /// Treats absent samples as zeros so that `count` may exceed the number
    /// of `add` calls.
    pub fn estimate(&self, count: u64) -> Estimate {
        if count == 0 {
            return Estimate {
                mean: f64::NAN,
                stderr: f64::NAN,
            };
        }
        let n = count as f64;
        let mean = self.sum.value() / n;
        let stderr = if count < 2 {
            0.0
        } else {
            let var = ((self.sum_sq.value() - n * mean * mean) / (n - 1.0)).max(0.0);
            libm::sqrt(var / n)
        };
        Estimate { mean, stderr }
    }
}

/// How a single trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Returned { time: f64 },
    Absorbed { at: StateLabel },
    Censored,
}

/// One jump-to-state event: trajectory index, state entered, time.
pub type Event = (u64, StateLabel, f64);

/// Per-trajectory tallies before merging.
struct Tally {
    visits: BTreeMap<StateLabel, u64>,
    occupation: BTreeMap<StateLabel, f64>,
}

/// Mergeable sums behind [`TrajectoryStats`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReturnAccumulator {
    n: u64,
    returned: u64,
    absorbed: u64,
    censored: u64,
    return_time: MomentSum,
    rb_return_time: MomentSum,
    visits: BTreeMap<StateLabel, MomentSum>,
    occupation: BTreeMap<StateLabel, MomentSum>,
    exit_rate: BTreeMap<StateLabel, f64>,
    absorbed_at: BTreeMap<StateLabel, u64>,
}

impl ReturnAccumulator {
    pub fn merge(&mut self, other: &ReturnAccumulator) {
        self.n += other.n;
        self.returned += other.returned;
        self.absorbed += other.absorbed;
        self.censored += other.censored;
        self.return_time.merge(&other.return_time);
        self.rb_return_time.merge(&other.rb_return_time);
        for (k, v) in &other.visits {
            self.visits.entry(*k).or_default().merge(v);
        }
        for (k, v) in &other.occupation {
            self.occupation.entry(*k).or_default().merge(v);
        }
        for (k, v) in &other.exit_rate {
            self.exit_rate.insert(*k, *v);
        }
        for (k, v) in &other.absorbed_at {
            *self.absorbed_at.entry(*k).or_default() += v;
        }
    }

    pub fn finish(self, start: StateLabel, horizon: f64) -> TrajectoryStats {
        let r = self.returned;
        let visiting_number: BTreeMap<_, _> = self.visits.iter().map(|(k, m)| (*k, m.estimate(r))).collect();
        let visiting_time = visiting_number
            .iter()
            .map(|(k, e)| {
                let g = self.exit_rate[k];
                (
                    *k,
                    Estimate {
                        mean: e.mean / g,
                        stderr: e.stderr / g,
                    },
                )
            })
            .collect();
        TrajectoryStats {
            start,
            horizon,
            n_trajectories: self.n,
            returned_count: r,
            absorbed_count: self.absorbed,
            censored_count: self.censored,
            return_time: self.return_time.estimate(r),
            rb_return_time: self.rb_return_time.estimate(r),
            visiting_number,
            visiting_time,
            occupation_time: self.occupation.iter().map(|(k, m)| (*k, m.estimate(r))).collect(),
            exit_rate: self.exit_rate,
            absorbed_at: self.absorbed_at,
        }
    }
}

/// Results of [`simulate_return`]. Per-state estimates are conditional on
/// the trajectory returning before the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStats {
    pub start: StateLabel,
    /// Censoring time of trajectories that did not return.
    pub horizon: f64,
    pub n_trajectories: u64,
    pub returned_count: u64,
    pub absorbed_count: u64,
    pub censored_count: u64,
    pub return_time: Estimate,
    /// `Σ_ω N_ω / γ_{ω→}` per trajectory.
    pub rb_return_time: Estimate,
    /// `N̂_ω`: visits to `ω` before return, the start counting once.
    pub visiting_number: BTreeMap<StateLabel, Estimate>,
    /// `T̂_ω = N̂_ω / γ_{ω→}`, the conditional expectation of the occupation
    /// time given the visit counts.
    pub visiting_time: BTreeMap<StateLabel, Estimate>,
    /// Sampled occupation time before return.
    pub occupation_time: BTreeMap<StateLabel, Estimate>,
    pub exit_rate: BTreeMap<StateLabel, f64>,
    /// States with no exit where trajectories got stuck.
    pub absorbed_at: BTreeMap<StateLabel, u64>,
}

impl TrajectoryStats {
    pub fn returned_fraction(&self) -> f64 {
        self.returned_count as f64 / self.n_trajectories as f64
    }
}

/// The argument checks of [`simulate_return`], for callers that schedule
/// [`return_chunk`] themselves.
pub fn check_return_args<N: Network + ?Sized>(net: &N, start: StateLabel, horizon: f64, n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one trajectory"));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidTime(horizon));
    }
    if start.kind() != net.label_kind() {
        return Err(Error::MixedLabelKinds {
            expected: net.label_kind(),
            found: start.kind(),
        });
    }
    if net.exit_rate(start) <= 0.0 {
        return Err(Error::NoExitRate(start));
    }
    Ok(())
}

/// Picks the target of a jump out of a state with total rate `exit`.
fn choose(edges: &[(StateLabel, f64)], exit: f64, u: f64) -> StateLabel {
    let mut target = u * exit;
    for &(s, r) in edges {
        if target <= r {
            return s;
        }
        target -= r;
    }
    edges[edges.len() - 1].0
}

fn run_return<N, F>(
    net: &N,
    start: StateLabel,
    horizon: f64,
    rng: &mut ChaCha8Rng,
    index: u64,
    tally: &mut Tally,
    exit_rates: &mut BTreeMap<StateLabel, f64>,
    observer: &mut F,
) -> Outcome
where
    N: Network + ?Sized,
    F: FnMut(Event),
{
    tally.visits.clear();
    tally.occupation.clear();
    tally.visits.insert(start, 1);
    observer((index, start, 0.0));
    let mut edges = Vec::new();
    let mut state = start;
    let mut t = 0.0;
    for _ in 0..MAX_JUMPS {
        net.out_edges_into(state, &mut edges);
        let exit: f64 = edges.iter().map(|e| e.1).sum();
        exit_rates.insert(state, exit);
        if exit <= 0.0 {
            return Outcome::Absorbed { at: state };
        }
        let tau = -libm::log(unit_open_closed(rng)) / exit;
        if t + tau > horizon {
            *tally.occupation.entry(state).or_default() += horizon - t;
            return Outcome::Censored;
        }
        t += tau;
        *tally.occupation.entry(state).or_default() += tau;
        let next = choose(&edges, exit, unit_open_closed(rng));
        observer((index, next, t));
        if next == start {
            return Outcome::Returned { time: t };
        }
        *tally.visits.entry(next).or_default() += 1;
        state = next;
    }
    Outcome::Censored
}

/// Runs trajectories `range` and returns their merged sums. `observer`
/// sees every state entered, including the start at time 0.
pub fn return_chunk<N, F>(
    net: &N,
    start: StateLabel,
    horizon: f64,
    seed: u64,
    range: Range<u64>,
    mut observer: F,
) -> ReturnAccumulator
where
    N: Network + ?Sized,
    F: FnMut(Event),
{
    let mut acc = ReturnAccumulator::default();
    let mut tally = Tally {
        visits: BTreeMap::new(),
        occupation: BTreeMap::new(),
    };
    for k in range {
        let mut rng = trajectory_rng(seed, k);
        acc.n += 1;
        match run_return(
            net,
            start,
            horizon,
            &mut rng,
            k,
            &mut tally,
            &mut acc.exit_rate,
            &mut observer,
        ) {
            Outcome::Returned { time } => {
                acc.returned += 1;
                acc.return_time.add(time);
                let mut rb = CompensatedSum::new();
                for (s, &count) in &tally.visits {
                    acc.visits.entry(*s).or_default().add(count as f64);
                    rb.add(count as f64 / acc.exit_rate[s]);
                }
                acc.rb_return_time.add(rb.value());
                for (s, &time) in &tally.occupation {
                    acc.occupation.entry(*s).or_default().add(time);
                }
            }
            Outcome::Absorbed { at } => {
                acc.absorbed += 1;
                *acc.absorbed_at.entry(at).or_default() += 1;
            }
            Outcome::Censored => acc.censored += 1,
        }
    }
    acc
}

/// Simulates `n` trajectories from `start` until they first return to it,
/// get absorbed elsewhere or pass `horizon`.
pub fn simulate_return<N: Network + ?Sized>(
    net: &N,
    start: StateLabel,
    horizon: f64,
    n: u64,
    seed: u64,
) -> Result<TrajectoryStats> {
    simulate_return_observed(net, start, horizon, n, seed, |_| {})
}

/// [`simulate_return`] reporting every event to `observer` in trajectory order.
pub fn simulate_return_observed<N, F>(
    net: &N,
    start: StateLabel,
    horizon: f64,
    n: u64,
    seed: u64,
    mut observer: F,
) -> Result<TrajectoryStats>
where
    N: Network + ?Sized,
    F: FnMut(Event),
{
    check_return_args(net, start, horizon, n)?;
    let mut total = ReturnAccumulator::default();
    for range in chunks(n) {
        total.merge(&return_chunk(net, start, horizon, seed, range, &mut observer));
    }
    Ok(total.finish(start, horizon))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    /// Mean return time against `Σ_ω T̂_ω`.
    pub return_time: IdentityCheck,
    /// `T̂_ω γ_{ω→}` against `N̂_ω`, per state.
    pub per_state: Vec<(StateLabel, IdentityCheck)>,
    pub passed: bool,
}

/// Checks `E[t_R] = Σ_ω T_ω` within three combined standard errors, and
/// `T̂_ω γ_{ω→} = N̂_ω` exactly.
///
/// With a single returned trajectory there is no standard error; the sum
/// identity is then checked against the sampled occupation times, which
/// add up to the return time by construction.
pub fn consistency_check(stats: &TrajectoryStats) -> Result<ConsistencyReport> {
    if stats.returned_count == 0 {
        return Err(Error::InvalidArgument("no trajectory returned"));
    }
    let lhs = stats.return_time.mean;
    let return_time = if stats.returned_count >= 2 {
        let rhs: f64 = stats
            .visiting_time
            .values()
            .map(|e| e.mean)
            .collect::<CompensatedSum>()
            .value();
        let se = libm::hypot(stats.return_time.stderr, stats.rb_return_time.stderr);
        let tolerance = 3.0 * se;
        IdentityCheck {
            lhs,
            rhs,
            tolerance,
            passed: (lhs - rhs).abs() <= tolerance,
        }
    } else {
        let rhs: f64 = stats
            .occupation_time
            .values()
            .map(|e| e.mean)
            .collect::<CompensatedSum>()
            .value();
        let tolerance = 1e-12 * lhs.abs();
        IdentityCheck {
            lhs,
            rhs,
            tolerance,
            passed: (lhs - rhs).abs() <= tolerance,
        }
    };
    let per_state: Vec<_> = stats
        .visiting_time
        .iter()
        .map(|(s, t)| {
            let lhs = t.mean * stats.exit_rate[s];
            let rhs = stats.visiting_number[s].mean;
            (
                *s,
                IdentityCheck {
                    lhs,
                    rhs,
                    tolerance: 0.0,
                    passed: lhs == rhs,
                },
            )
        })
        .collect();
    let passed = return_time.passed && per_state.iter().all(|(_, c)| c.passed);
    Ok(ConsistencyReport {
        return_time,
        per_state,
        passed,
    })
}

/// Occupation-time frequencies of one long trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedStationary {
    /// Fraction of time per state with a batch-means standard error.
    pub frequencies: BTreeMap<StateLabel, Estimate>,
    /// `‖first half − second half‖₁` of the time histogram.
    pub half_difference: f64,
    pub converged: bool,
    pub jumps: u64,
}

/// Number of time batches for the standard error.
pub const BATCHES: usize = 20;
/// Largest half-to-half discrepancy still reported as converged.
pub const HALF_DIFFERENCE_TOL: f64 = 0.1;

impl SimulatedStationary {
    /// The frequencies on `f`, without renormalization.
    pub fn on(&self, f: &FiniteSubset) -> Result<ProbVec> {
        let values = f
            .members()
            .iter()
            .map(|l| self.frequencies.get(l).map_or(0.0, |e| e.mean))
            .collect();
        ProbVec::new(f.clone(), values)
    }

    pub fn stderr_of(&self, l: &StateLabel) -> f64 {
        self.frequencies.get(l).map_or(0.0, |e| e.stderr)
    }
}

/// Runs one trajectory for `total_time` and histograms where it spends time.
pub fn stationary_from_simulation<N: Network + ?Sized>(
    net: &N,
    start: StateLabel,
    total_time: f64,
    seed: u64,
) -> Result<SimulatedStationary> {
    if !(total_time > 0.0 && total_time.is_finite()) {
        return Err(Error::InvalidTime(total_time));
    }
    let batch_len = total_time / BATCHES as f64;
    let mut batches: Vec<BTreeMap<StateLabel, f64>> = (0..BATCHES).map(|_| BTreeMap::new()).collect();
    let mut rng = trajectory_rng(seed, 0);
    let mut edges = Vec::new();
    let mut state = start;
    let mut t = 0.0;
    let mut jumps = 0;
    // Spreads the stay [t, t + d) over the batches it overlaps.
    let deposit = |state: StateLabel, from: f64, to: f64, batches: &mut Vec<BTreeMap<StateLabel, f64>>| {
        let mut a = from;
        while a < to {
            let b = ((libm::floor(a / batch_len) as usize).min(BATCHES - 1)) as usize;
            let end = if b == BATCHES - 1 {
                to
            } else {
                ((b + 1) as f64 * batch_len).min(to)
            };
            *batches[b].entry(state).or_default() += end - a;
            if end <= a {
                break;
            }
            a = end;
        }
    };
    while t < total_time {
        net.out_edges_into(state, &mut edges);
        let exit: f64 = edges.iter().map(|e| e.1).sum();
        let tau = if exit > 0.0 {
            -libm::log(unit_open_closed(&mut rng)) / exit
        } else {
            f64::INFINITY
        };
        let end = (t + tau).min(total_time);
        deposit(state, t, end, &mut batches);
        if end >= total_time {
            break;
        }
        t = end;
        state = choose(&edges, exit, unit_open_closed(&mut rng));
        jumps += 1;
    }
    let mut states: Vec<StateLabel> = batches.iter().flat_map(|b| b.keys().copied()).collect();
    states.sort_unstable();
    states.dedup();
    let mut frequencies = BTreeMap::new();
    let mut half_difference = CompensatedSum::new();
    let half = BATCHES / 2;
    for s in &states {
        let per_batch: Vec<f64> = batches
            .iter()
            .map(|b| b.get(s).copied().unwrap_or(0.0) / batch_len)
            .collect();
        let mut m = MomentSum::default();
        per_batch.iter().for_each(|&x| m.add(x));
        frequencies.insert(*s, m.estimate(BATCHES as u64));
        let first: f64 = per_batch[..half].iter().sum::<f64>() / half as f64;
        let second: f64 = per_batch[half..].iter().sum::<f64>() / (BATCHES - half) as f64;
        half_difference.add((first - second).abs());
    }
    let half_difference = half_difference.value();
    Ok(SimulatedStationary {
        frequencies,
        half_difference,
        converged: half_difference <= HALF_DIFFERENCE_TOL,
        jumps,
    })
}

/// Mergeable sums behind [`AbsorptionStats`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AbsorptionAccumulator {
    n: u64,
    absorbed: u64,
    final_states: BTreeMap<StateLabel, u64>,
}

impl AbsorptionAccumulator {
    pub fn merge(&mut self, other: &AbsorptionAccumulator) {
        self.n += other.n;
        self.absorbed += other.absorbed;
        for (k, v) in &other.final_states {
            *self.final_states.entry(*k).or_default() += v;
        }
    }

    pub fn finish(self, horizon: f64) -> AbsorptionStats {
        let n = self.n as f64;
        let p = self.absorbed as f64 / n;
        AbsorptionStats {
            horizon,
            n_trajectories: self.n,
            absorbed_count: self.absorbed,
            absorbed_fraction: Estimate {
                mean: p,
                stderr: libm::sqrt(p * (1.0 - p) / n),
            },
            final_states: self.final_states,
        }
    }
}

/// Where trajectories are at a fixed horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionStats {
    pub horizon: f64,
    pub n_trajectories: u64,
    /// Trajectories that reached a state without exits.
    pub absorbed_count: u64,
    pub absorbed_fraction: Estimate,
    /// State occupied at the horizon, per trajectory.
    pub final_states: BTreeMap<StateLabel, u64>,
}

impl AbsorptionStats {
    /// Fraction of trajectories outside `f` at the horizon.
    pub fn fraction_outside(&self, f: &FiniteSubset) -> f64 {
        let inside: u64 = self
            .final_states
            .iter()
            .filter(|(s, _)| f.contains(s))
            .map(|(_, c)| *c)
            .sum();
        (self.n_trajectories - inside) as f64 / self.n_trajectories as f64
    }
}

/// Runs trajectories `range` up to `horizon`.
pub fn absorption_chunk<N: Network + ?Sized>(
    net: &N,
    start: StateLabel,
    horizon: f64,
    seed: u64,
    range: Range<u64>,
) -> AbsorptionAccumulator {
    let mut acc = AbsorptionAccumulator::default();
    let mut edges = Vec::new();
    for k in range {
        let mut rng = trajectory_rng(seed, k);
        acc.n += 1;
        let mut state = start;
        let mut t = 0.0;
        for _ in 0..MAX_JUMPS {
            net.out_edges_into(state, &mut edges);
            let exit: f64 = edges.iter().map(|e| e.1).sum();
            if exit <= 0.0 {
                acc.absorbed += 1;
                break;
            }
            t += -libm::log(unit_open_closed(&mut rng)) / exit;
            if t > horizon {
                break;
            }
            state = choose(&edges, exit, unit_open_closed(&mut rng));
        }
        *acc.final_states.entry(state).or_default() += 1;
    }
    acc
}

/// Simulates `n` trajectories from `start` for time `horizon` and records
/// absorption and final positions. Trajectory `k` uses the same stream as
/// in [`simulate_return`], so runs at different horizons share paths.
pub fn simulate_absorption<N: Network + ?Sized>(
    net: &N,
    start: StateLabel,
    horizon: f64,
    n: u64,
    seed: u64,
) -> Result<AbsorptionStats> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one trajectory"));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidTime(horizon));
    }
    let mut total = AbsorptionAccumulator::default();
    for range in chunks(n) {
        total.merge(&absorption_chunk(net, start, horizon, seed, range));
    }
    Ok(total.finish(horizon))
}
