//! Thermodynamic-limit sweeps over nested windows and the four-limit
//! classification.
//!
//! Neither iterated limit can be computed on the infinite network. The
//! thermodynamic-then-time direction is judged by a Cauchy proxy on the
//! window stationary vectors. The time-then-thermodynamic direction is
//! judged by the long-time limit on the largest window together with a
//! simulated estimate of the mass that leaves that window. Both are proxies,
//! and every [`Verdict`] says so.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::evolution::{evolve, long_time_limit, LongTimeOptions, ProbVec, DENSE_LIMIT};
use crate::generator::{generator_distance, truncate_subnetwork, Scheme, SparseGenerator};
use crate::label::StateLabel;
use crate::network::{Network, WindowKind};
use crate::presets::window_sequence;
use crate::recurrence::{simulate_absorption, AbsorptionStats};
use crate::stationary::{stationary_kernel, KERNEL_LIMIT};
use crate::subset::FiniteSubset;

/// How `P₀^{[F]}` is built on each window before normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialRule {
    PointMass(StateLabel),
    /// Weight `ratio^k` on the state of canonical index `k`.
    Geometric {
        ratio: f64,
    },
}

impl InitialRule {
    pub fn on(&self, f: &FiniteSubset) -> Result<ProbVec> {
        match *self {
            InitialRule::PointMass(at) => {
                ProbVec::restricted_from(f, |l| if *l == at { 1.0 } else { 0.0 })?.normalized()
            }
            InitialRule::Geometric { ratio } => {
                if !(ratio > 0.0 && ratio < 1.0) {
                    return Err(Error::InvalidParameter {
                        name: "ratio",
                        value: ratio,
                        reason: "must lie in (0, 1)",
                    });
                }
                ProbVec::restricted_from(f, |l| libm::pow(ratio, l.canonical() as f64))?.normalized()
            }
        }
    }
}

/// Settings of the Cauchy proxy for "this sequence has a limit".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyProxy {
    /// Number of trailing differences that must lie below `tol`.
    pub k: usize,
    /// Leading differences exempt from the monotonicity test.
    pub burn_in: usize,
    pub tol: f64,
}

impl Default for CauchyProxy {
    fn default() -> Self {
        CauchyProxy {
            k: 5,
            burn_in: 3,
            tol: 1e-6,
        }
    }
}

/// Simulated trajectories on the full network, used to estimate how much
/// mass leaves the largest window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakProbe {
    pub start: StateLabel,
    pub n: u64,
    pub horizon: f64,
    pub seed: u64,
    /// Largest leak still compatible with an infinite-network time limit.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub window_kind: WindowKind,
    /// Window parameters `n`, increasing.
    pub sizes: Vec<u64>,
    pub t_grid: Vec<f64>,
    pub initial: InitialRule,
    pub evolve_tol: f64,
    pub long_time: LongTimeOptions,
    pub spectral: bool,
    pub cauchy: CauchyProxy,
    pub leak_probe: Option<LeakProbe>,
    /// Largest `‖·‖₁` gap at which the two iterated limits count as equal.
    pub agreement_tol: f64,
}

impl SweepConfig {
    pub fn new(window_kind: WindowKind, sizes: Vec<u64>, t_grid: Vec<f64>, initial: InitialRule) -> Self {
        SweepConfig {
            window_kind,
            sizes,
            t_grid,
            initial,
            evolve_tol: 1e-12,
            long_time: LongTimeOptions::default(),
            spectral: true,
            cauchy: CauchyProxy::default(),
            leak_probe: None,
            agreement_tol: 1e-6,
        }
    }

    fn check(&self) -> Result<()> {
        if self.sizes.len() < 2 {
            return Err(Error::InvalidArgument("a sweep needs at least two windows"));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("window sizes must increase"));
        }
        if let Some(&t) = self.t_grid.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            return Err(Error::InvalidTime(t));
        }
        if !(self.agreement_tol > 0.0) {
            return Err(Error::InvalidTolerance(self.agreement_tol));
        }
        if self.cauchy.k == 0 || !(self.cauchy.tol > 0.0) {
            return Err(Error::InvalidArgument("Cauchy proxy needs k ≥ 1 and tol > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StationarySource {
    KernelSolve,
    LongTimeLimit,
}

/// Everything computed on a single window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowData {
    pub generator: SparseGenerator,
    pub initial: ProbVec,
    /// `P^F(t)` for each time of the grid.
    pub evolved: Vec<ProbVec>,
    pub stationary: ProbVec,
    pub stationary_source: StationarySource,
    pub spectral_gap: Option<f64>,
}

impl WindowData {
    pub fn subset(&self) -> &FiniteSubset {
        self.generator.subset()
    }
}

/// Truncates to `f` and computes evolution, stationary vector and gap.
pub fn analyze_window<N: Network + ?Sized>(net: &N, f: &FiniteSubset, cfg: &SweepConfig) -> Result<WindowData> {
    let generator = truncate_subnetwork(net, f);
    let initial = cfg.initial.on(f)?;
    let evolved = cfg
        .t_grid
        .iter()
        .map(|&t| evolve(&generator, &initial, t, cfg.evolve_tol).map(|r| r.result))
        .collect::<Result<Vec<_>>>()?;
    let (stationary, stationary_source) = if generator.dim() <= KERNEL_LIMIT {
        (stationary_kernel(&generator)?.vector, StationarySource::KernelSolve)
    } else {
        (
            long_time_limit(&generator, &initial, &cfg.long_time)?.vector,
            StationarySource::LongTimeLimit,
        )
    };
    let spectral_gap = if cfg.spectral && generator.dim() <= DENSE_LIMIT {
        Some(spectral_gap(&generator)?)
    } else {
        None
    };
    Ok(WindowData {
        generator,
        initial,
        evolved,
        stationary,
        stationary_source,
        spectral_gap,
    })
}

/// `min −Re λ` over the eigenvalues of `g` outside the numerical kernel,
/// or `+∞` when every eigenvalue is in the kernel.
pub fn spectral_gap(g: &SparseGenerator) -> Result<f64> {
    if g.scheme() != Scheme::Subnetwork {
        return Err(Error::SchemeMismatch {
            expected: Scheme::Subnetwork,
            found: g.scheme(),
        });
    }
    if g.dim() > DENSE_LIMIT {
        return Err(Error::DimensionTooLarge {
            dim: g.dim(),
            limit: DENSE_LIMIT,
        });
    }
    let cutoff = 1e-10 * g.norms().op1;
    let eig = g.to_dense().complex_eigenvalues();
    Ok(eig
        .iter()
        .filter(|l| libm::hypot(l.re, l.im) >= cutoff && cutoff > 0.0)
        .map(|l| -l.re)
        .fold(f64::INFINITY, f64::min))
}

/// The theorem bound `(‖ΔP₀‖₁ + t‖ΔΓ‖₁,₁) e^{t‖Γ‖₁,₁}`.
pub fn groenwall_bound(initial_diff: f64, generator_diff: f64, op11: f64, t: f64) -> f64 {
    let base = initial_diff + t * generator_diff;
    if base == 0.0 {
        0.0
    } else {
        base * libm::exp(t * op11)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakMeasurement {
    /// Fraction of simulated trajectories outside the largest window.
    pub fraction: f64,
    pub stderr: f64,
    pub horizon: f64,
    pub n: u64,
}

impl LeakMeasurement {
    pub fn from_stats(stats: &AbsorptionStats, f: &FiniteSubset) -> LeakMeasurement {
        let p = stats.fraction_outside(f);
        LeakMeasurement {
            fraction: p,
            stderr: libm::sqrt(p * (1.0 - p) / stats.n_trajectories as f64),
            horizon: stats.horizon,
            n: stats.n_trajectories,
        }
    }
}

/// Runs the leak probe against window `f`.
pub fn measure_leak<N: Network + ?Sized>(net: &N, f: &FiniteSubset, probe: &LeakProbe) -> Result<LeakMeasurement> {
    let stats = simulate_absorption(net, probe.start, probe.horizon, probe.n, probe.seed)?;
    Ok(LeakMeasurement::from_stats(&stats, f))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LongTimeProbe {
    pub converged: bool,
    pub t_final: f64,
    pub steps: usize,
    pub last_diff: f64,
    /// `‖P^F(∞) − P*^F‖₁` on the largest window.
    pub distance_to_stationary: f64,
    pub vector: ProbVec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub network: String,
    pub window_kind: WindowKind,
    pub sizes: Vec<u64>,
    /// `|F_n|`.
    pub window_sizes: Vec<usize>,
    pub t_grid: Vec<f64>,
    /// Row `n`: `‖P^{F_{n+1}}(t) − P^{F_n}(t)‖₁` over the time grid.
    pub evolve_diffs: Vec<Vec<f64>>,
    pub groenwall_bounds: Vec<Vec<f64>>,
    /// `‖P₀^{[F_{n+1}]} − P₀^{[F_n]}‖₁`.
    pub initial_diffs: Vec<f64>,
    /// `‖Γ^{[F_{n+1}]} − Γ^{[F_n]}‖₁,₁`.
    pub generator_diffs: Vec<f64>,
    /// `‖Γ^{[F_n]}‖₁,₁`.
    pub op11: Vec<f64>,
    pub stationary_diffs: Vec<f64>,
    pub stationary_sources: Vec<StationarySource>,
    pub spectral_gaps: Vec<Option<f64>>,
    /// `‖P^{F}(t_{k+1}) − P^{F}(t_k)‖₁` on the largest window.
    pub time_diffs: Vec<f64>,
    pub long_time: LongTimeProbe,
    pub leak: Option<LeakMeasurement>,
    pub verdict: Verdict,
}

impl SweepReport {
    /// Grid points `(pair, time index)` where the measured difference exceeds
    /// the bound by more than `slack`.
    pub fn bound_violations(&self, slack: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, (d, b)) in self.evolve_diffs.iter().zip(&self.groenwall_bounds).enumerate() {
            for (j, (d, b)) in d.iter().zip(b).enumerate() {
                if !(*d <= *b + slack) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Runs every window serially, then the leak probe, then assembles the
/// report.
pub fn thermodynamic_sweep<N: Network + ?Sized>(net: &N, cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.check()?;
    let windows = window_sequence(net, cfg.window_kind, &cfg.sizes)?;
    let data = windows
        .iter()
        .map(|f| analyze_window(net, f, cfg))
        .collect::<Result<Vec<_>>>()?;
    let leak = match &cfg.leak_probe {
        Some(probe) => Some(measure_leak(net, &windows[windows.len() - 1], probe)?),
        None => None,
    };
    assemble_report(net.name(), cfg, &data, leak)
}

/// Builds a report from per-window results given in window order.
pub fn assemble_report(
    network: &str,
    cfg: &SweepConfig,
    data: &[WindowData],
    leak: Option<LeakMeasurement>,
) -> Result<SweepReport> {
    cfg.check()?;
    if data.len() != cfg.sizes.len() {
        return Err(Error::DimensionMismatch {
            expected: cfg.sizes.len(),
            found: data.len(),
        });
    }
    let op11: Vec<f64> = data.iter().map(|w| w.generator.norms().op11).collect();
    let mut evolve_diffs = Vec::new();
    let mut groenwall_bounds = Vec::new();
    let mut initial_diffs = Vec::new();
    let mut generator_diffs = Vec::new();
    let mut stationary_diffs = Vec::new();
    for (i, pair) in data.windows(2).enumerate() {
        let (small, large) = (&pair[0], &pair[1]);
        let dp0 = small.initial.l1_distance(&large.initial)?;
        let dg = generator_distance(&small.generator, &large.generator)?;
        let diffs = small
            .evolved
            .iter()
            .zip(&large.evolved)
            .map(|(a, b)| a.l1_distance(b))
            .collect::<Result<Vec<_>>>()?;
        groenwall_bounds.push(
            cfg.t_grid
                .iter()
                .map(|&t| groenwall_bound(dp0, dg, op11[i], t))
                .collect(),
        );
        evolve_diffs.push(diffs);
        initial_diffs.push(dp0);
        generator_diffs.push(dg);
        stationary_diffs.push(small.stationary.l1_distance(&large.stationary)?);
    }
    let last = &data[data.len() - 1];
    let time_diffs = last
        .evolved
        .windows(2)
        .map(|w| w[0].l1_distance(&w[1]))
        .collect::<Result<Vec<_>>>()?;
    let lt = long_time_limit(&last.generator, &last.initial, &cfg.long_time)?;
    let long_time = LongTimeProbe {
        converged: lt.converged,
        t_final: lt.t_final,
        steps: lt.steps,
        last_diff: lt.last_diff,
        distance_to_stationary: lt.vector.l1_distance(&last.stationary)?,
        vector: lt.vector,
    };
    let verdict = four_limit_verdict_from(&stationary_diffs, &long_time, leak.as_ref(), cfg);
    Ok(SweepReport {
        network: String::from(network),
        window_kind: cfg.window_kind,
        sizes: cfg.sizes.clone(),
        window_sizes: data.iter().map(|w| w.subset().len()).collect(),
        t_grid: cfg.t_grid.clone(),
        evolve_diffs,
        groenwall_bounds,
        initial_diffs,
        generator_diffs,
        op11,
        stationary_diffs,
        stationary_sources: data.iter().map(|w| w.stationary_source).collect(),
        spectral_gaps: data.iter().map(|w| w.spectral_gap).collect(),
        time_diffs,
        long_time,
        leak,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitStatus {
    Exists,
    Fails,
    Inconclusive,
}

/// Outcome of the Cauchy proxy on a sequence of successive differences.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyOutcome {
    pub status: LimitStatus,
    pub monotone: bool,
    pub tail_below_tol: bool,
}

/// The sequence counts as convergent when its last `k` differences are below
/// `tol` and the differences after `burn_in` never grow beyond roundoff.
/// Growth after burn-in makes the outcome inconclusive.
pub fn cauchy_proxy(diffs: &[f64], proxy: &CauchyProxy) -> CauchyOutcome {
    if diffs.len() < proxy.burn_in + proxy.k {
        return CauchyOutcome {
            status: LimitStatus::Inconclusive,
            monotone: false,
            tail_below_tol: false,
        };
    }
    let floor = proxy.tol * 1e-2;
    let monotone = diffs[proxy.burn_in..]
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-6) + floor);
    let tail_below_tol = diffs[diffs.len() - proxy.k..].iter().all(|&d| d <= proxy.tol);
    let status = match (tail_below_tol, monotone) {
        (true, true) => LimitStatus::Exists,
        (_, false) => LimitStatus::Inconclusive,
        (false, true) => LimitStatus::Fails,
    };
    CauchyOutcome {
        status,
        monotone,
        tail_below_tol,
    }
}

/// Rows of the four-limit case table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictCase {
    /// Both limits exist and agree.
    I,
    /// Both limits exist and differ.
    II,
    /// Neither limit exists.
    III,
    /// Only the time limit of the infinite network exists.
    IV,
    /// Only the limit of the window stationary vectors exists.
    V,
    Inconclusive,
}

impl VerdictCase {
    pub fn tag(&self) -> &'static str {
        match self {
            VerdictCase::I => "i",
            VerdictCase::II => "ii",
            VerdictCase::III => "iii",
            VerdictCase::IV => "iv",
            VerdictCase::V => "v",
            VerdictCase::Inconclusive => "inconclusive",
        }
    }
}

pub const PROXY_NOTE: &str = "proxy: time-then-size uses the long-time limit on the largest window plus a \
simulated leak out of that window; size-then-time uses a Cauchy test on window stationary vectors";

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub case: VerdictCase,
    /// `lim_t lim_F`, judged on the largest window and the leak.
    pub time_then_thermo: LimitStatus,
    /// `lim_F lim_t`, judged by the Cauchy proxy.
    pub thermo_then_time: LimitStatus,
    pub cauchy: CauchyOutcome,
    pub long_time_converged: bool,
    pub leak: Option<f64>,
    /// `‖P^F(∞) − P*^F‖₁` on the largest window.
    pub limits_distance: f64,
    pub note: &'static str,
}

/// Classifies a finished sweep.
pub fn four_limit_verdict(report: &SweepReport, cfg: &SweepConfig) -> Verdict {
    four_limit_verdict_from(&report.stationary_diffs, &report.long_time, report.leak.as_ref(), cfg)
}

fn four_limit_verdict_from(
    stationary_diffs: &[f64],
    long_time: &LongTimeProbe,
    leak: Option<&LeakMeasurement>,
    cfg: &SweepConfig,
) -> Verdict {
    let cauchy = cauchy_proxy(stationary_diffs, &cfg.cauchy);
    let thermo_then_time = cauchy.status;
    let threshold = cfg.leak_probe.map(|p| p.threshold);
    let time_then_thermo = match (leak, threshold) {
        (Some(l), Some(th)) => {
            if long_time.converged && l.fraction <= th {
                LimitStatus::Exists
            } else {
                LimitStatus::Fails
            }
        }
        _ if !long_time.converged => LimitStatus::Fails,
        _ => LimitStatus::Inconclusive,
    };
    use LimitStatus::*;
    let case = match (time_then_thermo, thermo_then_time) {
        (Exists, Exists) if long_time.distance_to_stationary <= cfg.agreement_tol => VerdictCase::I,
        (Exists, Exists) => VerdictCase::II,
        (Fails, Fails) => VerdictCase::III,
        (Exists, Fails) => VerdictCase::IV,
        (Fails, Exists) => VerdictCase::V,
        _ => VerdictCase::Inconclusive,
    };
    Verdict {
        case,
        time_then_thermo,
        thermo_then_time,
        cauchy,
        long_time_converged: long_time.converged,
        leak: leak.map(|l| l.fraction),
        limits_distance: long_time.distance_to_stationary,
        note: PROXY_NOTE,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::StateLabel::Nat;
    use crate::network::EdgeListNetwork;
    use crate::presets::{ChainN0, RateSequence, TrapChain};
    use alloc::vec;

    fn two_state(a: f64, b: f64) -> SparseGenerator {
        let net = EdgeListNetwork::new("two", [(Nat(0), Nat(1), a), (Nat(1), Nat(0), b)]).unwrap();
        truncate_subnetwork(&net, &net.all_states())
    }

    #[test]
    fn two_state_gap_is_rate_sum() {
        let gap = spectral_gap(&two_state(2.0, 0.5)).unwrap();
        assert!((gap - 2.5).abs() < 1e-12, "{gap}");
    }

    #[test]
    fn zero_generator_gap_is_infinite() {
        let net = EdgeListNetwork::new("z", [(Nat(0), Nat(1), 1.0)]).unwrap();
        let g = truncate_subnetwork(&net, &FiniteSubset::nat_range(0, 0).unwrap());
        assert_eq!(spectral_gap(&g).unwrap(), f64::INFINITY);
    }

    #[test]
    fn bound_handles_zero_base() {
        assert_eq!(groenwall_bound(0.0, 0.0, 1e6, 1e6), 0.0);
        assert_eq!(groenwall_bound(0.5, 0.0, 0.0, 3.0), 0.5);
    }

    #[test]
    fn cauchy_proxy_outcomes() {
        let p = CauchyProxy::default();
        let geometric: Vec<f64> = (0..10).map(|i| libm::pow(0.1, (i + 2) as f64)).collect();
        assert_eq!(cauchy_proxy(&geometric, &p).status, LimitStatus::Exists);
        assert_eq!(cauchy_proxy(&[2.0; 10], &p).status, LimitStatus::Fails);
        assert_eq!(cauchy_proxy(&geometric[..7], &p).status, LimitStatus::Inconclusive);
        let mut bumpy = geometric.clone();
        bumpy[6] = 1e-2;
        assert_eq!(cauchy_proxy(&bumpy, &p).status, LimitStatus::Inconclusive);
    }

    #[test]
    fn chain_sweep_commutes() {
        let net = ChainN0::new(0.2, RateSequence::Geometric(0.9)).unwrap();
        let mut cfg = SweepConfig::new(
            WindowKind::Prefixes,
            (1..=10).map(|k| 4 * k).collect(),
            vec![0.0, 1.0, 10.0],
            InitialRule::PointMass(Nat(0)),
        );
        cfg.leak_probe = Some(LeakProbe {
            start: Nat(0),
            n: 2000,
            horizon: 100.0,
            seed: 1,
            threshold: 0.01,
        });
        let r = thermodynamic_sweep(&net, &cfg).unwrap();
        assert!(r.bound_violations(1e-9).is_empty());
        assert_eq!(r.verdict.case, VerdictCase::I, "{:?}", r.verdict);
        assert!(r.spectral_gaps.iter().all(|g| g.unwrap() > 0.0));
        assert_eq!(four_limit_verdict(&r, &cfg), r.verdict);
    }

    #[test]
    fn trap_sweep_is_case_v() {
        let net = TrapChain::new(0.75, 0.9).unwrap();
        let mut cfg = SweepConfig::new(
            WindowKind::Prefixes,
            (2..=12).collect(),
            vec![1.0, 10.0],
            InitialRule::PointMass(Nat(1)),
        );
        cfg.leak_probe = Some(LeakProbe {
            start: Nat(1),
            n: 2000,
            horizon: 1e3,
            seed: 2,
            threshold: 0.05,
        });
        let r = thermodynamic_sweep(&net, &cfg).unwrap();
        assert!(r.stationary_diffs.iter().all(|&d| d == 0.0));
        assert_eq!(r.verdict.case, VerdictCase::V, "{:?}", r.verdict);
    }

    #[test]
    fn config_checks() {
        let net = ChainN0::new(0.2, RateSequence::Geometric(0.9)).unwrap();
        let cfg = SweepConfig::new(WindowKind::Prefixes, vec![3], vec![1.0], InitialRule::PointMass(Nat(0)));
        assert!(thermodynamic_sweep(&net, &cfg).is_err());
        let cfg = SweepConfig::new(
            WindowKind::Prefixes,
            vec![3, 2],
            vec![1.0],
            InitialRule::PointMass(Nat(0)),
        );
        assert!(thermodynamic_sweep(&net, &cfg).is_err());
        let cfg = SweepConfig::new(
            WindowKind::Prefixes,
            vec![2, 3],
            vec![1.0],
            InitialRule::PointMass(Nat(9)),
        );
        assert_eq!(thermodynamic_sweep(&net, &cfg).unwrap_err(), Error::ZeroMassWindow);
    }
}
