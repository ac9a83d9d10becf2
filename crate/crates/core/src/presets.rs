//! Example networks with closed-form reference solutions.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::evolution::ProbVec;
use crate::label::{LabelKind, StateLabel};
use crate::linalg::log_sum_exp;
use crate::network::{default_window, Network, WindowKind};
use crate::subset::FiniteSubset;

/// A positive sequence `λ_n`, `n ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateSequence {
    /// `λ_n = c`.
    Constant(f64),
    /// `λ_n = q^n`.
    Geometric(f64),
    /// `λ_n = q^{n²}`.
    Quadratic(f64),
}

impl RateSequence {
    pub fn ln(&self, n: u64) -> f64 {
        let n = n as f64;
        match *self {
            RateSequence::Constant(c) => libm::log(c),
            RateSequence::Geometric(q) => n * libm::log(q),
            RateSequence::Quadratic(q) => n * n * libm::log(q),
        }
    }

    pub fn at(&self, n: u64) -> f64 {
        libm::exp(self.ln(n))
    }

    /// `lim λ_n^{1/n}`.
    pub fn root_limit(&self) -> f64 {
        match *self {
            RateSequence::Constant(_) => 1.0,
            RateSequence::Geometric(q) => q,
            RateSequence::Quadratic(_) => 0.0,
        }
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        let (v, ok) = match *self {
            RateSequence::Constant(c) => (c, c > 0.0 && c.is_finite()),
            RateSequence::Geometric(q) | RateSequence::Quadratic(q) => (q, q > 0.0 && q <= 1.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name,
                value: v,
                reason: "rate sequence parameter out of range",
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecurrenceClass {
    PositiveRecurrent,
    /// Irreducible, but the candidate stationary vector is not summable.
    NonNormalizable,
    /// Absorbed with probability one.
    AbsorbedAlmostSurely,
    /// Escapes to infinity with positive probability.
    Escaping,
}

fn open_unit(name: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter {
            name,
            value: v,
            reason: "must lie in (0, 1)",
        })
    }
}

/// Birth-death chain on `ℕ₀` with `γ_{n→n+1} = λ_{n+1} x` and
/// `γ_{n+1→n} = λ_n (1 − x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainN0 {
    pub x: f64,
    pub lambda: RateSequence,
}

impl ChainN0 {
    pub fn new(x: f64, lambda: RateSequence) -> Result<Self> {
        open_unit("x", x)?;
        lambda.validate("lambda")?;
        Ok(ChainN0 { x, lambda })
    }

    /// `ln X*(n) = ln(λ_n/λ₀) + n ln(x/(1 − x))`.
    pub fn log_weight(&self, n: u64) -> f64 {
        self.lambda.ln(n) - self.lambda.ln(0) + n as f64 * libm::log(self.x / (1.0 - self.x))
    }

    pub fn recurrence_class(&self) -> RecurrenceClass {
        if self.x < 1.0 / (1.0 + self.lambda.root_limit()) {
            RecurrenceClass::PositiveRecurrent
        } else {
            RecurrenceClass::NonNormalizable
        }
    }
}

impl Network for ChainN0 {
    fn name(&self) -> &str {
        "chain_n0"
    }
    fn label_kind(&self) -> LabelKind {
        LabelKind::Nat
    }
    fn push_out_edges(&self, state: StateLabel, out: &mut Vec<(StateLabel, f64)>) {
        let Some(n) = state.as_nat() else { return };
        if n < u64::MAX {
            out.push((StateLabel::Nat(n + 1), self.lambda.at(n + 1) * self.x));
        }
        if n > 0 {
            out.push((StateLabel::Nat(n - 1), self.lambda.at(n - 1) * (1.0 - self.x)));
        }
    }
}

/// Birth-death chain on `ℤ`: the right half is a [`ChainN0`] with `(x, λ)`,
/// the left half its mirror with `(y, μ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainZ {
    pub x: f64,
    pub y: f64,
    pub lambda: RateSequence,
    pub mu: RateSequence,
}

impl ChainZ {
    pub fn new(x: f64, y: f64, lambda: RateSequence, mu: RateSequence) -> Result<Self> {
        open_unit("x", x)?;
        open_unit("y", y)?;
        lambda.validate("lambda")?;
        mu.validate("mu")?;
        Ok(ChainZ { x, y, lambda, mu })
    }

    pub fn rate(&self, from: i64, to: i64) -> f64 {
        let m = from.unsigned_abs();
        match (from >= 0, to - from) {
            (true, 1) => self.lambda.at(m + 1) * self.x,
            (true, -1) if from > 0 => self.lambda.at(m - 1) * (1.0 - self.x),
            (_, -1) => self.mu.at(m + 1) * self.y,
            (false, 1) => self.mu.at(m - 1) * (1.0 - self.y),
            _ => 0.0,
        }
    }

    pub fn log_weight(&self, z: i64) -> f64 {
        let m = z.unsigned_abs();
        if z >= 0 {
            self.lambda.ln(m) - self.lambda.ln(0) + m as f64 * libm::log(self.x / (1.0 - self.x))
        } else {
            self.mu.ln(m) - self.mu.ln(0) + m as f64 * libm::log(self.y / (1.0 - self.y))
        }
    }

    /// The second, non-summable solution of `Γ Y = 0` with `Y(0) = 0`.
    pub fn y_star(&self, z: i64) -> f64 {
        let g = |a: i64, b: i64| self.rate(a, b);
        if z > 0 {
            let mut s = 0.0;
            for j in 1..=z {
                let mut p = 1.0;
                for e in j..z {
                    p *= g(e, e + 1) / g(e, e - 1);
                }
                s += p;
            }
            s / g(z, z - 1)
        } else if z < 0 {
            let mut s = 0.0;
            for j in 1..=-z {
                let mut p = 1.0;
                for e in (z + 1)..=-j {
                    p *= g(e, e - 1) / g(e, e + 1);
                }
                s += p;
            }
            -s / g(z, z + 1)
        } else {
            0.0
        }
    }

    pub fn recurrence_class(&self) -> RecurrenceClass {
        if self.x < 1.0 / (1.0 + self.lambda.root_limit()) && self.y < 1.0 / (1.0 + self.mu.root_limit()) {
            RecurrenceClass::PositiveRecurrent
        } else {
            RecurrenceClass::NonNormalizable
        }
    }
}

impl Network for ChainZ {
    fn name(&self) -> &str {
        "chain_z"
    }
    fn label_kind(&self) -> LabelKind {
        LabelKind::Int
    }
    fn push_out_edges(&self, state: StateLabel, out: &mut Vec<(StateLabel, f64)>) {
        let Some(z) = state.as_int() else { return };
        if z < i64::MAX {
            out.push((StateLabel::Int(z + 1), self.rate(z, z + 1)));
        }
        if z > i64::MIN {
            out.push((StateLabel::Int(z - 1), self.rate(z, z - 1)));
        }
    }
}

/// Site exponents `c(i)`, `i ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SiteExponent {
    Constant(f64),
    /// `c(i) = i`.
    Linear,
    /// `c(i) = i²`.
    Quadratic,
    /// `c(i) = 2^i`.
    Exponential,
}

impl SiteExponent {
    pub fn at(&self, i: u32) -> f64 {
        match *self {
            SiteExponent::Constant(c) => c,
            SiteExponent::Linear => i as f64,
            SiteExponent::Quadratic => (i as f64) * (i as f64),
            SiteExponent::Exponential => libm::pow(2.0, i as f64),
        }
    }
}

/// Hypercube on bit-vectors: site `i` flips up at rate `q^{c(i)}` and down
/// at rate 1. Sites beyond `n_sites` are frozen.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypercube {
    pub n_sites: u32,
    pub q: f64,
    pub c: SiteExponent,
}

impl Hypercube {
    pub fn new(n_sites: u32, q: f64, c: SiteExponent) -> Result<Self> {
        open_unit("q", q)?;
        if n_sites == 0 || n_sites > 64 {
            return Err(Error::InvalidParameter {
                name: "n_sites",
                value: n_sites as f64,
                reason: "must lie in 1..=64",
            });
        }
        if let SiteExponent::Constant(c) = c {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "c",
                    value: c,
                    reason: "must be positive",
                });
            }
        }
        Ok(Hypercube { n_sites, q, c })
    }

    /// `q^{c(i)}`, the up/down ratio of site `i`.
    pub fn site_ratio(&self, i: u32) -> f64 {
        libm::exp(self.c.at(i) * libm::log(self.q))
    }

    /// `ln q^{Σ_{i set} c(i)}`.
    pub fn log_weight(&self, w: u64) -> f64 {
        (0..64)
            .filter(|b| (w >> b) & 1 == 1)
            .map(|b| self.c.at(b + 1) * libm::log(self.q))
            .sum()
    }

    /// `⊗_{i≤n} (1, q^{c(i)})/(1 + q^{c(i)})` on the sub-cube of the first
    /// `n` sites.
    pub fn product_stationary(&self, n: u32) -> Result<ProbVec> {
        let f = self.window(WindowKind::Balls, n as u64)?;
        let ratios: Vec<f64> = (1..=n).map(|i| self.site_ratio(i)).collect();
        let values = f
            .members()
            .iter()
            .map(|l| {
                let w = l.as_bits().unwrap_or(0);
                ratios
                    .iter()
                    .enumerate()
                    .map(|(b, &r)| {
                        if (w >> b) & 1 == 1 {
                            r / (1.0 + r)
                        } else {
                            1.0 / (1.0 + r)
                        }
                    })
                    .product()
            })
            .collect();
        ProbVec::new(f, values)
    }

    pub fn recurrence_class(&self) -> RecurrenceClass {
        match self.c {
            SiteExponent::Constant(_) => RecurrenceClass::NonNormalizable,
            _ => RecurrenceClass::PositiveRecurrent,
        }
    }
}

impl Network for Hypercube {
    fn name(&self) -> &str {
        "hypercube"
    }
    fn label_kind(&self) -> LabelKind {
        LabelKind::Bits
    }
    fn push_out_edges(&self, state: StateLabel, out: &mut Vec<(StateLabel, f64)>) {
        let Some(w) = state.as_bits() else { return };
        for b in 0..self.n_sites {
            let bit = 1u64 << b;
            if w & bit == 0 {
                out.push((StateLabel::Bits(w | bit), self.site_ratio(b + 1)));
            } else {
                out.push((StateLabel::Bits(w & !bit), 1.0));
            }
        }
    }
    fn window(&self, kind: WindowKind, n: u64) -> Result<FiniteSubset> {
        if kind == WindowKind::Balls && n > self.n_sites as u64 {
            return Err(Error::InvalidParameter {
                name: "window",
                value: n as f64,
                reason: "exceeds the number of sites",
            });
        }
        default_window(LabelKind::Bits, kind, n)
    }
}

/// Flow to the right along `ℤ` (`z → z+1` at rate `q^{|z|}`) with jumps
/// `k → −k` at rate `a q^k` for `k ≥ 1`. No reverse links.
#[derive(Debug, Clone, PartialEq)]
pub struct Reshuffle {
    pub q: f64,
    pub a: f64,
}

impl Reshuffle {
    pub fn new(q: f64, a: f64) -> Result<Self> {
        open_unit("q", q)?;
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "a",
                value: a,
                reason: "must be positive",
            });
        }
        Ok(Reshuffle { q, a })
    }

    fn r(&self) -> f64 {
        (1.0 + self.a) * self.q
    }

    /// `ln P*(z)` up to normalization: `(1+a)/r^{|z|}` left of 0, `1/r^z` from 0 on.
    pub fn log_weight(&self, z: i64) -> f64 {
        let m = z.unsigned_abs() as f64;
        let base = -m * libm::log(self.r());
        if z < 0 {
            base + libm::log(1.0 + self.a)
        } else {
            base
        }
    }

    /// `Z = (1+a)(1+q)/((1+a)q − 1)`, finite iff `(1+a) q > 1`.
    pub fn normalizer(&self) -> Option<f64> {
        let r = self.r();
        (r > 1.0).then(|| (1.0 + self.a) * (1.0 + self.q) / (r - 1.0))
    }

    /// Stationary vector of the window `{−n..n}` in closed form.
    ///
    /// Inside the window the last state `n` can only jump to `−n`, which
    /// raises its weight relative to the infinite solution to
    /// `(1+a)/(a r^n)`; all other entries keep their infinite-network weights.
    pub fn window_stationary(&self, n: u64) -> Result<ProbVec> {
        let n = i64::try_from(n).map_err(|_| Error::LabelOverflow)?;
        let f = FiniteSubset::int_range(-n, n)?;
        let mut log_w: Vec<f64> = f
            .members()
            .iter()
            .map(|l| self.log_weight(l.as_int().unwrap_or(0)))
            .collect();
        let last = f.index_of(&StateLabel::Int(n)).expect("n is in its own window");
        log_w[last] = libm::log(1.0 + self.a) - libm::log(self.a) - n as f64 * libm::log(self.r());
        if n == 0 {
            log_w[last] = 0.0;
        }
        let z = log_sum_exp(&log_w);
        ProbVec::new(f, log_w.iter().map(|&l| libm::exp(l - z)).collect())
    }

    pub fn recurrence_class(&self) -> RecurrenceClass {
        if self.r() > 1.0 {
            RecurrenceClass::PositiveRecurrent
        } else {
            RecurrenceClass::NonNormalizable
        }
    }
}

impl Network for Reshuffle {
    fn name(&self) -> &str {
        "reshuffle"
    }
    fn label_kind(&self) -> LabelKind {
        LabelKind::Int
    }
    fn push_out_edges(&self, state: StateLabel, out: &mut Vec<(StateLabel, f64)>) {
        let Some(z) = state.as_int() else { return };
        let m = z.unsigned_abs() as f64;
        let qm = libm::pow(self.q, m);
        if z < i64::MAX {
            out.push((StateLabel::Int(z + 1), qm));
        }
        if z >= 1 {
            out.push((StateLabel::Int(-z), self.a * qm));
        }
    }
}

/// Chain on `ℕ₀` with an absorbing state 0: from `n ≥ 1` up at rate
/// `p qⁿ` and down at rate `(1 − p) qⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapChain {
    pub p: f64,
    pub q: f64,
}

impl TrapChain {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        open_unit("p", p)?;
        open_unit("q", q)?;
        Ok(TrapChain { p, q })
    }

    /// Probability of eventual absorption from state `n`, by gambler's ruin
    /// on the jump chain.
    pub fn absorption_probability(&self, n: u64) -> f64 {
        if self.p <= 0.5 {
            1.0
        } else {
            libm::pow((1.0 - self.p) / self.p, n as f64)
        }
    }

    pub fn recurrence_class(&self) -> RecurrenceClass {
        if self.p <= 0.5 {
            RecurrenceClass::AbsorbedAlmostSurely
        } else {
            RecurrenceClass::Escaping
        }
    }
}

impl Network for TrapChain {
    fn name(&self) -> &str {
        "trap_chain"
    }
    fn label_kind(&self) -> LabelKind {
        LabelKind::Nat
    }
    fn push_out_edges(&self, state: StateLabel, out: &mut Vec<(StateLabel, f64)>) {
        let Some(n) = state.as_nat() else { return };
        if n == 0 {
            return;
        }
        let qn = libm::pow(self.q, n as f64);
        if n < u64::MAX {
            out.push((StateLabel::Nat(n + 1), self.p * qn));
        }
        out.push((StateLabel::Nat(n - 1), (1.0 - self.p) * qn));
    }
}

/// States 1, 2, 3 with links `1→2`, `2→1`, `1→3`, `3→2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeState {
    pub g12: f64,
    pub g21: f64,
    pub g13: f64,
    pub g32: f64,
}

impl Default for ThreeState {
    fn default() -> Self {
        ThreeState {
            g12: 1.0,
            g21: 1.0,
            g13: 1.0,
            g32: 1.0,
        }
    }
}

impl ThreeState {
    pub fn new(g12: f64, g21: f64, g13: f64, g32: f64) -> Result<Self> {
        for (name, v) in [("g12", g12), ("g21", g21), ("g13", g13), ("g32", g32)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be positive",
                });
            }
        }
        Ok(ThreeState { g12, g21, g13, g32 })
    }

    pub fn all_states(&self) -> FiniteSubset {
        FiniteSubset::nat_range(1, 3).expect("nonempty")
    }
}

impl Network for ThreeState {
    fn name(&self) -> &str {
        "three_state"
    }
    fn label_kind(&self) -> LabelKind {
        LabelKind::Nat
    }
    fn push_out_edges(&self, state: StateLabel, out: &mut Vec<(StateLabel, f64)>) {
        use StateLabel::Nat;
        match state {
            Nat(1) => out.extend([(Nat(2), self.g12), (Nat(3), self.g13)]),
            Nat(2) => out.push((Nat(1), self.g21)),
            Nat(3) => out.push((Nat(2), self.g32)),
            _ => {}
        }
    }
    /// `{1, ..., min(n + 1, 3)}`.
    fn window(&self, kind: WindowKind, n: u64) -> Result<FiniteSubset> {
        if kind == WindowKind::ShiftedBalls {
            return Err(Error::UnsupportedWindow(kind));
        }
        FiniteSubset::nat_range(1, 1 + n.min(2))
    }
}

/// Any of the example networks.
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    ChainN0(ChainN0),
    ChainZ(ChainZ),
    Hypercube(Hypercube),
    Reshuffle(Reshuffle),
    TrapChain(TrapChain),
    ThreeState(ThreeState),
}

pub const PRESET_NAMES: [&str; 6] = [
    "chain_n0",
    "chain_z",
    "hypercube",
    "reshuffle",
    "trap_chain",
    "three_state",
];

impl Preset {
    fn inner(&self) -> &dyn Network {
        match self {
            Preset::ChainN0(p) => p,
            Preset::ChainZ(p) => p,
            Preset::Hypercube(p) => p,
            Preset::Reshuffle(p) => p,
            Preset::TrapChain(p) => p,
            Preset::ThreeState(p) => p,
        }
    }

    /// Numeric parameters, in a fixed order.
    pub fn params(&self) -> Vec<(String, f64)> {
        fn seq(prefix: &str, s: &RateSequence) -> (String, f64) {
            let (kind, v) = match *s {
                RateSequence::Constant(c) => ("constant", c),
                RateSequence::Geometric(q) => ("geometric", q),
                RateSequence::Quadratic(q) => ("quadratic", q),
            };
            (alloc::format!("{prefix}_{kind}"), v)
        }
        let named = |pairs: &[(&str, f64)]| pairs.iter().map(|&(k, v)| (String::from(k), v)).collect::<Vec<_>>();
        match self {
            Preset::ChainN0(p) => {
                let mut v = named(&[("x", p.x)]);
                v.push(seq("lambda", &p.lambda));
                v
            }
            Preset::ChainZ(p) => {
                let mut v = named(&[("x", p.x), ("y", p.y)]);
                v.push(seq("lambda", &p.lambda));
                v.push(seq("mu", &p.mu));
                v
            }
            Preset::Hypercube(p) => {
                let mut v = named(&[("n_sites", p.n_sites as f64), ("q", p.q)]);
                let c = match p.c {
                    SiteExponent::Constant(c) => ("c_constant", c),
                    SiteExponent::Linear => ("c_linear", 1.0),
                    SiteExponent::Quadratic => ("c_quadratic", 1.0),
                    SiteExponent::Exponential => ("c_exponential", 1.0),
                };
                v.push((String::from(c.0), c.1));
                v
            }
            Preset::Reshuffle(p) => named(&[("q", p.q), ("a", p.a)]),
            Preset::TrapChain(p) => named(&[("p", p.p), ("q", p.q)]),
            Preset::ThreeState(p) => named(&[("g12", p.g12), ("g21", p.g21), ("g13", p.g13), ("g32", p.g32)]),
        }
    }

    /// `ln X*(ω)` of the closed-form unnormalized stationary candidate.
    pub fn reference_log_weight(&self, label: &StateLabel) -> Option<f64> {
        match (self, *label) {
            (Preset::ChainN0(p), StateLabel::Nat(n)) => Some(p.log_weight(n)),
            (Preset::ChainZ(p), StateLabel::Int(z)) => Some(p.log_weight(z)),
            (Preset::Hypercube(p), StateLabel::Bits(w)) => Some(p.log_weight(w)),
            (Preset::Reshuffle(p), StateLabel::Int(z)) => Some(p.log_weight(z)),
            _ => None,
        }
    }

    pub fn reference_stationary(&self, label: &StateLabel) -> Option<f64> {
        self.reference_log_weight(label).map(libm::exp)
    }

    /// Closed-form normalizer of the infinite-network stationary vector.
    pub fn normalizer(&self) -> Option<f64> {
        match self {
            Preset::Reshuffle(p) => p.normalizer(),
            Preset::Hypercube(p) if p.recurrence_class() == RecurrenceClass::PositiveRecurrent => {
                Some((1..=p.n_sites).map(|i| 1.0 + p.site_ratio(i)).product())
            }
            _ => None,
        }
    }

    /// The closed-form candidate restricted to `f` and normalized.
    pub fn reference_on(&self, f: &FiniteSubset) -> Option<ProbVec> {
        let logs: Option<Vec<f64>> = f.members().iter().map(|l| self.reference_log_weight(l)).collect();
        let logs = logs?;
        let z = log_sum_exp(&logs);
        ProbVec::new(f.clone(), logs.iter().map(|&l| libm::exp(l - z)).collect()).ok()
    }

    pub fn recurrence_class(&self) -> RecurrenceClass {
        match self {
            Preset::ChainN0(p) => p.recurrence_class(),
            Preset::ChainZ(p) => p.recurrence_class(),
            Preset::Hypercube(p) => p.recurrence_class(),
            Preset::Reshuffle(p) => p.recurrence_class(),
            Preset::TrapChain(p) => p.recurrence_class(),
            Preset::ThreeState(_) => RecurrenceClass::AbsorbedAlmostSurely,
        }
    }

    /// Whether every link has a reverse link.
    pub fn has_reverse_links(&self) -> bool {
        matches!(self, Preset::ChainN0(_) | Preset::ChainZ(_) | Preset::Hypercube(_))
    }

    /// Default start state: the smallest canonical index, skipping the
    /// trap of the trap chain.
    pub fn root(&self) -> StateLabel {
        match self {
            Preset::ThreeState(_) | Preset::TrapChain(_) => StateLabel::Nat(1),
            _ => StateLabel::from_canonical(self.label_kind(), 0),
        }
    }

    pub fn default_window_kind(&self) -> WindowKind {
        WindowKind::Balls
    }
}

impl Network for Preset {
    fn name(&self) -> &str {
        self.inner().name()
    }
    fn label_kind(&self) -> LabelKind {
        self.inner().label_kind()
    }
    fn push_out_edges(&self, state: StateLabel, out: &mut Vec<(StateLabel, f64)>) {
        self.inner().push_out_edges(state, out)
    }
    fn window(&self, kind: WindowKind, n: u64) -> Result<FiniteSubset> {
        self.inner().window(kind, n)
    }
}

/// The windows of `kind` for each size, checked to be nested.
pub fn window_sequence<N: Network + ?Sized>(net: &N, kind: WindowKind, sizes: &[u64]) -> Result<Vec<FiniteSubset>> {
    let mut out = Vec::with_capacity(sizes.len());
    for &n in sizes {
        out.push(net.window(kind, n)?);
    }
    if out.windows(2).any(|w| !w[0].is_subset_of(&w[1])) {
        return Err(Error::InvalidArgument("window sequence must be nested"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::truncate_subnetwork;
    use crate::stationary::stationary_kernel;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs())
    }

    #[test]
    fn chain_n0_detailed_balance_per_edge() {
        let c = ChainN0::new(0.2, RateSequence::Geometric(0.9)).unwrap();
        for n in 0..60u64 {
            let up = c.out_edges(StateLabel::Nat(n))[0].1;
            let down = c.out_edges(StateLabel::Nat(n + 1))[1].1;
            let lhs = c.log_weight(n) + libm::log(up);
            let rhs = c.log_weight(n + 1) + libm::log(down);
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
        }
        assert_eq!(c.recurrence_class(), RecurrenceClass::PositiveRecurrent);
        assert_eq!(
            ChainN0::new(0.6, RateSequence::Geometric(0.9))
                .unwrap()
                .recurrence_class(),
            RecurrenceClass::NonNormalizable
        );
        assert_eq!(
            ChainN0::new(0.5, RateSequence::Constant(1.0))
                .unwrap()
                .recurrence_class(),
            RecurrenceClass::NonNormalizable
        );
        assert!(ChainN0::new(1.0, RateSequence::Constant(1.0)).is_err());
    }

    #[test]
    fn chain_z_mirrors_and_balances() {
        let c = ChainZ::new(0.2, 0.2, RateSequence::Geometric(0.9), RateSequence::Geometric(0.9)).unwrap();
        for z in -30i64..30 {
            assert!(rel(c.rate(z, z + 1), c.rate(-z, -z - 1)) < 1e-15);
            let lhs = c.log_weight(z) + libm::log(c.rate(z, z + 1));
            let rhs = c.log_weight(z + 1) + libm::log(c.rate(z + 1, z));
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "z = {z}");
        }
        assert_eq!(c.recurrence_class(), RecurrenceClass::PositiveRecurrent);
    }

    #[test]
    fn y_star_is_in_the_kernel_and_grows() {
        let c = ChainZ::new(0.3, 0.4, RateSequence::Constant(1.0), RateSequence::Geometric(0.95)).unwrap();
        for z in -15i64..=15 {
            let flow = c.y_star(z - 1) * c.rate(z - 1, z) + c.y_star(z + 1) * c.rate(z + 1, z)
                - c.y_star(z) * (c.rate(z, z + 1) + c.rate(z, z - 1));
            let scale = c.y_star(z - 1).abs() + c.y_star(z + 1).abs() + c.y_star(z).abs();
            assert!(flow.abs() <= 1e-12 * scale.max(1.0), "z = {z}: {flow}");
        }
        assert!(c.y_star(30).abs() > c.y_star(10).abs());
    }

    #[test]
    fn hypercube_single_site() {
        let h = Hypercube::new(1, 0.5, SiteExponent::Linear).unwrap();
        let p = h.product_stationary(1).unwrap();
        assert!((p.values()[0] - 2.0 / 3.0).abs() < 1e-15 && (p.values()[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn hypercube_balance_on_q2() {
        let h = Hypercube::new(2, 0.5, SiteExponent::Linear).unwrap();
        let f = h.window(WindowKind::Balls, 2).unwrap();
        let s = stationary_kernel(&truncate_subnetwork(&h, &f)).unwrap();
        let want = [
            1.0 / 1.5 / 1.25,
            0.5 / 1.5 / 1.25,
            0.25 / 1.5 / 1.25,
            0.125 / 1.5 / 1.25,
        ];
        for (a, b) in s.vector.values().iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn reshuffle_closed_forms() {
        let r = Reshuffle::new(0.8, 1.0).unwrap();
        assert!((r.normalizer().unwrap() - 6.0).abs() < 1e-12);
        assert!(Reshuffle::new(0.4, 1.0).unwrap().normalizer().is_none());
        for a in [0.5, 1.0, 2.5] {
            let r = Reshuffle::new(0.8, a).unwrap();
            for n in [1u64, 3, 7] {
                let f = r.window(WindowKind::Balls, n).unwrap();
                let s = stationary_kernel(&truncate_subnetwork(&r, &f)).unwrap();
                let w = r.window_stationary(n).unwrap();
                assert!(s.vector.l1_distance(&w).unwrap() < 1e-12, "a = {a}, n = {n}");
            }
        }
    }

    #[test]
    fn shifted_reshuffle_window_absorbs_at_the_right_end() {
        let r = Reshuffle::new(0.8, 1.0).unwrap();
        let f = r.window(WindowKind::ShiftedBalls, 4).unwrap();
        let s = stationary_kernel(&truncate_subnetwork(&r, &f)).unwrap();
        assert_eq!(s.vector.get(&StateLabel::Int(5)), 1.0);
    }

    #[test]
    fn trap_chain_rates_and_ruin() {
        let t = TrapChain::new(0.75, 0.9).unwrap();
        assert!(t.out_edges(StateLabel::Nat(0)).is_empty());
        let e = t.out_edges(StateLabel::Nat(2));
        assert!(rel(e[0].1, 0.75 * 0.81) < 1e-15 && rel(e[1].1, 0.25 * 0.81) < 1e-15);
        assert!((t.absorption_probability(1) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(TrapChain::new(0.4, 0.9).unwrap().absorption_probability(3), 1.0);
    }

    #[test]
    fn preset_delegation() {
        let p = Preset::ThreeState(ThreeState::default());
        assert_eq!(p.name(), "three_state");
        assert_eq!(p.window(WindowKind::Prefixes, 5).unwrap().len(), 3);
        assert_eq!(p.root(), StateLabel::Nat(1));
        let r = Preset::Reshuffle(Reshuffle::new(0.8, 1.0).unwrap());
        assert_eq!(r.root(), StateLabel::Int(0));
        let f = FiniteSubset::int_range(-40, 40).unwrap();
        let v = r.reference_on(&f).unwrap();
        assert!((v.get(&StateLabel::Int(0)) - 1.0 / 6.0).abs() < 1e-6);
    }
}
