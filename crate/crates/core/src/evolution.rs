//! Time evolution of probability vectors on finite windows.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::generator::{Scheme, SparseGenerator};
use crate::label::StateLabel;
use crate::linalg::{expm_dense, l1_diff, poisson_log_pmf, CompensatedSum};
use crate::subset::FiniteSubset;

/// Entries above this negative value are treated as roundoff and clipped.
pub const NEGATIVE_SLACK: f64 = 1e-14;

/// Size limit for dense reference computations.
pub const DENSE_LIMIT: usize = 400;

/// A nonnegative vector indexed by a window, optionally with a trailing
/// entry for a condensed remainder state.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVec {
    subset: FiniteSubset,
    remainder: bool,
    values: Vec<f64>,
    mass: f64,
}

impl ProbVec {
    pub fn new(subset: FiniteSubset, values: Vec<f64>) -> Result<Self> {
        Self::build(subset, false, values)
    }

    /// A vector on `subset` plus a remainder entry at the end.
    pub fn with_remainder(subset: FiniteSubset, values: Vec<f64>) -> Result<Self> {
        Self::build(subset, true, values)
    }

    fn build(subset: FiniteSubset, remainder: bool, mut values: Vec<f64>) -> Result<Self> {
        let expected = subset.len() + remainder as usize;
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: values.len(),
            });
        }
        for (index, v) in values.iter_mut().enumerate() {
            if !v.is_finite() || *v < -NEGATIVE_SLACK {
                return Err(Error::NegativeEntry { index, value: *v });
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let mass = values.iter().copied().collect::<CompensatedSum>().value();
        Ok(ProbVec {
            subset,
            remainder,
            values,
            mass,
        })
    }

    /// Clamps every negative entry to zero. Meant for reference
    /// computations whose roundoff is not sign-preserving.
    pub fn clipped(subset: FiniteSubset, remainder: bool, mut values: Vec<f64>) -> Result<Self> {
        values.iter_mut().for_each(|v| *v = v.max(0.0));
        Self::build(subset, remainder, values)
    }

    pub fn point_mass(subset: FiniteSubset, at: &StateLabel) -> Result<Self> {
        let i = subset.index_of(at).ok_or(Error::StateNotInSubset(*at))?;
        let mut values = vec![0.0; subset.len()];
        values[i] = 1.0;
        Self::new(subset, values)
    }

    /// Evaluates nonnegative weights on `f` and normalizes them.
    pub fn restricted_from(f: &FiniteSubset, weight: impl Fn(&StateLabel) -> f64) -> Result<Self> {
        let values: Vec<f64> = f.members().iter().map(weight).collect();
        Self::new(f.clone(), values)?.normalized()
    }

    pub fn normalized(mut self) -> Result<Self> {
        if !(self.mass > 0.0) {
            return Err(Error::ZeroMassWindow);
        }
        let m = self.mass;
        self.values.iter_mut().for_each(|v| *v /= m);
        self.mass = self.values.iter().copied().collect::<CompensatedSum>().value();
        Ok(self)
    }

    pub fn subset(&self) -> &FiniteSubset {
        &self.subset
    }

    pub fn has_remainder(&self) -> bool {
        self.remainder
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entry at `label`; zero outside the window.
    pub fn get(&self, label: &StateLabel) -> f64 {
        self.subset.index_of(label).map_or(0.0, |i| self.values[i])
    }

    /// Mass on the remainder state, if any.
    pub fn remainder_mass(&self) -> f64 {
        if self.remainder {
            self.values[self.values.len() - 1]
        } else {
            0.0
        }
    }

    /// The same vector on a larger window, zero on the new states.
    pub fn embed(&self, superset: &FiniteSubset) -> Result<ProbVec> {
        if self.remainder {
            return Err(Error::SubsetMismatch);
        }
        let mut values = vec![0.0; superset.len()];
        for (l, v) in self.subset.members().iter().zip(&self.values) {
            let i = superset.index_of(l).ok_or(Error::StateNotInSubset(*l))?;
            values[i] = *v;
        }
        ProbVec::new(superset.clone(), values)
    }

    /// `‖self − other‖₁` with both vectors extended by zero to the union of
    /// their windows. Remainder entries are compared with each other.
    pub fn l1_distance(&self, other: &ProbVec) -> Result<f64> {
        if self.subset == other.subset && self.remainder == other.remainder {
            return Ok(l1_diff(&self.values, &other.values));
        }
        let union = self.subset.union(&other.subset)?;
        let mut d = CompensatedSum::new();
        for l in union.members() {
            d.add((self.get(l) - other.get(l)).abs());
        }
        d.add((self.remainder_mass() - other.remainder_mass()).abs());
        Ok(d.value())
    }
}

/// `P₀^[F]`: the part of `p` inside `f`, renormalized.
pub fn restrict(p: &ProbVec, f: &FiniteSubset) -> Result<ProbVec> {
    let values: Vec<f64> = f.members().iter().map(|l| p.get(l)).collect();
    ProbVec::new(f.clone(), values)?.normalized()
}

/// Outcome of [`evolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct EvolveReport {
    pub result: ProbVec,
    /// Number of Poisson series terms summed, over all time chunks.
    pub terms_used: u64,
    pub mass_drift: f64,
    /// Seconds; zero when built without `std`.
    pub wall_time: f64,
}

/// Largest `Λt` handled by a single Poisson series.
const CHUNK_LIMIT: f64 = 1e4;
/// Target `Λt` per chunk once splitting kicks in.
const CHUNK_SIZE: f64 = 1e3;

/// `Q = I + Γ/Λ` in compressed column form, with the diagonal clamped at
/// zero against roundoff.
#[derive(Debug, Clone)]
pub(crate) struct Uniformized {
    lambda: f64,
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
    values: Vec<f64>,
}

impl Uniformized {
    pub(crate) fn new(g: &SparseGenerator) -> Self {
        let lambda = g.norms().max_exit_rate;
        let mut col_ptr = vec![0];
        let mut rows = Vec::with_capacity(g.nnz());
        let mut values = Vec::with_capacity(g.nnz());
        for j in 0..g.dim() {
            for (i, v) in g.column(j) {
                let q = if lambda > 0.0 { v / lambda } else { 0.0 };
                let q = if i == j { (1.0 + q).max(0.0) } else { q };
                rows.push(i);
                values.push(q);
            }
            col_ptr.push(rows.len());
        }
        Uniformized {
            lambda,
            col_ptr,
            rows,
            values,
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.rows[k]] += self.values[k] * xj;
            }
        }
    }

    /// Poisson-weighted sum of `Q^k x`, truncated once the accumulated weight
    /// reaches `1 − tol` and divided by that accumulated weight.
    ///
    /// At least `dim` terms are kept unless the weights underflow first, so
    /// every state reachable from the support of `x` gets positive mass.
    fn series(&self, x: &[f64], mu: f64, tol: f64) -> (Vec<f64>, u64) {
        let n = x.len();
        let mut acc = vec![CompensatedSum::new(); n];
        let mut cur = x.to_vec();
        let mut next = vec![0.0; n];
        let mut weight_sum = CompensatedSum::new();
        let mut k = 0u64;
        loop {
            let w = libm::exp(poisson_log_pmf(k, mu));
            if w > 0.0 {
                for (a, &c) in acc.iter_mut().zip(&cur) {
                    a.add(w * c);
                }
                weight_sum.add(w);
            }
            k += 1;
            // Past the mode the weights only shrink, so the remaining tail is
            // exactly 1 minus what has been accumulated.
            if (weight_sum.value() >= 1.0 - tol && k >= n as u64) || (k as f64 > mu && w == 0.0) {
                break;
            }
            self.apply(&cur, &mut next);
            core::mem::swap(&mut cur, &mut next);
        }
        let total = weight_sum.value();
        (acc.iter().map(|a| a.value() / total).collect(), k)
    }

    /// `e^{tΓ} x` by uniformization, chunking long horizons.
    pub(crate) fn propagate(&self, x: &[f64], t: f64, tol: f64) -> (Vec<f64>, u64) {
        let mu = self.lambda * t;
        if mu == 0.0 {
            return (x.to_vec(), 1);
        }
        let chunks = if mu > CHUNK_LIMIT {
            libm::ceil(mu / CHUNK_SIZE) as u64
        } else {
            1
        };
        let mu_chunk = mu / chunks as f64;
        let tol_chunk = tol / chunks as f64;
        let mut cur = x.to_vec();
        let mut terms = 0;
        for _ in 0..chunks {
            let (next, k) = self.series(&cur, mu_chunk, tol_chunk);
            cur = next;
            terms += k;
        }
        (cur, terms)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidTime(t))
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol <= 1e-3 {
        Ok(())
    } else {
        Err(Error::InvalidTolerance(tol))
    }
}

fn check_layout(g: &SparseGenerator, p: &ProbVec) -> Result<()> {
    if g.subset() != p.subset() || g.has_remainder() != p.has_remainder() {
        return Err(Error::SubsetMismatch);
    }
    Ok(())
}

/// Builds a vector shaped like `g`'s state space.
fn shaped_like(g: &SparseGenerator, values: Vec<f64>) -> Result<ProbVec> {
    if g.has_remainder() {
        ProbVec::with_remainder(g.subset().clone(), values)
    } else {
        ProbVec::new(g.subset().clone(), values)
    }
}

/// `e^{tΓ} p₀` by uniformization.
pub fn evolve(g: &SparseGenerator, p0: &ProbVec, t: f64, tol: f64) -> Result<EvolveReport> {
    check_layout(g, p0)?;
    check_time(t)?;
    check_tol(tol)?;
    #[cfg(feature = "std")]
    let start = std::time::Instant::now();
    let (values, terms_used) = Uniformized::new(g).propagate(p0.values(), t, tol);
    let result = shaped_like(g, values)?;
    let mass_drift = (result.mass() - p0.mass()).abs();
    #[cfg(feature = "std")]
    let wall_time = start.elapsed().as_secs_f64();
    #[cfg(not(feature = "std"))]
    let wall_time = 0.0;
    Ok(EvolveReport {
        result,
        terms_used,
        mass_drift,
        wall_time,
    })
}

/// `e^{tΓ} p₀` through a dense matrix exponential. Reference only.
pub fn dense_expm_oracle(g: &SparseGenerator, p0: &ProbVec, t: f64) -> Result<ProbVec> {
    check_layout(g, p0)?;
    check_time(t)?;
    if g.dim() > DENSE_LIMIT {
        return Err(Error::DimensionTooLarge {
            dim: g.dim(),
            limit: DENSE_LIMIT,
        });
    }
    let e = expm_dense(&(g.to_dense() * t));
    let p = e * DVector::from_column_slice(p0.values());
    ProbVec::clipped(g.subset().clone(), g.has_remainder(), p.iter().copied().collect())
}

/// Column-stochastic jump matrix of the embedded discrete-time chain.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpChain {
    dim: usize,
    columns: Vec<Vec<(usize, f64)>>,
}

impl JumpChain {
    /// Builds a chain from column lists; each column must be a distribution.
    pub fn from_columns(columns: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let dim = columns.len();
        for (j, col) in columns.iter().enumerate() {
            let s: f64 = col.iter().map(|e| e.1).sum();
            if col.iter().any(|&(i, p)| i >= dim || !(p >= 0.0)) || (s - 1.0).abs() > 1e-12 {
                return Err(Error::GeneratorInvariant {
                    column: j,
                    reason: "jump column is not a distribution",
                });
            }
        }
        Ok(JumpChain { dim, columns })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.columns[j].iter().find(|e| e.0 == i).map_or(0.0, |e| e.1)
    }

    pub fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.columns[j]
    }

    /// `y = Q x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            for &(i, q) in &self.columns[j] {
                y[i] += q * xj;
            }
        }
    }
}

/// `q_{j→i} = γ_{j→i}/γ_{j→}`; absorbing states keep their mass.
pub fn embedded_chain(g: &SparseGenerator) -> Result<JumpChain> {
    if g.scheme() == Scheme::SharpCutoff {
        return Err(Error::SchemeMismatch {
            expected: Scheme::Subnetwork,
            found: g.scheme(),
        });
    }
    let mut columns = Vec::with_capacity(g.dim());
    for j in 0..g.dim() {
        let off: Vec<(usize, f64)> = g.column(j).filter(|&(i, v)| i != j && v > 0.0).collect();
        let exit: f64 = off.iter().map(|e| e.1).sum();
        if exit > 0.0 {
            columns.push(off.into_iter().map(|(i, v)| (i, v / exit)).collect());
        } else {
            columns.push(vec![(j, 1.0)]);
        }
    }
    Ok(JumpChain { dim: g.dim(), columns })
}

/// `(1/m) Σ_{k<m} Q^k p₀`.
pub fn cesaro_mean(q: &JumpChain, p0: &ProbVec, m: usize) -> Result<ProbVec> {
    if m == 0 {
        return Err(Error::InvalidArgument("Cesàro mean needs m ≥ 1"));
    }
    if q.dim() != p0.len() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            found: p0.len(),
        });
    }
    let mut acc = vec![CompensatedSum::new(); q.dim()];
    let mut cur = p0.values().to_vec();
    let mut next = vec![0.0; q.dim()];
    for k in 0..m {
        for (a, &c) in acc.iter_mut().zip(&cur) {
            a.add(c);
        }
        if k + 1 < m {
            q.apply(&cur, &mut next);
            core::mem::swap(&mut cur, &mut next);
        }
    }
    let values = acc.iter().map(|a| a.value() / m as f64).collect();
    ProbVec::build(p0.subset().clone(), p0.has_remainder(), values)
}

/// How [`long_time_limit`] advances time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// Evolve by a fixed step each iteration.
    Fixed,
    /// Square a dense propagator each iteration, so the horizon doubles.
    /// Reaches very long times on windows with slow absorption.
    Doubling,
    /// Doubling up to the dense limit, fixed above.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongTimeOptions {
    /// Step length; defaults to `10/Λ`.
    pub t_step: Option<f64>,
    pub tol: f64,
    pub max_steps: usize,
    pub schedule: Schedule,
}

impl Default for LongTimeOptions {
    fn default() -> Self {
        LongTimeOptions {
            t_step: None,
            tol: 1e-10,
            max_steps: 10_000,
            schedule: Schedule::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LongTimeLimit {
    pub vector: ProbVec,
    pub converged: bool,
    pub t_final: f64,
    pub steps: usize,
    /// Last successive difference in 1-norm.
    pub last_diff: f64,
}

/// Evolves until successive iterates differ by less than `opts.tol`.
pub fn long_time_limit(g: &SparseGenerator, p0: &ProbVec, opts: &LongTimeOptions) -> Result<LongTimeLimit> {
    check_layout(g, p0)?;
    let u = Uniformized::new(g);
    if u.lambda == 0.0 {
        return Ok(LongTimeLimit {
            vector: p0.clone(),
            converged: true,
            t_final: 0.0,
            steps: 0,
            last_diff: 0.0,
        });
    }
    let h = opts.t_step.unwrap_or(10.0 / u.lambda);
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidTime(h));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidTolerance(opts.tol));
    }
    let series_tol = (opts.tol * 1e-2).max(1e-14);
    let doubling = match opts.schedule {
        Schedule::Fixed => false,
        Schedule::Doubling => true,
        Schedule::Auto => g.dim() <= DENSE_LIMIT,
    };
    let (values, converged, t_final, steps, last_diff) = if doubling {
        doubling_limit(g, &u, p0.values(), h, series_tol, opts)
    } else {
        let mut cur = p0.values().to_vec();
        let mut t = 0.0;
        let mut diff = f64::INFINITY;
        let mut steps = 0;
        let mut converged = false;
        while steps < opts.max_steps {
            let (next, _) = u.propagate(&cur, h, series_tol);
            diff = l1_diff(&next, &cur);
            cur = next;
            t += h;
            steps += 1;
            if diff < opts.tol {
                converged = true;
                break;
            }
        }
        (cur, converged, t, steps, diff)
    };
    Ok(LongTimeLimit {
        vector: shaped_like(g, values)?,
        converged,
        t_final,
        steps,
        last_diff,
    })
}

fn doubling_limit(
    g: &SparseGenerator,
    u: &Uniformized,
    p0: &[f64],
    h: f64,
    series_tol: f64,
    opts: &LongTimeOptions,
) -> (Vec<f64>, bool, f64, usize, f64) {
    let n = g.dim();
    let conservative = g.scheme() != Scheme::SharpCutoff;
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let (col, _) = u.propagate(&e, h, series_tol);
        m.set_column(j, &DVector::from_vec(col));
        e[j] = 0.0;
    }
    let mut cur = DVector::from_column_slice(p0);
    let mut step_len = h;
    let mut t = 0.0;
    let mut diff = f64::INFINITY;
    let mut steps = 0;
    // Repeated squaring of a stochastic matrix amplifies column-sum roundoff
    // geometrically, so conservative propagators are renormalized each time.
    let renormalize = |m: &mut DMatrix<f64>| {
        if conservative {
            for mut c in m.column_iter_mut() {
                let s: f64 = c.iter().sum();
                if s > 0.0 {
                    c /= s;
                }
            }
        }
    };
    renormalize(&mut m);
    while steps < opts.max_steps.min(1000) {
        let next = &m * &cur;
        diff = next
            .iter()
            .zip(cur.iter())
            .map(|(a, b)| (a - b).abs())
            .collect::<CompensatedSum>()
            .value();
        cur = next;
        t += step_len;
        steps += 1;
        if diff < opts.tol || !t.is_finite() {
            break;
        }
        m = &m * &m;
        renormalize(&mut m);
        step_len *= 2.0;
    }
    let converged = diff < opts.tol;
    (cur.iter().copied().collect(), converged, t, steps, diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{truncate_sharp, truncate_subnetwork};
    use crate::label::StateLabel::Nat;
    use crate::network::EdgeListNetwork;

    fn two_state(a: f64, b: f64) -> SparseGenerator {
        let net = EdgeListNetwork::new("two", [(Nat(1), Nat(2), a), (Nat(2), Nat(1), b)]).unwrap();
        truncate_subnetwork(&net, &net.all_states())
    }

    fn analytic(a: f64, b: f64, t: f64) -> [f64; 2] {
        let d = libm::exp(-(a + b) * t);
        [(b + a * d) / (a + b), (a - a * d) / (a + b)]
    }

    #[test]
    fn rejects_negative_entries_but_clips_roundoff() {
        let f = FiniteSubset::nat_range(0, 1).unwrap();
        let p = ProbVec::new(f.clone(), vec![1.0, -1e-15]).unwrap();
        assert_eq!(p.values(), &[1.0, 0.0]);
        assert!(matches!(
            ProbVec::new(f.clone(), vec![1.0, -1e-10]),
            Err(Error::NegativeEntry { index: 1, .. })
        ));
        assert!(matches!(
            ProbVec::new(f, vec![1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn restrict_rescales() {
        let f = FiniteSubset::nat_range(1, 3).unwrap();
        let p = ProbVec::new(f, vec![0.2, 0.3, 0.5]).unwrap();
        let w = FiniteSubset::nat_range(1, 2).unwrap();
        let r = restrict(&p, &w).unwrap();
        assert!((r.values()[0] - 0.4).abs() < 1e-15 && (r.values()[1] - 0.6).abs() < 1e-15);
        let zero = FiniteSubset::nat_range(7, 8).unwrap();
        assert_eq!(restrict(&p, &zero), Err(Error::ZeroMassWindow));
    }

    #[test]
    fn geometric_restriction() {
        let r: f64 = 0.3;
        let f = FiniteSubset::nat_range(0, 5).unwrap();
        let p = ProbVec::restricted_from(&f, |l| (1.0 - r) * r.powi(l.as_nat().unwrap() as i32)).unwrap();
        let scale = 1.0 / (1.0 - r.powi(6));
        for (n, v) in p.values().iter().enumerate() {
            assert!((v - (1.0 - r) * r.powi(n as i32) * scale).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_at_time_zero() {
        let g = two_state(1.0, 2.0);
        let p0 = ProbVec::point_mass(g.subset().clone(), &Nat(1)).unwrap();
        let rep = evolve(&g, &p0, 0.0, 1e-12).unwrap();
        assert_eq!(rep.result, p0);
        assert_eq!(rep.terms_used, 1);
    }

    #[test]
    fn two_state_matches_closed_form() {
        let (a, b) = (1.3, 0.4);
        let g = two_state(a, b);
        let p0 = ProbVec::point_mass(g.subset().clone(), &Nat(1)).unwrap();
        for t in [0.01, 0.5, 3.0, 40.0] {
            let rep = evolve(&g, &p0, t, 1e-13).unwrap();
            let want = analytic(a, b, t);
            assert!(l1_diff(rep.result.values(), &want) < 1e-10, "t = {t}");
            assert!(rep.mass_drift <= 1e-10);
            let dense = dense_expm_oracle(&g, &p0, t).unwrap();
            assert!(l1_diff(dense.values(), &want) < 1e-10);
        }
    }

    #[test]
    fn very_long_horizon_is_chunked() {
        let g = two_state(1.0, 3.0);
        let p0 = ProbVec::point_mass(g.subset().clone(), &Nat(2)).unwrap();
        let rep = evolve(&g, &p0, 1e4, 1e-10).unwrap();
        assert!(l1_diff(rep.result.values(), &[0.75, 0.25]) < 1e-10);
        assert!(rep.terms_used > 30_000);
    }

    #[test]
    fn parameter_checks() {
        let g = two_state(1.0, 1.0);
        let p0 = ProbVec::point_mass(g.subset().clone(), &Nat(1)).unwrap();
        assert_eq!(evolve(&g, &p0, -1.0, 1e-10).unwrap_err(), Error::InvalidTime(-1.0));
        assert_eq!(evolve(&g, &p0, 1.0, 0.1).unwrap_err(), Error::InvalidTolerance(0.1));
        let other = ProbVec::point_mass(FiniteSubset::nat_range(1, 3).unwrap(), &Nat(1)).unwrap();
        assert_eq!(evolve(&g, &other, 1.0, 1e-10).unwrap_err(), Error::SubsetMismatch);
    }

    #[test]
    fn sharp_cutoff_loses_mass() {
        let net = EdgeListNetwork::new(
            "c",
            [
                (Nat(0), Nat(1), 1.0),
                (Nat(1), Nat(0), 1.0),
                (Nat(1), Nat(2), 1.0),
                (Nat(2), Nat(1), 1.0),
            ],
        )
        .unwrap();
        let f = FiniteSubset::nat_range(0, 1).unwrap();
        let g = truncate_sharp(&net, &f);
        let p0 = ProbVec::point_mass(f, &Nat(1)).unwrap();
        let rep = evolve(&g, &p0, 1.0, 1e-12).unwrap();
        assert!(rep.result.mass() < 1.0 - 1e-3);
    }

    #[test]
    fn jump_chain_and_cesaro() {
        let g = two_state(2.0, 5.0);
        let q = embedded_chain(&g).unwrap();
        assert_eq!((q.get(0, 0), q.get(1, 0), q.get(0, 1)), (0.0, 1.0, 1.0));
        let p0 = ProbVec::point_mass(g.subset().clone(), &Nat(1)).unwrap();
        let c = cesaro_mean(&q, &p0, 2).unwrap();
        assert_eq!(c.values(), &[0.5, 0.5]);
        assert_eq!(cesaro_mean(&q, &p0, 1).unwrap(), p0);
        assert!(cesaro_mean(&q, &p0, 0).is_err());
    }

    #[test]
    fn long_time_limit_two_state() {
        let (a, b) = (0.7, 2.0);
        let g = two_state(a, b);
        let p0 = ProbVec::point_mass(g.subset().clone(), &Nat(1)).unwrap();
        for schedule in [Schedule::Fixed, Schedule::Doubling] {
            let opts = LongTimeOptions {
                schedule,
                ..Default::default()
            };
            let lim = long_time_limit(&g, &p0, &opts).unwrap();
            assert!(lim.converged);
            assert!(l1_diff(lim.vector.values(), &[b / (a + b), a / (a + b)]) < 1e-9);
        }
    }

    #[test]
    fn zero_generator_converges_immediately() {
        let f = FiniteSubset::nat_range(0, 2).unwrap();
        let g = SparseGenerator::from_triplets(f.clone(), Scheme::Subnetwork, "z", []).unwrap();
        let p0 = ProbVec::new(f, vec![0.2, 0.3, 0.5]).unwrap();
        let lim = long_time_limit(&g, &p0, &LongTimeOptions::default()).unwrap();
        assert!(lim.converged);
        assert_eq!(lim.vector, p0);
    }

    #[test]
    fn l1_distance_aligns_windows() {
        let a = ProbVec::point_mass(FiniteSubset::nat_range(0, 1).unwrap(), &Nat(0)).unwrap();
        let b = ProbVec::new(FiniteSubset::nat_range(0, 2).unwrap(), vec![0.5, 0.0, 0.5]).unwrap();
        assert_eq!(a.l1_distance(&b).unwrap(), 1.0);
        let e = a.embed(b.subset()).unwrap();
        assert_eq!(e.values(), &[1.0, 0.0, 0.0]);
    }
}
