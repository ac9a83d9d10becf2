//! Small numeric helpers: compensated sums, log-domain weights and a dense
//! matrix exponential used as a reference.

use alloc::vec::Vec;

use nalgebra::DMatrix;

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        iter.into_iter().for_each(|x| s.add(x));
        s
    }
}

/// `ln Σ exp(x_i)`, or `-∞` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: CompensatedSum = xs.iter().map(|&x| libm::exp(x - m)).collect();
    m + libm::log(s.value())
}

/// `ln(e^{-μ} μ^k / k!)`.
pub fn poisson_log_pmf(k: u64, mu: f64) -> f64 {
    if mu == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k as f64 * libm::log(mu) - mu - libm::lgamma(k as f64 + 1.0)
}

pub fn l1_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).collect::<CompensatedSum>().value()
}

pub fn l1_diff(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .collect::<CompensatedSum>()
        .value()
}

/// Maximum absolute column sum.
pub fn op1_dense(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^{A}` by scaling and squaring with a Taylor series.
pub fn expm_dense(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = op1_dense(a);
    let mut s = 0i32;
    if norm > 0.5 {
        s = libm::ceil(libm::log2(norm / 0.5)) as i32;
    }
    let scaled = a / libm::pow(2.0, s as f64);
    let mut result = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..=40 {
        term = &term * &scaled / k as f64;
        result += &term;
        if op1_dense(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

/// Solves `A x = b` with partial-pivot LU plus iterative refinement.
pub fn solve_refined(a: &DMatrix<f64>, b: &[f64], refinements: usize) -> Option<Vec<f64>> {
    let lu = a.clone().lu();
    let rhs = nalgebra::DVector::from_column_slice(b);
    let mut x = lu.solve(&rhs)?;
    for _ in 0..refinements {
        let r = &rhs - a * &x;
        let dx = lu.solve(&r)?;
        x += dx;
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x.iter().copied().collect())
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        for _ in 0..10 {
            s.add(1e-16);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-15).abs() < 1e-28);
    }

    #[test]
    fn merge_matches_sequential() {
        let xs: Vec<f64> = (0..100).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let all: CompensatedSum = xs.iter().copied().collect();
        let mut a: CompensatedSum = xs[..37].iter().copied().collect();
        let b: CompensatedSum = xs[37..].iter().copied().collect();
        a.merge(&b);
        assert!((a.value() - all.value()).abs() < 1e-15);
    }

    #[test]
    fn log_sum_exp_is_stable() {
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + core::f64::consts::LN_2)).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn poisson_weights_sum_to_one_past_underflow() {
        let mu = 2000.0;
        let s: CompensatedSum = (0..4000).map(|k| libm::exp(poisson_log_pmf(k, mu))).collect();
        assert!((s.value() - 1.0).abs() < 1e-12);
        assert_eq!(poisson_log_pmf(0, 0.0), 0.0);
    }

    #[test]
    fn expm_of_two_state_generator() {
        let (a, b, t) = (2.0, 3.0, 0.7);
        let g = DMatrix::from_row_slice(2, 2, &[-a, b, a, -b]) * t;
        let e = expm_dense(&g);
        let decay = libm::exp(-(a + b) * t);
        assert!((e[(0, 0)] - (b + a * decay) / (a + b)).abs() < 1e-14);
        assert!((e[(1, 0)] - (a - a * decay) / (a + b)).abs() < 1e-14);
    }

    #[test]
    fn refined_solve() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 2.0, 3.0]);
        let x = solve_refined(&a, &[1.0, 2.0], 2).unwrap();
        assert!((x[0] - 0.1).abs() < 1e-15 && (x[1] - 0.6).abs() < 1e-15);
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(solve_refined(&singular, &[1.0, 2.0], 1).is_none());
    }
}
