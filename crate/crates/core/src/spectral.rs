//! The symmetric conjugate `A = D P D^{-1}`, `D = diag(sqrt(pi))`, of a
//! birth–death transition operator, and probes of the top of its spectrum.
//!
//! `A` is a Jacobi matrix with zero diagonal and off-diagonal
//! `a(x, x+1) = sqrt(p_x q_{x+1})`. Truncations are principal submatrices,
//! so by interlacing their top eigenvalues increase towards the top of the
//! spectrum of the infinite operator.

use serde::{Deserialize, Serialize};

use crate::chain::BirthDeathChain;
use crate::error::Result;
use crate::measure::stationary_weights;
use crate::sum::{Compensated, LogSum};
use crate::tridiag;

/// Principal `N x N` truncation of the symmetrized transition operator.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiMatrix {
    off_diag: Vec<f64>,
}

impl JacobiMatrix {
    /// Builds a matrix from explicit off-diagonal entries.
    pub fn from_off_diagonal(off_diag: Vec<f64>) -> Self {
        JacobiMatrix { off_diag }
    }

    /// Number of states `N`.
    pub fn size(&self) -> usize {
        self.off_diag.len() + 1
    }

    /// `off_diag[x] = a(x, x+1)`.
    pub fn off_diagonal(&self) -> &[f64] {
        &self.off_diag
    }

    /// Largest eigenvalue, optionally with one state's row and column deleted.
    ///
    /// Deleting state `s` splits the matrix into the blocks `0..s` and
    /// `s+1..N`; the larger of the two block maxima is returned.
    pub fn top_eigenvalue(&self, delete_state: Option<usize>) -> Result<f64> {
        let n = self.size();
        match delete_state {
            None => block_top(&self.off_diag),
            Some(s) => {
                assert!(s < n, "deleted state {s} outside 0..{n}");
                let mut top = f64::NEG_INFINITY;
                if s > 0 {
                    top = top.max(block_top(&self.off_diag[..s - 1])?);
                }
                if s + 1 < n {
                    top = top.max(block_top(&self.off_diag[s + 1..])?);
                }
                Ok(top)
            }
        }
    }

    /// Eigenvalue `index` counted from the top (0 = largest).
    pub fn eigenvalue_from_top(&self, index: usize) -> Result<f64> {
        let n = self.size();
        tridiag::eigenvalue(&vec![0.0; n], &self.off_diag, n - 1 - index)
    }
}

fn block_top(off: &[f64]) -> Result<f64> {
    tridiag::largest_eigenvalue(&vec![0.0; off.len() + 1], off)
}

/// Jacobi matrix of `chain` on the states `0..n`.
pub fn jacobi_matrix(chain: &BirthDeathChain, n: usize) -> JacobiMatrix {
    assert!(n >= 2, "a Jacobi truncation needs at least two states");
    let off_diag = (0..n - 1).map(|x| (chain.p(x) * chain.q(x + 1)).sqrt()).collect();
    JacobiMatrix { off_diag }
}

/// See [`JacobiMatrix::top_eigenvalue`].
pub fn top_eigenvalue(matrix: &JacobiMatrix, delete_state: Option<usize>) -> Result<f64> {
    matrix.top_eigenvalue(delete_state)
}

/// Relative growth of the running sup between `M/2` and `M` still treated as
/// convergence.
pub const DELTA_STABILITY: f64 = 0.01;

/// Truncated evaluation of Chen's functional
/// `delta = sup_{x >= 1} sum_{y < x} [pi~(y) p_y]^{-1} sum_{y >= x} pi~(y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChenDelta {
    pub truncation: usize,
    /// Running sup over `1 <= x <= truncation`.
    pub sup: f64,
    pub half_truncation: usize,
    /// Running sup over `1 <= x <= truncation / 2`.
    pub half_sup: f64,
}

impl ChenDelta {
    /// Finite and stable to [`DELTA_STABILITY`] under halving the truncation.
    pub fn is_finite(&self) -> bool {
        self.sup.is_finite() && self.sup <= self.half_sup * (1.0 + DELTA_STABILITY)
    }

    pub fn doubling_ratio(&self) -> f64 {
        self.sup / self.half_sup
    }
}

/// Running sup of the Chen functional, `out[x - 1]` covering `1..=x`, for
/// `x = 1..=m`.
///
/// Tails `sum_{y >= x} pi~(y)` are partial sums to `m` plus the certified
/// tail bound; without a bound every entry is `+inf`.
pub fn chen_delta_running(chain: &BirthDeathChain, m: usize) -> Vec<f64> {
    let m = m.max(1);
    let measure = stationary_weights(chain, m);
    if !measure.tail_bound().is_finite() {
        return vec![f64::INFINITY; m];
    }
    let lw = measure.log_weights();
    // log_tail[x] = ln sum_{y >= x} pi~(y)
    let mut log_tail = vec![0.0; m + 1];
    let mut acc = LogSum::new();
    acc.add(measure.tail_bound().ln());
    for x in (0..=m).rev() {
        acc.add(lw[x]);
        log_tail[x] = acc.value();
    }
    let mut head = LogSum::new();
    let mut sup = f64::NEG_INFINITY;
    let mut out = Vec::with_capacity(m);
    for x in 1..=m {
        head.add(-lw[x - 1] - chain.ln_p(x - 1));
        sup = sup.max(head.value() + log_tail[x]);
        out.push(sup.exp());
    }
    out
}

/// Chen's delta truncated at `m`, with the running sup at `m / 2` for the
/// doubling test.
pub fn chen_delta(chain: &BirthDeathChain, m: usize) -> ChenDelta {
    let running = chen_delta_running(chain, m);
    let m = running.len();
    let half = (m / 2).max(1);
    ChenDelta {
        truncation: m,
        sup: running[m - 1],
        half_truncation: half,
        half_sup: running[half - 1],
    }
}

/// Rayleigh quotient `<A' f_n, f_n>` of the matrix with state 0 deleted, at
/// `f_n = n^{-1/2}` on states `1..=n`: `(2/n) sum_{x=1}^{n-1} a(x, x+1)`.
pub fn witness_rayleigh(chain: &BirthDeathChain, n: usize) -> f64 {
    assert!(n >= 2);
    let mut acc = Compensated::new();
    for x in 1..n {
        acc.add((chain.p(x) * chain.q(x + 1)).sqrt());
    }
    2.0 * acc.value() / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapVerdict {
    GapLikely,
    NoGapLikely,
    Inconclusive,
}

/// Thresholds for [`gap_verdict`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapThresholds {
    /// Top eigenvalue above `1 - eps_gap` counts as touching 1.
    pub eps_gap: f64,
    /// Largest change between successive sizes accepted as converged.
    pub stability: f64,
}

impl Default for GapThresholds {
    fn default() -> Self {
        GapThresholds {
            eps_gap: 5e-3,
            stability: 1e-4,
        }
    }
}

/// Spectral probes of one chain over a ladder of truncation sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    #[serde(rename = "N")]
    pub truncation_sizes: Vec<usize>,
    /// Second eigenvalue of the full `N x N` truncation (the top one
    /// approximates `lambda_0 = 1`).
    pub lambda1: Vec<f64>,
    /// Top eigenvalue with `delete_state` removed.
    pub lambda1_raw: Vec<f64>,
    pub delete_state: usize,
    /// `witness_rayleigh(chain, N - 1)`.
    pub witness: Vec<f64>,
    pub delta_running_sup: Vec<f64>,
    pub delta: ChenDelta,
}

/// Runs the truncation ladder: `sizes` are state counts `N >= 2`.
pub fn spectral_report(
    chain: &BirthDeathChain,
    sizes: &[usize],
    delete_state: usize,
) -> Result<SpectralReport> {
    let mut sizes: Vec<usize> = sizes.iter().map(|&n| n.max(2)).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let largest = *sizes.last().expect("at least one truncation size");
    let running = chen_delta_running(chain, largest);
    let mut report = SpectralReport {
        truncation_sizes: sizes.clone(),
        lambda1: Vec::with_capacity(sizes.len()),
        lambda1_raw: Vec::with_capacity(sizes.len()),
        delete_state,
        witness: Vec::with_capacity(sizes.len()),
        delta_running_sup: Vec::with_capacity(sizes.len()),
        delta: chen_delta(chain, largest),
    };
    for &n in &sizes {
        let matrix = jacobi_matrix(chain, n);
        report.lambda1.push(matrix.eigenvalue_from_top(1)?);
        let deleted = delete_state.min(n - 1);
        report.lambda1_raw.push(matrix.top_eigenvalue(Some(deleted))?);
        report.witness.push(if n >= 3 { witness_rayleigh(chain, n - 1) } else { 0.0 });
        report.delta_running_sup.push(running[n - 1]);
    }
    Ok(report)
}

/// Numeric gap/no-gap decision over a [`SpectralReport`].
///
/// Needs at least three sizes spanning two decades, otherwise the answer is
/// [`GapVerdict::Inconclusive`].
pub fn gap_verdict(report: &SpectralReport, thresholds: GapThresholds) -> GapVerdict {
    let sizes = &report.truncation_sizes;
    if sizes.len() < 3 || sizes[sizes.len() - 1] < 100 * sizes[0] {
        return GapVerdict::Inconclusive;
    }
    let raw = &report.lambda1_raw;
    let last = raw[raw.len() - 1];
    let prev = raw[raw.len() - 2];
    let delta_finite = report.delta.is_finite();
    if last > 1.0 - thresholds.eps_gap || !delta_finite {
        GapVerdict::NoGapLikely
    } else if (last - prev).abs() < thresholds.stability
        && last <= 1.0 - 10.0 * thresholds.eps_gap
        && delta_finite
    {
        GapVerdict::GapLikely
    } else {
        GapVerdict::Inconclusive
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_chain, ChainSpec};

    fn chain(spec: ChainSpec) -> BirthDeathChain {
        build_chain(spec).unwrap()
    }

    #[test]
    fn constant_entries() {
        let j = jacobi_matrix(&chain(ChainSpec::constant(1.0 / 3.0)), 5);
        assert!((j.off_diagonal()[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        for &a in &j.off_diagonal()[1..] {
            assert!((a - 2f64.sqrt() / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn lamperti_entry_matches_expansion() {
        let c = 0.25;
        let j = jacobi_matrix(&chain(ChainSpec::lamperti(c, 0.5)), 4);
        let direct = (0.25 * (0.5 + 0.25 / 2f64.sqrt())).sqrt();
        assert!((j.off_diagonal()[1] - direct).abs() < 1e-15);
        // 4 p_1 q_2 = 1 + 2c_2 - 2c_1 - 4 c_1 c_2
        let (c1, c2) = (c, c / 2f64.sqrt());
        let expanded = (0.25 * (1.0 + 2.0 * c2 - 2.0 * c1 - 4.0 * c1 * c2)).sqrt();
        assert!((j.off_diagonal()[1] - expanded).abs() < 1e-15);
    }

    #[test]
    fn symmetric_walk_entries() {
        let j = jacobi_matrix(&chain(ChainSpec::table(vec![0.5])), 6);
        assert!((j.off_diagonal()[0] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(j.off_diagonal()[1..].iter().all(|&a| a == 0.5));
    }

    #[test]
    fn two_state_top() {
        let j = JacobiMatrix::from_off_diagonal(vec![0.5]);
        assert!((j.top_eigenvalue(None).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn interior_deletion_splits_blocks() {
        let j = JacobiMatrix::from_off_diagonal(vec![0.1, 0.9, 0.2, 0.3, 0.4]);
        let left = JacobiMatrix::from_off_diagonal(vec![0.1]).top_eigenvalue(None).unwrap();
        let right = JacobiMatrix::from_off_diagonal(vec![0.3, 0.4]).top_eigenvalue(None).unwrap();
        let got = j.top_eigenvalue(Some(2)).unwrap();
        assert!((got - left.max(right)).abs() < 1e-13);
        // deleting the last state
        let shorter = JacobiMatrix::from_off_diagonal(vec![0.1, 0.9, 0.2, 0.3]);
        assert!((j.top_eigenvalue(Some(5)).unwrap() - shorter.top_eigenvalue(None).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn constant_reduced_top_is_cosine() {
        // With state 0 deleted the matrix is Toeplitz with entry sqrt(pq).
        let c = chain(ChainSpec::constant(1.0 / 3.0));
        let n = 2000;
        let top = jacobi_matrix(&c, n).top_eigenvalue(Some(0)).unwrap();
        let exact = 2.0 * 2f64.sqrt() / 3.0 * (std::f64::consts::PI / n as f64).cos();
        assert!((top - exact).abs() < 1e-11);
        assert!((0.94..=0.9435).contains(&top));
    }

    #[test]
    fn witness_for_symmetric_walk() {
        let c = chain(ChainSpec::table(vec![0.5]));
        for n in [2usize, 3, 10, 1000] {
            assert!((witness_rayleigh(&c, n) - (n as f64 - 1.0) / n as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn chen_delta_single_term() {
        let c = chain(ChainSpec::constant(1.0 / 3.0));
        let d = chen_delta(&c, 1);
        // [pi~(0) p_0]^{-1} * sum_{y >= 1} pi~(y) = Z - 1 = 3
        assert!((d.sup - 3.0).abs() < 1e-12, "{}", d.sup);
    }

    #[test]
    fn chen_delta_finite_for_gap_chain() {
        let c = chain(ChainSpec::constant(1.0 / 3.0));
        let d1 = chen_delta(&c, 1000);
        let d2 = chen_delta(&c, 2000);
        assert!(d1.is_finite() && d2.is_finite());
        assert!((d2.sup / d1.sup - 1.0).abs() < 0.01);
    }

    #[test]
    fn chen_delta_matches_direct_evaluation() {
        // Oracle: plain floating-point sums on a short truncation.
        let c = chain(ChainSpec::table(vec![0.7, 0.2, 0.4, 0.35]));
        let m = 40;
        let measure = stationary_weights(&c, m);
        let w: Vec<f64> = measure.log_weights().iter().map(|l| l.exp()).collect();
        let mut best: f64 = 0.0;
        for x in 1..=m {
            let head: f64 = (0..x).map(|y| 1.0 / (w[y] * c.p(y))).sum();
            let tail: f64 = w[x..].iter().sum::<f64>() + measure.tail_bound();
            best = best.max(head * tail);
        }
        let got = chen_delta(&c, m).sup;
        assert!((got - best).abs() < 1e-10 * best);
    }

    #[test]
    fn chen_delta_infinite_without_tail_bound() {
        let c = chain(ChainSpec::lamperti(0.25, 2.0));
        assert!(!chen_delta(&c, 100).is_finite());
    }

    #[test]
    fn verdict_needs_enough_sizes() {
        let c = chain(ChainSpec::constant(1.0 / 3.0));
        let r = spectral_report(&c, &[100, 1000], 0).unwrap();
        assert_eq!(gap_verdict(&r, GapThresholds::default()), GapVerdict::Inconclusive);
        let r = spectral_report(&c, &[100, 200, 400], 0).unwrap();
        assert_eq!(gap_verdict(&r, GapThresholds::default()), GapVerdict::Inconclusive);
    }

    #[test]
    fn verdicts_for_gap_and_no_gap_chains() {
        let sizes = [100, 1000, 10_000];
        let gap = spectral_report(&chain(ChainSpec::constant(1.0 / 3.0)), &sizes, 0).unwrap();
        assert_eq!(gap_verdict(&gap, GapThresholds::default()), GapVerdict::GapLikely);
        let no_gap = spectral_report(&chain(ChainSpec::lamperti(0.25, 0.5)), &sizes, 0).unwrap();
        assert_eq!(gap_verdict(&no_gap, GapThresholds::default()), GapVerdict::NoGapLikely);
        let json = serde_json::to_value(&no_gap).unwrap();
        for key in ["N", "lambda1_raw", "witness", "delta_running_sup"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn second_eigenvalue_tracks_reduced_top() {
        // lambda1 of the full truncation is interlaced by the reduced top.
        let c = chain(ChainSpec::lamperti(0.25, 0.5));
        let r = spectral_report(&c, &[50, 500, 5000], 0).unwrap();
        for i in 0..3 {
            assert!(r.lambda1[i] <= r.lambda1_raw[i] + 1e-12);
        }
    }
}
