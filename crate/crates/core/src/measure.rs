//! Reversible weights `pi~(x) = prod_{k=1}^{x} p_{k-1} / q_k`, kept in log
//! space, with certified bounds on the mass beyond the truncation.

use std::io::Write;

use crate::chain::{BirthDeathChain, ChainSpec, DIVERGENCE_GROWTH, PROBE_TRUNCATION};
use crate::error::{Error, Result};
use crate::sum::{log_add_exp, Compensated, LogSum};

/// Reversible measure of a chain on the states `0..=truncation`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryMeasure {
    chain: BirthDeathChain,
    log_weights: Vec<f64>,
    /// `ln Z`; `None` until normalized.
    log_z: Option<f64>,
    /// Upper bound on `sum_{x > M} pi~(x)`, `+inf` when none is known.
    tail_bound: f64,
}

/// Relative tail mass targeted by [`normalized_measure`].
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;
/// Largest truncation [`normalized_measure`] will try.
pub const MAX_AUTO_TRUNCATION: usize = 1 << 24;

/// Log-space reversible weights of `chain` on `0..=m`.
pub fn stationary_weights(chain: &BirthDeathChain, m: usize) -> StationaryMeasure {
    let m = m.max(1);
    let log_weights = log_weights(chain, m);
    let tail_bound = tail_bound(chain, &log_weights);
    StationaryMeasure {
        chain: chain.clone(),
        log_weights,
        log_z: None,
        tail_bound,
    }
}

fn log_weights(chain: &BirthDeathChain, m: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(m + 1);
    let mut acc = Compensated::new();
    out.push(0.0);
    for x in 1..=m {
        acc.add(chain.ln_p(x - 1) - chain.ln_q(x));
        out.push(acc.value());
    }
    out
}

/// Upper bound on the mass beyond the last stored state, in the same
/// (unnormalized) units as the weights.
fn tail_bound(chain: &BirthDeathChain, log_weights: &[f64]) -> f64 {
    let m = log_weights.len() - 1;
    let log_last = log_weights[m];
    match *chain.spec() {
        ChainSpec::Constant { p } => geometric_tail(log_last, p),
        ChainSpec::Table { ref p, .. } => {
            let last = *p.last().expect("validated table is non-empty");
            if last >= 0.5 {
                return f64::INFINITY;
            }
            if m >= p.len() {
                return geometric_tail(log_last, last);
            }
            // Walk the explicit prefix, then the geometric tail.
            let mut acc = Compensated::new();
            let mut lw = log_last;
            let mut partial = LogSum::new();
            for x in m + 1..=p.len() {
                acc.add(chain.ln_p(x - 1) - chain.ln_q(x));
                lw = log_last + acc.value();
                partial.add(lw);
            }
            let tail = log_add_exp(partial.value(), geometric_tail(lw, last).ln());
            tail.exp()
        }
        ChainSpec::Lamperti { c, alpha } => {
            let next = (m + 1) as f64;
            if alpha < 1.0 {
                // prod_{k=M+1}^{M+j} p_{k-1}/q_k <= exp(-4c sum k^-alpha);
                // summing over j and bounding the incomplete gamma integral.
                let denom = 1.0 - alpha / (4.0 * c * next.powf(1.0 - alpha));
                if denom <= 0.0 {
                    return f64::INFINITY;
                }
                (log_last + alpha * next.ln() - (4.0 * c).ln() - denom.ln()).exp()
            } else if alpha == 1.0 && 4.0 * c > 1.0 {
                (log_last + next.ln() - (4.0 * c - 1.0).ln()).exp()
            } else {
                f64::INFINITY
            }
        }
    }
}

/// `pi~(M) * r / (1 - r)` with `r = p / (1 - p)`; infinite when `p >= 1/2`.
fn geometric_tail(log_last: f64, p: f64) -> f64 {
    if p >= 0.5 {
        return f64::INFINITY;
    }
    let ratio = p / (1.0 - p);
    (log_last + ratio.ln() - (-ratio).ln_1p()).exp()
}

impl StationaryMeasure {
    pub fn chain(&self) -> &BirthDeathChain {
        &self.chain
    }

    /// Last stored state `M`.
    pub fn truncation(&self) -> usize {
        self.log_weights.len() - 1
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn is_normalized(&self) -> bool {
        self.log_z.is_some()
    }

    /// `ln Z`, or `+inf` before normalization.
    pub fn log_z(&self) -> f64 {
        self.log_z.unwrap_or(f64::INFINITY)
    }

    /// `ln sum_{x <= m} pi~(x)`.
    pub fn log_partial_mass(&self, m: usize) -> f64 {
        let mut acc = LogSum::new();
        for &lw in &self.log_weights[..=m.min(self.truncation())] {
            acc.add(lw);
        }
        acc.value()
    }

    /// Replaces the weights, keeping the chain. Used to audit perturbed
    /// measures; the tail bound is dropped.
    pub fn with_log_weights(&self, log_weights: Vec<f64>) -> Self {
        assert!(!log_weights.is_empty());
        StationaryMeasure {
            chain: self.chain.clone(),
            log_weights,
            log_z: None,
            tail_bound: f64::INFINITY,
        }
    }

    /// Sets `ln Z = ln(partial mass + tail bound)`.
    ///
    /// Without a certified tail, partial sums are compared at `M1 =
    /// max(M, 10^4)` and `2 M1`; growth beyond 0.1% is reported as
    /// [`Error::DivergentMeasure`].
    pub fn normalize(&self) -> Result<StationaryMeasure> {
        let partial = self.log_partial_mass(self.truncation());
        let log_z = if self.tail_bound.is_finite() {
            log_add_exp(partial, self.tail_bound.ln())
        } else {
            let m1 = self.truncation().max(PROBE_TRUNCATION);
            let probe = if 2 * m1 <= self.truncation() {
                self.clone()
            } else {
                stationary_weights(&self.chain, 2 * m1)
            };
            let s1 = probe.log_partial_mass(m1);
            let s2 = probe.log_partial_mass(2 * m1);
            if (s2 - s1).exp_m1() > DIVERGENCE_GROWTH {
                return Err(Error::DivergentMeasure {
                    m_small: m1,
                    m_large: 2 * m1,
                    partial_small: s1.exp(),
                    partial_large: s2.exp(),
                });
            }
            partial
        };
        Ok(StationaryMeasure {
            log_z: Some(log_z),
            ..self.clone()
        })
    }

    /// `ln pi(x)`; falls back to `ln pi~(x)` when unnormalized.
    #[inline]
    pub fn ln_pi(&self, x: usize) -> f64 {
        self.log_weights[x] - self.log_z.unwrap_or(0.0)
    }

    #[inline]
    pub fn pi(&self, x: usize) -> f64 {
        self.ln_pi(x).exp()
    }

    /// `pi(x)` for every stored state.
    pub fn probabilities(&self) -> Vec<f64> {
        (0..=self.truncation()).map(|x| self.pi(x)).collect()
    }

    /// Certified bound on `|1 - sum_{x <= M} pi(x)|` after normalization.
    pub fn relative_tail(&self) -> f64 {
        self.tail_bound / self.log_z().exp()
    }

    /// Restriction to the states `0..=m` (tail bound recomputed).
    pub fn restrict(&self, m: usize) -> StationaryMeasure {
        let m = m.clamp(1, self.truncation());
        let log_weights = self.log_weights[..=m].to_vec();
        let tail_bound = tail_bound(&self.chain, &log_weights);
        StationaryMeasure {
            chain: self.chain.clone(),
            log_weights,
            log_z: None,
            tail_bound,
        }
    }

    /// CSV with columns `x, log_pi_tilde, pi` (`pi` empty when unnormalized).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "log_pi_tilde", "pi"])?;
        for (x, lw) in self.log_weights.iter().enumerate() {
            let pi = if self.is_normalized() {
                format!("{:e}", self.pi(x))
            } else {
                String::new()
            };
            w.write_record([x.to_string(), format!("{lw:e}"), pi])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Weights truncated where the certified tail drops below
/// `DEFAULT_TAIL_TOLERANCE * Z`, then normalized.
pub fn normalized_measure(chain: &BirthDeathChain) -> Result<StationaryMeasure> {
    normalized_measure_with(chain, DEFAULT_TAIL_TOLERANCE, 64)
}

/// Like [`normalized_measure`] with explicit tolerance and a minimum truncation.
pub fn normalized_measure_with(
    chain: &BirthDeathChain,
    rel_tol: f64,
    min_truncation: usize,
) -> Result<StationaryMeasure> {
    let mut m = min_truncation.max(1);
    loop {
        let measure = stationary_weights(chain, m);
        let partial = measure.log_partial_mass(m).exp();
        let certified = measure.tail_bound.is_finite();
        if (certified && measure.tail_bound <= rel_tol * partial) || m >= MAX_AUTO_TRUNCATION {
            return measure.normalize();
        }
        if !certified && m >= 2 * PROBE_TRUNCATION {
            // No bound will appear by growing M; let the probe decide.
            return measure.normalize();
        }
        m *= 2;
    }
}

/// Largest relative detailed-balance defect over the edges `(x, x+1)`,
/// `x < M`: `|A - B| / max(A, B)` with `A = pi~(x) p_x`, `B = pi~(x+1) q_{x+1}`.
pub fn detailed_balance_residual(chain: &BirthDeathChain, measure: &StationaryMeasure) -> f64 {
    let lw = measure.log_weights();
    (0..lw.len() - 1)
        .map(|x| {
            let a = lw[x] + chain.ln_p(x);
            let b = lw[x + 1] + chain.ln_q(x + 1);
            -(-(a - b).abs()).exp_m1()
        })
        .fold(0.0, f64::max)
}
