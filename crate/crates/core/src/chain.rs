//! Birth–death chains on the non-negative integers.
//!
//! A chain is fixed by its up-probabilities `p_x`; the down-probability is
//! `q_x = 1 - p_x` for `x >= 1`, and state 0 always steps up (`p_0 = 1`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a [`ChainSpec::Table`] extends past its explicit entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailRule {
    /// Every state beyond the table uses the last listed probability.
    #[default]
    RepeatLast,
}

/// Drift family of a birth–death chain, as read from a chain spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum ChainSpec {
    /// `p_x = p` for every `x >= 1`.
    Constant { p: f64 },
    /// `p_x = 1/2 - c x^{-alpha}`, `q_x = 1/2 + c x^{-alpha}`.
    Lamperti { c: f64, alpha: f64 },
    /// Explicit `p_1, p_2, ...`; `p[0]` is the up-probability of state 1.
    Table {
        p: Vec<f64>,
        #[serde(default)]
        tail: TailRule,
    },
}

impl ChainSpec {
    pub fn constant(p: f64) -> Self {
        ChainSpec::Constant { p }
    }

    pub fn lamperti(c: f64, alpha: f64) -> Self {
        ChainSpec::Lamperti { c, alpha }
    }

    pub fn table(p: Vec<f64>) -> Self {
        ChainSpec::Table {
            p,
            tail: TailRule::RepeatLast,
        }
    }

    /// Parses a chain spec from JSON. The result is not validated; see
    /// [`build_chain`].
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("chain spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        match *self {
            ChainSpec::Constant { p } => {
                if !open_unit(p) {
                    return Err(Error::Domain(format!("constant drift needs 0 < p < 1, got {p}")));
                }
            }
            ChainSpec::Lamperti { c, alpha } => {
                if !(c > 0.0 && c < 0.5) {
                    return Err(Error::Domain(format!(
                        "Lamperti drift needs 0 < c < 1/2 so that p_1 = 1/2 - c > 0, got c = {c}"
                    )));
                }
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::Domain(format!(
                        "Lamperti exponent must be positive and finite, got {alpha}"
                    )));
                }
            }
            ChainSpec::Table { ref p, .. } => {
                if p.is_empty() {
                    return Err(Error::Domain("table chain needs at least one entry".into()));
                }
                if let Some((i, v)) = p.iter().enumerate().find(|(_, v)| !open_unit(**v)) {
                    return Err(Error::Domain(format!(
                        "table entry p_{} = {v} is outside (0, 1)",
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A validated birth–death chain answering `p(x)` and `q(x)` in O(1).
#[derive(Debug, Clone, PartialEq)]
pub struct BirthDeathChain {
    spec: ChainSpec,
}

/// Validates `spec` and builds the chain.
pub fn build_chain(spec: ChainSpec) -> Result<BirthDeathChain> {
    spec.validate()?;
    Ok(BirthDeathChain { spec })
}

impl BirthDeathChain {
    pub fn spec(&self) -> &ChainSpec {
        &self.spec
    }

    /// Half the Lamperti drift, `c x^{-alpha}`; zero for other families.
    #[inline]
    fn lamperti_offset(c: f64, alpha: f64, x: usize) -> f64 {
        c * (x as f64).powf(-alpha)
    }

    /// Up-probability `p(x, x+1)`.
    #[inline]
    pub fn p(&self, x: usize) -> f64 {
        if x == 0 {
            return 1.0;
        }
        match self.spec {
            ChainSpec::Constant { p } => p,
            ChainSpec::Lamperti { c, alpha } => 0.5 - Self::lamperti_offset(c, alpha, x),
            ChainSpec::Table { ref p, .. } => p[(x - 1).min(p.len() - 1)],
        }
    }

    /// Down-probability `p(x, x-1)`; zero at the origin.
    #[inline]
    pub fn q(&self, x: usize) -> f64 {
        if x == 0 {
            return 0.0;
        }
        1.0 - self.p(x)
    }

    /// `ln p_x`, accurate when `p_x` is close to 1/2.
    #[inline]
    pub fn ln_p(&self, x: usize) -> f64 {
        if x == 0 {
            return 0.0;
        }
        match self.spec {
            ChainSpec::Lamperti { c, alpha } => {
                (-2.0 * Self::lamperti_offset(c, alpha, x)).ln_1p() - std::f64::consts::LN_2
            }
            _ => self.p(x).ln(),
        }
    }

    /// `ln q_x`; `-inf` at the origin.
    #[inline]
    pub fn ln_q(&self, x: usize) -> f64 {
        if x == 0 {
            return f64::NEG_INFINITY;
        }
        match self.spec {
            ChainSpec::Lamperti { c, alpha } => {
                (2.0 * Self::lamperti_offset(c, alpha, x)).ln_1p() - std::f64::consts::LN_2
            }
            _ => (1.0 - self.p(x)).ln(),
        }
    }

    /// `c_x = 1/2 - p_x`, the drift offset used by the Lamperti family.
    pub fn drift_offset(&self, x: usize) -> f64 {
        0.5 - self.p(x)
    }
}

/// Recurrence and spectral-gap regime of a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime")]
pub enum Regime {
    /// Drift bounded away from zero towards the origin.
    PositiveRecurrentWithGap,
    /// Drift `~ -c/x^alpha` with `0 < alpha < 1`.
    PositiveRecurrentNoGap,
    /// Drift `~ -c/x^alpha` with `alpha > 1`.
    NullRecurrent,
    /// `alpha = 1`: positive or null recurrence depending on the constants.
    Critical,
    /// Outside the three drift families; carries numeric evidence.
    Unclassified { reason: String },
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::PositiveRecurrentWithGap => "PositiveRecurrentWithGap",
            Regime::PositiveRecurrentNoGap => "PositiveRecurrentNoGap",
            Regime::NullRecurrent => "NullRecurrent",
            Regime::Critical => "Critical",
            Regime::Unclassified { .. } => "Unclassified",
        }
    }
}

/// Numeric evidence gathered for a chain, independent of its family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    /// Truncations at which the reversible mass was summed.
    pub mass_truncations: [usize; 2],
    /// `ln sum_{x <= M} pi~(x)` at each truncation.
    pub log_partial_mass: [f64; 2],
    /// Relative growth of the partial mass between the two truncations.
    pub mass_growth: f64,
    /// Whether the mass growth exceeds the divergence threshold.
    pub mass_diverges: bool,
    /// Running supremum of the Chen delta functional at two truncations.
    pub delta_truncations: [usize; 2],
    pub delta: [f64; 2],
    pub delta_diverges: bool,
}

/// Classification plus the numeric probe results backing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    #[serde(flatten)]
    pub regime: Regime,
    pub evidence: Evidence,
}

/// Truncation at which the divergence probe starts.
pub const PROBE_TRUNCATION: usize = 10_000;
/// Relative growth of partial sums between `M` and `2M` treated as divergence.
pub const DIVERGENCE_GROWTH: f64 = 1e-3;

/// Numeric evidence: mass growth under doubling plus the Chen delta probe.
pub fn gather_evidence(chain: &BirthDeathChain) -> Evidence {
    let m1 = PROBE_TRUNCATION;
    let m2 = 2 * m1;
    let weights = crate::measure::stationary_weights(chain, m2);
    let s1 = weights.log_partial_mass(m1);
    let s2 = weights.log_partial_mass(m2);
    let mass_growth = (s2 - s1).exp_m1();
    let delta = crate::spectral::chen_delta(chain, 2_000);
    Evidence {
        mass_truncations: [m1, m2],
        log_partial_mass: [s1, s2],
        mass_growth,
        mass_diverges: mass_growth > DIVERGENCE_GROWTH,
        delta_truncations: [delta.half_truncation, delta.truncation],
        delta: [delta.half_sup, delta.sup],
        delta_diverges: !delta.is_finite(),
    }
}

/// Regime of `spec` from its drift family alone.
///
/// Families outside the three drift cases get [`Regime::Unclassified`]
/// whose reason summarizes [`gather_evidence`].
pub fn classify(spec: &ChainSpec) -> Regime {
    match *spec {
        ChainSpec::Constant { p } if p < 0.5 => Regime::PositiveRecurrentWithGap,
        ChainSpec::Lamperti { alpha, .. } if alpha < 1.0 => Regime::PositiveRecurrentNoGap,
        ChainSpec::Lamperti { alpha, .. } if alpha > 1.0 => Regime::NullRecurrent,
        ChainSpec::Lamperti { alpha: 1.0, .. } => Regime::Critical,
        _ => {
            let chain = match build_chain(spec.clone()) {
                Ok(chain) => chain,
                Err(e) => return Regime::Unclassified { reason: e.to_string() },
            };
            let ev = gather_evidence(&chain);
            let family = match spec {
                ChainSpec::Constant { .. } => "constant drift with p >= 1/2",
                ChainSpec::Table { .. } => "table chain",
                _ => "Lamperti chain with non-finite exponent",
            };
            Regime::Unclassified {
                reason: format!(
                    "{family} lies outside the drift cases; partial reversible mass grows by {:.3e} \
                     between M={} and M={} ({}); Chen delta {:.6e} -> {:.6e} between M={} and M={} ({})",
                    ev.mass_growth,
                    ev.mass_truncations[0],
                    ev.mass_truncations[1],
                    if ev.mass_diverges { "diverging" } else { "converging" },
                    ev.delta[0],
                    ev.delta[1],
                    ev.delta_truncations[0],
                    ev.delta_truncations[1],
                    if ev.delta_diverges { "diverging" } else { "stable" },
                ),
            }
        }
    }
}

/// [`classify`] together with the numeric evidence.
pub fn classify_with_evidence(spec: &ChainSpec) -> Result<Classification> {
    let chain = build_chain(spec.clone())?;
    Ok(Classification {
        regime: classify(spec),
        evidence: gather_evidence(&chain),
    })
}
