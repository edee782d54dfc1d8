//! Effective sample size, slot statistics, observables and the stationarity
//! identity checker.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::integrator::{integrate, LegSpec};
use crate::phase::{PhaseState, TargetModel};
use crate::xchmc::{sigma_sequence, ChainRecord, SlotDistribution};

/// Minimum series length accepted by [`ess_initial_monotone`].
pub const MIN_ESS_LEN: usize = 10;

type ObservableFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A real function of the position.
#[derive(Clone)]
pub struct Observable {
    name: String,
    min_dim: usize,
    func: ObservableFn,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Observable").field(&self.name).finish()
    }
}

impl Observable {
    pub fn new(
        name: impl Into<String>,
        min_dim: usize,
        func: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            min_dim,
            func: Arc::new(func),
        }
    }

    /// `xᵢ` (0-based index).
    pub fn coordinate(i: usize) -> Self {
        Self::new(format!("coord:{i}"), i + 1, move |x| x[i])
    }

    /// `xᵢ²`.
    pub fn square(i: usize) -> Self {
        Self::new(format!("square:{i}"), i + 1, move |x| x[i] * x[i])
    }

    /// `‖x‖²`.
    pub fn squared_radius() -> Self {
        Self::new("radius2", 1, |x| x.iter().map(|v| v * v).sum())
    }

    /// `1{a ≤ xᵢ ≤ b}`.
    pub fn indicator(i: usize, lower: f64, upper: f64) -> Self {
        Self::new(format!("indicator:{i}:{lower}:{upper}"), i + 1, move |x| {
            if (lower..=upper).contains(&x[i]) {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Parses `coord:i`, `square:i`, `radius2` or `indicator:i:a:b`.
    pub fn parse(spec: &str) -> Result<Self> {
        let unknown = || Error::UnknownObservable(spec.to_string());
        let parts: Vec<&str> = spec.split(':').collect();
        let index = |s: &str| s.parse::<usize>().map_err(|_| unknown());
        let real = |s: &str| s.parse::<f64>().map_err(|_| unknown());
        match parts.as_slice() {
            ["coord", i] => Ok(Self::coordinate(index(i)?)),
            ["square", i] => Ok(Self::square(index(i)?)),
            ["radius2"] => Ok(Self::squared_radius()),
            ["indicator", i, a, b] => {
                let (a, b) = (real(a)?, real(b)?);
                if !(a <= b) {
                    return Err(unknown());
                }
                Ok(Self::indicator(index(i)?, a, b))
            }
            _ => Err(unknown()),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Smallest dimension the observable can be evaluated in.
    pub fn min_dim(&self) -> usize {
        self.min_dim
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.func)(x)
    }
}

/// Output of [`ess_initial_monotone`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EssEstimate {
    pub ess: f64,
    /// Series length `N + 1`.
    pub len: usize,
    /// Lag-0 autocovariance (divisor `N + 1`).
    pub gamma0: f64,
    /// `σ² = −γ₀ + 2 Σ Γₘ` before any guard.
    pub asymptotic_variance: f64,
    /// Number of pair sums `Γₘ` kept.
    pub pairs: usize,
    /// `σ² ≤ 0` after truncation; ESS reported as `N + 1`.
    pub nonpositive_variance: bool,
    /// Raw estimate exceeded `N + 1` and was clamped.
    pub clamped: bool,
}

impl EssEstimate {
    /// ESS divided by the series length.
    pub fn relative(&self) -> f64 {
        self.ess / self.len as f64
    }
}

/// Effective sample size by the initial monotone sequence estimator.
///
/// Autocovariances use divisor `N + 1` on the mean-centred series. Pair sums
/// `Γₘ = γ₂ₘ + γ₂ₘ₊₁` are accumulated up to (excluding) the first
/// non-positive one, each clipped to its predecessor so the sequence is
/// non-increasing. `ESS = (N + 1) γ₀ / σ²` with `σ² = −γ₀ + 2 Σ Γₘ`,
/// clamped to `(0, N + 1]`.
pub fn ess_initial_monotone(series: &[f64]) -> Result<EssEstimate> {
    let n = series.len();
    if n < MIN_ESS_LEN {
        return Err(Error::SeriesTooShort {
            len: n,
            min: MIN_ESS_LEN,
        });
    }
    if !series.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("series"));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let autocov = |lag: usize| -> f64 {
        centred[..n - lag]
            .iter()
            .zip(&centred[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };

    let gamma0 = autocov(0);
    let scale = series.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if gamma0 <= (1e-14 * scale).powi(2) || gamma0 == 0.0 {
        return Err(Error::ZeroVariance);
    }

    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut pairs = 0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let g = if m == 0 {
            gamma0 + autocov(1)
        } else {
            autocov(2 * m) + autocov(2 * m + 1)
        };
        if g <= 0.0 {
            break;
        }
        let g = g.min(prev);
        sum += g;
        prev = g;
        pairs += 1;
        m += 1;
    }

    let sigma2 = -gamma0 + 2.0 * sum;
    let len = n as f64;
    let (ess, nonpositive, clamped) = if sigma2 <= 0.0 {
        (len, true, false)
    } else {
        let raw = len * gamma0 / sigma2;
        if raw > len {
            (len, false, true)
        } else {
            (raw, false, false)
        }
    };
    Ok(EssEstimate {
        ess,
        len: n,
        gamma0,
        asymptotic_variance: sigma2,
        pairs,
        nonpositive_variance: nonpositive,
        clamped,
    })
}

/// Outcome counts per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotStats {
    /// `counts[k − 1]` for slot `k = 1…K+2`.
    pub counts: Vec<u64>,
    pub fractions: Vec<f64>,
}

impl SlotStats {
    pub fn from_slots(
        extra_chances: usize,
        slots: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let mut counts = vec![0u64; extra_chances + 2];
        for s in slots {
            if s == 0 || s > extra_chances + 2 {
                return Err(Error::invalid(
                    "slot",
                    format!("{s} outside 1..={}", extra_chances + 2),
                ));
            }
            counts[s - 1] += 1;
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyRecord);
        }
        let fractions = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(Self { counts, fractions })
    }

    pub fn extra_chances(&self) -> usize {
        self.counts.len() - 2
    }

    pub fn transitions(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `a_k`: fraction accepted after `k` extra chances (slot `k + 1`).
    pub fn acceptance(&self, k: usize) -> f64 {
        self.fractions[k]
    }

    pub fn flip_fraction(&self) -> f64 {
        *self.fractions.last().expect("non-empty")
    }

    /// `Σₖ a_k`.
    pub fn total_acceptance(&self) -> f64 {
        self.fractions[..self.fractions.len() - 1].iter().sum()
    }
}

/// Tallies the slots of a chain record.
pub fn slot_stats(record: &ChainRecord) -> Result<SlotStats> {
    SlotStats::from_slots(
        record.extra_chances,
        record.transitions.iter().map(|t| t.slot),
    )
}

/// Standard error of a proportion estimated from `n` effectively independent draws.
pub fn proportion_stderr(p: f64, n: f64) -> f64 {
    (p * (1.0 - p) / n).sqrt()
}

/// Mean of an observable along a chain with its ESS-based standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageEstimate {
    pub mean: f64,
    /// Sample standard deviation (divisor `N`).
    pub std_dev: f64,
    pub ess: Result<EssEstimate>,
}

impl AverageEstimate {
    /// `std_dev / sqrt(ESS)`, when the ESS is defined.
    pub fn std_err(&self) -> Option<f64> {
        self.ess.as_ref().ok().map(|e| self.std_dev / e.ess.sqrt())
    }
}

/// Estimates `⟨A⟩` from a series of observable values.
pub fn estimate_series_average(values: &[f64]) -> Result<AverageEstimate> {
    if values.is_empty() {
        return Err(Error::EmptyRecord);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std_dev = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(AverageEstimate {
        mean,
        std_dev,
        ess: ess_initial_monotone(values),
    })
}

/// Estimates `⟨A⟩` over the production trajectory `x₀ … x_N`.
pub fn estimate_average(record: &ChainRecord, observable: &Observable) -> Result<AverageEstimate> {
    let values: Vec<f64> = record.positions().map(|x| observable.eval(x)).collect();
    estimate_series_average(&values)
}

/// Discrepancy in `ρ(z) p⁽ᵏ⁾(z) = ρ(F Iᵏz) p⁽ᵏ⁾(F Iᵏz)`.
///
/// The right side is evaluated by integrating afresh from `w = F Iᵏz`, not
/// by reusing the orbit of `z`. Both sides are scaled by
/// `exp(−max(log ρ(z), log ρ(w)))`, so the unknown normalizer cancels and the
/// returned value is `|lhs − rhs| / max(ρ(z), ρ(w))`.
///
/// Fails with [`Error::Diverged`] when `Iᵏz` cannot be computed.
pub fn check_main_identity(
    model: &TargetModel,
    leg: &LegSpec,
    z: &PhaseState,
    k: usize,
) -> Result<f64> {
    Ok(main_identity_sides(model, leg, z, k)?.discrepancy())
}

/// Both sides of the identity, scaled by the shared reference density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentitySides {
    pub lhs: f64,
    pub rhs: f64,
}

impl IdentitySides {
    pub fn discrepancy(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

pub fn main_identity_sides(
    model: &TargetModel,
    leg: &LegSpec,
    z: &PhaseState,
    k: usize,
) -> Result<IdentitySides> {
    if k == 0 {
        return Err(Error::invalid("k", "slot index starts at 1"));
    }
    model.check_dim(z)?;
    let log_z = model.log_rho(z)?;
    let mut ratios = Vec::with_capacity(k);
    let mut current = z.clone();
    for _ in 0..k {
        current = integrate(model, leg, &current)?.state;
        ratios.push(crate::xchmc::log_ratio(model.log_rho(&current)?, log_z));
    }
    let left = SlotDistribution::from_log_ratios(&ratios);
    let w = current.flipped();
    let log_w = model.log_rho(&w)?;
    let right = sigma_sequence(model, leg, &w, k - 1)?;

    let reference = log_z.max(log_w);
    let lhs = (log_z - reference).exp() * left.slot_probability(k);
    let rhs = (log_w - reference).exp() * right.slot_probability(k);
    Ok(IdentitySides { lhs, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{chain_rng, NoiseSource};

    #[test]
    fn short_series_rejected() {
        assert!(matches!(
            ess_initial_monotone(&[1.0, 2.0, 3.0]),
            Err(Error::SeriesTooShort { len: 3, .. })
        ));
    }

    #[test]
    fn constant_series_has_no_ess() {
        assert!(matches!(
            ess_initial_monotone(&[0.1; 50]),
            Err(Error::ZeroVariance)
        ));
        assert!(matches!(
            ess_initial_monotone(&[3.0; 50]),
            Err(Error::ZeroVariance)
        ));
    }

    #[test]
    fn alternating_series_clamps_to_length() {
        let s: Vec<f64> = (0..1001)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let e = ess_initial_monotone(&s).unwrap();
        assert_eq!(e.ess, 1001.0);
        assert!(e.clamped || e.nonpositive_variance);
    }

    #[test]
    fn iid_normals() {
        let mut rng = chain_rng(2024, 0);
        let mut s = vec![0.0; 100_000];
        rng.fill_standard_normal(&mut s);
        let r = ess_initial_monotone(&s).unwrap().relative();
        assert!((0.9..=1.1).contains(&r), "relative ESS {r}");
    }

    #[test]
    fn slot_tally() {
        let st = SlotStats::from_slots(3, [1, 1, 1, 1]).unwrap();
        assert_eq!(st.acceptance(0), 1.0);
        assert_eq!(st.flip_fraction(), 0.0);
        let st = SlotStats::from_slots(2, [1, 2, 4, 3, 1, 4]).unwrap();
        assert_eq!(st.counts, vec![2, 1, 1, 2]);
        assert!((st.fractions.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(SlotStats::from_slots(2, [5]).is_err());
        assert!(SlotStats::from_slots(2, []).is_err());
    }

    #[test]
    fn observable_parsing() {
        let x = [1.5, -2.0, 0.5];
        assert_eq!(Observable::parse("coord:1").unwrap().eval(&x), -2.0);
        assert_eq!(Observable::parse("square:0").unwrap().eval(&x), 2.25);
        assert_eq!(Observable::parse("radius2").unwrap().eval(&x), 6.5);
        let ind = Observable::parse("indicator:2:0:1").unwrap();
        assert_eq!(ind.eval(&x), 1.0);
        assert_eq!(ind.min_dim(), 3);
        for bad in ["coord", "coord:x", "indicator:0:1:0", "dihedral", ""] {
            assert!(Observable::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn constant_observable_keeps_mean() {
        let est = estimate_series_average(&[2.5; 40]).unwrap();
        assert_eq!(est.mean, 2.5);
        assert!(matches!(est.ess, Err(Error::ZeroVariance)));
        assert!(est.std_err().is_none());
    }
}
