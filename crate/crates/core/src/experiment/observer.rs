use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Synthetic participant that compares peak clone displacements.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObserverModel {
    /// Displacements below this look the same, m.
    pub displacement_floor: f64,
    /// Smallest relative signal difference reported.
    pub weber_fraction: f64,
    /// Standard deviation of log-normal multiplicative noise; 0 is deterministic.
    pub noise_sd: f64,
}

impl Default for ObserverModel {
    fn default() -> Self {
        ObserverModel { displacement_floor: 0.001, weber_fraction: 0.2, noise_sd: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairAnswer {
    HeavierIsA,
    HeavierIsB,
    NoDifference,
}

impl ObserverModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.displacement_floor >= 0.0) || !self.displacement_floor.is_finite() {
            return Err(Error::validation("observer.floor", "floor must be non-negative"));
        }
        if !(self.weber_fraction > 0.0 && self.weber_fraction < 1.0) {
            return Err(Error::validation("observer.weber", "weber fraction must lie in (0, 1)"));
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return Err(Error::validation("observer.noise", "noise must be non-negative"));
        }
        Ok(())
    }

    /// Parses `floor=1mm,weber=0.2[,noise=0.1]`; omitted keys keep defaults.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut m = ObserverModel::default();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("expected key=value in observer spec, got {part:?}")))?;
            match key.trim() {
                "floor" => m.displacement_floor = crate::scenario::parse_length(value)?,
                "weber" => m.weber_fraction = parse_number(value)?,
                "noise" => m.noise_sd = parse_number(value)?,
                other => return Err(Error::InvalidArgument(format!("unknown observer key {other:?}"))),
            }
        }
        m.validate()?;
        Ok(m)
    }

    /// Signal as perceived: floored, then perturbed when noise is enabled.
    /// Draws one normal variate from `rng` only if `noise_sd > 0`.
    pub fn effective<R: Rng + ?Sized>(&self, signal: f64, rng: &mut R) -> f64 {
        let s = signal.max(self.displacement_floor);
        if self.noise_sd > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            s * (self.noise_sd * z).exp()
        } else {
            s
        }
    }

    /// Compares two already-perceived signals.
    pub fn judge(&self, a: f64, b: f64) -> PairAnswer {
        let hi = a.max(b);
        if hi <= 0.0 || (a - b).abs() / hi <= self.weber_fraction {
            PairAnswer::NoDifference
        } else if a > b {
            PairAnswer::HeavierIsA
        } else {
            PairAnswer::HeavierIsB
        }
    }
}

fn parse_number(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::InvalidArgument(format!("cannot parse number {s:?}")))
}

pub fn observer_perceive_pair<R: Rng + ?Sized>(s_a: f64, s_b: f64, model: &ObserverModel, rng: &mut R) -> PairAnswer {
    let a = model.effective(s_a, rng);
    let b = model.effective(s_b, rng);
    model.judge(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::{prop_assert_eq, prop_assume, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn pair_examples() {
        let m = ObserverModel::default();
        assert_eq!(observer_perceive_pair(0.002, 0.002, &m, &mut rng()), PairAnswer::NoDifference);
        assert_eq!(observer_perceive_pair(0.0024, 0.0031, &m, &mut rng()), PairAnswer::HeavierIsB);
        assert_eq!(observer_perceive_pair(0.0003, 0.0009, &m, &mut rng()), PairAnswer::NoDifference);
        let zero = ObserverModel { displacement_floor: 0.0, ..m };
        assert_eq!(observer_perceive_pair(0.0, 0.0, &zero, &mut rng()), PairAnswer::NoDifference);
    }

    #[test]
    fn deterministic_observer_leaves_rng_untouched() {
        let m = ObserverModel::default();
        let mut r = rng();
        observer_perceive_pair(0.01, 0.02, &m, &mut r);
        assert_eq!(r.random::<u64>(), rng().random::<u64>());
    }

    #[test]
    fn spec_parsing() {
        let m = ObserverModel::parse("floor=1mm,weber=0.2,noise=0.1").unwrap();
        assert_eq!(m, ObserverModel { displacement_floor: 0.001, weber_fraction: 0.2, noise_sd: 0.1 });
        assert_eq!(ObserverModel::parse("floor=0").unwrap().displacement_floor, 0.0);
        assert!(ObserverModel::parse("weber=1.5").is_err());
        assert!(ObserverModel::parse("gain=2").is_err());
    }

    proptest! {
        #[test]
        fn scaling_both_signals_keeps_the_answer(a in 0.0..0.2f64, b in 0.0..0.2f64, alpha in 0.01..100.0f64) {
            let m = ObserverModel { displacement_floor: 0.0, ..Default::default() };
            prop_assume!(((a - b).abs() / a.max(b).max(1e-300) - m.weber_fraction).abs() > 1e-9);
            prop_assert_eq!(m.judge(a, b), m.judge(a * alpha, b * alpha));
        }

        #[test]
        fn answer_is_antisymmetric(a in 0.0..0.2f64, b in 0.0..0.2f64) {
            let m = ObserverModel::default();
            let swapped = match m.judge(b, a) {
                PairAnswer::HeavierIsA => PairAnswer::HeavierIsB,
                PairAnswer::HeavierIsB => PairAnswer::HeavierIsA,
                PairAnswer::NoDifference => PairAnswer::NoDifference,
            };
            prop_assert_eq!(m.judge(a, b), swapped);
        }
    }
}
