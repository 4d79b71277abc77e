use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A provider's two advertised price points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceRange {
    pub min_cost: f64,
    pub max_cost: f64,
}

impl PriceRange {
    pub fn new(min_cost: f64, max_cost: f64) -> Result<Self> {
        let r = Self { min_cost, max_cost };
        r.validate()?;
        Ok(r)
    }

    pub fn fixed(price: f64) -> Self {
        Self {
            min_cost: price,
            max_cost: price,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_cost > 0.0 && self.min_cost.is_finite())
            || !(self.max_cost >= self.min_cost && self.max_cost.is_finite())
        {
            return Err(Error::InvalidInput(format!(
                "price range needs 0 < min_cost <= max_cost, got [{}, {}]",
                self.min_cost, self.max_cost
            )));
        }
        Ok(())
    }

    pub fn is_fixed(&self) -> bool {
        self.min_cost == self.max_cost
    }
}

/// Draws one step's price: `min_cost` or `max_cost` with equal probability.
///
/// A coin is consumed even for fixed ranges so that switching a provider
/// between fixed and variable pricing leaves the other draws of a stream
/// untouched.
pub fn next_price<R: Rng + ?Sized>(range: &PriceRange, rng: &mut R) -> f64 {
    let high: bool = rng.random();
    if high {
        range.max_cost
    } else {
        range.min_cost
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fixed_range_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = PriceRange::fixed(1.0);
        assert!((0..1000).all(|_| next_price(&r, &mut rng) == 1.0));
    }

    #[test]
    fn two_point_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = PriceRange::new(1.0, 4.0).unwrap();
        let n = 100_000;
        let mean = (0..n).map(|_| next_price(&r, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 2.5).abs() < 0.03, "{mean}");
    }

    #[test]
    fn support_is_exactly_the_two_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = PriceRange::new(1.0, 2.0).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..1000 {
            seen.insert(next_price(&r, &mut rng) as i64);
        }
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn rejects_inverted_range() {
        assert!(PriceRange::new(2.0, 1.0).is_err());
        assert!(PriceRange::new(0.0, 1.0).is_err());
    }
}
