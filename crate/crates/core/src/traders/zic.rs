use rand::Rng;

use super::Role;
use crate::price::Price;

/// Zero-intelligence constrained: uniform random quotes that never cross the limit.
#[derive(Clone, Debug, Default)]
pub struct Zic;

impl Zic {
    pub fn quote<R: Rng + ?Sized>(&self, role: Role, limit: Price, rng: &mut R) -> Price {
        let ticks = match role {
            Role::Buyer => rng.random_range(Price::MIN.ticks()..=limit.ticks()),
            Role::Seller => rng.random_range(limit.ticks()..=Price::MAX.ticks()),
        };
        Price::clamped(ticks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn buyer_draws_are_uniform_below_limit() {
        let limit = Price::from_units(30.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 10_000;
        let bins = 10usize;
        let mut counts = vec![0usize; bins];
        for _ in 0..n {
            let p = Zic.quote(Role::Buyer, limit, &mut rng);
            assert!(p <= limit && p >= Price::MIN);
            let idx = ((p.ticks() - 1) as usize * bins) / limit.ticks() as usize;
            counts[idx.min(bins - 1)] += 1;
        }
        let expected = n as f64 / bins as f64;
        let chi2: f64 = counts.iter().map(|c| (*c as f64 - expected).powi(2) / expected).sum();
        // 9 degrees of freedom, 99.9th percentile
        assert!(chi2 < 27.88, "chi2 {chi2} counts {counts:?}");
    }

    #[test]
    fn seller_at_max_always_quotes_max() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            assert_eq!(Zic.quote(Role::Seller, Price::MAX, &mut rng), Price::MAX);
        }
    }

    #[test]
    fn same_seed_same_draws() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| Zic.quote(Role::Seller, Price::from_units(20.0), &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
    }
}
