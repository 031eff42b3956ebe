//! Seedable deterministic random source.
//!
//! The generator is splitmix64: state advances by the constant
//! 0x9E3779B97F4A7C15 and each output is the finalizer
//! `z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
//!  z *= 0x94D049BB133111EB; z ^= z >> 31`.
//! Identical seeds therefore yield identical draw sequences on every
//! platform, which makes every randomized verdict in this crate
//! reproducible from its reported seed.

const GAMMA: u64 = 0x9E3779B97F4A7C15;

fn mix(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58476D1CE4E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Deterministic 64-bit generator (splitmix64).
#[derive(Debug, Clone)]
pub struct RandomSource {
    state: u64,
    seed: u64,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource { state: seed, seed }
    }

    /// The seed this source was created from, for report echoing.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derived source for trial `index`: seed_i = mix(seed + (index+1)*GAMMA).
    /// Trials drawn from derived sources are independent of the order in
    /// which the trials themselves run.
    pub fn derive(&self, index: u64) -> RandomSource {
        RandomSource::new(mix(
            self.seed.wrapping_add(GAMMA.wrapping_mul(index.wrapping_add(1))),
        ))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix(self.state)
    }

    /// Uniform value in `0..n` by rejection sampling; unbiased for every `n`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let r = (u64::MAX % n + 1) % n;
        if r == 0 {
            return self.next_u64() % n;
        }
        let bound = u64::MAX - r;
        loop {
            let x = self.next_u64();
            if x <= bound {
                return x % n;
            }
        }
    }

    /// Uniform value in `1..=n`.
    pub fn int_in_1_to(&mut self, n: u64) -> u64 {
        self.below(n) + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_seeds_reproduce() {
        let mut a = RandomSource::new(42);
        let mut b = RandomSource::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn pinned_first_outputs() {
        // Reference values of splitmix64 with seed 0; these pin the exact
        // algorithm so that a reimplementation can be checked against it.
        let mut r = RandomSource::new(0);
        assert_eq!(r.next_u64(), 0xE220A8397B1DCDAF);
        assert_eq!(r.next_u64(), 0x6E789E6AA1B965F4);
        assert_eq!(r.next_u64(), 0x06C45D188009454F);
    }

    #[test]
    fn bounded_draws_are_in_range() {
        let mut r = RandomSource::new(7);
        for _ in 0..1000 {
            let x = r.int_in_1_to(30);
            assert!((1..=30).contains(&x));
        }
    }

    #[test]
    fn derive_is_order_independent() {
        let base = RandomSource::new(5);
        let mut first = base.derive(3);
        let a = first.next_u64();
        let mut again = RandomSource::new(5).derive(3);
        assert_eq!(a, again.next_u64());
        assert_ne!(
            base.derive(0).next_u64(),
            base.derive(1).next_u64()
        );
    }
}
