use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MINUTES_PER_HOUR: u32 = 60;

/// `k` distinct minutes of the hour, uniformly at random, in ascending
/// order. Rates above 60 are clamped since a tag attempts at most once per
/// minute.
pub fn schedule_hour_with<R: Rng + ?Sized>(k: u32, rng: &mut R) -> Vec<u32> {
    let k = if k > MINUTES_PER_HOUR {
        log::warn!("rate {k}/h exceeds one attempt per minute, clamping to {MINUTES_PER_HOUR}");
        MINUTES_PER_HOUR
    } else {
        k
    };
    let mut minutes: Vec<u32> = sample(rng, MINUTES_PER_HOUR as usize, k as usize)
        .into_iter()
        .map(|m| m as u32)
        .collect();
    minutes.sort_unstable();
    minutes
}

/// [`schedule_hour_with`] driven by a fresh generator seeded with `seed`.
pub fn schedule_hour(k: u32, seed: u64) -> Vec<u32> {
    schedule_hour_with(k, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_rates() {
        assert!(schedule_hour(0, 1).is_empty());
        assert_eq!(schedule_hour(60, 1), (0..60).collect::<Vec<_>>());
        assert_eq!(schedule_hour(75, 1).len(), 60);
    }

    #[test]
    fn seeded_schedules_repeat() {
        let a = schedule_hour(6, 42);
        assert_eq!(a, schedule_hour(6, 42));
        assert_eq!(a.len(), 6);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert!(a.iter().all(|&m| m < 60));
    }
}
