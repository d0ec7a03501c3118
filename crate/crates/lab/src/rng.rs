//! Seeded generators. Parallel jobs draw from one ChaCha stream per chunk,
//! so results do not depend on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Splits `total` items into chunks of at most `chunk` items:
/// `(chunk index, start, len)`.
pub fn chunks(total: usize, chunk: usize) -> Vec<(u64, usize, usize)> {
    let chunk = chunk.max(1);
    (0..total.div_ceil(chunk))
        .map(|c| {
            let start = c * chunk;
            (c as u64, start, chunk.min(total - start))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_differ_and_repeat() {
        let a: u64 = stream(7, 0).random();
        let b: u64 = stream(7, 1).random();
        assert_ne!(a, b);
        assert_eq!(a, stream(7, 0).random::<u64>());
    }

    #[test]
    fn chunks_cover_the_range() {
        let c = chunks(10, 4);
        assert_eq!(c, vec![(0, 0, 4), (1, 4, 4), (2, 8, 2)]);
        assert!(chunks(0, 4).is_empty());
    }
}
