use crsim_core::markov::{blocking_probability, OccupancyChain};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plays sessions on a single band directly from the model: start at the
/// conditioned stationary law, complete with probability `c`, otherwise
/// move occupancy and check the boundary.
fn monte_carlo_noncompletion(chain: &OccupancyChain, d: u32, c: f64, gamma: f64, sessions: u64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pi = chain.stationary().unwrap();
    let limit = chain.capacity() - d;
    let admissible: Vec<f64> = pi.probabilities()[..=limit as usize].to_vec();
    let total: f64 = admissible.iter().sum();
    let mut dropped = 0u64;
    for _ in 0..sessions {
        let mut u = rng.gen::<f64>() * total;
        let mut k = 0u32;
        for (i, w) in admissible.iter().enumerate() {
            k = i as u32;
            if u < *w {
                break;
            }
            u -= w;
        }
        loop {
            if rng.gen::<f64>() < c {
                break;
            }
            let step = rng.gen::<f64>();
            if step < chain.up(k) {
                k += 1;
            } else if step < chain.up(k) + chain.down(k) {
                k -= 1;
            }
            if k > limit {
                dropped += 1;
                break;
            }
            if k == limit {
                if limit > 0 && rng.gen::<f64>() < gamma {
                    k -= 1;
                } else {
                    dropped += 1;
                    break;
                }
            }
        }
    }
    dropped as f64 / sessions as f64
}

#[test]
fn noncompletion_example_matches_monte_carlo() {
    let chain = OccupancyChain::new(2, 0.3, 0.3).unwrap();
    let analytic = chain.noncompletion_probability(1, 0.1, 0.5).unwrap();
    assert!((analytic - 0.641_489_361_702_127_3).abs() < 1e-12);
    let mc = monte_carlo_noncompletion(&chain, 1, 0.1, 0.5, 1_000_000, 7);
    assert!((mc - analytic).abs() < 0.005, "mc {mc} vs {analytic}");
}

#[test]
fn canonical_noncompletion_matches_monte_carlo() {
    let chain = OccupancyChain::new(8, 0.2, 0.2).unwrap();
    let analytic = chain.noncompletion_probability(4, 0.1, 0.6).unwrap();
    assert!((analytic - 0.211_393_554_119_158_58).abs() < 1e-12);
    let mc = monte_carlo_noncompletion(&chain, 4, 0.1, 0.6, 400_000, 8);
    assert!((mc - analytic).abs() < 0.005, "mc {mc} vs {analytic}");
}

#[test]
fn canonical_blocking() {
    let chain = OccupancyChain::new(8, 0.2, 0.2).unwrap();
    let b = blocking_probability(&[chain], 4).unwrap();
    assert!((b - 4.0 / 9.0).abs() < 1e-12);
}

#[test]
fn independent_bands_multiply() {
    let a = OccupancyChain::new(8, 0.2, 0.2).unwrap();
    let b = OccupancyChain::new(6, 0.1, 0.3).unwrap();
    let both = blocking_probability(&[a, b], 4).unwrap();
    let each = blocking_probability(&[a], 4).unwrap() * blocking_probability(&[b], 4).unwrap();
    assert!((both - each).abs() < 1e-15);
}
