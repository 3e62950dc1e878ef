//! Shared fixtures for the benchmarks.

use storyline_core::bphmm::{ActivityMatrix, ActivityParams, Hyperparams};
use storyline_core::corpus::FrameVector;
use storyline_core::rng::{stream, tag};
use storyline_core::synth::{generate_with_theta, SyntheticTruth};

/// A planted corpus sized like the acceptance recovery run.
pub fn planted(n: usize, k: usize, m: usize, t: usize, seed: u64) -> SyntheticTruth {
    let rows: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..k).map(|a| a == i % k || a == (i + 1) % k).collect())
        .collect();
    let block = m / k;
    let theta = ActivityParams {
        theta: (0..k)
            .map(|a| {
                (0..m)
                    .map(|x| if x / block == a { 0.8 } else { 0.05 })
                    .collect()
            })
            .collect(),
    };
    generate_with_theta(
        ActivityMatrix::new(rows),
        theta,
        &vec![t; n],
        &Hyperparams::default(),
        &mut stream(seed, &[tag("bench-planted")]),
    )
    .unwrap()
}

pub fn random_frames(t: usize, m: usize, density: f64, seed: u64) -> Vec<FrameVector> {
    use rand::Rng;
    let mut rng = stream(seed, &[tag("bench-frames")]);
    (0..t)
        .map(|_| {
            let ones: Vec<usize> = (0..m).filter(|_| rng.random_bool(density)).collect();
            FrameVector::from_indices(m, &ones)
        })
        .collect()
}
