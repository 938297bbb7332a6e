//! Hard thresholding, normalization and angles on a noisy sparse vector.
//!
//! `cargo run --example sparse_geometry`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sparse_halfspace::linalg::{angle, hard_threshold, normalize};
use sparse_halfspace::oracles::GroundTruth;

fn main() -> sparse_halfspace::Result<()> {
    let (d, s) = (200, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let truth = GroundTruth::random(d, s, &mut rng)?;
    let noise = Normal::new(0.0, 0.05).expect("valid sd");

    println!("{:>6} {:>12} {:>12} {:>10}", "keep", "‖H(v)−u‖₂", "2‖v−u‖₂", "angle");
    let noisy: Vec<f64> = truth.u.iter().map(|x| x + noise.sample(&mut rng)).collect();
    let bound = 2.0 * truth.u.dist2(&noisy);
    for keep in [1, s, 2 * s, 4 * s, d] {
        let h = hard_threshold(&noisy, keep)?;
        let direction = normalize(&h)?;
        println!(
            "{keep:>6} {:>12.4} {:>12.4} {:>10.4}",
            h.dist2(&truth.u),
            bound,
            angle(&direction, &truth.u)?
        );
    }
    Ok(())
}
