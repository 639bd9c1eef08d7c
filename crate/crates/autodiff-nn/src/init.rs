//! Deterministic weight initialization rules.
//!
//! Fixed documented constants so that a seed pins every parameter bit:
//! linear and recurrent weight matrices draw uniformly from
//! `±1/√fan_in`, embedding tables from `±0.1`, and biases start at zero.

use crate::tensor::Tensor;
use rand::Rng;

/// Half-width of the uniform embedding initialization.
pub const EMBEDDING_HALF_WIDTH: f64 = 0.1;

/// Half-width of the uniform fan-in initialization for weight matrices.
pub fn fan_in_half_width(fan_in: usize) -> f64 {
    assert!(fan_in > 0, "fan-in must be positive");
    1.0 / (fan_in as f64).sqrt()
}

/// `rows × cols` tensor with i.i.d. entries uniform on `[-half_width, half_width)`.
///
/// Entries are drawn in row-major order, one `f64` from `rng` each, so the
/// layout (not just the multiset) of values is reproducible.
pub fn uniform_tensor(rng: &mut impl Rng, rows: usize, cols: usize, half_width: f64) -> Tensor {
    let data = (0..rows * cols).map(|_| half_width * (2.0 * rng.gen::<f64>() - 1.0)).collect();
    Tensor::new(rows, cols, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn entries_stay_inside_the_half_width() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let t = uniform_tensor(&mut rng, 20, 30, 0.25);
        assert!(t.data().iter().all(|v| v.abs() < 0.25));
        assert!(t.data().iter().any(|v| v.abs() > 0.05));
    }

    #[test]
    fn the_same_seed_rebuilds_the_same_tensor() {
        let draw = || {
            let mut rng = ChaCha12Rng::seed_from_u64(99);
            uniform_tensor(&mut rng, 4, 4, fan_in_half_width(16))
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn fan_in_scaling_shrinks_with_width() {
        assert!((fan_in_half_width(64) - 0.125).abs() < 1e-15);
        assert!(fan_in_half_width(128) < fan_in_half_width(64));
    }
}
