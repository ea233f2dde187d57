//! Seeded, reproducible random-instance generators used by the property
//! and acceptance tests and by the CLI's sampling commands.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::game::{ClassicalGame, MixedProfile};
use crate::linalg::{C64, CMatrix, DensityMatrix, NumericPolicy, SpaceShape};

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Classical game with i.i.d. payoffs in [-1, 1].
pub fn random_classical_game(dims: &SpaceShape, rng: &mut impl Rng) -> ClassicalGame {
    let joint = dims.joint_dim();
    let tensors = (0..dims.n_players())
        .map(|_| (0..joint).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    ClassicalGame::new(dims.clone(), tensors).expect("generated tensors are valid")
}

/// Mixed profile sampled from per-player Dirichlet(1,...,1) via
/// exponential spacings.
pub fn random_mixed_profile(dims: &SpaceShape, rng: &mut impl Rng) -> MixedProfile {
    let probs = dims
        .dims()
        .iter()
        .map(|&d| {
            let raw: Vec<f64> = (0..d).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
            let sum: f64 = raw.iter().sum();
            raw.iter().map(|&x| x / sum).collect()
        })
        .collect();
    MixedProfile::new(probs, &NumericPolicy::default()).expect("normalized by construction")
}

fn random_complex_matrix(n: usize, rng: &mut impl Rng) -> CMatrix {
    DMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

/// Random Hermitian matrix with entries O(1).
pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> CMatrix {
    let m = random_complex_matrix(n, rng);
    (&m + m.adjoint()).scale(0.5)
}

/// Haar-ish random unitary from the QR decomposition of a complex
/// Gaussian-like matrix, with the R diagonal phases absorbed.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> CMatrix {
    let m = random_complex_matrix(n, rng);
    let qr = m.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for row in 0..n {
            q[(row, k)] *= phase;
        }
    }
    q
}

/// Random full-rank density matrix A A† / Tr(A A†).
pub fn random_density(n: usize, rng: &mut impl Rng) -> DensityMatrix {
    let a = random_complex_matrix(n, rng);
    let p = &a * a.adjoint();
    let tr = crate::linalg::trace(&p).re;
    DensityMatrix::new(p.scale(1.0 / tr), &NumericPolicy::default())
        .expect("normalized Gram matrix is a density matrix")
}

/// Random normalized complex amplitude vector.
pub fn random_state_vector(n: usize, rng: &mut impl Rng) -> Vec<C64> {
    let raw: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm: f64 = raw.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    raw.iter().map(|c| c / norm).collect()
}

/// Random complex coefficient vector normalized to unit Euclidean norm
/// (unit norm under the operator inner product when interpreted as
/// operator-basis coefficients).
pub fn random_coefficients(n: usize, rng: &mut impl Rng) -> Vec<C64> {
    random_state_vector(n, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, max_abs};

    #[test]
    fn unitary_is_unitary() {
        let mut rng = seeded_rng(5);
        let u = random_unitary(4, &mut rng);
        assert!(max_abs(&(u.adjoint() * &u - identity(4))) <= 1e-12);
    }

    #[test]
    fn generators_are_reproducible() {
        let dims = SpaceShape::new(vec![2, 3]).unwrap();
        let g1 = random_classical_game(&dims, &mut seeded_rng(42));
        let g2 = random_classical_game(&dims, &mut seeded_rng(42));
        assert_eq!(g1.tensors(), g2.tensors());
    }

    #[test]
    fn density_generator_is_valid() {
        let mut rng = seeded_rng(9);
        let d = random_density(3, &mut rng);
        assert!((d.diagonal_probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}
