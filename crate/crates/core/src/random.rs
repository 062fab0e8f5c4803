//! Seeded random instances: states, directions and Haar unitaries.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::qcore::{Layout, Operator, State};

/// The crate's single source of randomness.
pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Seed for the `index`-th job of a batch run under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut rng = seeded(master);
    rng.set_stream(index);
    rng.next_u64()
}

/// Uniformly random direction `(theta, phi)` on the sphere.
pub fn direction<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let cos_t: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    (cos_t.acos(), phi)
}

/// Haar-random normalized state on `layout`.
pub fn state<R: Rng + ?Sized>(layout: Layout, rng: &mut R) -> State {
    let amps: Vec<C64> = (0..layout.total_dim()).map(|_| gaussian(rng)).collect();
    State::new(layout, amps).expect("finite").normalized()
}

/// Haar-random unitary from Gram-Schmidt on a complex Ginibre matrix.
pub fn unitary<R: Rng + ?Sized>(dims: Vec<usize>, rng: &mut R) -> Operator {
    let d: usize = dims.iter().product();
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<C64> = (0..d).map(|_| gaussian(rng)).collect();
        for u in &cols {
            let ip: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= ip * y;
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n < 1e-8 {
            continue;
        }
        cols.push(v.into_iter().map(|z| z / n).collect());
    }
    Operator::from_fn(dims, |r, c| cols[c][r])
}
