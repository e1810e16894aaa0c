#![allow(dead_code)]

use qudit_oct::linalg::{c, CMatrix};
use qudit_oct::pulse::FourierPulse;
use qudit_oct::spin::{build_system, SpinParameters, SpinSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn system() -> SpinSystem {
    build_system(&SpinParameters::default()).unwrap()
}

/// In-band Fourier pulse on `[0, T]` with random coefficients of size `scale` (mT).
pub fn random_pulse(sys: &SpinSystem, t: f64, scale: f64, seed: u64) -> FourierPulse {
    let omega67 = sys.transition_frequency(6, 7).unwrap();
    let p = FourierPulse::new(t, 4.0 * omega67, 10.0, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = (0..p.n_params()).map(|_| rng.gen_range(-scale..scale)).collect();
    p.with_params(u).unwrap()
}

/// Random full-rank density matrix.
pub fn random_density(d: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = CMatrix::from_fn(d, d, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    rho / tr
}

pub fn random_hermitian(d: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = CMatrix::from_fn(d, d, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    (&a + a.adjoint()) * c(0.5, 0.0)
}
