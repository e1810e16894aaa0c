//! Reference integrators working directly on the generator: classical RK4
//! and the frozen-midpoint exponential. Slower than the splitting, used as
//! cross-checks.

use num_complex::Complex64;

use super::grid::{Scheme, TimeGrid};
use super::lindblad::{hamiltonian, lindbladian_adjoint_apply, lindbladian_apply, superoperator, LindbladModel};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, I};
use crate::pulse::Waveform;
use crate::spin::{hermitian_eigen, SpinSystem};

fn rk4_step(x: &CMatrix, h: f64, t: f64, rhs: &impl Fn(f64, &CMatrix) -> CMatrix) -> CMatrix {
    let k1 = rhs(t, x);
    let k2 = rhs(t + 0.5 * h, &(x + &k1 * Complex64::new(0.5 * h, 0.0)));
    let k3 = rhs(t + 0.5 * h, &(x + &k2 * Complex64::new(0.5 * h, 0.0)));
    let k4 = rhs(t + h, &(x + &k3 * Complex64::new(h, 0.0)));
    x + (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4) * Complex64::new(h / 6.0, 0.0)
}

/// `e^{-i H h}` for Hermitian `H`.
fn unitary_exp(h_mat: &CMatrix, h: f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(h_mat);
    let phases = nalgebra::DVector::from_iterator(vals.len(), vals.iter().map(|&e| Complex64::from_polar(1.0, -e * h)));
    &vecs * CMatrix::from_diagonal(&phases) * vecs.adjoint()
}

fn vec_apply(m: &CMatrix, x: &CMatrix) -> CMatrix {
    let d = x.nrows();
    let v = CMatrix::from_fn(d * d, 1, |p, _| x[(p / d, p % d)]);
    let out = m * v;
    CMatrix::from_fn(d, d, |i, j| out[(i * d + j, 0)])
}

fn check(scheme: Scheme) -> Result<()> {
    match scheme {
        Scheme::Rk4 | Scheme::ExpMidpoint => Ok(()),
        other => Err(Error::InvalidParameter(format!("{other:?} is not a generator-based scheme"))),
    }
}

/// Forward density-matrix propagation, calling `visit(i, t, ρ)` after step `i`.
pub fn forward(
    sys: &SpinSystem,
    model: &LindbladModel,
    pulse: &dyn Waveform,
    grid: &TimeGrid,
    scheme: Scheme,
    rho0: &CMatrix,
    mut visit: impl FnMut(usize, f64, &CMatrix),
) -> Result<CMatrix> {
    check(scheme)?;
    let mut rho = rho0.clone();
    for (i, &(t, h)) in grid.steps.iter().enumerate() {
        rho = match scheme {
            Scheme::Rk4 => rk4_step(&rho, h, t, &|s, x| lindbladian_apply(sys, model, pulse.value(s), x)),
            _ => {
                let f = pulse.value(t + 0.5 * h);
                if model.is_closed() {
                    let u = unitary_exp(&hamiltonian(sys, f), h);
                    &u * &rho * u.adjoint()
                } else {
                    let m = (superoperator(sys, model, f) * Complex64::new(h, 0.0)).exp();
                    vec_apply(&m, &rho)
                }
            }
        };
        visit(i, t + h, &rho);
    }
    Ok(rho)
}

/// Backward costate propagation `λ̇ = -L†λ` from `T` to 0, calling
/// `visit(i, t, λ)` with `λ` at the start time `t` of step `i`.
pub fn backward(
    sys: &SpinSystem,
    model: &LindbladModel,
    pulse: &dyn Waveform,
    grid: &TimeGrid,
    scheme: Scheme,
    lambda_t: &CMatrix,
    mut visit: impl FnMut(usize, f64, &CMatrix),
) -> Result<CMatrix> {
    check(scheme)?;
    let mut lam = lambda_t.clone();
    for (i, &(t, h)) in grid.steps.iter().enumerate().rev() {
        lam = match scheme {
            // integrate dλ/dt = -L†λ from t + h down to t
            Scheme::Rk4 => rk4_step(&lam, -h, t + h, &|s, x| {
                -lindbladian_adjoint_apply(sys, model, pulse.value(s), x)
            }),
            _ => {
                let f = pulse.value(t + 0.5 * h);
                if model.is_closed() {
                    let u = unitary_exp(&hamiltonian(sys, f), h);
                    u.adjoint() * &lam * &u
                } else {
                    let m = (superoperator(sys, model, f) * Complex64::new(h, 0.0)).exp();
                    vec_apply(&m.adjoint(), &lam)
                }
            }
        };
        visit(i, t, &lam);
    }
    Ok(lam)
}

pub fn unitary(sys: &SpinSystem, pulse: &dyn Waveform, grid: &TimeGrid, scheme: Scheme) -> Result<CMatrix> {
    check(scheme)?;
    let d = sys.dim();
    let mut u = CMatrix::identity(d, d);
    for &(t, h) in &grid.steps {
        u = match scheme {
            Scheme::Rk4 => rk4_step(&u, h, t, &|s, x| hamiltonian(sys, pulse.value(s)) * x * (-I)),
            _ => unitary_exp(&hamiltonian(sys, pulse.value(t + 0.5 * h)), h) * &u,
        };
    }
    Ok(u)
}
