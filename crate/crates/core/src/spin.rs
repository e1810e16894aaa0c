//! Spin operators, the zero-field-splitting + Zeeman Hamiltonian and its
//! eigenbasis.
//!
//! Units: ħ = 1, time in μs, energies and frequencies in rad/μs. Inputs are in
//! MHz (anisotropy constants) and mT (fields).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};

/// Bohr magneton over Planck's constant, MHz/mT (CODATA).
pub const MU_B_OVER_H_MHZ_PER_MT: f64 = 13.996245;

/// Angular-frequency conversion of one MHz.
pub const RAD_PER_US_PER_MHZ: f64 = 2.0 * PI;

/// Gaps below this (rad/μs) are treated as degeneracies.
pub const DEGENERACY_TOLERANCE: f64 = 1e-6;

/// Matrix elements of V below this (rad/μs per mT) are treated as forbidden.
pub const FORBIDDEN_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpinParameters {
    pub spin: f64,
    /// Axial anisotropy, MHz.
    pub d_mhz: f64,
    /// Rhombic anisotropy, MHz.
    pub e_mhz: f64,
    pub g: f64,
    /// Static field magnitude, mT.
    pub b_mt: f64,
    pub field_axis: [f64; 3],
    pub drive_axis: [f64; 3],
}

impl Default for SpinParameters {
    /// The GdW30 qudit: S = 7/2, D = 1281 MHz, E = 294 MHz, 150 mT along x,
    /// drive along y.
    fn default() -> Self {
        Self {
            spin: 3.5,
            d_mhz: 1281.0,
            e_mhz: 294.0,
            g: 2.0,
            b_mt: 150.0,
            field_axis: [1.0, 0.0, 0.0],
            drive_axis: [0.0, 1.0, 0.0],
        }
    }
}

impl SpinParameters {
    pub fn validate(&self) -> Result<()> {
        check_spin(self.spin)?;
        for (name, v) in [("D", self.d_mhz), ("E", self.e_mhz), ("g", self.g), ("B", self.b_mt)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        for (name, axis) in [("field_axis", self.field_axis), ("drive_axis", self.drive_axis)] {
            let n = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (n - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be a unit vector (norm {n})"
                )));
            }
        }
        Ok(())
    }
}

fn check_spin(s: f64) -> Result<usize> {
    let twice = 2.0 * s;
    if !s.is_finite() || twice < 1.0 || (twice - twice.round()).abs() > 1e-12 {
        return Err(Error::InvalidSpin(s));
    }
    Ok(twice.round() as usize + 1)
}

#[derive(Clone, Debug)]
pub struct SpinOperators {
    pub sx: CMatrix,
    pub sy: CMatrix,
    pub sz: CMatrix,
}

/// Angular-momentum matrices in the |S, m⟩ basis ordered m = S, S-1, …, -S.
pub fn build_spin_operators(spin: f64) -> Result<SpinOperators> {
    let d = check_spin(spin)?;
    let m = |i: usize| spin - i as f64;
    let mut sz = CMatrix::zeros(d, d);
    let mut sp = CMatrix::zeros(d, d);
    for i in 0..d {
        sz[(i, i)] = c(m(i), 0.0);
        if i > 0 {
            // S+ |m⟩ = sqrt(S(S+1) - m(m+1)) |m+1⟩
            let mi = m(i);
            sp[(i - 1, i)] = c((spin * (spin + 1.0) - mi * (mi + 1.0)).sqrt(), 0.0);
        }
    }
    let sm = sp.adjoint();
    let sx = (&sp + &sm).scale(0.5);
    let sy = (&sp - &sm) * c(0.0, -0.5);
    Ok(SpinOperators { sx, sy, sz })
}

impl SpinOperators {
    pub fn dim(&self) -> usize {
        self.sz.nrows()
    }

    /// `n · S`.
    pub fn along(&self, n: [f64; 3]) -> CMatrix {
        self.sx.scale(n[0]) + self.sy.scale(n[1]) + self.sz.scale(n[2])
    }
}

/// A diagonalized spin Hamiltonian together with its drive operator.
///
/// `h0_zfs`, `h0_zeeman`, `h0` and `drive` are in the |S, m⟩ basis; `energies`,
/// `eigenvectors` and `drive_eigen` describe the eigenbasis used everywhere
/// downstream.
#[derive(Clone, Debug)]
pub struct SpinSystem {
    pub params: SpinParameters,
    pub ops: SpinOperators,
    pub h0_zfs: CMatrix,
    pub h0_zeeman: CMatrix,
    pub h0: CMatrix,
    /// Ascending eigenvalues of `h0`, rad/μs.
    pub energies: Vec<f64>,
    /// Columns are eigenvectors; each column's largest-modulus component is
    /// real and positive.
    pub eigenvectors: CMatrix,
    /// Drive operator per mT of field amplitude (rad/μs per mT), spin basis.
    pub drive: CMatrix,
    /// Drive operator in the eigenbasis.
    pub drive_eigen: CMatrix,
    /// Set when two adjacent levels are closer than [`DEGENERACY_TOLERANCE`].
    pub degenerate: bool,
}

fn zeeman_scale(params: &SpinParameters) -> f64 {
    -params.g * MU_B_OVER_H_MHZ_PER_MT * RAD_PER_US_PER_MHZ
}

pub fn zero_field_splitting(params: &SpinParameters, ops: &SpinOperators) -> CMatrix {
    let d = ops.dim();
    let s = params.spin;
    let sz2 = &ops.sz * &ops.sz;
    let sx2 = &ops.sx * &ops.sx;
    let sy2 = &ops.sy * &ops.sy;
    let axial = sz2 - CMatrix::identity(d, d).scale(s * (s + 1.0) / 3.0);
    (axial.scale(params.d_mhz) + (sx2 - sy2).scale(params.e_mhz)).scale(RAD_PER_US_PER_MHZ)
}

pub fn zeeman_term(params: &SpinParameters, ops: &SpinOperators) -> CMatrix {
    ops.along(params.field_axis).scale(zeeman_scale(params) * params.b_mt)
}

pub fn build_system(params: &SpinParameters) -> Result<SpinSystem> {
    params.validate()?;
    let ops = build_spin_operators(params.spin)?;
    let h0_zfs = zero_field_splitting(params, &ops);
    let h0_zeeman = zeeman_term(params, &ops);
    let h0 = &h0_zfs + &h0_zeeman;
    let drive = ops.along(params.drive_axis).scale(zeeman_scale(params));

    let (energies, eigenvectors) = hermitian_eigen(&h0);
    let drive_eigen = eigenvectors.adjoint() * &drive * &eigenvectors;
    let degenerate = energies
        .windows(2)
        .any(|w| (w[1] - w[0]).abs() < DEGENERACY_TOLERANCE);
    if degenerate {
        log::warn!("spin Hamiltonian has a degenerate spectrum; levels are not addressable");
    }
    Ok(SpinSystem {
        params: params.clone(),
        ops,
        h0_zfs,
        h0_zeeman,
        h0,
        energies,
        eigenvectors,
        drive,
        drive_eigen,
        degenerate,
    })
}

/// Ascending eigenvalues and phase-fixed eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let d = h.nrows();
    let herm = (h + h.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMatrix::zeros(d, d);
    for (col, &src) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(src);
        let pivot = (0..d)
            .max_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm()).then(b.cmp(&a)))
            .unwrap_or(0);
        let phase = if v[pivot].norm() > 0.0 {
            v[pivot].conj() / v[pivot].norm()
        } else {
            c(1.0, 0.0)
        };
        let norm = v.norm();
        for r in 0..d {
            vecs[(r, col)] = v[r] * phase / norm;
        }
    }
    (energies, vecs)
}

fn check_level(sys: &SpinSystem, n: usize) -> Result<()> {
    if n >= sys.dim() {
        return Err(Error::LevelOutOfRange { index: n, dim: sys.dim() });
    }
    Ok(())
}

impl SpinSystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `H0` in its own eigenbasis.
    pub fn h0_eigen(&self) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim(),
            self.energies.iter().map(|&e| c(e, 0.0)),
        ))
    }

    /// `|E_k - E_j|` in rad/μs.
    pub fn transition_frequency(&self, j: usize, k: usize) -> Result<f64> {
        check_level(self, j)?;
        check_level(self, k)?;
        if j == k {
            return Err(Error::SameLevel(j));
        }
        Ok((self.energies[k] - self.energies[j]).abs())
    }

    /// `⟨j|V|k⟩` in the eigenbasis (rad/μs per mT).
    pub fn drive_element(&self, j: usize, k: usize) -> Result<Complex64> {
        check_level(self, j)?;
        check_level(self, k)?;
        Ok(self.drive_eigen[(j, k)])
    }

    /// Time unit τ = 2π/ω_67 for the top two levels of an S = 7/2 system
    /// (in general, the top pair `(d-2, d-1)`).
    pub fn tau(&self) -> f64 {
        let d = self.dim();
        2.0 * PI / self.transition_frequency(d - 2, d - 1).unwrap_or(f64::NAN)
    }

    /// Largest transition frequency present, rad/μs.
    pub fn max_transition_frequency(&self) -> f64 {
        self.energies.last().copied().unwrap_or(0.0) - self.energies.first().copied().unwrap_or(0.0)
    }
}

/// Convert a real matrix into a complex one.
pub fn complexify(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| c(x, 0.0))
}
