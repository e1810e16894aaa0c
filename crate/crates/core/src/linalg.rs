//! Small dense complex matrices.
//!
//! The public API uses `nalgebra::DMatrix<Complex64>`. The propagation hot loop
//! works on [`Planar`], a row-major matrix with split real and imaginary
//! planes, so that the inner loops of the products vectorize.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

/// `Tr(a b)`.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Hilbert-Schmidt inner product `Tr(a† b)`.
pub fn inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    (a - a.adjoint()).norm()
}

pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - CMatrix::identity(n, n)).norm()
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    let h = (a + a.adjoint()).scale(0.5);
    h.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `1 - |Tr(a† b)| / d` for unitaries: zero iff `a` and `b` agree up to a
/// global phase.
pub fn phase_insensitive_deficit(a: &CMatrix, b: &CMatrix) -> f64 {
    let d = a.nrows() as f64;
    1.0 - inner(a, b).norm() / d
}

#[derive(Clone, Debug, PartialEq)]
pub struct Planar {
    pub d: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl Planar {
    pub fn zeros(d: usize) -> Self {
        Self {
            d,
            re: vec![0.0; d * d],
            im: vec![0.0; d * d],
        }
    }

    pub fn from_matrix(m: &CMatrix) -> Self {
        let d = m.nrows();
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                let z = m[(i, j)];
                out.re[i * d + j] = z.re;
                out.im[i * d + j] = z.im;
            }
        }
        out
    }

    pub fn to_matrix(&self) -> CMatrix {
        let d = self.d;
        CMatrix::from_fn(d, d, |i, j| c(self.re[i * d + j], self.im[i * d + j]))
    }

    pub fn adjoint(&self) -> Self {
        let d = self.d;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.re[j * d + i] = self.re[i * d + j];
                out.im[j * d + i] = -self.im[i * d + j];
            }
        }
        out
    }

    pub fn copy_from(&mut self, other: &Planar) {
        self.re.copy_from_slice(&other.re);
        self.im.copy_from_slice(&other.im);
    }

    /// Elementwise product with a complex factor table.
    pub fn scale_elementwise(&mut self, fre: &[f64], fim: &[f64]) {
        for (((xr, xi), &a), &b) in self
            .re
            .iter_mut()
            .zip(self.im.iter_mut())
            .zip(fre)
            .zip(fim)
        {
            let r = *xr * a - *xi * b;
            let i = *xr * b + *xi * a;
            *xr = r;
            *xi = i;
        }
    }

    /// Elementwise product with the conjugate of a complex factor table.
    pub fn scale_elementwise_conj(&mut self, fre: &[f64], fim: &[f64]) {
        for (((xr, xi), &a), &b) in self
            .re
            .iter_mut()
            .zip(self.im.iter_mut())
            .zip(fre)
            .zip(fim)
        {
            let r = *xr * a + *xi * b;
            let i = -*xr * b + *xi * a;
            *xr = r;
            *xi = i;
        }
    }

    /// `Tr(self† other)`.
    pub fn inner(&self, other: &Planar) -> Complex64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for k in 0..self.re.len() {
            re += self.re[k] * other.re[k] + self.im[k] * other.im[k];
            im += self.re[k] * other.im[k] - self.im[k] * other.re[k];
        }
        c(re, im)
    }
}

/// `out = a * b`.
pub fn matmul_into(a: &Planar, b: &Planar, out: &mut Planar) {
    match a.d {
        8 => matmul_fixed::<8>(a, b, out),
        4 => matmul_fixed::<4>(a, b, out),
        _ => matmul_dyn(a, b, out),
    }
}

fn matmul_fixed<const N: usize>(a: &Planar, b: &Planar, out: &mut Planar) {
    let (are, aim) = (&a.re[..N * N], &a.im[..N * N]);
    let (bre, bim) = (&b.re[..N * N], &b.im[..N * N]);
    // two output rows at a time so that their dependency chains interleave
    const R: usize = 2;
    debug_assert!(N.is_multiple_of(R));
    for i0 in (0..N).step_by(R) {
        let mut acc_re = [[0.0; N]; R];
        let mut acc_im = [[0.0; N]; R];
        for l in 0..N {
            let br: &[f64; N] = bre[l * N..(l + 1) * N].try_into().expect("row length");
            let bi: &[f64; N] = bim[l * N..(l + 1) * N].try_into().expect("row length");
            for r in 0..R {
                let ar = are[(i0 + r) * N + l];
                let ai = aim[(i0 + r) * N + l];
                for j in 0..N {
                    acc_re[r][j] += ar * br[j] - ai * bi[j];
                    acc_im[r][j] += ar * bi[j] + ai * br[j];
                }
            }
        }
        for r in 0..R {
            let i = i0 + r;
            out.re[i * N..(i + 1) * N].copy_from_slice(&acc_re[r]);
            out.im[i * N..(i + 1) * N].copy_from_slice(&acc_im[r]);
        }
    }
}

fn matmul_dyn(a: &Planar, b: &Planar, out: &mut Planar) {
    let d = a.d;
    out.re.iter_mut().for_each(|x| *x = 0.0);
    out.im.iter_mut().for_each(|x| *x = 0.0);
    for i in 0..d {
        let (ore, oim) = (
            &mut out.re[i * d..(i + 1) * d],
            &mut out.im[i * d..(i + 1) * d],
        );
        for l in 0..d {
            let ar = a.re[i * d + l];
            let ai = a.im[i * d + l];
            let bre = &b.re[l * d..(l + 1) * d];
            let bim = &b.im[l * d..(l + 1) * d];
            for j in 0..d {
                ore[j] += ar * bre[j] - ai * bim[j];
                oim[j] += ar * bim[j] + ai * bre[j];
            }
        }
    }
}

/// `x <- w x w_adj`, with `w_adj` the precomputed adjoint of `w`.
pub fn conjugate_in_place(x: &mut Planar, w: &Planar, w_adj: &Planar, scratch: &mut Planar) {
    matmul_into(w, x, scratch);
    matmul_into(scratch, w_adj, x);
}
