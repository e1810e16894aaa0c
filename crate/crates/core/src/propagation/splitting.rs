//! Exponential splitting of the Lindblad flow into a drive-free part `L0`
//! and instantaneous drive kicks, with its exact discrete adjoint.
//!
//! A plan is the alternating product
//! `F_n K_{n-1} F_{n-1} … K_0 F_0` where `F_i = e^{L0 σ_i}` and
//! `K_j(X) = W_j X W_j†` with `W_j = e^{-i g_j s_j V}`, `g_j = f(t_j)`.
//! Strang and fourth-order Yoshida steps differ only in the kick times, kick
//! spans and free spans. Adjacent free factors are merged.

use std::collections::HashMap;

use num_complex::Complex64;

use super::grid::{Scheme, TimeGrid};
use super::lindblad::{superoperator, LindbladModel};
use crate::error::{Error, Result};
use crate::linalg::{matmul_into, CMatrix, Planar};
use crate::spin::{hermitian_eigen, SpinSystem};

const YOSHIDA_C1: f64 = 1.351_207_191_959_657_6; // 1 / (2 - 2^{1/3})
const YOSHIDA_C2: f64 = 1.0 - 2.0 * YOSHIDA_C1;

#[derive(Clone, Debug)]
enum FreeFactor {
    /// Elementwise factor `e^{c_nm σ}` on `X_nm`.
    Diagonal { re: Vec<f64>, im: Vec<f64> },
    /// Dense `d² × d²` map on row-major `vec(X)`.
    Dense { re: Vec<f64>, im: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct SplitPlan {
    d: usize,
    kick_times: Vec<f64>,
    kick_spans: Vec<f64>,
    free_spans: Vec<f64>,
    free_index: Vec<usize>,
    factors: Vec<FreeFactor>,
    energies: Vec<f64>,
    drive: Planar,
    drive_values: Vec<f64>,
    drive_vectors: Planar,
    drive_vectors_adj: Planar,
}

/// Drive propagators `W_j` and `W_j†` for one set of kick amplitudes.
#[derive(Clone, Debug)]
pub struct KickTable {
    w: Vec<Planar>,
    w_adj: Vec<Planar>,
}

impl KickTable {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

impl SplitPlan {
    pub fn new(sys: &SpinSystem, model: &LindbladModel, grid: &TimeGrid, scheme: Scheme) -> Result<Self> {
        let (kick_times, kick_spans, free_spans) = layout(grid, scheme)?;
        let d = sys.dim();

        let generator = superoperator(sys, model, 0.0);
        let diagonal = is_diagonal(&generator);
        let mut cache: HashMap<u64, usize> = HashMap::new();
        let mut factors = Vec::new();
        let mut free_index = Vec::with_capacity(free_spans.len());
        for &span in &free_spans {
            let idx = *cache.entry(span.to_bits()).or_insert_with(|| {
                factors.push(free_factor(&generator, d, span, diagonal));
                factors.len() - 1
            });
            free_index.push(idx);
        }

        let (drive_values, q) = hermitian_eigen(&sys.drive_eigen);
        Ok(Self {
            d,
            kick_times,
            kick_spans,
            free_spans,
            free_index,
            factors,
            energies: sys.energies.clone(),
            drive: Planar::from_matrix(&sys.drive_eigen),
            drive_values,
            drive_vectors_adj: Planar::from_matrix(&q.adjoint()),
            drive_vectors: Planar::from_matrix(&q),
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Times at which the control is sampled, one per kick.
    pub fn kick_times(&self) -> &[f64] {
        &self.kick_times
    }

    /// Signed kick spans `s_j`.
    pub fn kick_spans(&self) -> &[f64] {
        &self.kick_spans
    }

    pub fn n_kicks(&self) -> usize {
        self.kick_times.len()
    }

    /// Builds `W_j = Q e^{-i g_j s_j v} Q†` for control values `g_j`.
    pub fn kicks(&self, amplitudes: &[f64]) -> Result<KickTable> {
        if amplitudes.len() != self.n_kicks() {
            return Err(Error::CardinalityMismatch { expected: self.n_kicks(), got: amplitudes.len() });
        }
        let d = self.d;
        let mut scaled = Planar::zeros(d);
        let mut w = Vec::with_capacity(amplitudes.len());
        let mut w_adj = Vec::with_capacity(amplitudes.len());
        let identity = Planar::from_matrix(&CMatrix::identity(d, d));
        for (&g, &s) in amplitudes.iter().zip(&self.kick_spans) {
            if g * s == 0.0 {
                w.push(identity.clone());
                w_adj.push(identity.clone());
                continue;
            }
            for l in 0..d {
                let (sn, cs) = (-g * s * self.drive_values[l]).sin_cos();
                for i in 0..d {
                    let (qr, qi) = (self.drive_vectors.re[i * d + l], self.drive_vectors.im[i * d + l]);
                    scaled.re[i * d + l] = qr * cs - qi * sn;
                    scaled.im[i * d + l] = qr * sn + qi * cs;
                }
            }
            let mut wj = Planar::zeros(d);
            matmul_into(&scaled, &self.drive_vectors_adj, &mut wj);
            w_adj.push(wj.adjoint());
            w.push(wj);
        }
        Ok(KickTable { w, w_adj })
    }

    fn free(&self, i: usize, x: &mut Planar, scratch: &mut Planar) {
        match &self.factors[self.free_index[i]] {
            FreeFactor::Diagonal { re, im } => x.scale_elementwise(re, im),
            FreeFactor::Dense { re, im } => {
                dense_apply(re, im, x, scratch, false);
                x.copy_from(scratch);
            }
        }
    }

    fn free_adjoint(&self, i: usize, x: &mut Planar, scratch: &mut Planar) {
        match &self.factors[self.free_index[i]] {
            FreeFactor::Diagonal { re, im } => x.scale_elementwise_conj(re, im),
            FreeFactor::Dense { re, im } => {
                dense_apply(re, im, x, scratch, true);
                x.copy_from(scratch);
            }
        }
    }

    fn kick(table: &KickTable, j: usize, x: &mut Planar, scratch: &mut Planar) {
        matmul_into(&table.w[j], x, scratch);
        matmul_into(scratch, &table.w_adj[j], x);
    }

    fn kick_adjoint(table: &KickTable, j: usize, x: &mut Planar, scratch: &mut Planar) {
        matmul_into(&table.w_adj[j], x, scratch);
        matmul_into(scratch, &table.w[j], x);
    }

    /// Propagates `x0` to `T`, calling `visit(j, state)` right after kick `j`.
    pub fn forward_with(&self, table: &KickTable, x0: &Planar, mut visit: impl FnMut(usize, &Planar)) -> Planar {
        let mut x = x0.clone();
        let mut scratch = Planar::zeros(self.d);
        self.free(0, &mut x, &mut scratch);
        for j in 0..table.len() {
            Self::kick(table, j, &mut x, &mut scratch);
            visit(j, &x);
            self.free(j + 1, &mut x, &mut scratch);
        }
        x
    }

    pub fn forward(&self, table: &KickTable, x0: &Planar) -> Planar {
        self.forward_with(table, x0, |_, _| {})
    }

    /// Propagates a costate from `T` back to 0 under the adjoint maps,
    /// calling `visit(j, λ)` with the costate paired to the post-kick state `j`.
    pub fn backward_with(
        &self,
        table: &KickTable,
        lambda_t: &Planar,
        mut visit: impl FnMut(usize, &Planar),
    ) -> Planar {
        let mut lam = lambda_t.clone();
        let mut scratch = Planar::zeros(self.d);
        let n = table.len();
        self.free_adjoint(n, &mut lam, &mut scratch);
        for j in (0..n).rev() {
            visit(j, &lam);
            Self::kick_adjoint(table, j, &mut lam, &mut scratch);
            self.free_adjoint(j, &mut lam, &mut scratch);
        }
        lam
    }

    /// Final state `ρ(T)` and `∂/∂g_j Re Tr(λ_T† ρ(T))` for every kick.
    ///
    /// Both `x0` and `lambda_t` must be Hermitian. Post-kick states are kept
    /// in memory when there are at most `max_stored` of them; otherwise the
    /// forward pass keeps checkpoints and each block is recomputed during
    /// the backward sweep.
    pub fn sensitivity(
        &self,
        table: &KickTable,
        x0: &Planar,
        lambda_t: &Planar,
        max_stored: usize,
    ) -> (Planar, Vec<f64>) {
        let d = self.d;
        let n = table.len();
        let stride = if n <= max_stored.max(1) {
            n.max(1)
        } else {
            ((n as f64).sqrt().ceil() as usize).max(n.div_ceil(max_stored.max(1)))
        };
        let mut scratch = Planar::zeros(d);

        // the forward pass leaves the last block's post-kick states in `block`
        let mut block: Vec<Planar> = (0..stride.min(n)).map(|_| Planar::zeros(d)).collect();
        let mut checkpoints = Vec::with_capacity(n.div_ceil(stride));
        let mut x = x0.clone();
        self.free(0, &mut x, &mut scratch);
        for j in 0..n {
            if j % stride == 0 {
                checkpoints.push(x.clone());
            }
            Self::kick(table, j, &mut x, &mut scratch);
            block[j % stride].copy_from(&x);
            self.free(j + 1, &mut x, &mut scratch);
        }
        let rho_t = x;

        let mut grad = vec![0.0; n];
        let mut lam = lambda_t.clone();
        self.free_adjoint(n, &mut lam, &mut scratch);
        let mut va = Planar::zeros(d);
        let last = checkpoints.len().saturating_sub(1);
        for (b, ckpt) in checkpoints.iter().enumerate().rev() {
            let j0 = b * stride;
            let j1 = (j0 + stride).min(n);
            if b != last {
                let mut y = ckpt.clone();
                for j in j0..j1 {
                    Self::kick(table, j, &mut y, &mut scratch);
                    block[j - j0].copy_from(&y);
                    if j + 1 < j1 {
                        self.free(j + 1, &mut y, &mut scratch);
                    }
                }
            }
            for j in (j0..j1).rev() {
                // for Hermitian λ and a: Im Tr(λ[V, a]) = 2 Im Tr(λ V a)
                matmul_into(&self.drive, &block[j - j0], &mut va);
                grad[j] = 2.0 * self.kick_spans[j] * lam.inner(&va).im;
                Self::kick_adjoint(table, j, &mut lam, &mut scratch);
                self.free_adjoint(j, &mut lam, &mut scratch);
            }
        }
        (rho_t, grad)
    }

    /// Time-ordered `U(T)` for the closed system (ignores dissipation).
    pub fn unitary(&self, table: &KickTable) -> CMatrix {
        let d = self.d;
        let mut u = Planar::from_matrix(&CMatrix::identity(d, d));
        let mut scratch = Planar::zeros(d);
        let rows = |u: &mut Planar, span: f64| {
            for n in 0..d {
                let (s, c) = (-self.energies[n] * span).sin_cos();
                for m in 0..d {
                    let (r, i) = (u.re[n * d + m], u.im[n * d + m]);
                    u.re[n * d + m] = r * c - i * s;
                    u.im[n * d + m] = r * s + i * c;
                }
            }
        };
        rows(&mut u, self.free_spans[0]);
        for j in 0..table.len() {
            matmul_into(&table.w[j], &u, &mut scratch);
            u.copy_from(&scratch);
            rows(&mut u, self.free_spans[j + 1]);
        }
        u.to_matrix()
    }
}

fn layout(grid: &TimeGrid, scheme: Scheme) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let weights: &[f64] = match scheme {
        Scheme::Strang => &[1.0],
        Scheme::Yoshida4 => &[YOSHIDA_C1, YOSHIDA_C2, YOSHIDA_C1],
        other => {
            return Err(Error::InvalidParameter(format!("{other:?} is not a splitting scheme")));
        }
    };
    let n = grid.len() * weights.len();
    let mut kick_times = Vec::with_capacity(n);
    let mut kick_spans = Vec::with_capacity(n);
    let mut free_spans = Vec::with_capacity(n + 1);
    free_spans.push(0.0);
    for &(t0, h) in &grid.steps {
        let mut t = t0;
        for &w in weights {
            let s = w * h;
            *free_spans.last_mut().expect("non-empty") += 0.5 * s;
            kick_times.push(t + 0.5 * s);
            kick_spans.push(s);
            free_spans.push(0.5 * s);
            t += s;
        }
    }
    Ok((kick_times, kick_spans, free_spans))
}

fn is_diagonal(s: &CMatrix) -> bool {
    let scale = s.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    for i in 0..s.nrows() {
        for j in 0..s.ncols() {
            if i != j && s[(i, j)].norm() > 1e-13 * scale {
                return false;
            }
        }
    }
    true
}

fn free_factor(generator: &CMatrix, d: usize, span: f64, diagonal: bool) -> FreeFactor {
    if diagonal {
        let mut re = vec![0.0; d * d];
        let mut im = vec![0.0; d * d];
        for p in 0..d * d {
            let z = (generator[(p, p)] * span).exp();
            re[p] = z.re;
            im[p] = z.im;
        }
        FreeFactor::Diagonal { re, im }
    } else {
        let m = (generator * Complex64::new(span, 0.0)).exp();
        let n = d * d;
        let mut re = vec![0.0; n * n];
        let mut im = vec![0.0; n * n];
        for p in 0..n {
            for q in 0..n {
                re[p * n + q] = m[(p, q)].re;
                im[p * n + q] = m[(p, q)].im;
            }
        }
        FreeFactor::Dense { re, im }
    }
}

fn dense_apply(re: &[f64], im: &[f64], x: &Planar, out: &mut Planar, adjoint: bool) {
    let n = x.re.len();
    for p in 0..n {
        let (mut ar, mut ai) = (0.0, 0.0);
        for q in 0..n {
            let (mr, mi) = if adjoint {
                (re[q * n + p], -im[q * n + p])
            } else {
                (re[p * n + q], im[p * n + q])
            };
            ar += mr * x.re[q] - mi * x.im[q];
            ai += mr * x.im[q] + mi * x.re[q];
        }
        out.re[p] = ar;
        out.im[p] = ai;
    }
}
