use qudit_oct::spin::{build_system, SpinParameters};

/// Cyclic Jacobi on a real symmetric matrix; returns (eigenvalues, column eigenvectors).
#[allow(clippy::needless_range_loop)]
fn jacobi(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

type C = (f64, f64);

/// Spin-7/2 Hamiltonian rebuilt from the ladder operators, as (re, im) pairs.
fn oracle_h0(p: &SpinParameters) -> (Vec<Vec<C>>, Vec<Vec<C>>) {
    let s = p.spin;
    let d = (2.0 * s + 1.0).round() as usize;
    let m = |i: usize| s - i as f64;
    // S+ |m> = sqrt(s(s+1) - m(m+1)) |m+1>
    let mut splus = vec![vec![0.0; d]; d];
    for i in 1..d {
        splus[i - 1][i] = (s * (s + 1.0) - m(i) * (m(i) + 1.0)).sqrt();
    }
    let sx: Vec<Vec<C>> = (0..d).map(|i| (0..d).map(|j| (0.5 * (splus[i][j] + splus[j][i]), 0.0)).collect()).collect();
    let sy: Vec<Vec<C>> = (0..d).map(|i| (0..d).map(|j| (0.0, -0.5 * (splus[i][j] - splus[j][i]))).collect()).collect();
    let sz: Vec<Vec<C>> = (0..d).map(|i| (0..d).map(|j| (if i == j { m(i) } else { 0.0 }, 0.0)).collect()).collect();
    let mul = |a: &Vec<Vec<C>>, b: &Vec<Vec<C>>| -> Vec<Vec<C>> {
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        (0..d).fold((0.0, 0.0), |acc, k| {
                            let (x, y) = (a[i][k], b[k][j]);
                            (acc.0 + x.0 * y.0 - x.1 * y.1, acc.1 + x.0 * y.1 + x.1 * y.0)
                        })
                    })
                    .collect()
            })
            .collect()
    };
    let two_pi = 2.0 * std::f64::consts::PI;
    let mub = 13.996245 * two_pi;
    let (sx2, sy2, sz2) = (mul(&sx, &sx), mul(&sy, &sy), mul(&sz, &sz));
    let along = |n: [f64; 3], i: usize, j: usize| -> C {
        (
            n[0] * sx[i][j].0 + n[1] * sy[i][j].0 + n[2] * sz[i][j].0,
            n[0] * sx[i][j].1 + n[1] * sy[i][j].1 + n[2] * sz[i][j].1,
        )
    };
    let h: Vec<Vec<C>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let id = if i == j { s * (s + 1.0) / 3.0 } else { 0.0 };
                    let zfs_re = p.d_mhz * (sz2[i][j].0 - id) + p.e_mhz * (sx2[i][j].0 - sy2[i][j].0);
                    let zfs_im = p.d_mhz * sz2[i][j].1 + p.e_mhz * (sx2[i][j].1 - sy2[i][j].1);
                    let z = along(p.field_axis, i, j);
                    (two_pi * zfs_re - p.g * mub * p.b_mt * z.0, two_pi * zfs_im - p.g * mub * p.b_mt * z.1)
                })
                .collect()
        })
        .collect();
    let v: Vec<Vec<C>> = (0..d)
        .map(|i| (0..d).map(|j| { let a = along(p.drive_axis, i, j); (-p.g * mub * a.0, -p.g * mub * a.1) }).collect())
        .collect();
    (h, v)
}

#[test]
fn energies_and_drive_match_independent_diagonalization() {
    let params = SpinParameters::default();
    let sys = build_system(&params).unwrap();
    let (h, v) = oracle_h0(&params);
    let d = h.len();
    // real embedding [[Re, -Im], [Im, Re]] doubles every eigenvalue
    let mut big = vec![vec![0.0; 2 * d]; 2 * d];
    for i in 0..d {
        for j in 0..d {
            big[i][j] = h[i][j].0;
            big[i + d][j + d] = h[i][j].0;
            big[i][j + d] = -h[i][j].1;
            big[i + d][j] = h[i][j].1;
        }
    }
    let (vals, vecs) = jacobi(big);
    let mut order: Vec<usize> = (0..2 * d).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let scale = vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut states: Vec<Vec<C>> = Vec::new();
    for n in 0..d {
        let (a, b) = (order[2 * n], order[2 * n + 1]);
        assert!((vals[a] - vals[b]).abs() < 1e-9 * scale);
        let e = 0.5 * (vals[a] + vals[b]);
        assert!((sys.energies[n] - e).abs() < 1e-9 * scale, "level {n}: {} vs {e}", sys.energies[n]);
        states.push((0..d).map(|i| (vecs[i][a], vecs[i + d][a])).collect());
    }
    // |<j|V|k>| is phase independent
    for j in 0..d {
        for k in 0..d {
            let mut acc = (0.0, 0.0);
            for i in 0..d {
                for l in 0..d {
                    let x = (states[j][i].0, -states[j][i].1);
                    let y = v[i][l];
                    let z = states[k][l];
                    let xy = (x.0 * y.0 - x.1 * y.1, x.0 * y.1 + x.1 * y.0);
                    acc.0 += xy.0 * z.0 - xy.1 * z.1;
                    acc.1 += xy.0 * z.1 + xy.1 * z.0;
                }
            }
            let oracle = acc.0.hypot(acc.1);
            let ours = sys.drive_element(j, k).unwrap().norm();
            assert!((ours - oracle).abs() < 1e-9 * 300.0, "V[{j},{k}]: {ours} vs {oracle}");
        }
    }
}

#[test]
fn reference_system_values() {
    let sys = build_system(&SpinParameters::default()).unwrap();
    assert_eq!(sys.dim(), 8);
    assert!(!sys.degenerate);
    let gaps: Vec<f64> = sys.energies.windows(2).map(|w| w[1] - w[0]).collect();
    for (i, a) in gaps.iter().enumerate() {
        assert!(*a > 0.0);
        for b in &gaps[i + 1..] {
            assert!((a - b).abs() > 1.0);
        }
    }
    assert!(sys.drive_element(6, 7).unwrap().norm() > 1.0);
    let tau = sys.tau();
    assert!((tau * sys.transition_frequency(6, 7).unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
}
