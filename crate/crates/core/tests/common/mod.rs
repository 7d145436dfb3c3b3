//! Test-only oracles. Nothing here calls into the simulator's linear algebra.
#![allow(dead_code)]

use dormant_core::{DensityMatrix, StateVector};
use num_complex::Complex64;

/// Builds a state from `(bitstring, amplitude)` terms.
pub fn ket(n: usize, terms: &[(&str, f64)]) -> StateVector {
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    for (bits, amp) in terms {
        assert_eq!(bits.len(), n);
        let idx = usize::from_str_radix(bits, 2).unwrap();
        amps[idx] += Complex64::new(*amp, 0.0);
    }
    StateVector::from_amplitudes(amps).unwrap()
}

/// Enumerates all n-bit strings of even parity.
pub fn even_parity_strings(n: usize) -> Vec<String> {
    (0..1usize << n)
        .filter(|i| i.count_ones() % 2 == 0)
        .map(|i| format!("{i:0n$b}"))
        .collect()
}

/// `Σ w_k |s_k><s_k|` computed entry by entry from raw amplitude lists.
pub fn mixture(n: usize, parts: &[(f64, Vec<Complex64>)]) -> DensityMatrix {
    let dim = 1 << n;
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    for (w, v) in parts {
        for r in 0..dim {
            for c in 0..dim {
                data[r * dim + c] += v[r] * v[c].conj() * *w;
            }
        }
    }
    DensityMatrix::from_rows(n, data).unwrap()
}

/// Eigenvalues of a Hermitian matrix via cyclic Jacobi on its real
/// symmetric embedding `[[Re, -Im], [Im, Re]]` (each eigenvalue doubled).
#[allow(clippy::needless_range_loop)]
pub fn jacobi_eigenvalues(rho: &DensityMatrix) -> Vec<f64> {
    let d = rho.dim();
    let n = 2 * d;
    let mut a = vec![vec![0.0f64; n]; n];
    for r in 0..d {
        for c in 0..d {
            let z = rho.get(r, c);
            a[r][c] = z.re;
            a[r + d][c + d] = z.re;
            a[r][c + d] = -z.im;
            a[r + d][c] = z.im;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
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
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    // drop the duplicate copy of each eigenvalue
    eig.into_iter().step_by(2).collect()
}

/// Partial transpose over the second qubit of a 4×4 matrix, written out by
/// index swapping on the 2×2 blocks.
pub fn pt_second(rho: &DensityMatrix) -> DensityMatrix {
    let mut data = vec![Complex64::new(0.0, 0.0); 16];
    for i in 0..2 {
        for j in 0..2 {
            // block (i, j) is transposed
            for k in 0..2 {
                for l in 0..2 {
                    data[(2 * i + k) * 4 + (2 * j + l)] = rho.get(2 * i + l, 2 * j + k);
                }
            }
        }
    }
    DensityMatrix::from_rows(2, data).unwrap()
}

/// Real-valued 4-amplitude Bell/product kets.
pub fn c(v: [f64; 4]) -> Vec<Complex64> {
    v.iter().map(|x| Complex64::new(*x, 0.0)).collect()
}

/// `p(q2 = 0 | q1 = 0) - 1/2` by brute force: sums squared amplitudes of the
/// state after the gates, with no use of the report machinery.
pub fn brute_conditional(state: &StateVector) -> (f64, f64) {
    let n = state.n_qubits();
    let hi = 1 << (n - 1);
    let second = 1 << (n - 2);
    let (mut p0, mut p00) = (0.0, 0.0);
    for (i, a) in state.amplitudes().iter().enumerate() {
        if i & hi == 0 {
            p0 += a.norm_sqr();
            if i & second == 0 {
                p00 += a.norm_sqr();
            }
        }
    }
    (p0, p00 / p0)
}
