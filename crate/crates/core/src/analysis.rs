//! Density matrices, partial trace, the PPT test, and conditional
//! probabilities between two measured qubits.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::dormant::{state_activation_table, DormantFamily};
use crate::error::{input, Result};
use crate::state::{StateVector, Unitary1Q, BRANCH_EPS};
use crate::{AMP_TOL, PROB_TOL};

/// Dense `2^n × 2^n` complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn zeros(n_qubits: usize) -> Self {
        let dim = 1 << n_qubits;
        Self {
            n_qubits,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    /// Builds from row-major entries; no physicality checks.
    pub fn from_rows(n_qubits: usize, data: Vec<Complex64>) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if data.len() != dim * dim {
            return input(format!("{} entries do not form a {dim}x{dim} matrix", data.len()));
        }
        Ok(Self { n_qubits, data })
    }

    /// `|ψ><ψ|`.
    pub fn from_state(state: &StateVector) -> Self {
        let mut rho = Self::zeros(state.n_qubits());
        rho.add_projector(state, 1.0);
        rho
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    /// `self += weight · |ψ><ψ|`.
    pub fn add_projector(&mut self, state: &StateVector, weight: f64) {
        let dim = self.dim();
        let amps = state.amplitudes();
        for r in 0..dim {
            for c in 0..dim {
                self.data[r * dim + c] += amps[r] * amps[c].conj() * weight;
            }
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> Result<f64> {
        if self.n_qubits != other.n_qubits {
            return input("density matrices have different sizes");
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let dim = self.dim();
        (0..dim).all(|r| (0..dim).all(|c| (self.get(r, c) - self.get(c, r).conj()).norm() <= tol))
    }

    /// Hermitian, unit trace, and no eigenvalue below `-1e-10`.
    pub fn is_physical(&self) -> bool {
        self.is_hermitian(AMP_TOL)
            && (self.trace() - Complex64::new(1.0, 0.0)).norm() <= AMP_TOL
            && self.eigenvalues().iter().all(|e| *e >= -PROB_TOL)
    }

    /// Eigenvalues in ascending order. The Hermitian part is used.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let dim = self.dim();
        let m = DMatrix::from_fn(dim, dim, |r, c| (self.get(r, c) + self.get(c, r).conj()) * 0.5);
        let mut eig: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        eig
    }

    /// Reduces onto `keep` (1-based, any order; result uses ascending order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let layout = Layout::new(self.n_qubits, keep)?;
        let kd = 1usize << layout.keep.len();
        let mut out = DensityMatrix::zeros(layout.keep.len());
        for a in 0..kd {
            for b in 0..kd {
                let mut acc = Complex64::new(0.0, 0.0);
                for e in 0..1usize << layout.env.len() {
                    acc += self.get(layout.index(a, e), layout.index(b, e));
                }
                out.data[a * kd + b] = acc;
            }
        }
        Ok(out)
    }

    /// Partial transpose of a two-qubit matrix over qubit `side` (1 or 2).
    pub fn partial_transpose(&self, side: usize) -> Result<DensityMatrix> {
        if self.n_qubits != 2 {
            return input(format!("partial transpose needs 2 qubits, got {}", self.n_qubits));
        }
        if side != 1 && side != 2 {
            return input(format!("side must be 1 or 2, got {side}"));
        }
        let mut out = DensityMatrix::zeros(2);
        for r in 0..4 {
            for c in 0..4 {
                let (ra, rb, ca, cb) = (r >> 1, r & 1, c >> 1, c & 1);
                let (src_r, src_c) = if side == 2 {
                    ((ra << 1) | cb, (ca << 1) | rb)
                } else {
                    ((ca << 1) | rb, (ra << 1) | cb)
                };
                out.data[r * 4 + c] = self.get(src_r, src_c);
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Value {
        let dim = self.dim();
        json!({
            "n_qubits": self.n_qubits,
            "matrix": (0..dim).map(|r| (0..dim)
                .map(|c| { let z = self.get(r, c); [z.re, z.im] })
                .collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }
}

struct Layout {
    n: usize,
    keep: Vec<usize>,
    env: Vec<usize>,
}

impl Layout {
    fn new(n: usize, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return input("partial trace needs at least one kept qubit");
        }
        let mut sorted = keep.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != keep.len() {
            return input(format!("duplicate qubits in keep set {keep:?}"));
        }
        if sorted.iter().any(|q| *q == 0 || *q > n) {
            return input(format!("keep set {keep:?} out of range 1..={n}"));
        }
        let env = (1..=n).filter(|q| !sorted.contains(q)).collect();
        Ok(Self { n, keep: sorted, env })
    }

    fn scatter(&self, bits: usize, qubits: &[usize]) -> usize {
        let k = qubits.len();
        qubits
            .iter()
            .enumerate()
            .filter(|(pos, _)| bits & (1 << (k - 1 - pos)) != 0)
            .fold(0, |acc, (_, q)| acc | 1 << (self.n - q))
    }

    fn index(&self, keep_bits: usize, env_bits: usize) -> usize {
        self.scatter(keep_bits, &self.keep) | self.scatter(env_bits, &self.env)
    }
}

impl StateVector {
    /// Reduced density matrix on `keep`, computed from amplitudes without
    /// forming the full `|ψ><ψ|`.
    pub fn reduced_density(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let layout = Layout::new(self.n_qubits(), keep)?;
        let kd = 1usize << layout.keep.len();
        let amps = self.amplitudes();
        let mut out = DensityMatrix::zeros(layout.keep.len());
        for e in 0..1usize << layout.env.len() {
            let column: Vec<Complex64> = (0..kd).map(|a| amps[layout.index(a, e)]).collect();
            for a in 0..kd {
                for b in 0..kd {
                    out.data[a * kd + b] += column[a] * column[b].conj();
                }
            }
        }
        Ok(out)
    }
}

/// Minimum eigenvalue of the partial transpose over the second qubit.
/// Nonnegative (within `-1e-10`) exactly when a two-qubit state is separable.
pub fn ppt_min_eigenvalue(rho: &DensityMatrix) -> Result<f64> {
    let pt = rho.partial_transpose(2)?;
    Ok(pt.eigenvalues()[0])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub pair: (usize, usize),
    #[serde(serialize_with = "ser_bases")]
    pub bases: (Unitary1Q, Unitary1Q),
    /// `p(target = 0)`.
    pub p_marginal: f64,
    /// `p(target = 0 | measured = 0)`; `None` on an impossible branch.
    pub p_conditional_given_0: Option<f64>,
    pub p_conditional_given_1: Option<f64>,
    pub correlated: bool,
}

fn ser_bases<S: serde::Serializer>(b: &(Unitary1Q, Unitary1Q), s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&b.0.to_string())?;
    t.serialize_element(&b.1.to_string())?;
    t.end()
}

impl CorrelationReport {
    /// Largest `|p(t=0 | m=b) - p(t=0)|` over the possible branches.
    pub fn max_deviation(&self) -> f64 {
        [self.p_conditional_given_0, self.p_conditional_given_1]
            .into_iter()
            .flatten()
            .map(|p| (p - self.p_marginal).abs())
            .fold(0.0, f64::max)
    }

    /// Correlated, and every possible conditional is deterministic.
    pub fn perfectly_correlated(&self, tol: f64) -> bool {
        self.correlated
            && [self.p_conditional_given_0, self.p_conditional_given_1]
                .into_iter()
                .flatten()
                .all(|p| p.abs() < tol || (p - 1.0).abs() < tol)
    }
}

pub fn conditional_report(
    state: &StateVector,
    measured: usize,
    measured_basis: &Unitary1Q,
    target: usize,
    target_basis: &Unitary1Q,
) -> Result<CorrelationReport> {
    conditional_report_with(state, measured, measured_basis, target, target_basis, PROB_TOL)
}

/// [`conditional_report`] with an explicit correlation threshold.
pub fn conditional_report_with(
    state: &StateVector,
    measured: usize,
    measured_basis: &Unitary1Q,
    target: usize,
    target_basis: &Unitary1Q,
    threshold: f64,
) -> Result<CorrelationReport> {
    if measured == target {
        return input(format!("measured and target are both qubit {measured}"));
    }
    let rotated = state
        .apply_1q(&measured_basis.adjoint(), measured)?
        .apply_1q(&target_basis.adjoint(), target)?;
    let (mm, tm) = (rotated.mask(measured), rotated.mask(target));
    // joint[m][t]
    let mut joint = [[0.0f64; 2]; 2];
    for (i, a) in rotated.amplitudes().iter().enumerate() {
        joint[usize::from(i & mm != 0)][usize::from(i & tm != 0)] += a.norm_sqr();
    }
    let p_marginal = joint[0][0] + joint[1][0];
    let conditional = |m: usize| {
        let pm = joint[m][0] + joint[m][1];
        (pm > BRANCH_EPS).then(|| (joint[m][0] / pm).clamp(0.0, 1.0))
    };
    let mut report = CorrelationReport {
        pair: (measured, target),
        bases: (*measured_basis, *target_basis),
        p_marginal: p_marginal.clamp(0.0, 1.0),
        p_conditional_given_0: conditional(0),
        p_conditional_given_1: conditional(1),
        correlated: false,
    };
    report.correlated = report.max_deviation() > threshold;
    Ok(report)
}

/// `p(q2=0 | q1=0) - 1/2` for `U1 U2 |psi3>` in closed form:
/// `Re(a1 b1 a2 b2 e^{-i(α+β)}) + Re(a1 b1* a2 b2* e^{i(β-α)})`.
pub fn lockless_deviation(u1: &Unitary1Q, u2: &Unitary1Q) -> f64 {
    let (a1, a2, alpha) = (u1.a1(), u1.a2(), u1.phase());
    let (b1, b2, beta) = (u2.a1(), u2.a2(), u2.phase());
    let first = a1 * b1 * a2 * b2 * Complex64::from_polar(1.0, -(alpha + beta));
    let second = a1 * b1.conj() * a2 * b2.conj() * Complex64::from_polar(1.0, beta - alpha);
    first.re + second.re
}

/// True when measuring every non-endpoint qubit in `remote_basis` and
/// discarding the outcomes leaves the endpoint reduced state unchanged.
pub fn no_signalling_check(
    family: &DormantFamily,
    endpoints: (usize, usize),
    remote_basis: &Unitary1Q,
) -> Result<bool> {
    let (lo, hi) = (endpoints.0.min(endpoints.1), endpoints.0.max(endpoints.1));
    let bases = (1..=family.n_qubits)
        .filter(|q| *q != lo && *q != hi)
        .map(|q| (q, *remote_basis))
        .collect();
    let forgotten = state_activation_table(&family.state, (lo, hi), &bases)?.mixture();
    let untouched = family.state.reduced_density(&[lo, hi])?;
    Ok(forgotten.max_abs_diff(&untouched)? <= PROB_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dormant::{build_psi3, build_psi3l, build_psi_n};
    use crate::state::BellState;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn real(n: usize, rows: &[f64]) -> DensityMatrix {
        DensityMatrix::from_rows(n, rows.iter().map(|x| Complex64::new(*x, 0.0)).collect()).unwrap()
    }

    #[test]
    fn density_from_basic_states() {
        let zero = StateVector::zero(1).unwrap();
        assert_eq!(DensityMatrix::from_state(&zero), real(1, &[1.0, 0.0, 0.0, 0.0]));
        let plus = zero.apply_1q(&Unitary1Q::hadamard(), 1).unwrap();
        let rho = DensityMatrix::from_state(&plus);
        assert!(rho.max_abs_diff(&real(1, &[0.5; 4])).unwrap() < 1e-15);
        let bell = DensityMatrix::from_state(&BellState::Phi1.state());
        let mut expect = [0.0; 16];
        for (r, c) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            expect[r * 4 + c] = 0.5;
        }
        assert!(bell.max_abs_diff(&real(2, &expect)).unwrap() < 1e-15);
        assert!(bell.is_physical());
    }

    #[test]
    fn product_state_trace() {
        let s = StateVector::zero(2)
            .unwrap()
            .apply_1q(&Unitary1Q::hadamard(), 2)
            .unwrap();
        let rho = DensityMatrix::from_state(&s).partial_trace(&[1]).unwrap();
        assert!(rho.max_abs_diff(&real(1, &[1.0, 0.0, 0.0, 0.0])).unwrap() < 1e-15);
        assert!(DensityMatrix::from_state(&s).partial_trace(&[]).is_err());
        assert!(DensityMatrix::from_state(&s).partial_trace(&[3]).is_err());
    }

    #[test]
    fn direct_and_full_partial_traces_agree() {
        let f = build_psi_n(5).unwrap();
        let full = DensityMatrix::from_state(&f.state);
        for keep in [vec![1, 2], vec![2, 5], vec![1, 3, 4], vec![4]] {
            let a = full.partial_trace(&keep).unwrap();
            let b = f.state.reduced_density(&keep).unwrap();
            assert!(a.max_abs_diff(&b).unwrap() < 1e-14);
            assert!((a.trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ppt_examples() {
        let identity = real(
            2,
            &[
                0.25, 0.0, 0.0, 0.0, 0.0, 0.25, 0.0, 0.0, 0.0, 0.0, 0.25, 0.0, 0.0, 0.0, 0.0, 0.25,
            ],
        );
        assert!((ppt_min_eigenvalue(&identity).unwrap() - 0.25).abs() < 1e-12);
        let bell = DensityMatrix::from_state(&BellState::Phi1.state());
        assert!((ppt_min_eigenvalue(&bell).unwrap() + 0.5).abs() < 1e-10);
        assert!(ppt_min_eigenvalue(&DensityMatrix::from_state(&build_psi3().state)).is_err());
    }

    #[test]
    fn partial_transpose_side_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let u = Unitary1Q::random(&mut rng);
            let v = Unitary1Q::random(&mut rng);
            let s = BellState::Phi2
                .state()
                .apply_1q(&u, 1)
                .unwrap()
                .apply_1q(&v, 2)
                .unwrap();
            let rho = DensityMatrix::from_state(&s);
            let a = rho.partial_transpose(1).unwrap().eigenvalues();
            let b = rho.partial_transpose(2).unwrap().eigenvalues();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn psi3_hadamard_conditionals() {
        let f = build_psi3();
        let h = Unitary1Q::hadamard();
        let r = conditional_report(&f.state, 1, &h, 2, &h).unwrap();
        assert!((r.p_conditional_given_0.unwrap() - 1.0).abs() < 1e-12);
        assert!(r.correlated && r.perfectly_correlated(1e-9));
        let id = Unitary1Q::identity();
        let r = conditional_report(&f.state, 1, &id, 2, &id).unwrap();
        assert!(!r.correlated);
        assert!((r.p_marginal - 0.5).abs() < 1e-12);
        assert!(conditional_report(&f.state, 2, &id, 2, &id).is_err());
    }

    #[test]
    fn impossible_branch_reports_none() {
        let s = StateVector::zero(2).unwrap();
        let id = Unitary1Q::identity();
        let r = conditional_report(&s, 1, &id, 2, &id).unwrap();
        assert_eq!(r.p_conditional_given_0, Some(1.0));
        assert_eq!(r.p_conditional_given_1, None);
        assert!(!r.correlated);
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["p_conditional_given_1"].is_null());
        assert_eq!(json["bases"][0], "comp");
    }

    #[test]
    fn lockless_deviation_fixed_points() {
        let id = Unitary1Q::identity();
        let h = Unitary1Q::hadamard();
        assert_eq!(lockless_deviation(&id, &id), 0.0);
        assert!((lockless_deviation(&h, &h) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn no_signalling_examples() {
        let f = build_psi3();
        assert!(no_signalling_check(&f, (1, 2), &Unitary1Q::identity()).unwrap());
        assert!(no_signalling_check(&f, (1, 2), &Unitary1Q::hadamard()).unwrap());
        assert!(no_signalling_check(&build_psi3l(), (2, 1), &Unitary1Q::hadamard()).unwrap());
    }

    #[test]
    fn density_json_is_row_major_pairs() {
        let v = DensityMatrix::from_state(&BellState::Phi1.state()).to_json();
        assert!((v["matrix"][0][3][0].as_f64().unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(v["matrix"].as_array().unwrap().len(), 4);
    }
}
