//! Dense statevector substrate.
//!
//! Qubits are addressed 1-based. The ket `|q1 q2 ... qn>` lives at index
//! `sum_i q_i * 2^(n-i)`, so `q1` is the most significant bit and a
//! bitstring reads left to right exactly as it is written in a ket.
//!
//! States are values: every operation returns a new [`StateVector`].

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::{AMP_TOL, MAX_QUBITS, PROB_TOL};

pub(crate) type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Probabilities below this are treated as impossible branches.
pub(crate) const BRANCH_EPS: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `n` qubits.
    pub fn zero(n: usize) -> Result<Self> {
        check_width(n)?;
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        Ok(Self { n_qubits: n, amps })
    }

    /// Computational basis state for a bitstring such as `"011"`.
    pub fn new_basis_state(n: usize, bits: &str) -> Result<Self> {
        check_width(n)?;
        if bits.len() != n {
            return input(format!("bitstring {bits:?} has length {} but n = {n}", bits.len()));
        }
        let index = parse_bits(bits)?;
        let mut amps = vec![ZERO; 1 << n];
        amps[index] = ONE;
        Ok(Self { n_qubits: n, amps })
    }

    /// Wraps an amplitude vector that is already normalized.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n = width_of(amps.len())?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > PROB_TOL {
            return input(format!("amplitudes have squared norm {norm}, expected 1"));
        }
        Ok(Self { n_qubits: n, amps })
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(amps: Vec<Complex64>) -> Result<Self> {
        let n = width_of(amps.len())?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm < BRANCH_EPS {
            return input("cannot normalize a zero vector");
        }
        let scale = 1.0 / norm.sqrt();
        Ok(Self {
            n_qubits: n,
            amps: amps.into_iter().map(|a| a * scale).collect(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// Amplitude of the basis ket named by `bits`.
    pub fn amplitude(&self, bits: &str) -> Result<Complex64> {
        if bits.len() != self.n_qubits {
            return input(format!("bitstring {bits:?} does not match {} qubits", self.n_qubits));
        }
        Ok(self.amps[parse_bits(bits)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Bitstring of basis index `index`, q1 first.
    pub fn bitstring(&self, index: usize) -> String {
        index_to_bits(index, self.n_qubits)
    }

    /// `self ⊗ other`; the qubits of `other` are appended after ours.
    pub fn tensor(&self, other: &StateVector) -> Result<Self> {
        check_width(self.n_qubits + other.n_qubits)?;
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(Self {
            n_qubits: self.n_qubits + other.n_qubits,
            amps,
        })
    }

    pub(crate) fn mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - qubit)
    }

    pub(crate) fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit == 0 || qubit > self.n_qubits {
            return input(format!("qubit {qubit} out of range 1..={}", self.n_qubits));
        }
        Ok(())
    }

    /// Applies `I ⊗ ... ⊗ U ⊗ ... ⊗ I` with `U` on `target`.
    pub fn apply_1q(&self, gate: &Unitary1Q, target: usize) -> Result<Self> {
        self.apply_matrix(&gate.matrix(), target)
    }

    /// Applies an arbitrary 2×2 matrix on one qubit. Observables go through
    /// here as well, so the result is not renormalized.
    pub(crate) fn apply_matrix(&self, m: &Mat2, target: usize) -> Result<Self> {
        self.check_qubit(target)?;
        let mask = self.mask(target);
        let mut amps = self.amps.clone();
        for i in 0..self.dim() {
            if i & mask != 0 {
                continue;
            }
            let j = i | mask;
            let (a, b) = (self.amps[i], self.amps[j]);
            amps[i] = m[0][0] * a + m[0][1] * b;
            amps[j] = m[1][0] * a + m[1][1] * b;
        }
        Ok(Self {
            n_qubits: self.n_qubits,
            amps,
        })
    }

    pub fn apply_cx(&self, control: usize, target: usize) -> Result<Self> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return input(format!("CX control and target are both qubit {control}"));
        }
        let (cm, tm) = (self.mask(control), self.mask(target));
        let mut amps = self.amps.clone();
        for i in 0..self.dim() {
            if i & cm != 0 {
                amps[i ^ tm] = self.amps[i];
            }
        }
        Ok(Self {
            n_qubits: self.n_qubits,
            amps,
        })
    }

    /// Relabels qubits: the qubit at position `i` moves to `perm.image(i)`.
    pub fn apply_permutation(&self, perm: &PermutationMap) -> Result<Self> {
        if perm.len() != self.n_qubits {
            return input(format!(
                "permutation on {} qubits applied to a {}-qubit state",
                perm.len(),
                self.n_qubits
            ));
        }
        let n = self.n_qubits;
        let moves: Vec<(usize, usize)> = (1..=n)
            .map(|q| (1usize << (n - q), 1usize << (n - perm.image(q))))
            .collect();
        let mut amps = vec![ZERO; self.dim()];
        for (i, a) in self.amps.iter().enumerate() {
            let j = moves
                .iter()
                .filter(|(from, _)| i & from != 0)
                .fold(0, |acc, (_, to)| acc | to);
            amps[j] = *a;
        }
        Ok(Self { n_qubits: n, amps })
    }

    /// Born probability of reading `outcome` when `qubit` is measured in
    /// `basis` (outcome `b` corresponds to the ket `U|b>`).
    pub fn outcome_probability(&self, qubit: usize, basis: &Unitary1Q, outcome: u8) -> Result<f64> {
        check_bit(outcome)?;
        let rotated = self.apply_1q(&basis.adjoint(), qubit)?;
        let mask = rotated.mask(qubit);
        let want = if outcome == 1 { mask } else { 0 };
        Ok(rotated
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == want)
            .map(|(_, a)| a.norm_sqr())
            .sum::<f64>()
            .clamp(0.0, 1.0))
    }

    /// Projects onto outcome `outcome` of `qubit` measured in `basis` and
    /// renormalizes. Fails if the branch is impossible.
    pub fn project(&self, qubit: usize, basis: &Unitary1Q, outcome: u8) -> Result<(MeasurementRecord, Self)> {
        check_bit(outcome)?;
        let rotated = self.apply_1q(&basis.adjoint(), qubit)?;
        let mask = rotated.mask(qubit);
        let want = if outcome == 1 { mask } else { 0 };
        let mut amps = rotated.amps;
        let mut prob = 0.0;
        for (i, a) in amps.iter_mut().enumerate() {
            if i & mask == want {
                prob += a.norm_sqr();
            } else {
                *a = ZERO;
            }
        }
        if prob < BRANCH_EPS {
            return input(format!("outcome {outcome} on qubit {qubit} has zero probability"));
        }
        let scale = 1.0 / prob.sqrt();
        amps.iter_mut().for_each(|a| *a *= scale);
        let collapsed = Self {
            n_qubits: self.n_qubits,
            amps,
        }
        .apply_1q(basis, qubit)?;
        let record = MeasurementRecord {
            qubit,
            basis: *basis,
            outcome,
            probability: prob.min(1.0),
        };
        Ok((record, collapsed))
    }

    /// Samples a projective measurement of `qubit` in `basis`.
    pub fn measure<R: Rng + ?Sized>(
        &self,
        qubit: usize,
        basis: &Unitary1Q,
        rng: &mut R,
    ) -> Result<(MeasurementRecord, Self)> {
        let p0 = self.outcome_probability(qubit, basis, 0)?;
        let outcome = if p0 < BRANCH_EPS {
            1
        } else if 1.0 - p0 < BRANCH_EPS {
            0
        } else {
            u8::from(rng.random::<f64>() >= p0)
        };
        self.project(qubit, basis, outcome).map_err(|e| match e {
            Error::Input(msg) => Error::Internal(format!("sampled an impossible branch: {msg}")),
            other => other,
        })
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr().clamp(0.0, 1.0))
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return input(format!(
                "cannot compare a {}-qubit state with a {}-qubit state",
                self.n_qubits, other.n_qubits
            ));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// Conditions on every qubit in `fixed` having been measured in the given
    /// basis with the given outcome, and returns the branch probability with
    /// the normalized state of the remaining qubits (original relative order).
    /// The state is `None` when the branch has zero probability.
    pub fn branch(&self, fixed: &[(usize, Unitary1Q, u8)]) -> Result<(f64, Option<StateVector>)> {
        let mut rotated = self.clone();
        let mut fixed_mask = 0usize;
        let mut fixed_bits = 0usize;
        for (qubit, basis, outcome) in fixed {
            check_bit(*outcome)?;
            rotated = rotated.apply_1q(&basis.adjoint(), *qubit)?;
            let mask = self.mask(*qubit);
            if fixed_mask & mask != 0 {
                return input(format!("qubit {qubit} conditioned twice"));
            }
            fixed_mask |= mask;
            if *outcome == 1 {
                fixed_bits |= mask;
            }
        }
        let rest: Vec<usize> = (1..=self.n_qubits)
            .filter(|q| fixed_mask & self.mask(*q) == 0)
            .collect();
        if rest.is_empty() {
            return input("branch would leave no qubits");
        }
        let mut amps = vec![ZERO; 1 << rest.len()];
        for (k, slot) in amps.iter_mut().enumerate() {
            let mut index = fixed_bits;
            for (pos, q) in rest.iter().enumerate() {
                if k & (1 << (rest.len() - 1 - pos)) != 0 {
                    index |= self.mask(*q);
                }
            }
            *slot = rotated.amps[index];
        }
        let prob: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if prob < BRANCH_EPS {
            return Ok((prob, None));
        }
        Ok((prob, Some(StateVector::normalized(amps)?)))
    }

    /// Debug dump: one `bitstring re im` line per nonzero amplitude.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, a) in self.amps.iter().enumerate() {
            if a.norm() > AMP_TOL {
                out.push_str(&format!("{} {} {}\n", self.bitstring(i), a.re, a.im));
            }
        }
        out
    }

    /// Indices with nonzero amplitude.
    pub fn support(&self) -> Vec<usize> {
        (0..self.dim()).filter(|i| self.amps[*i].norm() > AMP_TOL).collect()
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &StateVector) -> Result<f64> {
        if self.n_qubits != other.n_qubits {
            return input("dimension mismatch");
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Pure two-qubit concurrence `2|ad - bc|`.
    pub fn concurrence(&self) -> Result<f64> {
        if self.n_qubits != 2 {
            return input(format!("concurrence needs 2 qubits, got {}", self.n_qubits));
        }
        let [a, b, c, d] = [self.amps[0], self.amps[1], self.amps[2], self.amps[3]];
        Ok((2.0 * (a * d - b * c).norm()).min(1.0))
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

fn check_width(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return input(format!("qubit count {n} outside 1..={MAX_QUBITS}"));
    }
    Ok(())
}

fn width_of(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return input(format!("amplitude count {len} is not a power of two ≥ 2"));
    }
    let n = len.trailing_zeros() as usize;
    check_width(n)?;
    Ok(n)
}

fn check_bit(bit: u8) -> Result<()> {
    if bit > 1 {
        return input(format!("outcome {bit} is not a bit"));
    }
    Ok(())
}

pub(crate) fn parse_bits(bits: &str) -> Result<usize> {
    bits.chars().try_fold(0usize, |acc, c| match c {
        '0' => Ok(acc << 1),
        '1' => Ok((acc << 1) | 1),
        other => input(format!("invalid bit {other:?} in {bits:?}")),
    })
}

pub(crate) fn index_to_bits(index: usize, n: usize) -> String {
    (0..n)
        .map(|k| if index & (1 << (n - 1 - k)) != 0 { '1' } else { '0' })
        .collect()
}

/// Single-qubit unitary `[[a1, conj(a2) e^{iφ}], [a2, -conj(a1) e^{iφ}]]`.
///
/// Every element of U(2) has this form. Used both as a gate and as a
/// measurement basis, where outcome `b` is the ket `U|b>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Unitary1Q {
    a1: Complex64,
    a2: Complex64,
    phase: f64,
}

impl Unitary1Q {
    pub fn new(a1: Complex64, a2: Complex64, phase: f64) -> Result<Self> {
        let norm = a1.norm_sqr() + a2.norm_sqr();
        if (norm - 1.0).abs() > AMP_TOL || !phase.is_finite() {
            return input(format!("|a1|^2 + |a2|^2 = {norm}, expected 1"));
        }
        Ok(Self { a1, a2, phase })
    }

    /// The identity needs `φ = π` in this parameterization.
    pub fn identity() -> Self {
        Self {
            a1: ONE,
            a2: ZERO,
            phase: PI,
        }
    }

    pub fn hadamard() -> Self {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self {
            a1: h,
            a2: h,
            phase: 0.0,
        }
    }

    pub fn pauli_x() -> Self {
        Self {
            a1: ZERO,
            a2: ONE,
            phase: 0.0,
        }
    }

    pub fn pauli_z() -> Self {
        Self {
            a1: ONE,
            a2: ZERO,
            phase: 0.0,
        }
    }

    /// Draws `(a1, a2)` uniformly from the unit sphere in C² and the phase
    /// uniformly from `[0, 2π)`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let g: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        Self {
            a1: Complex64::new(g[0], g[1]) / norm,
            a2: Complex64::new(g[2], g[3]) / norm,
            phase: rng.random_range(0.0..2.0 * PI),
        }
    }

    pub fn a1(&self) -> Complex64 {
        self.a1
    }

    pub fn a2(&self) -> Complex64 {
        self.a2
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn matrix(&self) -> Mat2 {
        let e = Complex64::from_polar(1.0, self.phase);
        [[self.a1, self.a2.conj() * e], [self.a2, -self.a1.conj() * e]]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            a1: self.a1.conj(),
            a2: self.a2 * Complex64::from_polar(1.0, -self.phase),
            phase: -self.phase,
        }
    }

    /// True when the basis kets are computational kets up to phase.
    pub fn is_computational(&self) -> bool {
        self.a2.norm() < AMP_TOL
    }
}

impl fmt::Display for Unitary1Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == Self::identity() {
            f.write_str("comp")
        } else if *self == Self::hadamard() {
            f.write_str("hadamard")
        } else {
            write!(
                f,
                "u:{},{},{},{},{}",
                self.a1.re, self.a1.im, self.a2.re, self.a2.im, self.phase
            )
        }
    }
}

/// Parses `comp`, `hadamard`, or `u:a1re,a1im,a2re,a2im,alpha`.
impl FromStr for Unitary1Q {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "comp" => Ok(Self::identity()),
            "hadamard" => Ok(Self::hadamard()),
            spec => {
                let Some(params) = spec.strip_prefix("u:") else {
                    return input(format!("unknown basis {spec:?}"));
                };
                let v: Vec<f64> = params
                    .split(',')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::Input(format!("basis {spec:?}: {e}")))?;
                if v.len() != 5 {
                    return input(format!("basis {spec:?} needs 5 numbers, got {}", v.len()));
                }
                Self::new(Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]), v[4])
            }
        }
    }
}

/// Bijection on `{1..n}` giving the new position of each qubit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationMap {
    mapping: Vec<usize>,
}

impl PermutationMap {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &m in &mapping {
            if m == 0 || m > n || seen[m - 1] {
                return input(format!("{mapping:?} is not a bijection on 1..={n}"));
            }
            seen[m - 1] = true;
        }
        Ok(Self { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mapping: (1..=n).collect(),
        }
    }

    pub fn swap(n: usize, i: usize, j: usize) -> Result<Self> {
        if i == 0 || j == 0 || i > n || j > n {
            return input(format!("swap({i},{j}) out of range for n = {n}"));
        }
        let mut mapping: Vec<usize> = (1..=n).collect();
        mapping.swap(i - 1, j - 1);
        Ok(Self { mapping })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut mapping: Vec<usize> = (1..=n).collect();
        mapping.shuffle(rng);
        Self { mapping }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn image(&self, qubit: usize) -> usize {
        self.mapping[qubit - 1]
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &PermutationMap) -> Result<Self> {
        if self.len() != other.len() {
            return input("composing permutations of different sizes");
        }
        Ok(Self {
            mapping: other.mapping.iter().map(|&q| self.image(q)).collect(),
        })
    }

    pub fn inverse(&self) -> Self {
        let mut mapping = vec![0; self.len()];
        for (i, &m) in self.mapping.iter().enumerate() {
            mapping[m - 1] = i + 1;
        }
        Self { mapping }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub qubit: usize,
    pub basis: Unitary1Q,
    pub outcome: u8,
    pub probability: f64,
}

/// The four Bell states, numbered as in the dormant-entanglement literature:
/// `Phi1 = (|00>+|11>)/√2`, `Phi2 = (|01>+|10>)/√2`,
/// `Phi3 = (|01>-|10>)/√2`, `Phi4 = (|00>-|11>)/√2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellState {
    Phi1,
    Phi2,
    Phi3,
    Phi4,
}

impl BellState {
    pub const ALL: [BellState; 4] = [Self::Phi1, Self::Phi2, Self::Phi3, Self::Phi4];

    pub fn state(self) -> StateVector {
        let h = FRAC_1_SQRT_2;
        let amps = match self {
            Self::Phi1 => [h, 0.0, 0.0, h],
            Self::Phi2 => [0.0, h, h, 0.0],
            Self::Phi3 => [0.0, h, -h, 0.0],
            Self::Phi4 => [h, 0.0, 0.0, -h],
        };
        StateVector {
            n_qubits: 2,
            amps: amps.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Phi1 => "phi1",
            Self::Phi2 => "phi2",
            Self::Phi3 => "phi3",
            Self::Phi4 => "phi4",
        }
    }
}
