//! The dormant-entanglement state families and their activation tables.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::analysis::DensityMatrix;
use crate::error::{input, Result};
use crate::state::{index_to_bits, PermutationMap, StateVector, Unitary1Q};
use crate::{AMP_TOL, MAX_QUBITS, PROB_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    Psi3,
    PsiN(usize),
    /// `psi3` with a lock qubit CX-entangled to q2, register `(q1, q2, q3, qL)`.
    Psi3L,
}

impl FamilyKind {
    pub fn name(&self) -> String {
        match self {
            Self::Psi3 => "psi3".into(),
            Self::PsiN(n) => format!("psiN({n})"),
            Self::Psi3L => "psi3L".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DormantFamily {
    pub kind: FamilyKind,
    pub n_qubits: usize,
    pub lock_index: Option<usize>,
    pub state: StateVector,
}

impl DormantFamily {
    /// Basis in which `qubit` must be measured to activate the pair: the
    /// Hadamard basis for the lock qubit, computational for everything else.
    pub fn activating_basis(&self, qubit: usize) -> Unitary1Q {
        if self.lock_index == Some(qubit) {
            Unitary1Q::hadamard()
        } else {
            Unitary1Q::identity()
        }
    }

    /// Activating bases for every qubit outside `endpoints`.
    pub fn activating_bases(&self, endpoints: (usize, usize)) -> BTreeMap<usize, Unitary1Q> {
        (1..=self.n_qubits)
            .filter(|q| *q != endpoints.0 && *q != endpoints.1)
            .map(|q| (q, self.activating_basis(q)))
            .collect()
    }
}

/// `(|00>+|11>)|0> + (|01>+|10>)|1>`, all over 2.
pub fn build_psi3() -> DormantFamily {
    let state = dormant_circuit(3).expect("3 qubits is in range");
    DormantFamily {
        kind: FamilyKind::Psi3,
        n_qubits: 3,
        lock_index: None,
        state,
    }
}

/// The n-qubit dormant state: uniform superposition of all even-parity
/// bitstrings. Grown one qubit at a time by `H(q_{k+1})` then
/// `CX(q_{k+1} -> q_k)` on top of a Bell pair.
pub fn build_psi_n(n: usize) -> Result<DormantFamily> {
    if !(2..=MAX_QUBITS).contains(&n) {
        return input(format!("psiN needs 2 <= n <= {MAX_QUBITS}, got {n}"));
    }
    Ok(DormantFamily {
        kind: FamilyKind::PsiN(n),
        n_qubits: n,
        lock_index: None,
        state: dormant_circuit(n)?,
    })
}

/// `CX(q2 -> qL)` applied to `psi3 ⊗ |0>_L`.
pub fn build_psi3l() -> DormantFamily {
    let lock = StateVector::zero(1).expect("one qubit");
    let state = build_psi3()
        .state
        .tensor(&lock)
        .and_then(|s| s.apply_cx(2, 4))
        .expect("4 qubits is in range");
    DormantFamily {
        kind: FamilyKind::Psi3L,
        n_qubits: 4,
        lock_index: Some(4),
        state,
    }
}

fn dormant_circuit(n: usize) -> Result<StateVector> {
    let h = Unitary1Q::hadamard();
    let mut state = StateVector::zero(n)?.apply_1q(&h, 1)?.apply_cx(1, 2)?;
    for k in 2..n {
        state = state.apply_1q(&h, k + 1)?.apply_cx(k + 1, k)?;
    }
    debug_assert!(
        state.max_abs_diff(&even_parity_closed_form(n)).unwrap() < AMP_TOL,
        "circuit and closed form disagree for n = {n}"
    );
    Ok(state)
}

fn even_parity_closed_form(n: usize) -> StateVector {
    let amp = Complex64::new(0.5f64.powf((n as f64 - 1.0) / 2.0), 0.0);
    let amps = (0..1usize << n)
        .map(|i| {
            if i.count_ones() % 2 == 0 {
                amp
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    StateVector::from_amplitudes(amps).expect("closed form is normalized")
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActivationRow {
    /// Controller outcomes, ascending controller index.
    pub pattern: String,
    pub probability: f64,
    /// Endpoint pair state, first endpoint as the high bit.
    pub state: StateVector,
    pub concurrence: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActivationTable {
    pub endpoints: (usize, usize),
    pub controllers: Vec<(usize, Unitary1Q)>,
    pub rows: Vec<ActivationRow>,
}

impl ActivationTable {
    /// `Σ p |s><s|` over the rows: the endpoint state when outcomes are
    /// measured but not communicated.
    pub fn mixture(&self) -> DensityMatrix {
        let mut acc = DensityMatrix::zeros(2);
        for row in &self.rows {
            acc.add_projector(&row.state, row.probability);
        }
        acc
    }

    pub fn total_probability(&self) -> f64 {
        self.rows.iter().map(|r| r.probability).sum()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "endpoints": [self.endpoints.0, self.endpoints.1],
            "controllers": self.controllers.iter()
                .map(|(q, b)| json!({"qubit": q, "basis": b.to_string()}))
                .collect::<Vec<_>>(),
            "rows": self.rows.iter().map(|r| json!({
                "pattern": r.pattern,
                "probability": r.probability,
                "state": r.state.amplitudes().iter().flat_map(|a| [a.re, a.im]).collect::<Vec<_>>(),
                "concurrence": r.concurrence,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Enumerates every controller outcome pattern for `family` with the given
/// controller bases. Zero-probability patterns are omitted.
pub fn activation_table(
    family: &DormantFamily,
    endpoints: (usize, usize),
    controller_bases: &BTreeMap<usize, Unitary1Q>,
) -> Result<ActivationTable> {
    state_activation_table(&family.state, endpoints, controller_bases)
}

/// [`activation_table`] for an arbitrary state.
pub fn state_activation_table(
    state: &StateVector,
    endpoints: (usize, usize),
    controller_bases: &BTreeMap<usize, Unitary1Q>,
) -> Result<ActivationTable> {
    let n = state.n_qubits();
    let (e1, e2) = endpoints;
    state.check_qubit(e1)?;
    state.check_qubit(e2)?;
    if e1 == e2 {
        return input(format!("endpoints must differ, got ({e1},{e2})"));
    }
    for q in controller_bases.keys() {
        if *q == e1 || *q == e2 {
            return input(format!("qubit {q} is an endpoint and cannot be a controller"));
        }
        state.check_qubit(*q)?;
    }
    let missing: Vec<usize> = (1..=n)
        .filter(|q| *q != e1 && *q != e2 && !controller_bases.contains_key(q))
        .collect();
    if !missing.is_empty() {
        return input(format!("no basis assigned to controller qubit(s) {missing:?}"));
    }

    let controllers: Vec<(usize, Unitary1Q)> = controller_bases.iter().map(|(q, b)| (*q, *b)).collect();
    let k = controllers.len();
    let swap = PermutationMap::swap(2, 1, 2)?;
    let mut rows = Vec::new();
    for pattern in 0..1usize << k {
        let fixed: Vec<(usize, Unitary1Q, u8)> = controllers
            .iter()
            .enumerate()
            .map(|(pos, (q, b))| (*q, *b, ((pattern >> (k - 1 - pos)) & 1) as u8))
            .collect();
        let (probability, pair) = state.branch(&fixed)?;
        let Some(mut pair) = pair else { continue };
        if e1 > e2 {
            pair = pair.apply_permutation(&swap)?;
        }
        let concurrence = pair.concurrence()?;
        rows.push(ActivationRow {
            pattern: index_to_bits(pattern, k),
            probability,
            state: pair,
            concurrence,
        });
    }
    Ok(ActivationTable {
        endpoints,
        controllers,
        rows,
    })
}

/// True when a single controller measuring in the wrong basis (the other
/// controllers all measuring correctly) leaves every endpoint branch
/// unentangled.
pub fn destruction_check(family: &DormantFamily, endpoints: (usize, usize), deviant: usize) -> Result<bool> {
    if deviant == endpoints.0 || deviant == endpoints.1 {
        return input(format!("deviant {deviant} is an endpoint"));
    }
    family.state.check_qubit(deviant)?;
    let mut bases = family.activating_bases(endpoints);
    let wrong = if family.activating_basis(deviant).is_computational() {
        Unitary1Q::hadamard()
    } else {
        Unitary1Q::identity()
    };
    bases.insert(deviant, wrong);
    let table = activation_table(family, endpoints, &bases)?;
    Ok(table.rows.iter().all(|r| r.concurrence < PROB_TOL))
}
