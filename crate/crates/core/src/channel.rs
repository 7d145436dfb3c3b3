//! n-party collective channel over one shared `psiN` state.
//!
//! Every party owns one qubit. Two parties are endpoints; the rest are
//! controllers. A session moves through
//! `measure -> (undelivered message) -> deliver_and_resolve`, and the
//! endpoint pair becomes usable only once every controller's outcome has been
//! delivered and every controller measured in the computational basis.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::DensityMatrix;
use crate::dormant::{build_psi_n, state_activation_table};
use crate::error::{input, Error, Result};
use crate::state::{BellState, StateVector, Unitary1Q};

pub const MIN_PARTIES: usize = 3;
pub const MAX_PARTIES: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Endpoint,
    Controller,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Party {
    pub id: usize,
    pub qubit: usize,
    pub role: Role,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalMessage {
    pub from: usize,
    #[serde(rename = "basis", serialize_with = "ser_basis")]
    pub basis_declared: Unitary1Q,
    pub outcome: u8,
    pub delivered: bool,
}

fn ser_basis<S: serde::Serializer>(b: &Unitary1Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&b.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SessionStatus {
    Dormant,
    /// Carries the Bell variant decoded from outcome parity (`Phi1` or `Phi2`).
    Activated(BellState),
    Destroyed,
}

impl SessionStatus {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Dormant => "dormant",
            Self::Activated(_) => "activated",
            Self::Destroyed => "destroyed",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ChannelSession {
    n: usize,
    parties: Vec<Party>,
    endpoints: (usize, usize),
    initial_state: StateVector,
    shared_state: StateVector,
    transcript: Vec<ClassicalMessage>,
    measured: BTreeMap<usize, (Unitary1Q, u8)>,
    status: SessionStatus,
    endpoint_state: Option<StateVector>,
    concurrence: Option<f64>,
    teleport_fidelity: Option<f64>,
}

impl ChannelSession {
    /// Shares `psiN(n)` among `n` parties, party `i` holding qubit `i`.
    pub fn setup(n: usize, endpoints: (usize, usize)) -> Result<Self> {
        if !(MIN_PARTIES..=MAX_PARTIES).contains(&n) {
            return input(format!("sessions need {MIN_PARTIES} <= n <= {MAX_PARTIES}, got {n}"));
        }
        let (a, b) = endpoints;
        if a == b || a == 0 || b == 0 || a > n || b > n {
            return input(format!("invalid endpoints ({a},{b}) for {n} parties"));
        }
        let parties = (1..=n)
            .map(|id| Party {
                id,
                qubit: id,
                role: if id == a || id == b {
                    Role::Endpoint
                } else {
                    Role::Controller
                },
            })
            .collect();
        let state = build_psi_n(n)?.state;
        Ok(Self {
            n,
            parties,
            endpoints,
            initial_state: state.clone(),
            shared_state: state,
            transcript: Vec::new(),
            measured: BTreeMap::new(),
            status: SessionStatus::Dormant,
            endpoint_state: None,
            concurrence: None,
            teleport_fidelity: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn parties(&self) -> &[Party] {
        &self.parties
    }

    pub fn endpoints(&self) -> (usize, usize) {
        self.endpoints
    }

    pub fn controllers(&self) -> Vec<usize> {
        self.parties
            .iter()
            .filter(|p| p.role == Role::Controller)
            .map(|p| p.id)
            .collect()
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn transcript(&self) -> &[ClassicalMessage] {
        &self.transcript
    }

    pub fn shared_state(&self) -> &StateVector {
        &self.shared_state
    }

    /// Endpoint pair state recorded at resolution.
    pub fn endpoint_state(&self) -> Option<&StateVector> {
        self.endpoint_state.as_ref()
    }

    pub fn concurrence(&self) -> Option<f64> {
        self.concurrence
    }

    pub fn teleport_fidelity(&self) -> Option<f64> {
        self.teleport_fidelity
    }

    fn controller_qubit(&self, id: usize) -> Result<usize> {
        match self.parties.get(id.wrapping_sub(1)) {
            Some(p) if p.role == Role::Controller => Ok(p.qubit),
            Some(_) => input(format!("party {id} is an endpoint, not a controller")),
            None => input(format!("no party {id} in a {}-party session", self.n)),
        }
    }

    fn check_measurable(&self, id: usize) -> Result<usize> {
        let qubit = self.controller_qubit(id)?;
        if self.status != SessionStatus::Dormant {
            return Err(Error::Protocol(format!("session is already {}", self.status.name())));
        }
        if self.measured.contains_key(&id) {
            return Err(Error::Protocol(format!("controller {id} has already measured")));
        }
        Ok(qubit)
    }

    fn record(&mut self, id: usize, basis: Unitary1Q, outcome: u8, state: StateVector) -> ClassicalMessage {
        self.shared_state = state;
        self.measured.insert(id, (basis, outcome));
        let msg = ClassicalMessage {
            from: id,
            basis_declared: basis,
            outcome,
            delivered: false,
        };
        self.transcript.push(msg.clone());
        msg
    }

    /// Controller `id` measures its qubit in `basis`; the outcome goes into
    /// an undelivered message.
    pub fn controller_measure<R: Rng + ?Sized>(
        &mut self,
        id: usize,
        basis: &Unitary1Q,
        rng: &mut R,
    ) -> Result<ClassicalMessage> {
        let qubit = self.check_measurable(id)?;
        let (rec, state) = self.shared_state.measure(qubit, basis, rng)?;
        Ok(self.record(id, *basis, rec.outcome, state))
    }

    /// Like [`Self::controller_measure`] but post-selects `outcome`, for
    /// exhaustive branch enumeration. Impossible outcomes are rejected.
    pub fn controller_measure_forced(&mut self, id: usize, basis: &Unitary1Q, outcome: u8) -> Result<ClassicalMessage> {
        let qubit = self.check_measurable(id)?;
        let (_, state) = self.shared_state.project(qubit, basis, outcome)?;
        Ok(self.record(id, *basis, outcome, state))
    }

    /// Drops controller `id`'s message in transit. The controller has still
    /// measured, so it cannot resend; the session can no longer activate.
    pub fn lose_message(&mut self, id: usize) -> Result<()> {
        let before = self.transcript.len();
        self.transcript.retain(|m| m.from != id || m.delivered);
        if self.transcript.len() == before {
            return input(format!("no undelivered message from party {id}"));
        }
        Ok(())
    }

    /// The endpoint pair as the endpoints must describe it right now:
    /// delivered outcomes are conditioned on, outcomes still in transit are
    /// averaged over in the basis that was actually used, and controllers
    /// that have not measured are traced out.
    pub fn endpoint_view(&self) -> Result<DensityMatrix> {
        let (a, b) = self.endpoints;
        let mut conditioned = self.initial_state.clone();
        let mut bases = BTreeMap::new();
        for id in self.controllers() {
            let Some((basis, bit)) = self.measured.get(&id) else {
                bases.insert(id, Unitary1Q::identity());
                continue;
            };
            if self.transcript.iter().any(|m| m.from == id && m.delivered) {
                conditioned = conditioned.project(id, basis, *bit)?.1;
            }
            bases.insert(id, *basis);
        }
        Ok(state_activation_table(&conditioned, (a.min(b), a.max(b)), &bases)?.mixture())
    }

    /// Delivers every pending message and decides the session outcome.
    pub fn deliver_and_resolve(&mut self) -> Result<SessionStatus> {
        if self.status != SessionStatus::Dormant {
            return Err(Error::Protocol(format!("session is already {}", self.status.name())));
        }
        let missing: Vec<usize> = self
            .controllers()
            .into_iter()
            .filter(|id| !self.transcript.iter().any(|m| m.from == *id))
            .collect();
        if !missing.is_empty() {
            return Err(Error::Protocol(format!(
                "complete consensus unmet: no message from controller(s) {missing:?}"
            )));
        }
        for m in &mut self.transcript {
            m.delivered = true;
        }

        let fixed: BTreeMap<usize, Unitary1Q> = self.measured.iter().map(|(id, (b, _))| (*id, *b)).collect();
        let pattern: String = self
            .measured
            .values()
            .map(|(_, bit)| if *bit == 1 { '1' } else { '0' })
            .collect();
        let table = state_activation_table(&self.shared_state, self.endpoints, &fixed)?;
        let row = table
            .rows
            .into_iter()
            .find(|r| r.pattern == pattern)
            .ok_or_else(|| Error::Internal("recorded outcomes have zero probability".into()))?;
        self.concurrence = Some(row.concurrence);
        self.endpoint_state = Some(row.state);

        let all_computational = self.transcript.iter().all(|m| m.basis_declared.is_computational());
        self.status = if all_computational {
            let parity = self.transcript.iter().map(|m| u32::from(m.outcome)).sum::<u32>() % 2;
            SessionStatus::Activated(if parity == 0 { BellState::Phi1 } else { BellState::Phi2 })
        } else {
            SessionStatus::Destroyed
        };
        Ok(self.status)
    }

    /// Teleports a one-qubit `payload` from the first endpoint to the second
    /// over the activated pair and returns the fidelity of what arrives.
    /// Consumes the pair.
    pub fn teleport_over<R: Rng + ?Sized>(&mut self, payload: &StateVector, rng: &mut R) -> Result<f64> {
        let SessionStatus::Activated(variant) = self.status else {
            return Err(Error::Protocol(format!(
                "cannot teleport over a {} session: the pair is not activated",
                self.status.name()
            )));
        };
        if self.teleport_fidelity.is_some() {
            return Err(Error::Protocol("the activated pair has already been consumed".into()));
        }
        if payload.n_qubits() != 1 {
            return input(format!("payload must be one qubit, got {}", payload.n_qubits()));
        }
        let pair = self
            .endpoint_state
            .as_ref()
            .ok_or_else(|| Error::Internal("activated session without an endpoint state".into()))?;
        let received = teleport(payload, pair, variant, rng)?;
        let fidelity = payload.fidelity(&received)?;
        self.teleport_fidelity = Some(fidelity);
        Ok(fidelity)
    }

    /// One JSON line per message, then a final status record.
    pub fn transcript_jsonl(&self) -> String {
        let mut out = String::new();
        for (ordinal, m) in self.transcript.iter().enumerate() {
            let mut v = serde_json::to_value(m).expect("message serializes");
            v["timestamp_ordinal"] = json!(ordinal);
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out.push_str(&self.final_record().to_string());
        out.push('\n');
        out
    }

    pub fn final_record(&self) -> Value {
        let mut v = json!({
            "status": self.status.name(),
            "concurrence": self.concurrence,
        });
        if let SessionStatus::Activated(bell) = self.status {
            v["bell_variant"] = json!(bell.name());
        }
        if let Some(f) = self.teleport_fidelity {
            v["teleport_fidelity"] = json!(f);
        }
        v
    }
}

/// Standard teleportation of `payload` through `pair` (sender, receiver).
/// For `Phi2` the receiver's X correction is inverted, since
/// `Phi2 = (I ⊗ X) Phi1`. Returns the receiver's qubit.
fn teleport<R: Rng + ?Sized>(
    payload: &StateVector,
    pair: &StateVector,
    variant: BellState,
    rng: &mut R,
) -> Result<StateVector> {
    let id = Unitary1Q::identity();
    // qubits: 1 payload, 2 sender half, 3 receiver half
    let joint = payload
        .tensor(pair)?
        .apply_cx(1, 2)?
        .apply_1q(&Unitary1Q::hadamard(), 1)?;
    let (m1, joint) = joint.measure(1, &id, rng)?;
    let (m2, joint) = joint.measure(2, &id, rng)?;
    let flip = match variant {
        BellState::Phi1 => 0,
        BellState::Phi2 => 1,
        other => return input(format!("no correction table for {other:?}")),
    };
    let (_, received) = joint.branch(&[(1, id, m1.outcome), (2, id, m2.outcome)])?;
    let mut received = received.ok_or_else(|| Error::Internal("measured branch vanished".into()))?;
    if m2.outcome ^ flip == 1 {
        received = received.apply_1q(&Unitary1Q::pauli_x(), 1)?;
    }
    if m1.outcome == 1 {
        received = received.apply_1q(&Unitary1Q::pauli_z(), 1)?;
    }
    Ok(received)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ResourcePlan {
    pub n: usize,
    pub k: usize,
    /// One Bell pair per unordered party pair: `n(n-1)` qubits.
    pub point_to_point_qubits: usize,
    /// One `psiN` copy per simultaneous pair: `k·n` qubits.
    pub collective_qubits: usize,
}

pub fn plan_resources(n: usize, k: usize) -> Result<ResourcePlan> {
    if n < MIN_PARTIES {
        return input(format!("need at least {MIN_PARTIES} parties, got {n}"));
    }
    if k == 0 {
        return input("need at least one communicating pair");
    }
    Ok(ResourcePlan {
        n,
        k,
        point_to_point_qubits: n * (n - 1),
        collective_qubits: k * n,
    })
}
