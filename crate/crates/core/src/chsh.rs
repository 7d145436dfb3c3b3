//! CHSH correlators under default and rotated observables.
//!
//! The sum is `S = ±<A0B0> ± <A0B1> ± <A1B0> ± <A1B1>`. By default only the
//! four sign patterns whose odd sign sits in position 3 or 4 are admitted;
//! [`PatternSet::All`] opens up the usual eight.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::conditional_report;
use crate::error::{input, Result};
use crate::state::{Mat2, StateVector, Unitary1Q};

/// Tsirelson bound `2√2`.
pub const TSIRELSON: f64 = 2.0 * SQRT_2;
/// Tolerance on CHSH sums.
pub const CHSH_TOL: f64 = 1e-9;

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    std::array::from_fn(|r| std::array::from_fn(|c| a[r][0] * b[0][c] + a[r][1] * b[1][c]))
}

fn dagger(a: &Mat2) -> Mat2 {
    std::array::from_fn(|r| std::array::from_fn(|c| a[c][r].conj()))
}

fn conjugate(u: &Unitary1Q, m: &Mat2) -> Mat2 {
    let um = u.matrix();
    mul(&mul(&um, m), &dagger(&um))
}

fn real(m: [[f64; 2]; 2]) -> Mat2 {
    m.map(|row| row.map(|x| Complex64::new(x, 0.0)))
}

fn sigma_x() -> Mat2 {
    real([[0.0, 1.0], [1.0, 0.0]])
}

fn sigma_z() -> Mat2 {
    real([[1.0, 0.0], [0.0, -1.0]])
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChshSetting {
    pub u: Unitary1Q,
    pub v: Unitary1Q,
    pub a0: Mat2,
    pub a1: Mat2,
    pub b0: Mat2,
    pub b1: Mat2,
}

impl ChshSetting {
    /// `A0 = σz, A1 = σx, B0 = -(σx+σz)/√2, B1 = (σx-σz)/√2`.
    pub fn default_setting() -> Self {
        Self::rotated(Unitary1Q::identity(), Unitary1Q::identity())
    }

    /// Default observables conjugated by `U` on the A side and `V` on the B side.
    pub fn rotated(u: Unitary1Q, v: Unitary1Q) -> Self {
        let h = FRAC_1_SQRT_2;
        let b0 = real([[-h, -h], [-h, h]]);
        let b1 = real([[-h, h], [h, h]]);
        Self {
            u,
            v,
            a0: conjugate(&u, &sigma_z()),
            a1: conjugate(&u, &sigma_x()),
            b0: conjugate(&v, &b0),
            b1: conjugate(&v, &b1),
        }
    }

    /// `[A0, A1, B0, B1]`.
    pub fn observables(&self) -> [Mat2; 4] {
        [self.a0, self.a1, self.b0, self.b1]
    }

    fn to_json(&self) -> Value {
        json!({ "U": self.u.to_string(), "V": self.v.to_string() })
    }
}

/// Signs applied to `(A0B0, A0B1, A1B0, A1B1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SignPattern(pub [i8; 4]);

impl SignPattern {
    /// The four patterns with the odd sign in position 3 or 4, in the order
    /// `(+,+,-,+), (-,-,+,-), (+,+,+,-), (-,-,-,+)`.
    pub fn admissible() -> Vec<SignPattern> {
        vec![
            SignPattern([1, 1, -1, 1]),
            SignPattern([-1, -1, 1, -1]),
            SignPattern([1, 1, 1, -1]),
            SignPattern([-1, -1, -1, 1]),
        ]
    }

    /// All eight patterns with exactly one sign opposite to the other three.
    pub fn all_eight() -> Vec<SignPattern> {
        let mut out = Vec::with_capacity(8);
        for odd in 0..4 {
            for base in [1i8, -1] {
                let mut s = [base; 4];
                s[odd] = -base;
                out.push(SignPattern(s));
            }
        }
        out
    }

    /// The odd sign sits in position 3 or 4.
    pub fn is_admissible(&self) -> bool {
        Self::admissible().contains(self)
    }

    pub fn apply(&self, correlators: &[f64; 4]) -> f64 {
        self.0.iter().zip(correlators).map(|(s, c)| f64::from(*s) * c).sum()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PatternSet {
    #[default]
    Admissible,
    All,
}

impl PatternSet {
    pub fn patterns(self) -> Vec<SignPattern> {
        match self {
            Self::Admissible => SignPattern::admissible(),
            Self::All => SignPattern::all_eight(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChshResult {
    /// `<A0B0>, <A0B1>, <A1B0>, <A1B1>`.
    pub correlators: [f64; 4],
    pub patterns: Vec<SignPattern>,
    pub s_per_pattern: Vec<f64>,
    pub s_max: f64,
    pub best_pattern: SignPattern,
    pub setting: ChshSetting,
}

impl ChshResult {
    pub fn to_json(&self) -> Value {
        json!({
            "correlators": self.correlators,
            "s_per_pattern": self.s_per_pattern,
            "s_max": self.s_max,
            "best_pattern": self.best_pattern.0,
            "setting": self.setting.to_json(),
        })
    }
}

/// `<ψ| A ⊗ B ⊗ I |ψ>` with `A` on `pair.0` and `B` on `pair.1`.
pub fn correlator(state: &StateVector, pair: (usize, usize), a: &Mat2, b: &Mat2) -> Result<f64> {
    let applied = state.apply_matrix(a, pair.0)?.apply_matrix(b, pair.1)?;
    Ok(state.inner(&applied)?.re)
}

pub fn evaluate(state: &StateVector, pair: (usize, usize), setting: &ChshSetting) -> Result<ChshResult> {
    evaluate_with(state, pair, setting, PatternSet::Admissible)
}

pub fn evaluate_with(
    state: &StateVector,
    pair: (usize, usize),
    setting: &ChshSetting,
    patterns: PatternSet,
) -> Result<ChshResult> {
    if pair.0 == pair.1 {
        return input(format!("CHSH pair must be two distinct qubits, got {pair:?}"));
    }
    let [a0, a1, b0, b1] = setting.observables();
    let correlators = [
        correlator(state, pair, &a0, &b0)?,
        correlator(state, pair, &a0, &b1)?,
        correlator(state, pair, &a1, &b0)?,
        correlator(state, pair, &a1, &b1)?,
    ];
    let patterns = patterns.patterns();
    let s_per_pattern: Vec<f64> = patterns.iter().map(|p| p.apply(&correlators)).collect();
    // first maximum wins ties
    let (best, s_max) =
        s_per_pattern.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, s)| if *s > acc.1 { (i, *s) } else { acc },
        );
    Ok(ChshResult {
        correlators,
        best_pattern: patterns[best],
        patterns,
        s_per_pattern,
        s_max,
        setting: setting.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub trials: usize,
    pub sup_s_max: f64,
    pub sup_abs_correlator: f64,
    /// Trial index that produced `sup_s_max`.
    pub argmax_trial: usize,
}

/// Evaluates `trials` random rotated settings. Each trial draws from its own
/// ChaCha stream keyed by a base seed taken from `rng`, so the summary does
/// not depend on how rayon schedules the trials.
pub fn rotation_sweep<R: Rng + ?Sized>(
    state: &StateVector,
    pair: (usize, usize),
    trials: usize,
    rng: &mut R,
    patterns: PatternSet,
) -> Result<SweepSummary> {
    if trials == 0 {
        return input("rotation sweep needs at least one trial");
    }
    let base: u64 = rng.random();
    let results: Vec<(usize, f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut trial_rng = ChaCha8Rng::seed_from_u64(base);
            trial_rng.set_stream(trial as u64);
            let u = Unitary1Q::random(&mut trial_rng);
            let v = Unitary1Q::random(&mut trial_rng);
            let r = evaluate_with(state, pair, &ChshSetting::rotated(u, v), patterns)?;
            let corr = r.correlators.iter().map(|c| c.abs()).fold(0.0, f64::max);
            Ok((trial, r.s_max, corr))
        })
        .collect::<Result<_>>()?;
    let mut summary = SweepSummary {
        trials,
        sup_s_max: f64::NEG_INFINITY,
        sup_abs_correlator: 0.0,
        argmax_trial: 0,
    };
    for (trial, s, c) in results {
        if s > summary.sup_s_max {
            summary.sup_s_max = s;
            summary.argmax_trial = trial;
        }
        summary.sup_abs_correlator = summary.sup_abs_correlator.max(c);
    }
    Ok(summary)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EntanglementLevel {
    /// Perfect correlation in both bases, `S_max = 2√2`.
    Type1,
    /// No computational correlation, perfect Hadamard correlation, `0 < S_max < 2√2`.
    Type2,
    /// No correlation in either basis, `S_max = 0`.
    Type3,
    Other,
}

pub fn classify(state: &StateVector, pair: (usize, usize)) -> Result<EntanglementLevel> {
    let s_max = evaluate(state, pair, &ChshSetting::default_setting())?.s_max;
    let id = Unitary1Q::identity();
    let h = Unitary1Q::hadamard();
    let comp = conditional_report(state, pair.0, &id, pair.1, &id)?;
    let had = conditional_report(state, pair.0, &h, pair.1, &h)?;
    let perfect = |r: &crate::CorrelationReport| r.perfectly_correlated(CHSH_TOL);

    let level = if perfect(&comp) && perfect(&had) && (s_max - TSIRELSON).abs() <= CHSH_TOL {
        EntanglementLevel::Type1
    } else if !comp.correlated && perfect(&had) && s_max > CHSH_TOL && s_max < TSIRELSON - CHSH_TOL {
        EntanglementLevel::Type2
    } else if !comp.correlated && !had.correlated && s_max.abs() <= CHSH_TOL {
        EntanglementLevel::Type3
    } else {
        EntanglementLevel::Other
    };
    Ok(level)
}

/// Largest entrywise distance between `m²` and the identity.
pub fn involution_error(m: &Mat2) -> f64 {
    let sq = mul(m, m);
    let id = real([[1.0, 0.0], [0.0, 1.0]]);
    let mut worst: f64 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            worst = worst.max((sq[r][c] - id[r][c]).norm());
        }
    }
    worst
}

/// Largest distance between `m` and its adjoint.
pub fn hermiticity_error(m: &Mat2) -> f64 {
    let d = dagger(m);
    let mut worst: f64 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            worst = worst.max((m[r][c] - d[r][c]).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dormant::{build_psi3, build_psi3l, build_psi_n};
    use crate::state::BellState;

    fn mat_close(a: &Mat2, b: &Mat2) -> bool {
        (0..2).all(|r| (0..2).all(|c| (a[r][c] - b[r][c]).norm() < 1e-12))
    }

    #[test]
    fn default_observables() {
        let s = ChshSetting::default_setting();
        assert!(mat_close(&s.a0, &sigma_z()));
        assert!(mat_close(&s.a1, &sigma_x()));
        let h = FRAC_1_SQRT_2;
        assert!(mat_close(&s.b0, &real([[-h, -h], [-h, h]])));
        for m in s.observables() {
            assert!(involution_error(&m) < 1e-12);
        }
    }

    #[test]
    fn hadamard_rotation_swaps_axes() {
        let s = ChshSetting::rotated(Unitary1Q::hadamard(), Unitary1Q::identity());
        assert!(mat_close(&s.a0, &sigma_x()));
        assert!(mat_close(&s.a1, &sigma_z()));
    }

    #[test]
    fn pattern_sets() {
        assert_eq!(SignPattern::admissible().len(), 4);
        assert_eq!(SignPattern::all_eight().len(), 8);
        assert!(SignPattern::admissible().iter().all(SignPattern::is_admissible));
        assert!(!SignPattern([-1, 1, 1, 1]).is_admissible());
        assert!(!SignPattern([1, -1, 1, 1]).is_admissible());
        assert_eq!(SignPattern::all_eight().iter().filter(|p| p.is_admissible()).count(), 4);
    }

    #[test]
    fn bell_default_values_and_patterns() {
        let expect = [
            (BellState::Phi1, [-1, -1, -1, 1]),
            (BellState::Phi2, [1, 1, -1, 1]),
            (BellState::Phi3, [1, 1, 1, -1]),
            (BellState::Phi4, [-1, -1, 1, -1]),
        ];
        for (bell, pattern) in expect {
            let r = evaluate(&bell.state(), (1, 2), &ChshSetting::default_setting()).unwrap();
            assert!((r.s_max - TSIRELSON).abs() < 1e-9, "{bell:?}");
            assert_eq!(r.best_pattern, SignPattern(pattern), "{bell:?}");
        }
    }

    #[test]
    fn dormant_default_values() {
        let r = evaluate(&build_psi3().state, (1, 2), &ChshSetting::default_setting()).unwrap();
        assert!((r.s_max - SQRT_2).abs() < 1e-9);
        assert_eq!(r.best_pattern, SignPattern([1, 1, -1, 1]));
        let r = evaluate(&build_psi3l().state, (1, 2), &ChshSetting::default_setting()).unwrap();
        assert!(r.correlators.iter().all(|c| c.abs() < 1e-12));
        assert!(r.s_max.abs() < 1e-12);
        assert!(evaluate(&build_psi3().state, (2, 2), &ChshSetting::default_setting()).is_err());
    }

    #[test]
    fn classification() {
        for bell in BellState::ALL {
            assert_eq!(classify(&bell.state(), (1, 2)).unwrap(), EntanglementLevel::Type1);
        }
        for n in 3..=6 {
            let s = build_psi_n(n).unwrap().state;
            assert_eq!(classify(&s, (1, 2)).unwrap(), EntanglementLevel::Type2, "n = {n}");
        }
        assert_eq!(
            classify(&build_psi3l().state, (1, 2)).unwrap(),
            EntanglementLevel::Type3
        );
        let product = StateVector::zero(2).unwrap();
        assert_eq!(classify(&product, (1, 2)).unwrap(), EntanglementLevel::Other);
    }

    #[test]
    fn sweep_is_seed_deterministic() {
        let s = build_psi3().state;
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rotation_sweep(&s, (1, 2), 64, &mut rng, PatternSet::Admissible).unwrap()
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(rotation_sweep(&s, (1, 2), 0, &mut rng, PatternSet::Admissible).is_err());
    }

    #[test]
    fn json_shape() {
        let r = evaluate(&BellState::Phi1.state(), (1, 2), &ChshSetting::default_setting()).unwrap();
        let v = r.to_json();
        assert_eq!(v["best_pattern"], json!([-1, -1, -1, 1]));
        assert_eq!(v["setting"]["U"], "comp");
        assert_eq!(v["s_per_pattern"].as_array().unwrap().len(), 4);
    }
}
