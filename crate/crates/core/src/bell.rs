//! Bell-CHSH correlations: the functional β(ω), see-saw maximization over
//! Hermitian contractions, and per-pair test operators for the singlet chain.
//!
//! Conventions: β carries a ½ prefactor, so the classical ceiling is 1 and
//! the quantum ceiling is √2; the raw expectation of the CHSH combination
//! (ceiling 2√2) is exposed separately.

use num_bigint::BigUint;
use num_complex::Complex;

use crate::chain::ChainObservable;
use crate::error::{Error, Result};
use crate::op::Operator;
use crate::{par, sample, TOL_SPECTRAL};

pub const QUANTUM_CEILING: f64 = std::f64::consts::SQRT_2;

/// Two Hermitian contractions per side. `beta` is the last value achieved by
/// an optimizer, if any; freshly built witnesses carry `None`.
#[derive(Debug, Clone)]
pub struct ChshWitness {
    a1: Operator,
    a2: Operator,
    b1: Operator,
    b2: Operator,
    beta: Option<f64>,
}

fn check_contraction(op: &Operator, label: &str) -> Result<()> {
    let dev = op.hermitian_deviation();
    if dev > TOL_SPECTRAL * (1.0 + op.norm_max()) {
        return Err(Error::NotHermitian(dev));
    }
    let (vals, _) = op.herm_eigen()?;
    let lo = vals.first().copied().unwrap_or(0.0);
    let hi = vals.last().copied().unwrap_or(0.0);
    if lo < -1.0 - 1e-10 || hi > 1.0 + 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "{label} spectrum [{lo:.6}, {hi:.6}] escapes [-1, 1]"
        )));
    }
    Ok(())
}

impl ChshWitness {
    pub fn new(a1: Operator, a2: Operator, b1: Operator, b2: Operator) -> Result<Self> {
        for (op, label) in [(&a1, "A1"), (&a2, "A2"), (&b1, "B1"), (&b2, "B2")] {
            check_contraction(op, label)?;
        }
        if a1.rows() != a2.rows() || b1.rows() != b2.rows() {
            return Err(Error::DimensionMismatch(
                "witness sides must be internally consistent".into(),
            ));
        }
        Ok(Self {
            a1,
            a2,
            b1,
            b2,
            beta: None,
        })
    }

    pub fn a(&self) -> (&Operator, &Operator) {
        (&self.a1, &self.a2)
    }

    pub fn b(&self) -> (&Operator, &Operator) {
        (&self.b1, &self.b2)
    }

    pub fn beta(&self) -> Option<f64> {
        self.beta
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.a1.rows(), self.b1.rows())
    }

    /// The CHSH combination A₁⊗(B₁+B₂) + A₂⊗(B₁−B₂).
    pub fn chsh_operator(&self) -> Result<Operator> {
        let sum = self.b1.add(&self.b2)?;
        let diff = self.b1.sub(&self.b2)?;
        self.a1.tensor(&sum)?.add(&self.a2.tensor(&diff)?)
    }
}

/// Embeds a 2×2 block into the top-left corner of a d×d operator.
fn embed_qubit(block: &Operator, d: usize) -> Operator {
    Operator::from_fn(&[d], |i, j| {
        if i < 2 && j < 2 {
            block.entry(i, j)
        } else {
            Complex::new(0.0, 0.0)
        }
    })
}

/// The qubit witness saturating the quantum ceiling on the singlet:
/// A₁ = σ_x, A₂ = σ_z, B₁ = −(σ_x+σ_z)/√2, B₂ = (σ_z−σ_x)/√2, embedded in the
/// top-left 2×2 blocks when d > 2.
pub fn tsirelson_witness(da: usize, db: usize) -> Result<ChshWitness> {
    if da < 2 || db < 2 {
        return Err(Error::InvalidArgument(
            "witness needs at least qubit factors".into(),
        ));
    }
    let s = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let b1 = crate::op::sigma_x()
        .add(&crate::op::sigma_z())?
        .scale(-s);
    let b2 = crate::op::sigma_z()
        .sub(&crate::op::sigma_x())?
        .scale(s);
    ChshWitness::new(
        embed_qubit(&crate::op::sigma_x(), da),
        embed_qubit(&crate::op::sigma_z(), da),
        embed_qubit(&b1, db),
        embed_qubit(&b2, db),
    )
}

fn check_state(omega: &Operator, w: &ChshWitness) -> Result<()> {
    let (da, db) = w.dims();
    if omega.dims() != [da, db] {
        return Err(Error::DimensionMismatch(format!(
            "state dims {:?} vs witness [{da}, {db}]",
            omega.dims()
        )));
    }
    omega.clone().checked_density(TOL_SPECTRAL)?;
    Ok(())
}

/// ω(T) for the CHSH combination T, without the ½ prefactor. Ceiling 2√2.
pub fn raw_chsh_eval(omega: &Operator, w: &ChshWitness) -> Result<f64> {
    check_state(omega, w)?;
    let t = w.chsh_operator()?;
    let value = t.expectation_in(omega)?.re;
    if value > 2.0 * QUANTUM_CEILING + 2e-8 {
        return Err(Error::Malformed(format!(
            "CHSH expectation {value} exceeds the quantum ceiling"
        )));
    }
    Ok(value)
}

/// β(ω) = ½·ω(A₁(B₁+B₂) + A₂(B₁−B₂)). Ceiling √2.
pub fn beta_eval(omega: &Operator, w: &ChshWitness) -> Result<f64> {
    Ok(0.5 * raw_chsh_eval(omega, w)?)
}

/// Spectral sign with the zero eigenspace sent to +1, so updates are
/// deterministic contractions with spectrum in {−1, +1}.
fn spectral_sign(k: &Operator) -> Result<Operator> {
    let herm = Operator::from_matrix((k.matrix() + k.matrix().adjoint()).scale(0.5));
    herm.herm_fn(|x| {
        if x >= 0.0 {
            Complex::new(1.0, 0.0)
        } else {
            Complex::new(-1.0, 0.0)
        }
    })
}

/// tr_B(ω·(𝟙⊗X)) as an operator on the first factor.
fn alice_effective(omega: &Operator, x: &Operator, da: usize) -> Result<Operator> {
    omega
        .matmul(&Operator::identity(&[da]).tensor(x)?)?
        .partial_trace(1)
}

/// tr_A(ω·(Y⊗𝟙)) as an operator on the second factor.
fn bob_effective(omega: &Operator, y: &Operator, db: usize) -> Result<Operator> {
    omega
        .matmul(&y.tensor(&Operator::identity(&[db]))?)?
        .partial_trace(0)
}

#[derive(Debug, Clone)]
pub struct SeesawOutcome {
    pub witness: ChshWitness,
    pub beta: f64,
    /// β after every half-step, in order; nondecreasing by construction.
    pub half_step_betas: Vec<f64>,
    pub iterations: usize,
}

/// Alternating maximization: with the B side frozen the optimal A_i is the
/// spectral sign of tr_B(ω(𝟙⊗X_i)) with X₁ = B₁+B₂, X₂ = B₁−B₂, and
/// symmetrically for the B side with Y₁ = A₁+A₂, Y₂ = A₁−A₂. Each half-step
/// is exactly optimal for its side, so β never decreases. Deterministic.
pub fn beta_optimize(
    omega: &Operator,
    init: &ChshWitness,
    max_iters: usize,
    tol: f64,
) -> Result<SeesawOutcome> {
    check_state(omega, init)?;
    let (da, db) = init.dims();
    let mut w = init.clone();
    let mut history = Vec::new();
    let mut last = beta_eval(omega, &w)?;
    let mut iterations = 0;
    for _ in 0..max_iters {
        iterations += 1;
        let x1 = w.b1.add(&w.b2)?;
        let x2 = w.b1.sub(&w.b2)?;
        w.a1 = spectral_sign(&alice_effective(omega, &x1, da)?)?;
        w.a2 = spectral_sign(&alice_effective(omega, &x2, da)?)?;
        let after_a = beta_eval(omega, &w)?;
        if after_a < last - 1e-12 {
            return Err(Error::Malformed(format!(
                "see-saw regressed from {last} to {after_a}"
            )));
        }
        history.push(after_a);
        let y1 = w.a1.add(&w.a2)?;
        let y2 = w.a1.sub(&w.a2)?;
        w.b1 = spectral_sign(&bob_effective(omega, &y1, db)?)?;
        w.b2 = spectral_sign(&bob_effective(omega, &y2, db)?)?;
        let after_b = beta_eval(omega, &w)?;
        if after_b < after_a - 1e-12 {
            return Err(Error::Malformed(format!(
                "see-saw regressed from {after_a} to {after_b}"
            )));
        }
        history.push(after_b);
        let gain = after_b - last;
        last = after_b;
        if gain < tol {
            break;
        }
    }
    w.beta = Some(last);
    Ok(SeesawOutcome {
        witness: w,
        beta: last,
        half_step_betas: history,
        iterations,
    })
}

fn random_witness(da: usize, db: usize, seed: u64, stream: u64) -> ChshWitness {
    let mut rng = sample::rng(seed);
    rng.set_stream(stream);
    ChshWitness {
        a1: Operator::from_matrix(sample::hermitian_contraction(da, &mut rng)),
        a2: Operator::from_matrix(sample::hermitian_contraction(da, &mut rng)),
        b1: Operator::from_matrix(sample::hermitian_contraction(db, &mut rng)),
        b2: Operator::from_matrix(sample::hermitian_contraction(db, &mut rng)),
        beta: None,
    }
}

fn best_outcome(outcomes: Vec<Result<SeesawOutcome>>) -> Result<SeesawOutcome> {
    let mut best: Option<SeesawOutcome> = None;
    // Strict comparison keeps the earliest restart on ties.
    for outcome in outcomes {
        let outcome = outcome?;
        if best.as_ref().map_or(true, |b| outcome.beta > b.beta) {
            best = Some(outcome);
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("at least one restart required".into()))
}

/// See-saw from the embedded saturating witness plus `restarts` randomized
/// initial witnesses; the best β wins, ties broken by earliest start.
pub fn beta_optimize_restarts(
    omega: &Operator,
    restarts: usize,
    max_iters: usize,
    tol: f64,
    seed: u64,
) -> Result<SeesawOutcome> {
    let dims = omega.dims();
    if dims.len() != 2 {
        return Err(Error::DimensionMismatch(
            "see-saw expects dims [d_A, d_B]".into(),
        ));
    }
    let (da, db) = (dims[0], dims[1]);
    let outcomes = par::map_range(restarts + 1, |i| {
        let init = if i == 0 {
            tsirelson_witness(da, db)?
        } else {
            random_witness(da, db, seed, i as u64)
        };
        beta_optimize(omega, &init, max_iters, tol)
    });
    best_outcome(outcomes)
}

/// Sequential twin of [`beta_optimize_restarts`].
pub fn beta_optimize_restarts_seq(
    omega: &Operator,
    restarts: usize,
    max_iters: usize,
    tol: f64,
    seed: u64,
) -> Result<SeesawOutcome> {
    let dims = omega.dims();
    if dims.len() != 2 {
        return Err(Error::DimensionMismatch(
            "see-saw expects dims [d_A, d_B]".into(),
        ));
    }
    let (da, db) = (dims[0], dims[1]);
    let outcomes = par::map_range_seq(restarts + 1, |i| {
        let init = if i == 0 {
            tsirelson_witness(da, db)?
        } else {
            random_witness(da, db, seed, i as u64)
        };
        beta_optimize(omega, &init, max_iters, tol)
    });
    best_outcome(outcomes)
}

/// T_k: the CHSH combination of a qubit witness placed on pair `k` of the
/// chain, identity elsewhere. ‖T_k‖ ≤ 2√2 uniformly in k.
pub fn test_operator(window: usize, k: impl Into<BigUint>, w: &ChshWitness) -> Result<ChainObservable> {
    if w.dims() != (2, 2) {
        return Err(Error::DimensionMismatch(
            "chain test operators take qubit witnesses".into(),
        ));
    }
    let k = k.into();
    if k > BigUint::from(window) {
        return Err(Error::InvalidArgument(format!(
            "pair index {k} outside the {window}-pair window"
        )));
    }
    ChainObservable::identity().with_block(k, w.chsh_operator()?)
}
