//! Discrete Weyl (generalized Pauli) systems on pairs of ℤ_d registers:
//! the unitary operator basis w(n₁,m₁,n₂,m₂), clock/shift generators, the
//! Weyl expansion of the maximally entangled projector, and the Weyl-sum
//! fidelity functional.
//!
//! The fidelity is evaluated through [`WordEvaluator`], so the same sum runs
//! against dense vectors here and against position-grid wavefunctions in the
//! grid module, where dense matrices never exist.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::op::{Operator, C64};
use crate::par;

/// The d-th roots of unity ζ^j, j = 0..d, with ζ = e^{2πi/d}.
fn roots(d: usize) -> Vec<C64> {
    (0..d)
        .map(|j| Complex::from_polar(1.0, std::f64::consts::TAU * j as f64 / d as f64))
        .collect()
}

/// Index (n₁,m₁,n₂,m₂) of a Weyl operator on ℤ_d × ℤ_d, stored reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeylIndex {
    pub n1: usize,
    pub m1: usize,
    pub n2: usize,
    pub m2: usize,
    pub d: usize,
}

impl WeylIndex {
    pub fn new(d: usize, n1: i64, m1: i64, n2: i64, m2: i64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidArgument("weyl system needs d >= 2".into()));
        }
        let r = |x: i64| x.rem_euclid(d as i64) as usize;
        Ok(Self {
            n1: r(n1),
            m1: r(m1),
            n2: r(n2),
            m2: r(m2),
            d,
        })
    }

    pub fn zeta(&self) -> C64 {
        Complex::from_polar(1.0, std::f64::consts::TAU / self.d as f64)
    }

    /// Componentwise sum mod d.
    pub fn compose(&self, other: &WeylIndex) -> Result<WeylIndex> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch("weyl indices of different d".into()));
        }
        WeylIndex::new(
            self.d,
            (self.n1 + other.n1) as i64,
            (self.m1 + other.m1) as i64,
            (self.n2 + other.n2) as i64,
            (self.m2 + other.m2) as i64,
        )
    }
}

/// w|k,ℓ⟩ = ζ^{n₁(k−m₁)+n₂(ℓ−m₂)} |k−m₁, ℓ−m₂⟩, indices mod d with
/// representatives in [0, d).
pub fn weyl_op(idx: &WeylIndex) -> Operator {
    let d = idx.d;
    let zs = roots(d);
    let mut mat = DMatrix::<C64>::zeros(d * d, d * d);
    for k in 0..d {
        for l in 0..d {
            let rk = (k + d - idx.m1) % d;
            let rl = (l + d - idx.m2) % d;
            let e = (idx.n1 * rk + idx.n2 * rl) % d;
            mat[(rk * d + rl, k * d + l)] = zs[e];
        }
    }
    Operator::from_matrix_with_dims(mat, vec![d, d]).expect("square by construction")
}

/// Clock u|k⟩ = ζ^k|k⟩ on a single register.
pub fn clock(d: usize) -> Operator {
    let zs = roots(d);
    Operator::from_matrix(DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            zs[i]
        } else {
            Complex::new(0.0, 0.0)
        }
    }))
}

/// Shift v|k⟩ = |k−1 mod d⟩ on a single register.
pub fn shift(d: usize) -> Operator {
    Operator::from_matrix(DMatrix::from_fn(d, d, |i, j| {
        if (j + d - 1) % d == i {
            Complex::new(1.0, 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    }))
}

/// The canonical generators on the pair, as full-space operators
/// (u₁, v₁, u₂, v₂) = (u⊗𝟙, v⊗𝟙, 𝟙⊗u, 𝟙⊗v).
pub fn pair_generators(d: usize) -> Result<(Operator, Operator, Operator, Operator)> {
    let ident = Operator::identity(&[d]);
    Ok((
        clock(d).tensor(&ident)?,
        shift(d).tensor(&ident)?,
        ident.tensor(&clock(d))?,
        ident.tensor(&shift(d))?,
    ))
}

/// Deviations from the defining relations of a (u, v) pair:
/// ‖vu − ζuv‖, ‖u^d − 𝟙‖, ‖v^d − 𝟙‖ in the max norm. Reported, not enforced,
/// since grid-discretized pairs satisfy them only approximately.
#[derive(Debug, Clone, Copy)]
pub struct RelationReport {
    pub commutation: f64,
    pub u_power: f64,
    pub v_power: f64,
}

pub fn relation_residuals(u: &Operator, v: &Operator, d: usize) -> Result<RelationReport> {
    let zeta = Complex::from_polar(1.0, std::f64::consts::TAU / d as f64);
    let vu = v.matmul(u)?;
    let uv = u.matmul(v)?.scale(zeta);
    let commutation = vu.sub(&uv)?.norm_max();
    let ident = Operator::identity(&[u.rows()]);
    let mut up = ident.clone();
    let mut vp = ident.clone();
    for _ in 0..d {
        up = up.matmul(u)?;
        vp = vp.matmul(v)?;
    }
    Ok(RelationReport {
        commutation,
        u_power: up.sub(&ident)?.norm_max(),
        v_power: vp.sub(&ident)?.norm_max(),
    })
}

/// (1/d²) Σ_{n,m} w(n, m, −n, m); equals the projector onto the standard
/// maximally entangled vector.
pub fn max_ent_projector_weyl(d: usize) -> Result<Operator> {
    if d < 2 {
        return Err(Error::InvalidArgument("projector needs d >= 2".into()));
    }
    let mut acc = Operator::zeros(&[d, d]);
    for n in 0..d as i64 {
        for m in 0..d as i64 {
            acc = acc.add(&weyl_op(&WeylIndex::new(d, n, m, -n, m)?))?;
        }
    }
    Ok(acc.scale(Complex::new(1.0 / (d * d) as f64, 0.0)))
}

/// Expectation of an ordered product of operator powers in a fixed state.
/// Negative powers mean the adjoint (callers supply unitaries). The word is
/// applied right-to-left, matching operator composition.
pub trait WordEvaluator {
    type Op;
    fn expect_word(&self, word: &[(&Self::Op, i64)]) -> Result<C64>;
}

/// Dense vector state over any finite dimension.
#[derive(Debug, Clone)]
pub struct VectorState {
    state: DVector<C64>,
}

impl VectorState {
    pub fn new(state: DVector<C64>) -> Result<Self> {
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { state })
    }

    pub fn from_pure(psi: &crate::bipartite::PureState) -> Self {
        Self {
            state: psi.to_vector(),
        }
    }

    pub fn vector(&self) -> &DVector<C64> {
        &self.state
    }
}

impl WordEvaluator for VectorState {
    type Op = Operator;

    fn expect_word(&self, word: &[(&Operator, i64)]) -> Result<C64> {
        let mut v = self.state.clone();
        for (op, pow) in word.iter().rev() {
            if op.cols() != v.len() {
                return Err(Error::DimensionMismatch(format!(
                    "word letter is {}x{} against a state of dimension {}",
                    op.rows(),
                    op.cols(),
                    v.len()
                )));
            }
            let (action, count) = if *pow >= 0 {
                ((*op).clone(), *pow as u64)
            } else {
                (op.dagger(), pow.unsigned_abs())
            };
            for _ in 0..count {
                v = action.apply(&v)?;
            }
        }
        Ok(self.state.dotc(&v))
    }
}

fn fidelity_term<E>(
    omega: &E,
    u1: &E::Op,
    v1: &E::Op,
    u2: &E::Op,
    v2: &E::Op,
    n: i64,
    m: i64,
) -> Result<C64>
where
    E: WordEvaluator,
{
    omega.expect_word(&[(u1, n), (u2, -n), (v1, m), (v2, m)])
}

/// The Weyl-sum fidelity (1/d²) Σ_{n,m<d} ω((U₁U₂^{−1})^n (V₁V₂)^m), with the
/// factors ordered U₁ᶰ U₂^{−n} V₁ᵐ V₂ᵐ. For commuting side-1/side-2 operators
/// this is exactly the maximally entangled fidelity functional.
pub fn weyl_fidelity<E>(
    omega: &E,
    d: usize,
    u1: &E::Op,
    v1: &E::Op,
    u2: &E::Op,
    v2: &E::Op,
) -> Result<C64>
where
    E: WordEvaluator + Sync,
    E::Op: Sync,
{
    if d < 2 {
        return Err(Error::InvalidArgument("fidelity needs d >= 2".into()));
    }
    let terms = par::map_range(d * d, |i| {
        let (n, m) = ((i / d) as i64, (i % d) as i64);
        fidelity_term(omega, u1, v1, u2, v2, n, m)
    });
    let mut acc = Complex::new(0.0, 0.0);
    for t in terms {
        acc += t?;
    }
    Ok(acc / Complex::new((d * d) as f64, 0.0))
}

/// Sequential twin of [`weyl_fidelity`].
pub fn weyl_fidelity_seq<E>(
    omega: &E,
    d: usize,
    u1: &E::Op,
    v1: &E::Op,
    u2: &E::Op,
    v2: &E::Op,
) -> Result<C64>
where
    E: WordEvaluator,
{
    if d < 2 {
        return Err(Error::InvalidArgument("fidelity needs d >= 2".into()));
    }
    let mut acc = Complex::new(0.0, 0.0);
    for i in 0..d * d {
        let (n, m) = ((i / d) as i64, (i % d) as i64);
        acc += fidelity_term(omega, u1, v1, u2, v2, n, m)?;
    }
    Ok(acc / Complex::new((d * d) as f64, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipartite::max_entangled;
    use crate::modular::modular_data;
    use crate::op;
    use crate::sample;

    #[test]
    fn qubit_clock_on_first_register_is_sigma_z() {
        let w = weyl_op(&WeylIndex::new(2, 1, 0, 0, 0).unwrap());
        let target = op::sigma_z().tensor(&Operator::identity(&[2])).unwrap();
        assert!(w.sub(&target).unwrap().norm_max() <= 1e-15);
    }

    #[test]
    fn canonical_pairs_satisfy_the_defining_relations() {
        for d in [2usize, 3, 5] {
            let report = relation_residuals(&clock(d), &shift(d), d).unwrap();
            assert!(report.commutation <= 1e-12);
            assert!(report.u_power <= 1e-12);
            assert!(report.v_power <= 1e-12);
            // Same relations hold factor-wise on the pair.
            let (u1, v1, u2, v2) = pair_generators(d).unwrap();
            for (u, v) in [(&u1, &v1), (&u2, &v2)] {
                let r = relation_residuals(u, v, d).unwrap();
                assert!(r.commutation <= 1e-12 && r.u_power <= 1e-12 && r.v_power <= 1e-12);
            }
        }
    }

    #[test]
    fn weyl_family_is_hilbert_schmidt_orthogonal() {
        // Oracle: the full gram matrix of tr(w(a)† w(b)) for d = 3.
        let d = 3usize;
        let mut ops = Vec::new();
        for n1 in 0..d as i64 {
            for m1 in 0..d as i64 {
                for n2 in 0..d as i64 {
                    for m2 in 0..d as i64 {
                        ops.push(weyl_op(&WeylIndex::new(d, n1, m1, n2, m2).unwrap()));
                    }
                }
            }
        }
        for (i, a) in ops.iter().enumerate() {
            for (j, b) in ops.iter().enumerate() {
                let g = a.dagger().matmul(b).unwrap().trace();
                let want = if i == j { (d * d) as f64 } else { 0.0 };
                assert!((g - Complex::new(want, 0.0)).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn weyl_ops_are_unitary() {
        let idx = WeylIndex::new(5, 3, -2, 7, 11).unwrap();
        assert_eq!((idx.n1, idx.m1, idx.n2, idx.m2), (3, 3, 2, 1));
        let w = weyl_op(&idx);
        assert!(w.unitary_deviation() <= 1e-12);
    }

    #[test]
    fn composition_law_holds_exhaustively() {
        // w(a)w(b) must equal a d-th root of unity times w(a+b); the phase is
        // read off the first nonzero entry and then verified globally.
        for d in [2usize, 3] {
            let all: Vec<WeylIndex> = (0..(d * d * d * d))
                .map(|i| {
                    let q = |p: usize| ((i / d.pow(p as u32)) % d) as i64;
                    WeylIndex::new(d, q(3), q(2), q(1), q(0)).unwrap()
                })
                .collect();
            for a in &all {
                for b in &all {
                    let prod = weyl_op(a).matmul(&weyl_op(b)).unwrap();
                    let target = weyl_op(&a.compose(b).unwrap());
                    let mut phase = None;
                    'outer: for i in 0..d * d {
                        for j in 0..d * d {
                            if target.entry(i, j).norm() > 0.5 {
                                phase = Some(prod.entry(i, j) / target.entry(i, j));
                                break 'outer;
                            }
                        }
                    }
                    let phase = phase.expect("weyl operators have full support pattern");
                    assert!((phase.norm() - 1.0).abs() <= 1e-12);
                    assert!((phase.powu(d as u32) - op::ONE).norm() <= 1e-12);
                    let dev = prod.sub(&target.scale(phase)).unwrap().norm_max();
                    assert!(dev <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn weyl_sum_reproduces_the_projector() {
        for d in 2..=6 {
            let from_weyl = max_ent_projector_weyl(d).unwrap();
            let dense = crate::bipartite::max_ent_projector(d).unwrap();
            assert!(from_weyl.sub(&dense).unwrap().norm_max() <= 1e-12);
            assert!((from_weyl.trace() - op::ONE).norm() <= 1e-12);
            let sq = from_weyl.matmul(&from_weyl).unwrap();
            assert!(sq.sub(&from_weyl).unwrap().norm_max() <= 1e-12);
        }
    }

    #[test]
    fn partial_weyl_sum_is_not_a_projector() {
        // The m = 0 slice alone averages to (1/d)·(diagonal pair projector):
        // its trace is still 1, but idempotency fails by a factor d.
        let d = 3usize;
        let mut acc = Operator::zeros(&[d, d]);
        for n in 0..d as i64 {
            acc = acc
                .add(&weyl_op(&WeylIndex::new(d, n, 0, -n, 0).unwrap()))
                .unwrap();
        }
        let partial = acc.scale(Complex::new(1.0 / (d * d) as f64, 0.0));
        assert!((partial.trace() - op::ONE).norm() <= 1e-12);
        let sq = partial.matmul(&partial).unwrap();
        assert!(sq.sub(&partial).unwrap().norm_max() > 0.1);
    }

    #[test]
    fn projector_absorbs_u_conj_u_rotations() {
        let d = 3usize;
        let p = max_ent_projector_weyl(d).unwrap();
        let mut rng = sample::rng(100);
        for _ in 0..5 {
            let u = sample::unitary(d, &mut rng);
            let rot = Operator::from_matrix_with_dims(
                u.kronecker(&u.map(|z| z.conj())),
                vec![d, d],
            )
            .unwrap();
            let moved = rot.matmul(&p).unwrap().matmul(&rot.dagger()).unwrap();
            assert!(moved.sub(&p).unwrap().norm_max() <= 1e-10);
        }
    }

    #[test]
    fn fidelity_is_one_for_the_canonical_pair_on_the_flat_state() {
        for d in [2usize, 3, 4] {
            let omega = VectorState::from_pure(&max_entangled(d).unwrap());
            let (u1, v1, u2, v2) = pair_generators(d).unwrap();
            let f = weyl_fidelity(&omega, d, &u1, &v1, &u2, &v2).unwrap();
            assert!((f - op::ONE).norm() <= 1e-12, "d={d}: {f}");
        }
    }

    #[test]
    fn fidelity_is_one_for_conjugation_partners_of_random_unitaries() {
        // Side-2 operators built from side-1 through the modular conjugation
        // of the flat state: U₂ = JU₁†J and V₂ = (JV₁†J)^{-1}. Every term in
        // the sum is then the expectation of an operator fixing the state.
        let d = 3usize;
        let md = modular_data(&max_entangled(d).unwrap()).unwrap();
        let mut rng = sample::rng(101);
        let ident = Operator::identity(&[d]);
        for _ in 0..3 {
            let a = Operator::from_matrix(sample::unitary(d, &mut rng));
            let b = Operator::from_matrix(sample::unitary(d, &mut rng));
            let a2 = md.find_double(&a).unwrap().expect("flat state");
            let b2 = md.find_double(&b).unwrap().expect("flat state");
            let u1 = a.tensor(&ident).unwrap();
            let v1 = b.tensor(&ident).unwrap();
            let u2 = ident.tensor(&a2).unwrap();
            let v2 = ident.tensor(&b2.dagger()).unwrap();
            let omega = VectorState::from_pure(md.psi());
            let f = weyl_fidelity(&omega, d, &u1, &v1, &u2, &v2).unwrap();
            assert!((f - op::ONE).norm() <= 1e-10, "got {f}");
        }
    }

    #[test]
    fn fidelity_on_the_product_vacuum_is_one_over_d() {
        // Analytic value: shifts kill every m ≠ 0 term, while the clock
        // phases are trivial on |00⟩, so d of the d² terms contribute 1.
        for d in [2usize, 3, 4] {
            let mut v = DVector::from_element(d * d, Complex::new(0.0, 0.0));
            v[0] = op::ONE;
            let omega = VectorState::new(v).unwrap();
            let (u1, v1, u2, v2) = pair_generators(d).unwrap();
            let f = weyl_fidelity(&omega, d, &u1, &v1, &u2, &v2).unwrap();
            assert!((f - Complex::new(1.0 / d as f64, 0.0)).norm() <= 1e-12);
        }
    }

    #[test]
    fn fidelity_ignores_compensating_phase_relabelings() {
        let d = 3usize;
        let mut rng = sample::rng(102);
        let state = sample::state_vector(d * d, &mut rng);
        let omega = VectorState::new(state).unwrap();
        let (u1, v1, u2, v2) = pair_generators(d).unwrap();
        let base = weyl_fidelity(&omega, d, &u1, &v1, &u2, &v2).unwrap();
        let zeta = Complex::from_polar(1.0, std::f64::consts::TAU / d as f64);
        // Same root on both U's: the U₁U₂^{-1} products are untouched.
        let f1 = weyl_fidelity(&omega, d, &u1.scale(zeta), &v1, &u2.scale(zeta), &v2).unwrap();
        assert!((f1 - base).norm() <= 1e-12);
        // Opposite roots on the V's.
        let f2 = weyl_fidelity(
            &omega,
            d,
            &u1,
            &v1.scale(zeta),
            &u2,
            &v2.scale(zeta.conj()),
        )
        .unwrap();
        assert!((f2 - base).norm() <= 1e-12);
    }

    #[test]
    fn parallel_and_sequential_fidelity_agree_bitwise() {
        let d = 4usize;
        let mut rng = sample::rng(103);
        let omega = VectorState::new(sample::state_vector(d * d, &mut rng)).unwrap();
        let (u1, v1, u2, v2) = pair_generators(d).unwrap();
        let a = weyl_fidelity(&omega, d, &u1, &v1, &u2, &v2).unwrap();
        let b = weyl_fidelity_seq(&omega, d, &u1, &v1, &u2, &v2).unwrap();
        assert_eq!(a.re.to_bits(), b.re.to_bits());
        assert_eq!(a.im.to_bits(), b.im.to_bits());
    }
}
