//! Modular objects of a bipartite pure state with invertible marginals.
//!
//! For Ψ with full Schmidt rank the closure `S(A⊗𝟙)Ψ = (A†⊗𝟙)Ψ` has polar
//! decomposition S = JΔ^{1/2} with Δ = ρ_A ⊗ ρ_B^{-1} and an antiunitary J
//! that flips the factors and conjugates coordinates in the Schmidt bases.
//! A partner observable B on the far side ("double" of A, meaning
//! `(A⊗𝟙)Ψ = (𝟙⊗B)Ψ`) exists exactly when A commutes with ρ_A, and is then
//! JA†J.

use nalgebra::DVector;
use num_complex::Complex;

use crate::bipartite::{schmidt, PureState};
use crate::error::{Error, Result};
use crate::op::{self, Operator, C64};
use crate::{TOL_CENTRALIZER, TOL_MODULAR};

/// Minimal Schmidt coefficient accepted as "full rank"; below this the
/// marginals are numerically singular and Δ is undefined.
const MIN_SCHMIDT: f64 = 1e-8;

/// Antiunitary map stored as its unitary part against entrywise conjugation
/// in the computational basis: v ↦ U·conj(v).
#[derive(Debug, Clone)]
pub struct AntiUnitary {
    unitary: Operator,
}

impl AntiUnitary {
    pub fn unitary_part(&self) -> &Operator {
        &self.unitary
    }

    pub fn apply(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        self.unitary.apply(&v.map(|z| z.conj()))
    }

    /// ‖U·conj(U) − 𝟙‖_max; zero exactly when the map squares to the identity.
    pub fn involution_deviation(&self) -> f64 {
        let prod = self.unitary.matrix() * self.unitary.matrix().map(|z| z.conj());
        let mut dev: f64 = 0.0;
        for i in 0..prod.nrows() {
            for j in 0..prod.ncols() {
                let target = if i == j {
                    Complex::new(1.0, 0.0)
                } else {
                    Complex::new(0.0, 0.0)
                };
                dev = dev.max((prod[(i, j)] - target).norm());
            }
        }
        dev
    }

    /// The linear operator J X J (antilinear sandwich): U·conj(X)·conj(U).
    pub fn sandwich(&self, x: &Operator) -> Result<Operator> {
        self.unitary
            .matmul(&x.conjugated())?
            .matmul(&self.unitary.conjugated())
    }
}

/// Modular data of a full-Schmidt-rank state on [d, d].
#[derive(Debug, Clone)]
pub struct ModularData {
    psi: PureState,
    d: usize,
    rho_a: Operator,
    rho_b: Operator,
    delta: Operator,
    conj_j: AntiUnitary,
}

/// Builds Δ, J and the marginals. Errors with `NotCyclic` unless the factors
/// match and every Schmidt coefficient clears the full-rank floor.
pub fn modular_data(psi: &PureState) -> Result<ModularData> {
    let (da, db) = psi.dims();
    if da != db {
        return Err(Error::NotCyclic(format!(
            "factors must have equal dimension, got {da} and {db}"
        )));
    }
    let s = schmidt(psi)?;
    let min_coeff = s.coeffs().last().copied().unwrap_or(0.0);
    if s.coeffs().len() < da || min_coeff < MIN_SCHMIDT {
        return Err(Error::NotCyclic(format!(
            "state is not separating: smallest schmidt coefficient {min_coeff:.3e}"
        )));
    }
    let rho_a = psi.reduced_a();
    let rho_b = psi.reduced_b();
    let rho_b_inv = rho_b.herm_fn(|x| Complex::new(1.0 / x, 0.0))?;
    let delta = rho_a.tensor(&rho_b_inv)?;
    // J in the computational basis: (L⊗R)·F·(L⊗R)ᵀ against conjugation, where
    // L, R are the Schmidt bases. Invariant under the SVD's phase freedom.
    let basis = s
        .basis()
        .ok_or_else(|| Error::InvalidArgument("schmidt data without basis".into()))?;
    let w = Operator::from_matrix_with_dims(basis.left.kronecker(&basis.right), vec![da, da])?;
    let u_j = w.matmul(&op::flip(da))?.matmul(&w.transposed())?;
    Ok(ModularData {
        psi: psi.clone(),
        d: da,
        rho_a,
        rho_b,
        delta,
        conj_j: AntiUnitary { unitary: u_j },
    })
}

impl ModularData {
    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn psi(&self) -> &PureState {
        &self.psi
    }

    pub fn omega(&self) -> DVector<C64> {
        self.psi.to_vector()
    }

    pub fn rho_a(&self) -> &Operator {
        &self.rho_a
    }

    pub fn rho_b(&self) -> &Operator {
        &self.rho_b
    }

    pub fn delta(&self) -> &Operator {
        &self.delta
    }

    pub fn conj_j(&self) -> &AntiUnitary {
        &self.conj_j
    }

    /// Δ^p = ρ_A^p ⊗ ρ_B^{-p}, computed by local spectral calculus rather
    /// than eigendecomposing the d²-dimensional Δ.
    pub fn delta_power(&self, p: f64) -> Result<Operator> {
        let left = self.rho_a.herm_fn(|x| Complex::new(x.powf(p), 0.0))?;
        let right = self.rho_b.herm_fn(|x| Complex::new(x.powf(-p), 0.0))?;
        left.tensor(&right)
    }

    /// The flow unitary Δ^{it} = ρ_A^{it} ⊗ ρ_B^{-it}.
    pub fn delta_unitary(&self, t: f64) -> Result<Operator> {
        let left = self.rho_a.herm_fn(|x| Complex::from_polar(1.0, t * x.ln()))?;
        let right = self
            .rho_b
            .herm_fn(|x| Complex::from_polar(1.0, -t * x.ln()))?;
        left.tensor(&right)
    }

    /// S v = J Δ^{1/2} v.
    pub fn apply_s(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        let half = self.delta_power(0.5)?;
        self.conj_j.apply(&half.apply(v)?)
    }

    /// ‖S(A⊗𝟙)Ψ − (A†⊗𝟙)Ψ‖ for a local A.
    pub fn closure_deviation(&self, a_local: &Operator) -> Result<f64> {
        let a_full = self.embed_a(a_local)?;
        let lhs = self.apply_s(&a_full.apply(&self.omega())?)?;
        let rhs = self.embed_a(&a_local.dagger())?.apply(&self.omega())?;
        Ok((lhs - rhs).norm())
    }

    /// Flow of a local observable: ρ_A^{it} A ρ_A^{-it}. Agrees with the
    /// global form Δ^{it}(A⊗𝟙)Δ^{-it} on the first factor.
    pub fn modular_flow(&self, a_local: &Operator, t: f64) -> Result<Operator> {
        self.check_local(a_local)?;
        let fwd = self.rho_a.herm_fn(|x| Complex::from_polar(1.0, t * x.ln()))?;
        let bwd = self.rho_a.herm_fn(|x| Complex::from_polar(1.0, -t * x.ln()))?;
        fwd.matmul(a_local)?.matmul(&bwd)
    }

    /// JA†J restricted to the far factor when A sits in the centralizer of
    /// ρ_A (Frobenius commutator within tolerance); `None` otherwise, since
    /// no far-side partner reproduces (A⊗𝟙)Ψ then.
    pub fn find_double(&self, a_local: &Operator) -> Result<Option<Operator>> {
        self.check_local(a_local)?;
        let comm = self
            .rho_a
            .matmul(a_local)?
            .sub(&a_local.matmul(&self.rho_a)?)?;
        if comm.norm_frobenius() > TOL_CENTRALIZER {
            return Ok(None);
        }
        let a_full = self.embed_a(&a_local.dagger())?;
        let b_full = self.conj_j.sandwich(&a_full)?;
        // JA†J lies in the commutant 𝟙⊗B(H); average out the first factor
        // and confirm the remainder is structural noise only.
        let b_local = b_full
            .partial_trace(0)?
            .scale(Complex::new(1.0 / self.d as f64, 0.0));
        let recon = Operator::identity(&[self.d]).tensor(&b_local)?;
        let dev = recon.sub(&b_full)?.norm_max();
        if dev > TOL_MODULAR * (1.0 + b_full.norm_max()) {
            return Err(Error::Malformed(format!(
                "conjugated observable left the commutant by {dev:.3e}"
            )));
        }
        Ok(Some(b_local))
    }

    fn embed_a(&self, a_local: &Operator) -> Result<Operator> {
        self.check_local(a_local)?;
        a_local.tensor(&Operator::identity(&[self.d]))
    }

    fn check_local(&self, a: &Operator) -> Result<()> {
        if a.rows() != self.d || a.cols() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "local operator must be {0}x{0}",
                self.d
            )));
        }
        Ok(())
    }
}

/// The two defect numbers (ω((A†−B†)(A−B)), ω((A−B)(A†−B†))) for A on the
/// near factor and B on the far one; both vanish exactly for a double.
pub fn double_defect(
    omega: &Operator,
    a_local: &Operator,
    b_local: &Operator,
) -> Result<(f64, f64)> {
    let dims = omega.dims();
    if dims.len() != 2 {
        return Err(Error::DimensionMismatch(
            "defect state must carry dims [d_A, d_B]".into(),
        ));
    }
    let a_full = a_local.tensor(&Operator::identity(&[dims[1]]))?;
    let b_full = Operator::identity(&[dims[0]]).tensor(b_local)?;
    let diff = a_full.sub(&b_full)?;
    let left = diff.dagger().matmul(&diff)?.expectation_in(omega)?;
    let right = diff.matmul(&diff.dagger())?.expectation_in(omega)?;
    Ok((left.re, right.re))
}

/// Vector-state defect, avoiding the density matrix: the components are
/// ‖(A⊗𝟙 − 𝟙⊗B)ψ‖² and the same with adjoints.
pub fn double_defect_pure(
    psi: &PureState,
    a_local: &Operator,
    b_local: &Operator,
) -> Result<(f64, f64)> {
    let (da, db) = psi.dims();
    let a_full = a_local.tensor(&Operator::identity(&[db]))?;
    let b_full = Operator::identity(&[da]).tensor(b_local)?;
    let v = psi.to_vector();
    let d = a_full.sub(&b_full)?;
    let left = d.apply(&v)?.norm_squared();
    let right = d.dagger().apply(&v)?.norm_squared();
    Ok((left, right))
}

/// The three faces of a flat Schmidt spectrum: Δ close to 𝟙, equal
/// coefficients, and the restricted state acting as a trace.
#[derive(Debug, Clone, Copy)]
pub struct FlatSpectrumReport {
    pub delta_identity_deviation: f64,
    pub coeff_spread: f64,
    /// max |tr(ρ_A A₁A₂) − tr(ρ_A A₂A₁)| over sampled Hermitian pairs.
    pub max_trace_asymmetry: f64,
}

pub fn flat_spectrum_report(
    md: &ModularData,
    samples: usize,
    seed: u64,
) -> Result<FlatSpectrumReport> {
    let ident = Operator::identity(&[md.dimension(), md.dimension()]);
    let delta_dev = md.delta().sub(&ident)?.norm_max();
    let s = schmidt(md.psi())?;
    let spread = s.coeffs().first().unwrap_or(&0.0) - s.coeffs().last().unwrap_or(&0.0);
    let mut rng = crate::sample::rng(seed);
    let mut asym: f64 = 0.0;
    for _ in 0..samples {
        let a1 = Operator::from_matrix(crate::sample::hermitian_contraction(
            md.dimension(),
            &mut rng,
        ));
        let a2 = Operator::from_matrix(crate::sample::hermitian_contraction(
            md.dimension(),
            &mut rng,
        ));
        let fwd = a1.matmul(&a2)?.expectation_in(md.rho_a())?;
        let bwd = a2.matmul(&a1)?.expectation_in(md.rho_a())?;
        asym = asym.max((fwd - bwd).norm());
    }
    Ok(FlatSpectrumReport {
        delta_identity_deviation: delta_dev,
        coeff_spread: spread,
        max_trace_asymmetry: asym,
    })
}
