//! Schmidt decomposition, entanglement entropy, and the maximally entangled
//! fidelity ceiling.
//!
//! A bipartite pure state is stored as its coefficient matrix
//! `Ψ = Σ_{ij} C_ij |i⟩⊗|j⟩`; Schmidt data comes from the SVD of `C`. The
//! separable/PPT no-go is the bound `tr(ρ p_d) ≤ 1/d` for the projector `p_d`
//! onto the maximally entangled vector, sharp on product states.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::op::{Operator, C64};
use crate::{par, sample, TOL_SPECTRAL};

#[derive(Debug, Clone)]
pub struct PureState {
    coeff: DMatrix<C64>,
}

impl PureState {
    /// Requires a unit-norm coefficient matrix.
    pub fn new(coeff: DMatrix<C64>) -> Result<Self> {
        let norm = coeff.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { coeff })
    }

    /// Normalizes on the way in; rejects the zero matrix.
    pub fn normalized(coeff: DMatrix<C64>) -> Result<Self> {
        let norm = coeff.norm();
        if norm <= 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        Ok(Self {
            coeff: coeff / Complex::new(norm, 0.0),
        })
    }

    pub fn product(a: &DVector<C64>, b: &DVector<C64>) -> Result<Self> {
        Self::normalized(a * b.transpose())
    }

    /// Reshape of a flat vector on `[da, db]` (row-major: index = i·db + j).
    pub fn from_vector(v: &DVector<C64>, da: usize, db: usize) -> Result<Self> {
        if v.len() != da * db {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} vs {}x{}",
                v.len(),
                da,
                db
            )));
        }
        Self::new(DMatrix::from_fn(da, db, |i, j| v[i * db + j]))
    }

    pub fn to_vector(&self) -> DVector<C64> {
        let (da, db) = self.dims();
        DVector::from_fn(da * db, |k, _| self.coeff[(k / db, k % db)])
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.coeff.nrows(), self.coeff.ncols())
    }

    pub fn coeff(&self) -> &DMatrix<C64> {
        &self.coeff
    }

    /// |Ψ⟩⟨Ψ| with dims `[da, db]`.
    pub fn projector(&self) -> Result<Operator> {
        let v = self.to_vector();
        let (da, db) = self.dims();
        Operator::outer(&v, &v, &[da, db])
    }

    /// Reduced density on the first factor: ρ_A = C C†.
    pub fn reduced_a(&self) -> Operator {
        Operator::from_matrix(&self.coeff * self.coeff.adjoint())
    }

    /// Reduced density on the second factor: ρ_B = (C† C)ᵀ.
    pub fn reduced_b(&self) -> Operator {
        Operator::from_matrix((self.coeff.adjoint() * &self.coeff).transpose())
    }

    pub fn overlap(&self, other: &PureState) -> Result<C64> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch("overlap".into()));
        }
        let mut acc = Complex::new(0.0, 0.0);
        for (a, b) in self.coeff.iter().zip(other.coeff.iter()) {
            acc += a.conj() * b;
        }
        Ok(acc)
    }
}

/// Orthonormal Schmidt bases as matrix columns; the reconstruction law is
/// `C = left · diag(c) · rightᵀ`.
#[derive(Debug, Clone)]
pub struct SchmidtBasis {
    pub left: DMatrix<C64>,
    pub right: DMatrix<C64>,
}

/// Schmidt coefficients (descending, Σc² = 1) with optional explicit bases.
/// Families defined directly in the computational basis (for example the
/// divergent-entropy family) carry no basis block.
#[derive(Debug, Clone)]
pub struct SchmidtData {
    coeffs: Vec<f64>,
    basis: Option<SchmidtBasis>,
}

impl SchmidtData {
    fn validated(coeffs: Vec<f64>, basis: Option<SchmidtBasis>) -> Result<Self> {
        if coeffs.windows(2).any(|w| w[0] < w[1] - 1e-12) {
            return Err(Error::InvalidArgument(
                "schmidt coefficients must be sorted descending".into(),
            ));
        }
        if coeffs.iter().any(|c| *c < -1e-12) {
            return Err(Error::InvalidArgument(
                "schmidt coefficients must be nonnegative".into(),
            ));
        }
        let total: f64 = coeffs.iter().map(|c| c * c).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(total.sqrt()));
        }
        Ok(Self { coeffs, basis })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn basis(&self) -> Option<&SchmidtBasis> {
        self.basis.as_ref()
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.coeffs.iter().filter(|c| **c > tol).count()
    }
}

/// Schmidt decomposition via SVD of the coefficient matrix. The right basis
/// absorbs the conjugation so that `Ψ = Σ c_n left_n ⊗ right_n` holds with
/// the stored columns.
pub fn schmidt(psi: &PureState) -> Result<SchmidtData> {
    let svd = psi.coeff.clone().svd(true, true);
    let u = svd
        .u
        .ok_or_else(|| Error::InvalidArgument("svd did not return U".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::InvalidArgument("svd did not return V".into()))?;
    let coeffs: Vec<f64> = svd.singular_values.iter().copied().collect();
    // v_t = V†, columns of V are right-singular vectors; Schmidt vectors on
    // the second factor are their conjugates, i.e. rows of v_t unconjugated.
    let right = v_t.transpose();
    SchmidtData::validated(coeffs, Some(SchmidtBasis { left: u, right }))
}

/// Entanglement entropy −Σ c² log₂ c² in bits; zero coefficients contribute 0.
pub fn entropy_bits(s: &SchmidtData) -> f64 {
    s.coeffs()
        .iter()
        .map(|c| {
            let p = c * c;
            if p > 0.0 {
                -p * p.log2()
            } else {
                0.0
            }
        })
        .sum()
}

/// The square-summable family whose entanglement entropy grows without bound:
/// the reduced eigenvalues are c_k² ∝ 1/((k+2)·log₂²(k+2)), renormalized at
/// truncation `n`. The weight sum converges while Σ c² log₂(1/c²) picks up a
/// divergent Σ 1/(k log k) piece, so each decade of truncation adds entropy.
pub fn divergent_family(n: usize) -> Result<SchmidtData> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "divergent family needs at least two terms".into(),
        ));
    }
    let weights: Vec<f64> = (0..n)
        .map(|k| {
            let x = (k + 2) as f64;
            let l = x.log2();
            1.0 / (x * l * l)
        })
        .collect();
    let z: f64 = weights.iter().sum();
    SchmidtData::validated(weights.into_iter().map(|w| (w / z).sqrt()).collect(), None)
}

/// Ω_d = (1/√d) Σ |kk⟩.
pub fn max_entangled(d: usize) -> Result<PureState> {
    if d < 2 {
        return Err(Error::InvalidArgument(
            "maximally entangled state needs d >= 2".into(),
        ));
    }
    let c = Complex::new(1.0 / (d as f64).sqrt(), 0.0);
    PureState::new(DMatrix::from_fn(d, d, |i, j| if i == j { c } else { Complex::new(0.0, 0.0) }))
}

/// Projector p_d = |Ω_d⟩⟨Ω_d| on dims [d, d].
pub fn max_ent_projector(d: usize) -> Result<Operator> {
    max_entangled(d)?.projector()
}

/// tr(ρ p_d) = ⟨Ω_d| ρ |Ω_d⟩ for a density on [d, d].
pub fn fidelity(rho: &Operator, d: usize) -> Result<f64> {
    if rho.dims() != [d, d] {
        return Err(Error::DimensionMismatch(format!(
            "fidelity expects dims [{d}, {d}], got {:?}",
            rho.dims()
        )));
    }
    let rho = rho.clone().checked_density(TOL_SPECTRAL)?;
    let omega = max_entangled(d)?.to_vector();
    Ok(rho.expectation(&omega)?.re)
}

/// |⟨Ω_d|ψ⟩|² for a pure state on [d, d], without materializing projectors.
pub fn pure_fidelity(psi: &PureState) -> Result<f64> {
    let (da, db) = psi.dims();
    if da != db {
        return Err(Error::DimensionMismatch(
            "maximally entangled fidelity needs equal factors".into(),
        ));
    }
    // ⟨Ω|ψ⟩ = (1/√d) tr C
    let tr = psi.coeff.trace();
    Ok(tr.norm_sqr() / da as f64)
}

#[derive(Debug, Clone, Copy)]
pub struct PptReport {
    pub is_ppt: bool,
    pub min_pt_eigenvalue: f64,
    pub fidelity: f64,
    /// The separable/PPT ceiling 1/d.
    pub bound: f64,
}

/// Partial-transpose test together with the fidelity bound check.
pub fn ppt_fidelity_check(rho: &Operator) -> Result<PptReport> {
    let dims = rho.dims();
    if dims.len() != 2 || dims[0] != dims[1] {
        return Err(Error::DimensionMismatch(
            "ppt check expects dims [d, d]".into(),
        ));
    }
    let d = dims[0];
    let fid = fidelity(rho, d)?;
    let pt = rho.partial_transpose(1)?;
    let (vals, _) = pt.herm_eigen()?;
    let min = vals.first().copied().unwrap_or(0.0);
    Ok(PptReport {
        is_ppt: min >= -TOL_SPECTRAL,
        min_pt_eigenvalue: min,
        fidelity: fid,
        bound: 1.0 / d as f64,
    })
}

/// Isotropic state F·p_d + (1−F)·(1−p_d)/(d²−1).
pub fn isotropic_state(d: usize, f: f64) -> Result<Operator> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidArgument(format!(
            "isotropic parameter {f} outside [0, 1]"
        )));
    }
    let p = max_ent_projector(d)?;
    let rest = Operator::identity(&[d, d]).sub(&p)?;
    p.scale(Complex::new(f, 0.0))
        .add(&rest.scale(Complex::new((1.0 - f) / (d * d - 1) as f64, 0.0)))
}

/// Outcome of a randomized product-state sweep against the 1/d ceiling.
#[derive(Debug, Clone, Copy)]
pub struct ProductSweep {
    pub d: usize,
    pub samples: usize,
    /// max tr(σ p_d) over independent Haar pairs φ ⊗ ψ.
    pub max_fidelity_random: f64,
    /// max over the aligned partners φ ⊗ conj(φ), the analytic maximizers;
    /// Haar pairs alone stay far from 1/d for d ≥ 3.
    pub max_fidelity_aligned: f64,
    pub bound: f64,
}

fn sweep_sample(d: usize, seed: u64, i: usize) -> (f64, f64) {
    // Per-sample stream keeps draws independent of evaluation order.
    let mut rng = sample::rng(seed);
    rng.set_stream(i as u64 + 1);
    let phi = sample::state_vector(d, &mut rng);
    let psi = sample::state_vector(d, &mut rng);
    let f_random = phi.iter().zip(psi.iter()).map(|(a, b)| a * b).sum::<C64>();
    let aligned = phi.map(|z| z.conj());
    let f_aligned = phi
        .iter()
        .zip(aligned.iter())
        .map(|(a, b)| a * b)
        .sum::<C64>();
    (
        f_random.norm_sqr() / d as f64,
        f_aligned.norm_sqr() / d as f64,
    )
}

fn sweep_from_pairs(d: usize, samples: usize, pairs: Vec<(f64, f64)>) -> ProductSweep {
    let mut max_r: f64 = 0.0;
    let mut max_a: f64 = 0.0;
    for (r, a) in pairs {
        max_r = max_r.max(r);
        max_a = max_a.max(a);
    }
    ProductSweep {
        d,
        samples,
        max_fidelity_random: max_r,
        max_fidelity_aligned: max_a,
        bound: 1.0 / d as f64,
    }
}

/// Seeded sweep of product states |φ⊗ψ⟩ evaluating tr(σ p_d); includes the
/// aligned partner ψ = conj(φ) of every draw so the ceiling's sharpness shows.
pub fn product_fidelity_sweep(d: usize, samples: usize, seed: u64) -> Result<ProductSweep> {
    if d < 2 || samples == 0 {
        return Err(Error::InvalidArgument(
            "product sweep needs d >= 2 and at least one sample".into(),
        ));
    }
    let pairs = par::map_range(samples, |i| sweep_sample(d, seed, i));
    Ok(sweep_from_pairs(d, samples, pairs))
}

/// Sequential twin of [`product_fidelity_sweep`].
pub fn product_fidelity_sweep_seq(d: usize, samples: usize, seed: u64) -> Result<ProductSweep> {
    if d < 2 || samples == 0 {
        return Err(Error::InvalidArgument(
            "product sweep needs d >= 2 and at least one sample".into(),
        ));
    }
    let pairs = par::map_range_seq(samples, |i| sweep_sample(d, seed, i));
    Ok(sweep_from_pairs(d, samples, pairs))
}
