//! The two-mode squeezed (NOPA) family Ψ_λ = √(1−λ²) Σ λⁿ|n,n⟩ in truncated
//! Fock space, λ = tanh r: qudit extraction by digit splitting, permutation
//! isometries and their defect norms, oscillator-Hamiltonian doubles, and the
//! Gaussian covariance / characteristic-function forms that characterize the
//! EPR limit r → ∞.
//!
//! Quadrature conventions: Q = (a+a†)/√2, P = −i(a−a†)/√2, so the vacuum has
//! Var(Q) = Var(P) = ½. Truncated sums carry the analytic tail weight
//! (1−λ²)Σ_{n≥N} λ^{2n} = λ^{2N}; operations refuse tolerances below it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::bipartite::PureState;
use crate::error::{Error, Result};
use crate::op::C64;

/// Squeezing parameters: λ ∈ [0, 1), r ≥ 0 with λ = tanh r, and the Fock
/// cutoff N (modes 0..N on each side).
#[derive(Debug, Clone, Copy)]
pub struct NopaParams {
    lambda: f64,
    r: f64,
    trunc: usize,
}

impl NopaParams {
    pub fn from_lambda(lambda: f64, trunc: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::InvalidArgument(format!(
                "lambda must lie in [0, 1), got {lambda}"
            )));
        }
        if trunc < 2 {
            return Err(Error::InvalidArgument("fock cutoff must be >= 2".into()));
        }
        Ok(Self {
            lambda,
            r: lambda.atanh(),
            trunc,
        })
    }

    pub fn from_r(r: f64, trunc: usize) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "squeezing r must be finite and >= 0, got {r}"
            )));
        }
        Self::from_lambda(r.tanh(), trunc)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    /// Weight of the discarded tail, (1−λ²) Σ_{n≥N} λ^{2n} = λ^{2N}.
    pub fn tail_weight(&self) -> f64 {
        self.lambda.powi(2 * self.trunc as i32)
    }

    /// Errors when the cutoff cannot support the requested tolerance.
    pub fn require_tail_below(&self, tol: f64) -> Result<()> {
        let tail = self.tail_weight();
        if tail > tol {
            return Err(Error::TruncationTooSmall { tail, tol });
        }
        Ok(())
    }
}

/// The diagonal two-mode vector Σ c_n|n,n⟩ (the family is Schmidt-aligned
/// with the number basis, so one coefficient per n suffices). [`Self::to_pure_state`]
/// embeds it as a general N×N bipartite vector.
#[derive(Debug, Clone)]
pub struct FockVector {
    coeffs: DVector<f64>,
}

impl FockVector {
    fn from_unnormalized(mut coeffs: DVector<f64>) -> Result<Self> {
        let norm = coeffs.norm();
        if norm <= 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        coeffs /= norm;
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.len() == 0
    }

    pub fn to_pure_state(&self) -> PureState {
        let n = self.coeffs.len();
        let mat = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex::new(self.coeffs[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        });
        PureState::new(mat).expect("unit norm by construction")
    }
}

/// √(1−λ²) Σ_{n<N} λⁿ|n,n⟩, renormalized at the cutoff.
pub fn nopa_state(params: &NopaParams) -> FockVector {
    let l = params.lambda;
    let coeffs = DVector::from_fn(params.trunc, |n, _| l.powi(n as i32));
    FockVector::from_unnormalized(coeffs).expect("leading coefficient is 1")
}

/// Entanglement entropy of the untruncated Ψ_λ in bits:
/// −log₂(1−λ²) − (λ²/(1−λ²)) log₂ λ².
pub fn entropy_closed_form(lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let l2 = lambda * lambda;
    -(1.0 - l2).log2() - (l2 / (1.0 - l2)) * l2.log2()
}

/// Maximally entangled fidelity of the extracted d-level state,
/// (Σ_{r<d} λ^r)² / (d Σ_{r<d} λ^{2r}).
pub fn extraction_fidelity(lambda: f64, d: usize) -> f64 {
    let amp: f64 = (0..d).map(|r| lambda.powi(r as i32)).sum();
    let wt: f64 = (0..d).map(|r| lambda.powi(2 * r as i32)).sum();
    amp * amp / (d as f64 * wt)
}

/// Result of one digit-splitting step: Ψ_λ ≅ Ψ_{λ^d} ⊗ Ψ^{(d)}_λ under
/// U_d e_{dk+r} = e_k ⊗ e_r applied on both sides.
#[derive(Debug, Clone)]
pub struct Extraction {
    /// The coarse factor Ψ_{λ^d} on N/d modes per side.
    pub coarse: FockVector,
    /// Parameters of the coarse factor (λ^d, cutoff N/d).
    pub coarse_params: NopaParams,
    /// The extracted d×d state ∝ Σ_{r<d} λ^r e_r⊗e_r.
    pub qudit: PureState,
    /// ‖(U_d⊗U_d)Ψ_λ − Ψ_{λ^d}⊗Ψ^{(d)}_λ‖ over the truncated window.
    pub residual: f64,
    /// Closed-form maximally entangled fidelity of `qudit`.
    pub fidelity: f64,
}

pub fn extract_qudit(params: &NopaParams, d: usize) -> Result<Extraction> {
    if d < 2 {
        return Err(Error::InvalidArgument("extraction needs d >= 2".into()));
    }
    if params.trunc % d != 0 || params.trunc / d < 2 {
        return Err(Error::InvalidArgument(format!(
            "cutoff {} is not a multiple of d = {} with quotient >= 2",
            params.trunc, d
        )));
    }
    let l = params.lambda;
    let coarse_params = NopaParams::from_lambda(l.powi(d as i32), params.trunc / d)?;
    let coarse = nopa_state(&coarse_params);

    let qudit_weight: f64 = (0..d).map(|r| l.powi(2 * r as i32)).sum();
    let qudit_coeffs: Vec<f64> = (0..d).map(|r| l.powi(r as i32) / qudit_weight.sqrt()).collect();
    let qudit = PureState::new(DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            Complex::new(qudit_coeffs[i], 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    }))?;

    let state = nopa_state(params);
    let mut residual_sq = 0.0;
    for n in 0..params.trunc {
        let diff = state.coeffs()[n] - coarse.coeffs()[n / d] * qudit_coeffs[n % d];
        residual_sq += diff * diff;
    }

    Ok(Extraction {
        coarse,
        coarse_params,
        qudit,
        residual: residual_sq.sqrt(),
        fidelity: extraction_fidelity(l, d),
    })
}

/// An injective map p on Fock labels, standing for the isometry
/// V_p e_n = e_{p(n)}. `ell` is the finite displacement bound when one exists
/// (|p(n) − n| ≤ ell); maps like n ↦ 2n carry `None`.
#[derive(Debug, Clone)]
pub struct PermIsometry {
    map: Vec<usize>,
    ell: Option<usize>,
}

impl PermIsometry {
    pub fn new(map: Vec<usize>, ell: Option<usize>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for (n, &pn) in map.iter().enumerate() {
            if !seen.insert(pn) {
                return Err(Error::InvalidArgument(format!(
                    "map is not injective: value {pn} repeats"
                )));
            }
            if let Some(l) = ell {
                if pn.abs_diff(n) > l {
                    return Err(Error::InvalidArgument(format!(
                        "|p({n}) − {n}| = {} exceeds the declared bound {l}",
                        pn.abs_diff(n)
                    )));
                }
            }
        }
        Ok(Self { map, ell })
    }

    pub fn identity(n: usize) -> Self {
        Self::new((0..n).collect(), Some(0)).expect("identity is injective")
    }

    /// p(n) = n + k.
    pub fn shift(n: usize, k: usize) -> Self {
        Self::new((0..n).map(|i| i + k).collect(), Some(k)).expect("shift is injective")
    }

    /// Swaps 2j ↔ 2j+1, leaving a possible odd tail fixed.
    pub fn swap_pairs(n: usize) -> Self {
        let map = (0..n)
            .map(|i| if i + 1 < n || i % 2 == 1 { i ^ 1 } else { i })
            .collect();
        Self::new(map, Some(1)).expect("pair swap is injective")
    }

    /// p(n) = 2n; no finite displacement bound.
    pub fn double_index(n: usize) -> Self {
        Self::new((0..n).map(|i| 2 * i).collect(), None).expect("doubling is injective")
    }

    pub fn apply(&self, n: usize) -> Option<usize> {
        self.map.get(n).copied()
    }

    pub fn domain(&self) -> usize {
        self.map.len()
    }

    pub fn distance_bound(&self) -> Option<usize> {
        self.ell
    }

    /// Dense codomain×domain matrix with a 1 at (p(n), n). The codomain must
    /// cover the range; the result satisfies V†V = 𝟙 on the domain exactly,
    /// while VV† projects onto the range only.
    pub fn matrix(&self, codomain: usize) -> Result<DMatrix<f64>> {
        if let Some(&max) = self.map.iter().max() {
            if max >= codomain {
                return Err(Error::DimensionMismatch(format!(
                    "range reaches {max} but the codomain holds {codomain} labels"
                )));
            }
        }
        let mut m = DMatrix::zeros(codomain, self.map.len());
        for (n, &pn) in self.map.iter().enumerate() {
            m[(pn, n)] = 1.0;
        }
        Ok(m)
    }
}

/// ‖(V_p⊗𝟙 − 𝟙⊗V_p†)Ψ_λ‖² = (1−λ²) Σ_{n<N} (λⁿ − λ^{p(n)})², by direct
/// summation with the analytic (untruncated) coefficients. Values p(n) ≥ N
/// contribute through λ^{p(n)} as they do for the infinite state.
pub fn perm_defect(params: &NopaParams, p: &PermIsometry) -> Result<f64> {
    if p.domain() < params.trunc {
        return Err(Error::InvalidArgument(format!(
            "map is represented up to {} but the cutoff is {}",
            p.domain(),
            params.trunc
        )));
    }
    let l = params.lambda;
    let mut acc = 0.0;
    for n in 0..params.trunc {
        let diff = l.powi(n as i32) - l.powi(p.apply(n).expect("domain checked") as i32);
        acc += diff * diff;
    }
    Ok((1.0 - l * l) * acc)
}

/// The displacement-bound estimate ‖Δ_λ‖² ≤ |1 − λ^{−ℓ}|².
pub fn perm_defect_bound(lambda: f64, ell: usize) -> f64 {
    let x = 1.0 - lambda.powi(-(ell as i32));
    x * x
}

/// Closed form of the defect for p(n) = 2n:
/// (1−λ²)[1/(1−λ²) − 2/(1−λ³) + 1/(1−λ⁴)], which tends to 1/6 as λ → 1.
pub fn even_defect_closed_form(lambda: f64) -> f64 {
    let l = lambda;
    (1.0 - l * l)
        * (1.0 / (1.0 - l * l) - 2.0 / (1.0 - l * l * l) + 1.0 / (1.0 - l * l * l * l))
}

/// ‖(f(H₁) − f(H₂))ψ‖ for a general two-mode vector, H_i = n_i + ½ in the
/// number basis.
pub fn hamiltonian_defect(psi: &PureState, f: impl Fn(f64) -> f64) -> f64 {
    let c = psi.coeff();
    let mut acc = 0.0;
    for n1 in 0..c.nrows() {
        let f1 = f(n1 as f64 + 0.5);
        for n2 in 0..c.ncols() {
            let gap = f1 - f(n2 as f64 + 0.5);
            acc += gap * gap * c[(n1, n2)].norm_sqr();
        }
    }
    acc.sqrt()
}

/// The defect on Ψ_λ itself; zero for every f since the vector is diagonal.
pub fn hamiltonian_double_check(params: &NopaParams, f: impl Fn(f64) -> f64) -> f64 {
    hamiltonian_defect(&nopa_state(params).to_pure_state(), f)
}

/// The four EPR quadrature variances. For Ψ_λ the squeezed pair
/// (Q₁−Q₂, P₁+P₂) sits at e^{−2r} and the stretched pair at e^{2r}.
#[derive(Debug, Clone, Copy)]
pub struct EprCovariance {
    pub var_qdiff: f64,
    pub var_psum: f64,
    pub var_qsum: f64,
    pub var_pdiff: f64,
}

pub fn epr_covariance(r: f64) -> Result<EprCovariance> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "squeezing r must be finite and >= 0, got {r}"
        )));
    }
    let squeezed = (-2.0 * r).exp();
    let stretched = (2.0 * r).exp();
    Ok(EprCovariance {
        var_qdiff: squeezed,
        var_psum: squeezed,
        var_qsum: stretched,
        var_pdiff: stretched,
    })
}

/// The same four variances from truncated Fock second moments:
/// ⟨Q₁²⟩ = ⟨Q₂²⟩ = Σ c_n²(n + ½), ⟨Q₁Q₂⟩ = −⟨P₁P₂⟩ = Σ c_n c_{n+1}(n+1).
pub fn fock_covariance(params: &NopaParams) -> EprCovariance {
    let c = nopa_state(params);
    let n = c.len();
    let mut quad = 0.0;
    let mut cross = 0.0;
    for k in 0..n {
        quad += c.coeffs()[k] * c.coeffs()[k] * (k as f64 + 0.5);
        if k + 1 < n {
            cross += c.coeffs()[k] * c.coeffs()[k + 1] * (k as f64 + 1.0);
        }
    }
    EprCovariance {
        var_qdiff: 2.0 * quad - 2.0 * cross,
        var_psum: 2.0 * quad - 2.0 * cross,
        var_qsum: 2.0 * quad + 2.0 * cross,
        var_pdiff: 2.0 * quad + 2.0 * cross,
    }
}

/// Gaussian characteristic function ⟨Ψ_λ|W|Ψ_λ⟩ of the two-mode Weyl
/// displacement W = exp(i[ξ₁P₁ + ξ₂P₂ − η₁Q₁ − η₂Q₂]):
/// exp(−½ Var(ξ·P − η·Q)) with the squeezed-state covariances
/// Var(Q_i) = Var(P_i) = cosh(2r)/2, Cov(Q₁,Q₂) = −Cov(P₁,P₂) = sinh(2r)/2.
pub fn characteristic_fn(r: f64, xi1: f64, xi2: f64, eta1: f64, eta2: f64) -> Result<C64> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "squeezing r must be finite and >= 0, got {r}"
        )));
    }
    let c = (2.0 * r).cosh() / 2.0;
    let s = (2.0 * r).sinh();
    let var = c * (xi1 * xi1 + xi2 * xi2 + eta1 * eta1 + eta2 * eta2)
        + s * (eta1 * eta2 - xi1 * xi2);
    Ok(Complex::new((-0.5 * var).exp(), 0.0))
}

/// Truncated displacement matrix ⟨m|D(α)|n⟩, built column by column from the
/// coherent state D(α)|0⟩ via D(α) a† = (a† − ᾱ) D(α).
fn displacement_matrix(alpha: C64, n: usize) -> DMatrix<C64> {
    let mut d = DMatrix::<C64>::zeros(n, n);
    // Column 0: e^{−|α|²/2} α^k/√(k!).
    let mut amp = Complex::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for k in 0..n {
        d[(k, 0)] = amp;
        amp *= alpha / Complex::new(((k + 1) as f64).sqrt(), 0.0);
    }
    for col in 1..n {
        let scale = 1.0 / (col as f64).sqrt();
        for k in 0..n {
            let raised = if k == 0 {
                Complex::new(0.0, 0.0)
            } else {
                d[(k - 1, col - 1)] * Complex::new((k as f64).sqrt(), 0.0)
            };
            d[(k, col)] = (raised - alpha.conj() * d[(k, col - 1)]) * Complex::new(scale, 0.0);
        }
    }
    d
}

/// Truncated-Fock cross-check of [`characteristic_fn`]:
/// Σ_{n,m} c_m c_n ⟨m|D(α₁)|n⟩⟨m|D(α₂)|n⟩ with α_i = −(ξ_i + iη_i)/√2.
pub fn characteristic_fn_fock(
    params: &NopaParams,
    xi1: f64,
    xi2: f64,
    eta1: f64,
    eta2: f64,
) -> C64 {
    let c = nopa_state(params);
    let n = c.len();
    let root2 = std::f64::consts::SQRT_2;
    let d1 = displacement_matrix(Complex::new(-xi1 / root2, -eta1 / root2), n);
    let d2 = displacement_matrix(Complex::new(-xi2 / root2, -eta2 / root2), n);
    let mut acc = Complex::new(0.0, 0.0);
    for m in 0..n {
        for k in 0..n {
            acc += Complex::new(c.coeffs()[m] * c.coeffs()[k], 0.0) * d1[(m, k)] * d2[(m, k)];
        }
    }
    acc
}
