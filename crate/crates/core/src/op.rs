//! Dense complex operators with tensor-factor bookkeeping.
//!
//! [`Operator`] wraps a row-major `DMatrix<Complex<f64>>` together with the
//! ordered list of tensor-factor dimensions of the space it acts on. Indices
//! compose row-major: on `dims = [dA, dB]` the basis vector `|i, j⟩` sits at
//! position `i * dB + j`. All structural operations (tensor product, partial
//! trace, partial transpose) act on that index layout.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::TOL_SPECTRAL;

pub type C64 = Complex<f64>;

/// Entry cap for tensor products (rows × cols of the result). Guards against
/// accidentally materializing chain or grid objects as dense matrices.
pub const DEFAULT_SIZE_CAP: usize = 1 << 20;

pub const ONE: C64 = Complex::new(1.0, 0.0);
pub const ZERO: C64 = Complex::new(0.0, 0.0);
pub const I: C64 = Complex::new(0.0, 1.0);

/// Eigendecomposition of a normal operator: `X = V diag(values) V†` with
/// orthonormal columns in `vectors`, sorted ascending by (re, im).
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<C64>,
    pub vectors: DMatrix<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    mat: DMatrix<C64>,
    dims: Vec<usize>,
}

impl Operator {
    /// Wraps a matrix as an operator with a single tensor factor.
    pub fn from_matrix(mat: DMatrix<C64>) -> Self {
        let d = mat.nrows();
        Self { mat, dims: vec![d] }
    }

    /// Wraps a matrix declaring the tensor factorization of its row space.
    pub fn from_matrix_with_dims(mat: DMatrix<C64>, dims: Vec<usize>) -> Result<Self> {
        let prod: usize = dims.iter().product();
        if dims.is_empty() || prod != mat.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "dims {:?} do not factor {} rows",
                dims,
                mat.nrows()
            )));
        }
        Ok(Self { mat, dims })
    }

    /// Square operator from an entry function over `dims`-factored indices.
    pub fn from_fn(dims: &[usize], f: impl Fn(usize, usize) -> C64) -> Self {
        let n: usize = dims.iter().product();
        Self {
            mat: DMatrix::from_fn(n, n, f),
            dims: dims.to_vec(),
        }
    }

    pub fn identity(dims: &[usize]) -> Self {
        let n: usize = dims.iter().product();
        Self {
            mat: DMatrix::identity(n, n),
            dims: dims.to_vec(),
        }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let n: usize = dims.iter().product();
        Self {
            mat: DMatrix::zeros(n, n),
            dims: dims.to_vec(),
        }
    }

    /// Rank-one operator `|v⟩⟨w|`.
    pub fn outer(v: &DVector<C64>, w: &DVector<C64>, dims: &[usize]) -> Result<Self> {
        let n: usize = dims.iter().product();
        if v.len() != n || w.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "outer product of {} and {} against dims {:?}",
                v.len(),
                w.len(),
                dims
            )));
        }
        Ok(Self {
            mat: v * w.adjoint(),
            dims: dims.to_vec(),
        })
    }

    pub fn rows(&self) -> usize {
        self.mat.nrows()
    }

    pub fn cols(&self) -> usize {
        self.mat.ncols()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    /// Same matrix under a different factorization of the row space.
    pub fn with_dims(&self, dims: &[usize]) -> Result<Self> {
        Self::from_matrix_with_dims(self.mat.clone(), dims.to_vec())
    }

    pub fn dagger(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
            dims: self.dims.clone(),
        }
    }

    pub fn transposed(&self) -> Self {
        Self {
            mat: self.mat.transpose(),
            dims: self.dims.clone(),
        }
    }

    pub fn conjugated(&self) -> Self {
        Self {
            mat: self.mat.conjugate(),
            dims: self.dims.clone(),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            mat: &self.mat * c,
            dims: self.dims.clone(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn is_square(&self) -> bool {
        self.mat.nrows() == self.mat.ncols()
    }

    /// Largest entry modulus.
    pub fn norm_max(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn norm_frobenius(&self) -> f64 {
        self.mat.norm()
    }

    /// Operator (spectral) norm: the largest singular value.
    pub fn norm_operator(&self) -> f64 {
        self.mat
            .singular_values()
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.mat - self.mat.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn unitary_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.mat.nrows();
        (self.mat.adjoint() * &self.mat - DMatrix::<C64>::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Tags an operator as unitary, failing if ‖U†U − 1‖max exceeds `tol`.
    pub fn checked_unitary(self, tol: f64) -> Result<Self> {
        let dev = self.unitary_deviation();
        if dev > tol {
            return Err(Error::NotUnitary(dev));
        }
        Ok(self)
    }

    /// Tags an operator as a density matrix: hermitian, eigenvalues ≥ −tol,
    /// unit trace within tol.
    pub fn checked_density(self, tol: f64) -> Result<Self> {
        let herm = self.hermitian_deviation();
        if herm > tol {
            return Err(Error::NotDensity(format!(
                "hermiticity deviation {herm:.3e}"
            )));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::NotDensity(format!("trace {tr}")));
        }
        let (vals, _) = self.herm_eigen()?;
        if let Some(min) = vals.first() {
            if *min < -tol {
                return Err(Error::NotDensity(format!("negative eigenvalue {min:.3e}")));
            }
        }
        Ok(self)
    }

    pub fn normality_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.mat * self.mat.adjoint() - self.mat.adjoint() * &self.mat)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn tensor(&self, rhs: &Operator) -> Result<Operator> {
        self.tensor_capped(rhs, DEFAULT_SIZE_CAP)
    }

    /// Kronecker product with explicit entry cap; dims concatenate.
    pub fn tensor_capped(&self, rhs: &Operator, cap: usize) -> Result<Operator> {
        let rows = self.rows() * rhs.rows();
        let cols = self.cols() * rhs.cols();
        if rows.saturating_mul(cols) > cap {
            return Err(Error::SizeLimit { rows, cols, cap });
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&rhs.dims);
        Ok(Operator {
            mat: self.mat.kronecker(&rhs.mat),
            dims,
        })
    }

    fn check_factor(&self, factor: usize) -> Result<()> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(
                "partial operations need a square operator".into(),
            ));
        }
        if factor >= self.dims.len() {
            return Err(Error::InvalidArgument(format!(
                "factor {} out of range for dims {:?}",
                factor, self.dims
            )));
        }
        if self.dims.len() < 2 {
            return Err(Error::InvalidArgument(
                "partial operations need at least two tensor factors".into(),
            ));
        }
        Ok(())
    }

    /// Traces out the tensor factor at `factor`, keeping the others in order.
    pub fn partial_trace(&self, factor: usize) -> Result<Operator> {
        self.check_factor(factor)?;
        let dt = self.dims[factor];
        let (left, right) = strides_around(&self.dims, factor);
        let kept: Vec<usize> = self
            .dims
            .iter()
            .enumerate()
            .filter(|(a, _)| *a != factor)
            .map(|(_, d)| *d)
            .collect();
        let n_out: usize = kept.iter().product();
        let mut out = DMatrix::<C64>::zeros(n_out, n_out);
        for i_out in 0..n_out {
            let (il, ir) = (i_out / right, i_out % right);
            for j_out in 0..n_out {
                let (jl, jr) = (j_out / right, j_out % right);
                let mut acc = ZERO;
                for s in 0..dt {
                    let row = (il * dt + s) * right + ir;
                    let col = (jl * dt + s) * right + jr;
                    acc += self.mat[(row, col)];
                }
                out[(i_out, j_out)] = acc;
            }
        }
        let _ = left;
        Operator::from_matrix_with_dims(out, kept)
    }

    /// Transposes the tensor factor at `factor` in place of the others.
    pub fn partial_transpose(&self, factor: usize) -> Result<Operator> {
        self.check_factor(factor)?;
        let dt = self.dims[factor];
        let (_, right) = strides_around(&self.dims, factor);
        let n = self.rows();
        let mut out = DMatrix::<C64>::zeros(n, n);
        for row in 0..n {
            let (rl, rest) = (row / (dt * right), row % (dt * right));
            let (rt, rr) = (rest / right, rest % right);
            for col in 0..n {
                let (cl, rest) = (col / (dt * right), col % (dt * right));
                let (ct, cr) = (rest / right, rest % right);
                let src_row = (rl * dt + ct) * right + rr;
                let src_col = (cl * dt + rt) * right + cr;
                out[(row, col)] = self.mat[(src_row, src_col)];
            }
        }
        Operator::from_matrix_with_dims(out, self.dims.clone())
    }

    /// Hermitian eigendecomposition, eigenvalues ascending.
    pub fn herm_eigen(&self) -> Result<(Vec<f64>, DMatrix<C64>)> {
        let dev = self.hermitian_deviation();
        if dev > TOL_SPECTRAL * (1.0 + self.norm_max()) {
            return Err(Error::NotHermitian(dev));
        }
        let sym = (&self.mat + self.mat.adjoint()).scale(0.5);
        let eig = nalgebra::SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vecs = DMatrix::from_fn(self.rows(), self.rows(), |i, j| {
            eig.eigenvectors[(i, order[j])]
        });
        Ok((vals, vecs))
    }

    /// Eigendecomposition of a normal operator via simultaneous
    /// diagonalization of the hermitian parts H = (X+X†)/2, K = (X−X†)/2i.
    /// Sorted ascending by (re, im). Errors on non-normal input.
    pub fn normal_eigen(&self) -> Result<Spectrum> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(
                "eigendecomposition needs a square operator".into(),
            ));
        }
        let scale = 1.0 + self.norm_max();
        let dev = self.normality_deviation();
        if dev > TOL_SPECTRAL * scale * scale {
            return Err(Error::NotNormal(dev));
        }
        let n = self.rows();
        let h = Operator::from_matrix((&self.mat + self.mat.adjoint()).scale(0.5));
        let k = Operator::from_matrix((&self.mat - self.mat.adjoint()).map(|z| {
            // (X − X†)/(2i)
            Complex::new(z.im * 0.5, -z.re * 0.5)
        }));
        let (hvals, hvecs) = h.herm_eigen()?;
        let mut basis = hvecs;
        // Rotate within near-degenerate H clusters so K is diagonal there too.
        let cluster_tol = 1e-8 * (1.0 + hvals.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && (hvals[end] - hvals[end - 1]).abs() <= cluster_tol {
                end += 1;
            }
            if end - start > 1 {
                let block = basis.columns(start, end - start).into_owned();
                let k_small = Operator::from_matrix(block.adjoint() * k.matrix() * &block);
                let (_, w) = k_small.herm_eigen()?;
                let rotated = block * w;
                basis.columns_mut(start, end - start).copy_from(&rotated);
            }
            start = end;
        }
        // Rayleigh quotients give the eigenvalues in the common basis.
        let mut pairs: Vec<(C64, DVector<C64>)> = (0..n)
            .map(|j| {
                let v = basis.column(j).into_owned();
                let lam = (v.adjoint() * &self.mat * &v)[(0, 0)];
                (lam, v)
            })
            .collect();
        pairs.sort_by(|a, b| {
            a.0.re
                .total_cmp(&b.0.re)
                .then_with(|| a.0.im.total_cmp(&b.0.im))
        });
        let values: Vec<C64> = pairs.iter().map(|(l, _)| *l).collect();
        let vectors = DMatrix::from_fn(n, n, |i, j| pairs[j].1[i]);
        Ok(Spectrum { values, vectors })
    }

    /// Applies `f` to the spectrum of a normal operator: `V f(Λ) V†`.
    pub fn spectral_fn(&self, f: impl Fn(C64) -> C64) -> Result<Operator> {
        let spec = self.normal_eigen()?;
        let n = self.rows();
        let mut out = DMatrix::<C64>::zeros(n, n);
        for (j, lam) in spec.values.iter().enumerate() {
            let col = spec.vectors.column(j);
            let flam = f(*lam);
            // out += f(λ_j) |v_j⟩⟨v_j|
            for r in 0..n {
                let vr = col[r] * flam;
                for c in 0..n {
                    out[(r, c)] += vr * col[c].conj();
                }
            }
        }
        Operator::from_matrix_with_dims(out, self.dims.clone())
    }

    /// Functional calculus on a Hermitian operator's real spectrum.
    pub fn herm_fn(&self, f: impl Fn(f64) -> C64) -> Result<Operator> {
        let (vals, vecs) = self.herm_eigen()?;
        let n = self.rows();
        let mut out = DMatrix::<C64>::zeros(n, n);
        for (j, lam) in vals.iter().enumerate() {
            let col = vecs.column(j);
            let flam = f(*lam);
            for r in 0..n {
                let vr = col[r] * flam;
                for c in 0..n {
                    out[(r, c)] += vr * col[c].conj();
                }
            }
        }
        Operator::from_matrix_with_dims(out, self.dims.clone())
    }

    pub fn matmul(&self, rhs: &Operator) -> Result<Operator> {
        if self.cols() != rhs.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        Ok(Operator {
            mat: &self.mat * &rhs.mat,
            dims: self.dims.clone(),
        })
    }

    pub fn add(&self, rhs: &Operator) -> Result<Operator> {
        if self.rows() != rhs.rows() || self.cols() != rhs.cols() {
            return Err(Error::DimensionMismatch("operator sum".into()));
        }
        Ok(Operator {
            mat: &self.mat + &rhs.mat,
            dims: self.dims.clone(),
        })
    }

    pub fn sub(&self, rhs: &Operator) -> Result<Operator> {
        if self.rows() != rhs.rows() || self.cols() != rhs.cols() {
            return Err(Error::DimensionMismatch("operator difference".into()));
        }
        Ok(Operator {
            mat: &self.mat - &rhs.mat,
            dims: self.dims.clone(),
        })
    }

    pub fn apply(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        if v.len() != self.cols() {
            return Err(Error::DimensionMismatch(format!(
                "apply {}x{} to vector of length {}",
                self.rows(),
                self.cols(),
                v.len()
            )));
        }
        Ok(&self.mat * v)
    }

    /// ⟨v| A |v⟩ without normalizing `v`.
    pub fn expectation(&self, v: &DVector<C64>) -> Result<C64> {
        let av = self.apply(v)?;
        Ok(v.dotc(&av))
    }

    /// tr(ρ A) for a density `rho` of matching shape.
    pub fn expectation_in(&self, rho: &Operator) -> Result<C64> {
        if self.rows() != rho.rows() || self.cols() != rho.cols() {
            return Err(Error::DimensionMismatch("expectation_in".into()));
        }
        let mut acc = ZERO;
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                acc += rho.mat[(i, j)] * self.mat[(j, i)];
            }
        }
        Ok(acc)
    }
}

/// (product of dims left of `factor`, product of dims right of it).
fn strides_around(dims: &[usize], factor: usize) -> (usize, usize) {
    let left: usize = dims[..factor].iter().product();
    let right: usize = dims[factor + 1..].iter().product();
    (left, right)
}

pub fn sigma_x() -> Operator {
    Operator::from_matrix(DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]))
}

pub fn sigma_y() -> Operator {
    Operator::from_matrix(DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]))
}

pub fn sigma_z() -> Operator {
    Operator::from_matrix(DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]))
}

/// Flip (swap) operator F|i,j⟩ = |j,i⟩ on C^d ⊗ C^d.
pub fn flip(d: usize) -> Operator {
    Operator::from_fn(&[d, d], |row, col| {
        let (ri, rj) = (row / d, row % d);
        let (ci, cj) = (col / d, col % d);
        if ri == cj && rj == ci {
            ONE
        } else {
            ZERO
        }
    })
}

/// Principal argument in (−π, π], with the tie at the negative real axis
/// pinned to +π (so the d-th root branch cut sits just below the axis).
pub fn principal_arg(z: C64) -> f64 {
    // atan2(−0.0, −x) would give −π; normalize the zero sign first.
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    im.atan2(z.re)
}

/// Branch-cut d-th root r_d(z) = |z|^{1/d} e^{i arg(z)/d}, arg ∈ (−π, π].
pub fn principal_root(z: C64, d: u32) -> C64 {
    let r = z.norm().powf(1.0 / d as f64);
    let theta = principal_arg(z) / d as f64;
    Complex::from_polar(r, theta)
}

/// Computational basis vector `index` in a space of size `n`.
pub fn basis_vector(n: usize, index: usize) -> DVector<C64> {
    let mut v = DVector::zeros(n);
    v[index] = ONE;
    v
}
