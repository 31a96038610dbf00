//! Position-space grids realizing L²(ℝ)⊗L²(ℝ) at finite resolution: the
//! continuum Weyl pair Ũ = e^{iQ}, Ṽ = e^{iξP} on each mode, their branch-cut
//! d-th roots Û = r_d(Ũ^d), V̂ = r_d(Ṽ^d), and the exactly-periodic quotients
//! U = Û^{−1}Ũ, V = V̂^{−1}Ṽ feeding the Weyl-sum fidelity on the two-mode
//! squeezed state.
//!
//! The quotient operators are stored as integer root exponents mod d, so
//! their d-th powers are the identity *bit-exactly*: raising combines
//! exponents in integer arithmetic and an all-zero exponent table short
//! circuits to a no-op. Everything else (phases, shifts, FFTs) is ordinary
//! floating point and is accounted for by the reported commutation residual.
//!
//! Grid layout: row-major two-mode field ψ[i·L + j] with i indexing x₁
//! (axis 0) and j indexing x₂ (axis 1); positions x = −X + k·dx, dx = 2X/L;
//! momentum grid in wavenumber order (0..L/2−1, −L/2..−1) with dp = π/X.

use std::f64::consts::{PI, TAU};
use std::io::{Read, Write};

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::nopa::FockVector;
use crate::op::C64;
use crate::par;
use crate::weyl::WordEvaluator;

/// Band below which the outer 5% of the grid is considered unoccupied.
pub const DEFAULT_BOUNDARY_THRESHOLD: f64 = 1e-8;

/// Angles this close to the branch cut (arg = π) resolve to the +π side, so
/// grid construction is reproducible at the measure-zero tie.
const RIM_TIE: f64 = 1e-9;

/// Splits d·y = 2πk + arg with arg ∈ (−π, π], returning (k, arg).
fn principal_branch(y: f64, d: usize) -> (i64, f64) {
    let full = d as f64 * y;
    let ang = full.rem_euclid(TAU);
    let arg = if ang <= PI + RIM_TIE { ang } else { ang - TAU };
    let k = ((full - arg) / TAU).round() as i64;
    (k, arg)
}

fn root_table(d: usize) -> Vec<C64> {
    (0..d)
        .map(|j| Complex::from_polar(1.0, TAU * j as f64 / d as f64))
        .collect()
}

/// Uniform position grid: L points (power of two) covering [−X, X).
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    l: usize,
    x: f64,
}

/// How the requested extent was moved to make ξ = 2π/d an exact multiple of
/// the grid spacing.
#[derive(Debug, Clone, Copy)]
pub struct SpecAdjustment {
    pub requested_extent: f64,
    pub granted_extent: f64,
    /// Grid steps per translation ξ.
    pub xi_steps: usize,
}

impl GridSpec {
    pub fn new(l: usize, x: f64) -> Result<Self> {
        if !l.is_power_of_two() || l < 8 {
            return Err(Error::InvalidArgument(format!(
                "grid size must be a power of two >= 8, got {l}"
            )));
        }
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "grid extent must be positive, got {x}"
            )));
        }
        Ok(Self { l, x })
    }

    /// The closest extent to `x` at which ξ = 2π/d lands on the grid:
    /// X' = πL/(dM) with M = round(πL/(dX)) translation steps.
    pub fn adjusted_for(l: usize, x: f64, d: usize) -> Result<(Self, SpecAdjustment)> {
        let raw = Self::new(l, x)?;
        if d < 2 {
            return Err(Error::InvalidArgument("weyl pair needs d >= 2".into()));
        }
        let steps = ((PI * l as f64) / (d as f64 * x)).round().max(1.0) as usize;
        let granted = PI * l as f64 / (d as f64 * steps as f64);
        let spec = Self::new(l, granted)?;
        Ok((
            spec,
            SpecAdjustment {
                requested_extent: raw.x,
                granted_extent: granted,
                xi_steps: steps,
            },
        ))
    }

    /// The closest extent at which the rooted pair closes seamlessly around
    /// the circle: d·M must divide L (equivalently, the d eigenvalue sectors
    /// of U get equal multiplicity), which pins the commutation residual at
    /// float precision instead of the O(1/√X) periodization floor. Errors
    /// when d has a prime factor outside L (for power-of-two L this means
    /// odd d admits no seamless grid at all).
    pub fn exact_for(l: usize, x: f64, d: usize) -> Result<(Self, SpecAdjustment)> {
        let raw = Self::new(l, x)?;
        if d < 2 {
            return Err(Error::InvalidArgument("weyl pair needs d >= 2".into()));
        }
        // Candidate step counts: M with d·M | L.
        let mut best: Option<(usize, f64)> = None;
        for m in 1..=l / d {
            if l % (d * m) != 0 {
                continue;
            }
            let granted = PI * l as f64 / (d as f64 * m as f64);
            let dist = (granted - x).abs();
            // Ties resolve to the larger extent (smaller M).
            let better = match best {
                None => true,
                Some((bm, bd)) => dist < bd - 1e-12 || (dist <= bd + 1e-12 && m < bm),
            };
            if better {
                best = Some((m, dist));
            }
        }
        let Some((steps, _)) = best else {
            return Err(Error::InvalidArgument(format!(
                "no seamless grid: {d} does not divide L = {l}"
            )));
        };
        let granted = PI * l as f64 / (d as f64 * steps as f64);
        Ok((
            Self::new(l, granted)?,
            SpecAdjustment {
                requested_extent: raw.x,
                granted_extent: granted,
                xi_steps: steps,
            },
        ))
    }

    pub fn points(&self) -> usize {
        self.l
    }

    pub fn extent(&self) -> f64 {
        self.x
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.x / self.l as f64
    }

    pub fn dp(&self) -> f64 {
        PI / self.x
    }

    pub fn position(&self, idx: usize) -> f64 {
        -self.x + idx as f64 * self.dx()
    }

    /// Signed wavenumber of FFT bin m: 0..L/2−1, then −L/2..−1.
    pub fn wavenumber(&self, m: usize) -> i64 {
        if m < self.l / 2 {
            m as i64
        } else {
            m as i64 - self.l as i64
        }
    }

    pub fn momentum(&self, m: usize) -> f64 {
        self.dp() * self.wavenumber(m) as f64
    }

    /// Validates that ξ = 2π/d is an integer number of grid steps and
    /// returns that count.
    pub fn xi_steps(&self, d: usize) -> Result<usize> {
        let exact = PI * self.l as f64 / (d as f64 * self.x);
        let steps = exact.round();
        if steps < 1.0 || (exact - steps).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "xi = 2pi/{d} is {exact} grid steps; build the grid with adjusted_for"
            )));
        }
        Ok(steps as usize)
    }
}

/// A structured grid operator. All variants are unitary; the `*Root`
/// variants hold integer exponents of ζ_d so formal powers stay exact.
#[derive(Debug, Clone)]
pub enum GridOp {
    /// Multiplication by e^{iθ(x)} over the `axis` coordinate.
    PosPhase { axis: usize, angles: Vec<f64> },
    /// Multiplication by ζ_d^{e(x)} over the `axis` coordinate.
    PosRoot { axis: usize, d: usize, exps: Vec<u32> },
    /// e^{iθ(p)} on the momentum grid of `axis` (applied through the FFT).
    MomPhase { axis: usize, angles: Vec<f64> },
    /// ζ_d^{e(p)} on the momentum grid of `axis`.
    MomRoot { axis: usize, d: usize, exps: Vec<u32> },
    /// Translation by `steps` grid points along `axis` (periodic roll).
    Shift { axis: usize, steps: i64 },
}

fn scale_mod(exps: &[u32], d: usize, p: i64) -> Vec<u32> {
    exps.iter()
        .map(|&e| ((e as i64 * p).rem_euclid(d as i64)) as u32)
        .collect()
}

impl GridOp {
    /// The formal p-th power (p may be negative: these are unitaries).
    pub fn pow(&self, p: i64) -> GridOp {
        match self {
            GridOp::PosPhase { axis, angles } => GridOp::PosPhase {
                axis: *axis,
                angles: angles.iter().map(|a| a * p as f64).collect(),
            },
            GridOp::MomPhase { axis, angles } => GridOp::MomPhase {
                axis: *axis,
                angles: angles.iter().map(|a| a * p as f64).collect(),
            },
            GridOp::PosRoot { axis, d, exps } => GridOp::PosRoot {
                axis: *axis,
                d: *d,
                exps: scale_mod(exps, *d, p),
            },
            GridOp::MomRoot { axis, d, exps } => GridOp::MomRoot {
                axis: *axis,
                d: *d,
                exps: scale_mod(exps, *d, p),
            },
            GridOp::Shift { axis, steps } => GridOp::Shift {
                axis: *axis,
                steps: steps * p,
            },
        }
    }

    /// Structurally the identity: root exponents all zero or a zero shift.
    pub fn is_identity(&self) -> bool {
        match self {
            GridOp::PosRoot { exps, .. } | GridOp::MomRoot { exps, .. } => {
                exps.iter().all(|&e| e == 0)
            }
            GridOp::Shift { steps, .. } => *steps == 0,
            _ => false,
        }
    }

    /// Applies the operator in place to a row-major L×L field.
    pub fn apply(&self, data: &mut [C64], l: usize) -> Result<()> {
        if data.len() != l * l {
            return Err(Error::DimensionMismatch(format!(
                "field holds {} values, grid wants {}x{}",
                data.len(),
                l,
                l
            )));
        }
        let table_len = match self {
            GridOp::PosPhase { angles, .. } | GridOp::MomPhase { angles, .. } => angles.len(),
            GridOp::PosRoot { exps, .. } | GridOp::MomRoot { exps, .. } => exps.len(),
            GridOp::Shift { .. } => l,
        };
        if table_len != l {
            return Err(Error::DimensionMismatch(format!(
                "operator table holds {table_len} entries on an L = {l} grid"
            )));
        }
        match self {
            GridOp::PosPhase { axis, angles } => {
                let factors: Vec<C64> =
                    angles.iter().map(|&a| Complex::from_polar(1.0, a)).collect();
                multiply_axis(data, l, *axis, &factors);
            }
            GridOp::PosRoot { axis, d, exps } => {
                if self.is_identity() {
                    return Ok(());
                }
                let table = root_table(*d);
                let factors: Vec<C64> = exps.iter().map(|&e| table[e as usize]).collect();
                multiply_axis(data, l, *axis, &factors);
            }
            GridOp::MomPhase { axis, angles } => {
                let factors: Vec<C64> =
                    angles.iter().map(|&a| Complex::from_polar(1.0, a)).collect();
                momentum_multiply(data, l, *axis, &factors);
            }
            GridOp::MomRoot { axis, d, exps } => {
                if self.is_identity() {
                    return Ok(());
                }
                let table = root_table(*d);
                let factors: Vec<C64> = exps.iter().map(|&e| table[e as usize]).collect();
                momentum_multiply(data, l, *axis, &factors);
            }
            GridOp::Shift { axis, steps } => {
                let s = steps.rem_euclid(l as i64) as usize;
                if s == 0 {
                    return Ok(());
                }
                match axis {
                    0 => data.rotate_left(s * l),
                    _ => {
                        for row in data.chunks_exact_mut(l) {
                            row.rotate_left(s);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Pointwise multiplication by a per-coordinate factor along one axis.
fn multiply_axis(data: &mut [C64], l: usize, axis: usize, factors: &[C64]) {
    match axis {
        0 => {
            par::for_each_chunk(data, l, |i, row| {
                let f = factors[i];
                for v in row.iter_mut() {
                    *v *= f;
                }
            });
        }
        _ => {
            par::for_each_chunk(data, l, |_, row| {
                for (v, f) in row.iter_mut().zip(factors) {
                    *v *= f;
                }
            });
        }
    }
}

fn transpose_square(data: &mut [C64], l: usize) {
    for i in 0..l {
        for j in (i + 1)..l {
            data.swap(i * l + j, j * l + i);
        }
    }
}

/// Forward FFT along `axis`, multiply by `factors` on that axis, inverse
/// FFT, exact 1/L rescale (L is a power of two).
fn momentum_multiply(data: &mut [C64], l: usize, axis: usize, factors: &[C64]) {
    if axis == 0 {
        transpose_square(data, l);
    }
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(l);
    let inverse = planner.plan_fft_inverse(l);
    let scale = 1.0 / l as f64;
    par::for_each_chunk(data, l, |_, row| {
        forward.process(row);
        for (v, f) in row.iter_mut().zip(factors) {
            *v *= f;
        }
        inverse.process(row);
        for v in row.iter_mut() {
            *v *= scale;
        }
    });
    if axis == 0 {
        transpose_square(data, l);
    }
}

/// A normalized two-mode wavefunction on the L×L grid (measure dx²).
#[derive(Debug, Clone)]
pub struct GridState {
    l: usize,
    x: f64,
    data: Vec<C64>,
    boundary_mass: f64,
    boundary_threshold: f64,
}

fn boundary_mass_of(data: &[C64], l: usize, dx: f64) -> f64 {
    let band = (l as f64 * 0.05).ceil() as usize;
    let outer = |k: usize| k < band || k >= l - band;
    let mut mass = 0.0;
    for i in 0..l {
        for j in 0..l {
            if outer(i) || outer(j) {
                mass += data[i * l + j].norm_sqr();
            }
        }
    }
    mass * dx * dx
}

impl GridState {
    /// Wraps raw data; requires unit norm within 1e−8 under the dx² measure.
    pub fn new(spec: &GridSpec, data: Vec<C64>) -> Result<Self> {
        if data.len() != spec.l * spec.l {
            return Err(Error::DimensionMismatch(format!(
                "field holds {} values, grid wants {}",
                data.len(),
                spec.l * spec.l
            )));
        }
        let norm = (data.iter().map(|z| z.norm_sqr()).sum::<f64>() * spec.dx() * spec.dx()).sqrt();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized(norm));
        }
        let boundary_mass = boundary_mass_of(&data, spec.l, spec.dx());
        Ok(Self {
            l: spec.l,
            x: spec.x,
            data,
            boundary_mass,
            boundary_threshold: DEFAULT_BOUNDARY_THRESHOLD,
        })
    }

    fn normalized(spec: &GridSpec, mut data: Vec<C64>) -> Result<Self> {
        let norm = (data.iter().map(|z| z.norm_sqr()).sum::<f64>() * spec.dx() * spec.dx()).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotNormalized(norm));
        }
        let inv = Complex::new(1.0 / norm, 0.0);
        for v in data.iter_mut() {
            *v *= inv;
        }
        Self::new(spec, data)
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec { l: self.l, x: self.x }
    }

    pub fn points(&self) -> usize {
        self.l
    }

    pub fn extent(&self) -> f64 {
        self.x
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    /// Probability mass in the outer 5% band of either axis.
    pub fn boundary_mass(&self) -> f64 {
        self.boundary_mass
    }

    /// True when the boundary band holds more mass than the threshold; the
    /// state stays usable, but grid-truncation artifacts are expected.
    pub fn boundary_flagged(&self) -> bool {
        self.boundary_mass > self.boundary_threshold
    }

    pub fn with_boundary_threshold(mut self, threshold: f64) -> Self {
        self.boundary_threshold = threshold;
        self
    }

    pub fn inner(&self, other: &GridState) -> Result<C64> {
        if self.l != other.l {
            return Err(Error::DimensionMismatch("grids of different size".into()));
        }
        Ok(self.inner_raw(&other.data))
    }

    fn inner_raw(&self, other: &[C64]) -> C64 {
        let dx = self.spec().dx();
        let mut acc = Complex::new(0.0, 0.0);
        for (a, b) in self.data.iter().zip(other) {
            acc += a.conj() * b;
        }
        acc * Complex::new(dx * dx, 0.0)
    }

    /// In-place application of a grid operator.
    pub fn apply_op(&mut self, op: &GridOp) -> Result<()> {
        op.apply(&mut self.data, self.l)
    }

    /// Binary export: magic "EPRG", version, L (u32 LE), X (f64 LE), then
    /// row-major complex64 (re, im) little-endian.
    pub fn export(&self, mut w: impl Write) -> Result<()> {
        w.write_all(b"EPRG")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.l as u32).to_le_bytes())?;
        w.write_all(&self.x.to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn import(mut r: impl Read) -> Result<GridState> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"EPRG" {
            return Err(Error::Malformed("bad magic, expected EPRG".into()));
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let version = u32::from_le_bytes(word);
        if version != 1 {
            return Err(Error::Malformed(format!("unsupported version {version}")));
        }
        r.read_exact(&mut word)?;
        let l = u32::from_le_bytes(word) as usize;
        let mut dword = [0u8; 8];
        r.read_exact(&mut dword)?;
        let x = f64::from_le_bytes(dword);
        let spec = GridSpec::new(l, x)?;
        let mut data = Vec::with_capacity(l * l);
        for _ in 0..l * l {
            r.read_exact(&mut dword)?;
            let re = f64::from_le_bytes(dword);
            r.read_exact(&mut dword)?;
            let im = f64::from_le_bytes(dword);
            data.push(Complex::new(re, im));
        }
        GridState::new(&spec, data)
    }
}

/// The six operators of one mode: the continuum pair, the branch-cut roots,
/// and the exactly periodic quotients.
#[derive(Debug, Clone)]
pub struct ModeOps {
    pub u_tilde: GridOp,
    pub v_tilde: GridOp,
    pub u_hat: GridOp,
    pub v_hat: GridOp,
    pub u: GridOp,
    pub v: GridOp,
}

#[derive(Debug, Clone)]
pub struct GridOps {
    pub first: ModeOps,
    pub second: ModeOps,
    pub d: usize,
    pub xi_steps: usize,
}

fn mode_ops(spec: &GridSpec, d: usize, axis: usize, offset: f64, steps: usize) -> ModeOps {
    let l = spec.points();
    // Position side: Ũ = e^{i(Q−offset)}, Û = e^{i·arg_d(Q−offset)/d},
    // U = Û^{−1}Ũ with exact root exponents (d·y − arg)/2π mod d.
    let mut u_angles = Vec::with_capacity(l);
    let mut u_hat_angles = Vec::with_capacity(l);
    let mut u_exps = Vec::with_capacity(l);
    for idx in 0..l {
        let y = spec.position(idx) - offset;
        let (k, arg) = principal_branch(y, d);
        u_angles.push(y);
        u_hat_angles.push(arg / d as f64);
        u_exps.push(k.rem_euclid(d as i64) as u32);
    }
    // Momentum side: Ṽ = e^{iξP} is the exact roll by `steps`; the root
    // exponents of V come out in integer arithmetic: with t = d·M·m̃ mod L
    // folded to t' ∈ (−L/2, L/2], the exponent is (d·M·m̃ − t')/L.
    let mut v_hat_angles = Vec::with_capacity(l);
    let mut v_exps = Vec::with_capacity(l);
    for m in 0..l {
        let wav = spec.wavenumber(m);
        let full = d as i64 * steps as i64 * wav;
        let t = full.rem_euclid(l as i64);
        let folded = if 2 * t <= l as i64 { t } else { t - l as i64 };
        v_hat_angles.push(TAU * folded as f64 / (l as f64 * d as f64));
        let k = (full - folded) / l as i64;
        v_exps.push(k.rem_euclid(d as i64) as u32);
    }
    ModeOps {
        u_tilde: GridOp::PosPhase {
            axis,
            angles: u_angles,
        },
        v_tilde: GridOp::Shift {
            axis,
            steps: steps as i64,
        },
        u_hat: GridOp::PosPhase {
            axis,
            angles: u_hat_angles,
        },
        v_hat: GridOp::MomPhase {
            axis,
            angles: v_hat_angles,
        },
        u: GridOp::PosRoot {
            axis,
            d,
            exps: u_exps,
        },
        v: GridOp::MomRoot {
            axis,
            d,
            exps: v_exps,
        },
    }
}

/// Builds the full operator set for the pair (ξ = 2π/d on both modes; the
/// displacement `a` offsets mode 2's position reference).
pub fn build_ops(spec: &GridSpec, d: usize, a: f64) -> Result<GridOps> {
    if d < 2 {
        return Err(Error::InvalidArgument("weyl pair needs d >= 2".into()));
    }
    let steps = spec.xi_steps(d)?;
    Ok(GridOps {
        first: mode_ops(spec, d, 0, 0.0, steps),
        second: mode_ops(spec, d, 1, a, steps),
        d,
        xi_steps: steps,
    })
}

/// ‖VUψ − ζUVψ‖ for one mode's rooted pair on a test state.
pub fn commutation_residual(state: &GridState, mode: &ModeOps, d: usize) -> Result<f64> {
    let zeta = Complex::from_polar(1.0, TAU / d as f64);
    let mut vu = state.data().to_vec();
    mode.u.apply(&mut vu, state.points())?;
    mode.v.apply(&mut vu, state.points())?;
    let mut uv = state.data().to_vec();
    mode.v.apply(&mut uv, state.points())?;
    mode.u.apply(&mut uv, state.points())?;
    let dx = state.spec().dx();
    let mut acc = 0.0;
    for (a, b) in vu.iter().zip(&uv) {
        acc += (a - zeta * b).norm_sqr();
    }
    Ok((acc * dx * dx).sqrt())
}

/// The doubles shadow: ‖(Û₁−Û₂)ψ‖² and ‖(V̂₁−V̂₂†)ψ‖². On states squeezed
/// toward the EPR correlations (x₁ ≈ x₂, p₁ ≈ −p₂) both shrink with r.
pub fn hat_double_defects(state: &GridState, ops: &GridOps) -> Result<(f64, f64)> {
    let l = state.points();
    let dx = state.spec().dx();
    let defect = |a: &GridOp, b: &GridOp| -> Result<f64> {
        let mut va = state.data().to_vec();
        a.apply(&mut va, l)?;
        let mut vb = state.data().to_vec();
        b.apply(&mut vb, l)?;
        let mut acc = 0.0;
        for (p, q) in va.iter().zip(&vb) {
            acc += (p - q).norm_sqr();
        }
        Ok(acc * dx * dx)
    };
    let u_defect = defect(&ops.first.u_hat, &ops.second.u_hat)?;
    let v_defect = defect(&ops.first.v_hat, &ops.second.v_hat.pow(-1))?;
    Ok((u_defect, v_defect))
}

/// The two-mode squeezed Gaussian on the grid,
/// ψ(x₁,x₂) ∝ exp(−(1+λ)(x₁−x₂)²/(4(1−λ)) − (1−λ)(x₁+x₂)²/(4(1+λ))):
/// positions positively correlated, Var(Q₁−Q₂) = (1−λ)/(1+λ).
pub fn grid_nopa(spec: &GridSpec, lambda: f64) -> Result<GridState> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!(
            "lambda must lie in [0, 1), got {lambda}"
        )));
    }
    let r = lambda.atanh();
    let sigma = ((2.0 * r).cosh() / 2.0).sqrt();
    let required = 3.0 * sigma;
    if spec.extent() < required {
        return Err(Error::ExtentTooSmall {
            got: spec.extent(),
            required,
        });
    }
    let l = spec.points();
    let minus = (1.0 + lambda) / (4.0 * (1.0 - lambda));
    let plus = (1.0 - lambda) / (4.0 * (1.0 + lambda));
    let xs: Vec<f64> = (0..l).map(|i| spec.position(i)).collect();
    let mut data = vec![Complex::new(0.0, 0.0); l * l];
    par::for_each_chunk(&mut data, l, |i, row| {
        for (j, v) in row.iter_mut().enumerate() {
            let diff = xs[i] - xs[j];
            let sum = xs[i] + xs[j];
            *v = Complex::new((-minus * diff * diff - plus * sum * sum).exp(), 0.0);
        }
    });
    GridState::normalized(spec, data)
}

/// Position moments of the grid probability density |ψ|² dx².
#[derive(Debug, Clone, Copy)]
pub struct PositionMoments {
    pub mean1: f64,
    pub mean2: f64,
    pub var1: f64,
    pub var2: f64,
    pub var_diff: f64,
    pub var_sum: f64,
}

pub fn position_moments(state: &GridState) -> PositionMoments {
    let spec = state.spec();
    let l = spec.points();
    let w = spec.dx() * spec.dx();
    let (mut m1, mut m2) = (0.0, 0.0);
    let (mut q11, mut q22, mut q12) = (0.0, 0.0, 0.0);
    for i in 0..l {
        let x1 = spec.position(i);
        for j in 0..l {
            let x2 = spec.position(j);
            let p = state.data()[i * l + j].norm_sqr() * w;
            m1 += p * x1;
            m2 += p * x2;
            q11 += p * x1 * x1;
            q22 += p * x2 * x2;
            q12 += p * x1 * x2;
        }
    }
    let var1 = q11 - m1 * m1;
    let var2 = q22 - m2 * m2;
    let cov = q12 - m1 * m2;
    PositionMoments {
        mean1: m1,
        mean2: m2,
        var1,
        var2,
        var_diff: var1 + var2 - 2.0 * cov,
        var_sum: var1 + var2 + 2.0 * cov,
    }
}

/// Maps a diagonal Fock vector onto the grid through harmonic-oscillator
/// eigenfunctions: ψ(x₁,x₂) = Σ c_n φ_n(x₁) φ_n(x₂).
pub fn fock_to_grid(spec: &GridSpec, fock: &FockVector) -> Result<GridState> {
    let l = spec.points();
    let n = fock.len();
    // φ_0 = π^{−1/4} e^{−x²/2}; φ_{n+1} = x√(2/(n+1)) φ_n − √(n/(n+1)) φ_{n−1}.
    let mut table = vec![vec![0.0f64; l]; n];
    for idx in 0..l {
        let x = spec.position(idx);
        let phi0 = (-x * x / 2.0).exp() / PI.powf(0.25);
        table[0][idx] = phi0;
        if n > 1 {
            table[1][idx] = std::f64::consts::SQRT_2 * x * phi0;
        }
        for k in 1..n.saturating_sub(1) {
            table[k + 1][idx] = x * (2.0 / (k as f64 + 1.0)).sqrt() * table[k][idx]
                - (k as f64 / (k as f64 + 1.0)).sqrt() * table[k - 1][idx];
        }
    }
    let mut data = vec![Complex::new(0.0, 0.0); l * l];
    par::for_each_chunk(&mut data, l, |i, row| {
        for (j, v) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, phi) in table.iter().enumerate() {
                acc += fock.coeffs()[k] * phi[i] * phi[j];
            }
            *v = Complex::new(acc, 0.0);
        }
    });
    GridState::normalized(spec, data)
}

/// Expectation functional ⟨ψ| · |ψ⟩ over grid operator words.
pub struct GridEvaluator<'a> {
    state: &'a GridState,
}

impl<'a> GridEvaluator<'a> {
    pub fn new(state: &'a GridState) -> Self {
        Self { state }
    }
}

impl WordEvaluator for GridEvaluator<'_> {
    type Op = GridOp;

    fn expect_word(&self, word: &[(&GridOp, i64)]) -> Result<C64> {
        let mut buf = self.state.data().to_vec();
        for (op, pow) in word.iter().rev() {
            op.pow(*pow).apply(&mut buf, self.state.points())?;
        }
        Ok(self.state.inner_raw(&buf))
    }
}

/// Outcome of the Weyl-sum fidelity on the grid, with the error indicators
/// that bound how literally the number can be read.
#[derive(Debug, Clone, Copy)]
pub struct GridFidelity {
    pub value: f64,
    /// Imaginary part of the sum; a sanity indicator, near zero when the
    /// grid resolves the state.
    pub imaginary: f64,
    pub commutation_residual: f64,
    pub boundary_mass: f64,
    pub xi_steps: usize,
}

fn fidelity_with<F>(spec: &GridSpec, lambda: f64, d: usize, a: f64, sum: F) -> Result<GridFidelity>
where
    F: FnOnce(&GridEvaluator, &GridOps) -> Result<C64>,
{
    let state = grid_nopa(spec, lambda)?;
    let ops = build_ops(spec, d, a)?;
    let evaluator = GridEvaluator::new(&state);
    let f = sum(&evaluator, &ops)?;
    Ok(GridFidelity {
        value: f.re,
        imaginary: f.im,
        commutation_residual: commutation_residual(&state, &ops.first, d)?,
        boundary_mass: state.boundary_mass(),
        xi_steps: ops.xi_steps,
    })
}

/// Weyl-sum fidelity (1/d²) Σ ⟨ψ|(U₁U₂^{−1})^n (V₁V₂)^m|ψ⟩ of the grid
/// squeezed state under the exactly periodic pair.
pub fn grid_extraction_fidelity(
    spec: &GridSpec,
    lambda: f64,
    d: usize,
    a: f64,
) -> Result<GridFidelity> {
    fidelity_with(spec, lambda, d, a, |ev, ops| {
        crate::weyl::weyl_fidelity(ev, d, &ops.first.u, &ops.first.v, &ops.second.u, &ops.second.v)
    })
}

/// Sequential twin of [`grid_extraction_fidelity`].
pub fn grid_extraction_fidelity_seq(
    spec: &GridSpec,
    lambda: f64,
    d: usize,
    a: f64,
) -> Result<GridFidelity> {
    fidelity_with(spec, lambda, d, a, |ev, ops| {
        crate::weyl::weyl_fidelity_seq(
            ev,
            d,
            &ops.first.u,
            &ops.first.v,
            &ops.second.u,
            &ops.second.v,
        )
    })
}
