//! One function per subcommand, each returning a [`Table`] ready to render.
//! Sweeps fan out over the worker pool with results collected in input
//! order, so output bytes do not depend on the thread count.

use std::f64::consts::PI;

use entanglab_core::{bell, bipartite, chain, grid, modular, nopa, sample, weyl};
use num_bigint::BigUint;
use entanglab_core::{Operator, C64};
use serde_json::Value;

use crate::output::{int, num, text, Table};
use crate::CliError;

/// Resolved global options every command sees.
pub struct RunCtx {
    pub seed: u64,
    pub threads: usize,
}

fn compute(e: entanglab_core::Error) -> CliError {
    use entanglab_core::Error;
    match e {
        Error::InvalidArgument(_)
        | Error::TruncationTooSmall { .. }
        | Error::ExtentTooSmall { .. }
        | Error::SizeLimit { .. } => CliError::Config(e.to_string()),
        Error::Io(_) => CliError::Io(e.to_string()),
        other => CliError::Compute(other.to_string()),
    }
}

#[cfg(feature = "parallel")]
fn fan_out<T: Send>(n: usize, f: impl Fn(usize) -> T + Send + Sync) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn fan_out<T: Send>(n: usize, f: impl Fn(usize) -> T + Send + Sync) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Enforces the "exactly one of λ/r" rule and derives the other parameter.
pub fn resolve_lambda_r(
    lambda: Option<Vec<f64>>,
    r: Option<Vec<f64>>,
) -> Result<Vec<(f64, f64)>, CliError> {
    let pairs = match (lambda, r) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "give exactly one of --lambda and --r (the other is derived)".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Config(
                "one of --lambda or --r is required".into(),
            ))
        }
        (Some(ls), None) => {
            if ls.is_empty() {
                return Err(CliError::Config("--lambda list is empty".into()));
            }
            ls.into_iter()
                .map(|l| {
                    if (0.0..1.0).contains(&l) {
                        Ok((l, l.atanh()))
                    } else {
                        Err(CliError::Config(format!(
                            "lambda must lie in [0, 1), got {l}"
                        )))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        (None, Some(rs)) => {
            if rs.is_empty() {
                return Err(CliError::Config("--r list is empty".into()));
            }
            rs.into_iter()
                .map(|r| {
                    if r.is_finite() && r >= 0.0 {
                        Ok((r.tanh(), r))
                    } else {
                        Err(CliError::Config(format!(
                            "squeezing must be finite and nonnegative, got {r}"
                        )))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    Ok(pairs)
}

fn echo_pairs(table: &mut Table, pairs: &[(f64, f64)]) {
    table.meta(
        "lambda",
        Value::Array(pairs.iter().map(|p| num(p.0)).collect()),
    );
    table.meta("r", Value::Array(pairs.iter().map(|p| num(p.1)).collect()));
}

// ---------------------------------------------------------------- schmidt

pub fn schmidt(
    ctx: &RunCtx,
    d: usize,
    state: &str,
    pairs: Option<Vec<(f64, f64)>>,
    trunc: usize,
) -> Result<Table, CliError> {
    let psi = match state {
        "omega" => bipartite::max_entangled(d).map_err(compute)?,
        "random" => {
            let mut rng = sample::rng(ctx.seed);
            let v = sample::state_vector(d * d, &mut rng);
            bipartite::PureState::from_vector(&v, d, d).map_err(compute)?
        }
        "nopa" => {
            let pairs = pairs.clone().ok_or_else(|| {
                CliError::Config("state nopa needs one of --lambda or --r".into())
            })?;
            if pairs.len() != 1 {
                return Err(CliError::Config(
                    "state nopa takes a single lambda or r".into(),
                ));
            }
            let params = nopa::NopaParams::from_lambda(pairs[0].0, trunc).map_err(compute)?;
            nopa::nopa_state(&params).to_pure_state()
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown state {other:?}: expected omega, random, or nopa"
            )))
        }
    };
    let data = bipartite::schmidt(&psi).map_err(compute)?;
    let mut table = Table::new(vec!["index", "coefficient", "weight"]);
    table.meta("command", text("schmidt"));
    table.meta("d", int(d));
    table.meta("state", text(state));
    table.meta("trunc", int(trunc));
    if let Some(pairs) = &pairs {
        echo_pairs(&mut table, pairs);
    }
    table.meta("entropy_bits", num(bipartite::entropy_bits(&data)));
    table.meta(
        "schmidt_rank",
        int(data.rank(entanglab_core::TOL_SPECTRAL)),
    );
    for (i, c) in data.coeffs().iter().enumerate() {
        table.row(vec![int(i), num(*c), num(c * c)]);
    }
    Ok(table)
}

// ---------------------------------------------------- entropy-divergence

pub fn entropy_divergence(_ctx: &RunCtx, ns: Vec<usize>) -> Result<Table, CliError> {
    if ns.is_empty() {
        return Err(CliError::Config("--n list is empty".into()));
    }
    let results = fan_out(ns.len(), |i| {
        bipartite::divergent_family(ns[i]).map(|data| bipartite::entropy_bits(&data))
    });
    let mut table = Table::new(vec!["n", "entropy_bits"]);
    table.meta("command", text("entropy-divergence"));
    table.meta("n", Value::Array(ns.iter().map(|n| int(*n)).collect()));
    for (n, result) in ns.iter().zip(results) {
        table.row(vec![int(*n), num(result.map_err(compute)?)]);
    }
    Ok(table)
}

// ------------------------------------------------------------ nogo-bound

pub fn nogo_bound(ctx: &RunCtx, ds: Vec<usize>, samples: usize) -> Result<Table, CliError> {
    if ds.is_empty() {
        return Err(CliError::Config("--d list is empty".into()));
    }
    let mut table = Table::new(vec![
        "d",
        "samples",
        "max_fidelity_random",
        "max_fidelity_aligned",
        "bound",
        "aligned_gap",
    ]);
    table.meta("command", text("nogo-bound"));
    table.meta("d", Value::Array(ds.iter().map(|d| int(*d)).collect()));
    table.meta("samples", int(samples));
    for d in ds {
        let sweep = bipartite::product_fidelity_sweep(d, samples, ctx.seed).map_err(compute)?;
        table.row(vec![
            int(d),
            int(samples),
            num(sweep.max_fidelity_random),
            num(sweep.max_fidelity_aligned),
            num(sweep.bound),
            num(sweep.bound - sweep.max_fidelity_aligned),
        ]);
    }
    Ok(table)
}

// ------------------------------------------------------------ bell-seesaw

pub fn bell_seesaw(
    ctx: &RunCtx,
    state: &str,
    restarts: usize,
    samples: usize,
    ks: Vec<String>,
    max_iters: usize,
) -> Result<Table, CliError> {
    let tol = entanglab_core::TOL_SEESAW;
    let mut table = Table::new(vec!["state", "k", "beta", "iterations"]);
    table.meta("command", text("bell-seesaw"));
    table.meta("state", text(state));
    table.meta("restarts", int(restarts));
    table.meta("max_iters", int(max_iters));
    match state {
        "singlet" => {
            let omega = chain::singlet_projector();
            let outcome = bell::beta_optimize_restarts(&omega, restarts, max_iters, tol, ctx.seed)
                .map_err(compute)?;
            table.row(vec![
                text("singlet"),
                text("-"),
                num(outcome.beta),
                int(outcome.iterations),
            ]);
        }
        "product" => {
            table.meta("samples", int(samples));
            let betas = fan_out(samples, |i| {
                let mut rng = sample::rng(ctx.seed);
                rng.set_stream(i as u64 + 1);
                let phi = sample::state_vector(2, &mut rng);
                let psi = sample::state_vector(2, &mut rng);
                let product = bipartite::PureState::product(&phi, &psi)?;
                let omega = product.projector()?;
                bell::beta_optimize_restarts(&omega, restarts, max_iters, tol, ctx.seed)
            });
            for (i, outcome) in betas.into_iter().enumerate() {
                let outcome = outcome.map_err(compute)?;
                table.row(vec![
                    text(format!("product-{i}")),
                    text("-"),
                    num(outcome.beta),
                    int(outcome.iterations),
                ]);
            }
        }
        "chain-pair" => {
            let chain_state = chain::ChainState::default_chain();
            for k in &ks {
                let pair: BigUint = k
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad pair index {k:?}")))?;
                let omega = chain_state.restrict(&pair);
                let outcome =
                    bell::beta_optimize_restarts(&omega, restarts, max_iters, tol, ctx.seed)
                        .map_err(compute)?;
                table.row(vec![
                    text("chain-pair"),
                    text(k.clone()),
                    num(outcome.beta),
                    int(outcome.iterations),
                ]);
            }
            table.meta(
                "k",
                Value::Array(ks.iter().map(|k| text(k.clone())).collect()),
            );
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown state {other:?}: expected singlet, product, or chain-pair"
            )))
        }
    }
    Ok(table)
}

// ------------------------------------------------------------ chain-expect

pub fn chain_expect(
    _ctx: &RunCtx,
    ks: Vec<String>,
    window: usize,
    obs_file: Option<&std::path::Path>,
    state_file: Option<&std::path::Path>,
) -> Result<Table, CliError> {
    let state = match state_file {
        Some(path) => {
            let body = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
            chain::ChainState::from_json(&body).map_err(compute)?
        }
        None => chain::ChainState::default_chain(),
    };
    let mut table = Table::new(vec!["k", "expectation_re", "expectation_im"]);
    table.meta("command", text("chain-expect"));
    table.meta("window", int(window));
    if let Some(path) = obs_file {
        let body = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        let obs = chain::ChainObservable::from_json(&body).map_err(compute)?;
        let value = chain::expect(&state, &obs);
        table.meta("observable", text(path.display().to_string()));
        table.row(vec![text("custom"), num(value.re), num(value.im)]);
        return Ok(table);
    }
    // Default observable family: the CHSH combination of the saturating
    // qubit witness placed on pair k.
    let witness = bell::tsirelson_witness(2, 2).map_err(compute)?;
    table.meta("observable", text("chsh-pair"));
    table.meta(
        "k",
        Value::Array(ks.iter().map(|k| text(k.clone())).collect()),
    );
    for k in &ks {
        let pair: BigUint = k
            .parse()
            .map_err(|_| CliError::Config(format!("bad pair index {k:?}")))?;
        let obs = bell::test_operator(window, pair, &witness).map_err(compute)?;
        let value = chain::expect(&state, &obs);
        table.row(vec![text(k.clone()), num(value.re), num(value.im)]);
    }
    Ok(table)
}

// ---------------------------------------------------------------- modular

struct ModularRow {
    closure_residual: f64,
    delta_residual: f64,
    commuting_defect: f64,
    candidate_defect: f64,
}

/// JA†J folded down to the far tensor factor. Exact partner for
/// centralizer elements, best-in-commutant candidate otherwise.
fn mirror_candidate(
    md: &modular::ModularData,
    a: &Operator,
    d: usize,
) -> entanglab_core::Result<Operator> {
    let a_full = a.dagger().tensor(&Operator::identity(&[d]))?;
    let sandwiched = md.conj_j().sandwich(&a_full)?;
    Ok(sandwiched
        .partial_trace(0)?
        .scale(C64::new(1.0 / d as f64, 0.0)))
}

fn modular_sample(d: usize, seed: u64, i: usize) -> entanglab_core::Result<ModularRow> {
    let mut rng = sample::rng(seed);
    rng.set_stream(i as u64 + 1);
    let coeff = sample::gaussian_matrix(d, d, &mut rng);
    let psi = bipartite::PureState::normalized(coeff)?;
    let md = modular::modular_data(&psi)?;
    let a = Operator::from_matrix(sample::hermitian_contraction(d, &mut rng));
    let closure_residual = md.closure_deviation(&a)?;
    // Δ must coincide with ρ_A ⊗ ρ_B^{-1}.
    let rho_b_inv = md.rho_b().herm_fn(|x| C64::new(1.0 / x, 0.0))?;
    let reference = md.rho_a().tensor(&rho_b_inv)?;
    let delta_residual = md.delta().sub(&reference)?.norm_max();
    // ρ_A itself commutes with ρ_A, so its double must exist and be exact.
    let double = md
        .find_double(md.rho_a())?
        .ok_or_else(|| entanglab_core::Error::InvalidArgument("missing double".into()))?;
    let commuting_defect = modular::double_defect_pure(&psi, md.rho_a(), &double)?.0;
    // The same recipe applied to a generic (non-commuting) observable
    // leaves a defect floor; reported for contrast.
    let candidate = mirror_candidate(&md, &a, d)?;
    let candidate_defect = modular::double_defect_pure(&psi, &a, &candidate)?.0;
    Ok(ModularRow {
        closure_residual,
        delta_residual,
        commuting_defect,
        candidate_defect,
    })
}

pub fn modular_suite(ctx: &RunCtx, d: usize, samples: usize) -> Result<Table, CliError> {
    if samples == 0 {
        return Err(CliError::Config("--samples must be positive".into()));
    }
    let rows = fan_out(samples, |i| modular_sample(d, ctx.seed, i));
    let mut table = Table::new(vec![
        "sample",
        "closure_residual",
        "delta_residual",
        "commuting_defect",
        "candidate_defect",
    ]);
    table.meta("command", text("modular"));
    table.meta("d", int(d));
    table.meta("samples", int(samples));
    for (i, row) in rows.into_iter().enumerate() {
        let row = row.map_err(compute)?;
        table.row(vec![
            int(i),
            num(row.closure_residual),
            num(row.delta_residual),
            num(row.commuting_defect),
            num(row.candidate_defect),
        ]);
    }
    Ok(table)
}

// ---------------------------------------------------------------- doubles

struct DoublesRow {
    flat_defect: f64,
    commuting_defect: f64,
    generic_defect: f64,
}

fn doubles_sample(d: usize, seed: u64, i: usize) -> entanglab_core::Result<DoublesRow> {
    let mut rng = sample::rng(seed);
    rng.set_stream(i as u64 + 1);
    let a = Operator::from_matrix(sample::hermitian_contraction(d, &mut rng));
    // On the maximally entangled state every observable has a double.
    let omega = bipartite::max_entangled(d)?;
    let md_flat = modular::modular_data(&omega)?;
    let double = md_flat
        .find_double(&a)?
        .ok_or_else(|| entanglab_core::Error::InvalidArgument("flat state lost a double".into()))?;
    let flat_defect = modular::double_defect_pure(&omega, &a, &double)?.0;
    // On a generic state only the centralizer keeps one.
    let coeff = sample::gaussian_matrix(d, d, &mut rng);
    let psi = bipartite::PureState::normalized(coeff)?;
    let md = modular::modular_data(&psi)?;
    let commuting = md
        .find_double(md.rho_a())?
        .ok_or_else(|| entanglab_core::Error::InvalidArgument("missing double".into()))?;
    let commuting_defect = modular::double_defect_pure(&psi, md.rho_a(), &commuting)?.0;
    let candidate = mirror_candidate(&md, &a, d)?;
    let generic_defect = modular::double_defect_pure(&psi, &a, &candidate)?.0;
    Ok(DoublesRow {
        flat_defect,
        commuting_defect,
        generic_defect,
    })
}

pub fn doubles(ctx: &RunCtx, d: usize, samples: usize) -> Result<Table, CliError> {
    if samples == 0 {
        return Err(CliError::Config("--samples must be positive".into()));
    }
    let rows = fan_out(samples, |i| doubles_sample(d, ctx.seed, i));
    let mut table = Table::new(vec![
        "sample",
        "flat_defect",
        "commuting_defect",
        "generic_defect",
    ]);
    table.meta("command", text("doubles"));
    table.meta("d", int(d));
    table.meta("samples", int(samples));
    for (i, row) in rows.into_iter().enumerate() {
        let row = row.map_err(compute)?;
        table.row(vec![
            int(i),
            num(row.flat_defect),
            num(row.commuting_defect),
            num(row.generic_defect),
        ]);
    }
    Ok(table)
}

// ---------------------------------------------------------- weyl-projector

pub fn weyl_projector(_ctx: &RunCtx, ds: Vec<usize>) -> Result<Table, CliError> {
    if ds.is_empty() {
        return Err(CliError::Config("--d list is empty".into()));
    }
    let mut table = Table::new(vec![
        "d",
        "expansion_residual",
        "trace",
        "idempotency_residual",
        "commutation_residual",
        "u_period_residual",
        "v_period_residual",
    ]);
    table.meta("command", text("weyl-projector"));
    table.meta("d", Value::Array(ds.iter().map(|d| int(*d)).collect()));
    for d in ds {
        let expanded = weyl::max_ent_projector_weyl(d).map_err(compute)?;
        let reference = bipartite::max_ent_projector(d).map_err(compute)?;
        let expansion_residual = expanded.sub(&reference).map_err(compute)?.norm_max();
        let idempotency = expanded
            .matmul(&expanded)
            .and_then(|sq| sq.sub(&expanded))
            .map_err(compute)?
            .norm_max();
        let relations =
            weyl::relation_residuals(&weyl::clock(d), &weyl::shift(d), d).map_err(compute)?;
        table.row(vec![
            int(d),
            num(expansion_residual),
            num(expanded.trace().re),
            num(idempotency),
            num(relations.commutation),
            num(relations.u_power),
            num(relations.v_power),
        ]);
    }
    Ok(table)
}

// ------------------------------------------------------------ nopa-extract

pub fn nopa_extract(
    _ctx: &RunCtx,
    pairs: Vec<(f64, f64)>,
    d: usize,
    trunc: usize,
    stages: usize,
) -> Result<Table, CliError> {
    if stages == 0 {
        return Err(CliError::Config("--stages must be positive".into()));
    }
    let results = fan_out(pairs.len(), |i| -> entanglab_core::Result<Vec<Vec<Value>>> {
        let (lambda, _) = pairs[i];
        let mut rows = Vec::new();
        let mut params = nopa::NopaParams::from_lambda(lambda, trunc)?;
        for stage in 0..stages {
            let extraction = nopa::extract_qudit(&params, d)?;
            let closed = nopa::extraction_fidelity(params.lambda(), d);
            rows.push(vec![
                num(lambda),
                num(pairs[i].1),
                int(d),
                int(stage),
                num(params.lambda()),
                num(extraction.fidelity),
                num(closed),
                num((extraction.fidelity - closed).abs()),
                num(extraction.residual),
                num(params.tail_weight()),
            ]);
            params = extraction.coarse_params;
        }
        Ok(rows)
    });
    let mut table = Table::new(vec![
        "lambda",
        "r",
        "d",
        "stage",
        "stage_lambda",
        "fidelity",
        "closed_form",
        "deviation",
        "residual",
        "tail_weight",
    ]);
    table.meta("command", text("nopa-extract"));
    echo_pairs(&mut table, &pairs);
    table.meta("d", int(d));
    table.meta("trunc", int(trunc));
    table.meta("stages", int(stages));
    for rows in results {
        for row in rows.map_err(compute)? {
            table.row(row);
        }
    }
    Ok(table)
}

// --------------------------------------------------------------- nopa-perm

pub fn nopa_perm(
    _ctx: &RunCtx,
    pairs: Vec<(f64, f64)>,
    perm: &str,
    ell: usize,
    trunc: usize,
) -> Result<Table, CliError> {
    let build = |n: usize| -> entanglab_core::Result<(nopa::PermIsometry, &'static str, fn(f64, usize) -> f64)>
    {
        match perm {
            "shift" => Ok((nopa::PermIsometry::shift(n, ell), "bound", |l, e| {
                nopa::perm_defect_bound(l, e)
            })),
            "swap" => Ok((nopa::PermIsometry::swap_pairs(n), "bound", |l, _| {
                nopa::perm_defect_bound(l, 1)
            })),
            "even" => Ok((nopa::PermIsometry::double_index(n), "closed_form", |l, _| {
                nopa::even_defect_closed_form(l)
            })),
            other => Err(entanglab_core::Error::InvalidArgument(format!(
                "unknown permutation {other:?}: expected shift, swap, or even"
            ))),
        }
    };
    // Validate the permutation name once up front.
    build(trunc.max(4)).map_err(compute)?;
    let results = fan_out(pairs.len(), |i| -> entanglab_core::Result<Vec<Value>> {
        let (lambda, r) = pairs[i];
        let params = nopa::NopaParams::from_lambda(lambda, trunc)?;
        // The even map needs a domain that covers all truncated indices.
        let domain = if perm == "even" { 2 * trunc } else { trunc + ell };
        let (p, kind, reference) = build(domain)?;
        let defect = nopa::perm_defect(&params, &p)?;
        let reference = reference(lambda, ell);
        Ok(vec![
            num(lambda),
            num(r),
            text(perm),
            num(defect),
            text(kind),
            num(reference),
        ])
    });
    let mut table = Table::new(vec![
        "lambda",
        "r",
        "perm",
        "defect",
        "reference_kind",
        "reference",
    ]);
    table.meta("command", text("nopa-perm"));
    echo_pairs(&mut table, &pairs);
    table.meta("perm", text(perm));
    table.meta("ell", int(ell));
    table.meta("trunc", int(trunc));
    for row in results {
        table.row(row.map_err(compute)?);
    }
    Ok(table)
}

// ---------------------------------------------------------- epr-covariance

pub fn epr_covariance(
    _ctx: &RunCtx,
    pairs: Vec<(f64, f64)>,
    trunc: usize,
) -> Result<Table, CliError> {
    let results = fan_out(pairs.len(), |i| -> entanglab_core::Result<Vec<Value>> {
        let (lambda, r) = pairs[i];
        let closed = nopa::epr_covariance(r)?;
        let params = nopa::NopaParams::from_lambda(lambda, trunc)?;
        let fock = nopa::fock_covariance(&params);
        let deviation = (closed.var_qdiff - fock.var_qdiff)
            .abs()
            .max((closed.var_psum - fock.var_psum).abs())
            .max((closed.var_qsum - fock.var_qsum).abs())
            .max((closed.var_pdiff - fock.var_pdiff).abs());
        Ok(vec![
            num(lambda),
            num(r),
            num(closed.var_qdiff),
            num(closed.var_psum),
            num(closed.var_qsum),
            num(closed.var_pdiff),
            num(closed.var_qdiff * closed.var_qsum),
            num(fock.var_qdiff),
            num(deviation),
        ])
    });
    let mut table = Table::new(vec![
        "lambda",
        "r",
        "var_qdiff",
        "var_psum",
        "var_qsum",
        "var_pdiff",
        "uncertainty_product",
        "fock_var_qdiff",
        "fock_deviation",
    ]);
    table.meta("command", text("epr-covariance"));
    echo_pairs(&mut table, &pairs);
    table.meta("trunc", int(trunc));
    for row in results {
        table.row(row.map_err(compute)?);
    }
    Ok(table)
}

// ---------------------------------------------------------------- char-fn

pub fn char_fn(
    _ctx: &RunCtx,
    pairs: Vec<(f64, f64)>,
    points: usize,
    max_arg: f64,
    trunc: usize,
) -> Result<Table, CliError> {
    if pairs.len() != 1 {
        return Err(CliError::Config(
            "char-fn takes a single lambda or r".into(),
        ));
    }
    if points < 2 || !(max_arg.is_finite() && max_arg > 0.0) {
        return Err(CliError::Config(
            "char-fn needs --points >= 2 and positive --max-arg".into(),
        ));
    }
    let (lambda, r) = pairs[0];
    let params = nopa::NopaParams::from_lambda(lambda, trunc).map_err(compute)?;
    let results = fan_out(points, |i| -> entanglab_core::Result<Vec<Value>> {
        let t = max_arg * i as f64 / (points - 1) as f64;
        // Invariant direction of the EPR functional: ξ₁ = ξ₂, η₁ = −η₂.
        let chi_on = nopa::characteristic_fn(r, t, t, t, -t)?;
        // Unit-normalized orthogonal direction, crushed at the e^{2r} rate.
        let s = t / std::f64::consts::SQRT_2;
        let chi_off = nopa::characteristic_fn(r, s, -s, 0.0, 0.0)?;
        let ceiling = (-(2.0 * r).exp() * t * t / 4.0).exp();
        let fock_on = nopa::characteristic_fn_fock(&params, t, t, t, -t);
        let fock_off = nopa::characteristic_fn_fock(&params, s, -s, 0.0, 0.0);
        Ok(vec![
            num(t),
            num(chi_on.re),
            num(chi_off.norm()),
            num(ceiling),
            num((chi_on - fock_on).norm()),
            num((chi_off - fock_off).norm()),
        ])
    });
    let mut table = Table::new(vec![
        "t",
        "chi_on_s",
        "chi_off_abs",
        "off_ceiling",
        "fock_dev_on",
        "fock_dev_off",
    ]);
    table.meta("command", text("char-fn"));
    echo_pairs(&mut table, &pairs);
    table.meta("points", int(points));
    table.meta("max_arg", num(max_arg));
    table.meta("trunc", int(trunc));
    for row in results {
        table.row(row.map_err(compute)?);
    }
    Ok(table)
}

// ------------------------------------------------------------ grid-extract

#[allow(clippy::too_many_arguments)]
pub fn grid_extract(
    _ctx: &RunCtx,
    pairs: Vec<(f64, f64)>,
    l: usize,
    extent_pi: f64,
    d: usize,
    a: f64,
    exact: bool,
    export: Option<&std::path::Path>,
) -> Result<Table, CliError> {
    let requested = extent_pi * PI;
    let (spec, adjustment) = if exact {
        grid::GridSpec::exact_for(l, requested, d).map_err(compute)?
    } else {
        grid::GridSpec::adjusted_for(l, requested, d).map_err(compute)?
    };
    let mut table = Table::new(vec![
        "lambda",
        "r",
        "fidelity",
        "imaginary",
        "commutation_residual",
        "boundary_mass",
    ]);
    table.meta("command", text("grid-extract"));
    echo_pairs(&mut table, &pairs);
    table.meta("l", int(l));
    table.meta("d", int(d));
    table.meta("a", num(a));
    table.meta("exact", Value::Bool(exact));
    table.meta("requested_extent", num(adjustment.requested_extent));
    table.meta("granted_extent", num(adjustment.granted_extent));
    table.meta("granted_extent_pi", num(adjustment.granted_extent / PI));
    table.meta("xi_steps", int(adjustment.xi_steps));
    if let Some(path) = export {
        if pairs.len() != 1 {
            return Err(CliError::Config(
                "--export takes a single lambda or r".into(),
            ));
        }
        let state = grid::grid_nopa(&spec, pairs[0].0).map_err(compute)?;
        let file = std::fs::File::create(path)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
        let mut writer = std::io::BufWriter::new(file);
        state.export(&mut writer).map_err(compute)?;
        table.meta("export", text(path.display().to_string()));
    }
    // The Weyl sum inside each fidelity already fans out; sweep serially.
    for (lambda, r) in &pairs {
        let report = grid::grid_extraction_fidelity(&spec, *lambda, d, a).map_err(compute)?;
        table.row(vec![
            num(*lambda),
            num(*r),
            num(report.value),
            num(report.imaginary),
            num(report.commutation_residual),
            num(report.boundary_mass),
        ]);
    }
    Ok(table)
}
