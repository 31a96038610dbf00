//! Acceptance gate: one test per reproduction target, each printing a
//! single PASS/FAIL line with the measured numbers. Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines.
//!
//! Two targets are checked at amended parameters because the originally
//! stated ones are arithmetically unreachable; the amendments keep the
//! tolerance and move only the knob that was inconsistent:
//!  - extraction fidelity reaches 0.999997 at λ = 0.999 (at λ = 0.99 the
//!    closed form itself is 0.99997475);
//!  - the r = 2.5, 3 Fock covariances need truncation 2048 (at 512 the
//!    analytic tail is 1.4e-5 and 3.2e-2, far above the 1e-6 tolerance);
//!  - exact rooted commutation needs the step count to divide the grid,
//!    so that check runs on the snapped spec (extent 16π instead of 12π)
//!    while the fidelity pins stay on the minimally adjusted default.

use entanglab_core::{bell, bipartite, chain, grid, modular, nopa, op, sample, weyl};
use entanglab_core::{Operator, C64};
use num_bigint::BigUint;

fn verdict(label: &str, ok: bool, detail: String) {
    println!("{label}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{label}: {detail}");
}

#[test]
fn acceptance_01_partial_transpose_norm() {
    let mut worst_norm = 0.0f64;
    let mut worst_flip = 0.0f64;
    for d in 2..=16usize {
        let p = bipartite::max_ent_projector(d).unwrap();
        let pt = p.partial_transpose(1).unwrap();
        worst_norm = worst_norm.max((pt.norm_operator() - 1.0 / d as f64).abs());
        let scaled_flip = op::flip(d).scale(C64::new(1.0 / d as f64, 0.0));
        worst_flip = worst_flip.max(pt.sub(&scaled_flip).unwrap().norm_max());
    }
    verdict(
        "acceptance 01 partial-transpose norm",
        worst_norm <= 1e-12 && worst_flip <= 1e-12,
        format!("norm dev {worst_norm:.2e}, flip dev {worst_flip:.2e} over d = 2..16"),
    );
}

#[test]
fn acceptance_02_product_state_ceiling() {
    let mut ok = true;
    let mut detail = String::new();
    for d in [2usize, 3, 4] {
        let sweep = bipartite::product_fidelity_sweep(d, 1000, 7).unwrap();
        let max_f = sweep.max_fidelity_random.max(sweep.max_fidelity_aligned);
        let bound = 1.0 / d as f64;
        ok &= max_f <= bound + 1e-9;
        ok &= bound - max_f <= 1e-3;
        detail.push_str(&format!("d={d}: max {max_f:.9} vs 1/d {bound:.9}; "));
    }
    verdict("acceptance 02 product-state ceiling", ok, detail);
}

#[test]
fn acceptance_03_bell_seesaw() {
    let tol = entanglab_core::TOL_SEESAW;
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut ok = true;
    let mut detail = String::new();

    let singlet = bell::beta_optimize_restarts(&chain::singlet_projector(), 8, 500, tol, 1)
        .unwrap()
        .beta;
    ok &= (singlet - sqrt2).abs() <= 1e-6;
    detail.push_str(&format!("singlet β {singlet:.8}; "));

    let mut worst_product = 0.0f64;
    for i in 0..10u64 {
        let mut rng = sample::rng(1);
        rng.set_stream(i + 1);
        let phi = sample::state_vector(2, &mut rng);
        let psi = sample::state_vector(2, &mut rng);
        let omega = bipartite::PureState::product(&phi, &psi)
            .unwrap()
            .projector()
            .unwrap();
        let beta = bell::beta_optimize_restarts(&omega, 4, 500, tol, 1).unwrap().beta;
        worst_product = worst_product.max(beta);
    }
    ok &= worst_product <= 1.0 + 1e-6;
    detail.push_str(&format!("product max β {worst_product:.8}; "));

    let state = chain::ChainState::default_chain();
    for k in [BigUint::from(0u32), BigUint::from(10u32), BigUint::from(1_000_000u32)] {
        let omega = state.restrict(&k);
        let beta = bell::beta_optimize_restarts(&omega, 8, 500, tol, 1).unwrap().beta;
        ok &= (beta - sqrt2).abs() <= 1e-6;
        detail.push_str(&format!("pair {k} β {beta:.8}; "));
    }
    verdict("acceptance 03 bell see-saw", ok, detail);
}

/// JA†J folded to the far factor, the same candidate the library builds.
fn mirror_candidate(md: &modular::ModularData, a: &Operator, d: usize) -> Operator {
    let a_full = a.dagger().tensor(&Operator::identity(&[d])).unwrap();
    md.conj_j()
        .sandwich(&a_full)
        .unwrap()
        .partial_trace(0)
        .unwrap()
        .scale(C64::new(1.0 / d as f64, 0.0))
}

#[test]
fn acceptance_04_modular_suite() {
    let d = 4usize;
    let mut worst_closure = 0.0f64;
    let mut worst_delta = 0.0f64;
    let mut worst_commuting = 0.0f64;
    let mut least_generic = f64::INFINITY;
    let mut doubles_consistent = true;
    let mut nonflat_detected = true;

    for i in 0..100u64 {
        let mut rng = sample::rng(42);
        rng.set_stream(i + 1);
        let psi = bipartite::PureState::normalized(sample::gaussian_matrix(d, d, &mut rng)).unwrap();
        let md = modular::modular_data(&psi).unwrap();
        let a = Operator::from_matrix(sample::hermitian_contraction(d, &mut rng));

        worst_closure = worst_closure.max(md.closure_deviation(&a).unwrap());

        let rho_b_inv = md.rho_b().herm_fn(|x| C64::new(1.0 / x, 0.0)).unwrap();
        let reference = md.rho_a().tensor(&rho_b_inv).unwrap();
        worst_delta = worst_delta.max(md.delta().sub(&reference).unwrap().norm_max());

        // Centralizer elements (here a polynomial in ρ_A) must have an
        // exact far-side double; generic contractions must not.
        let poly = md.rho_a().herm_fn(|x| C64::new(x * x + 0.5 * x, 0.0)).unwrap();
        match md.find_double(&poly).unwrap() {
            Some(double) => {
                let defect = modular::double_defect_pure(&psi, &poly, &double).unwrap().0;
                worst_commuting = worst_commuting.max(defect);
            }
            None => doubles_consistent = false,
        }
        let comm = md
            .rho_a()
            .matmul(&a)
            .unwrap()
            .sub(&a.matmul(md.rho_a()).unwrap())
            .unwrap()
            .norm_frobenius();
        if comm > 1e-9 {
            if md.find_double(&a).unwrap().is_some() {
                doubles_consistent = false;
            }
            let candidate = mirror_candidate(&md, &a, d);
            let defect = modular::double_defect_pure(&psi, &a, &candidate).unwrap().0;
            least_generic = least_generic.min(defect);
        }

        // Non-flat spectrum: all three flatness witnesses fire together.
        let report = modular::flat_spectrum_report(&md, 8, 42).unwrap();
        nonflat_detected &= report.delta_identity_deviation > 1e-6
            && report.coeff_spread > 1e-6
            && report.max_trace_asymmetry > 1e-6;
    }

    // Flat spectrum: all three vanish on the maximally entangled state.
    let flat = modular::flat_spectrum_report(
        &modular::modular_data(&bipartite::max_entangled(d).unwrap()).unwrap(),
        8,
        42,
    )
    .unwrap();
    let flat_ok = flat.delta_identity_deviation <= 1e-9
        && flat.coeff_spread <= 1e-9
        && flat.max_trace_asymmetry <= 1e-9;

    let ok = worst_closure <= 1e-9
        && worst_delta <= 1e-9
        && worst_commuting <= 1e-8
        && least_generic > 1e-8
        && doubles_consistent
        && nonflat_detected
        && flat_ok;
    verdict(
        "acceptance 04 modular suite",
        ok,
        format!(
            "closure {worst_closure:.2e}, Δ dev {worst_delta:.2e}, commuting defect \
             {worst_commuting:.2e}, generic defect floor {least_generic:.2e}, flat witnesses \
             ({:.2e}, {:.2e}, {:.2e})",
            flat.delta_identity_deviation, flat.coeff_spread, flat.max_trace_asymmetry
        ),
    );
}

#[test]
fn acceptance_05_weyl_identities() {
    let mut worst_expansion = 0.0f64;
    let mut worst_fidelity = 0.0f64;
    for d in [2usize, 3, 5] {
        let expanded = weyl::max_ent_projector_weyl(d).unwrap();
        let reference = bipartite::max_ent_projector(d).unwrap();
        worst_expansion = worst_expansion.max(expanded.sub(&reference).unwrap().norm_max());

        let omega = weyl::VectorState::from_pure(&bipartite::max_entangled(d).unwrap());
        let (u1, v1, u2, v2) = weyl::pair_generators(d).unwrap();
        let f = weyl::weyl_fidelity(&omega, d, &u1, &v1, &u2, &v2).unwrap();
        worst_fidelity = worst_fidelity.max((f - C64::new(1.0, 0.0)).norm());
    }
    verdict(
        "acceptance 05 weyl identities",
        worst_expansion <= 1e-12 && worst_fidelity <= 1e-10,
        format!("expansion dev {worst_expansion:.2e}, fidelity dev {worst_fidelity:.2e}"),
    );
}

#[test]
fn acceptance_06_nopa_extraction() {
    let mut ok = true;
    let mut detail = String::new();

    for d in [2usize, 4] {
        let params = nopa::NopaParams::from_lambda(0.9, 256).unwrap();
        let ex = nopa::extract_qudit(&params, d).unwrap();
        let closed = nopa::extraction_fidelity(0.9, d);
        ok &= ex.residual <= 1e-10;
        ok &= (ex.fidelity - closed).abs() <= 1e-10;
        detail.push_str(&format!(
            "d={d}: residual {:.2e}, fidelity {:.9}; ",
            ex.residual, ex.fidelity
        ));
    }

    // Monotone in λ; the 0.999997 mark is reached at λ = 0.999 (the closed
    // form at λ = 0.99 is 0.99997475, short of it by construction).
    let ladder: Vec<f64> = [0.9, 0.99, 0.999]
        .iter()
        .map(|&l| nopa::extraction_fidelity(l, 2))
        .collect();
    ok &= ladder[0] < ladder[1] && ladder[1] < ladder[2];
    ok &= ladder[2] >= 0.999997;
    ok &= (ladder[1] - 0.9999747487500632).abs() <= 1e-12;
    detail.push_str(&format!("ladder {ladder:?}; "));

    // Iterating on the coarse output must work a second time.
    let params = nopa::NopaParams::from_lambda(0.9, 256).unwrap();
    let first = nopa::extract_qudit(&params, 2).unwrap();
    let second = nopa::extract_qudit(&first.coarse_params, 2).unwrap();
    ok &= second.residual <= 1e-10;
    ok &= (second.coarse_params.lambda() - 0.9f64.powi(4)).abs() <= 1e-12;
    detail.push_str(&format!("second-stage residual {:.2e}", second.residual));

    verdict("acceptance 06 nopa extraction", ok, detail);
}

#[test]
fn acceptance_07_permutation_doubles() {
    let mut ok = true;
    let mut detail = String::new();

    let params = nopa::NopaParams::from_lambda(0.9, 512).unwrap();
    let shift = nopa::perm_defect(&params, &nopa::PermIsometry::shift(512, 1)).unwrap();
    ok &= (shift - 0.01).abs() <= 1e-12;
    ok &= shift <= nopa::perm_defect_bound(0.9, 1) + 1e-15;
    detail.push_str(&format!("shift defect {shift:.12}; "));

    // The doubling map: truncation 16384 keeps the analytic tail below
    // 1e-14 even at λ = 0.999.
    for lambda in [0.9, 0.99, 0.999] {
        let params = nopa::NopaParams::from_lambda(lambda, 16384).unwrap();
        let defect = nopa::perm_defect(&params, &nopa::PermIsometry::double_index(16384)).unwrap();
        let closed = nopa::even_defect_closed_form(lambda);
        ok &= (defect - closed).abs() <= 1e-10;
        if lambda == 0.999 {
            ok &= (defect - 1.0 / 6.0).abs() <= 5e-3;
        }
        detail.push_str(&format!("even({lambda}) {defect:.9}; "));
    }
    verdict("acceptance 07 permutation doubles", ok, detail);
}

#[test]
fn acceptance_08_epr_limit() {
    let mut ok = true;
    let mut detail = String::new();

    // Closed-form squeezed-pair variances are e^{-2r} identically.
    for r in [0.5f64, 1.0, 1.5, 2.0, 2.5, 3.0] {
        let cov = nopa::epr_covariance(r).unwrap();
        ok &= (cov.var_qdiff - (-2.0 * r).exp()).abs() <= 1e-12;
        ok &= (cov.var_qdiff - cov.var_psum).abs() <= 1e-15;
    }

    // Fock sums against the closed form; r > 2 needs the larger cutoff
    // (the analytic tail at 512 is 1.4e-5 / 3.2e-2 for r = 2.5 / 3).
    let mut worst_fock = 0.0f64;
    for (r, trunc) in [(0.5, 512), (1.0, 512), (1.5, 512), (2.0, 512), (2.5, 2048), (3.0, 2048)] {
        let params = nopa::NopaParams::from_r(r, trunc).unwrap();
        let fock = nopa::fock_covariance(&params);
        let closed = (-2.0f64 * r).exp();
        worst_fock = worst_fock
            .max((fock.var_qdiff - closed).abs())
            .max((fock.var_psum - closed).abs());
    }
    ok &= worst_fock <= 1e-6;
    detail.push_str(&format!("fock squeezed-pair dev {worst_fock:.2e}; "));

    // Characteristic function: → 1 along the invariant direction as r
    // grows, crushed at rate exp(-e^{2r}/4) at unit argument across it.
    let mut prev_on = 0.0f64;
    let mut on_monotone = true;
    let mut worst_off = 0.0f64;
    for r in [0.5f64, 1.0, 1.5, 2.0, 2.5, 3.0] {
        let on = nopa::characteristic_fn(r, 1.0, 1.0, 1.0, -1.0).unwrap();
        on_monotone &= on.re > prev_on && on.im.abs() <= 1e-15;
        prev_on = on.re;
        let s = 1.0 / std::f64::consts::SQRT_2;
        let off = nopa::characteristic_fn(r, s, -s, 0.0, 0.0).unwrap();
        worst_off = worst_off.max((off.norm() - (-(2.0 * r).exp() / 4.0).exp()).abs());
    }
    ok &= on_monotone && prev_on >= 0.99 && worst_off <= 1e-12;
    detail.push_str(&format!(
        "χ_on(r=3) {prev_on:.6}, off-axis ceiling dev {worst_off:.2e}; "
    ));

    // The truncated state reproduces the Gaussian χ pointwise.
    let params = nopa::NopaParams::from_r(1.0, 64).unwrap();
    let mut worst_chi = 0.0f64;
    for i in 0..5 {
        let t = 0.5 * i as f64;
        let gauss = nopa::characteristic_fn(1.0, t, t, t, -t).unwrap();
        let fock = nopa::characteristic_fn_fock(&params, t, t, t, -t);
        worst_chi = worst_chi.max((gauss - fock).norm());
    }
    ok &= worst_chi <= 1e-6;
    detail.push_str(&format!("fock χ dev {worst_chi:.2e}"));

    verdict("acceptance 08 epr limit", ok, detail);
}

#[test]
fn acceptance_09_grid_extraction() {
    let x_req = 12.0 * std::f64::consts::PI;
    let mut ok = true;
    let mut detail = String::new();

    // Exact periodicity of the rooted pair holds on both grids.
    let (adjusted, _) = grid::GridSpec::adjusted_for(512, x_req, 2).unwrap();
    let (snapped, snap_adj) = grid::GridSpec::exact_for(512, x_req, 2).unwrap();
    for spec in [&adjusted, &snapped] {
        let ops = grid::build_ops(spec, 2, 0.0).unwrap();
        for mode in [&ops.first, &ops.second] {
            ok &= mode.u.pow(2).is_identity() && mode.v.pow(2).is_identity();
        }
    }
    detail.push_str("U²=V²=1 exact; ");

    // Commutation reaches tolerance on the snapped grid, where the root
    // step divides the period (the minimally adjusted grid has a ~0.28
    // periodization floor there, recorded with the frozen constants).
    let lambda1 = 1.0f64.tanh();
    let state = grid::grid_nopa(&snapped, lambda1).unwrap();
    let ops = grid::build_ops(&snapped, 2, 0.0).unwrap();
    let residual = grid::commutation_residual(&state, &ops.first, 2).unwrap();
    ok &= residual <= entanglab_core::TOL_GRID_COMMUTATION;
    detail.push_str(&format!(
        "commutation {residual:.2e} at extent {:.0}π; ",
        snap_adj.granted_extent / std::f64::consts::PI
    ));

    // Fidelity pins on the default (minimally adjusted) grid.
    let pinned = [
        (1.0f64, 0.6471251237870097),
        (2.0, 0.867953944722434),
        (3.0, 0.9672561600796513),
    ];
    let mut prev = 0.0f64;
    for (r, frozen) in pinned {
        let report = grid::grid_extraction_fidelity(&adjusted, r.tanh(), 2, 0.0).unwrap();
        ok &= (report.value - frozen).abs() <= 1e-6;
        ok &= report.value > prev;
        prev = report.value;
        detail.push_str(&format!("F(r={r}) {:.6}; ", report.value));
    }
    ok &= prev >= 0.9;

    verdict("acceptance 09 grid extraction", ok, detail);
}

#[test]
fn acceptance_10_entropy_divergence() {
    let entropies: Vec<f64> = [100usize, 1000, 10000]
        .iter()
        .map(|&n| bipartite::entropy_bits(&bipartite::divergent_family(n).unwrap()))
        .collect();
    let ok = entropies[0] < entropies[1] && entropies[1] < entropies[2];
    verdict(
        "acceptance 10 entropy divergence",
        ok,
        format!("{entropies:?} bits"),
    );
}

#[test]
fn acceptance_11_cli_determinism() {
    let commands: Vec<Vec<&str>> = vec![
        vec!["schmidt", "--d", "3", "--state", "random", "--seed", "4"],
        vec!["entropy-divergence", "--n", "100,1000"],
        vec!["nogo-bound", "--d", "2,3", "--samples", "50", "--seed", "7"],
        vec!["bell-seesaw", "--state", "singlet", "--restarts", "2", "--seed", "1"],
        vec!["chain-expect", "--k", "0,10"],
        vec!["modular", "--d", "3", "--samples", "3", "--seed", "2"],
        vec!["doubles", "--d", "3", "--samples", "3", "--seed", "2"],
        vec!["weyl-projector", "--d", "2,3"],
        vec!["nopa-extract", "--lambda", "0.9", "--trunc", "64"],
        vec!["nopa-perm", "--lambda", "0.9", "--perm", "even", "--trunc", "256"],
        vec!["epr-covariance", "--r", "0.5,1", "--trunc", "128"],
        vec!["char-fn", "--r", "1", "--points", "4", "--trunc", "32"],
        vec!["grid-extract", "--r", "1", "--l", "128", "--extent-pi", "8"],
    ];
    let mut ok = true;
    for args in &commands {
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let out = std::process::Command::new(env!("CARGO_BIN_EXE_entanglab"))
                .args(args)
                .output()
                .expect("binary should spawn");
            assert!(
                out.status.success(),
                "{args:?}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            let text = String::from_utf8(out.stdout).unwrap();
            let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
            outputs.push(data.join("\n"));
        }
        ok &= outputs[0] == outputs[1];
    }
    verdict(
        "acceptance 11 cli determinism",
        ok,
        format!("{} commands re-run byte-identically", commands.len()),
    );
}
