//! Acceptance gate for the solver suite. Each criterion prints one PASS/FAIL
//! line (visible with --nocapture, or on failure). Tolerances are fixed here
//! and must not be loosened to force a pass; a failing criterion is reported
//! with its measured numbers.
//!
//! Published error anchors for the beam benchmark (relative L1 density error
//! of the full model at h = 2^-n against a 2^-9 reference):
//!   n=3: 0.0888644214802   n=4: 0.0493703043315   n=5: 0.0271248526792
//!   n=6: 0.0146163635687   n=7: 0.00754860362137
//! The suite measures against a 2^-7 reference and compensates with the
//! first-order Richardson factor 1/(1 - 2^(n-7)); the optional (ignored)
//! long-run test uses the 2^-9 reference directly.

use std::sync::{Arc, LazyLock};

use fpmr_core::basis::{
    gram_schmidt_extend, legendre_basis, reduced_operators, GramSchmidtOutcome, VelocityBasis,
};
use fpmr_core::greedy::{
    default_comparison_times, relative_l1_error, run_error_study, GreedyReport, StudyConfig,
    StudyMethod,
};
use fpmr_core::moment::{solve_moment_system, spatial_density, DensityField, MomentRun};
use fpmr_core::problem::{BoundaryData, InitialData, KineticProblem, SpaceGrid};
use fpmr_core::reference::{density_of_full, solve_reference, ReferenceRun};
use fpmr_core::snapshot::{
    coefficients, sample_parameters, solve_snapshot, ParameterBox, ParameterPoint,
};
use fpmr_core::velocity_fem::{interpolate, FemOperators, NodalFunction, VelocityGrid};

const ANCHORS: [(u32, f64); 5] = [
    (3, 0.0888644214802),
    (4, 0.0493703043315),
    (5, 0.0271248526792),
    (6, 0.0146163635687),
    (7, 0.00754860362137),
];

const CFL: f64 = 0.9;

fn report(criterion: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {criterion}: {verdict} ({detail})");
}

fn problem() -> KineticProblem {
    KineticProblem::sourcebeam()
}

static PROBLEM: LazyLock<KineticProblem> = LazyLock::new(problem);

/// Reference density at h = 2^-7, shared by most criteria.
static REF7: LazyLock<DensityField> = LazyLock::new(|| {
    let p = problem();
    let times = default_comparison_times(p.t_end);
    let full = solve_reference(&p, 3 * 128, 256, &times, CFL).unwrap();
    density_of_full(&full)
});

fn study_config(reference: &'static DensityField) -> StudyConfig<'static> {
    StudyConfig {
        problem: &PROBLEM,
        reference,
        comparison_times: default_comparison_times(4.0),
        cfl: CFL,
        gs_tol: 1e-10,
        param_box: ParameterBox::sourcebeam_default(),
        n_sample: 500,
        seed: 314,
        truth_points: (12, 16),
    }
}

/// Greedy run on 192 truth-snapshots at h = 2^-4 with m_max = 13, shared by
/// criteria 3, 4 and 6a.
static GREEDY4: LazyLock<GreedyReport> = LazyLock::new(|| {
    let cfg = study_config(&REF7);
    let out = run_error_study(StudyMethod::GreedyTruth, &[4], 13, &cfg).unwrap();
    out.greedy.into_iter().next().unwrap().1
});

/// Legendre errors at h = 2^-4 for m = 1..13, shared by criteria 3 and 5.
static LEGENDRE4: LazyLock<Vec<f64>> = LazyLock::new(|| {
    let cfg = study_config(&REF7);
    let out = run_error_study(StudyMethod::Legendre, &[4], 13, &cfg).unwrap();
    out.report.rows.iter().map(|r| r.error).collect()
});

fn discretization_error(exponent: u32, reference: &DensityField) -> f64 {
    let p = problem();
    let times = default_comparison_times(p.t_end);
    let full = solve_reference(&p, 3 << exponent, 2 << exponent, &times, CFL).unwrap();
    let coarse = density_of_full(&full);
    relative_l1_error(&coarse, reference, &times).unwrap()
}

#[test]
fn criterion_1_discretization_error_anchors() {
    let mut pass = true;
    let mut details = Vec::new();
    for &(n, anchor) in &ANCHORS[..3] {
        let measured = discretization_error(n, &REF7);
        let adjusted = measured / (1.0 - 0.5f64.powi(7 - n as i32));
        let ratio = adjusted / anchor;
        details.push(format!("n={n}: adjusted {adjusted:.4e} vs {anchor:.4e} (x{ratio:.2})"));
        if !(0.5..=2.0).contains(&ratio) {
            pass = false;
        }
    }
    let detail = details.join("; ");
    report("1 discretization anchors", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
#[ignore = "long run: rebuilds the reference at h = 2^-9 (several minutes)"]
fn criterion_1_full_anchor_ladder() {
    let p = problem();
    let times = default_comparison_times(p.t_end);
    let full = solve_reference(&p, 3 * 512, 1024, &times, CFL).unwrap();
    let ref9 = density_of_full(&full);
    let mut pass = true;
    let mut details = Vec::new();
    for &(n, anchor) in &ANCHORS {
        let measured = discretization_error(n, &ref9);
        let ratio = measured / anchor;
        details.push(format!("n={n}: {measured:.4e} vs {anchor:.4e} (x{ratio:.2})"));
        if !(0.5..=1.5).contains(&ratio) {
            pass = false;
        }
    }
    let detail = details.join("; ");
    report("1L full anchor ladder", pass, &detail);
    assert!(pass, "{detail}");
}

/// Velocity mass, transport and stiffness contractions of the first seven
/// Legendre modes must reproduce the analytic identities
///   M = I, S_ii = i(i+1), D_{i,i+1} = (i+1)/sqrt((2i+1)(2i+3))
/// at h_v = 2^-7 within the stated bounds. The S bounds are not attainable
/// with nodal-interpolated Legendre modes at this mesh (the interpolation
/// error in S grows like h^2 i^4); the criterion is asserted as stated and
/// its failure is expected and documented. The companion test below shows
/// every identity holds on a finer velocity mesh.
#[test]
fn criterion_2_legendre_operator_identities() {
    let (pass, detail) = legendre_identity_check(256, 1e-6, 5e-3, 5e-3, 1e-6);
    report("2 legendre operator identities", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_2_companion_identities_on_fine_mesh() {
    // h_v = 2^-14, so 2^15 cells
    let (pass, detail) = legendre_identity_check(1 << 15, 1e-6, 5e-3, 5e-3, 1e-6);
    report("2c legendre identities, fine mesh", pass, &detail);
    assert!(pass, "{detail}");
}

fn legendre_identity_check(
    n_v: usize,
    tol_mass: f64,
    tol_s: f64,
    tol_d: f64,
    tol_off: f64,
) -> (bool, String) {
    let grid = Arc::new(VelocityGrid::new(n_v).unwrap());
    let fem = FemOperators::assemble(&grid);
    let basis = legendre_basis(7, &grid).unwrap();
    let ops = reduced_operators(&basis, &fem).unwrap();

    let mut worst_mass = 0.0f64;
    let mut worst_s = 0.0f64;
    let mut worst_d = 0.0f64;
    let mut worst_off = 0.0f64;
    for i in 0..7 {
        for j in 0..7 {
            let mass_dev = (ops.mass[(i, j)] - f64::from(i == j)).abs();
            worst_mass = worst_mass.max(mass_dev);
            if i == j {
                worst_s = worst_s.max((ops.stiffness[(i, i)] - (i * (i + 1)) as f64).abs());
            } else {
                worst_off = worst_off.max(ops.stiffness[(i, j)].abs());
            }
            if j == i + 1 {
                let exact = (i + 1) as f64 / (((2 * i + 1) * (2 * i + 3)) as f64).sqrt();
                worst_d = worst_d.max((ops.transport[(i, j)] - exact).abs());
            } else if i != j && j != i + 1 && i != j + 1 {
                worst_off = worst_off.max(ops.transport[(i, j)].abs());
            }
        }
    }
    let checks = [
        ("mass", worst_mass, tol_mass),
        ("S diag", worst_s, tol_s),
        ("D superdiag", worst_d, tol_d),
        ("off-pattern", worst_off, tol_off),
    ];
    let pass = checks.iter().all(|&(_, v, t)| v <= t);
    let detail = checks
        .iter()
        .map(|&(name, v, t)| {
            let mark = if v <= t { "ok" } else { "EXCEEDS" };
            format!("{name} {v:.2e} vs {t:.0e} {mark}")
        })
        .collect::<Vec<_>>()
        .join("; ");
    (pass, format!("n_v={n_v}: {detail}"))
}

/// At every model order the greedy basis built from truth snapshots must be
/// at least as good as the Legendre basis, with one sub-10% violation
/// allowed. Both error curves sit on the shared spatial discretization floor
/// for m >= 8, where sub-percent crossings are first-order-in-time scheme
/// noise; the criterion is asserted as stated and a failure there is
/// documented rather than tuned away.
#[test]
fn criterion_3_greedy_truth_dominance() {
    let greedy = &GREEDY4.errors;
    let legendre = &*LEGENDRE4;
    assert_eq!(greedy.len(), 13);
    assert_eq!(legendre.len(), 13);
    let mut violations = Vec::new();
    for m in 1..=13 {
        let (g, l) = (greedy[m - 1], legendre[m - 1]);
        if g > l {
            violations.push((m, (g - l) / l));
        }
    }
    let pass = violations.len() <= 1 && violations.iter().all(|&(_, rel)| rel < 0.10);
    let listed = violations
        .iter()
        .map(|(m, rel)| format!("m={m}: +{:.1}%", rel * 100.0))
        .collect::<Vec<_>>()
        .join(", ");
    let detail = if violations.is_empty() {
        "greedy <= legendre at every m".to_string()
    } else {
        format!("{} violations: {listed}", violations.len())
    };
    report("3 greedy-truth dominance", pass, &detail);
    for m in 1..=13 {
        println!("  m={m:>2}: greedy {:.6e}  legendre {:.6e}", greedy[m - 1], legendre[m - 1]);
    }
    assert!(pass, "{detail}");
}

#[test]
fn criterion_4_greedy_saturation_at_m4() {
    let mut pass = true;
    let mut details = Vec::new();

    let e4 = GREEDY4.errors[3];
    let anchor4 = ANCHORS[1].1;
    let ratio4 = e4 / anchor4;
    details.push(format!("h=2^-4: m=4 error {e4:.4e} vs anchor {anchor4:.4e} (x{ratio4:.2})"));
    if !(0.5..=2.0).contains(&ratio4) {
        pass = false;
    }

    let cfg = study_config(&REF7);
    let out = run_error_study(StudyMethod::GreedyTruth, &[3], 4, &cfg).unwrap();
    let e3 = out.report.rows.last().unwrap().error;
    let anchor3 = ANCHORS[0].1;
    let ratio3 = e3 / anchor3;
    details.push(format!("h=2^-3: m=4 error {e3:.4e} vs anchor {anchor3:.4e} (x{ratio3:.2})"));
    if !(0.5..=2.0).contains(&ratio3) {
        pass = false;
    }

    let detail = details.join("; ");
    report("4 greedy saturation at m=4", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_5_pde_snapshot_pipeline() {
    let cfg = study_config(&REF7);
    let out = run_error_study(StudyMethod::GreedyPde, &[4], 13, &cfg).unwrap();
    let errors: Vec<f64> = out.report.rows.iter().map(|r| r.error).collect();
    assert_eq!(errors.len(), 13);
    let e13 = errors[12];
    let anchor = ANCHORS[1].1;
    let ratio = e13 / anchor;
    let legendre13 = LEGENDRE4[12];
    let pass = ratio <= 3.0 && e13 < legendre13;
    let detail = format!(
        "m=13 error {e13:.4e}: x{ratio:.2} of anchor {anchor:.4e} (need <= 3), \
         legendre m=13 {legendre13:.4e} (need to beat)"
    );
    report("5 pde snapshot pipeline", pass, &detail);
    assert!(pass, "{detail}");
}

// criterion 6: property suites

#[test]
fn criterion_6a_basis_orthonormality() {
    let mut worst = 0.0f64;
    for basis in &GREEDY4.bases {
        worst = worst.max(basis.orthonormality_defect());
    }
    let grid = Arc::new(VelocityGrid::new(64).unwrap());
    let leg = legendre_basis(7, &grid).unwrap();
    worst = worst.max(leg.orthonormality_defect());
    let pass = worst <= 1e-10;
    let detail = format!("worst defect {worst:.2e} over {} bases", GREEDY4.bases.len() + 1);
    report("6a orthonormality", pass, &detail);
    assert!(pass, "{detail}");
}

fn random_orthonormal_basis(grid: &Arc<VelocityGrid>, m: usize, seed: u64) -> VelocityBasis {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut basis = VelocityBasis::empty(Arc::clone(grid));
    while basis.len() < m {
        let values: Vec<f64> = (0..grid.n_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cand = NodalFunction::from_values(Arc::clone(grid), values).unwrap();
        if let GramSchmidtOutcome::Extended(b) = gram_schmidt_extend(&basis, &cand, 1e-10).unwrap()
        {
            basis = b;
        }
    }
    basis
}

#[test]
fn criterion_6b_eigenvalue_bound_random_bases() {
    let grid = Arc::new(VelocityGrid::new(32).unwrap());
    let fem = FemOperators::assemble(&grid);
    let mut worst_lambda = 0.0f64;
    let mut worst_split = 0.0f64;
    for seed in 0..100 {
        let m = 1 + (seed as usize % 6);
        let basis = random_orthonormal_basis(&grid, m, 1000 + seed);
        let ops = reduced_operators(&basis, &fem).unwrap();
        worst_lambda = worst_lambda.max(ops.lambda_max);
        let split = (&ops.a_plus + &ops.a_minus - &ops.advection).abs().max();
        worst_split = worst_split.max(split);
    }
    let pass = worst_lambda < 1.0 && worst_split <= 1e-10;
    let detail =
        format!("max |lambda| {worst_lambda:.6} (need < 1); flux split defect {worst_split:.2e}");
    report("6b eigenvalue bound", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_6c_snapshot_weight_scaling_invariance() {
    let p = problem();
    let grid = Arc::new(VelocityGrid::new(64).unwrap());
    let fem = FemOperators::assemble(&grid);
    let bx = ParameterBox::sourcebeam_default();
    let params = sample_parameters(&bx, 100, 2024, &p).unwrap();
    let mut worst = 0.0f64;
    for mu in &params {
        let scaled = ParameterPoint {
            weights: mu.weights.iter().map(|w| 3.0 * w).collect(),
            ..mu.clone()
        };
        let c1 = coefficients(mu, &p, &grid).unwrap();
        let c2 = coefficients(&scaled, &p, &grid).unwrap();
        let s1 = solve_snapshot(&c1, mu.phi_left, mu.phi_right, &fem).unwrap();
        let s2 = solve_snapshot(&c2, scaled.phi_left, scaled.phi_right, &fem).unwrap();
        for (a, b) in s1.values.iter().zip(&s2.values) {
            worst = worst.max((a - b).abs());
        }
    }
    let pass = worst <= 1e-12;
    let detail = format!("max deviation {worst:.2e} over 100 parameter points");
    report("6c weight-scaling invariance", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_6d_snapshot_manufactured_convergence() {
    // phi*(v) = cos(pi v / 2) solves the snapshot equation with the source
    // below and zero boundary values; quadrature-measured L2 error must drop
    // at second order over h_v = 2^-3..2^-7
    let (a, b, c) = (0.7, 0.4, 1.3);
    let pi = std::f64::consts::PI;
    let phi_star = |v: f64| (0.5 * pi * v).cos();
    let q_star = move |v: f64| {
        a * 0.25 * pi * pi * (1.0 - v * v) * (0.5 * pi * v).cos()
            - a * pi * v * (0.5 * pi * v).sin()
            + (b * v + c) * (0.5 * pi * v).cos()
    };
    let gauss = [
        (-0.7745966692414834, 5.0 / 9.0),
        (0.0, 8.0 / 9.0),
        (0.7745966692414834, 5.0 / 9.0),
    ];
    let mut errors = Vec::new();
    for e in 3..=7u32 {
        let n = 2usize << e;
        let grid = Arc::new(VelocityGrid::new(n).unwrap());
        let fem = FemOperators::assemble(&grid);
        let coeffs = fpmr_core::snapshot::PdeCoefficients {
            a,
            b,
            c,
            q_hat: interpolate(&grid, q_star).unwrap(),
        };
        let sol = solve_snapshot(&coeffs, 0.0, 0.0, &fem).unwrap();
        let mut err2 = 0.0;
        for k in 0..n {
            let (vl, vr) = (grid.nodes[k], grid.nodes[k + 1]);
            let mid = 0.5 * (vl + vr);
            for (xi, wq) in gauss {
                let v = mid + 0.5 * grid.h * xi;
                let w = 0.5 * grid.h * wq;
                let fh =
                    sol.values[k] * (vr - v) / grid.h + sol.values[k + 1] * (v - vl) / grid.h;
                err2 += w * (fh - phi_star(v)).powi(2);
            }
        }
        errors.push(err2.sqrt());
    }
    let mut min_rate = f64::INFINITY;
    for w in errors.windows(2) {
        min_rate = min_rate.min((w[0] / w[1]).log2());
    }
    let listed = errors
        .iter()
        .map(|e| format!("{e:.3e}"))
        .collect::<Vec<_>>()
        .join(", ");
    let pass = min_rate >= 1.8;
    let detail = format!("errors [{listed}], slowest observed order {min_rate:.2}");
    report("6d manufactured convergence", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_6e_moment_conservation_balance() {
    // no absorption, no diffusion, no source: per step the change of the
    // total moment vector equals the net boundary flux exactly
    let p = KineticProblem {
        sigma_a: fpmr_core::problem::PiecewiseConstant::constant(0.0),
        temperature: fpmr_core::problem::PiecewiseConstant::constant(0.0),
        source: None,
        initial: InitialData::Constant(1.0),
        left_bc: BoundaryData::Constant(1.0),
        right_bc: BoundaryData::Constant(1.0),
        ..problem()
    };
    let grid = Arc::new(VelocityGrid::new(16).unwrap());
    let fem = FemOperators::assemble(&grid);
    let basis = legendre_basis(3, &grid).unwrap();
    let ops = reduced_operators(&basis, &fem).unwrap();
    let sg = SpaceGrid::new(p.x_range, 24).unwrap();
    let mut run = MomentRun::new(&p, &basis, &ops, &sg).unwrap();
    let h = sg.h;
    let dt = 0.05;
    let mut worst = 0.0f64;
    for _ in 0..40 {
        let before: Vec<f64> = (0..3)
            .map(|i| (0..sg.n_cells).map(|j| run.state()[(i, j)]).sum::<f64>() * h)
            .collect();
        let fluxes = run.step(dt);
        let after: Vec<f64> = (0..3)
            .map(|i| (0..sg.n_cells).map(|j| run.state()[(i, j)]).sum::<f64>() * h)
            .collect();
        for i in 0..3 {
            let expected = before[i] - dt * (fluxes.right[i] - fluxes.left[i]);
            worst = worst.max((after[i] - expected).abs());
        }
    }
    let pass = worst <= 1e-12;
    let detail = format!("worst per-step balance defect {worst:.2e} over 40 steps");
    report("6e moment conservation", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_6f_basis_rotation_invariance() {
    use nalgebra::DMatrix;
    let p = problem();
    let grid = Arc::new(VelocityGrid::new(32).unwrap());
    let fem = FemOperators::assemble(&grid);
    let basis = legendre_basis(3, &grid).unwrap();

    // rotate the basis by an orthogonal matrix; the span is unchanged
    let theta = [0.7f64, -1.2, 0.4];
    let mut q = DMatrix::<f64>::identity(3, 3);
    for (k, &t) in theta.iter().enumerate() {
        let (i, j) = ((k) % 3, (k + 1) % 3);
        let mut g = DMatrix::<f64>::identity(3, 3);
        g[(i, i)] = t.cos();
        g[(j, j)] = t.cos();
        g[(i, j)] = -t.sin();
        g[(j, i)] = t.sin();
        q *= g;
    }
    let n = grid.n_nodes();
    let mut rotated_funcs = Vec::new();
    for col in 0..3 {
        let mut values = vec![0.0; n];
        for row in 0..3 {
            for (vi, v) in values.iter_mut().enumerate() {
                *v += basis.functions[row].values[vi] * q[(row, col)];
            }
        }
        rotated_funcs.push(NodalFunction::from_values(Arc::clone(&grid), values).unwrap());
    }
    let rotated = VelocityBasis {
        grid: Arc::clone(&grid),
        functions: rotated_funcs,
    };
    assert!(rotated.orthonormality_defect() < 1e-12);

    let sg = SpaceGrid::new(p.x_range, 24).unwrap();
    let times = default_comparison_times(p.t_end);
    let d1 = {
        let ops = reduced_operators(&basis, &fem).unwrap();
        let f = solve_moment_system(&p, &basis, &ops, &sg, &times, CFL).unwrap();
        spatial_density(&f, &basis, &fem).unwrap()
    };
    let d2 = {
        let ops = reduced_operators(&rotated, &fem).unwrap();
        let f = solve_moment_system(&p, &rotated, &ops, &sg, &times, CFL).unwrap();
        spatial_density(&f, &rotated, &fem).unwrap()
    };
    let mut worst = 0.0f64;
    for (a, b) in d1.values.iter().zip(&d2.values) {
        for (x, y) in a.iter().zip(b) {
            worst = worst.max((x - y).abs());
        }
    }
    let pass = worst <= 1e-9;
    let detail = format!("max density deviation {worst:.2e} under basis rotation");
    report("6f basis-rotation invariance", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_6g_absorption_decay_first_order() {
    // constant absorption, no diffusion: for isotropic uniform data the
    // interior density decays like 2 e^(-sigma t); explicit Euler converges
    // at first order in dt, so halving the step halves the error
    let sigma = 2.0;
    let p = KineticProblem {
        sigma_a: fpmr_core::problem::PiecewiseConstant::constant(sigma),
        temperature: fpmr_core::problem::PiecewiseConstant::constant(0.0),
        source: None,
        initial: InitialData::Constant(1.0),
        left_bc: BoundaryData::Constant(0.0),
        right_bc: BoundaryData::Constant(0.0),
        ..problem()
    };
    let grid = Arc::new(VelocityGrid::new(16).unwrap());
    let fem = FemOperators::assemble(&grid);
    let basis = legendre_basis(3, &grid).unwrap();
    let ops = reduced_operators(&basis, &fem).unwrap();
    let sg = SpaceGrid::new(p.x_range, 24).unwrap();
    let t_probe = 0.5;
    let exact = 2.0 * (-sigma * t_probe).exp();

    let mut errs = Vec::new();
    for cfl in [0.8, 0.4, 0.2] {
        let f = solve_moment_system(&p, &basis, &ops, &sg, &[t_probe], cfl).unwrap();
        let d = spatial_density(&f, &basis, &fem).unwrap();
        errs.push((d.values[0][12] - exact).abs()); // x = 1.5625, front-free
    }
    let rates: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    let pass = rates.iter().all(|&r| (1.6..=2.4).contains(&r));
    let listed = errs
        .iter()
        .map(|e| format!("{e:.3e}"))
        .collect::<Vec<_>>()
        .join(", ");
    let ratelist = rates
        .iter()
        .map(|r| format!("{r:.2}"))
        .collect::<Vec<_>>()
        .join(", ");
    let detail = format!("decay errors [{listed}], halving ratios [{ratelist}]");
    report("6g absorption decay order", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_6h_reference_velocity_mass_conservation() {
    // pure velocity diffusion on x-uniform data: the advection between
    // identical columns cancels, so per-column velocity mass is conserved
    // exactly by the zero-flux diffusion stencil
    let p = KineticProblem {
        sigma_a: fpmr_core::problem::PiecewiseConstant::constant(0.0),
        temperature: fpmr_core::problem::PiecewiseConstant::constant(6.0),
        source: None,
        initial: InitialData::Profile(Arc::new(|_x: f64, v: f64| 1.0 + 0.5 * (2.0 * v).sin())),
        left_bc: BoundaryData::Constant(0.0),
        right_bc: BoundaryData::Constant(0.0),
        ..problem()
    };
    let mut run = ReferenceRun::new(&p, 64, 32).unwrap();
    let probe = 32; // interior column, outside the advected boundary fronts
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let before = run.column_mass(probe);
        run.step(0.04);
        let after = run.column_mass(probe);
        worst = worst.max((after - before).abs());
    }
    let pass = worst <= 1e-10;
    let detail = format!("worst per-step velocity-mass drift {worst:.2e} over 20 steps");
    report("6h reference mass conservation", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_6i_end_to_end_byte_determinism() {
    use std::process::Command;
    let run = |dir: &std::path::Path| {
        let status = Command::new(env!("CARGO_BIN_EXE_fpmr"))
            .args([
                "greedy",
                "--h-exponents",
                "3",
                "--ref-exponent",
                "4",
                "--m-max",
                "3",
                "--source",
                "pde",
                "--n-sample",
                "30",
                "--seed",
                "42",
                "--out",
            ])
            .arg(dir)
            .env("RUST_LOG", "warn")
            .status()
            .unwrap();
        assert!(status.success());
        let mut files: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        files.sort();
        files
            .into_iter()
            .map(|f| (f.file_name().unwrap().to_owned(), std::fs::read(&f).unwrap()))
            .collect::<Vec<_>>()
    };
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let a = run(d1.path());
    let b = run(d2.path());
    let pass = a == b;
    let detail = format!(
        "{} artifacts, byte-identical across two seeded runs: {pass}",
        a.len()
    );
    report("6i byte determinism", pass, &detail);
    assert!(pass, "{detail}");
}
