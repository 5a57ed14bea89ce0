//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantities. Run with
//! `cargo test --test acceptance -- --nocapture` to see them.

use std::sync::Arc;
use std::time::Instant;

use optlab::harness::{
    run_convergence_sweep, run_invariance_suite, run_quadratic_table, ExperimentConfig,
    ProblemSpec, SweepAlgo,
};
use optlab::linalg::{
    expm_skew, mode_reshape_rotate, norm_linf, random_orthogonal, sample_gaussian_vector,
    sample_skew, DenseMatrix,
};
use optlab::losses::{
    noisy_oracle, quadratic_oracle, rotated_oracle, LossOracle, NoiseSpec, QuadraticSpec,
};
use optlab::optim::{momentum_ratio_check, Partition};
use optlab::probes::{
    blockwise_smoothness, concentration_bound, estimate_norm11, quadratic_form_check, spectral_norm,
};
use optlab::rng::RngStream;
use optlab::rotation::{randperm_compose, RotationSpec};

/// The analytic (1,1)-norm of the default problem divided by its dimension:
/// `[10 + Σ_{k=1}^{990} k⁻²] / 1000`.
fn analytic_norm11_over_d() -> f64 {
    let sum: f64 = (1..=990).map(|k| 1.0 / (k as f64 * k as f64)).sum();
    (10.0 + sum) / 1000.0
}

#[test]
fn acceptance_1_table1_geometry() {
    let start = Instant::now();
    let sigma = ProblemSpec::Table1Default
        .build(RngStream::root(0))
        .unwrap();
    let d = sigma.rows();
    assert_eq!(d, 1000);

    let spectral = spectral_norm(|v| sigma.matvec(v), d, 60, 1e-8, RngStream::root(11)).unwrap();
    assert!(
        (spectral.value - 1.0).abs() <= 1e-6,
        "spectral norm {} should be 1 ± 1e-6",
        spectral.value
    );

    let estimate = estimate_norm11(|v| sigma.matvec(v), d, 2000, RngStream::root(12)).unwrap();
    let over_d = estimate.value / d as f64;
    let analytic = analytic_norm11_over_d();
    assert!(
        (analytic - 0.011644).abs() < 5e-7,
        "analytic value {analytic} disagrees with 0.011644"
    );
    let rel = (over_d - analytic).abs() / analytic;
    assert!(
        rel <= 0.05,
        "norm11/d estimate {over_d} is {rel:.3} relative from analytic {analytic}"
    );
    let ratio = over_d / 0.00582;
    assert!(
        (1.9..=2.1).contains(&ratio),
        "ratio to published number is {ratio}, expected 2.0 ± 0.1"
    );

    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() <= 60.0,
        "geometry measurements took {elapsed:.1?}, budget is 60 s"
    );
    println!(
        "ACCEPTANCE 1 PASS: spectral {:.8}, norm11/d {:.6} (analytic {:.6}, rel err {:.4}, ratio-to-published {:.3}) in {:.1?}",
        spectral.value, over_d, analytic, rel, ratio, elapsed
    );
}

#[test]
fn acceptance_2_table1_dynamics() {
    let cfg = ExperimentConfig::default(); // table1 problem, T = 100, default grids, seed 0
    let result = run_quadratic_table(&cfg).unwrap();
    assert!(result.errors.is_empty(), "cell errors: {:?}", result.errors);

    let max_t = cfg
        .rotations
        .iter()
        .filter_map(|r| r.t_value())
        .fold(0.0, f64::max);

    let adam_unrotated = result.final_loss("adam", 0.0, 0.0, 0.0).unwrap();
    let adam_rotated = result.final_loss("adam", 0.0, 0.0, max_t).unwrap();
    let adasgd = result.final_loss("adasgd", 0.0, 0.0, 0.0).unwrap();

    assert!(
        adam_unrotated * 5.0 <= adasgd,
        "unrotated Adam ({adam_unrotated:.3e}) should beat AdaSGD ({adasgd:.3e}) by ≥ 5×"
    );
    assert!(
        adam_rotated >= 0.8 * adasgd,
        "most-rotated Adam ({adam_rotated:.3e}) should be ≥ 0.8× AdaSGD ({adasgd:.3e})"
    );

    let rho_plain = result.spearman_norm_vs_loss("adam", 0.0, 0.0);
    let rho_momentum = result.spearman_norm_vs_loss("adam", 0.9, 0.99);
    assert!(
        rho_plain >= 0.9,
        "Spearman(norm11/d, loss) = {rho_plain} for β₁=β₂=0"
    );
    assert!(
        rho_momentum >= 0.9,
        "Spearman(norm11/d, loss) = {rho_momentum} for β₁=0.9, β₂=0.99"
    );
    println!(
        "ACCEPTANCE 2 PASS: unrotated adam {:.3e} vs adasgd {:.3e} ({:.1}×), rotated adam {:.3e} ({:.2}× adasgd), Spearman {:.3}/{:.3}",
        adam_unrotated,
        adasgd,
        adasgd / adam_unrotated,
        adam_rotated,
        adam_rotated / adasgd,
        rho_plain,
        rho_momentum
    );
}

#[test]
fn acceptance_3_signgd_bound() {
    let mut cfg = ExperimentConfig::default();
    cfg.problem = ProblemSpec::RandomPsd { dim: 50 };
    cfg.seeds = (0..20).collect();
    cfg.t_grid = vec![64, 256, 1024, 4096];
    cfg.sweep_algo = SweepAlgo::Signgd;
    cfg.noise_sigma = 0.0;

    let result = run_convergence_sweep(&cfg).unwrap();
    assert!(result.errors.is_empty(), "{:?}", result.errors);
    assert_eq!(result.points.len(), 80);
    let violations = result.violations();
    assert_eq!(
        violations, 0,
        "bound violated on {violations} (T, seed) points"
    );
    assert!(
        (-0.6..=-0.4).contains(&result.slope),
        "log-log slope {} outside [−0.6, −0.4]",
        result.slope
    );
    println!(
        "ACCEPTANCE 3 PASS: 80/80 trajectories below √(2HΔ₀/T), slope {:.4}",
        result.slope
    );
}

#[test]
fn acceptance_4_rmsprop_bound() {
    let mut cfg = ExperimentConfig::default();
    cfg.problem = ProblemSpec::RandomPsd { dim: 10 };
    cfg.seeds = (0..20).collect();
    cfg.t_grid = vec![256, 1024];
    cfg.sweep_algo = SweepAlgo::Rmsprop;
    cfg.noise_sigma = 0.1;
    cfg.sweep_v0 = 1.0;

    let result = run_convergence_sweep(&cfg).unwrap();
    assert!(result.errors.is_empty(), "{:?}", result.errors);
    let means = result.mean_by_t();
    assert_eq!(means.len(), 2);
    for (t, emp, bound) in &means {
        assert!(
            emp <= bound,
            "T = {t}: mean min ‖∇L‖₁ over (T/2, T] is {emp:.4e}, bound {bound:.4e}"
        );
    }
    println!(
        "ACCEPTANCE 4 PASS: {}",
        means
            .iter()
            .map(|(t, e, b)| format!("T={t}: {e:.3e} ≤ {b:.3e}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
}

#[test]
fn acceptance_5_concentration() {
    let d = 50;
    let n = 200;
    let trials = 500;
    let eps = 0.3;

    // Fixed random symmetric matrix.
    let stream = RngStream::root(2024);
    let g = DenseMatrix::from_fn(d, d, {
        let mut rng = stream.rng();
        move |_, _| {
            use rand::Rng;
            rng.sample::<f64, _>(rand_distr::StandardNormal)
        }
    });
    let a = g.symmetrized();
    let exact = a.sum_abs();

    let bound = concentration_bound(n, d, eps).unwrap();
    let mut failures = 0usize;
    let mut sum = 0.0;
    for trial in 0..trials {
        let est = estimate_norm11(
            |v| a.matvec(v),
            d,
            n,
            RngStream::root(777).substream(trial as u64),
        )
        .unwrap();
        sum += est.value;
        if (est.value - exact).abs() >= eps * exact {
            failures += 1;
        }
    }
    let freq = failures as f64 / trials as f64;
    assert!(
        freq <= bound,
        "failure frequency {freq} exceeds the concentration bound {bound}"
    );
    assert!(freq <= 0.05, "failure frequency {freq} exceeds 0.05");
    let mean = sum / trials as f64;
    let mean_rel = (mean - exact).abs() / exact;
    assert!(
        mean_rel <= 0.03,
        "mean estimate {mean} is {mean_rel:.4} relative from exact {exact}"
    );
    println!(
        "ACCEPTANCE 5 PASS: {failures}/{trials} failures at ε = {eps} (bound {bound:.3}), mean rel err {mean_rel:.4}"
    );
}

#[test]
fn acceptance_6_invariance_suite() {
    let mut cfg = ExperimentConfig::default();
    cfg.invariance_checks = 50; // 50 deterministic + 50 coupled-noise per pair
    cfg.invariance_dim_max = 50;
    cfg.steps = 100;

    let result = run_invariance_suite(&cfg).unwrap();
    for row in result.rows.iter().filter(|r| r.required) {
        assert!(
            row.passed,
            "{} × {} ({}) deviation {:.3e} vs threshold {:.0e}",
            row.optimizer, row.transform, row.noise, row.deviation, row.threshold
        );
    }

    let rotation_checks = |opt: &str| {
        result
            .rows
            .iter()
            .filter(|r| r.optimizer == opt && r.transform == "rotation" && r.required)
            .count()
    };
    assert_eq!(rotation_checks("adasgd"), 100);
    assert_eq!(rotation_checks("sgd"), 100);
    let perm_checks = |opt: &str| {
        result
            .rows
            .iter()
            .filter(|r| r.optimizer == opt && r.transform == "permutation")
            .count()
    };
    assert_eq!(perm_checks("adam"), 100);
    assert_eq!(perm_checks("signgd"), 100);

    let adasgd_dev = result.max_deviation("adasgd", "rotation");
    let sgd_dev = result.max_deviation("sgd", "rotation");
    assert!(adasgd_dev <= 1e-7 && sgd_dev <= 1e-7);
    let adam_dev = result.max_deviation("adam", "permutation");
    let signgd_dev = result.max_deviation("signgd", "permutation");
    assert!(adam_dev <= 1e-9 && signgd_dev <= 1e-9);

    for opt in ["adam", "signgd"] {
        let witness = result
            .rows
            .iter()
            .find(|r| r.optimizer == opt && r.transform == "counterexample")
            .unwrap();
        assert!(
            witness.deviation > 1e-2,
            "{opt} counterexample deviation {} should exceed 1e-2",
            witness.deviation
        );
    }
    println!(
        "ACCEPTANCE 6 PASS: rotation dev ≤ {:.2e}/{:.2e} (adasgd/sgd), permutation dev ≤ {:.2e}/{:.2e} (adam/signgd), counterexamples {:.3}/{:.3}",
        adasgd_dev,
        sgd_dev,
        adam_dev,
        signgd_dev,
        result.max_deviation("adam", "counterexample"),
        result.max_deviation("signgd", "counterexample"),
    );
}

#[test]
fn acceptance_7_lemma_suites() {
    use rand::Rng;

    // Moving-average ratio inequality on 1000 random admissible sequences.
    let mut worst_slack = f64::INFINITY;
    for trial in 0..1000u64 {
        let mut rng = RngStream::root(31).substream(trial).rng();
        let t_len = rng.gen_range(1..=200);
        let beta2 = rng.gen_range(0.5..0.999);
        let v0 = if rng.gen_bool(0.2) {
            0.0
        } else {
            rng.gen_range(0.0..2.0)
        };
        let mut g = Vec::with_capacity(t_len);
        let mut v = vec![v0];
        for s in 0..t_len {
            let gs: f64 = rng.gen_range(-3.0..3.0);
            // equality recurrence plus nonnegative slack keeps admissibility
            let slack = if rng.gen_bool(0.5) {
                0.0
            } else {
                rng.gen_range(0.0..0.5)
            };
            let mut next = beta2 * v[s] + (1.0 - beta2) * (gs * gs + slack);
            if s == 0 && next == 0.0 {
                next = 1e-6; // v₁ must be positive
            }
            g.push(gs);
            v.push(next);
        }
        let check = momentum_ratio_check(&g, &v, beta2).unwrap();
        assert!(
            check.lhs <= check.rhs + 1e-9,
            "trial {trial}: lhs {} > rhs {}",
            check.lhs,
            check.rhs
        );
        worst_slack = worst_slack.min(check.rhs - check.lhs);
    }

    // Quadratic-form comparison on 1000 random (A, Φ, Δ) with d ≤ 20.
    let mut worst_gap = f64::INFINITY;
    for trial in 0..1000u64 {
        let stream = RngStream::root(37).substream(trial);
        let mut rng = stream.rng();
        let d = rng.gen_range(1..=20);
        let g = DenseMatrix::from_fn(d, d, |_, _| rng.sample(rand_distr::StandardNormal));
        let a = g.symmetrized();
        let partition = match trial % 3 {
            0 => Partition::adam(d),
            1 => Partition::adasgd(d),
            _ => {
                let mut sizes = Vec::new();
                let mut left = d;
                while left > 0 {
                    let s = rng.gen_range(1..=left);
                    sizes.push(s);
                    left -= s;
                }
                Partition::blocks(&sizes).unwrap()
            }
        };
        let h = blockwise_smoothness(&a, &partition).unwrap();
        let delta = sample_gaussian_vector(d, stream.substream(1));
        let check = quadratic_form_check(&a, &partition, &h, &delta).unwrap();
        assert!(
            check.holds,
            "trial {trial}: ΔᵀAΔ = {} exceeds Σ_b H_b/d_b ‖Δ_b‖² = {}",
            check.lhs,
            check.rhs
        );
        worst_gap = worst_gap.min(check.rhs - check.lhs);
    }
    println!(
        "ACCEPTANCE 7 PASS: 1000/1000 ratio sequences (min slack {worst_slack:.3e}), 1000/1000 quadratic-form checks (min gap {worst_gap:.3e})"
    );
}

#[test]
fn acceptance_8_numerical_kernels() {
    use rand::Rng;

    // Matrix exponential orthogonality over 100 random skew matrices.
    let mut worst_ortho = 0.0_f64;
    for trial in 0..100u64 {
        let stream = RngStream::root(41).substream(trial);
        let mut rng = stream.rng();
        let d = rng.gen_range(2..=50);
        let t = rng.gen_range(-2.0..2.0);
        let a = sample_skew(d, stream.substream(1));
        let r = expm_skew(&a, t).unwrap();
        worst_ortho = worst_ortho.max(r.orthogonality_error());
    }
    assert!(
        worst_ortho <= 1e-10,
        "worst orthogonality error {worst_ortho:.3e}"
    );

    // RandPerm^k round trips at d = 64.
    let mut worst_rt = 0.0_f64;
    for k in 1..=3 {
        let rot = randperm_compose(k, 64, (4, 4, 4), RngStream::root(43).substream(k as u64))
            .unwrap();
        let x = sample_gaussian_vector(64, RngStream::root(44).substream(k as u64));
        let back = rot.apply_inverse(&rot.apply(&x).unwrap()).unwrap();
        let err = x
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        worst_rt = worst_rt.max(err);
    }
    assert!(worst_rt <= 1e-10, "worst round-trip error {worst_rt:.3e}");

    // Finite-difference checks on all oracle kinds at 100 random points.
    let mut worst_grad = 0.0_f64;
    let mut worst_hvp = 0.0_f64;
    for trial in 0..100u64 {
        let stream = RngStream::root(47).substream(trial);
        let mut rng = stream.rng();
        let d = rng.gen_range(2..=10);
        let g = DenseMatrix::from_fn(d, d, |_, _| rng.sample(rand_distr::StandardNormal));
        let a = g.symmetrized();
        let base: Arc<dyn LossOracle> =
            Arc::new(quadratic_oracle(QuadraticSpec::new(a).unwrap()));
        let oracle: Arc<dyn LossOracle> = match trial % 3 {
            0 => base,
            1 => {
                let q = random_orthogonal(d, stream.substream(1));
                Arc::new(
                    rotated_oracle(base, RotationSpec::explicit(q).unwrap()).unwrap(),
                )
            }
            _ => Arc::new(
                noisy_oracle(base, NoiseSpec::uniform(d, 0.5).unwrap()).unwrap(),
            ),
        };
        let x = sample_gaussian_vector(d, stream.substream(2));
        let grad = oracle.grad(&x);
        let h = 1e-5 * (1.0 + norm_linf(&x));
        let scale = 1.0 + norm_linf(&grad);
        for i in 0..d {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (oracle.value(&xp) - oracle.value(&xm)) / (2.0 * h);
            worst_grad = worst_grad.max((fd - grad[i]).abs() / scale);
        }

        let v = sample_gaussian_vector(d, stream.substream(3));
        let hv = oracle.hvp(&x, &v);
        let (mut xp, mut xm) = (x.clone(), x.clone());
        for i in 0..d {
            xp[i] += h * v[i];
            xm[i] -= h * v[i];
        }
        let (gp, gm) = (oracle.grad(&xp), oracle.grad(&xm));
        let hvp_scale = 1.0 + norm_linf(&hv);
        for i in 0..d {
            let fd = (gp[i] - gm[i]) / (2.0 * h);
            worst_hvp = worst_hvp.max((fd - hv[i]).abs() / hvp_scale);
        }
    }
    assert!(worst_grad <= 1e-5, "worst gradient FD error {worst_grad:.3e}");
    assert!(worst_hvp <= 1e-5, "worst HVP FD error {worst_hvp:.3e}");

    // Mode-product rotation preserves norms at the shapes the suite uses.
    let stream = RngStream::root(53);
    let x = sample_gaussian_vector(60, stream.substream(0));
    let q1 = random_orthogonal(3, stream.substream(1));
    let q2 = random_orthogonal(4, stream.substream(2));
    let q3 = random_orthogonal(5, stream.substream(3));
    let y = mode_reshape_rotate(&x, (3, 4, 5), &q1, &q2, &q3).unwrap();
    let norm_drift = (optlab::linalg::norm_l2(&x) - optlab::linalg::norm_l2(&y)).abs();
    assert!(norm_drift <= 1e-10);

    println!(
        "ACCEPTANCE 8 PASS: expm orthogonality ≤ {worst_ortho:.2e}, randperm round-trip ≤ {worst_rt:.2e}, grad FD ≤ {worst_grad:.2e}, hvp FD ≤ {worst_hvp:.2e}"
    );
}
