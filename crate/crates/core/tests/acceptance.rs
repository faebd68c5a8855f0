//! Acceptance criteria C1–C9. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.
//!
//! C9 uses real MNIST when `ADVBOUND_MNIST_DIR` holds the t10k IDX pair and a
//! synthetic IDX stand-in otherwise. `ADVBOUND_MNIST_EPS` overrides the ε.

mod common;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use advbound::complex::{build_complex, count_by_order, ComplexOptions, InteractionComplex};
use advbound::data::{load_idx, synth_gaussian, triangle_fixture, write_idx_images, write_idx_labels, SIX_CLASS_MEANS};
use advbound::lp::{assemble_lp, solve_lp, LpOptions, LpStatus};
use advbound::oracle::{exact_lp, rational_marginals, uniform_rational_marginals, MAX_ORACLE_COLUMNS};
use advbound::sinkhorn::{
    entropic_solve_observed, iteration_bound, round_couplings, row_masses, schedule, smooth_marginals, CostModel,
    CouplingFamily, EntropicOptions, IterationEvent,
};
use advbound::truncation::barycenter_bound;
use advbound::{LabeledPointCloud, Metric};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{complex, lp, random_cloud};

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn c1() -> Outcome {
    let start = Instant::now();
    let cloud = triangle_fixture();
    let mut got = Vec::new();
    for (eps, want) in [(0.40, 0.0), (0.55, 0.25), (0.80, 1.0 / 3.0), (1.05, 0.5)] {
        let risk = lp(&cloud, &complex(&cloud, eps, 3)).risk_lower_bound;
        check((risk - want).abs() <= 1e-6, format!("eps {eps}: risk {risk}, want {want}"))?;
        got.push(risk);
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("risks {got:?} in {elapsed:?}"))
}

fn c2() -> Outcome {
    let cloud = triangle_fixture();
    let c2 = complex(&cloud, 0.8, 2);
    let c3 = complex(&cloud, 0.8, 3);
    let l2 = lp(&cloud, &c2);
    let l3 = lp(&cloud, &c3);
    let exact = |c: &InteractionComplex| {
        let p = assemble_lp(c, &cloud).unwrap();
        exact_lp(&p, &uniform_rational_marginals(6)).unwrap().objective
    };
    let (e2, e3) = (exact(&c2), exact(&c3));
    let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    check(e2 == r(3, 4) && e3 == r(2, 3), format!("oracle objectives {e2} and {e3}"))?;
    check((l2.objective - 0.75).abs() <= 1e-9, format!("level-2 objective {}", l2.objective))?;
    check((l3.objective - 2.0 / 3.0).abs() <= 1e-9, format!("level-3 objective {}", l3.objective))?;
    let gap = l2.objective - l3.objective;
    let bound = barycenter_bound(&l3.mass_by_order, 2).unwrap();
    check((gap - 1.0 / 12.0).abs() <= 1e-9, format!("gap {gap}"))?;
    check((gap - bound).abs() <= 1e-9, format!("gap {gap} vs bound {bound}"))?;
    Ok(format!("gap {gap:.12}, bound {bound:.12}"))
}

fn c3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 200 {
        let cloud = random_cloud(&mut rng, 8, 3);
        let eps = rng.random_range(0.05..1.5);
        let c = complex(&cloud, eps, 3);
        if c.total_count() > MAX_ORACLE_COLUMNS {
            continue;
        }
        let problem = assemble_lp(&c, &cloud).unwrap();
        let exact = exact_lp(&problem, &rational_marginals(problem.marginals()).unwrap())
            .map_err(|e| format!("oracle: {e}"))?;
        let s = solve_lp(&problem, &LpOptions::default()).map_err(|e| format!("simplex: {e}"))?;
        let diff = (s.objective - exact.objective_f64()).abs();
        worst = worst.max(diff);
        check(diff <= 1e-7, format!("instance {done}: {} vs {}", s.objective, exact.objective))?;
        done += 1;
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(30), format!("took {elapsed:?}"))?;
    Ok(format!("200 instances, max |diff| {worst:.2e}, {elapsed:?}"))
}

/// Per-run data C6 inspects.
struct SinkhornRun {
    iterations: usize,
    bound: f64,
    worst_decrement: f64,
    decrement_failures: Vec<String>,
}

fn c4() -> (Outcome, Vec<SinkhornRun>) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4);
    let delta = 0.1;
    let mut runs = Vec::new();
    let mut worst_value = 0.0f64;
    let mut worst_marginal = 0.0f64;
    let mut failure = None;
    for i in 0..50 {
        let cloud = random_cloud(&mut rng, 6, 3);
        let eps = rng.random_range(0.1..1.2);
        let c = complex(&cloud, eps, 3);
        let model = CostModel::adversarial(&c, &cloud).unwrap();
        let (eta, dp) = schedule(&model, delta).unwrap();
        let smoothed = smooth_marginals(&model, &row_masses(&cloud), dp);
        let bound = iteration_bound(&model, &smoothed, eta, dp / 2.0).unwrap();
        let mut worst_decrement = 0.0f64;
        let mut decrement_failures = Vec::new();
        let mut observer = |e: &IterationEvent<'_>| {
            let gap = (e.dual_change + e.kl).abs();
            let floor = 64.0 * f64::EPSILON * e.dual_change_scale;
            if e.kl > 0.0 {
                worst_decrement = worst_decrement.max((gap - floor).max(0.0) / e.kl);
            }
            if gap > 1e-8 * e.kl + floor {
                decrement_failures.push(format!("iteration {}: ΔG {} vs KL {}", e.iteration, e.dual_change, e.kl));
            }
        };
        let (pi, report) =
            match entropic_solve_observed(&cloud, &c, &model, delta, &EntropicOptions::default(), Some(&mut observer)) {
                Ok(r) => r,
                Err(e) => return (Err(format!("instance {i}: {e}")), runs),
            };
        runs.push(SinkhornRun {
            iterations: report.iterations,
            bound,
            worst_decrement,
            decrement_failures,
        });
        let exact = lp(&cloud, &c).objective;
        let gap = (pi.value() - exact).abs();
        let marginal = pi.marginal_error(&smoothed);
        worst_value = worst_value.max(gap);
        worst_marginal = worst_marginal.max(marginal);
        if failure.is_none() && (gap > delta || marginal > 1e-10 || !report.converged) {
            failure = Some(format!(
                "instance {i}: value {} vs LP {exact}, marginal error {marginal:.2e}, converged {}",
                pi.value(),
                report.converged
            ));
        }
    }
    let elapsed = start.elapsed();
    if let Some(f) = failure {
        return (Err(f), runs);
    }
    if elapsed >= Duration::from_secs(300) {
        return (Err(format!("took {elapsed:?}")), runs);
    }
    (
        Ok(format!(
            "50 instances, max |value − LP| {worst_value:.2e}, max marginal error {worst_marginal:.2e}, {elapsed:?}"
        )),
        runs,
    )
}

fn c5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC5);
    let mut worst_marginal = 0.0f64;
    let mut worst_slack = f64::INFINITY;
    for i in 0..200 {
        let cloud = random_cloud(&mut rng, 10, 4);
        let eps = rng.random_range(0.1..1.5);
        let level = rng.random_range(1..=4);
        let c = complex(&cloud, eps, level);
        let model = CostModel::adversarial(&c, &cloud).unwrap();
        let mu = row_masses(&cloud);
        let spread = rng.random_range(0.5..8.0);
        let masses: Vec<f64> = (0..model.num_tuples())
            .map(|_| (rng.random_range(-spread..0.0f64)).exp() * rng.random_range(0.0..0.3))
            .collect();
        let pi = CouplingFamily::from_masses(&model, &masses).unwrap();
        let rounded = round_couplings(&pi, &model, &mu).map_err(|e| format!("case {i}: {e}"))?;
        let marginal = rounded.marginal_error(&mu);
        let moved = rounded.l1_distance(&pi);
        let allowed = model.level() as f64 * pi.marginal_error(&mu);
        worst_marginal = worst_marginal.max(marginal);
        worst_slack = worst_slack.min(allowed - moved);
        check(marginal <= 1e-12, format!("case {i}: marginal error {marginal:e}"))?;
        check(moved <= allowed + 1e-9, format!("case {i}: moved {moved} > {allowed}"))?;
    }
    Ok(format!(
        "200 cases, max marginal error {worst_marginal:.2e}, min bound slack {worst_slack:.2e}"
    ))
}

fn c6(runs: &[SinkhornRun]) -> Outcome {
    if runs.len() < 50 {
        return Err(format!("only {} of 50 criterion-4 runs completed", runs.len()));
    }
    let mut worst_ratio = 0.0f64;
    let mut worst_rel = 0.0f64;
    let mut updates = 0;
    for (i, r) in runs.iter().enumerate() {
        if let Some(f) = r.decrement_failures.first() {
            return Err(format!("run {i}: {f} ({} failures)", r.decrement_failures.len()));
        }
        check(
            (r.iterations as f64) <= r.bound,
            format!("run {i}: {} iterations exceed bound {}", r.iterations, r.bound),
        )?;
        worst_ratio = worst_ratio.max(r.iterations as f64 / r.bound);
        worst_rel = worst_rel.max(r.worst_decrement);
        updates += r.iterations;
    }
    Ok(format!(
        "{updates} updates, max relative decrement error above noise {worst_rel:.2e}, max iterations/bound {worst_ratio:.2e}"
    ))
}

struct Sweep {
    eps: Vec<f64>,
    /// `risk[level - 1][i]`.
    risk: Vec<Vec<f64>>,
    counts: Vec<std::collections::BTreeMap<usize, usize>>,
}

fn sweep() -> Result<(Sweep, Duration), String> {
    let start = Instant::now();
    let means: Vec<Vec<f64>> = SIX_CLASS_MEANS.iter().map(|m| m.to_vec()).collect();
    let cloud = synth_gaussian(&means, 20, 1.0, 2024).map_err(|e| e.to_string())?;
    let eps: Vec<f64> = (0..12).map(|i| 0.1 + 1.1 * i as f64 / 11.0).collect();
    let mut risk = vec![Vec::new(); 3];
    let mut counts = Vec::new();
    for &e in &eps {
        let full = build_complex(&cloud, e, Metric::L2, 3, &ComplexOptions::default()).map_err(|e| e.to_string())?;
        counts.push(count_by_order(&full));
        for level in 1..=3 {
            let c = if level == 3 {
                full.clone()
            } else {
                build_complex(&cloud, e, Metric::L2, level, &ComplexOptions::default()).map_err(|e| e.to_string())?
            };
            let s = lp(&cloud, &c);
            if s.status != LpStatus::Optimal {
                return Err(format!("eps {e}, level {level}: {}", s.status.name()));
            }
            risk[level - 1].push(s.risk_lower_bound);
        }
    }
    Ok((Sweep { eps, risk, counts }, start.elapsed()))
}

fn c7(s: &Sweep, elapsed: Duration) -> Outcome {
    for (l, row) in s.risk.iter().enumerate() {
        for i in 1..row.len() {
            check(
                row[i] >= row[i - 1] - 1e-9,
                format!("level {}: risk drops from {} to {} at eps {}", l + 1, row[i - 1], row[i], s.eps[i]),
            )?;
        }
    }
    for i in 0..s.eps.len() {
        check(s.risk[0][i].abs() <= 1e-12, format!("level-1 risk {} at eps {}", s.risk[0][i], s.eps[i]))?;
        for l in 1..3 {
            check(
                s.risk[l][i] >= s.risk[l - 1][i] - 1e-9,
                format!("eps {}: level {} risk below level {}", s.eps[i], l + 1, l),
            )?;
        }
    }
    for i in 1..s.counts.len() {
        for (k, n) in &s.counts[i - 1] {
            let next = s.counts[i].get(k).copied().unwrap_or(0);
            check(*n <= next, format!("order {k}: count drops from {n} to {next} at eps {}", s.eps[i]))?;
        }
    }
    check(elapsed < Duration::from_secs(120), format!("took {elapsed:?}"))?;
    let last = s.counts.last().unwrap();
    Ok(format!(
        "12 eps × 3 levels, level-3 risk {:.4}..{:.4}, counts at eps 1.2 {last:?}, {elapsed:?}",
        s.risk[2][0],
        s.risk[2][11]
    ))
}

fn c8(s: &Sweep) -> Outcome {
    let mut worst = 0.0f64;
    let mut cells = 0;
    for i in 0..s.eps.len() {
        let (r2, r3) = (s.risk[1][i], s.risk[2][i]);
        if r3 < 0.3 {
            cells += 1;
            worst = worst.max((r3 - r2).abs());
            check((r3 - r2).abs() <= 0.02, format!("eps {}: level 3 {r3}, level 2 {r2}", s.eps[i]))?;
        }
    }
    Ok(format!("{cells} cells below 0.3, max |risk3 − risk2| {worst:.4}"))
}

fn mnist_pair(dir: &Path) -> Option<(PathBuf, PathBuf)> {
    let candidates = [
        ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
        ("t10k-images.idx3-ubyte", "t10k-labels.idx1-ubyte"),
    ];
    candidates
        .iter()
        .map(|(i, l)| (dir.join(i), dir.join(l)))
        .find(|(i, l)| i.exists() && l.exists())
}

/// Ten noisy class templates on a 28×28 grid, written as an IDX pair.
fn synthetic_idx(dir: &Path) -> (PathBuf, PathBuf) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC9);
    let base: Vec<f64> = (0..784).map(|_| rng.random_range(40.0..215.0)).collect();
    let templates: Vec<Vec<f64>> = (0..10)
        .map(|_| base.iter().map(|b| b + rng.random_range(-30.0..30.0)).collect())
        .collect();
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..100 {
        for (c, t) in templates.iter().enumerate() {
            images.push(t.iter().map(|v| (v + rng.random_range(-25.0..25.0)).clamp(0.0, 255.0) as u8).collect());
            labels.push(c as u8);
        }
    }
    let (img, lab) = (dir.join("images.idx"), dir.join("labels.idx"));
    write_idx_images(&img, &images, 28, 28).unwrap();
    write_idx_labels(&lab, &labels).unwrap();
    (img, lab)
}

/// Half the 0.2% quantile of cross-class ℓ∞ distances, so that a small
/// fraction of pairs becomes feasible.
fn moderate_eps(cloud: &LabeledPointCloud) -> f64 {
    let mut d = Vec::new();
    for i in 0..cloud.len() {
        for j in i + 1..cloud.len() {
            if cloud.label(i) != cloud.label(j) {
                d.push(advbound::metric::distance(cloud.point(i), cloud.point(j), Metric::LInf).unwrap());
            }
        }
    }
    d.sort_by(f64::total_cmp);
    d[d.len() / 500] / 2.0
}

fn c9() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (source, (img, lab)) = match std::env::var_os("ADVBOUND_MNIST_DIR").and_then(|d| mnist_pair(Path::new(&d))) {
        Some(pair) => ("MNIST", pair),
        None => ("synthetic IDX", synthetic_idx(tmp.path())),
    };
    let (cloud, _) = load_idx(&img, &lab, Some(100), 0).map_err(|e| e.to_string())?;
    check(cloud.len() == 1000 && cloud.num_classes() == 10, format!("loaded {} points", cloud.len()))?;
    let eps = match std::env::var("ADVBOUND_MNIST_EPS") {
        Ok(v) => v.parse::<f64>().map_err(|e| format!("ADVBOUND_MNIST_EPS: {e}"))?,
        Err(_) => moderate_eps(&cloud),
    };
    let c = build_complex(&cloud, eps, Metric::LInf, 2, &ComplexOptions::default()).map_err(|e| e.to_string())?;
    let problem = assemble_lp(&c, &cloud).map_err(|e| e.to_string())?;
    let lp_start = Instant::now();
    let exact = solve_lp(
        &problem,
        &LpOptions {
            time_limit: Some(Duration::from_secs(600)),
            ..Default::default()
        },
    )
    .map_err(|e| format!("LP: {e}"))?;
    let lp_time = lp_start.elapsed();
    check(exact.status == LpStatus::Optimal, format!("LP status {}", exact.status.name()))?;
    let model = CostModel::adversarial(&c, &cloud).map_err(|e| e.to_string())?;
    let opts = EntropicOptions {
        eta: Some(0.01),
        delta_prime: Some(1e-3),
        smooth: false,
        ..Default::default()
    };
    let sk_start = Instant::now();
    let (pi, report) =
        entropic_solve_observed(&cloud, &c, &model, 0.1, &opts, None).map_err(|e| format!("Sinkhorn: {e}"))?;
    let sk_time = sk_start.elapsed();
    let feasible = pi.marginal_error(&row_masses(&cloud));
    check(feasible <= 1e-9, format!("rounded family violates marginals by {feasible:e}"))?;
    check(
        report.risk_lower_bound <= exact.risk_lower_bound + 1e-6,
        format!("Sinkhorn risk {} > LP risk {}", report.risk_lower_bound, exact.risk_lower_bound),
    )?;
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(600), format!("took {elapsed:?}"))?;
    Ok(format!(
        "{source}, eps {eps}, {} interactions, LP risk {:.6} ({lp_time:?}), Sinkhorn risk {:.6} ({} iterations, {sk_time:?})",
        c.total_count(),
        exact.risk_lower_bound,
        report.risk_lower_bound,
        report.iterations
    ))
}

fn report(name: &str, outcome: Outcome, failed: &mut usize) {
    match outcome {
        Ok(detail) => println!("{name} PASS  {detail}"),
        Err(detail) => {
            *failed += 1;
            println!("{name} FAIL  {detail}");
        }
    }
}

fn main() {
    let mut failed = 0;
    report("C1", c1(), &mut failed);
    report("C2", c2(), &mut failed);
    report("C3", c3(), &mut failed);
    let (outcome, runs) = c4();
    report("C4", outcome, &mut failed);
    report("C5", c5(), &mut failed);
    report("C6", c6(&runs), &mut failed);
    match sweep() {
        Ok((s, elapsed)) => {
            report("C7", c7(&s, elapsed), &mut failed);
            report("C8", c8(&s), &mut failed);
        }
        Err(e) => {
            report("C7", Err(e.clone()), &mut failed);
            report("C8", Err(e), &mut failed);
        }
    }
    report("C9", c9(), &mut failed);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
