//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p bdclt-cli --test acceptance`.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use bdclt::chain::{build_chain, classify, BirthDeathChain, ChainSpec, Regime};
use bdclt::measure::{detailed_balance_residual, normalized_measure, stationary_weights, StationaryMeasure};
use bdclt::observable::{
    center, doubling_schedule, euler_lagrange_gradient, h1_functional, integrate_gradient,
    observable_from_cumulative, phi_star, sigma2_resolvent, CumulativeRule, Observable, ObservableSpec,
    SeriesVerdict,
};
use bdclt::simulate::{variance_growth, SimConfig};
use bdclt::spectral::{chen_delta, chen_delta_running, jacobi_matrix, spectral_report, witness_rayleigh};
use bdclt::tridiag::largest_eigenvalue;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

type Criterion = (&'static str, Option<Duration>, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn chain(spec: ChainSpec) -> BirthDeathChain {
    build_chain(spec).expect("valid chain")
}

fn lamperti_half() -> BirthDeathChain {
    chain(ChainSpec::lamperti(0.25, 0.5))
}

/// Dense symmetric tridiagonal top eigenvalue.
fn dense_top(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    let m = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if i + 1 == j {
            off[i]
        } else if j + 1 == i {
            off[j]
        } else {
            0.0
        }
    });
    SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn regime_trichotomy() -> Verdict {
    let mut failures = Vec::new();
    let mut expect = |spec: ChainSpec, want: Regime| {
        let got = classify(&spec);
        if got != want {
            failures.push(format!("{spec:?} -> {}", got.name()));
        }
    };
    for p in [0.2, 0.3, 0.45] {
        expect(ChainSpec::constant(p), Regime::PositiveRecurrentWithGap);
    }
    for alpha in [0.3, 0.5, 0.8] {
        expect(ChainSpec::lamperti(0.25, alpha), Regime::PositiveRecurrentNoGap);
    }
    for alpha in [1.5, 2.0] {
        expect(ChainSpec::lamperti(0.25, alpha), Regime::NullRecurrent);
    }
    expect(ChainSpec::lamperti(0.25, 1.0), Regime::Critical);
    verdict(failures.is_empty(), format!("9 chains, mismatches: {failures:?}"))
}

fn stationary_oracle() -> Verdict {
    let c = chain(ChainSpec::constant(1.0 / 3.0));
    let m = normalized_measure(&c).unwrap();
    let z = m.log_z().exp();
    let pi0 = m.pi(0);
    let mut worst: f64 = 0.0;
    for spec in [
        ChainSpec::constant(0.2),
        ChainSpec::constant(1.0 / 3.0),
        ChainSpec::constant(0.45),
        ChainSpec::lamperti(0.25, 0.3),
        ChainSpec::lamperti(0.25, 0.5),
        ChainSpec::lamperti(0.25, 0.8),
        ChainSpec::lamperti(0.4, 1.0),
        ChainSpec::table(vec![0.9, 0.1, 0.4, 0.3]),
    ] {
        let c = chain(spec);
        let m = normalized_measure(&c).unwrap();
        worst = worst.max(detailed_balance_residual(&c, &m));
    }
    let pass = (z - 4.0).abs() <= 1e-12 && (pi0 - 0.25).abs() <= 1e-12 && worst <= 1e-12;
    verdict(pass, format!("Z = {z:.15}, pi(0) = {pi0:.15}, max detailed-balance residual = {worst:.2e}"))
}

fn gap_ladder() -> Verdict {
    let c = chain(ChainSpec::constant(1.0 / 3.0));
    // dense cross-check of the reduced matrix for small sizes
    let mut oracle_gap: f64 = 0.0;
    for n in [8, 16, 32, 64] {
        let a = jacobi_matrix(&c, n);
        let off = &a.off_diagonal()[1..];
        let dense = dense_top(&vec![0.0; n - 1], off);
        let bisect = a.top_eigenvalue(Some(0)).unwrap();
        oracle_gap = oracle_gap.max((dense - bisect).abs());
    }
    let report = spectral_report(&c, &[500, 1000, 2000, 4000], 0).unwrap();
    let tops = &report.lambda1_raw;
    let monotone = tops.windows(2).all(|w| w[1] >= w[0]);
    let cauchy = (tops[3] - tops[2]).abs() < 1e-4;
    let last = tops[3];
    let delta = chen_delta(&c, 4000);
    let pass = oracle_gap < 1e-9
        && monotone
        && cauchy
        && (0.94..=0.9435).contains(&last)
        && delta.sup.is_finite()
        && delta.is_finite();
    verdict(
        pass,
        format!(
            "tops = {tops:?}, limit 2*sqrt(2)/3 = {:.6}, dense oracle gap = {oracle_gap:.1e}, delta {:.6} -> {:.6}",
            2.0 * 2f64.sqrt() / 3.0,
            delta.half_sup,
            delta.sup
        ),
    )
}

fn no_gap_regime() -> Verdict {
    let c = lamperti_half();
    let witness = witness_rayleigh(&c, 10_000);
    let top = jacobi_matrix(&c, 100_000).top_eigenvalue(Some(0)).unwrap();
    let running = chen_delta_running(&c, 64_000);
    let ratios: Vec<f64> = (0..6)
        .map(|k| {
            let m = 1000usize << k;
            running[2 * m - 1] / running[m - 1]
        })
        .collect();
    let pass = witness >= 0.999 && top >= 0.999 && ratios.iter().all(|r| *r > 1.2);
    verdict(
        pass,
        format!("witness(1e4) = {witness:.6}, reduced top(1e5) = {top:.6}, delta doubling ratios (1e3..6.4e4) = {ratios:.3?}"),
    )
}

fn sturm_vs_dense() -> Verdict {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(1..=64);
        let diag: Vec<f64> = (0..n).map(|_| rng.random_range(f64::EPSILON..1.0)).collect();
        let off: Vec<f64> = (0..n - 1).map(|_| rng.random_range(f64::EPSILON..1.0)).collect();
        let got = largest_eigenvalue(&diag, &off).unwrap();
        worst = worst.max((got - dense_top(&diag, &off)).abs());
    }
    verdict(worst <= 1e-9, format!("200 matrices, max |bisection - dense| = {worst:.2e}"))
}

fn compact_centered(measure: &StationaryMeasure) -> Observable {
    let mut v = vec![0.0; measure.truncation() + 1];
    v[0] = 1.0;
    v[1] = -measure.pi(0) / measure.pi(1);
    Observable::from_values(v)
}

fn h1_certificate() -> Verdict {
    let c = lamperti_half();
    let measure = stationary_weights(&c, 10_000).normalize().unwrap();

    let v = center(&compact_centered(&measure), &measure).unwrap();
    let compact = phi_star(&v, &measure, &doubling_schedule(10_000, 10));
    let first = compact.phi_star_partial[0];
    let constant = compact.phi_star_partial.iter().all(|p| *p == first);
    let part_a = compact.verdict == SeriesVerdict::Finite && constant;

    let g: Vec<f64> = (0..=10_000).map(|x| (0.5 * measure.ln_pi(x)).exp()).collect();
    let w = observable_from_cumulative(&g, &measure).unwrap();
    let mut schedule = doubling_schedule(10_000, 8);
    schedule.push(1000);
    let r = phi_star(&w, &measure, &schedule);
    let at = |m: usize| r.phi_star_partial[r.schedule.iter().position(|&s| s == m).unwrap()];
    let slope = (at(10_000) - at(1000)) / 9000.0;
    let part_b = (slope - 1.0).abs() <= 1e-6 && r.verdict == SeriesVerdict::Divergent;
    verdict(
        part_a && part_b,
        format!(
            "(a) verdict {:?}, partials constant past support: {constant}; (b) slope = {slope:.12}, verdict {:?}",
            compact.verdict, r.verdict
        ),
    )
}

fn variational_optimality() -> Verdict {
    let c = lamperti_half();
    let measure = normalized_measure(&c).unwrap();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(77);
    let mut worst = f64::INFINITY;
    for v in [
        center(&compact_centered(&measure), &measure).unwrap(),
        center(
            &Observable::from_values((0..=measure.truncation()).map(|x| (x as f64 * 0.3).cos()).collect()),
            &measure,
        )
        .unwrap(),
    ] {
        let phi = integrate_gradient(&euler_lagrange_gradient(&v, &measure));
        let best = h1_functional(&v, &phi, &measure);
        for _ in 0..50 {
            let support = rng.random_range(1..=measure.truncation().min(64));
            let mut trial = phi.clone();
            for t in trial.iter_mut().take(support) {
                *t += 1e-4 * rng.random_range(-1.0..1.0);
            }
            worst = worst.min(best - h1_functional(&v, &trial, &measure));
        }
    }
    verdict(worst >= -1e-8, format!("100 perturbations, min margin = {worst:.3e}"))
}

fn resolvent_vs_monte_carlo() -> Verdict {
    let c = chain(ChainSpec::constant(1.0 / 3.0));
    let measure = normalized_measure(&c).unwrap();
    let ind = Observable::from_spec(&ObservableSpec::Indicator { state: 0 }, &measure).unwrap();
    let v = center(&ind, &measure).unwrap();
    let exact = sigma2_resolvent(&v, &c, &measure, measure.truncation()).unwrap().value;
    let report = variance_growth(&v, &c, &measure, &SimConfig::new(20_240_601, 10_000, 10_000)).unwrap();
    let mc = report.sigma2_mc.expect("batch means available");
    let rel = (mc.value - exact).abs() / exact;
    let d2 = report.variance_curve.last().unwrap().d2;
    verdict(
        rel <= 0.05 && report.ks_distance <= 0.03,
        format!(
            "sigma2 resolvent = {exact:.6}, batch means = {:.6} +- {:.6} (b = {}), rel = {rel:.4}, D2_N(1e4) = {d2:.6}, KS = {:.4}",
            mc.value, mc.standard_error, mc.batch_length, report.ks_distance
        ),
    )
}

/// `E[Y_N^2]` from exact autocovariances on a reflecting truncation.
fn exact_d2(c: &BirthDeathChain, v: &Observable, measure: &StationaryMeasure, ns: &[usize]) -> Vec<f64> {
    let m = measure.truncation();
    let pi: Vec<f64> = (0..=m).map(|x| measure.pi(x)).collect();
    let mass: f64 = pi.iter().sum();
    let vals: Vec<f64> = (0..=m).map(|x| v.value(x)).collect();
    let mean: f64 = vals.iter().zip(&pi).map(|(a, p)| a * p).sum::<f64>() / mass;
    let vc: Vec<f64> = vals.iter().map(|a| a - mean).collect();
    let n_max = *ns.iter().max().unwrap();
    let mut gamma = Vec::with_capacity(n_max + 1);
    let mut f = vc.clone();
    for _ in 0..=n_max {
        gamma.push(vc.iter().zip(&f).zip(&pi).map(|((a, b), p)| a * b * p).sum::<f64>() / mass);
        let next: Vec<f64> = (0..=m)
            .map(|x| match x {
                0 => f[1],
                _ if x == m => f[m - 1],
                _ => c.p(x) * f[x + 1] + c.q(x) * f[x - 1],
            })
            .collect();
        f = next;
    }
    ns.iter()
        .map(|&n| {
            // N + 1 terms: Var = (N+1) g0 + 2 sum_k (N+1-k) g_k
            let terms = n + 1;
            let var = terms as f64 * gamma[0]
                + 2.0 * (1..terms).map(|k| (terms - k) as f64 * gamma[k]).sum::<f64>();
            var / n as f64
        })
        .collect()
}

fn clt_necessity() -> Verdict {
    let c = lamperti_half();
    let measure = stationary_weights(&c, 2500).normalize().unwrap();
    let spec = ObservableSpec::Cumulative { g: CumulativeRule::SqrtPi, cap: Some(1000) };
    let capped = center(&Observable::from_spec(&spec, &measure).unwrap(), &measure).unwrap();
    let compact = center(&compact_centered(&measure), &measure).unwrap();

    let ladder: Vec<usize> = (0..7).map(|k| 1000usize << k).chain([100_000]).collect();
    let mut cfg = SimConfig::new(9_090_909, 4000, 100_000);
    cfg.ladder = Some(ladder.clone());
    let grow = variance_growth(&capped, &c, &measure, &cfg).unwrap();
    let flat = variance_growth(&compact, &c, &measure, &cfg).unwrap();

    let per_doubling = |curve: &[f64]| -> Vec<f64> {
        curve
            .windows(2)
            .zip(ladder.windows(2))
            .map(|(d, n)| (d[1] / d[0]).powf(1.0 / (n[1] as f64 / n[0] as f64).log2()))
            .collect()
    };
    let grow_d2: Vec<f64> = grow.variance_curve.iter().map(|p| p.d2).collect();
    let flat_d2: Vec<f64> = flat.variance_curve.iter().map(|p| p.d2).collect();
    let grow_ratios = per_doubling(&grow_d2);
    let flat_change = (flat_d2[flat_d2.len() - 1] - flat_d2[flat_d2.len() - 2]).abs() / flat_d2[flat_d2.len() - 2];
    let exact = exact_d2(&c, &capped, &measure, &ladder);
    let exact_ratios = per_doubling(&exact);
    let pass = grow_ratios.iter().all(|r| *r > 1.2) && flat_change <= 0.10;
    verdict(
        pass,
        format!(
            "capped: MC D2 = {grow_d2:.4?}, per-doubling ratios {grow_ratios:.3?}; exact-autocovariance ratios {exact_ratios:.3?}; compact: last-rung change {flat_change:.4}"
        ),
    )
}

fn run_cli(args: &[&str], threads: &str, cwd: &Path) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_bd-clt"))
        .args(args)
        .env("BD_CLT_THREADS", threads)
        .current_dir(cwd)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("chain.json"), r#"{"family":"constant","p":0.3333333333333333}"#).unwrap();
    std::fs::write(dir.path().join("obs.json"), r#"{"kind":"indicator","state":0}"#).unwrap();
    let args = [
        "clt", "--chain", "chain.json", "--observable", "obs.json", "--seed", "42", "--replicas", "512",
        "--steps", "4000", "--out", "report.json",
    ];
    let (code_a, _) = run_cli(&args, "4", dir.path());
    let first = std::fs::read(dir.path().join("report.json")).unwrap();
    let (code_b, _) = run_cli(&args, "4", dir.path());
    let second = std::fs::read(dir.path().join("report.json")).unwrap();
    let (code_c, _) = run_cli(&["rerun", "--manifest", "report.json", "--out", "replay.json"], "1", dir.path());
    let replayed = std::fs::read(dir.path().join("replay.json")).unwrap_or_default();
    let pass = code_a == 0 && code_b == 0 && code_c == 0 && first == second && first == replayed;
    verdict(
        pass,
        format!(
            "exit codes {code_a}/{code_b}/{code_c}, 4 threads twice identical: {}, 1-thread manifest replay identical: {} ({} bytes)",
            first == second,
            first == replayed,
            first.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("regime trichotomy", Some(Duration::from_secs(1)), regime_trichotomy),
        ("stationary measure oracle", None, stationary_oracle),
        ("gap regime spectral ladder", Some(Duration::from_secs(30)), gap_ladder),
        ("no-gap regime", Some(Duration::from_secs(60)), no_gap_regime),
        ("bisection vs dense eigensolver", None, sturm_vs_dense),
        ("H-1 certificate", None, h1_certificate),
        ("variational optimality", None, variational_optimality),
        ("resolvent vs Monte Carlo", Some(Duration::from_secs(300)), resolvent_vs_monte_carlo),
        ("CLT condition necessity", Some(Duration::from_secs(600)), clt_necessity),
        ("determinism", None, determinism),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = Vec::new();
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let number = i + 1;
        if only.is_some_and(|k| k != number) {
            continue;
        }
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| verdict(false, format!("panicked: {e:?}")));
        let elapsed = start.elapsed();
        let in_budget = budget.is_none_or(|b| elapsed <= b);
        let pass = result.pass && in_budget;
        println!(
            "criterion {number:>2} [{}] {name}: {} ({:.2}s{})",
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            match budget {
                Some(b) if !in_budget => format!(", over budget {}s", b.as_secs()),
                _ => String::new(),
            }
        );
        if !pass {
            failed.push(number);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
