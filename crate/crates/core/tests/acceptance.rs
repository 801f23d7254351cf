//! Acceptance suite. Every criterion prints one `criterion N [PASS|FAIL]`
//! line; thresholds are frozen constants below.
//!
//! Criterion 8 is slow-suite and runs only with `LMCMA_SLOW_SUITE=1`.
//! Criterion 10 reports its measured direction without asserting it; the
//! measurement itself must complete.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use lmcma_core::bench::{BenchmarkProblem, FunctionKind};
use lmcma_core::harness::{memory_slots, run_experiment, CellSummary, ExperimentSpec, RunRequest};
use lmcma_core::lmfactor::FactorStore;
use lmcma_core::optimizer::{Algorithm, AskTell, CholeskyCma, CholeskyConfig, LmCma, OptimizerConfig};
use lmcma_core::psr::success_measure;
use lmcma_core::RandomSource;

// ---- allocation accounting ----

struct Counting;

static LIVE: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc(layout) };
        if !p.is_null() {
            let now = LIVE.fetch_add(layout.size(), Ordering::Relaxed) + layout.size();
            PEAK.fetch_max(now, Ordering::Relaxed);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) };
        LIVE.fetch_sub(layout.size(), Ordering::Relaxed);
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let p = unsafe { System.realloc(ptr, layout, new_size) };
        if !p.is_null() {
            if new_size >= layout.size() {
                let now = LIVE.fetch_add(new_size - layout.size(), Ordering::Relaxed) + new_size - layout.size();
                PEAK.fetch_max(now, Ordering::Relaxed);
            } else {
                LIVE.fetch_sub(layout.size() - new_size, Ordering::Relaxed);
            }
        }
        p
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

/// Criteria run one at a time so allocation counts and timings are not shared.
fn serial() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: u32, pass: bool, detail: impl AsRef<str>) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} [{verdict}] {}", detail.as_ref());
}

// ---- frozen thresholds: pilot median × 1.5 ----

/// Default LM-CMA at n=128, target 1e-10: (function, pilot median, threshold).
const REGRESSION_128: [(&str, u64, u64); 5] = [
    ("sphere", 11_700, 17_550),
    ("elli", 1_667_430, 2_501_145),
    ("cigar", 33_462, 50_193),
    ("discus", 889_902, 1_334_853),
    ("diffpow", 176_760, 265_140),
];
const CHOLCMA_SPHERE_32: u64 = 7_434;
const CHOLCMA_ELLI_32: u64 = 89_670;
const NESTEROV_128: u64 = 265_680;

const RUNS: usize = 11;

fn cell(pairs: &[(&str, &str)]) -> CellSummary {
    let mut req = RunRequest::default();
    req.set("runs", &RUNS.to_string()).unwrap();
    req.apply_all(pairs.iter().copied()).unwrap();
    let spec = ExperimentSpec {
        cells: vec![req.cell],
        out_dir: None,
        record_timing: false,
    };
    run_experiment(&spec).unwrap().remove(0).summary
}

/// Median evaluations of default LM-CMA on a function at n=128, computed once.
fn regression_128(function: &'static str) -> &'static CellSummary {
    static CACHE: OnceLock<Mutex<Vec<(&'static str, &'static CellSummary)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    if let Some((_, s)) = cache.lock().unwrap().iter().find(|(f, _)| *f == function) {
        return s;
    }
    let (_, pilot, _) = REGRESSION_128.iter().find(|(f, _, _)| *f == function).unwrap();
    let budget = (3 * pilot).to_string();
    let summary: &'static CellSummary =
        Box::leak(Box::new(cell(&[("function", function), ("dim", "128"), ("budget", &budget)])));
    cache.lock().unwrap().push((function, summary));
    summary
}

fn gaussian_vec(src: &mut RandomSource, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    src.fill_gaussian(&mut v);
    v
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn random_store(n: usize, m: usize, src: &mut RandomSource) -> (FactorStore, Vec<Vec<f64>>) {
    let c1 = 0.05 + 0.4 * src.uniform(0.0, 1.0);
    let mut store = FactorStore::new(n, m, c1).unwrap();
    let mut ps = Vec::with_capacity(m);
    for t in 0..m {
        let p = gaussian_vec(src, n);
        let slot = store.allocate(t as u64).unwrap();
        store.write_direction(slot, &p).unwrap();
        assert!(store.update_inverses(t).is_empty());
        ps.push(p);
    }
    (store, ps)
}

#[test]
fn c01_factor_round_trip() {
    let _g = serial();
    let start = Instant::now();
    let mut src = RandomSource::new(101);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (store, _) = random_store(64, 16, &mut src);
        let z = gaussian_vec(&mut src, 64);
        let back = store.ainvz_full(&store.az_full(&z).unwrap()).unwrap();
        let err: Vec<f64> = back.iter().zip(&z).map(|(a, b)| a - b).collect();
        worst = worst.max(norm(&err) / norm(&z));
    }
    let took = start.elapsed();
    let pass = worst <= 1e-9 && took < Duration::from_secs(5);
    report(1, pass, format!("max rel round-trip error {worst:.2e} (tol 1e-9), {took:.2?} (limit 5 s)"));
    assert!(pass);
}

/// Dense factor from the textbook recurrence with explicit `A⁻¹`.
fn dense_factor(ps: &[Vec<f64>], c1: f64) -> Vec<f64> {
    let n = ps[0].len();
    let mut a = vec![0.0; n * n];
    let mut ainv = vec![0.0; n * n];
    for i in 0..n {
        a[i * n + i] = 1.0;
        ainv[i * n + i] = 1.0;
    }
    let sa = (1.0 - c1).sqrt();
    for p in ps {
        let v: Vec<f64> = (0..n).map(|r| (0..n).map(|c| ainv[r * n + c] * p[c]).sum()).collect();
        let nv: f64 = v.iter().map(|x| x * x).sum();
        let root = (1.0 + c1 / (1.0 - c1) * nv).sqrt();
        let b = sa / nv * (root - 1.0);
        let d = 1.0 / (sa * nv) * (1.0 - 1.0 / root);
        let vt_ainv: Vec<f64> = (0..n).map(|c| (0..n).map(|r| v[r] * ainv[r * n + c]).sum()).collect();
        for r in 0..n {
            for c in 0..n {
                a[r * n + c] = sa * a[r * n + c] + b * p[r] * v[c];
                ainv[r * n + c] = ainv[r * n + c] / sa - d * v[r] * vt_ainv[c];
            }
        }
    }
    a
}

#[test]
fn c02_dense_oracle_equivalence() {
    let _g = serial();
    let start = Instant::now();
    let mut src = RandomSource::new(202);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = 2 + (src.next_u64() % 63) as usize;
        let m = 1 + (src.next_u64() % 16) as usize;
        let (store, ps) = random_store(n, m, &mut src);
        let a = dense_factor(&ps, store.c1());
        let z = gaussian_vec(&mut src, n);
        let dense: Vec<f64> = (0..n).map(|r| (0..n).map(|c| a[r * n + c] * z[c]).sum()).collect();
        let got = store.az_full(&z).unwrap();
        let err: Vec<f64> = got.iter().zip(&dense).map(|(x, y)| x - y).collect();
        worst = worst.max(norm(&err) / norm(&dense));
    }
    let took = start.elapsed();
    let pass = worst <= 1e-9 && took < Duration::from_secs(10);
    report(2, pass, format!("max rel error vs dense oracle {worst:.2e} (tol 1e-9), {took:.2?} (limit 10 s)"));
    assert!(pass);
}

#[test]
fn c03_monotone_transform_invariance() {
    let _g = serial();
    let start = Instant::now();
    let n = 32;
    let rosen = BenchmarkProblem::new(FunctionKind::Rosen, n).unwrap();
    let make = || LmCma::new(OptimizerConfig::new(n).unwrap(), vec![0.0; n], 0.5, RandomSource::new(303)).unwrap();
    let (mut a, mut b) = (make(), make());
    let mut identical = true;
    for _ in 0..200 {
        identical &= a.ask() == b.ask();
        let fa: Vec<f64> = a.ask().xs().map(|x| rosen.evaluate(x).unwrap()).collect();
        let fb: Vec<f64> = fa.iter().map(|f| f.powi(3)).collect();
        a.tell(&fa).unwrap();
        b.tell(&fb).unwrap();
        identical &= a.sigma().to_bits() == b.sigma().to_bits() && a.mean() == b.mean();
    }
    let took = start.elapsed();
    let pass = identical && took < Duration::from_secs(5);
    report(3, pass, format!("f vs f^3 on rosen n=32, 200 generations: bit-identical candidates and sigma = {identical}, {took:.2?}"));
    assert!(pass);
}

#[test]
fn c04_mirror_identity() {
    let _g = serial();
    let n = 64;
    let rosen = BenchmarkProblem::new(FunctionKind::Rosen, n).unwrap();
    let mut opt = LmCma::new(OptimizerConfig::new(n).unwrap(), vec![0.3; n], 1.0, RandomSource::new(404)).unwrap();
    let (mut reflect_bad, mut sum_exact, mut sum_ulps, mut total) = (0usize, 0usize, 0.0f64, 0usize);
    for _ in 0..100 {
        let mean = opt.mean().to_vec();
        let pop = opt.ask().clone();
        for pair in pop.candidates.chunks_exact(2) {
            for i in 0..n {
                let (x1, x2, two_m) = (pair[0].x[i], pair[1].x[i], 2.0 * mean[i]);
                total += 1;
                reflect_bad += usize::from(x2.to_bits() != (two_m - x1).to_bits());
                let s = x1 + x2;
                sum_exact += usize::from(s == two_m);
                let ulp = f64::EPSILON * x1.abs().max(x2.abs()).max(two_m.abs());
                sum_ulps = sum_ulps.max((s - two_m).abs() / ulp);
            }
        }
        let f: Vec<f64> = pop.xs().map(|x| rosen.evaluate(x).unwrap()).collect();
        opt.tell(&f).unwrap();
    }
    let pass = reflect_bad == 0 && sum_ulps <= 1.0;
    report(
        4,
        pass,
        format!(
            "x_2i == fl(2m - x_2i-1) in {}/{total} coordinates over 100 generations; \
             literal fl(x_2i + x_2i-1) == 2m in {sum_exact}/{total}, max deviation {sum_ulps:.2} ulp (tol 1)",
            total - reflect_bad
        ),
    );
    assert!(pass);
}

#[test]
fn c05_psr_bounds() {
    let _g = serial();
    let z_star = 0.25;
    let mut src = RandomSource::new(505);
    let (mut in_range, mut endpoints_ok) = (true, true);
    for _ in 0..10_000 {
        let lambda = 2 + (src.next_u64() % 30) as usize;
        let levels = 1 + src.next_u64() % 8;
        let prev: Vec<f64> = (0..lambda).map(|_| (src.next_u64() % levels) as f64).collect();
        let curr: Vec<f64> = (0..lambda).map(|_| (src.next_u64() % levels) as f64).collect();
        let z = success_measure(&prev, &curr) - z_star;
        in_range &= (-1.0 - z_star..=1.0 - z_star).contains(&z);
        let better: Vec<f64> = prev.iter().map(|f| f - 100.0).collect();
        let worse: Vec<f64> = prev.iter().map(|f| f + 100.0).collect();
        endpoints_ok &= success_measure(&prev, &better) - z_star == 1.0 - z_star;
        endpoints_ok &= success_measure(&prev, &worse) - z_star == -1.0 - z_star;
    }
    let pass = in_range && endpoints_ok;
    report(5, pass, format!("10^4 populations: z_PSR within [-1.25, 0.75] = {in_range}, strict domination hits endpoints = {endpoints_ok}"));
    assert!(pass);
}

#[test]
fn c06_convergence_regressions() {
    let _g = serial();
    let start = Instant::now();
    let mut all = true;
    let mut parts = Vec::new();
    for (function, _, threshold) in REGRESSION_128 {
        let s = regression_128(function);
        let ok = !s.censored && s.median_evaluations <= threshold;
        all &= ok;
        parts.push(format!("{function} {}{}/{threshold}", s.median_evaluations, if ok { "" } else { "!" }));
    }
    let took = start.elapsed();
    let pass = all && took < Duration::from_secs(600);
    report(6, pass, format!("n=128 medians of {RUNS} (limit pilot x1.5): {}; {took:.1?} (limit 10 min)", parts.join(", ")));
    assert!(pass);
}

#[test]
fn c07_rotation_robustness() {
    let _g = serial();
    let elli = regression_128("elli");
    let rot = cell(&[("function", "rot_elli"), ("dim", "128"), ("budget", "8000000")]);
    let ratio = rot.median_evaluations as f64 / elli.median_evaluations as f64;
    let pass = !rot.censored && !elli.censored && (0.5..=2.0).contains(&ratio);
    report(
        7,
        pass,
        format!(
            "rot_elli median {} vs elli median {} at n=128: ratio {ratio:.3} (limit within factor 2)",
            rot.median_evaluations, elli.median_evaluations
        ),
    );
    assert!(pass);
}

/// Least-squares slope of `ln y` against `ln x`.
fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn c08_scaling_shape() {
    let _g = serial();
    if std::env::var("LMCMA_SLOW_SUITE").as_deref() != Ok("1") {
        println!("criterion  8 [SKIPPED] slow suite; set LMCMA_SLOW_SUITE=1");
        return;
    }
    let start = Instant::now();
    let mut points = Vec::new();
    let mut censored = false;
    for n in [64usize, 128, 256, 512] {
        let s = if n == 128 {
            regression_128("elli").clone()
        } else {
            let budget = (60_000 * n).to_string();
            cell(&[("function", "elli"), ("dim", &n.to_string()), ("budget", &budget)])
        };
        censored |= s.censored;
        points.push((n as f64, s.median_evaluations as f64));
    }
    let alpha = log_log_slope(&points);
    let took = start.elapsed();
    let pass = !censored && alpha <= 1.4 && took < Duration::from_secs(1800);
    let pts: Vec<String> = points.iter().map(|(n, e)| format!("n={n} {e}")).collect();
    report(8, pass, format!("elli medians {}; fitted alpha {alpha:.3} (limit 1.4); {took:.1?} (limit 30 min)", pts.join(", ")));
    assert!(pass);
}

#[test]
fn c09_baseline_sanity() {
    let _g = serial();
    let sphere = cell(&[("algo", "cholcma"), ("function", "sphere"), ("dim", "32"), ("budget", "20000")]);
    let elli = cell(&[("algo", "cholcma"), ("function", "elli"), ("dim", "32"), ("budget", "250000")]);
    let n = 32;
    let problem = BenchmarkProblem::new(FunctionKind::Elli, n).unwrap();
    let mut opt =
        CholeskyCma::new(CholeskyConfig::new(n).unwrap(), vec![1.0; n], 1.0, RandomSource::new(909)).unwrap();
    let mut drift = 0.0f64;
    for t in 0..10_000 {
        opt.step(|x| problem.evaluate(x)).unwrap();
        if t % 500 == 499 {
            drift = drift.max(opt.factor_drift());
        }
    }
    drift = drift.max(opt.factor_drift());
    let pass = !sphere.censored
        && sphere.median_evaluations <= CHOLCMA_SPHERE_32
        && !elli.censored
        && elli.median_evaluations <= CHOLCMA_ELLI_32
        && drift <= 1e-6;
    report(
        9,
        pass,
        format!(
            "cholcma n=32 medians: sphere {}/{CHOLCMA_SPHERE_32}, elli {}/{CHOLCMA_ELLI_32}; \
             max |A A_inv - I| over 10^4 iterations {drift:.2e} (tol 1e-6)",
            sphere.median_evaluations, elli.median_evaluations
        ),
    );
    assert!(pass);
}

#[test]
fn c10_memory_size_direction() {
    let _g = serial();
    let big = cell(&[("function", "discus"), ("dim", "256"), ("m", "2sqrt"), ("budget", "6000000")]);
    let small = cell(&[("function", "discus"), ("dim", "256"), ("m", "5"), ("budget", "6000000")]);
    let pass = !big.censored && big.median_evaluations <= small.median_evaluations;
    report(
        10,
        pass,
        format!(
            "discus n=256 medians of {RUNS}: m=32 (2 sqrt n) {} vs m=5 {} (requires m=32 <= m=5)",
            big.median_evaluations, small.median_evaluations
        ),
    );
    // the direction is reported, not asserted; both cells must have solved the problem
    assert_eq!(big.successes + small.successes, 2 * RUNS);
}

#[test]
fn c11_memory_formula() {
    let _g = serial();
    // LM-CMA (2m + λ + 6)n + 5m; dense-factor CMA (2n + λ + 3)n
    let lm = memory_slots(Algorithm::Lmcma, 10_000, 31, 31);
    let dense_1e4 = memory_slots(Algorithm::Cholcma, 10_000, 0, 31);
    let dense_2e4 = memory_slots(Algorithm::Cholcma, 20_000, 0, 33);
    let arithmetic = lm == 990_155 && dense_1e4 == 200_340_000 && dense_2e4 == 800_720_000;
    // "about 2·10⁸ slots (1.6 GB)" and "8·10⁸ slots (6.4 GB)"
    let worked = (dense_1e4 as f64 / 2e8 - 1.0).abs() < 0.01
        && (dense_2e4 as f64 / 8e8 - 1.0).abs() < 0.01
        && ((dense_1e4 * 8) as f64 / 1.6e9 - 1.0).abs() < 0.01
        && ((dense_2e4 * 8) as f64 / 6.4e9 - 1.0).abs() < 0.01;

    let n = 10_000;
    let cfg = OptimizerConfig::new(n).unwrap();
    let predicted = memory_slots(Algorithm::Lmcma, n as u64, cfg.m as u64, cfg.lambda as u64) * 8;
    let generations = cfg.m as u64 * cfg.selection.period + 5;
    let baseline = LIVE.load(Ordering::SeqCst);
    PEAK.store(baseline, Ordering::SeqCst);
    let mut opt = LmCma::new(cfg, vec![1.0; n], 0.5, RandomSource::new(1111)).unwrap();
    for _ in 0..generations {
        let f: Vec<f64> = opt.ask().xs().map(|x| x.iter().map(|v| v * v).sum()).collect();
        opt.tell(&f).unwrap();
    }
    let full = opt.store().is_full();
    let measured = PEAK.load(Ordering::SeqCst) - baseline;
    drop(opt);
    let ratio = measured as f64 / predicted as f64;
    let pass = arithmetic && worked && full && (0.5..=2.0).contains(&ratio);
    report(
        11,
        pass,
        format!(
            "slot formulas exact = {arithmetic}, worked examples = {worked}; n=10^4 peak {measured} B vs predicted {predicted} B, ratio {ratio:.3} (limit [0.5, 2])"
        ),
    );
    assert!(pass);
}

#[test]
fn c12_nesterov_preset() {
    let _g = serial();
    let tuned = cell(&[
        ("function", "nesterov"),
        ("dim", "128"),
        ("preset", "nesterov"),
        ("target", "1e-6"),
        ("budget", "2000000"),
    ]);
    let pass = !tuned.censored && tuned.median_evaluations <= NESTEROV_128;
    report(
        12,
        pass,
        format!(
            "nesterov n=128 tuned preset median {}/{NESTEROV_128} to 1e-6, {} of {RUNS} solved",
            tuned.median_evaluations, tuned.successes
        ),
    );
    assert!(pass);
}
