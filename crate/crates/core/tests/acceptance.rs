//! One pass/fail line per acceptance criterion; exits non-zero on any failure.

mod common;

use std::alloc::{GlobalAlloc, Layout, System};
use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use lpplab::construct::{build_brw_path, build_heavy_path, heavy_params, verify_apriori, ParamOverride};
use lpplab::env::{poisson_points, scale_of};
use lpplab::geometry::{
    cancellation_gap, check_slope_bound, lattice_count_bound_holds, strictly_below, Cylinder, Rect,
};
use lpplab::lpp::{self, geodesic_with, last_passage_with, max_weight_chain, GeodesicMethod, SweepStrategy};
use lpplab::stats::{
    concentration_tail, fit_log_correction, median, run_experiment, variance_curve, EnvironmentTemplate,
    ExperimentConfig, ReplicateRecord,
};
use lpplab::{with_threads, EnvironmentKind, EnvironmentSpec, LatticeWeights, WeightField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Counting;

static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc(layout);
        if !p.is_null() {
            let now = CURRENT.fetch_add(layout.size(), Ordering::Relaxed) + layout.size();
            PEAK.fetch_max(now, Ordering::Relaxed);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        CURRENT.fetch_sub(layout.size(), Ordering::Relaxed);
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

/// Fixed master seed for every Monte Carlo criterion.
const MASTER: u64 = 20261019;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut fields = 0u64;
    let mut mismatches = Vec::new();
    for kind in [EnvironmentKind::IidPareto2, EnvironmentKind::IidLogCorrected, EnvironmentKind::Brw] {
        for n in 2u64..=8 {
            if kind == EnvironmentKind::Brw && !n.is_power_of_two() {
                continue;
            }
            for rep in 0..100u64 {
                let mut spec = EnvironmentSpec::new(kind, n, lpplab::rng::replicate_seed(MASTER, n, rep));
                if kind == EnvironmentKind::IidLogCorrected {
                    spec = spec.with_beta(1.25);
                }
                let f = WeightField::new(spec).expect("valid spec");
                let (value, path) = common::brute_force(&f);
                let dp = lpp::last_passage(&f).expect("within budget");
                let res = geodesic_with(&f, GeodesicMethod::FullTable).expect("within budget");
                let geo: Vec<Vec<u32>> = res.geodesic.expect("requested").iter().map(<[u32]>::to_vec).collect();
                if dp != value || res.value != value || geo != path {
                    mismatches.push(format!("{kind} n={n} rep={rep}"));
                }
                fields += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = mismatches.is_empty() && elapsed < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "{fields} fields, {} mismatches{}, {:.1}s (limit 60s)",
            mismatches.len(),
            mismatches.first().map(|m| format!(" (first: {m})")).unwrap_or_default(),
            secs(elapsed)
        ),
    )
}

fn continuum_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER ^ 2);
    let mut bad = 0;
    for _ in 0..100 {
        let count = rng.gen_range(1..=200);
        // a coarse grid on half of the instances forces shared coordinates
        let coarse = rng.gen_bool(0.5);
        let pts: Vec<(f64, f64, f64)> = (0..count)
            .map(|_| {
                let (x, y): (f64, f64) = (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
                let (x, y) = if coarse { (x.floor(), y.floor()) } else { (x, y) };
                (x, y, rng.gen_range(0.1..5.0))
            })
            .collect();
        if max_weight_chain(&pts).expect("small instance") != common::chain_quadratic(&pts) {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("100 instances, {bad} mismatches"))
}

fn geometry_lemmas() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER ^ 3);
    let (mut count_cases, mut count_bad) = (0, 0);
    while count_cases < 10_000 {
        let cyl = common::count_instance(&mut rng);
        match lattice_count_bound_holds(&cyl).expect("within guard") {
            None => continue,
            Some(ok) => {
                count_cases += 1;
                count_bad += usize::from(!ok);
            }
        }
    }
    let mut slope_bad = 0;
    for i in 0..10_000 {
        let [a, b, c, d] = common::slope_chain(&mut rng);
        let r = rng.gen_range(0.01..0.99);
        let first = Cylinder::new(Rect::new(a, b).expect("ordered"), r).expect("r in (0, 1)");
        let last = Cylinder::new(Rect::new(c, d).expect("ordered"), r).expect("r in (0, 1)");
        // every tenth instance uses the extreme corners of both cylinders
        let (v, w) = if i % 10 == 0 {
            let h1 = b[1] - a[1];
            let h3 = d[1] - c[1];
            ([a[0], a[1] + r * h1], [d[0], d[1] - r * h3])
        } else {
            (common::point_in_cylinder(&mut rng, &first), common::point_in_cylinder(&mut rng, &last))
        };
        if !matches!(check_slope_bound(a, b, c, d, r, v, w), Ok(true)) {
            slope_bad += 1;
        }
    }
    let mut cancel_bad = 0;
    for _ in 0..10_000 {
        let delta = rng.gen_range(1e-3..=0.1);
        let (xs, ys) = common::cancellation_blocks(&mut rng, delta);
        match cancellation_gap(&xs, &ys, delta) {
            Ok((lhs, rhs)) if lhs >= rhs => {}
            _ => cancel_bad += 1,
        }
    }
    let elapsed = start.elapsed();
    let pass = count_bad + slope_bad + cancel_bad == 0 && elapsed < Duration::from_secs(120);
    outcome(
        pass,
        format!(
            "counterexamples: lattice count {count_bad}/10000, slope {slope_bad}/10000, \
             cancellation {cancel_bad}/10000; {:.1}s (limit 120s)",
            secs(elapsed)
        ),
    )
}

fn heavy_field(n: u64, seed: u64) -> WeightField {
    WeightField::new(EnvironmentSpec::new(EnvironmentKind::IidPareto2, n, seed)).expect("valid spec")
}

fn construction_invariants() -> Outcome {
    let start = Instant::now();
    let mut problems = Vec::new();
    let n = 1u64 << 16;
    let params = heavy_params(n, Some(ParamOverride::new(2, 4))).expect("feasible");
    for run in 0..20u64 {
        let f = heavy_field(n, lpplab::rng::replicate_seed(MASTER, n, run));
        let (path, sets) = match build_heavy_path(&f, &params) {
            Ok(x) => x,
            Err(e) => {
                problems.push(format!("run {run}: {e}"));
                continue;
            }
        };
        let ordered = sets.levels.iter().all(|level| {
            level
                .windows(2)
                .all(|p| strictly_below([p[0][0] as f64, p[0][1] as f64], [p[1][0] as f64, p[1][1] as f64]))
        });
        let nested = sets
            .levels
            .windows(2)
            .all(|l| l[0].iter().all(|v| l[1].binary_search(v).is_ok()));
        let pure = (1..sets.levels.len()).all(|ell| {
            sets.increment(ell)
                .iter()
                .all(|v| scale_of(f.weight2(v[0], v[1]), n).ok().flatten() == Some(sets.scale_at(ell)))
        });
        let through = path.check_spans(f.side()).is_ok() && path.passes_through(sets.finest());
        let apriori = verify_apriori(&sets, &params).all_ok();
        if !(ordered && nested && pure && through && apriori) {
            problems.push(format!(
                "run {run}: ordered={ordered} nested={nested} pure={pure} path={through} apriori={apriori}"
            ));
        }
    }
    let companion_n = 1u64 << 13;
    let companion = heavy_params(companion_n, Some(ParamOverride::new(2, 4))).expect("feasible");
    let mut worst_ratio = 0.0f64;
    for run in 0..20u64 {
        let f = heavy_field(companion_n, lpplab::rng::replicate_seed(MASTER, companion_n, run));
        let (path, _) = match build_heavy_path(&f, &companion) {
            Ok(x) => x,
            Err(e) => {
                problems.push(format!("companion {run}: {e}"));
                continue;
            }
        };
        let constructed = path.weight(&f);
        let exact = lpp::last_passage(&f).expect("within budget");
        worst_ratio = worst_ratio.max(constructed / exact);
        if constructed > exact {
            problems.push(format!("companion {run}: constructed {constructed} > L {exact}"));
        }
    }
    let elapsed = start.elapsed();
    let pass = problems.is_empty() && elapsed < Duration::from_secs(600);
    outcome(
        pass,
        format!(
            "20 runs at n=2^16 and 20 companions at n=2^13, {} problems{}; max constructed_L/L = {worst_ratio:.3}; \
             {:.1}s (limit 600s)",
            problems.len(),
            problems.first().map(|p| format!(" (first: {p})")).unwrap_or_default(),
            secs(elapsed)
        ),
    )
}

fn values_at(records: &[ReplicateRecord], n: u64) -> Vec<f64> {
    records.iter().filter(|r| r.n == n).map(|r| r.value).collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn growth_records() -> Vec<ReplicateRecord> {
    let ns: Vec<u64> = (8..=13).map(|k| 1u64 << k).collect();
    let cfg = ExperimentConfig::new(EnvironmentTemplate::new(EnvironmentKind::IidPareto2), ns, 50, MASTER);
    run_experiment(&cfg).expect("growth experiment")
}

fn upper_bound_band(records: &[ReplicateRecord]) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for k in 8..=12 {
        let n = 1u64 << k;
        let norm: Vec<f64> = values_at(records, n).iter().map(|v| v / (n as f64 * k as f64)).collect();
        let med = median(&norm).expect("50 replicates");
        pass &= (0.05..=10.0).contains(&med);
        parts.push(format!("2^{k}: {med:.3}"));
    }
    outcome(pass, format!("median L/(n log2 n) in [0.05, 10]: {}", parts.join(", ")))
}

fn superlinear_trend(records: &[ReplicateRecord]) -> Outcome {
    let ns: Vec<u64> = (8..=13).map(|k| 1u64 << k).collect();
    let means: Vec<f64> = ns.iter().map(|&n| mean(&values_at(records, n))).collect();
    let per_n: Vec<f64> = ns.iter().zip(&means).map(|(&n, m)| m / n as f64).collect();
    let increasing = per_n.windows(2).all(|w| w[1] > w[0]);
    let fit = fit_log_correction(&ns, &means).expect("six sizes");
    let in_band = fit.exponent > 0.4 && fit.exponent < 1.1;
    outcome(
        increasing && in_band,
        format!(
            "mean L/n = [{}] (strictly increasing: {increasing}); effective exponent {:.3} ± {:.3} in (0.4, 1.1): {in_band}",
            per_n.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", "),
            fit.exponent,
            fit.stderr
        ),
    )
}

fn brw_variance() -> Outcome {
    let ns: Vec<u64> = (6..=10).map(|k| 1u64 << k).collect();
    let cfg = ExperimentConfig::new(EnvironmentTemplate::new(EnvironmentKind::Brw), ns, 300, MASTER);
    let records = run_experiment(&cfg).expect("brw experiment");
    let curve = variance_curve(&records).expect("300 replicates per size");
    let ratios: Vec<f64> = curve.iter().map(|p| p.ratio).collect();
    let spread = ratios.iter().cloned().fold(f64::MIN, f64::max) / ratios.iter().cloned().fold(f64::MAX, f64::min);
    outcome(
        spread <= 4.0,
        format!(
            "Var/n² = [{}]; max/min = {spread:.3} (limit 4)",
            ratios.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn brw_tail() -> Outcome {
    let n = 1u64 << 8;
    let cfg = ExperimentConfig::new(EnvironmentTemplate::new(EnvironmentKind::Brw), vec![n], 1000, MASTER ^ 8);
    let records = run_experiment(&cfg).expect("brw experiment");
    let p = concentration_tail(&values_at(&records, n), n, &[1.0]).expect("1000 samples")[0];
    let lo = (-9.0f64).exp();
    outcome(
        p.frequency >= lo && p.frequency <= 0.9,
        format!(
            "P(|L − mean|/n > 1) = {:.4} (95% CI [{:.4}, {:.4}]) in [e^-9, 0.9]",
            p.frequency, p.ci_low, p.ci_high
        ),
    )
}

fn skeleton_gain() -> Outcome {
    let n = 1u64 << 12;
    let (s, level) = (2u32, 5u32);
    let mut gains = Vec::new();
    let mut sd_z = f64::NAN;
    for rep in 0..5u64 {
        let spec = EnvironmentSpec::new(EnvironmentKind::Brw, n, lpplab::rng::replicate_seed(MASTER ^ 9, n, rep));
        let f = WeightField::new(spec).expect("valid spec");
        let c = build_brw_path(&f, s).expect("feasible");
        for ch in c.choices.iter().filter(|ch| ch.level == level) {
            let t = f64::from(ch.side >> s);
            sd_z = (2.0 * t - 1.0) * (((1u32 << s) - 1) as f64).sqrt();
            gains.push(ch.gain.max(ch.alternative_gain));
        }
    }
    let k = gains.len() as f64;
    let m = mean(&gains);
    let se = (gains.iter().map(|g| (g - m).powi(2)).sum::<f64>() / (k - 1.0)).sqrt() / k.sqrt();
    let target = sd_z / PI.sqrt();
    let enough = gains.len() >= 1000;
    let close = (m - target).abs() <= 3.0 * se;
    outcome(
        enough && close,
        format!(
            "{} squares at level {level}: mean max(Z) = {m:.4}, sd(Z)/sqrt(pi) = {target:.4}, |diff| = {:.4} vs 3 SE = {:.4}",
            gains.len(),
            (m - target).abs(),
            3.0 * se
        ),
    )
}

fn poisson_unit_intensity() -> Outcome {
    let k = 100.0;
    let lengths: Vec<f64> = (0..100u64)
        .map(|rep| {
            let pts: Vec<(f64, f64, f64)> = poisson_points(k, 1.0, MASTER, rep)
                .into_iter()
                .map(|(x, y)| (x, y, 1.0))
                .collect();
            max_weight_chain(&pts).expect("about 10^4 points") / k
        })
        .collect();
    let m = mean(&lengths);
    outcome((1.7..=2.1).contains(&m), format!("mean chain length / k = {m:.4} in [1.7, 2.1]"))
}

fn performance() -> Outcome {
    let f = heavy_field(1 << 13, MASTER);
    let start = Instant::now();
    let value = with_threads(Some(1), || last_passage_with(&f, SweepStrategy::RowMajor))
        .expect("pool")
        .expect("within budget");
    let dp = start.elapsed();
    let f = heavy_field(1 << 14, MASTER);
    let base = CURRENT.load(Ordering::Relaxed);
    PEAK.store(base, Ordering::Relaxed);
    let start = Instant::now();
    let res = lpp::geodesic(&f).expect("within budget");
    let geo = start.elapsed();
    let peak = PEAK.load(Ordering::Relaxed).saturating_sub(base);
    let realized = res.geodesic.as_ref().map(|p| p.weight(&f) == res.value).unwrap_or(false);
    let limit = 1.5 * (1u64 << 30) as f64;
    outcome(
        secs(dp) < 10.0 && (peak as f64) < limit && realized,
        format!(
            "value-only DP at n=2^13 single-threaded {:.2}s (limit 10s, L = {value:.1}); \
             geodesic at n=2^14 peak {:.1} MiB (limit 1536 MiB) in {:.1}s, path weight equals value: {realized}",
            secs(dp),
            peak as f64 / (1u64 << 20) as f64,
            secs(geo)
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut run = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        println!(
            "[{}] {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            secs(t.elapsed())
        );
        results.push((name, o));
    };
    run("oracle equivalence", &mut oracle_equivalence);
    run("continuum oracle", &mut continuum_oracle);
    run("geometry lemmas", &mut geometry_lemmas);
    run("construction invariants", &mut construction_invariants);
    let growth = growth_records();
    run("upper-bound band", &mut || upper_bound_band(&growth));
    run("superlinear growth trend", &mut || superlinear_trend(&growth));
    run("brw variance", &mut brw_variance);
    run("brw fluctuation band", &mut brw_tail);
    run("skeleton gain calibration", &mut skeleton_gain);
    run("poisson unit intensity", &mut poisson_unit_intensity);
    run("performance", &mut performance);
    let failed: Vec<&str> = results.iter().filter(|(_, o)| !o.pass).map(|(n, _)| *n).collect();
    println!(
        "acceptance: {}/{} passed in {:.1}s",
        results.len() - failed.len(),
        results.len(),
        secs(start.elapsed())
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
