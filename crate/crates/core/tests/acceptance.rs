//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
//!
//! Run with `cargo test -p robust-xbar --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use robust_xbar::factors::simulate_standard_moments;
use robust_xbar::io::read_dataset;
use robust_xbar::pooling::{self, EstimateKind};
use robust_xbar::simulation::{
    efficiency_study, known_limits_study, plan_sizes, run_length_grid, ContaminationSpec, EfficiencyReport,
    ObservationIndex, RunLengthConfig, RunLengthMode, ScenarioConfig, DEFAULT_RL_CAP,
};
use robust_xbar::{
    build_table, c4, control_limits, load_table, phase1_estimate, save_table, sensitivity_sweep, Estimator,
    FactorTable, LocationKind, Method, PoolingType, ScaleKind, SensitivitySweepSpec, Subgroup, SweepPlacement,
};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

struct Checks {
    lines: Vec<String>,
    failed: bool,
}

impl Checks {
    fn new() -> Self {
        Checks {
            lines: Vec::new(),
            failed: false,
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.failed |= !ok;
        self.lines.push(format!("{}{what}", if ok { "" } else { "MISS " }));
    }

    fn close(&mut self, want: f64, got: f64, tol: f64, what: &str) {
        self.check((got - want).abs() <= tol, format!("{what} = {got:.4} (want {want} ± {tol})"));
    }

    fn finish(self, budget: Option<(Duration, Duration)>) -> Outcome {
        let mut s = self.lines.join("; ");
        let mut failed = self.failed;
        if let Some((elapsed, limit)) = budget {
            s.push_str(&format!("; {:.1}s of {}s budget", elapsed.as_secs_f64(), limit.as_secs()));
            failed |= elapsed > limit;
        }
        if failed {
            Outcome::Fail(s)
        } else {
            Outcome::Pass(s)
        }
    }
}

fn minutes(m: u64) -> Duration {
    Duration::from_secs(60 * m)
}

fn c4_oracle(n: usize) -> f64 {
    let n = n as f64;
    (2.0 / (n - 1.0)).sqrt() * libm::tgamma(n / 2.0) / libm::tgamma((n - 1.0) / 2.0)
}

fn c1_c4() -> Outcome {
    let t = Instant::now();
    let mut c = Checks::new();
    let c2 = c4(2).unwrap();
    c.check(
        (c2 - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-9,
        format!("c4(2) = {c2:.10}"),
    );
    let c5 = c4(5).unwrap();
    c.check((c5 - 0.9399856030).abs() < 1e-9, format!("c4(5) = {c5:.10}"));
    let worst_oracle = (2..=30)
        .map(|n| (c4(n).unwrap() - c4_oracle(n)).abs())
        .fold(0.0, f64::max);
    c.check(worst_oracle < 1e-9, format!("max |c4 - gamma-ratio oracle| = {worst_oracle:.1e}"));
    let mut worst_z: f64 = 0.0;
    for n in 2..=30 {
        let m = simulate_standard_moments(Estimator::Scale(ScaleKind::StdDev), n, 1_000_000, 101).unwrap();
        worst_z = worst_z.max((m.gamma - c4(n).unwrap()).abs() / m.gamma_std_error());
    }
    c.check(worst_z <= 4.0, format!("MC gamma vs c4 worst |z| = {worst_z:.2} over n = 2..30"));
    c.finish(Some((t.elapsed(), minutes(1))))
}

fn c2_counterexample() -> Outcome {
    let t = Instant::now();
    let mut c = Checks::new();
    let cache = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("median_mad_4_5_1e7.json");
    let table = match load_table(&cache) {
        Ok(t) if t.mc_replications == 10_000_000 => t,
        _ => {
            let est = [Estimator::Location(LocationKind::Median), Estimator::Scale(ScaleKind::Mad)];
            let t = build_table(&est, 4..=5, 10_000_000, 7, |_| {}).unwrap();
            save_table(&t, &cache).unwrap();
            t
        }
    };
    let sizes = [4usize, 5];
    let nu: Vec<f64> = sizes.iter().map(|&n| table.nu_sq(LocationKind::Median, n).unwrap()).collect();
    let loc = |p| {
        let w = pooling::location_weights(p, &sizes, &nu).unwrap();
        pooling::pooled_variance_factor(&w, &[], &nu, EstimateKind::Location).unwrap()
    };
    let (la, lb) = (loc(PoolingType::A), loc(PoolingType::B));
    c.check(
        la < lb && format!("{la:.3}") == "0.146" && format!("{lb:.3}") == "0.147",
        format!("median Var_A = {la:.5}, Var_B = {lb:.5} (want 0.146 < 0.147)"),
    );
    let gamma: Vec<f64> = sizes.iter().map(|&n| table.unbiasing_factor(ScaleKind::Mad, n).unwrap()).collect();
    let tau: Vec<f64> = sizes.iter().map(|&n| table.tau_sq(ScaleKind::Mad, n).unwrap()).collect();
    let sc = |p| {
        let w = pooling::scale_weights(p, &gamma, &tau).unwrap();
        pooling::pooled_variance_factor(&w, &gamma, &tau, EstimateKind::Scale).unwrap()
    };
    let (sa, sb) = (sc(PoolingType::A), sc(PoolingType::B));
    c.check(
        sa < sb && format!("{sa:.3}") == "0.167" && format!("{sb:.3}") == "0.168",
        format!("MAD Var_A = {sa:.5}, Var_B = {sb:.5} (want 0.167 < 0.168)"),
    );
    c.finish(Some((t.elapsed(), minutes(10))))
}

fn re(r: &EfficiencyReport, e: Estimator, p: PoolingType) -> f64 {
    r.cell(e, p).unwrap().re_percent
}

const MEAN: Estimator = Estimator::Location(LocationKind::Mean);
const MEDIAN: Estimator = Estimator::Location(LocationKind::Median);
const HL1: Estimator = Estimator::Location(LocationKind::Hl1);
const SD: Estimator = Estimator::Scale(ScaleKind::StdDev);
const MAD: Estimator = Estimator::Scale(ScaleKind::Mad);
const SHAMOS: Estimator = Estimator::Scale(ScaleKind::Shamos);

fn efficiency_scenario(sizes: Vec<usize>, contamination: Option<ContaminationSpec>) -> EfficiencyReport {
    let cfg = ScenarioConfig {
        sizes,
        mu0: 100.0,
        sigma0: 10.0,
        replications: 100_000,
        master_seed: 2024,
        contamination,
    };
    efficiency_study(&cfg, None, FactorTable::builtin()).unwrap()
}

fn mse_identity(c: &mut Checks, r: &EfficiencyReport) {
    let worst = r
        .cells
        .iter()
        .map(|x| (x.mse - (x.variance + x.bias * x.bias)).abs() / x.mse)
        .fold(0.0, f64::max);
    c.check(worst < 1e-12, format!("mse = var + bias² worst rel. error {worst:.1e}"));
}

fn c3_table1() -> Outcome {
    let t = Instant::now();
    let mut c = Checks::new();
    let r = efficiency_scenario(vec![3, 10, 17], None);
    c.close(68.44, re(&r, MEDIAN, PoolingType::C), 1.0, "RE(median,C)");
    c.close(94.32, re(&r, HL1, PoolingType::C), 1.0, "RE(HL1,C)");
    c.close(80.65, re(&r, SHAMOS, PoolingType::C), 1.5, "RE(Shamos,C)");
    c.close(38.98, re(&r, MAD, PoolingType::C), 1.0, "RE(MAD,C)");
    c.lines.push(format!(
        "info RE(mean,A) = {:.2} (published 61.00), Var(HL1,C) = {:.4} (published 3.5344)",
        re(&r, MEAN, PoolingType::A),
        r.cell(HL1, PoolingType::C).unwrap().variance
    ));
    mse_identity(&mut c, &r);
    c.finish(Some((t.elapsed(), minutes(5))))
}

fn c4_table4() -> Outcome {
    let t = Instant::now();
    let mut c = Checks::new();
    let spec = ContaminationSpec {
        sample_index: 2,
        observation_index: ObservationIndex::LAST,
        delta: 100.0,
    };
    let r = efficiency_scenario(vec![9, 10, 11], Some(spec));
    c.close(23.07, re(&r, MEAN, PoolingType::C), 0.5, "RE(mean,C)");
    c.close(2.88, re(&r, SD, PoolingType::C), 0.3, "RE(SD,C)");
    c.close(79.72, re(&r, HL1, PoolingType::C), 1.0, "RE(HL1,C)");
    mse_identity(&mut c, &r);
    c.finish(Some((t.elapsed(), minutes(5))))
}

fn rl_config(plan: u8, contamination: Option<ContaminationSpec>) -> RunLengthConfig {
    let scenario = ScenarioConfig {
        sizes: plan_sizes(plan).unwrap(),
        mu0: 100.0,
        sigma0: 5.0,
        replications: 20_000,
        master_seed: 77,
        contamination,
    };
    RunLengthConfig::new(scenario, 10)
}

fn c5_table5() -> Outcome {
    let t = Instant::now();
    let mut c = Checks::new();
    let table = FactorTable::builtin();
    let arl = |plan, m, p| {
        run_length_grid(&rl_config(plan, None), &[(m, p)], table).unwrap().cells[0]
            .summary
            .arl
    };
    c.close(368.7, arl(5, Method::I, PoolingType::C), 25.0, "Plan-5 Method-I ARL");
    c.close(383.7, arl(3, Method::III, PoolingType::C), 30.0, "Plan-3 Method-III C ARL");
    c.close(366.8, arl(1, Method::I, PoolingType::C), 25.0, "Plan-1 Method-I C ARL");
    c.lines.push(format!(
        "info Plan-1 Method-II C ARL = {:.1} (published 491.4)",
        arl(1, Method::II, PoolingType::C)
    ));
    c.finish(Some((t.elapsed(), minutes(5))))
}

fn c6_table6() -> Outcome {
    let t = Instant::now();
    let mut c = Checks::new();
    let spec = ContaminationSpec {
        sample_index: 15,
        observation_index: ObservationIndex::LAST,
        delta: 100.0,
    };
    let cfg = rl_config(5, Some(spec));
    assert_eq!(cfg.rl_cap, DEFAULT_RL_CAP);
    let grid = run_length_grid(&cfg, &[(Method::I, PoolingType::C), (Method::III, PoolingType::C)], FactorTable::builtin())
        .unwrap();
    let (i, iii) = (&grid.cells[0].summary, &grid.cells[1].summary);
    c.check(i.arl > 5000.0, format!("Method-I ARL = {:.1} > 5000 (published 15165.5)", i.arl));
    c.check(
        (400.0..=560.0).contains(&iii.arl),
        format!("Method-III ARL = {:.1} in [400, 560] (published 473.9)", iii.arl),
    );
    for (name, s) in [("Method-I", i), ("Method-III", iii)] {
        let frac = s.censored_count as f64 / s.replications as f64;
        c.check(frac < 0.01, format!("{name} censored {} of {}", s.censored_count, s.replications));
    }
    c.finish(Some((t.elapsed(), minutes(5))))
}

fn c7_known_limits() -> Outcome {
    let t = Instant::now();
    let mut c = Checks::new();
    let s = known_limits_study(10, 3.0, 1_000_000, 5, DEFAULT_RL_CAP, RunLengthMode::Geometric).unwrap();
    let se = s.arl_std_error();
    c.check(
        (s.arl - 370.4).abs() <= 3.0 * se,
        format!("ARL = {:.2} (want 370.4 ± 3·{se:.2})", s.arl),
    );
    c.finish(Some((t.elapsed(), minutes(5))))
}

fn piston_rings() -> Option<Vec<Subgroup>> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/piston_rings.csv");
    read_dataset(&path).ok()
}

fn c8_piston_rings() -> Outcome {
    let Some(data) = piston_rings() else {
        return Outcome::Skip("data/piston_rings.csv not present".into());
    };
    let mut c = Checks::new();
    let rows = [
        (Method::I, [73.98693, 74.00075, 74.01457], 5e-4),
        (Method::II, [73.98650, 74.00139, 74.01629], 1e-3),
        (Method::III, [73.98644, 74.00072, 74.01499], 1e-3),
    ];
    for (m, want, tol) in rows {
        let est = phase1_estimate(&data, m, PoolingType::C, FactorTable::builtin()).unwrap();
        let l = control_limits(&est, 5, 3.0).unwrap();
        let got = [l.lcl, l.cl, l.ucl];
        let err = got.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        c.check(
            err <= tol,
            format!("Method-{m} ({:.5}, {:.5}, {:.5}) max err {err:.1e}", got[0], got[1], got[2]),
        );
    }
    c.finish(None)
}

fn random_sizes(rng: &mut ChaCha8Rng) -> Vec<usize> {
    let m = rng.random_range(1..=8);
    (0..m).map(|_| rng.random_range(2..=30)).collect()
}

fn c9_properties() -> Outcome {
    let t = Instant::now();
    let mut c = Checks::new();
    let table = FactorTable::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(9);

    let (mut worst_sum, mut worst_order) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let sizes = random_sizes(&mut rng);
        for kind in LocationKind::ALL {
            let nu: Vec<f64> = sizes.iter().map(|&n| table.nu_sq(kind, n).unwrap()).collect();
            let v: Vec<f64> = PoolingType::ABC
                .iter()
                .map(|&p| {
                    let w = pooling::location_weights(p, &sizes, &nu).unwrap();
                    worst_sum = worst_sum.max((w.iter().sum::<f64>() - 1.0).abs());
                    pooling::pooled_variance_factor(&w, &[], &nu, EstimateKind::Location).unwrap()
                })
                .collect();
            worst_order = worst_order.max((v[2] - v[0].min(v[1])) / v[2]);
        }
        for kind in ScaleKind::ALL {
            let g: Vec<f64> = sizes.iter().map(|&n| table.unbiasing_factor(kind, n).unwrap()).collect();
            let tau: Vec<f64> = sizes.iter().map(|&n| table.tau_sq(kind, n).unwrap()).collect();
            let v: Vec<f64> = PoolingType::ABC
                .iter()
                .map(|&p| {
                    let w = pooling::scale_weights(p, &g, &tau).unwrap();
                    let s: f64 = w.iter().zip(&g).map(|(a, b)| a * b).sum();
                    worst_sum = worst_sum.max((s - 1.0).abs());
                    pooling::pooled_variance_factor(&w, &g, &tau, EstimateKind::Scale).unwrap()
                })
                .collect();
            worst_order = worst_order.max((v[2] - v[0].min(v[1])) / v[2]);
        }
    }
    c.check(worst_sum <= 1e-12, format!("Σw = 1 / Σwγ = 1 worst {worst_sum:.1e}"));
    c.check(
        worst_order <= 1e-12,
        format!("Var(C) <= min(Var(A), Var(B)) over 1000 configs, worst excess {worst_order:.1e}"),
    );

    let mut worst_affine = 0.0f64;
    for _ in 0..50 {
        // keep N within the table so pooled-data MAD has its c5(N)
        let m = rng.random_range(1..=4);
        let sizes: Vec<usize> = (0..m).map(|_| rng.random_range(2..=7)).collect();
        let data: Vec<Subgroup> = sizes
            .iter()
            .enumerate()
            .map(|(i, &n)| Subgroup::new(i.to_string(), (0..n).map(|_| rng.random::<f64>() * 4.0).collect()).unwrap())
            .collect();
        let (a, b) = (rng.random_range(-50.0..50.0), rng.random_range(0.1..20.0));
        let moved: Vec<Subgroup> = data
            .iter()
            .map(|s| Subgroup::new(s.id.clone(), s.values().iter().map(|x| a + b * x).collect()).unwrap())
            .collect();
        for m in Method::ALL {
            for p in [PoolingType::A, PoolingType::B, PoolingType::C, PoolingType::D] {
                if m == Method::III && p == PoolingType::D {
                    continue;
                }
                let l0 = control_limits(&phase1_estimate(&data, m, p, table).unwrap(), 5, 3.0).unwrap();
                let l1 = control_limits(&phase1_estimate(&moved, m, p, table).unwrap(), 5, 3.0).unwrap();
                for (x, y) in [(l0.lcl, l1.lcl), (l0.cl, l1.cl), (l0.ucl, l1.ucl)] {
                    let want = a + b * x;
                    let scale = a.abs() + b * x.abs();
                    worst_affine = worst_affine.max((y - want).abs() / scale);
                }
            }
        }
    }
    c.check(worst_affine <= 1e-10, format!("affine equivariance worst rel. error {worst_affine:.1e}"));

    let run_on = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let eff = efficiency_study(
                &ScenarioConfig {
                    sizes: vec![3, 10, 17],
                    mu0: 100.0,
                    sigma0: 10.0,
                    replications: 5000,
                    master_seed: 1,
                    contamination: None,
                },
                None,
                table,
            )
            .unwrap();
            let mut cfg = rl_config(1, None);
            cfg.scenario.replications = 3000;
            let rl = run_length_grid(&cfg, &[(Method::I, PoolingType::C), (Method::II, PoolingType::A)], table).unwrap();
            (serde_json::to_string(&eff).unwrap(), rl.to_json().unwrap())
        })
    };
    c.check(run_on(1) == run_on(4), "1 vs 4 worker threads give bit-identical reports".into());
    c.finish(Some((t.elapsed(), minutes(5))))
}

fn ucl_range(data: &[Subgroup], placement: SweepPlacement, m: Method) -> f64 {
    let spec = SensitivitySweepSpec {
        start: 73.0,
        stop: 74.0,
        step: 0.1,
        sample_index: 1,
        placement,
        methods: vec![m],
        pooling: PoolingType::C,
        n_k: 5,
        g: 3.0,
    };
    let rows = sensitivity_sweep(data, &spec, FactorTable::builtin()).unwrap();
    assert_eq!(rows.len(), 11);
    let ucl = rows.iter().map(|r| r.limits.ucl);
    ucl.clone().fold(f64::NEG_INFINITY, f64::max) - ucl.fold(f64::INFINITY, f64::min)
}

fn c10_sensitivity() -> Outcome {
    let Some(data) = piston_rings() else {
        return Outcome::Skip("data/piston_rings.csv not present".into());
    };
    let mut c = Checks::new();
    for (mode, placement) in [
        ("append", SweepPlacement::Append),
        ("replace", SweepPlacement::Replace { observation_index: 1 }),
    ] {
        let r: Vec<f64> = Method::ALL.iter().map(|&m| ucl_range(&data, placement, m)).collect();
        c.check(
            r[0] > r[1] && r[0] > r[2],
            format!("{mode}: UCL range I {:.5} vs II {:.5}, III {:.5}", r[0], r[1], r[2]),
        );
    }
    c.finish(None)
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("c4 closed form and MC agreement", c1_c4),
        ("A vs B counterexample at sizes (4, 5)", c2_counterexample),
        ("clean efficiency, sizes 3/10/17", c3_table1),
        ("contaminated efficiency, sizes 9/10/11", c4_table4),
        ("in-control run lengths", c5_table5),
        ("run lengths under Phase-I contamination", c6_table6),
        ("known-limits ARL", c7_known_limits),
        ("piston-ring limits", c8_piston_rings),
        ("property suites", c9_properties),
        ("contamination sensitivity sweep", c10_sensitivity),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::Fail(format!("panicked: {msg}"))
        });
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failures += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("criterion {:>2} {tag}: {name}: {detail}", i + 1);
    }
    if failures > 0 {
        println!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
}
