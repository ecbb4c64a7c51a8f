//! End-to-end acceptance checks. Runs as a plain binary (`harness = false`)
//! printing one PASS/FAIL line per criterion; exits nonzero if any gating
//! criterion fails.

use std::time::Instant;

use mrp_core::engine::LabelPropagation;
use mrp_core::evalharness::{run_trial, Method};
use mrp_core::oracle::{local_estimate_masked, solve_exact};
use mrp_core::{
    compute_metrics, estimate, estimate_all, generate, run, sample_labeled, EstimationOptions,
    ExperimentSpec, NodeValueMap, PropagationConfig, Propagator, RelationParams, SynthRelation,
    SynthSpec,
};
use mrp_validation::{random_case, Case};

fn config(xi: f64) -> PropagationConfig {
    PropagationConfig {
        xi,
        ..PropagationConfig::default()
    }
}

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("{id} {} {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

/// Largest per-node distance between a run's values and the exact solution,
/// relative to `max(1e-6, 10 eps)`.
fn oracle_error(c: &Case, cfg: &PropagationConfig) -> (bool, f64) {
    let res = run(&c.graph, &c.params, &c.labels, cfg).unwrap();
    let exact = solve_exact(&c.graph, &c.params, &c.labels).unwrap();
    let tol = (10.0 * res.epsilon).max(1e-6);
    let err = (0..c.graph.node_count())
        .map(|i| (res.values[i] - exact.get(i).unwrap()).abs())
        .fold(0.0f64, f64::max);
    (res.converged && res.unreached.is_empty(), err / tol)
}

/// Gated on a run threshold small enough for the 1e-6 floor to apply; the
/// count at the default threshold is reported alongside.
fn a1(report: &mut Report) {
    let start = Instant::now();
    let tight = PropagationConfig {
        epsilon_fraction: 1e-10,
        max_iterations: 1_000_000,
        ..PropagationConfig::default()
    };
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut default_misses = 0;
    for seed in 0..100 {
        let c = random_case(seed);
        let (converged, ratio) = oracle_error(&c, &tight);
        ok &= converged && ratio <= 1.0;
        worst = worst.max(ratio);
        if oracle_error(&c, &config(0.5)).1 > 1.0 {
            default_misses += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 30.0;
    report.line(
        "A1",
        ok,
        format!(
            "oracle equivalence: 100 graphs at epsilon_fraction 1e-10, worst error {worst:.3} x tolerance, \
             {secs:.2}s (at the default threshold {default_misses}/100 exceed 10 eps)"
        ),
    );
}

fn a2(report: &mut Report) {
    let mut ok = true;
    let mut steps = 0usize;
    for seed in 0..20 {
        let c = random_case(1000 + seed);
        let defaults = vec![RelationParams::default(); c.graph.relation_count()];
        let cfg = config(0.5);
        let mrp = Propagator::new(&c.graph, &defaults, &c.labels, &cfg).unwrap();
        let lp = LabelPropagation::new(&c.graph, &c.labels, &cfg).unwrap();
        let (mut a, mut b) = (mrp.init_state(), lp.init_state());
        for _ in 0..200 {
            let (na, da) = mrp.step(&a);
            let (nb, db) = lp.step(&b);
            let same_x =
                na.x.iter()
                    .zip(&nb.x)
                    .all(|(p, q)| p.to_bits() == q.to_bits());
            ok &= same_x && na.u == nb.u && da.to_bits() == db.to_bits();
            a = na;
            b = nb;
            steps += 1;
        }
    }
    report.line(
        "A2",
        ok,
        format!("LP reduction: {steps} iterates over 20 graphs compared bitwise"),
    );
}

fn shift_spec(n: usize, tau: f64, sigma: f64, seed: u64) -> SynthSpec {
    SynthSpec {
        node_count: n,
        relations: vec![SynthRelation {
            name: "r".into(),
            eta: 1.0,
            tau,
            sigma,
            extra_edge_count: 0,
        }],
        root_value_mean: 0.0,
        root_value_std: 0.0,
        seed,
    }
}

fn a3(report: &mut Report) {
    let mut wins = 0;
    let (mut sum_mrp, mut sum_lp) = (0.0, 0.0);
    for seed in 0..20 {
        let data = generate(&shift_spec(1000, 5.0, 0.1, seed)).unwrap();
        let spec = ExperimentSpec {
            label_ratio: 0.5,
            trials: 1,
            seed: 500 + seed,
            methods: vec![Method::LpUnion, Method::Mrp],
            estimation: EstimationOptions::default(),
            propagation: PropagationConfig::default(),
        };
        let out = run_trial(&data.graph, &data.values, &spec, 0).unwrap();
        let lp = out[0].metrics.as_ref().unwrap().rmse;
        let mrp = out[1].metrics.as_ref().unwrap().rmse;
        if mrp < lp {
            wins += 1;
        }
        sum_mrp += mrp;
        sum_lp += lp;
    }
    let (mean_mrp, mean_lp) = (sum_mrp / 20.0, sum_lp / 20.0);
    report.line(
        "A3",
        wins >= 19 && mean_mrp < 0.5 * mean_lp,
        format!("MrP beats LP: {wins}/20 seeds, mean RMSE {mean_mrp:.4} vs {mean_lp:.4}"),
    );
}

fn a4(report: &mut Report) {
    let mut worst_tau = 0.0f64;
    let mut worst_var = 0.0f64;
    for seed in 0..20 {
        let data = generate(&shift_spec(10_001, 3.0, 1.0, seed)).unwrap();
        assert_eq!(data.graph.edge_count(), 10_000);
        let est = estimate(&data.graph, &data.values, 0, &EstimationOptions::default()).unwrap();
        worst_tau = worst_tau.max((est.params.tau - 3.0).abs());
        worst_var = worst_var.max((1.0 / est.params.omega - 1.0).abs());
    }
    report.line(
        "A4",
        worst_tau <= 0.05 && worst_var <= 0.1,
        format!("parameter recovery: max |tau - 3| {worst_tau:.4}, max |1/omega - 1| {worst_var:.4} over 20 seeds"),
    );
}

fn a5(report: &mut Report) {
    const XIS: [f64; 3] = [0.25, 0.5, 1.0];
    let mut spread_misses = 0;
    let mut residual_misses = [0usize; 3];
    let mut worst_spread = 0.0f64;
    let mut worst_residual = 0.0f64;
    let mut converged = true;
    for seed in 0..100 {
        let c = random_case(seed);
        let runs: Vec<_> = XIS
            .iter()
            .map(|&xi| run(&c.graph, &c.params, &c.labels, &config(xi)).unwrap())
            .collect();
        let eps = runs[0].epsilon;
        for (k, r) in runs.iter().enumerate() {
            converged &= r.converged;
            let mut worst_here = 0.0f64;
            for i in 0..c.graph.node_count() {
                if c.labels.contains(i) || !r.propagated[i] {
                    continue;
                }
                let z =
                    local_estimate_masked(&c.graph, &c.params, &r.values, i, |j| r.propagated[j])
                        .unwrap();
                worst_here = worst_here.max((r.values[i] - z).abs() / eps);
            }
            worst_residual = worst_residual.max(worst_here);
            if worst_here > 1.0 {
                residual_misses[k] += 1;
            }
        }
        let mut spread = 0.0f64;
        for i in 0..c.graph.node_count() {
            let vals = runs.iter().map(|r| r.values[i]);
            let lo = vals.clone().fold(f64::INFINITY, f64::min);
            let hi = vals.fold(f64::NEG_INFINITY, f64::max);
            spread = spread.max((hi - lo) / eps);
        }
        worst_spread = worst_spread.max(spread);
        if spread > 10.0 {
            spread_misses += 1;
        }
    }
    let ok = converged && spread_misses == 0 && residual_misses.iter().all(|&m| m == 0);
    report.line(
        "A5",
        ok,
        format!(
            "damping invariance: spread > 10 eps on {spread_misses}/100 graphs (max {worst_spread:.1} eps); \
             stationarity residual > eps on {}/{}/{} graphs for xi 0.25/0.5/1 (max {worst_residual:.2} eps)",
            residual_misses[0], residual_misses[1], residual_misses[2]
        ),
    );
}

fn a6(report: &mut Report) {
    let mut worst = 0.0f64;
    let mut ok = true;
    for seed in 0..10 {
        let spec = SynthSpec {
            node_count: 300,
            relations: vec![
                SynthRelation {
                    name: "up".into(),
                    eta: 1.0,
                    tau: 4.0,
                    sigma: 0.5,
                    extra_edge_count: 30,
                },
                SynthRelation {
                    name: "across".into(),
                    eta: 1.0,
                    tau: -1.0,
                    sigma: 2.0,
                    extra_edge_count: 30,
                },
            ],
            root_value_mean: 20.0,
            root_value_std: 5.0,
            seed,
        };
        let data = generate(&spec).unwrap();
        let all: Vec<usize> = (0..spec.node_count).collect();
        let labels = data
            .values
            .restrict(&sample_labeled(&all, 0.5, seed).unwrap());
        let mapped = labels.map_values(|v| 3.0 * v - 7.0).unwrap();
        let solve = |l: &NodeValueMap| {
            let p: Vec<RelationParams> =
                estimate_all(&data.graph, l, &EstimationOptions::default())
                    .unwrap()
                    .into_iter()
                    .map(|e| e.params)
                    .collect();
            run(&data.graph, &p, l, &PropagationConfig::default()).unwrap()
        };
        let (a, b) = (solve(&labels), solve(&mapped));
        ok &= a.propagated == b.propagated && a.iterations_run == b.iterations_run;
        let expected: Vec<f64> = a.values.iter().map(|v| 3.0 * v - 7.0).collect();
        let scale = expected.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = expected
            .iter()
            .zip(&b.values)
            .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        worst = worst.max(diff / scale);
    }
    ok &= worst <= 1e-8;
    report.line(
        "A6",
        ok,
        format!("affine equivariance: max relative deviation {worst:.2e} over 10 seeds"),
    );
}

fn a7(report: &mut Report) {
    let mut truth = NodeValueMap::new(2);
    truth.insert(0, 0.0).unwrap();
    truth.insert(1, 10.0).unwrap();
    let mut pred = NodeValueMap::new(2);
    pred.insert(0, 0.0).unwrap();
    pred.insert(1, 5.0).unwrap();
    let m = compute_metrics(&pred, &truth, &[0, 1]).unwrap();
    let rmse = 12.5f64.sqrt();
    let ok = (m.rmse - rmse).abs() <= 1e-12
        && (m.mape - 0.5).abs() <= 1e-12
        && m.nrmse.is_some_and(|v| (v - rmse / 10.0).abs() <= 1e-12);
    report.line(
        "A7",
        ok,
        format!(
            "metric definitions: rmse {}, mape {}, nrmse {:?}",
            m.rmse, m.mape, m.nrmse
        ),
    );
}

fn main() {
    let mut report = Report { failures: 0 };
    a1(&mut report);
    a2(&mut report);
    a3(&mut report);
    a4(&mut report);
    a5(&mut report);
    a6(&mut report);
    a7(&mut report);
    println!("A8 SKIP dataset reproduction is optional and needs external station data");
    if report.failures > 0 {
        println!("{} acceptance criteria failed", report.failures);
        std::process::exit(1);
    }
}
