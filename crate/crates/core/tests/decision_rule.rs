use fulcal::data::{generate_synthetic, SyntheticConfig};
use fulcal::decision::{points_at, tune_eta, DecisionRuleConfig};
use fulcal::learners::{fit_least_squares, Scorer};
use fulcal::metrics::point_metrics;
use fulcal::{Dataset, Deviation, DiscreteDistribution, Distribution, EmpiricalPredictiveCdf, PredictiveDistribution, Scps};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Objective recomputed from scratch: direct quantile queries, explicit
/// rounding, explicit RMSE sums.
fn naive_objective(dists: &[Distribution<f64>], labels: &[i32], eta: f64, beta: f64, gamma: f64) -> f64 {
    let mut all = (0.0, 0);
    let mut late = (0.0, 0);
    let mut early = (0.0, 0);
    for (d, &y) in dists.iter().zip(labels) {
        let q = d.quantile(eta / 100.0).unwrap();
        let p = q.round().clamp(-10.0, 10.0);
        let e2 = (p - f64::from(y)).powi(2);
        all = (all.0 + e2, all.1 + 1);
        if y > 0 {
            late = (late.0 + e2, late.1 + 1);
        }
        if y < 0 {
            early = (early.0 + e2, early.1 + 1);
        }
    }
    let rmse = |(s, n): (f64, usize)| if n == 0 { 0.0 } else { (s / n as f64).sqrt() };
    rmse(all) + beta * rmse(late) + gamma * rmse(early)
}

fn brute_force_eta(dists: &[Distribution<f64>], labels: &[i32], beta: f64, gamma: f64) -> f64 {
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..=100 {
        let eta = f64::from(k);
        let v = naive_objective(dists, labels, eta, beta, gamma);
        if v < best.0 {
            best = (v, eta);
        }
    }
    best.1
}

fn deviations(v: &[i32]) -> Vec<Deviation> {
    v.iter().map(|&d| Deviation::new(d).unwrap()).collect()
}

/// Distributions paired with integer-day labels.
type Forecasts = (Vec<Distribution<f64>>, Vec<i32>);

fn ninety_percent_case() -> Forecasts {
    let mut rng = ChaCha8Rng::seed_from_u64(90);
    let mut dists: Vec<Distribution<f64>> = vec![
        // quantile is 0 up to level 0.895 and 1 above it, so only eta >= 90 hits
        DiscreteDistribution::new(vec![0.0, 1.0], vec![0.895, 0.105]).unwrap().into(),
        // 0 up to level 0.9 inclusive, 1 above it
        DiscreteDistribution::new(vec![0.0, 1.0], vec![0.9, 0.1]).unwrap().into(),
        DiscreteDistribution::new(vec![-2.0, 3.0], vec![0.85, 0.15]).unwrap().into(),
    ];
    for _ in 0..40 {
        let scores: Vec<f64> = (0..30).map(|_| rng.random_range(-6.0..6.0)).collect();
        dists.push(EmpiricalPredictiveCdf::new(scores, 0.5).unwrap().into());
    }
    let labels = dists
        .iter()
        .map(|d| d.quantile(0.9).unwrap().round().clamp(-10.0, 10.0) as i32)
        .collect();
    (dists, labels)
}

#[test]
fn labels_at_the_ninety_percent_quantile_give_eta_ninety() {
    let (dists, labels) = ninety_percent_case();
    let cfg = DecisionRuleConfig {
        beta: 0.0,
        gamma: 0.0,
        grid_step: 1.0,
    };
    let report = tune_eta(&dists, &deviations(&labels), &cfg).unwrap();
    assert_eq!(brute_force_eta(&dists, &labels, 0.0, 0.0), 90.0);
    assert_eq!(report.eta_star, 90.0);
    assert_eq!(report.objective_star, 0.0);
}

fn benchmark(seed: u64) -> (Forecasts, Forecasts) {
    let d: Dataset = generate_synthetic(&SyntheticConfig {
        n_rows: 6000,
        seed,
        ..Default::default()
    })
    .unwrap();
    let h = fit_least_squares(&d.slice(0..2000)).unwrap();
    let cal = d.slice(2000..3000);
    let model = Scps::fit(&h.score_all(cal.features()), &cal.label_values()).unwrap();
    let forecast = |part: &Dataset| -> Forecasts {
        let dists = part
            .features()
            .iter()
            .map(|x| model.cdf(h.score(x), 0.5).unwrap().into())
            .collect();
        (dists, part.labels().iter().map(|l| l.days()).collect())
    };
    (forecast(&d.slice(3000..4000)), forecast(&d.slice(4000..6000)))
}

#[test]
fn grid_objectives_match_naive_recomputation() {
    let ((vd, vy), _) = benchmark(4);
    let cfg = DecisionRuleConfig {
        beta: 0.7,
        gamma: 0.3,
        grid_step: 2.5,
    };
    let report = tune_eta(&vd, &deviations(&vy), &cfg).unwrap();
    assert_eq!(report.grid.len(), 41);
    for g in &report.grid {
        let naive = naive_objective(&vd, &vy, g.eta, cfg.beta, cfg.gamma);
        assert!((g.objective - naive).abs() <= 1e-12, "eta {}", g.eta);
    }
    let again = tune_eta(&vd, &deviations(&vy), &cfg).unwrap();
    assert_eq!(again, report);
}

#[test]
fn heavy_late_weight_never_lowers_eta() {
    let ((vd, vy), _) = benchmark(6);
    let labels = deviations(&vy);
    let at = |beta| {
        tune_eta(&vd, &labels, &DecisionRuleConfig { beta, gamma: 0.0, grid_step: 0.5 })
            .unwrap()
            .eta_star
    };
    assert!(at(1e6) >= at(0.0));
}

#[test]
fn late_detection_is_monotone_in_beta() {
    for seed in 1..=3 {
        let ((vd, vy), (td, ty)) = benchmark(seed);
        let labels = deviations(&vy);
        let mut prev = f64::NEG_INFINITY;
        for beta in [0.0, 0.5, 1.0, 2.0] {
            let r = tune_eta(&vd, &labels, &DecisionRuleConfig { beta, gamma: 0.0, grid_step: 0.5 }).unwrap();
            let preds = points_at(&td, r.eta_star).unwrap();
            let rate = point_metrics(&preds, &ty).unwrap().late_detection_rate.unwrap();
            assert!(rate >= prev, "seed {seed} beta {beta}: {rate} < {prev}");
            prev = rate;
        }
    }
}
