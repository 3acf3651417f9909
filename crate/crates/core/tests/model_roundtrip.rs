use fulcal::data::{generate_synthetic, timeseries_folds, SyntheticConfig};
use fulcal::learners::{fit_least_squares, Scorer};
use fulcal::venn_abers::FoldSpans;
use fulcal::{Cvap, Dataset, Mcps, Multiclass, PredictiveDistribution, Scps, TwoStage};
use serde::de::DeserializeOwned;
use serde::Serialize;

fn roundtrip<M: Serialize + DeserializeOwned + PartialEq + std::fmt::Debug>(model: &M) -> M {
    let text = serde_json::to_string(model).unwrap();
    let back: M = serde_json::from_str(&text).unwrap();
    assert_eq!(&back, model);
    back
}

fn close(a: f64, b: f64) {
    assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
}

fn setup() -> (Dataset, Vec<FoldSpans>) {
    let d: Dataset = generate_synthetic(&SyntheticConfig {
        n_rows: 2400,
        seed: 11,
        ..Default::default()
    })
    .unwrap();
    let plan = timeseries_folds(2000, 4).unwrap();
    let spans = plan.folds.iter().map(|f| (f.train.clone(), f.calibration.clone())).collect();
    (d, spans)
}

#[test]
fn conformal_models_survive_json() {
    let (d, _) = setup();
    let h = fit_least_squares(&d.slice(0..1000)).unwrap();
    let cal = d.slice(1000..2000);
    let preds = h.score_all(cal.features());
    let scps = Scps::fit(&preds, &cal.label_values()).unwrap();
    let mcps = Mcps::fit(&preds, &cal.label_values(), 10).unwrap();
    let (s2, m2) = (roundtrip(&scps), roundtrip(&mcps));
    for x in &d.features()[2000..] {
        let hx = h.score(x);
        for q in [0.05, 0.5, 0.95] {
            close(scps.cdf(hx, 0.3).unwrap().quantile(q).unwrap(), s2.cdf(hx, 0.3).unwrap().quantile(q).unwrap());
            close(mcps.cdf(hx, 0.3).unwrap().quantile(q).unwrap(), m2.cdf(hx, 0.3).unwrap().quantile(q).unwrap());
        }
    }
}

#[test]
fn venn_abers_models_survive_json() {
    let (d, spans) = setup();
    let rows = &d.features()[..2000];
    let late: Vec<bool> = d.labels()[..2000].iter().map(|l| l.days() > 0).collect();
    let days: Vec<i32> = d.labels()[..2000].iter().map(|l| l.days().signum()).collect();
    let cvap = Cvap::fit_folds(rows, &late, &spans).unwrap();
    let multi_cvap = Multiclass::fit_cvap(rows, &days, &[-1, 0, 1], &spans).unwrap();
    let multi_ir = Multiclass::fit_isotonic(rows, &days, &[-1, 0, 1], spans.last().unwrap()).unwrap();
    let (c2, mc2, mi2) = (roundtrip(&cvap), roundtrip(&multi_cvap), roundtrip(&multi_ir));
    for x in &d.features()[2000..] {
        close(cvap.predict(x), c2.predict(x));
        for (a, b) in [(&multi_cvap, &mc2), (&multi_ir, &mi2)] {
            let (pa, pb) = (a.predict(x).unwrap(), b.predict(x).unwrap());
            for (u, v) in pa.probs().iter().zip(pb.probs()) {
                close(*u, *v);
            }
        }
    }
}

#[test]
fn two_stage_model_survives_json() {
    let (d, _) = setup();
    let train = d.slice(0..2000);
    let plan = timeseries_folds(2000, 4).unwrap();
    for bins in [None, Some(5)] {
        let model = TwoStage::fit(&train, &plan, bins).unwrap();
        let back = roundtrip(&model);
        for x in &d.features()[2000..2100] {
            let (a, b) = (model.predict(x, 0.5).unwrap(), back.predict(x, 0.5).unwrap());
            for y in [-3.0, -0.5, 0.0, 0.5, 4.0] {
                close(a.cdf(y), b.cdf(y));
            }
        }
    }
}
