use gatedvol::evaluation::*;
use gatedvol::features::FeatureMatrix;
use gatedvol::models::{simulate_path, Family, FeatureGenerator, ModelSpec, Params};
use gatedvol::stats::{ks_test, normal_cdf};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normals(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

#[test]
fn calibrated_forecasts_beat_inflated_ones_under_fz() {
    let mut wins = 0;
    for seed in 0..200 {
        let mut g = rng(seed);
        let h: Vec<f64> = (0..2000).map(|t| 0.5 + (t as f64 / 50.0).sin().powi(2)).collect();
        let r: Vec<f64> = h.iter().map(|h| h.sqrt() * g.sample::<f64, _>(StandardNormal)).collect();
        let score = |scale: f64| {
            let ve: Vec<VarEs> = h.iter().map(|h| var_es_forecast(h * scale * scale, 0.05).unwrap()).collect();
            let v: Vec<f64> = ve.iter().map(|x| x.var).collect();
            let e: Vec<f64> = ve.iter().map(|x| x.es).collect();
            fz_loss(&v, &e, &r, 0.05).unwrap()
        };
        wins += (score(1.0) < score(2.0)) as usize;
    }
    assert!(wins >= 190, "{wins}/200");
}

#[test]
fn christoffersen_size_under_iid_hits() {
    let mut rejections = 0;
    for seed in 0..500 {
        let mut g = rng(1000 + seed);
        let hits: Vec<bool> = (0..5000).map(|_| g.random::<f64>() < 0.05).collect();
        rejections += (christoffersen_test(&hits).unwrap().p_value < 0.05) as usize;
    }
    let rate = rejections as f64 / 500.0;
    assert!((0.03..=0.07).contains(&rate), "{rate}");
}

#[test]
fn kupiec_ignores_order_christoffersen_does_not() {
    let mut hits: Vec<bool> = (0..400).map(|i| i < 40).collect();
    let n = hits.iter().filter(|h| **h).count();
    let k1 = kupiec_test(n, hits.len(), 0.05).unwrap();
    let c1 = christoffersen_test(&hits).unwrap();
    hits.shuffle(&mut rng(3));
    let k2 = kupiec_test(hits.iter().filter(|h| **h).count(), hits.len(), 0.05).unwrap();
    let c2 = christoffersen_test(&hits).unwrap();
    assert_eq!(k1, k2);
    assert_ne!(c1.stat, c2.stat);
}

#[test]
fn dm_size_and_power() {
    let mut rejections = 0;
    for seed in 0..500 {
        let mut g = rng(5000 + seed);
        let d = normals(&mut g, 1000);
        rejections += (dm_test(&d, &vec![0.0; 1000], None).unwrap().p_value < 0.05) as usize;
    }
    let rate = rejections as f64 / 500.0;
    assert!((0.03..=0.07).contains(&rate), "{rate}");

    let mut g = rng(9);
    let d: Vec<f64> = normals(&mut g, 1000).iter().map(|x| x + 0.2).collect();
    let t = dm_test(&d, &vec![0.0; 1000], None).unwrap();
    // Sampling sd of the statistic is about 1.
    assert!((t.stat - 0.2 * 1000f64.sqrt()).abs() < 3.5, "{}", t.stat);
}

#[test]
fn vuong_centered_statistic_is_standard_normal() {
    let (mu, n) = (0.05, 2000);
    let centered: Vec<f64> = (0..500)
        .map(|seed| {
            let mut g = rng(20_000 + seed);
            let m: Vec<f64> = normals(&mut g, n).iter().map(|x| x + mu).collect();
            vuong_test(&m, &vec![0.0; n], None).unwrap().stat - (n as f64).sqrt() * mu
        })
        .collect();
    let (_, p) = ks_test(&centered, normal_cdf);
    assert!(p > 0.01, "KS p = {p}");
    let a = vec![1.0; 50];
    let b = vec![0.5; 50];
    assert!(vuong_test(&a, &b, None).unwrap().stat > 0.0);
}

#[test]
fn rmse_matches_direct_recomputation() {
    let mut g = rng(77);
    let r = normals(&mut g, 500);
    let h: Vec<f64> = (0..500).map(|_| g.random_range(0.2..3.0)).collect();
    let mut acc = 0.0;
    for i in 0..500 {
        let e = r[i] * r[i] - h[i];
        acc += e * e;
    }
    assert!((variance_rmse(&h, &r).unwrap() - (acc / 500.0).sqrt()).abs() < 1e-12);
}

fn garch_data(n: usize, seed: u64) -> (Vec<f64>, Vec<chrono::NaiveDate>) {
    let spec = ModelSpec::new(Family::Garch, 0);
    let s = simulate_path(&spec, &Params::garch(0.05, 0.08, 0.9), n, seed, &FeatureGenerator::Iid { columns: 0 }).unwrap();
    (s.returns, s.dates)
}

#[test]
fn backtest_with_one_forecast_degrades_gracefully() {
    let (r, d) = garch_data(700, 1);
    let models = vec![("garch".to_string(), ModelSpec::new(Family::Garch, 0))];
    let opts = BacktestOptions { window: 699, refit_every: 21, ..BacktestOptions::default() };
    let rep = rolling_backtest(&models, &r, &d, &FeatureMatrix::empty(700), &opts).unwrap();
    assert_eq!(rep.models[0].records.len(), 1);
    assert_eq!(rep.models[0].records[0].t, 699);
    let m = rep.models[0].metrics.as_ref().unwrap();
    assert_eq!(m.n, 1);
    assert!(m.christoffersen_5.degenerate);
}

#[test]
fn identical_specs_compare_as_equal() {
    let (r, d) = garch_data(800, 2);
    let models = vec![
        ("a".to_string(), ModelSpec::new(Family::Garch, 0)),
        ("b".to_string(), ModelSpec::new(Family::Garch, 0)),
    ];
    let opts = BacktestOptions { window: 600, refit_every: 50, ..BacktestOptions::default() };
    let rep = rolling_backtest(&models, &r, &d, &FeatureMatrix::empty(800), &opts).unwrap();
    assert_eq!(rep.models[0].records, rep.models[1].records);
    let p = &rep.pairwise[0];
    assert_eq!(p.n, 200);
    for t in [p.dm_qlike, p.dm_rmse, p.dm_fz_1, p.dm_fz_5, p.vuong] {
        let t = t.unwrap();
        assert_eq!((t.stat, t.p_value), (0.0, 1.0));
    }
    let m = rep.models[0].metrics.as_ref().unwrap();
    assert!((0.0..=1.0).contains(&m.exceed_rate_5));
    assert!((0.0..=1.0).contains(&m.kupiec_5.p_value));
}

#[test]
fn failing_model_is_recorded_not_fatal() {
    let (r, d) = garch_data(800, 3);
    // Window too short for the burn-in: every refit fails.
    let models = vec![
        ("garch".to_string(), ModelSpec::new(Family::Garch, 0)),
        ("short".to_string(), ModelSpec::new(Family::Garch, 0).with_burn_in(590)),
    ];
    let opts = BacktestOptions { window: 600, refit_every: 100, ..BacktestOptions::default() };
    let rep = rolling_backtest(&models, &r, &d, &FeatureMatrix::empty(800), &opts).unwrap();
    assert!(rep.models[0].metrics.is_some());
    assert!(rep.models[1].metrics.is_none());
    assert!(!rep.models[1].errors.is_empty());
    assert_eq!(rep.pairwise[0].n, 0);
}
