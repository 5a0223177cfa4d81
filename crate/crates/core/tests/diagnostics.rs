use gatedvol::diagnostics::*;
use gatedvol::features::FeatureMatrix;
use gatedvol::models::{filter_variance, simulate_path, Family, FeatureGenerator, ModelSpec, Params, VariancePath};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn vp_from(z: Vec<f64>) -> VariancePath {
    VariancePath { h: vec![1.0; z.len()], loglik_terms: Vec::new(), std_resid: z, burn_in: 0 }
}

#[test]
fn ljung_box_size_on_iid_residuals() {
    let mut rej = [0usize; 2];
    for seed in 0..500 {
        let mut g = ChaCha8Rng::seed_from_u64(40_000 + seed);
        let z: Vec<f64> = (0..5000).map(|_| g.sample(StandardNormal)).collect();
        let r = residual_diagnostics(&vp_from(z), 40, None).unwrap();
        for (i, lb) in r.ljung_box.iter().enumerate() {
            rej[i] += (lb.z.p_value < 0.05) as usize;
        }
    }
    for (i, n) in rej.iter().enumerate() {
        let rate = *n as f64 / 500.0;
        assert!((0.03..=0.07).contains(&rate), "lags {}: {rate}", LB_LAGS[i]);
    }
}

#[test]
fn ljung_box_detects_unfiltered_garch() {
    let spec = ModelSpec::new(Family::Garch, 0);
    let mut hits = 0;
    for seed in 0..50 {
        let s = simulate_path(&spec, &Params::garch(0.05, 0.08, 0.9), 3000, seed, &FeatureGenerator::Iid { columns: 0 }).unwrap();
        let sd = (s.returns.iter().map(|r| r * r).sum::<f64>() / 3000.0).sqrt();
        let r = residual_diagnostics(&vp_from(s.returns.iter().map(|r| r / sd).collect()), 40, None).unwrap();
        hits += (r.ljung_box[1].z2.p_value < 0.01) as usize;
    }
    assert!(hits >= 45, "{hits}/50");
}

#[test]
fn filtered_garch_residuals_pass_and_rolling_windows_align() {
    let spec = ModelSpec::new(Family::Garch, 0);
    let p = Params::garch(0.05, 0.08, 0.9);
    let s = simulate_path(&spec, &p, 1200, 3, &FeatureGenerator::Iid { columns: 0 }).unwrap();
    let (vp, _) = filter_variance(&spec, &p, &s.returns, &FeatureMatrix::empty(1200)).unwrap();
    let r = residual_diagnostics(&vp, 40, Some(LB_WINDOW)).unwrap();
    assert_eq!(r.n, 1200 - vp.burn_in);
    let lb = &r.ljung_box[0];
    assert_eq!(lb.rolling_z.len(), r.n - LB_WINDOW + 1);
    assert!(lb.rolling_z.iter().chain(&lb.rolling_z2).all(|(_, p)| (0.0..=1.0).contains(p)));
    let total: usize = r.histogram.counts.iter().sum::<usize>() + r.histogram.below + r.histogram.above;
    assert_eq!(total, r.n);
}

#[test]
fn gate_summary_respects_ranges() {
    let spec = ModelSpec::new(Family::Tgvol, 2).with_lags(50);
    let p = Params {
        omega: 0.05,
        alpha: 0.09,
        beta_low: 0.5,
        beta_high: 0.9,
        gamma_p: vec![1.0, -0.5],
        kappa: 0.05,
        eta: vec![0.2, 0.1],
        dbar: 0.1,
        gamma_d: vec![0.5, 0.0],
        ..Params::default()
    };
    let s = match simulate_path(&spec, &p, 2000, 1, &FeatureGenerator::Iid { columns: 2 }) {
        Ok(s) => s,
        Err(e) => panic!("{e}"),
    };
    let (vp, gp) = filter_variance(&spec, &p, &s.returns, &s.features).unwrap();
    let sums = gate_summary(&gp, &vp, &s.features, vp.burn_in);
    assert_eq!(sums.len(), 3);
    for sm in &sums {
        let hi = if sm.name == "d" { p.dbar } else { 1.0 };
        assert!(sm.min > 0.0 && sm.max < hi, "{}: [{}, {}]", sm.name, sm.min, sm.max);
        assert!(sm.quantiles.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(sm.feature_corr.len(), 2);
    }
    // p rises with z0 (γ_p[0] > 0).
    assert!(sums[0].feature_corr[0].1 > 0.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn acf_bounded_and_q_monotone(xs in prop::collection::vec(-10.0f64..10.0, 60..300)) {
        prop_assume!(xs.iter().any(|v| (v - xs[0]).abs() > 1e-6));
        let a = acf(&xs, 40).unwrap();
        prop_assert_eq!(a[0], 1.0);
        prop_assert!(a.iter().all(|v| v.abs() <= 1.0 + 1e-12));
        let mut prev = 0.0;
        for l in 1..=40.min(xs.len() - 11) {
            let t = ljung_box(&xs, l).unwrap();
            prop_assert!(t.stat >= prev);
            prop_assert!((0.0..=1.0).contains(&t.p_value));
            prev = t.stat;
        }
    }

    #[test]
    fn surface_counts_cover_sample(xs in prop::collection::vec(0.0f64..1.0, 10..200), bins in 1usize..12) {
        let n = xs.len();
        let ys: Vec<f64> = xs.iter().map(|x| (x * 7.0).fract()).collect();
        let gp = gatedvol::models::GatePath { p: xs.clone(), beta_clk: ys, ..Default::default() };
        let s = gate_surface_grid(&gp, &vp_from(vec![1.0; n]), GateVar::P, GateVar::BetaClk, GateVar::H, bins).unwrap();
        prop_assert_eq!(s.cells.len(), bins * bins);
        prop_assert_eq!(s.cells.iter().map(|c| c.count).sum::<usize>(), n);
        prop_assert!((0.0..=1.0).contains(&s.empty_fraction));
        prop_assert!(s.cells.iter().all(|c| (c.count == 0) == c.z_mean.is_none()));
    }
}
