//! Statistical checks against simulated data with fixed seeds.

use epps::analysis::{
    collect_samples, ensemble_summary, epps_sweep, overlap_stats, rolling_corr_variance,
    CurveField, EppsCurve, SweepOptions,
};
use epps::estimator::hayashi_yoshida_corr;
use epps::synth::{gen_noh_pair, sample_ticks, NohParams, SamplingParams};
use epps::{SessionSpec, TickSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const N: usize = 720_000;

fn pair(c: f64, mu: [f64; 2], n: usize, seed: u64) -> (TickSeries, TickSeries, SessionSpec) {
    let p = NohParams {
        c,
        n_steps: n,
        innovation: Default::default(),
    };
    let (u1, u2) = gen_noh_pair(&p, 1, seed).unwrap();
    let a = sample_ticks(
        &u1,
        &SamplingParams {
            mu: mu[0],
            seed: 2 * seed + 1000,
        },
        "A",
    )
    .unwrap();
    let b = sample_ticks(
        &u2,
        &SamplingParams {
            mu: mu[1],
            seed: 2 * seed + 1001,
        },
        "B",
    )
    .unwrap();
    (a, b, SessionSpec::new(0, n as i64, 1).unwrap())
}

fn sweep(a: &TickSeries, b: &TickSeries, s: &SessionSpec, dts: &[i64]) -> EppsCurve {
    let opts = SweepOptions {
        grid_step: Some(60),
        estimator: Default::default(),
    };
    epps_sweep(a, b, s, dts, &opts).unwrap()
}

#[test]
fn ensemble_compensated_curve_is_flat() {
    let dts = [60, 150, 300, 600, 900, 1200, 1500, 1800];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let curves: Vec<(String, EppsCurve)> = (0..10)
        .map(|k| {
            let mu = [rng.random_range(10.0..60.0), rng.random_range(10.0..60.0)];
            let (a, b, s) = pair(0.4, mu, N, 100 + k);
            (format!("pair{k}"), sweep(&a, &b, &s, &dts))
        })
        .collect();
    let summary = ensemble_summary(&curves, CurveField::Compensated, 1800).unwrap();
    assert_eq!(summary.members.len(), 10);
    for (i, &dt) in dts.iter().enumerate().filter(|(_, &d)| d >= 600) {
        let (m, band) = (summary.mean[i].unwrap(), summary.two_sigma[i].unwrap());
        assert!((m - 1.0).abs() <= band, "dt={dt}: {m} +- {band}");
    }
    // the plain curve of the same ensemble still shows the decay
    let plain = ensemble_summary(&curves, CurveField::Plain, 1800).unwrap();
    assert!(plain.mean[0].unwrap() < summary.mean[0].unwrap());
}

fn white_noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

#[test]
fn rolling_variance_of_independent_noise_matches_monte_carlo() {
    let (days, window) = (250, 30);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let reference: Vec<f64> = (0..1000)
        .map(|_| {
            let (a, b) = (white_noise(&mut rng, days), white_noise(&mut rng, days));
            rolling_corr_variance(&a, &b, window).unwrap()
        })
        .collect();
    let n = reference.len() as f64;
    let mean = reference.iter().sum::<f64>() / n;
    let sd = (reference.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let fresh: Vec<f64> = (0..200)
        .map(|_| {
            let (a, b) = (white_noise(&mut rng, days), white_noise(&mut rng, days));
            rolling_corr_variance(&a, &b, window).unwrap()
        })
        .collect();
    let inside = fresh
        .iter()
        .filter(|v| (*v - mean).abs() <= 2.0 * sd)
        .count();
    assert!(inside >= 180, "{inside}/200 within {mean} +- {}", 2.0 * sd);
    let fresh_mean = fresh.iter().sum::<f64>() / 200.0;
    assert!(
        (fresh_mean - mean).abs() < 3.0 * sd / 200f64.sqrt(),
        "{fresh_mean} vs {mean}"
    );
}

#[test]
fn rolling_variance_shrinks_with_length() {
    // jointly gaussian with correlation 0.5, windows a fifth of the length
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut avg = |len: usize| {
        (0..50)
            .map(|_| {
                let common = white_noise(&mut rng, len);
                let (x, y) = (white_noise(&mut rng, len), white_noise(&mut rng, len));
                let a: Vec<f64> = common.iter().zip(&x).map(|(c, e)| c + e).collect();
                let b: Vec<f64> = common.iter().zip(&y).map(|(c, e)| c + e).collect();
                rolling_corr_variance(&a, &b, len / 5).unwrap()
            })
            .sum::<f64>()
            / 50.0
    };
    let v = [avg(250), avg(1000), avg(4000)];
    assert!(v[0] > v[1] && v[1] > v[2], "{v:?}");
    assert!(v[2] < 1e-3, "{v:?}");
}

#[test]
fn mean_overlap_nondecreasing() {
    let (a, b, s) = pair(0.4, [15.0, 25.0], N, 3);
    let dts = [60, 150, 300, 600, 900, 1500, 1800];
    let stats: Vec<_> = dts
        .iter()
        .map(|&dt| {
            overlap_stats(&collect_samples(&a, &b, &[s], dt, Some(60)).unwrap(), dt).unwrap()
        })
        .collect();
    for w in stats.windows(2) {
        assert!(
            w[1].mean >= w[0].mean - 0.02,
            "{} -> {}",
            w[0].mean,
            w[1].mean
        );
    }
    let (s150, s1500) = (&stats[1], &stats[5]);
    assert!(s1500.variance < s150.variance);
    assert!((1.0 - s1500.mean).abs() < (1.0 - s150.mean).abs());
    for st in &stats {
        assert_eq!(st.total() as usize, st.n);
    }
}

#[test]
fn sparse_series_show_peak_at_zero_overlap() {
    let (a, b, s) = pair(0.4, [60.0, 60.0], N, 4);
    let st = overlap_stats(&collect_samples(&a, &b, &[s], 60, None).unwrap(), 60).unwrap();
    let at = |x: f64| st.count_at(x).unwrap();
    // the bin holding exactly-zero overlaps (one instrument idle) stands
    // out against its neighbours
    assert!(at(0.0) > at(-0.05) && at(0.0) > at(0.05), "{:?}", st.counts);
}

#[test]
fn filtering_helps_at_short_intervals() {
    let (mut comp, mut filt, mut plain, mut comp600) = (0.0, 0.0, 0.0, 0.0);
    for seed in 0..3 {
        let (a, b, s) = pair(0.4, [15.0, 25.0], N, 20 + seed);
        let c = sweep(&a, &b, &s, &[60, 600]);
        comp += c.compensated[0].unwrap() / 3.0;
        filt += c.filtered[0].unwrap() / 3.0;
        plain += c.plain[1].unwrap() / 3.0;
        comp600 += c.compensated[1].unwrap() / 3.0;
    }
    assert!(
        (filt - 0.4).abs() < (comp - 0.4).abs(),
        "filtered {filt}, compensated {comp}"
    );
    assert!((comp600 - 0.4).abs() < 0.03, "{comp600}");
    assert!(plain < comp600, "{plain} vs {comp600}");
}

#[test]
fn hayashi_yoshida_on_simulated_pairs() {
    let (a, b, s) = pair(0.4, [15.0, 25.0], N, 7);
    let hy = hayashi_yoshida_corr(&a, &b, &s).unwrap();
    assert!((hy - 0.4).abs() < 0.03, "{hy}");

    let (a, b, s) = pair(0.0, [15.0, 25.0], N, 8);
    let hy = hayashi_yoshida_corr(&a, &b, &s).unwrap();
    let bound = 4.0 / (a.len().min(b.len()) as f64).sqrt();
    assert!(hy.abs() < bound, "{hy} vs {bound}");
}
