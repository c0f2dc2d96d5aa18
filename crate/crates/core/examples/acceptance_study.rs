//! Pass rates of the simulated Epps-curve checks across seeds and grid strides.
use epps::analysis::{collect_samples, epps_sweep, overlap_stats, SweepOptions};
use epps::estimator::EstimatorOptions;
use epps::synth::*;
use epps::SessionSpec;

fn main() {
    let dts = [60i64, 150, 450, 900, 1800];
    let n = 720_000usize;
    let garch = GarchParams {
        alpha0: 2.4e-4,
        alpha1: 0.15,
        beta1: 0.84,
        sigma0: None,
    };
    let seeds: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(20);
    for model in ["noh", "garch"] {
        for stride in [None, Some(60i64), Some(10)] {
            let mut pass = [0usize; 4];
            let mut errs = vec![Vec::new(); dts.len()];
            for seed in 0..seeds {
                let p = NohParams {
                    c: 0.4,
                    n_steps: n,
                    innovation: Innovation::Gaussian,
                };
                let (u1, u2) = if model == "noh" {
                    gen_noh_pair(&p, 1, seed).unwrap()
                } else {
                    gen_garch_pair(&p, &garch, 1, seed).unwrap()
                };
                let a = sample_ticks(
                    &u1,
                    &SamplingParams {
                        mu: 15.0,
                        seed: 1000 + seed,
                    },
                    "A",
                )
                .unwrap();
                let b = sample_ticks(
                    &u2,
                    &SamplingParams {
                        mu: 25.0,
                        seed: 2000 + seed,
                    },
                    "B",
                )
                .unwrap();
                let session = SessionSpec::new(0, n as i64, 1).unwrap();
                let opts = SweepOptions {
                    grid_step: stride,
                    estimator: EstimatorOptions::default(),
                };
                let c = epps_sweep(&a, &b, &session, &dts, &opts).unwrap();
                let plain: Vec<f64> = c.plain.iter().map(|v| v.unwrap()).collect();
                let filt: Vec<f64> = c.filtered.iter().map(|v| v.unwrap()).collect();
                for i in 0..dts.len() {
                    errs[i].push(filt[i] - 0.4);
                }
                let c1 =
                    plain[4] - plain[0] >= 0.10 && plain.windows(2).all(|w| w[1] >= w[0] - 0.03);
                let c2 = (filt[0] - 0.4).abs() <= 0.08
                    && filt[1..].iter().all(|f| (f - 0.4).abs() <= 0.05);
                let m = |dt| {
                    overlap_stats(
                        &collect_samples(&a, &b, &[session], dt, stride).unwrap(),
                        dt,
                    )
                    .unwrap()
                    .mean
                };
                let (m150, m1500, m1800) = (m(150), m(1500), m(1800));
                let c4 = m1500 > m150 && m1800 > 0.9;
                pass[0] += c1 as usize;
                pass[1] += c2 as usize;
                pass[3] += c4 as usize;
                if seed == 0 {
                    println!("  {model} stride={stride:?} seed0 plain={plain:.3?} comp={:.3?} filt={filt:.3?} m150={m150:.3} m1800={m1800:.3}", c.compensated.iter().map(|v| v.unwrap()).collect::<Vec<_>>());
                }
            }
            let sd: Vec<String> = errs
                .iter()
                .map(|e| {
                    let m = e.iter().sum::<f64>() / e.len() as f64;
                    let s =
                        (e.iter().map(|x| (x - m).powi(2)).sum::<f64>() / e.len() as f64).sqrt();
                    format!("{m:+.3}±{s:.3}")
                })
                .collect();
            println!("{model} stride={stride:?}: c1 {}/{seeds} c2 {}/{seeds} c4 {}/{seeds}  filt-0.4 per dt {sd:?}", pass[0], pass[1], pass[3]);
        }
    }
}
