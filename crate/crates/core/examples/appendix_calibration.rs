//! Calibrates the acceptance threshold for the underlying-return relation on
//! asynchronous ticks: distribution of the mean per-sample deviation across
//! seeds for intervals of at least 20 mean waiting times.
//!
//! cargo run --release --example appendix_calibration -- [seeds]
use epps::estimator::{verify_appendix_relation, AppendixNormalization, ReturnGrid};
use epps::synth::{gen_noh_pair, sample_ticks, NohParams, SamplingParams};
use epps::SessionSpec;

fn main() {
    let seeds: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(200);
    let p = NohParams {
        c: 0.4,
        n_steps: 100_000,
        innovation: Default::default(),
    };
    let session = SessionSpec::new(0, p.n_steps as i64, 1).unwrap();
    for norm in [
        AppendixNormalization::Additive,
        AppendixNormalization::Empirical,
    ] {
        for mu in [15.0, 25.0] {
            for k in [20.0, 40.0] {
                let dt = (k * mu) as i64;
                let grid = ReturnGrid::for_session(&session, dt, None).unwrap();
                let mut devs: Vec<f64> = (0..seeds)
                    .map(|seed| {
                        let (u, _) = gen_noh_pair(&p, 1, seed).unwrap();
                        let t = sample_ticks(
                            &u,
                            &SamplingParams {
                                mu,
                                seed: 10_000 + seed,
                            },
                            "S",
                        )
                        .unwrap();
                        verify_appendix_relation(&u, &t, &grid, norm)
                            .unwrap()
                            .mean_abs
                    })
                    .collect();
                devs.sort_by(f64::total_cmp);
                let q = |f: f64| devs[((devs.len() - 1) as f64 * f) as usize];
                println!(
                    "{norm:?} mu={mu} dt={dt}: median {:.3e} p99 {:.3e} max {:.3e}",
                    q(0.5),
                    q(0.99),
                    devs[devs.len() - 1]
                );
            }
        }
    }
}
