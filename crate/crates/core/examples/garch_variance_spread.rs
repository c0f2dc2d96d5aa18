//! Spread of the GARCH(1,1) sample variance across seeds.
use epps::synth::{garch_returns, GarchParams, Innovation, NohParams};

fn main() {
    let g = GarchParams {
        alpha0: 2.4e-4,
        alpha1: 0.15,
        beta1: 0.84,
        sigma0: None,
    };
    let target = g.unconditional_variance();
    for n in [5_000_000usize, 10_000_000] {
        let p = NohParams {
            c: 0.4,
            n_steps: n,
            innovation: Innovation::Gaussian,
        };
        let mut ratios = Vec::new();
        for seed in 0..20u64 {
            let [a, b] = garch_returns(&p, &g, seed).unwrap();
            for path in [a, b] {
                let v = path.returns.iter().map(|r| r * r).sum::<f64>() / n as f64;
                ratios.push(v / target);
            }
        }
        ratios.sort_by(|a, b| a.total_cmp(b));
        let within = ratios.iter().filter(|r| (*r - 1.0).abs() < 0.1).count();
        println!(
            "n={n}: within10%={}/{} median={:.3} p5={:.3} p95={:.3}",
            within,
            ratios.len(),
            ratios[ratios.len() / 2],
            ratios[ratios.len() / 20],
            ratios[ratios.len() * 19 / 20]
        );
    }
}
