//! Realized correlation of GARCH(1,1) underlying returns driven by one-factor innovations.
use epps::synth::*;

fn main() {
    let g = GarchParams {
        alpha0: 2.4e-4,
        alpha1: 0.15,
        beta1: 0.84,
        sigma0: None,
    };
    for n in [720_000usize, 7_200_000] {
        for seed in 0..4u64 {
            let p = NohParams {
                c: 0.4,
                n_steps: n,
                innovation: Innovation::Gaussian,
            };
            let [a, b] = garch_returns(&p, &g, seed).unwrap();
            let nn = n as f64;
            let (ma, mb) = (
                a.returns.iter().sum::<f64>() / nn,
                b.returns.iter().sum::<f64>() / nn,
            );
            let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
            for k in 0..n {
                let (x, y) = (a.returns[k] - ma, b.returns[k] - mb);
                sab += x * y;
                saa += x * x;
                sbb += y * y;
            }
            let s12: f64 = a
                .sigma
                .iter()
                .zip(&b.sigma)
                .map(|(x, y)| x * y)
                .sum::<f64>()
                / nn;
            let s11: f64 = a.sigma.iter().map(|x| x * x).sum::<f64>() / nn;
            let s22: f64 = b.sigma.iter().map(|x| x * x).sum::<f64>() / nn;
            println!(
                "n={n} seed={seed}: pearson={:.4} c*E[s1 s2]/sqrt(E s1^2 E s2^2)={:.4}",
                sab / (saa * sbb).sqrt(),
                0.4 * s12 / (s11 * s22).sqrt()
            );
        }
    }
}
