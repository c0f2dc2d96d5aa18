//! Writes the pseudo-TAQ fixture used by the golden-file test: two trading
//! days of three correlated symbols on a seconds-since-epoch clock, plus a
//! symbol with a single trade that loading drops.
//!
//! cargo run --example pseudo_taq -- crates/core/tests/data/pseudo_taq.csv
use std::io::Write;

use epps::synth::{gen_noh_pair, sample_ticks, NohParams, SamplingParams};
use epps::tickstore::write_ticks;
use epps::TickSeries;

const DAY: i64 = 86_400;
const OPEN: i64 = 34_200;
const SESSION: usize = 7_200;

fn main() {
    let path = std::env::args().nth(1).expect("output path");
    let mut out: Vec<TickSeries> = Vec::new();
    for (k, (sym, mu)) in [("AAA", 20.0), ("BBB", 35.0), ("CCC", 50.0)]
        .into_iter()
        .enumerate()
    {
        let (mut times, mut prices) = (Vec::new(), Vec::new());
        let mut level = 50.0 + 25.0 * k as f64;
        for day in 0..2u64 {
            let p = NohParams {
                c: 0.5,
                n_steps: SESSION,
                innovation: Default::default(),
            };
            // one shared factor per day; each symbol takes a different leg
            let (u1, u2) = gen_noh_pair(&p, 1, 40 + day).unwrap();
            let u = if k == 1 { u2 } else { u1 };
            let t = sample_ticks(
                &u,
                &SamplingParams {
                    mu,
                    seed: 10 * day + k as u64,
                },
                sym,
            )
            .unwrap();
            let base = 1_167_609_600 + day as i64 * DAY + OPEN;
            let scale = level / t.prices()[0];
            times.extend(t.times().iter().map(|x| base + x));
            prices.extend(
                t.prices()
                    .iter()
                    .map(|x| (x * scale * 100.0).round() / 100.0),
            );
            level = *prices.last().unwrap();
        }
        out.push(TickSeries::new(sym, times, prices).unwrap());
    }
    let mut buf = Vec::new();
    write_ticks(&mut buf, &out).unwrap();
    buf.extend_from_slice(b"ZZZ,1167645600,10.5\n");
    std::fs::File::create(path)
        .unwrap()
        .write_all(&buf)
        .unwrap();
}
