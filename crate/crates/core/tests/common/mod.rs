#![allow(dead_code)]

use cralloc::ber::BerThreshold;
use cralloc::channel::AciFactors;
use cralloc::constraints::ConstraintCaps;
use cralloc::solver::{solve_case5, solve_case6, LoadingProblem};
use rand::{Rng, RngExt};

pub struct Instance {
    pub cnir: Vec<f64>,
    pub alpha: f64,
    pub ber: BerThreshold,
    pub caps: ConstraintCaps,
}

impl Instance {
    pub fn problem(&self) -> LoadingProblem<'_> {
        LoadingProblem::new(&self.cnir, self.alpha, &self.ber, &self.caps)
    }
}

/// Which caps are finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapPattern {
    None,
    Power,
    Aci,
    Both,
}

pub const PATTERNS: [CapPattern; 4] = [
    CapPattern::None,
    CapPattern::Power,
    CapPattern::Aci,
    CapPattern::Both,
];

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// Random instance with `n` subcarriers. Finite caps are random fractions of
/// what the unconstrained solution would use, so they are likely to bind.
/// At least one subcarrier is above the loading threshold.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, n: usize, pattern: CapPattern) -> Instance {
    loop {
        let alpha = 0.1 + 0.8 * rng.random::<f64>();
        let ber = if rng.random::<f64>() < 0.2 {
            BerThreshold::PerSubcarrier((0..n).map(|_| log_uniform(rng, 1e-6, 1e-2)).collect())
        } else {
            BerThreshold::Uniform(log_uniform(rng, 1e-6, 1e-2))
        };
        let cnir: Vec<f64> = (0..n).map(|_| log_uniform(rng, 1.0, 1e4)).collect();
        let free = solve_case5(&cnir, alpha, &ber).unwrap();
        if free.active_set.is_empty() {
            continue;
        }
        let num_aci = if matches!(pattern, CapPattern::Aci | CapPattern::Both) {
            1 + (rng.random::<f64>() < 0.5) as usize
        } else {
            rng.random_range(0..2usize)
        };
        let rows: Vec<Vec<f64>> = (0..num_aci)
            .map(|l| {
                // steep leakage profiles leave room for both caps to bind
                let tail = if pattern == CapPattern::Both {
                    8.0 + 8.0 * rng.random::<f64>()
                } else {
                    1.0 + 5.0 * rng.random::<f64>()
                };
                (0..n)
                    .map(|i| {
                        // decays away from one band edge, alternating per PU
                        let d = if l % 2 == 0 { i } else { n - 1 - i } as f64 / n.max(1) as f64;
                        (0.2 + rng.random::<f64>()) * (-tail * d).exp()
                    })
                    .collect()
            })
            .collect();
        let weights = AciFactors { rows };
        let free_total = free.total_power();
        let mut caps = ConstraintCaps {
            total_cap: f64::INFINITY,
            aci_caps: vec![f64::INFINITY; num_aci],
            aci_weights: weights,
        };
        let free_aci = caps.aci_sums(&free.powers);
        if matches!(pattern, CapPattern::Power | CapPattern::Both) {
            caps.total_cap = free_total * (0.05 + 0.9 * rng.random::<f64>());
        }
        match pattern {
            CapPattern::Aci => {
                for (cap, used) in caps.aci_caps.iter_mut().zip(&free_aci) {
                    *cap = used * (0.05 + 0.9 * rng.random::<f64>());
                }
            }
            CapPattern::Both => {
                // cut below what the power-capped solution uses, so both tend to bind
                let capped = solve_case6(&cnir, alpha, &ber, caps.total_cap).unwrap();
                let used = caps.aci_sums(&capped.powers);
                for (cap, used) in caps.aci_caps.iter_mut().zip(&used) {
                    *cap = used * (0.3 + 0.65 * rng.random::<f64>());
                }
            }
            _ => {}
        }
        return Instance {
            cnir,
            alpha,
            ber,
            caps,
        };
    }
}

/// Composite 20-point Gauss–Legendre oracle for ∫ sinc² over [a, b].
pub fn gauss_legendre_sinc2(a: f64, b: f64, panels: usize) -> f64 {
    // nodes/weights of the 20-point rule on [-1, 1], positive half
    const X: [f64; 10] = [
        0.076_526_521_133_497_33,
        0.227_785_851_141_645_08,
        0.373_706_088_715_419_56,
        0.510_867_001_950_827_1,
        0.636_053_680_726_515,
        0.746_331_906_460_150_8,
        0.839_116_971_822_218_8,
        0.912_234_428_251_326,
        0.963_971_927_277_913_8,
        0.993_128_599_185_094_9,
    ];
    const W: [f64; 10] = [
        0.152_753_387_130_725_85,
        0.149_172_986_472_603_75,
        0.142_096_109_318_382_05,
        0.131_688_638_449_176_63,
        0.118_194_531_961_518_42,
        0.101_930_119_817_240_44,
        0.083_276_741_576_704_75,
        0.062_672_048_334_109_06,
        0.040_601_429_800_386_94,
        0.017_614_007_139_152_12,
    ];
    let f = |x: f64| {
        if x == 0.0 {
            1.0
        } else {
            let s = (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x);
            s * s
        }
    };
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        let half = 0.5 * h;
        let mut s = 0.0;
        for (x, w) in X.iter().zip(&W) {
            s += w * (f(mid - half * x) + f(mid + half * x));
        }
        total += half * s;
    }
    total
}
