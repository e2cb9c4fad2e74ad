//! Fixtures shared by the benchmarks in `benches/`.

use cralloc::channel::sample_su_channel;
use cralloc::experiments::trial_seed;
use cralloc::{PreparedScenario, ScenarioConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Reference scenario with `n` subcarriers, a 0.1 mW power threshold and a
/// 1 fW ACI cap, so the solver has two cap families to juggle.
pub fn bounded_scenario(n: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::reference();
    cfg.su.num_subcarriers = n;
    cfg.su.power_threshold_w = 1e-4;
    for pu in &mut cfg.pus {
        if pu.kind == cralloc::PuKind::Adjacent {
            pu.interference_cap_w = 1e-15;
        }
    }
    cfg
}

/// Prepared scenario plus one channel draw.
pub fn fixture(cfg: &ScenarioConfig, seed: u64) -> (PreparedScenario, Vec<f64>) {
    let prepared = PreparedScenario::new(cfg).expect("benchmark scenario is valid");
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, 0));
    let cnir = sample_su_channel(cfg, &mut rng)
        .expect("channel draw succeeds")
        .cnir;
    (prepared, cnir)
}
