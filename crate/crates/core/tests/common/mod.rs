//! Seeded scenario generators shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::TAU;

use bertrand::energy::defaults;
use bertrand::{DeviceParams, Position, Scenario, SystemParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SEED: u64 = 0x5eed_b3a7;

pub fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    r.set_stream(stream);
    r
}

fn place(rng: &mut ChaCha8Rng) -> Position {
    let d = rng.gen_range(5.0..=50.0);
    let angle = rng.gen_range(0.0..TAU);
    Position::new(d * angle.cos(), d * angle.sin())
}

/// DU at the origin with the reference workload; `count` SUs at distance
/// 5..50 m, workloads 0..0.2 Mb, substitutability 0..0.8.
pub fn random_scenario(rng: &mut ChaCha8Rng, count: usize) -> Scenario {
    let system = SystemParams {
        substitutability: rng.gen_range(0.0..=0.8),
        ..SystemParams::default()
    };
    let sus = (1..=count as u32)
        .map(|id| {
            let at = place(rng);
            DeviceParams::su(id, at, rng.gen_range(0.0..=0.2))
        })
        .collect();
    Scenario::new(
        system,
        DeviceParams::du(Position::default(), defaults::DU_WORKLOAD),
        sus,
    )
    .expect("generated scenario is valid")
}

/// A DU with a small workload facing 4 to 8 nearby-enough SUs.
pub fn oversubscribed_scenario(rng: &mut ChaCha8Rng) -> Scenario {
    let count = rng.gen_range(4..=8);
    let mut s = random_scenario(rng, count);
    s.du.workload = rng.gen_range(0.05..=0.15);
    s.validate().expect("generated scenario is valid");
    s
}

/// The fixed set of 50 two-SU scenarios used across the suites.
pub fn randomized_set() -> Vec<Scenario> {
    let mut r = rng(1);
    (0..50).map(|_| random_scenario(&mut r, 2)).collect()
}
