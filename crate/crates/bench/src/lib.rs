//! Fixtures shared by the benchmarks.

use bertrand::energy::defaults;
use bertrand::{DeviceParams, Position, Scenario, SystemParams};

/// `count` SUs evenly spaced on a ring of radius 25 m around the DU, with
/// workloads stepping from 0 to 0.15 Mb. The DU offloads at most `workload`.
pub fn ring(count: usize, workload: f64) -> Scenario {
    let sus = (0..count)
        .map(|i| {
            let angle = std::f64::consts::TAU * i as f64 / count as f64;
            let own = 0.15 * i as f64 / count.max(2).saturating_sub(1) as f64;
            DeviceParams::su(
                i as u32 + 1,
                Position::new(25.0 * angle.cos(), 25.0 * angle.sin()),
                own.min(0.15),
            )
        })
        .collect();
    Scenario::new(
        SystemParams::default(),
        DeviceParams::du(Position::default(), workload),
        sus,
    )
    .expect("ring layout is valid")
}

/// A ring that buys more than the DU needs, so selection removes SUs.
pub fn oversubscribed(count: usize) -> Scenario {
    ring(count, 0.1)
}

/// A ring with the reference DU workload.
pub fn crowded(count: usize) -> Scenario {
    ring(count, defaults::DU_WORKLOAD)
}
