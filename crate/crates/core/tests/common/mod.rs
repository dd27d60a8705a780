//! Randomised scattering scenarios shared by the integration tests.

#![allow(dead_code)]

use luminal::dynamics::{perturb_potential, rectangular_barrier, Potential, SchemeConfig, Splitting};
use luminal::state::compact_packet;
use luminal::{Grid1D, PacketSpec, SpinorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const HALF_WIDTH: f64 = 60.0;
pub const DURATION: f64 = 20.0;

/// A compact packet heading for a barrier, a cut point inside the packet and
/// a short local kick far enough from an observer that it cannot be seen.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub seed: u64,
    pub packet: PacketSpec,
    pub support: [f64; 2],
    pub v0: f64,
    pub z_on: f64,
    pub z_off: f64,
    pub smoothing: f64,
    pub splitting: Splitting,
    pub cells: usize,
    pub coarse_cells: usize,
    pub q: f64,
    pub kick_region: [f64; 2],
    pub kick_window: [f64; 2],
    pub kick_dv: f64,
    pub observer: [f64; 2],
}

impl Scenario {
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lo = rng.random_range(-35.0..-20.0);
        let support = [lo, lo + rng.random_range(5.0..15.0)];
        let packet = PacketSpec::compact(support, rng.random_range(-2.0..2.0), rng.random_range(0.0..2.0));
        let z_on = rng.random_range(-5.0..5.0);
        let smoothing = if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.1..2.0) };
        let q = rng.random_range(support[0] + 0.5..support[1] - 0.5);
        let kick_lo = rng.random_range(support[0]..support[1] - 2.0);
        let kick_region = [kick_lo, kick_lo + 2.0];
        let observer_lo = kick_region[1] + DURATION + 2.0;
        Scenario {
            seed,
            packet,
            support,
            v0: rng.random_range(-5.0..20.0),
            z_on,
            z_off: z_on + rng.random_range(1.0..10.0),
            smoothing,
            splitting: if rng.random_bool(0.8) { Splitting::Strang } else { Splitting::Lie },
            cells: rng.random_range(2000..=8000),
            coarse_cells: rng.random_range(256..=1024),
            q,
            kick_region,
            kick_window: [0.0, rng.random_range(0.5..3.0)],
            kick_dv: rng.random_range(0.5..5.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 },
            observer: [observer_lo, observer_lo + rng.random_range(2.0..10.0)],
        }
    }

    pub fn mass(&self) -> f64 {
        self.packet.mass
    }

    pub fn grid(&self) -> Grid1D {
        Grid1D::new(-HALF_WIDTH, HALF_WIDTH, self.cells).unwrap()
    }

    pub fn coarse_grid(&self) -> Grid1D {
        Grid1D::new(-HALF_WIDTH, HALF_WIDTH, self.coarse_cells).unwrap()
    }

    pub fn state(&self, grid: &Grid1D) -> SpinorField {
        compact_packet(&self.packet, self.support, grid).unwrap()
    }

    pub fn potential(&self, grid: &Grid1D) -> Potential {
        rectangular_barrier(grid, self.v0, self.z_on, self.z_off, self.smoothing).unwrap()
    }

    pub fn kicked(&self, grid: &Grid1D) -> Potential {
        perturb_potential(&self.potential(grid), self.kick_region, self.kick_window, self.kick_dv).unwrap()
    }

    pub fn scheme(&self, grid: &Grid1D) -> SchemeConfig {
        SchemeConfig::new(grid, self.mass(), self.splitting).unwrap()
    }

    pub fn n_steps(&self, grid: &Grid1D) -> usize {
        (DURATION / grid.dz()).round() as usize
    }
}

/// Dyadic rational in `[-1, 1]` with at most `bits` fractional bits. Zero is
/// always `+0.0`, so bitwise comparisons are not tripped by signed zeros.
pub fn dyadic(x: f64, bits: i32) -> f64 {
    let scale = 2f64.powi(bits);
    (x.clamp(-1.0, 1.0) * scale).round() / scale + 0.0
}
