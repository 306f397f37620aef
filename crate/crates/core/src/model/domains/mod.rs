//! Builders for the grid world, rock sample and drone surveillance domains.

mod drone;
mod gridworld;
mod rocksample;

pub use drone::{build_drone, drone_state, DRONE_HOVER, DRONE_NOT_VISIBLE};
pub use gridworld::{
    build_gridworld, gridworld_benchmark_labels, GRID_EAST, GRID_NORTH, GRID_SOUTH, GRID_WEST,
};
pub use rocksample::{
    build_rocksample, rocksample_preset, RockSampleParams, ROCK_OBS_BAD, ROCK_OBS_GOOD,
    ROCK_OBS_NONE, ROCK_SAMPLE,
};

/// Cell index of `(x, y)` on an `n`-wide grid; `y` grows northwards.
#[inline]
pub(crate) fn cell(n: usize, x: usize, y: usize) -> usize {
    y * n + x
}

/// Neighbor of `(x, y)` in direction `dir` (0 north, 1 east, 2 south, 3 west),
/// or `None` if that step leaves the grid.
pub(crate) fn step(n: usize, x: usize, y: usize, dir: usize) -> Option<(usize, usize)> {
    match dir {
        0 if y + 1 < n => Some((x, y + 1)),
        1 if x + 1 < n => Some((x + 1, y)),
        2 if y > 0 => Some((x, y - 1)),
        3 if x > 0 => Some((x - 1, y)),
        _ => None,
    }
}
