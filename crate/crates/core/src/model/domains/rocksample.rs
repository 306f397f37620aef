use std::collections::BTreeSet;

use super::{cell, step};
use crate::model::{ModelError, TabularPomdp};

pub const ROCK_SAMPLE: usize = 0;
pub const ROCK_OBS_GOOD: usize = 0;
pub const ROCK_OBS_BAD: usize = 1;
pub const ROCK_OBS_NONE: usize = 2;

/// Parameters of a rock sample instance. Coordinates are `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RockSampleParams {
    pub n: usize,
    pub rocks: Vec<(usize, usize)>,
    pub start: (usize, usize),
    /// Distance at which the sensor accuracy drops halfway to chance.
    pub sensor_efficiency: f64,
}

/// Standard layouts for the benchmark sizes; other sizes get rocks spread
/// over the grid by a fixed stride pattern.
pub fn rocksample_preset(n: usize, num_rocks: usize) -> Result<RockSampleParams, ModelError> {
    let (rocks, start) = match (n, num_rocks) {
        (4, 2) => (vec![(1, 2), (3, 1)], (0, 0)),
        (5, 3) => (vec![(0, 0), (2, 2), (3, 3)], (0, 0)),
        (7, 8) => (
            vec![
                (2, 0),
                (0, 1),
                (3, 1),
                (6, 3),
                (2, 4),
                (3, 4),
                (5, 5),
                (1, 6),
            ],
            (0, 3),
        ),
        _ => {
            if num_rocks > n * n {
                return Err(ModelError::InvalidParameter(format!(
                    "{num_rocks} rocks do not fit on a {n}x{n} grid"
                )));
            }
            let mut rocks = Vec::new();
            let mut i = 0;
            while rocks.len() < num_rocks {
                let pos = ((3 * i + 1) % n, (5 * i + 2 + i / n) % n);
                if !rocks.contains(&pos) {
                    rocks.push(pos);
                }
                i += 1;
            }
            (rocks, (0, n / 2))
        }
    };
    Ok(RockSampleParams {
        n,
        rocks,
        start,
        sensor_efficiency: 20.0,
    })
}

/// Rock sample: a rover on an `n × n` grid with rocks of unknown quality.
///
/// States are `pos * 2^k + bits` (bit `i` set when rock `i` is good) plus one
/// terminal exit state reached by moving east off the grid. Actions are
/// sample, north, east, south, west, then one check per rock. Sampling a rock
/// emits the action-scoped label `good` or `bad` and turns the rock bad.
/// A check at distance `d` reports the true status with probability
/// `(1 + 2^(-d / sensor_efficiency)) / 2`.
pub fn build_rocksample(params: &RockSampleParams) -> Result<TabularPomdp, ModelError> {
    let RockSampleParams {
        n,
        ref rocks,
        start,
        sensor_efficiency,
    } = *params;
    if n < 1 || sensor_efficiency <= 0.0 {
        return Err(ModelError::InvalidParameter(
            "grid side and sensor efficiency must be positive".into(),
        ));
    }
    let mut seen = BTreeSet::new();
    for &(x, y) in rocks {
        if x >= n || y >= n || !seen.insert((x, y)) {
            return Err(ModelError::RockOffGrid { x, y });
        }
    }
    if start.0 >= n || start.1 >= n {
        return Err(ModelError::InvalidParameter(format!(
            "start {start:?} off the grid"
        )));
    }
    let k = rocks.len();
    if k > 20 {
        return Err(ModelError::InvalidParameter(format!(
            "{k} rocks is too many"
        )));
    }
    let combos = 1usize << k;
    let terminal = n * n * combos;
    let num_actions = 5 + k;
    let mut m = TabularPomdp::new(terminal + 1, num_actions, 3)?;
    let rock_at = |x: usize, y: usize| rocks.iter().position(|&r| r == (x, y));

    for y in 0..n {
        for x in 0..n {
            let pos = cell(n, x, y);
            for bits in 0..combos {
                let s = pos * combos + bits;
                match rock_at(x, y) {
                    Some(r) => {
                        let good = bits & (1 << r) != 0;
                        m.set_transition(s, ROCK_SAMPLE, pos * combos + (bits & !(1 << r)), 1.0)?;
                        m.add_action_label(s, ROCK_SAMPLE, if good { "good" } else { "bad" })?;
                    }
                    None => m.set_transition(s, ROCK_SAMPLE, s, 1.0)?,
                }
                for dir in 0..4 {
                    let next = match step(n, x, y, dir) {
                        Some((nx, ny)) => cell(n, nx, ny) * combos + bits,
                        None if dir == 1 => terminal,
                        None => s,
                    };
                    m.set_transition(s, 1 + dir, next, 1.0)?;
                }
                for r in 0..k {
                    let a = 5 + r;
                    m.set_transition(s, a, s, 1.0)?;
                    let (rx, ry) = rocks[r];
                    let d =
                        ((rx as f64 - x as f64).powi(2) + (ry as f64 - y as f64).powi(2)).sqrt();
                    let accuracy = (1.0 + (-d / sensor_efficiency).exp2()) / 2.0;
                    let good = bits & (1 << r) != 0;
                    let (truth, flipped) = if good {
                        (ROCK_OBS_GOOD, ROCK_OBS_BAD)
                    } else {
                        (ROCK_OBS_BAD, ROCK_OBS_GOOD)
                    };
                    m.set_observation(a, s, truth, accuracy)?;
                    if accuracy < 1.0 {
                        m.set_observation(a, s, flipped, 1.0 - accuracy)?;
                    }
                }
                for a in 0..5 {
                    m.set_observation(a, s, ROCK_OBS_NONE, 1.0)?;
                }
            }
        }
    }
    m.mark_terminal(terminal)?;
    m.add_label(terminal, "exit")?;
    for a in 0..num_actions {
        m.set_observation(a, terminal, ROCK_OBS_NONE, 1.0)?;
    }
    let mut b0 = vec![0.0; terminal + 1];
    let start_pos = cell(n, start.0, start.1);
    for bits in 0..combos {
        b0[start_pos * combos + bits] = 1.0 / combos as f64;
    }
    m.set_initial_belief(b0)?;
    Ok(m)
}
