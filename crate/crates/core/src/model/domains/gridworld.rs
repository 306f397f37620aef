use std::collections::BTreeMap;

use super::{cell, step};
use crate::model::{ModelError, TabularPomdp};

pub const GRID_NORTH: usize = 0;
pub const GRID_EAST: usize = 1;
pub const GRID_SOUTH: usize = 2;
pub const GRID_WEST: usize = 3;

/// Slippery `n × n` grid world with noisy position sensing.
///
/// Cells are `y * n + x`; state `n²` is an absorbing terminal that is not
/// reachable from the grid. A move reaches the intended neighbor with
/// probability `slip` and each of the three other directions with
/// probability `(1 - slip) / 3`; a move into a wall leaves the agent in place.
/// The observation is a cell drawn uniformly from the 3×3 neighborhood of the
/// true cell (clipped at the border); the terminal emits observation `n²`.
pub fn build_gridworld(
    n: usize,
    slip: f64,
    label_cells: &BTreeMap<String, Vec<usize>>,
) -> Result<TabularPomdp, ModelError> {
    if n < 2 {
        return Err(ModelError::InvalidParameter(format!("grid side {n} < 2")));
    }
    if !(slip > 0.0 && slip <= 1.0) {
        return Err(ModelError::InvalidParameter(format!(
            "slip {slip} outside (0, 1]"
        )));
    }
    let cells = n * n;
    for c in label_cells.values().flatten() {
        if *c >= cells {
            return Err(ModelError::LabelOutOfRange { cell: *c, cells });
        }
    }
    let terminal = cells;
    let mut m = TabularPomdp::new(cells + 1, 4, cells + 1)?;
    let other = (1.0 - slip) / 3.0;
    for y in 0..n {
        for x in 0..n {
            let s = cell(n, x, y);
            for a in 0..4 {
                let row = (0..4).map(|dir| {
                    let p = if dir == a { slip } else { other };
                    let (nx, ny) = step(n, x, y, dir).unwrap_or((x, y));
                    (cell(n, nx, ny), p)
                });
                m.set_transition_row(s, a, row)?;
            }
            let xs = x.saturating_sub(1)..=(x + 1).min(n - 1);
            let ys = y.saturating_sub(1)..=(y + 1).min(n - 1);
            let support: Vec<usize> = ys
                .flat_map(|oy| xs.clone().map(move |ox| cell(n, ox, oy)))
                .collect();
            let p = 1.0 / support.len() as f64;
            for a in 0..4 {
                for &o in &support {
                    m.set_observation(a, s, o, p)?;
                }
            }
        }
    }
    m.mark_terminal(terminal)?;
    for a in 0..4 {
        m.set_observation(a, terminal, cells, 1.0)?;
    }
    let mut start = vec![1.0 / cells as f64; cells];
    start.push(0.0);
    m.set_initial_belief(start)?;
    for (prop, cs) in label_cells {
        for &c in cs {
            m.add_label(c, prop.clone())?;
        }
    }
    Ok(m)
}

/// Label layout used by the benchmarks: `A` in the north-west corner, `B` in
/// the south-east corner and a 2×2 block of `C` cells in the middle (a
/// single center cell below side 4).
pub fn gridworld_benchmark_labels(n: usize) -> BTreeMap<String, Vec<usize>> {
    let mut labels = BTreeMap::new();
    labels.insert("A".to_string(), vec![cell(n, 0, n - 1)]);
    labels.insert("B".to_string(), vec![cell(n, n - 1, 0)]);
    let mid = n / 2;
    let c_cells = if n >= 4 {
        vec![
            cell(n, mid - 1, mid - 1),
            cell(n, mid, mid - 1),
            cell(n, mid - 1, mid),
            cell(n, mid, mid),
        ]
    } else {
        vec![cell(n, mid, mid)]
    };
    labels.insert("C".to_string(), c_cells);
    labels
}
