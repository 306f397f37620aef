use super::{cell, step};
use crate::model::{ModelError, TabularPomdp};

pub const DRONE_HOVER: usize = 4;
/// Observation emitted when the ground agent is outside the field of view.
pub const DRONE_NOT_VISIBLE: usize = 9;

/// State index of drone at cell `drone` and ground agent at cell `agent`.
pub fn drone_state(n: usize, drone: usize, agent: usize) -> usize {
    drone * n * n + agent
}

fn relative_view(n: usize, drone: usize, agent: usize) -> Option<usize> {
    let (dx, dy) = ((drone % n) as isize, (drone / n) as isize);
    let (ax, ay) = ((agent % n) as isize, (agent / n) as isize);
    let (rx, ry) = (ax - dx, ay - dy);
    (rx.abs() <= 1 && ry.abs() <= 1).then(|| ((rx + 1) * 3 + (ry + 1)) as usize)
}

/// Drone surveillance on an `n × n` grid.
///
/// The drone moves deterministically (north, east, south, west, hover) and
/// must reach the north-east corner `B` from the south-west corner `A`. A
/// ground agent random-walks uniformly over its neighbors and its own cell.
/// The drone sees the agent's relative cell when it is inside the 3×3 field
/// of view, otherwise it receives [`DRONE_NOT_VISIBLE`]. States where the
/// drone is at `B` or on top of the agent (`det`) lead to an absorbing
/// terminal state.
pub fn build_drone(n: usize) -> Result<TabularPomdp, ModelError> {
    if n < 3 {
        return Err(ModelError::InvalidParameter(format!(
            "drone grid side {n} < 3"
        )));
    }
    let cells = n * n;
    let terminal = cells * cells;
    let mut m = TabularPomdp::new(terminal + 1, 5, 10)?;
    let corner_a = cell(n, 0, 0);
    let corner_b = cell(n, n - 1, n - 1);

    let agent_moves: Vec<Vec<usize>> = (0..cells)
        .map(|g| {
            let (x, y) = (g % n, g / n);
            let mut out = vec![g];
            out.extend(
                (0..4)
                    .filter_map(|d| step(n, x, y, d))
                    .map(|(nx, ny)| cell(n, nx, ny)),
            );
            out
        })
        .collect();

    for d in 0..cells {
        let (x, y) = (d % n, d / n);
        for g in 0..cells {
            let s = drone_state(n, d, g);
            if d == g {
                m.add_label(s, "det")?;
            }
            if d == corner_a {
                m.add_label(s, "A")?;
            }
            if d == corner_b {
                m.add_label(s, "B")?;
            }
            let ends = d == g || d == corner_b;
            for a in 0..5 {
                if ends {
                    m.set_transition(s, a, terminal, 1.0)?;
                    continue;
                }
                let nd = if a == DRONE_HOVER {
                    d
                } else {
                    step(n, x, y, a)
                        .map(|(nx, ny)| cell(n, nx, ny))
                        .unwrap_or(d)
                };
                let p = 1.0 / agent_moves[g].len() as f64;
                m.set_transition_row(
                    s,
                    a,
                    agent_moves[g].iter().map(|&ng| (drone_state(n, nd, ng), p)),
                )?;
            }
            let o = relative_view(n, d, g).unwrap_or(DRONE_NOT_VISIBLE);
            for a in 0..5 {
                m.set_observation(a, s, o, 1.0)?;
            }
        }
    }
    m.mark_terminal(terminal)?;
    for a in 0..5 {
        m.set_observation(a, terminal, DRONE_NOT_VISIBLE, 1.0)?;
    }
    let hidden: Vec<usize> = (0..cells)
        .filter(|&g| relative_view(n, corner_a, g).is_none())
        .collect();
    let mut b0 = vec![0.0; terminal + 1];
    for &g in &hidden {
        b0[drone_state(n, corner_a, g)] = 1.0 / hidden.len() as f64;
    }
    m.set_initial_belief(b0)?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_sizes() {
        let m = build_drone(5).unwrap();
        assert_eq!(
            (m.num_states(), m.num_actions(), m.num_observations()),
            (626, 5, 10)
        );
        assert!(m.validate().is_empty());
        assert_eq!(build_drone(7).unwrap().num_states(), 2402);
    }

    #[test]
    fn adjacent_agent_is_revealed() {
        let n = 5;
        let m = build_drone(n).unwrap();
        let s = drone_state(n, cell(n, 2, 2), cell(n, 3, 2));
        let row = m.observation_row(0, s);
        let (o, p) = row.iter().enumerate().find(|(_, &p)| p > 0.0).unwrap();
        assert_eq!(*p, 1.0);
        assert_eq!(o, (2 * 3) + 1);
        let far = drone_state(n, cell(n, 0, 0), cell(n, 4, 4));
        assert_eq!(m.observation(0, far, DRONE_NOT_VISIBLE), 1.0);
    }

    #[test]
    fn initial_agent_is_outside_view() {
        let m = build_drone(5).unwrap();
        let support: Vec<usize> = (0..m.num_states())
            .filter(|&s| m.initial_belief()[s] > 0.0)
            .collect();
        assert_eq!(support.len(), 21);
        for s in support {
            assert!(m.labels(s).contains("A"));
        }
    }

    #[test]
    fn too_small_is_rejected() {
        assert!(build_drone(2).is_err());
    }
}
