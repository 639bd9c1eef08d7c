//! Grid-world shopping.
//!
//! An `n x n` store, one item hidden in a uniformly drawn cell, agent in a
//! fixed corner. Moves cost -1 (walls included), asking the clerk where the
//! item is costs -2 and answers with the item's cell, buying in the wrong
//! cell costs -5, and buying where the item sits pays +10 and ends the
//! episode. After any non-query action the agent observes its own position,
//! so the item's location lives only in memory of past query answers.

use crate::{EnvError, Result};
use pomdp_core::{DiscreteDistribution, ObservationModel, Pomdp, TerminalSpec};

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;
pub const UP: usize = 2;
pub const DOWN: usize = 3;
pub const QUERY: usize = 4;
pub const BUY: usize = 5;

const SUPPORTED: [usize; 2] = [5, 6];

/// Geometry and encoding helper.
///
/// Cells are row-major with row 0 at the top; the agent starts in the
/// bottom-left corner. A state packs `(agent, item)` as
/// `agent_cell * n^2 + item_cell`; observation symbols are the agent cells
/// (`0 .. n^2`) followed by the item cells (`n^2 .. 2 n^2`).
#[derive(Debug, Clone, Copy)]
pub struct ShoppingLayout {
    pub n: usize,
}

impl ShoppingLayout {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn n_cells(&self) -> usize {
        self.n * self.n
    }

    pub fn n_states(&self) -> usize {
        self.n_cells() * self.n_cells()
    }

    pub fn n_obs(&self) -> usize {
        2 * self.n_cells()
    }

    pub fn start_cell(&self) -> usize {
        (self.n - 1) * self.n
    }

    pub fn cell(&self, row: usize, col: usize) -> usize {
        row * self.n + col
    }

    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell / self.n, cell % self.n)
    }

    pub fn state(&self, agent: usize, item: usize) -> usize {
        agent * self.n_cells() + item
    }

    pub fn agent_of(&self, state: usize) -> usize {
        state / self.n_cells()
    }

    pub fn item_of(&self, state: usize) -> usize {
        state % self.n_cells()
    }

    /// Deterministic move with walls: stepping off the grid stays put.
    pub fn step_cell(&self, cell: usize, action: usize) -> usize {
        let (row, col) = self.coords(cell);
        let (row, col) = (row as i64, col as i64);
        let n = self.n as i64;
        let (r2, c2) = match action {
            LEFT => (row, col - 1),
            RIGHT => (row, col + 1),
            UP => (row - 1, col),
            DOWN => (row + 1, col),
            _ => (row, col),
        };
        if r2 < 0 || r2 >= n || c2 < 0 || c2 >= n {
            cell
        } else {
            self.cell(r2 as usize, c2 as usize)
        }
    }
}

/// Builds the store for `n ∈ {5, 6}` at discount 0.99.
///
/// The item never moves within an episode; `QUERY` and `BUY` leave the state
/// unchanged, and a correct `BUY` is a terminal step (the `+10` is collected,
/// then the episode ends). The pre-action observation announces the agent's
/// starting cell.
pub fn build_shopping(n: usize) -> Result<(Pomdp, TerminalSpec)> {
    if !SUPPORTED.contains(&n) {
        return Err(EnvError::UnsupportedSize {
            what: "store side",
            requested: n,
            supported: SUPPORTED.to_vec(),
        });
    }
    let layout = ShoppingLayout::new(n);
    let cells = layout.n_cells();
    let n_states = layout.n_states();
    let n_obs = layout.n_obs();
    let n_actions = 6;

    let mut transition = Vec::with_capacity(n_states * n_actions);
    let mut reward = Vec::with_capacity(n_states * n_actions);
    for agent in 0..cells {
        for item in 0..cells {
            for action in 0..n_actions {
                let next_agent = if action < QUERY {
                    layout.step_cell(agent, action)
                } else {
                    agent
                };
                transition.push(DiscreteDistribution::delta(
                    layout.state(next_agent, item),
                    n_states,
                ));
                let r = match action {
                    QUERY => -2.0,
                    BUY => {
                        if agent == item {
                            10.0
                        } else {
                            -5.0
                        }
                    }
                    _ => -1.0,
                };
                reward.push(r);
            }
        }
    }

    // Observation rows depend on the action and the next state: queries
    // answer with the item's cell, everything else shows the agent's.
    let mut obs_rows = Vec::with_capacity(n_actions * n_states);
    for action in 0..n_actions {
        for s2 in 0..n_states {
            let symbol = if action == QUERY {
                cells + layout.item_of(s2)
            } else {
                layout.agent_of(s2)
            };
            obs_rows.push(DiscreteDistribution::delta(symbol, n_obs));
        }
    }

    let mut initial = vec![0.0; n_states];
    for item in 0..cells {
        initial[layout.state(layout.start_cell(), item)] = 1.0 / cells as f64;
    }

    let initial_obs: Vec<DiscreteDistribution> = (0..n_states)
        .map(|s| DiscreteDistribution::delta(layout.agent_of(s), n_obs))
        .collect();

    let state_labels = (0..n_states)
        .map(|s| {
            let (ar, ac) = layout.coords(layout.agent_of(s));
            let (ir, ic) = layout.coords(layout.item_of(s));
            format!("a:r{ar}c{ac}|i:r{ir}c{ic}")
        })
        .collect();
    let action_labels = vec![
        "left".into(),
        "right".into(),
        "up".into(),
        "down".into(),
        "query".into(),
        "buy".into(),
    ];
    let obs_labels = (0..n_obs)
        .map(|o| {
            if o < cells {
                let (r, c) = layout.coords(o);
                format!("agent-r{r}c{c}")
            } else {
                let (r, c) = layout.coords(o - cells);
                format!("item-r{r}c{c}")
            }
        })
        .collect();

    let pomdp = Pomdp::new(
        n_states,
        n_actions,
        n_obs,
        transition,
        ObservationModel::ByActionNext(obs_rows),
        reward,
        0.99,
        DiscreteDistribution::from_weights_unchecked(initial),
        Some(initial_obs),
    )?
    .with_labels(Some(state_labels), Some(action_labels), Some(obs_labels));

    let terminals = TerminalSpec::from_state_actions(
        (0..cells).map(|c| (layout.state(c, c), BUY)),
    );
    Ok((pomdp, terminals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use pomdp_core::validate;

    #[test]
    fn table_sizes_match_the_published_family() {
        let (p5, _) = build_shopping(5).unwrap();
        assert_eq!((p5.n_states(), p5.n_actions(), p5.n_obs()), (625, 6, 50));
        let (p6, _) = build_shopping(6).unwrap();
        assert_eq!((p6.n_states(), p6.n_actions(), p6.n_obs()), (1296, 6, 72));
    }

    #[test]
    fn unsupported_side_lists_supported_sizes() {
        match build_shopping(4) {
            Err(EnvError::UnsupportedSize { supported, .. }) => {
                assert_eq!(supported, vec![5, 6])
            }
            other => panic!("expected size error, got {other:?}"),
        }
    }

    #[test]
    fn model_validates_cleanly() {
        for n in [5, 6] {
            let (p, term) = build_shopping(n).unwrap();
            let diags = validate(&p, &term);
            assert!(diags.is_empty(), "n={n}: {diags:?}");
        }
    }

    #[test]
    fn reward_schedule_is_move_query_buy() {
        let (p, _) = build_shopping(5).unwrap();
        let l = ShoppingLayout::new(5);
        let s = l.state(l.start_cell(), 7);
        assert_eq!(p.reward(s, RIGHT), -1.0);
        // Walking into a wall still costs the move.
        assert_eq!(p.reward(s, LEFT), -1.0);
        assert_eq!(p.reward(s, QUERY), -2.0);
        assert_eq!(p.reward(s, BUY), -5.0);
        assert_eq!(p.reward(l.state(7, 7), BUY), 10.0);
    }

    #[test]
    fn correct_buy_is_a_terminal_step_and_item_is_frozen() {
        let (p, term) = build_shopping(5).unwrap();
        let l = ShoppingLayout::new(5);
        let on_item = l.state(7, 7);
        assert!(term.is_terminal_step(on_item, BUY));
        assert!(!term.is_terminal_step(l.state(6, 7), BUY));
        assert!(!term.is_terminal_state(on_item));
        // BUY and QUERY leave the state unchanged; moves carry the item along.
        assert_eq!(p.transition_row(on_item, BUY).prob(on_item), 1.0);
        assert_eq!(p.transition_row(on_item, QUERY).prob(on_item), 1.0);
        let next = l.state(l.step_cell(7, DOWN), 7);
        assert_eq!(p.transition_row(on_item, DOWN).prob(next), 1.0);
    }

    #[test]
    fn query_reveals_the_item_and_moves_reveal_the_agent() {
        let (p, _) = build_shopping(6).unwrap();
        let l = ShoppingLayout::new(6);
        let s = l.state(3, 20);
        let s2 = l.state(l.step_cell(3, RIGHT), 20);
        assert_eq!(p.obs_row(s, RIGHT, s2).prob(l.step_cell(3, RIGHT)), 1.0);
        assert_eq!(p.obs_row(s, QUERY, s).prob(l.n_cells() + 20), 1.0);
        assert_eq!(p.obs_row(s, BUY, s).prob(3), 1.0);
    }

    #[test]
    fn episodes_start_in_the_corner_with_uniform_item() {
        let (p, _) = build_shopping(5).unwrap();
        let l = ShoppingLayout::new(5);
        let init = p.initial();
        for item in 0..l.n_cells() {
            assert_eq!(init.prob(l.state(l.start_cell(), item)), 1.0 / 25.0);
        }
        assert_eq!(init.probs().iter().filter(|&&w| w > 0.0).count(), 25);
        // The pre-action observation announces the corner.
        let rows = p.initial_obs().unwrap();
        assert_eq!(rows[l.state(l.start_cell(), 3)].prob(l.start_cell()), 1.0);
    }
}
