//! The T-maze corridor with a priest.
//!
//! The map is a T whose stem has been extended below into an L: a top
//! corridor of `2n+1` cells with one exit at each end, a vertical corridor of
//! `n` cells hanging from the fork, and a bottom corridor of `n+1` cells
//! running right from the stem's foot to the priest. One exit leads to heaven
//! (+1), the other to hell (-1); which is which is drawn uniformly per
//! episode and revealed only by standing on the priest's cell. Everywhere
//! else the agent observes its own position, so optimal play must detour to
//! the priest, remember the answer, and walk back up.

use crate::{EnvError, Result};
use pomdp_core::{DiscreteDistribution, History, ObservationModel, Pomdp, TerminalSpec};

pub const NORTH: usize = 0;
pub const SOUTH: usize = 1;
pub const EAST: usize = 2;
pub const WEST: usize = 3;

const SUPPORTED: [usize; 2] = [3, 4];

/// Geometry helper shared by the builder, the probe constructions, and tests.
///
/// Positions are enumerated canonically: top corridor left to right
/// (`0 ..= 2n`), vertical corridor top to bottom (`2n+1 ..= 3n`), bottom
/// corridor left to right (`3n+1 ..= 4n+1`). The priest is the last position;
/// a state is `side * n_positions + position` with side 0 = heaven-left.
#[derive(Debug, Clone, Copy)]
pub struct HeavenHellLayout {
    pub n: usize,
}

impl HeavenHellLayout {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn n_positions(&self) -> usize {
        4 * self.n + 2
    }

    pub fn n_states(&self) -> usize {
        2 * self.n_positions()
    }

    pub fn n_obs(&self) -> usize {
        4 * self.n + 3
    }

    pub fn exit_left(&self) -> usize {
        0
    }

    pub fn exit_right(&self) -> usize {
        2 * self.n
    }

    /// Top-corridor cell above the stem.
    pub fn fork(&self) -> usize {
        self.n
    }

    /// Bottom cell of the vertical corridor; episodes start here.
    pub fn start(&self) -> usize {
        3 * self.n
    }

    pub fn priest(&self) -> usize {
        4 * self.n + 1
    }

    /// Grid coordinates (row 0 is the top corridor).
    pub fn cell(&self, pos: usize) -> (usize, usize) {
        let n = self.n;
        if pos <= 2 * n {
            (0, pos)
        } else if pos <= 3 * n {
            (pos - 2 * n, n)
        } else {
            (n + 1, pos - 3 * n - 1 + n)
        }
    }

    pub fn pos_of_cell(&self, row: usize, col: usize) -> Option<usize> {
        let n = self.n;
        if row == 0 && col <= 2 * n {
            Some(col)
        } else if (1..=n).contains(&row) && col == n {
            Some(2 * n + row)
        } else if row == n + 1 && (n..=2 * n).contains(&col) {
            Some(3 * n + 1 + (col - n))
        } else {
            None
        }
    }

    /// Deterministic move; walls and missing cells leave the position fixed.
    pub fn step_pos(&self, pos: usize, action: usize) -> usize {
        let (row, col) = self.cell(pos);
        let (row, col) = (row as i64, col as i64);
        let (r2, c2) = match action {
            NORTH => (row - 1, col),
            SOUTH => (row + 1, col),
            EAST => (row, col + 1),
            WEST => (row, col - 1),
            _ => (row, col),
        };
        if r2 < 0 || c2 < 0 {
            return pos;
        }
        self.pos_of_cell(r2 as usize, c2 as usize).unwrap_or(pos)
    }

    pub fn state(&self, side: usize, pos: usize) -> usize {
        side * self.n_positions() + pos
    }

    pub fn side_of(&self, state: usize) -> usize {
        state / self.n_positions()
    }

    pub fn pos_of(&self, state: usize) -> usize {
        state % self.n_positions()
    }

    /// Observation emitted on arrival: own position, except that the priest's
    /// cell announces heaven's side.
    pub fn obs_of_state(&self, state: usize) -> usize {
        let pos = self.pos_of(state);
        if pos == self.priest() {
            4 * self.n + 1 + self.side_of(state)
        } else {
            pos
        }
    }

    /// Heaven's exit for a side (side 0 = left).
    pub fn heaven_exit(&self, side: usize) -> usize {
        if side == 0 {
            self.exit_left()
        } else {
            self.exit_right()
        }
    }
}

/// Builds the corridor task for `n ∈ {3, 4}` at discount 0.99.
///
/// Both exits are terminal (absorbing, zero reward once inside); stepping
/// into heaven's exit pays +1.0, into hell's -1.0, and every other step 0.
/// Heaven's side is uniform; the agent always starts at the stem's foot and
/// is told its own position as the pre-action observation.
pub fn build_heavenhell(n: usize) -> Result<(Pomdp, TerminalSpec)> {
    if !SUPPORTED.contains(&n) {
        return Err(EnvError::UnsupportedSize {
            what: "corridor length",
            requested: n,
            supported: SUPPORTED.to_vec(),
        });
    }
    let layout = HeavenHellLayout::new(n);
    let n_positions = layout.n_positions();
    let n_states = layout.n_states();
    let n_obs = layout.n_obs();
    let n_actions = 4;

    let emission: Vec<DiscreteDistribution> = (0..n_states)
        .map(|s| DiscreteDistribution::delta(layout.obs_of_state(s), n_obs))
        .collect();

    let mut transition = Vec::with_capacity(n_states * n_actions);
    let mut reward = Vec::with_capacity(n_states * n_actions);
    for side in 0..2 {
        for pos in 0..n_positions {
            let exit = pos == layout.exit_left() || pos == layout.exit_right();
            for action in 0..n_actions {
                let next_pos = if exit { pos } else { layout.step_pos(pos, action) };
                transition.push(DiscreteDistribution::delta(
                    layout.state(side, next_pos),
                    n_states,
                ));
                let r = if exit || next_pos == pos {
                    0.0
                } else if next_pos == layout.heaven_exit(side) {
                    1.0
                } else if next_pos == layout.heaven_exit(1 - side) {
                    -1.0
                } else {
                    0.0
                };
                reward.push(r);
            }
        }
    }

    let mut initial = vec![0.0; n_states];
    initial[layout.state(0, layout.start())] = 0.5;
    initial[layout.state(1, layout.start())] = 0.5;

    let state_labels = (0..n_states)
        .map(|s| {
            let (row, col) = layout.cell(layout.pos_of(s));
            let side = if layout.side_of(s) == 0 { "hl" } else { "hr" };
            format!("{side}:r{row}c{col}")
        })
        .collect();
    let action_labels = vec!["north".into(), "south".into(), "east".into(), "west".into()];
    let obs_labels = (0..n_obs)
        .map(|o| {
            if o <= 4 * n {
                let (row, col) = layout.cell(o);
                format!("r{row}c{col}")
            } else if o == 4 * n + 1 {
                "priest-heaven-left".into()
            } else {
                "priest-heaven-right".into()
            }
        })
        .collect();

    let pomdp = Pomdp::new(
        n_states,
        n_actions,
        n_obs,
        transition,
        ObservationModel::ByNext(emission.clone()),
        reward,
        0.99,
        DiscreteDistribution::from_weights_unchecked(initial),
        Some(emission),
    )?
    .with_labels(Some(state_labels), Some(action_labels), Some(obs_labels));

    let terminals = TerminalSpec::from_states((0..2).flat_map(|side| {
        [
            layout.state(side, layout.exit_left()),
            layout.state(side, layout.exit_right()),
        ]
    }));
    Ok((pomdp, terminals))
}

/// Replays `actions` from the start cell on the given side, collecting the
/// resulting action–observation history. Returns the history and the final
/// position.
fn walk(layout: &HeavenHellLayout, side: usize, actions: &[usize]) -> (History, usize) {
    let mut h = History::from_initial_obs(layout.start());
    let mut pos = layout.start();
    for &a in actions {
        pos = layout.step_pos(pos, a);
        let obs = if pos == layout.priest() {
            4 * layout.n + 1 + side
        } else {
            pos
        };
        h.push(a, obs);
    }
    (h, pos)
}

/// Four scripted situations standing on the fork cell, built to separate
/// critics by what they can see:
///
/// 0. straight up the stem, heaven on the left;
/// 1. the same walk, heaven on the right;
/// 2. a detour past the priest who announced *left*, heaven on the left;
/// 3. the detour with the *right* announcement, heaven on the right.
///
/// Pairs (0,1) share their history and differ only in the hidden state;
/// pairs (0,2) and (1,3) share the state and differ only in the history. A
/// critic reading the state alone cannot tell 0 from 2 or 1 from 3; one
/// reading the history alone cannot tell 0 from 1.
pub fn fork_probes(n: usize) -> Result<Vec<(History, usize)>> {
    if !SUPPORTED.contains(&n) {
        return Err(EnvError::UnsupportedSize {
            what: "corridor length",
            requested: n,
            supported: SUPPORTED.to_vec(),
        });
    }
    let layout = HeavenHellLayout::new(n);
    let straight = vec![NORTH; n];
    let detour: Vec<usize> = std::iter::once(SOUTH)
        .chain(std::iter::repeat(EAST).take(n))
        .chain(std::iter::repeat(WEST).take(n))
        .chain(std::iter::repeat(NORTH).take(n + 1))
        .collect();

    let (uninformed, at) = walk(&layout, 0, &straight);
    debug_assert_eq!(at, layout.fork());
    let (told_left, at) = walk(&layout, 0, &detour);
    debug_assert_eq!(at, layout.fork());
    let (told_right, _) = walk(&layout, 1, &detour);

    Ok(vec![
        (uninformed.clone(), layout.state(0, layout.fork())),
        (uninformed, layout.state(1, layout.fork())),
        (told_left, layout.state(0, layout.fork())),
        (told_right, layout.state(1, layout.fork())),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use pomdp_core::validate;
    use std::collections::VecDeque;

    // ── Geometry ──

    #[test]
    fn position_enumeration_round_trips() {
        for n in [3, 4] {
            let l = HeavenHellLayout::new(n);
            for pos in 0..l.n_positions() {
                let (r, c) = l.cell(pos);
                assert_eq!(l.pos_of_cell(r, c), Some(pos), "n={n} pos={pos}");
            }
        }
    }

    #[test]
    fn table_sizes_match_the_published_family() {
        let (p3, _) = build_heavenhell(3).unwrap();
        assert_eq!((p3.n_states(), p3.n_actions(), p3.n_obs()), (28, 4, 15));
        let (p4, _) = build_heavenhell(4).unwrap();
        assert_eq!((p4.n_states(), p4.n_actions(), p4.n_obs()), (36, 4, 19));
    }

    #[test]
    fn unsupported_length_lists_supported_sizes() {
        match build_heavenhell(5) {
            Err(EnvError::UnsupportedSize { supported, .. }) => {
                assert_eq!(supported, vec![3, 4])
            }
            other => panic!("expected size error, got {other:?}"),
        }
    }

    #[test]
    fn exactly_one_shortest_route_reaches_the_priest() {
        for n in [3, 4] {
            let l = HeavenHellLayout::new(n);
            // BFS from the start over positions, counting shortest paths.
            let mut dist = vec![usize::MAX; l.n_positions()];
            let mut ways = vec![0usize; l.n_positions()];
            let mut queue = VecDeque::from([l.start()]);
            dist[l.start()] = 0;
            ways[l.start()] = 1;
            while let Some(p) = queue.pop_front() {
                for a in 0..4 {
                    let q = l.step_pos(p, a);
                    if q == p {
                        continue;
                    }
                    if dist[q] == usize::MAX {
                        dist[q] = dist[p] + 1;
                        ways[q] = ways[p];
                        queue.push_back(q);
                    } else if dist[q] == dist[p] + 1 {
                        ways[q] += ways[p];
                    }
                }
            }
            assert_eq!(dist[l.priest()], n + 1, "n={n}");
            assert_eq!(ways[l.priest()], 1, "n={n}");
        }
    }

    // ── Model ──

    #[test]
    fn model_validates_cleanly() {
        for n in [3, 4] {
            let (p, term) = build_heavenhell(n).unwrap();
            let diags = validate(&p, &term);
            assert!(diags.is_empty(), "n={n}: {diags:?}");
        }
    }

    #[test]
    fn exit_rewards_follow_heavens_side() {
        let (p, _) = build_heavenhell(3).unwrap();
        let l = HeavenHellLayout::new(3);
        // One step left of the left exit, one step right of the right exit.
        let by_left = l.exit_left() + 1;
        let by_right = l.exit_right() - 1;
        assert_eq!(p.reward(l.state(0, by_left), WEST), 1.0);
        assert_eq!(p.reward(l.state(1, by_left), WEST), -1.0);
        assert_eq!(p.reward(l.state(0, by_right), EAST), -1.0);
        assert_eq!(p.reward(l.state(1, by_right), EAST), 1.0);
        // Stepping around elsewhere is free.
        assert_eq!(p.reward(l.state(0, l.start()), NORTH), 0.0);
        // Blocked moves are free too.
        assert_eq!(p.reward(l.state(0, l.start()), EAST), 0.0);
    }

    #[test]
    fn priest_announces_the_side_and_other_cells_their_position() {
        let (p, _) = build_heavenhell(4).unwrap();
        let l = HeavenHellLayout::new(4);
        let from = l.state(0, l.priest() - 1);
        assert_eq!(
            p.obs_row(from, EAST, l.state(0, l.priest())).probs()[4 * 4 + 1],
            1.0
        );
        assert_eq!(
            p.obs_row(from, EAST, l.state(1, l.priest())).probs()[4 * 4 + 2],
            1.0
        );
        let fork_state = l.state(1, l.fork());
        assert_eq!(
            p.obs_row(l.state(1, l.fork() + 1), WEST, fork_state).probs()[l.fork()],
            1.0
        );
    }

    #[test]
    fn blocked_moves_stay_put() {
        let l = HeavenHellLayout::new(3);
        // The start cell has walls east and west.
        assert_eq!(l.step_pos(l.start(), EAST), l.start());
        assert_eq!(l.step_pos(l.start(), WEST), l.start());
        // The fork connects down into the stem.
        assert_eq!(l.step_pos(l.fork(), SOUTH), 2 * 3 + 1);
        // Top corridor cells other than the fork have no south neighbor.
        assert_eq!(l.step_pos(l.fork() + 1, SOUTH), l.fork() + 1);
    }

    // ── Fork probes ──

    #[test]
    fn fork_probes_pair_histories_and_states_as_documented() {
        for n in [3, 4] {
            let l = HeavenHellLayout::new(n);
            let probes = fork_probes(n).unwrap();
            assert_eq!(probes.len(), 4);
            // Histories: (0,1) identical, the rest distinct.
            assert_eq!(probes[0].0, probes[1].0, "n={n}");
            assert_ne!(probes[0].0, probes[2].0);
            assert_ne!(probes[2].0, probes[3].0);
            // States: fork cell on the matching side.
            assert_eq!(probes[0].1, l.state(0, l.fork()));
            assert_eq!(probes[1].1, l.state(1, l.fork()));
            assert_eq!(probes[2].1, probes[0].1);
            assert_eq!(probes[3].1, probes[1].1);
            // The straight walk is n moves, the detour 3n + 2.
            assert_eq!(probes[0].0.len(), n);
            assert_eq!(probes[2].0.len(), 3 * n + 2);
        }
    }

    #[test]
    fn detour_histories_carry_the_priest_announcement_once() {
        let probes = fork_probes(4).unwrap();
        let count = |h: &pomdp_core::History, o: usize| {
            h.steps().iter().filter(|(_, obs)| *obs == o).count()
        };
        // 4n+1 announces heaven-left, 4n+2 heaven-right.
        assert_eq!(count(&probes[0].0, 17), 0);
        assert_eq!(count(&probes[0].0, 18), 0);
        assert_eq!(count(&probes[2].0, 17), 1);
        assert_eq!(count(&probes[2].0, 18), 0);
        assert_eq!(count(&probes[3].0, 17), 0);
        assert_eq!(count(&probes[3].0, 18), 1);
        // Both walks end with the fork's position observation.
        assert_eq!(probes[0].0.last_obs(), Some(4));
        assert_eq!(probes[2].0.last_obs(), Some(4));
    }

    #[test]
    fn fork_probe_walks_trace_legal_transitions() {
        for n in [3, 4] {
            let (p, _) = build_heavenhell(n).unwrap();
            let l = HeavenHellLayout::new(n);
            for side in 0..2 {
                for (h, _) in fork_probes(n).unwrap() {
                    // Replay the action sequence from the start state on
                    // `side`; every step must be the model's own successor.
                    let mut state = l.state(side, l.start());
                    for &(a, _) in h.steps() {
                        let row = p.transition_row(state, a);
                        let next = row.support().next().unwrap();
                        assert_eq!(row.prob(next), 1.0);
                        state = next;
                    }
                    assert_eq!(l.pos_of(state), l.fork());
                }
            }
        }
    }

    #[test]
    fn scripted_priest_detour_solves_the_task() {
        let (p, term) = build_heavenhell(3).unwrap();
        let l = HeavenHellLayout::new(3);
        // South, east to the priest, back west, north up the stem, then walk
        // toward heaven once the side is known. Start heaven-left.
        let mut state = l.state(0, l.start());
        let mut seen_priest = None;
        let script = [
            SOUTH, EAST, EAST, EAST, // to the priest
            WEST, WEST, WEST, NORTH, // back to the stem's foot
            NORTH, NORTH, NORTH, // up to the fork
            WEST, WEST, WEST, // heaven is left
        ];
        let mut total = 0.0;
        for &a in &script {
            let row = p.transition_row(state, a);
            let next = row.support().next().unwrap();
            assert_eq!(row.prob(next), 1.0);
            total += p.reward(state, a);
            let obs = p.obs_row(state, a, next).support().next().unwrap();
            if obs == 4 * 3 + 1 {
                seen_priest = Some(a);
            }
            state = next;
        }
        assert_eq!(seen_priest, Some(EAST));
        assert_eq!(total, 1.0);
        assert!(term.is_terminal_state(state));
    }
}
