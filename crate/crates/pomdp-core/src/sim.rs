use crate::{DiscreteDistribution, Error, Pomdp, Result, TerminalSpec, Trajectory};
use rand::Rng;

/// One simulated transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next_state: usize,
    pub obs: usize,
    pub reward: f64,
}

/// Draws `s' ~ T(·|s,a)`, then `o ~ O(·|s,a,s')`, and reads `r = R(s,a)`.
///
/// Out-of-range indices are contract violations and error out rather than
/// panic, so a misbehaving caller gets a diagnosable failure.
pub fn step<R: Rng + ?Sized>(
    pomdp: &Pomdp,
    state: usize,
    action: usize,
    rng: &mut R,
) -> Result<StepOutcome> {
    pomdp.check_state(state)?;
    pomdp.check_action(action)?;
    let next_state = pomdp.transition_row(state, action).sample(rng);
    let obs = pomdp.obs_row(state, action, next_state).sample(rng);
    Ok(StepOutcome {
        next_state,
        obs,
        reward: pomdp.reward(state, action),
    })
}

/// An agent driving [`sample_episode`].
///
/// The simulator calls `reset` at episode start (passing the pre-action
/// observation when the model announces one), asks for an action
/// distribution before each step, and reports every executed
/// `(action, observation)` pair through `observe`. Implementations carry
/// whatever incremental state they need — a growing history, a recurrent
/// hidden vector — between calls.
pub trait Policy {
    fn reset(&mut self, initial_obs: Option<usize>);
    fn observe(&mut self, action: usize, obs: usize);
    fn action_distribution(&self) -> DiscreteDistribution;
}

/// The uniform-random policy; handy as a baseline and in dynamics tests.
#[derive(Debug, Clone)]
pub struct UniformPolicy {
    pub n_actions: usize,
}

impl Policy for UniformPolicy {
    fn reset(&mut self, _initial_obs: Option<usize>) {}
    fn observe(&mut self, _action: usize, _obs: usize) {}
    fn action_distribution(&self) -> DiscreteDistribution {
        DiscreteDistribution::uniform(self.n_actions)
    }
}

/// Samples one episode: `s_0 ~ initial`, then up to `max_steps` policy steps.
///
/// The episode stops early when the next state is terminal or the executed
/// `(state, action)` pair is a terminal step; otherwise it runs to the cap
/// and the trajectory is flagged `truncated`. An episode whose initial state
/// is already terminal has zero steps.
pub fn sample_episode<R: Rng + ?Sized>(
    pomdp: &Pomdp,
    terminals: &TerminalSpec,
    policy: &mut dyn Policy,
    max_steps: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    if max_steps == 0 {
        return Err(Error::ZeroMaxSteps);
    }
    let s0 = pomdp.initial().sample(rng);
    let initial_obs = pomdp.initial_obs().map(|rows| rows[s0].sample(rng));
    policy.reset(initial_obs);

    let mut traj = Trajectory {
        states: vec![s0],
        actions: Vec::new(),
        observations: Vec::new(),
        rewards: Vec::new(),
        initial_obs,
        truncated: false,
    };

    let mut state = s0;
    if terminals.is_terminal_state(state) {
        return Ok(traj);
    }
    for t in 0..max_steps {
        let dist = policy.action_distribution();
        if dist.len() != pomdp.n_actions() {
            return Err(Error::PolicyContract(format!(
                "distribution over {} actions, model has {}",
                dist.len(),
                pomdp.n_actions()
            )));
        }
        dist.check()
            .map_err(|e| Error::PolicyContract(e.to_string()))?;
        let action = dist.sample(rng);
        let out = step(pomdp, state, action, rng)?;
        traj.actions.push(action);
        traj.observations.push(out.obs);
        traj.rewards.push(out.reward);
        traj.states.push(out.next_state);
        policy.observe(action, out.obs);

        let done = terminals.is_terminal_state(out.next_state)
            || terminals.is_terminal_step(state, action);
        state = out.next_state;
        if done {
            break;
        }
        if t + 1 == max_steps {
            traj.truncated = true;
        }
    }
    Ok(traj)
}
