use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::train::idle_rewards;
use super::{AblationFlags, AgentError, Controller};
use crate::sim::{Action, EnvState, Scenario};

/// Renewable-to-demand ratio bin edges.
pub const RATIO_EDGES: [f64; 3] = [0.5, 1.0, 1.5];
pub const PRICE_TERCILES: usize = 3;

/// A finite MDP for tabular learning.
pub trait TabularEnv {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    /// Start episode `episode` and return its first state.
    fn reset(&mut self, episode: usize) -> usize;
    /// Returns the next state, the reward and whether the episode ended.
    fn step(&mut self, action: usize) -> (usize, f64, bool);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QConfig {
    pub episodes: usize,
    /// Step-size floor; a cell's n-th update uses max(alpha, n^-step_exponent).
    pub alpha: f64,
    /// Decay exponent of the per-cell step size, in (0.5, 1].
    pub step_exponent: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub soc_bins: usize,
    /// Episode truncation for environments that never terminate.
    pub max_steps: Option<usize>,
    /// Learn from the reward minus the battery-idle reward of the same step.
    pub idle_baseline: bool,
}

impl Default for QConfig {
    fn default() -> Self {
        Self {
            episodes: 2000,
            alpha: 0.0,
            step_exponent: 0.7,
            gamma: 0.9,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            soc_bins: 5,
            max_steps: None,
            idle_baseline: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub n_states: usize,
    pub n_actions: usize,
    pub values: Vec<f64>,
    /// Updates applied to each cell.
    #[serde(default)]
    pub visits: Vec<u64>,
}

impl QTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            values: vec![0.0; n_states * n_actions],
            visits: vec![0; n_states * n_actions],
        }
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    /// Greedy action with uniformly random tie-breaking.
    pub fn greedy<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> usize {
        let row = self.row(s);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> = (0..row.len()).filter(|&a| row[a] == max).collect();
        ties[rng.gen_range(0..ties.len())]
    }

    /// Greedy over the actions tried in `s`; falls back to [`Self::greedy`]
    /// when none were.
    pub fn greedy_visited<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> usize {
        let row = self.row(s);
        let seen = |a: usize| self.visits.get(s * self.n_actions + a).is_some_and(|&v| v > 0);
        let max = (0..row.len()).filter(|&a| seen(a)).map(|a| row[a]).fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> = (0..row.len()).filter(|&a| seen(a) && row[a] == max).collect();
        if ties.is_empty() {
            return self.greedy(s, rng);
        }
        ties[rng.gen_range(0..ties.len())]
    }
}

/// One-step Q-learning with ε-greedy exploration, ε decaying linearly from
/// `epsilon_start` to `epsilon_end` over the episodes.
pub fn q_learning<E: TabularEnv>(env: &mut E, cfg: &QConfig, seed: u64) -> QTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = QTable::zeros(env.n_states(), env.n_actions());
    let na = env.n_actions();
    for ep in 0..cfg.episodes {
        let frac = if cfg.episodes > 1 { ep as f64 / (cfg.episodes - 1) as f64 } else { 1.0 };
        let eps = cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;
        let mut s = env.reset(ep);
        for _ in 0..cfg.max_steps.unwrap_or(usize::MAX) {
            let a = if rng.gen::<f64>() < eps { rng.gen_range(0..na) } else { q.greedy(s, &mut rng) };
            let (next, r, done) = env.step(a);
            let target = if done {
                r
            } else {
                r + cfg.gamma * q.row(next).iter().copied().fold(f64::NEG_INFINITY, f64::max)
            };
            let i = s * na + a;
            q.visits[i] += 1;
            let rate = cfg.alpha.max((q.visits[i] as f64).powf(-cfg.step_exponent));
            q.values[i] += rate * (target - q.values[i]);
            if done {
                break;
            }
            s = next;
        }
    }
    q
}

/// Discretizes dispatch states into SOC bins × renewable/demand ratio bins ×
/// grid price terciles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchStates {
    pub soc_bins: usize,
    /// Price thresholds: tercile 0 below the first, 2 at or above the second.
    pub price_cuts: [f64; 2],
}

impl DispatchStates {
    pub fn new(scenario: &Scenario, soc_bins: usize) -> Self {
        let mut prices = scenario.series.grid_price_per_kwh.clone();
        prices.sort_by(f64::total_cmp);
        let n = prices.len();
        Self {
            soc_bins: soc_bins.max(2),
            price_cuts: [prices[n / 3], prices[(2 * n / 3).min(n - 1)]],
        }
    }

    pub fn count(&self) -> usize {
        self.soc_bins * (RATIO_EDGES.len() + 1) * PRICE_TERCILES
    }

    pub fn index(&self, scenario: &Scenario, t: usize, soc_kwh: f64) -> usize {
        let s = &scenario.series;
        let frac = scenario.battery.soc_fraction(soc_kwh).clamp(0.0, 1.0);
        let soc = ((frac * self.soc_bins as f64) as usize).min(self.soc_bins - 1);
        let demand = s.demand_kw[t];
        let ratio = if demand > 0.0 {
            (s.solar_kw[t] + s.wind_kw[t]) / demand
        } else {
            f64::INFINITY
        };
        let rbin = RATIO_EDGES.iter().filter(|&&e| ratio >= e).count();
        let p = s.grid_price_per_kwh[t];
        let pbin = if p < self.price_cuts[0] {
            0
        } else if p < self.price_cuts[1] {
            1
        } else {
            2
        };
        (soc * (RATIO_EDGES.len() + 1) + rbin) * PRICE_TERCILES + pbin
    }
}

/// Dispatch episodes over a scenario set, visited round-robin.
struct DispatchMdp {
    scenarios: Vec<Scenario>,
    /// Per-scenario idle rewards subtracted from the learning signal.
    baselines: Vec<Vec<f64>>,
    states: Vec<DispatchStates>,
    current: usize,
    t: usize,
    soc: f64,
}

impl TabularEnv for DispatchMdp {
    fn n_states(&self) -> usize {
        self.states[0].count()
    }

    fn n_actions(&self) -> usize {
        self.scenarios[0].action_levels
    }

    fn reset(&mut self, episode: usize) -> usize {
        self.current = episode % self.scenarios.len();
        let sc = &self.scenarios[self.current];
        self.t = 0;
        self.soc = sc.battery.initial_soc_kwh;
        self.states[self.current].index(sc, 0, self.soc)
    }

    fn step(&mut self, action: usize) -> (usize, f64, bool) {
        let sc = &self.scenarios[self.current];
        let (soc, out) = sc.dispatch(self.t, self.soc, sc.setpoint_kw(Action::new(action)));
        self.soc = soc;
        self.t += 1;
        let done = self.t >= sc.horizon();
        let next = if done { 0 } else { self.states[self.current].index(sc, self.t, soc) };
        (next, out.reward - self.baselines[self.current][self.t - 1], done)
    }
}

/// Tabular Q-learning controller; greedy with random tie-breaks at run time.
#[derive(Debug, Clone)]
pub struct TabularQ {
    pub table: QTable,
    pub soc_bins: usize,
    states: Option<DispatchStates>,
    rng: ChaCha8Rng,
}

impl TabularQ {
    /// Train on `scenarios` round-robin. The ablation flags only affect the
    /// reward weights used for training.
    pub fn train(scenarios: &[Scenario], cfg: &QConfig, flags: AblationFlags, seed: u64) -> Result<Self, AgentError> {
        let Some(first) = scenarios.first() else {
            return Err(AgentError::NoScenarios);
        };
        if scenarios.iter().any(|s| s.action_levels != first.action_levels) {
            return Err(AgentError::Config("scenarios disagree on action levels".into()));
        }
        let scenarios: Vec<Scenario> = scenarios
            .iter()
            .map(|s| {
                let mut s = s.clone();
                s.weights = flags.training_weights(s.weights);
                s
            })
            .collect();
        let states = scenarios.iter().map(|s| DispatchStates::new(s, cfg.soc_bins)).collect();
        let baselines = scenarios
            .iter()
            .map(|s| if cfg.idle_baseline { idle_rewards(s) } else { vec![0.0; s.horizon()] })
            .collect();
        let mut mdp = DispatchMdp {
            scenarios,
            baselines,
            states,
            current: 0,
            t: 0,
            soc: 0.0,
        };
        let table = q_learning(&mut mdp, cfg, seed);
        Ok(Self {
            table,
            soc_bins: cfg.soc_bins,
            states: None,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5eed),
        })
    }
}

impl TabularQ {
    /// Controller over a saved table.
    pub fn from_table(table: QTable, soc_bins: usize, seed: u64) -> Result<Self, AgentError> {
        let expected = soc_bins.max(2) * (RATIO_EDGES.len() + 1) * PRICE_TERCILES;
        if table.n_states != expected || table.values.len() != table.n_states * table.n_actions {
            return Err(AgentError::Config(format!(
                "table has {} states, {soc_bins} SOC bins need {expected}",
                table.n_states
            )));
        }
        Ok(Self { table, soc_bins, states: None, rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5eed) })
    }
}

impl Controller for TabularQ {
    fn begin(&mut self, scenario: &Scenario) -> Result<(), AgentError> {
        self.states = Some(DispatchStates::new(scenario, self.soc_bins));
        Ok(())
    }

    fn act(&mut self, scenario: &Scenario, state: &EnvState, _soc_history: &[f64]) -> Action {
        let states = self
            .states
            .get_or_insert_with(|| DispatchStates::new(scenario, self.soc_bins));
        let s = states.index(scenario, state.t, state.soc_kwh);
        Action::new(self.table.greedy_visited(s, &mut self.rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{run_episode, RuleBased};
    use crate::traces::{preset_battery, synthesize, Preset};

    /// Two states; action 1 moves to (or stays in) state 1, action 0 to state 0.
    /// Staying in state 0 pays 0.1, staying in state 1 pays 1.
    struct Chain {
        s: usize,
    }

    impl Chain {
        fn transition(s: usize, a: usize) -> (usize, f64) {
            match (s, a) {
                (0, 0) => (0, 0.1),
                (0, _) => (1, 0.0),
                (_, 0) => (0, 0.0),
                _ => (1, 1.0),
            }
        }
    }

    impl TabularEnv for Chain {
        fn n_states(&self) -> usize {
            2
        }
        fn n_actions(&self) -> usize {
            2
        }
        fn reset(&mut self, episode: usize) -> usize {
            self.s = episode % 2;
            self.s
        }
        fn step(&mut self, a: usize) -> (usize, f64, bool) {
            let (s, r) = Self::transition(self.s, a);
            self.s = s;
            (s, r, false)
        }
    }

    fn value_iteration(gamma: f64) -> [[f64; 2]; 2] {
        let mut q = [[0.0f64; 2]; 2];
        for _ in 0..2000 {
            let v = [q[0][0].max(q[0][1]), q[1][0].max(q[1][1])];
            for (s, row) in q.iter_mut().enumerate() {
                for (a, cell) in row.iter_mut().enumerate() {
                    let (n, r) = Chain::transition(s, a);
                    *cell = r + gamma * v[n];
                }
            }
        }
        q
    }

    #[test]
    fn chain_converges_to_optimal_actions() {
        let cfg = QConfig { episodes: 400, gamma: 0.9, max_steps: Some(50), ..Default::default() };
        let table = q_learning(&mut Chain { s: 0 }, &cfg, 1);
        let opt = value_iteration(0.9);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for s in 0..2 {
            let best = if opt[s][1] > opt[s][0] { 1 } else { 0 };
            assert_eq!(table.greedy(s, &mut rng), best, "state {s}: {:?} vs {:?}", table.row(s), opt[s]);
        }
    }

    fn scenarios() -> Vec<Scenario> {
        (0..2)
            .map(|seed| {
                let series = synthesize(Preset::Mixed, 2, seed).unwrap();
                let mean = series.demand_kw.iter().sum::<f64>() / series.len() as f64;
                Scenario::new(format!("m{seed}"), series, preset_battery(mean))
            })
            .collect()
    }

    #[test]
    fn zero_episodes_is_uniform_random() {
        let sc = scenarios();
        let cfg = QConfig { episodes: 0, ..Default::default() };
        let q = TabularQ::train(&sc, &cfg, AblationFlags::NONE, 3).unwrap();
        assert!(q.table.values.iter().all(|&v| v == 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut counts = [0usize; 11];
        for _ in 0..11_000 {
            counts[q.table.greedy(0, &mut rng)] += 1;
        }
        assert!(counts.iter().all(|&c| (800..1200).contains(&c)), "{counts:?}");
    }

    #[test]
    fn same_seed_same_table() {
        let sc = scenarios();
        let cfg = QConfig { episodes: 5, ..Default::default() };
        let a = TabularQ::train(&sc, &cfg, AblationFlags::NONE, 5).unwrap();
        let b = TabularQ::train(&sc, &cfg, AblationFlags::NONE, 5).unwrap();
        assert_eq!(a.table, b.table);
        let c = TabularQ::train(&sc, &cfg, AblationFlags::NONE, 6).unwrap();
        assert_ne!(a.table, c.table);
    }

    #[test]
    fn state_index_covers_table() {
        let sc = &scenarios()[0];
        let st = DispatchStates::new(sc, 5);
        for t in 0..sc.horizon() {
            for soc in [sc.battery.soc_min_kwh, sc.battery.soc_max_kwh] {
                assert!(st.index(sc, t, soc) < st.count());
            }
        }
        let mut q = TabularQ::train(&scenarios(), &QConfig { episodes: 2, ..Default::default() }, AblationFlags::NONE, 1)
            .unwrap();
        let log = run_episode(sc, &mut q, 0).unwrap();
        assert_eq!(log.len(), sc.horizon());
        let _ = run_episode(sc, &mut RuleBased, 0).unwrap();
    }
}
