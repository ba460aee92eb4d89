use super::env::Scenario;
use super::types::Action;
use super::SimError;

pub const MAX_DP_HORIZON: usize = 200;
pub const MAX_DP_SOC_LEVELS: usize = 101;
pub const MAX_DP_ACTION_LEVELS: usize = 11;

/// Cost charged per kWh of unserved demand inside the oracle's objective.
/// Large enough that any adequate schedule beats any inadequate one.
pub const UNSERVED_PENALTY_PER_KWH: f64 = 1.0e6;

/// Uniform grid over `[soc_min, soc_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocGrid {
    pub min_kwh: f64,
    pub max_kwh: f64,
    pub levels: usize,
}

impl SocGrid {
    pub fn new(min_kwh: f64, max_kwh: f64, levels: usize) -> Self {
        assert!(levels >= 2, "a SOC grid needs at least two levels");
        Self {
            min_kwh,
            max_kwh,
            levels,
        }
    }

    pub fn cell_kwh(&self) -> f64 {
        (self.max_kwh - self.min_kwh) / (self.levels - 1) as f64
    }

    pub fn value(&self, idx: usize) -> f64 {
        if idx + 1 == self.levels {
            self.max_kwh
        } else {
            self.min_kwh + idx as f64 * self.cell_kwh()
        }
    }

    /// Nearest grid index.
    pub fn snap(&self, soc_kwh: f64) -> usize {
        let x = ((soc_kwh - self.min_kwh) / self.cell_kwh()).round();
        (x.max(0.0) as usize).min(self.levels - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpSolution {
    /// Summed grid and storage cost along the optimal path.
    pub total_cost: f64,
    pub unserved_kwh: f64,
    pub actions: Vec<Action>,
    /// Grid-snapped SOC before each step plus the terminal value.
    pub soc_path: Vec<f64>,
}

impl DpSolution {
    pub fn objective(&self) -> f64 {
        self.total_cost + UNSERVED_PENALTY_PER_KWH * self.unserved_kwh
    }
}

/// Exact minimum of summed energy cost over the first `horizon` steps.
///
/// SOC is discretized to `soc_levels` evenly spaced values and every
/// transition is evaluated with [`Scenario::dispatch`] from a grid point,
/// then snapped to the nearest grid point. Unserved demand is penalized by
/// [`UNSERVED_PENALTY_PER_KWH`] so supply adequacy is enforced whenever it is
/// attainable. The initial SOC is snapped as well.
///
/// Ties prefer the idle setpoint, then the lowest index.
pub fn dp_optimal_dispatch(
    scenario: &Scenario,
    soc_levels: usize,
    horizon: usize,
) -> Result<DpSolution, SimError> {
    scenario.validate()?;
    if horizon == 0 || horizon > MAX_DP_HORIZON || horizon > scenario.horizon() {
        return Err(SimError::InstanceTooLarge(format!(
            "horizon {horizon} must lie in 1..={} and within the series ({})",
            MAX_DP_HORIZON,
            scenario.horizon()
        )));
    }
    if !(2..=MAX_DP_SOC_LEVELS).contains(&soc_levels) {
        return Err(SimError::InstanceTooLarge(format!(
            "soc_levels {soc_levels} must lie in 2..={MAX_DP_SOC_LEVELS}"
        )));
    }
    if scenario.action_levels > MAX_DP_ACTION_LEVELS {
        return Err(SimError::InstanceTooLarge(format!(
            "{} action levels exceeds {MAX_DP_ACTION_LEVELS}",
            scenario.action_levels
        )));
    }
    Ok(solve(scenario, SocGrid::new(scenario.battery.soc_min_kwh, scenario.battery.soc_max_kwh, soc_levels), horizon))
}

/// Idle first, then ascending index.
fn action_order(levels: usize) -> impl Iterator<Item = usize> {
    let idle = levels / 2;
    std::iter::once(idle).chain((0..levels).filter(move |&k| k != idle))
}

struct Transition {
    next: usize,
    cost: f64,
    unserved: f64,
}

fn solve(scenario: &Scenario, grid: SocGrid, horizon: usize) -> DpSolution {
    let levels = grid.levels;
    let k = scenario.action_levels;
    let setpoints: Vec<f64> = (0..k).map(|a| scenario.setpoint_kw(Action::new(a))).collect();

    // value[t][i]: minimum objective from step t at grid point i.
    let mut value = vec![vec![0.0; levels]; horizon + 1];
    let mut policy = vec![vec![0usize; levels]; horizon];
    for t in (0..horizon).rev() {
        for i in 0..levels {
            let soc = grid.value(i);
            let mut best = f64::INFINITY;
            let mut best_a = k / 2;
            for a in action_order(k) {
                let tr = transition(scenario, &grid, t, soc, setpoints[a]);
                let v = tr.cost + UNSERVED_PENALTY_PER_KWH * tr.unserved + value[t + 1][tr.next];
                if !best.is_finite() || v < best - 1e-12 * best.abs().max(1.0) {
                    best = v;
                    best_a = a;
                }
            }
            value[t][i] = best;
            policy[t][i] = best_a;
        }
    }

    let mut i = grid.snap(scenario.battery.initial_soc_kwh);
    let mut actions = Vec::with_capacity(horizon);
    let mut soc_path = Vec::with_capacity(horizon + 1);
    let mut total_cost = 0.0;
    let mut unserved = 0.0;
    for t in 0..horizon {
        let a = policy[t][i];
        soc_path.push(grid.value(i));
        let tr = transition(scenario, &grid, t, grid.value(i), setpoints[a]);
        total_cost += tr.cost;
        unserved += tr.unserved;
        actions.push(Action::new(a));
        i = tr.next;
    }
    soc_path.push(grid.value(i));
    DpSolution {
        total_cost,
        unserved_kwh: unserved,
        actions,
        soc_path,
    }
}

fn transition(scenario: &Scenario, grid: &SocGrid, t: usize, soc: f64, setpoint: f64) -> Transition {
    let (next, out) = scenario.dispatch(t, soc, setpoint);
    Transition {
        next: grid.snap(next),
        cost: out.energy_cost,
        unserved: out.unserved_kwh,
    }
}

/// Replay `actions` through the dynamics and return (cost, unserved kWh).
///
/// With a grid, the SOC is snapped before every step exactly as the oracle
/// does; without one the raw dynamics are used.
pub fn replay_cost(scenario: &Scenario, actions: &[Action], grid: Option<&SocGrid>) -> (f64, f64) {
    let mut soc = scenario.battery.initial_soc_kwh;
    let mut cost = 0.0;
    let mut unserved = 0.0;
    for (t, &a) in actions.iter().enumerate() {
        if let Some(g) = grid {
            soc = g.value(g.snap(soc));
        }
        let (next, out) = scenario.dispatch(t, soc, scenario.setpoint_kw(a));
        cost += out.energy_cost;
        unserved += out.unserved_kwh;
        soc = next;
    }
    (cost, unserved)
}

/// Brute-force minimum over all `K^horizon` action sequences; returns the
/// best objective (cost plus unserved penalty) and a sequence attaining it.
///
/// Only usable for tiny instances. Independent of the backward recursion in
/// [`dp_optimal_dispatch`]; it shares nothing but [`Scenario::dispatch`].
pub fn exhaustive_min_cost(scenario: &Scenario, horizon: usize, grid: Option<&SocGrid>) -> (f64, Vec<Action>) {
    let k = scenario.action_levels;
    let total = k.checked_pow(horizon as u32).expect("instance too large for enumeration");
    let mut best = f64::INFINITY;
    let mut best_seq = Vec::new();
    let mut seq = vec![Action::new(0); horizon];
    for code in 0..total {
        let mut c = code;
        for slot in seq.iter_mut() {
            *slot = Action::new(c % k);
            c /= k;
        }
        let (cost, unserved) = replay_cost(scenario, &seq, grid);
        let obj = cost + UNSERVED_PENALTY_PER_KWH * unserved;
        if obj < best {
            best = obj;
            best_seq = seq.clone();
        }
    }
    (best, best_seq)
}
