use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::observation::{ObservationBuilder, ObservationSpec};
use super::{AblationFlags, AgentError, Controller};
use crate::forecast::ForecastModel;
use crate::nn::{log_softmax, Adam, AdamConfig, Checkpoint, Network, NnError};
use crate::sim::{Action, EnvState, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub clip: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub rollout: usize,
    pub updates: usize,
    /// Global gradient-norm clip applied before each optimizer step.
    pub max_grad_norm: f64,
    pub adam: AdamConfig,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lambda: 0.95,
            clip: 0.2,
            entropy_coef: 0.01,
            value_coef: 0.5,
            epochs: 4,
            minibatch: 64,
            rollout: 2048,
            updates: 200,
            max_grad_norm: 0.5,
            adam: AdamConfig::default(),
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::Config(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) || !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad("gamma and lambda must lie in (0, 1]");
        }
        if !(self.clip > 0.0 && self.clip <= 0.5) {
            return bad("clip must lie in (0, 0.5]");
        }
        if self.epochs == 0 || self.minibatch == 0 || self.rollout == 0 {
            return bad("epochs, minibatch and rollout must be positive");
        }
        if self.entropy_coef < 0.0 || self.value_coef < 0.0 || self.max_grad_norm <= 0.0 {
            return bad("loss weights must be ≥ 0 and the gradient clip > 0");
        }
        if !(self.adam.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActMode {
    Sample,
    Greedy,
}

/// Pick an action from the policy. Greedy ties go to the lowest index.
/// Returns the action, its log-probability and the value estimate.
pub fn act<R: Rng + ?Sized>(
    net: &Network,
    params: &[f64],
    obs: &[f64],
    mode: ActMode,
    rng: &mut R,
) -> Result<(Action, f64, f64), NnError> {
    let pass = net.forward(params, obs)?;
    let index = match mode {
        ActMode::Greedy => argmax(&pass.probs),
        ActMode::Sample => sample(&pass.probs, rng),
    };
    let logp = log_softmax(&pass.logits)[index];
    Ok((Action::new(index), logp, pass.value))
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn sample<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left `acc` just under 1; take the last action with mass.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Generalized advantage estimates and returns.
///
/// `δ_t = r_t + γ V_{t+1} (1 - done_t) - V_t`,
/// `A_t = δ_t + γ λ (1 - done_t) A_{t+1}`, with `V_n = last_value`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    last_value: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>), AgentError> {
    let n = rewards.len();
    if values.len() != n || dones.len() != n {
        return Err(AgentError::Length(format!(
            "rewards {n}, values {}, dones {}",
            values.len(),
            dones.len()
        )));
    }
    let mut adv = vec![0.0; n];
    let mut next_value = last_value;
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        adv[t] = next_adv;
        next_value = values[t];
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, returns))
}

/// Transitions collected under one parameter snapshot.
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    obs_len: usize,
    pub observations: Vec<f64>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub dones: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn new(obs_len: usize) -> Self {
        Self { obs_len, ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn clear(&mut self) {
        let obs_len = self.obs_len;
        *self = Self::new(obs_len);
    }

    pub fn observation(&self, i: usize) -> &[f64] {
        &self.observations[i * self.obs_len..(i + 1) * self.obs_len]
    }

    pub fn push(&mut self, obs: &[f64], action: usize, log_prob: f64, reward: f64, value: f64, done: bool) {
        assert_eq!(obs.len(), self.obs_len, "observation length");
        self.observations.extend_from_slice(obs);
        self.actions.push(action);
        self.log_probs.push(log_prob);
        self.rewards.push(reward);
        self.values.push(value);
        self.dones.push(done);
    }

    /// Fill advantages and returns, bootstrapping from `last_value`.
    pub fn finish(&mut self, last_value: f64, gamma: f64, lambda: f64) -> Result<(), AgentError> {
        let (adv, ret) = compute_gae(&self.rewards, &self.values, &self.dones, last_value, gamma, lambda)?;
        self.advantages = adv;
        self.returns = ret;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    /// Mean negated clipped surrogate over all minibatch samples.
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    /// Share of samples whose ratio left [1 - ε, 1 + ε].
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub optimizer_steps: usize,
}

/// Clipped surrogate `mean(min(ρ A, clip(ρ, 1 - ε, 1 + ε) A))` and the share
/// of clipped ratios.
pub fn surrogate(ratios: &[f64], advantages: &[f64], clip: f64) -> (f64, f64) {
    let n = ratios.len().max(1) as f64;
    let mut total = 0.0;
    let mut clipped = 0;
    for (&r, &a) in ratios.iter().zip(advantages) {
        total += (r * a).min(r.clamp(1.0 - clip, 1.0 + clip) * a);
        if (r - 1.0).abs() > clip {
            clipped += 1;
        }
    }
    (total / n, clipped as f64 / n)
}

/// Several epochs of clipped-surrogate minibatch updates over `buffer`.
/// Advantages are normalized to zero mean and unit variance over the buffer.
/// A non-finite loss restores the parameters and optimizer to their state
/// before the call.
pub fn ppo_update<R: Rng + ?Sized>(
    net: &Network,
    params: &mut Vec<f64>,
    adam: &mut Adam,
    buffer: &RolloutBuffer,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateStats, AgentError> {
    let n = buffer.len();
    if n == 0 || buffer.advantages.len() != n || buffer.returns.len() != n {
        return Err(AgentError::Length("buffer has no computed advantages".into()));
    }
    let mean = buffer.advantages.iter().sum::<f64>() / n as f64;
    let var = buffer.advantages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64;
    let sd = var.sqrt().max(1e-8);
    let adv: Vec<f64> = buffer.advantages.iter().map(|a| (a - mean) / sd).collect();

    let snapshot = (params.clone(), adam.clone());
    let k = net.config().actions;
    let mut order: Vec<usize> = (0..n).collect();
    let mut grad = vec![0.0; params.len()];
    let mut d_logits = vec![0.0; k];
    let mut stats = UpdateStats::default();
    let mut samples = 0usize;

    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for batch in order.chunks(cfg.minibatch) {
            grad.fill(0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let pass = net.forward(params, buffer.observation(i))?;
                let logp = log_softmax(&pass.logits);
                let a = buffer.actions[i];
                let ratio = (logp[a] - buffer.log_probs[i]).exp();
                let adv_i = adv[i];
                let clipped = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip);
                let unclipped_active = ratio * adv_i <= clipped * adv_i;
                let surr = (ratio * adv_i).min(clipped * adv_i);
                let entropy: f64 = -pass.probs.iter().zip(&logp).map(|(p, l)| p * l).sum::<f64>();
                let verr = pass.value - buffer.returns[i];
                let loss = -surr + cfg.value_coef * verr * verr - cfg.entropy_coef * entropy;
                if !loss.is_finite() {
                    *params = snapshot.0;
                    *adam = snapshot.1;
                    return Err(AgentError::NonFiniteLoss(adam.steps() as usize));
                }
                stats.policy_loss += -surr;
                stats.value_loss += verr * verr;
                stats.entropy += entropy;
                stats.approx_kl += buffer.log_probs[i] - logp[a];
                if (ratio - 1.0).abs() > cfg.clip {
                    stats.clip_fraction += 1.0;
                }
                samples += 1;

                // d(-ρA)/dz_j = -A ρ (1[j = a] - p_j) when the unclipped branch is active.
                let pg = if unclipped_active { -adv_i * ratio } else { 0.0 };
                for j in 0..k {
                    let p = pass.probs[j];
                    let onehot = if j == a { 1.0 } else { 0.0 };
                    let mut g = pg * (onehot - p);
                    if cfg.entropy_coef != 0.0 {
                        // d(-cH)/dz_j = c p_j (log p_j + H)
                        g += cfg.entropy_coef * p * (logp[j] + entropy);
                    }
                    d_logits[j] = g * scale;
                }
                let d_value = 2.0 * cfg.value_coef * verr * scale;
                net.backward(params, &pass, &d_logits, d_value, &mut grad)?;
            }
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > cfg.max_grad_norm {
                let s = cfg.max_grad_norm / norm;
                grad.iter_mut().for_each(|g| *g *= s);
            }
            if adam.step(params, &grad) {
                stats.optimizer_steps += 1;
            }
        }
    }
    let m = samples.max(1) as f64;
    stats.policy_loss /= m;
    stats.value_loss /= m;
    stats.entropy /= m;
    stats.clip_fraction /= m;
    stats.approx_kl /= m;
    Ok(stats)
}

/// A trained network packaged as a controller.
#[derive(Debug, Clone)]
pub struct PpoPolicy {
    pub network: Network,
    pub params: Vec<f64>,
    pub spec: ObservationSpec,
    pub forecaster: ForecastModel,
    pub flags: AblationFlags,
    pub mode: ActMode,
    builder: Option<ObservationBuilder>,
    rng: rand_chacha::ChaCha8Rng,
}

impl PpoPolicy {
    pub fn new(
        network: Network,
        params: Vec<f64>,
        spec: ObservationSpec,
        forecaster: ForecastModel,
        flags: AblationFlags,
    ) -> Self {
        use rand::SeedableRng;
        Self {
            network,
            params,
            spec,
            forecaster,
            flags,
            mode: ActMode::Greedy,
            builder: None,
            rng: rand_chacha::ChaCha8Rng::seed_from_u64(0),
        }
    }
}

/// On-disk form of a [`PpoPolicy`]: network checkpoint plus what the
/// observation builder needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFile {
    pub checkpoint: Checkpoint,
    pub observation: ObservationSpec,
    pub forecaster: ForecastModel,
    pub flags: AblationFlags,
}

impl PpoPolicy {
    pub fn save(&self, path: &std::path::Path) -> Result<(), AgentError> {
        let file = PolicyFile {
            checkpoint: Checkpoint::new(&self.network, &self.params)?,
            observation: self.spec,
            forecaster: self.forecaster.clone(),
            flags: self.flags,
        };
        let w = std::io::BufWriter::new(std::fs::File::create(path).map_err(NnError::from)?);
        serde_json::to_writer(w, &file).map_err(NnError::from)?;
        Ok(())
    }

    /// Load a greedy policy saved by [`PpoPolicy::save`].
    pub fn load(path: &std::path::Path) -> Result<Self, AgentError> {
        let r = std::io::BufReader::new(std::fs::File::open(path).map_err(NnError::from)?);
        let file: PolicyFile = serde_json::from_reader(r).map_err(NnError::from)?;
        let net = Network::new(file.checkpoint.config.clone())?;
        if net.blocks() != file.checkpoint.blocks.as_slice() || net.param_count() != file.checkpoint.params.len() {
            return Err(NnError::InvalidConfig("block table does not match config".into()).into());
        }
        Ok(Self::new(net, file.checkpoint.params, file.observation, file.forecaster, file.flags))
    }
}

impl Controller for PpoPolicy {
    fn begin(&mut self, scenario: &Scenario) -> Result<(), AgentError> {
        let expected = self.spec.len();
        if self.network.config().input_len() != expected {
            return Err(AgentError::Config(format!(
                "network expects {} inputs, observation has {expected}",
                self.network.config().input_len()
            )));
        }
        if self.network.config().actions != scenario.action_levels {
            return Err(AgentError::Config(format!(
                "network has {} actions, scenario {}",
                self.network.config().actions,
                scenario.action_levels
            )));
        }
        self.builder = Some(ObservationBuilder::new(scenario, &self.forecaster, self.spec, self.flags));
        Ok(())
    }

    fn act(&mut self, scenario: &Scenario, state: &EnvState, soc_history: &[f64]) -> Action {
        let builder = self
            .builder
            .get_or_insert_with(|| ObservationBuilder::new(scenario, &self.forecaster, self.spec, self.flags));
        let obs = builder.build(state.t, soc_history);
        act(&self.network, &self.params, &obs, self.mode, &mut self.rng)
            .map(|(a, _, _)| a)
            .unwrap_or_else(|_| scenario.idle_action())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, LayerSpec, NetworkConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_net(actions: usize) -> Network {
        Network::new(NetworkConfig {
            window: 1,
            features: 2,
            actions,
            layers: vec![LayerSpec::Dense { units: 4, activation: Activation::Tanh }],
        })
        .unwrap()
    }

    /// Set the policy bias so the softmax equals `probs`, all other weights zero.
    fn params_for(net: &Network, probs: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; net.param_count()];
        let b = net.blocks().iter().find(|b| b.name == "policy.b").unwrap().offset;
        for (i, q) in probs.iter().enumerate() {
            p[b + i] = q.ln();
        }
        p
    }

    #[test]
    fn greedy_ties_take_lowest_index() {
        let net = tiny_net(4);
        let params = vec![0.0; net.param_count()];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (a, logp, _) = act(&net, &params, &[0.3, 0.7], ActMode::Greedy, &mut rng).unwrap();
        assert_eq!(a.battery_setpoint_index, 0);
        assert!((logp - 0.25f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn sampling_matches_probabilities() {
        let net = tiny_net(2);
        let params = params_for(&net, &[0.1, 0.9]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 10_000;
        let mut ones = 0;
        for _ in 0..n {
            let (a, logp, _) = act(&net, &params, &[0.0, 0.0], ActMode::Sample, &mut rng).unwrap();
            let p = [0.1, 0.9][a.battery_setpoint_index];
            assert!((logp - f64::ln(p)).abs() < 1e-9);
            ones += a.battery_setpoint_index;
        }
        let freq = ones as f64 / n as f64;
        assert!((0.88..=0.92).contains(&freq), "{freq}");
    }

    #[test]
    fn sampling_passes_chi_square() {
        let probs = [0.05, 0.15, 0.3, 0.5];
        let net = tiny_net(4);
        let params = params_for(&net, &probs);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 10_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let (a, _, _) = act(&net, &params, &[0.0, 0.0], ActMode::Sample, &mut rng).unwrap();
            counts[a.battery_setpoint_index] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .zip(&probs)
            .map(|(&c, &p)| {
                let e = p * n as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        // 99.9th percentile of χ² with 3 degrees of freedom.
        assert!(chi2 < 16.27, "{chi2}");
    }

    fn brute_force_return(rewards: &[f64], dones: &[bool], last: f64, gamma: f64, t: usize) -> f64 {
        let mut g = 0.0;
        let mut disc = 1.0;
        for k in t..rewards.len() {
            g += disc * rewards[k];
            if dones[k] {
                return g;
            }
            disc *= gamma;
        }
        g + disc * last
    }

    #[test]
    fn gae_examples() {
        let (adv, ret) = compute_gae(&[1.0, 1.0], &[0.0, 0.0], &[false, true], 0.0, 1.0, 1.0).unwrap();
        assert_eq!(adv, vec![2.0, 1.0]);
        assert_eq!(ret, vec![2.0, 1.0]);
        let (adv, _) = compute_gae(&[0.0; 5], &[0.0; 5], &[false; 5], 0.0, 0.99, 0.95).unwrap();
        assert!(adv.iter().all(|&a| a == 0.0));
        let (adv, _) = compute_gae(&[2.0], &[1.0], &[false], 2.0, 0.5, 0.9).unwrap();
        assert_eq!(adv, vec![2.0]);
        assert!(compute_gae(&[1.0], &[1.0, 2.0], &[false], 0.0, 0.9, 0.9).is_err());
    }

    #[test]
    fn gae_with_unit_lambda_is_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.gen_range(1..40);
            let rewards: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let dones: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.1)).collect();
            let last = rng.gen_range(-5.0..5.0);
            let gamma = rng.gen_range(0.5..1.0);
            let (adv, _) = compute_gae(&rewards, &values, &dones, last, gamma, 1.0).unwrap();
            for t in 0..n {
                let mc = brute_force_return(&rewards, &dones, last, gamma, t) - values[t];
                assert!((adv[t] - mc).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn surrogate_at_unit_ratio_is_mean_advantage() {
        let adv = [0.5, -1.0, 2.0, 0.25];
        let (s, clip) = surrogate(&[1.0; 4], &adv, 0.2);
        assert!((s - adv.iter().sum::<f64>() / 4.0).abs() < 1e-15);
        assert_eq!(clip, 0.0);
        let (_, clip) = surrogate(&[1.5, 1.0, 0.5, 1.1], &adv, 0.2);
        assert_eq!(clip, 0.5);
    }

    fn bandit_buffer(net: &Network, params: &[f64], n: usize, seed: u64) -> RolloutBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut buf = RolloutBuffer::new(2);
        for _ in 0..n {
            let obs = [0.5, 0.5];
            let (a, logp, v) = act(net, params, &obs, ActMode::Sample, &mut rng).unwrap();
            let r = if a.battery_setpoint_index == 0 { 1.0 } else { 0.0 };
            buf.push(&obs, a.battery_setpoint_index, logp, r, v, true);
        }
        buf.finish(0.0, 0.99, 0.95).unwrap();
        buf
    }

    #[test]
    fn bandit_step_raises_rewarded_action() {
        let net = tiny_net(2);
        let mut params = net.init_params(&mut ChaCha8Rng::seed_from_u64(4));
        let before = net.forward(&params, &[0.5, 0.5]).unwrap().probs[0];
        let buf = bandit_buffer(&net, &params, 64, 5);
        let cfg = PpoConfig { epochs: 1, minibatch: 64, ..Default::default() };
        let mut adam = Adam::new(cfg.adam, net.param_count());
        let stats = ppo_update(&net, &mut params, &mut adam, &buf, &cfg, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        assert_eq!(stats.optimizer_steps, 1);
        // Single minibatch at ratio 1: nothing is clipped.
        assert_eq!(stats.clip_fraction, 0.0);
        let after = net.forward(&params, &[0.5, 0.5]).unwrap().probs[0];
        assert!(after > before, "{before} -> {after}");
    }

    #[test]
    fn zero_advantages_leave_policy_to_entropy_and_value() {
        let net = tiny_net(3);
        let params0 = net.init_params(&mut ChaCha8Rng::seed_from_u64(7));
        let mut buf = bandit_buffer(&net, &params0, 16, 8);
        buf.advantages = vec![0.0; buf.len()];
        let cfg = PpoConfig { epochs: 1, minibatch: 16, entropy_coef: 0.0, value_coef: 0.0, ..Default::default() };
        let mut params = params0.clone();
        let mut adam = Adam::new(cfg.adam, net.param_count());
        ppo_update(&net, &mut params, &mut adam, &buf, &cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(params, params0);
    }

    #[test]
    fn non_finite_loss_restores_params() {
        let net = tiny_net(2);
        let params0 = net.init_params(&mut ChaCha8Rng::seed_from_u64(10));
        let mut buf = bandit_buffer(&net, &params0, 8, 11);
        buf.returns[3] = f64::NAN;
        let cfg = PpoConfig { epochs: 2, minibatch: 4, ..Default::default() };
        let mut params = params0.clone();
        let mut adam = Adam::new(cfg.adam, net.param_count());
        let err = ppo_update(&net, &mut params, &mut adam, &buf, &cfg, &mut ChaCha8Rng::seed_from_u64(12));
        assert!(matches!(err, Err(AgentError::NonFiniteLoss(_))));
        assert_eq!(params, params0);
        assert_eq!(adam.steps(), 0);
    }

    #[test]
    fn policy_file_round_trips() {
        let net = tiny_net(3);
        let params = params_for(&net, &[0.2, 0.5, 0.3]);
        let spec = ObservationSpec { window: 1, horizon: 0 };
        let mut flags = AblationFlags::NONE;
        flags.no_energy_prediction = true;
        let p = PpoPolicy::new(net, params.clone(), spec, ForecastModel::persistence(), flags);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.json");
        p.save(&path).unwrap();
        let q = PpoPolicy::load(&path).unwrap();
        assert_eq!(q.params, params);
        assert_eq!(q.spec, spec);
        assert_eq!(q.flags, flags);
        assert_eq!(q.mode, ActMode::Greedy);
    }

}
