use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{Activation, CellKind, LayerSpec, NetworkConfig};
use super::network::{log_softmax, Network};
use super::NnError;

pub const GRAD_CHECK_STEP: f64 = 1e-4;
pub const GRAD_CHECK_COORDS: usize = 100;
/// Gradients smaller than this are compared in absolute terms.
const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerCheck {
    /// Layer name (`conv0`, `rec2`, `dense3`, `policy`, `value`).
    pub layer: String,
    pub group: String,
    pub checked: usize,
    /// Probes dropped because they crossed a ReLU kink.
    pub skipped: usize,
    pub max_rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub layers: Vec<LayerCheck>,
}

impl GradCheckReport {
    pub fn max_rel_err(&self) -> f64 {
        self.layers.iter().map(|l| l.max_rel_err).fold(0.0, f64::max)
    }

    pub fn max_for_group(&self, group: &str) -> Option<f64> {
        self.layers
            .iter()
            .filter(|l| l.group == group)
            .map(|l| l.max_rel_err)
            .reduce(f64::max)
    }
}

pub fn grad_check(config: &NetworkConfig, seed: u64) -> Result<GradCheckReport, NnError> {
    grad_check_with(config, seed, GRAD_CHECK_COORDS, GRAD_CHECK_STEP)
}

/// Compare `backward` against central differences on random coordinates of
/// every layer. The probe loss mixes random linear weights on the logits and
/// the value with the log-probability of a random action, so the softmax
/// path is exercised too.
pub fn grad_check_with(
    config: &NetworkConfig,
    seed: u64,
    coords_per_layer: usize,
    step: f64,
) -> Result<GradCheckReport, NnError> {
    let net = Network::new(config.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = net.init_params(&mut rng);
    for block in net.blocks().iter().filter(|b| b.is_bias()) {
        for p in &mut params[block.range()] {
            *p = rng.gen_range(-0.1..0.1);
        }
    }
    let obs: Vec<f64> = (0..config.input_len()).map(|_| rng.gen_range(0.0..1.0)).collect();
    let k = config.actions;
    let c_logits: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let c_value: f64 = rng.gen_range(-1.0..1.0);
    let action = rng.gen_range(0..k);

    let loss = |p: &[f64]| -> Result<(f64, Vec<bool>), NnError> {
        let pass = net.forward(p, &obs)?;
        let lin: f64 = c_logits.iter().zip(&pass.logits).map(|(c, z)| c * z).sum();
        let value = lin + c_value * pass.value + log_softmax(&pass.logits)[action];
        Ok((value, pass.relu_pattern(&net)))
    };

    let pass = net.forward(&params, &obs)?;
    let base_pattern = pass.relu_pattern(&net);
    let d_logits: Vec<f64> = (0..k)
        .map(|i| c_logits[i] + if i == action { 1.0 } else { 0.0 } - pass.probs[i])
        .collect();
    let analytic = net.gradient(&params, &pass, &d_logits, c_value)?;

    let mut layers: Vec<(String, String, Vec<std::ops::Range<usize>>)> = Vec::new();
    for block in net.blocks() {
        let layer = block.name.split('.').next().unwrap_or_default().to_string();
        match layers.last_mut() {
            Some((name, _, ranges)) if *name == layer => ranges.push(block.range()),
            _ => layers.push((layer, block.group.clone(), vec![block.range()])),
        }
    }

    let mut report = Vec::new();
    for (layer, group, ranges) in layers {
        let size: usize = ranges.iter().map(|r| r.len()).sum();
        let mut check = LayerCheck {
            layer,
            group,
            checked: 0,
            skipped: 0,
            max_rel_err: 0.0,
        };
        let mut attempts = 0;
        while check.checked < coords_per_layer && attempts < 20 * coords_per_layer {
            attempts += 1;
            let mut pick = rng.gen_range(0..size);
            let idx = ranges
                .iter()
                .find_map(|r| {
                    if pick < r.len() {
                        Some(r.start + pick)
                    } else {
                        pick -= r.len();
                        None
                    }
                })
                .expect("pick is within the layer");
            let orig = params[idx];
            params[idx] = orig + step;
            let (plus, pat_plus) = loss(&params)?;
            params[idx] = orig - step;
            let (minus, pat_minus) = loss(&params)?;
            params[idx] = orig;
            if pat_plus != base_pattern || pat_minus != base_pattern {
                check.skipped += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * step);
            let a = analytic[idx];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
            check.max_rel_err = check.max_rel_err.max(err);
            check.checked += 1;
        }
        report.push(check);
    }
    Ok(GradCheckReport { layers: report })
}

/// One network of [`grad_check_suite`] with its error bound.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteCase {
    pub name: &'static str,
    pub tolerance: f64,
    pub report: GradCheckReport,
}

impl SuiteCase {
    pub fn passed(&self) -> bool {
        self.report.max_rel_err() < self.tolerance
    }
}

/// The policy network (convolution, gated and simple recurrent cells,
/// softmax and value heads) at 1e-3, and a dense-only network at 1e-6.
pub fn grad_check_suite(window: usize, features: usize, actions: usize, seed: u64) -> Result<Vec<SuiteCase>, NnError> {
    let standard = NetworkConfig::standard(window, features, actions);
    let mut simple = standard.clone();
    for layer in &mut simple.layers {
        if let LayerSpec::Recurrent { cell, .. } = layer {
            *cell = CellKind::Simple;
        }
    }
    let dense = NetworkConfig {
        window,
        features,
        actions,
        layers: vec![
            LayerSpec::Dense { units: 16, activation: Activation::Tanh },
            LayerSpec::Dense { units: 12, activation: Activation::Relu },
            LayerSpec::Dense { units: 8, activation: Activation::Linear },
        ],
    };
    Ok(vec![
        SuiteCase { name: "conv-gated", tolerance: 1e-3, report: grad_check(&standard, seed)? },
        SuiteCase { name: "conv-simple", tolerance: 1e-3, report: grad_check(&simple, seed.wrapping_add(1))? },
        SuiteCase { name: "dense-only", tolerance: 1e-6, report: grad_check(&dense, seed.wrapping_add(2))? },
    ])
}
