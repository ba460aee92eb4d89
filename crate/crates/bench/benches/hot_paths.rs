use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use ecodispatch::agents::{ppo_update, run_episode, ObservationSpec, PpoConfig, RolloutBuffer, RuleBased};
use ecodispatch::metrics::MetricReport;
use ecodispatch::nn::{Adam, Network, NetworkConfig};
use ecodispatch::sim::{dp_optimal_dispatch, Action, Scenario};
use ecodispatch::traces::{preset_battery, synthesize, Preset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scenario(days: usize) -> Scenario {
    let series = synthesize(Preset::Mixed, days, 1).unwrap();
    let mean = series.demand_kw.iter().sum::<f64>() / series.len() as f64;
    let mut sc = Scenario::new("bench", series, preset_battery(mean));
    sc.grid_charging = true;
    sc
}

fn env_step(c: &mut Criterion) {
    let sc = scenario(7);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    c.bench_function("env_step", |b| {
        b.iter_batched(
            || (sc.reset(0).unwrap(), Action::new(rng.gen_range(0..sc.action_levels))),
            |(state, a)| black_box(sc.step(&state, a).unwrap()),
            BatchSize::SmallInput,
        )
    });
    c.bench_function("rule_based_week_with_metrics", |b| {
        b.iter(|| {
            let log = run_episode(&sc, &mut RuleBased, 0).unwrap();
            black_box(MetricReport::from_log(&log).unwrap())
        })
    });
}

fn network(c: &mut Criterion) {
    let spec = ObservationSpec::default();
    let net = Network::new(NetworkConfig::with_sizes(spec.window, spec.features(), 11, 16, 16)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params = net.init_params(&mut rng);
    let obs: Vec<f64> = (0..spec.len()).map(|_| rng.gen::<f64>()).collect();
    c.bench_function("forward", |b| b.iter(|| black_box(net.forward(&params, &obs).unwrap())));
    let pass = net.forward(&params, &obs).unwrap();
    let d_logits = vec![0.1; 11];
    let mut grad = vec![0.0; net.param_count()];
    c.bench_function("backward", |b| {
        b.iter(|| {
            net.backward(&params, &pass, &d_logits, 0.5, &mut grad).unwrap();
            black_box(&grad);
        })
    });
}

fn ppo(c: &mut Criterion) {
    let spec = ObservationSpec::default();
    let net = Network::new(NetworkConfig::with_sizes(spec.window, spec.features(), 11, 16, 16)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let params = net.init_params(&mut rng);
    let cfg = PpoConfig { rollout: 512, ..Default::default() };
    let mut buffer = RolloutBuffer::new(spec.len());
    for i in 0..cfg.rollout {
        let obs: Vec<f64> = (0..spec.len()).map(|_| rng.gen::<f64>()).collect();
        let pass = net.forward(&params, &obs).unwrap();
        let a = rng.gen_range(0..11);
        buffer.push(&obs, a, pass.probs[a].ln(), -rng.gen::<f64>(), pass.value, i % 128 == 127);
    }
    buffer.finish(0.0, cfg.gamma, cfg.lambda).unwrap();
    let mut group = c.benchmark_group("ppo");
    group.sample_size(10);
    group.bench_function("update_512_steps", |b| {
        b.iter_batched(
            || (params.clone(), Adam::new(cfg.adam, net.param_count()), ChaCha8Rng::seed_from_u64(3)),
            |(mut p, mut adam, mut r)| black_box(ppo_update(&net, &mut p, &mut adam, &buffer, &cfg, &mut r).unwrap()),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

fn dp(c: &mut Criterion) {
    let sc = scenario(1);
    let mut group = c.benchmark_group("dp");
    group.sample_size(10);
    group.bench_function("day_101_levels", |b| b.iter(|| black_box(dp_optimal_dispatch(&sc, 101, 96).unwrap())));
    group.finish();
}

criterion_group!(benches, env_step, network, ppo, dp);
criterion_main!(benches);
