mod oracle;

use std::collections::BTreeMap;

use mwmsr::engine::{joint_envelope, monte_carlo, DelayPolicy, Scheduler, Variant};
use mwmsr::protocol::C1Schedule;
use mwmsr::robustness::is_strongly_robust;
use mwmsr::{run, run_with_aux, FaultModel, Flavor, Graph, RelayModel, SimConfig, Strategy, TriggerParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn five_node() -> Graph {
    Graph::undirected(5, [(1, 2), (2, 3), (3, 4), (4, 1), (1, 5), (2, 5), (3, 5), (4, 5)]).unwrap()
}

fn equivocating_hub() -> FaultModel<f64> {
    let values = BTreeMap::from([(1, 0.0), (2, 1.0), (3, 9.0), (4, 10.0)]);
    FaultModel {
        flavor: Flavor::Total,
        f: 1,
        adversaries: BTreeMap::from([(5, Strategy::PerNeighbor { values, default: 5.0, tamper_relays: true })]),
    }
}

fn random_strategy(rng: &mut impl Rng, targets: &[usize]) -> Strategy<f64> {
    match rng.gen_range(0..5) {
        0 => Strategy::Constant { value: rng.gen_range(-20.0..30.0) },
        1 => Strategy::PerNeighbor {
            values: targets.iter().map(|&t| (t, rng.gen_range(-20.0..30.0))).collect(),
            default: 0.0,
            tamper_relays: rng.gen(),
        },
        2 => Strategy::Oscillate { amplitude: rng.gen_range(1.0..50.0), offset: 5.0, period: rng.gen_range(1..4) },
        3 => Strategy::RelayTamper { value: rng.gen_range(-20.0..30.0), offset: rng.gen_range(-100.0..100.0) },
        _ => Strategy::Crash {},
    }
}

#[test]
fn complete_graph_without_adversaries_reaches_consensus() {
    let g = Graph::complete(5).unwrap();
    let cfg = SimConfig::<f64> { hops: 1, f: 1, trigger: TriggerParams::always(), delay: DelayPolicy::Zero, horizon: 200, ..Default::default() };
    let x0 = [1.0, 3.0, 5.0, 7.0, 9.0];
    let m = run(&g, &FaultModel::none(1), &x0, &cfg).unwrap();
    assert!(m.final_spread < 1e-9, "{}", m.final_spread);
    let last = m.trajectory.x.last().unwrap();
    assert!(last.iter().all(|&v| (1.0..=9.0).contains(&v)));
    assert!(m.safety_held);
    assert_eq!(m.theoretical_c, 0.0);
}

#[test]
fn hop_gap_on_five_node_graph() {
    let g = five_node();
    let fm = equivocating_hub();
    let x0 = [2.0, 4.0, 6.0, 8.0];
    let base = SimConfig::<f64> { tau: 2, horizon: 300, seed: 1, ..Default::default() };
    let one = run(&g, &fm, &x0, &SimConfig { hops: 1, ..base.clone() }).unwrap();
    let two = run(&g, &fm, &x0, &SimConfig { hops: 2, relay: RelayModel::Package, ..base }).unwrap();
    assert!(one.final_spread > 0.5);
    assert!(two.final_spread <= 0.1);
    assert!(two.final_spread <= two.theoretical_c);
    assert!(one.safety_held && two.safety_held);
    assert_eq!(two.dropped, 0);
}

#[test]
fn identical_seeds_give_identical_runs() {
    let g = five_node();
    let cfg = SimConfig::<f64> {
        hops: 2,
        tau: 3,
        theta: 3,
        scheduler: Scheduler::Bernoulli { p: 0.5 },
        relay: RelayModel::IMMEDIATE,
        seed: 11,
        ..Default::default()
    };
    let a = run(&g, &equivocating_hub(), &[2.0, 4.0, 6.0, 8.0], &cfg).unwrap();
    let b = run(&g, &equivocating_hub(), &[2.0, 4.0, 6.0, 8.0], &cfg).unwrap();
    assert_eq!(a.trajectory, b.trajectory);
    assert_eq!(a.events_per_node, b.events_per_node);
    let c = run(&g, &equivocating_hub(), &[2.0, 4.0, 6.0, 8.0], &SimConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(a.trajectory, c.trajectory);
}

#[test]
fn theta_contract_holds_for_every_scheduler() {
    let g = five_node();
    for scheduler in [Scheduler::Always, Scheduler::RoundRobin, Scheduler::Bernoulli { p: 0.2 }] {
        let cfg = SimConfig::<f64> { hops: 2, theta: 3, scheduler, seed: 5, horizon: 100, ..Default::default() };
        let m = run(&g, &equivocating_hub(), &[2.0, 4.0, 6.0, 8.0], &cfg).unwrap();
        let updated = &m.trajectory.updated;
        for node in 0..4 {
            let mut idle = 0;
            for row in &updated[..100] {
                idle = if row[node] { 0 } else { idle + 1 };
                assert!(idle < 3, "{scheduler:?} left node idle for {idle} steps");
            }
        }
    }
}

#[test]
fn delays_respect_tau_under_immediate_relay() {
    let g = Graph::complete(6).unwrap();
    for delay in [DelayPolicy::Uniform, DelayPolicy::PerEdgeFixed, DelayPolicy::Zero] {
        let cfg = SimConfig::<f64> { hops: 3, f: 1, tau: 3, relay: RelayModel::IMMEDIATE, delay, seed: 3, horizon: 60, ..Default::default() };
        let m = run(&g, &FaultModel::none(1), &[0.0, 2.0, 4.0, 6.0, 8.0, 10.0], &cfg).unwrap();
        assert!(m.max_normal_path_delay <= 3, "{delay:?}: {}", m.max_normal_path_delay);
        if delay == DelayPolicy::Zero {
            assert_eq!(m.max_normal_path_delay, 0);
        }
    }
}

#[test]
fn transmissions_and_events() {
    let g = five_node();
    let x0 = [2.0, 4.0, 6.0, 8.0];
    let base = SimConfig::<f64> { hops: 2, relay: RelayModel::Package, seed: 4, ..Default::default() };
    let per_receiver = run(&g, &equivocating_hub(), &x0, &base).unwrap();
    let once = run(&g, &equivocating_hub(), &x0, &SimConfig { count_packages_once: true, ..base.clone() }).unwrap();
    for (node, ev) in &per_receiver.events_per_node {
        assert!(per_receiver.transmissions_per_node[node] >= *ev);
        assert_eq!(once.transmissions_per_node[node], *ev);
    }
    let immediate = run(&g, &equivocating_hub(), &x0, &SimConfig { relay: RelayModel::IMMEDIATE, ..base }).unwrap();
    assert!(immediate.mean_transmissions > immediate.mean_events);
}

#[test]
fn aux_state_override_widens_safety_interval() {
    let g = Graph::complete(4).unwrap();
    let cfg = SimConfig::<f64>::default();
    let m = run_with_aux(&g, &FaultModel::none(1), &[2.0, 4.0, 6.0, 8.0], Some(&[1.0, 4.0, 6.0, 9.5]), &cfg).unwrap();
    assert_eq!(m.safety_interval, (1.0, 9.5));
    assert_eq!(m.trajectory.x_hat[0], vec![1.0, 4.0, 6.0, 9.5]);
}

#[test]
fn invalid_inputs_are_rejected_before_running() {
    let g = five_node();
    let fm = equivocating_hub();
    assert!(run(&g, &fm, &[1.0, 2.0], &SimConfig::default()).is_err());
    assert!(run(&g, &fm, &[1.0, 2.0, 3.0, f64::NAN], &SimConfig::default()).is_err());
    assert!(run(&g, &fm, &[1.0; 4], &SimConfig { theta: 0, ..Default::default() }).is_err());
    assert!(run(&g, &fm, &[1.0; 4], &SimConfig { scheduler: Scheduler::Bernoulli { p: 0.0 }, ..Default::default() }).is_err());
    let mut two = fm.clone();
    two.adversaries.insert(1, Strategy::Crash {});
    assert!(run(&g, &two, &[1.0; 3], &SimConfig::default()).is_err());
}

#[test]
fn single_run_batch_matches_the_run() {
    let g = five_node();
    let base = SimConfig::<f64> { hops: 2, seed: 9, ..Default::default() };
    let variants = [Variant { name: "two-hop".into(), hops: None, relay: None }];
    let (agg, runs) = monte_carlo(&g, &equivocating_hub(), &base, &variants, 1, (0.0, 10.0)).unwrap();
    let m = &runs[0][0];
    assert_eq!(agg[0].runs, 1);
    assert_eq!(agg[0].mean_events, m.mean_events);
    assert_eq!(agg[0].mean_transmissions, m.mean_transmissions);
    assert_eq!(agg[0].mean_final_spread, m.final_spread);
    let (again, _) = monte_carlo(&g, &equivocating_hub(), &base, &variants, 1, (0.0, 10.0)).unwrap();
    assert_eq!(agg, again);
    assert!(monte_carlo(&g, &equivocating_hub(), &base, &variants, 0, (0.0, 10.0)).is_err());
}

#[test]
fn f32_runs_track_f64_runs() {
    let g = Graph::complete(5).unwrap();
    let fm32 = FaultModel { flavor: Flavor::Total, f: 1, adversaries: BTreeMap::from([(5, Strategy::Constant { value: 100.0f32 })]) };
    let fm64 = FaultModel { flavor: Flavor::Total, f: 1, adversaries: BTreeMap::from([(5, Strategy::Constant { value: 100.0f64 })]) };
    let m32 = run(&g, &fm32, &[1.0f32, 3.0, 5.0, 7.0], &SimConfig { horizon: 80, ..Default::default() }).unwrap();
    let m64 = run(&g, &fm64, &[1.0f64, 3.0, 5.0, 7.0], &SimConfig { horizon: 80, ..Default::default() }).unwrap();
    assert!(m32.safety_held);
    assert!((f64::from(m32.final_spread) - m64.final_spread).abs() < 0.05);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Certified topologies keep every normal state in the safety interval,
    /// the windowed joint envelope shrinks monotonically, and the transmitted
    /// state never lags the state by more than the trigger threshold.
    #[test]
    fn certified_runs_are_safe(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, l) = loop {
            let n = rng.gen_range(4..=7);
            let g = oracle::random_undirected(&mut rng, n, 0.75);
            let l = rng.gen_range(1..=2);
            if is_strongly_robust(&g, 2, l, 1, Flavor::Total).unwrap().holds {
                break (g, l);
            }
        };
        let adversary = rng.gen_range(1..=g.n());
        let targets = g.out_neighbors(adversary).to_vec();
        let fm = FaultModel { flavor: Flavor::Total, f: 1, adversaries: BTreeMap::from([(adversary, random_strategy(&mut rng, &targets))]) };
        let tau = rng.gen_range(0..=3);
        let theta = rng.gen_range(1..=3);
        let cfg = SimConfig::<f64> {
            hops: l,
            f: 1,
            tau,
            theta,
            relay: RelayModel::IMMEDIATE,
            scheduler: Scheduler::Bernoulli { p: 0.6 },
            horizon: 150,
            seed: rng.gen(),
            ..Default::default()
        };
        let x0: Vec<f64> = (0..g.n() - 1).map(|_| rng.gen_range(0.0..10.0)).collect();
        let m = run(&g, &fm, &x0, &cfg).unwrap();
        prop_assert!(m.safety_held);
        let env = joint_envelope(&m.trajectory, tau);
        for w in env.windows(2) {
            prop_assert!(w[1].1 <= w[0].1 + 1e-12 && w[1].0 >= w[0].0 - 1e-12, "{:?}", w);
        }
        prop_assert!(m.final_spread <= m.theoretical_c);
        for k in 1..m.trajectory.len() {
            for idx in 0..x0.len() {
                let lag = (m.trajectory.x_hat[k][idx] - m.trajectory.x[k][idx]).abs();
                prop_assert!(lag <= cfg.trigger.threshold(k as i64 - 1) + 1e-12);
            }
        }
    }

    /// The transmitted state only ever takes values the state held.
    #[test]
    fn transmitted_states_are_past_states(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = oracle::random_digraph(&mut rng, 5, 0.6);
        let cfg = SimConfig::<f64> {
            hops: rng.gen_range(1..=2),
            tau: rng.gen_range(0..=2),
            relay: if rng.gen() { RelayModel::Package } else { RelayModel::Periodic { period: 2 } },
            trigger: TriggerParams { c0: 0.05, c1: C1Schedule::Table { values: vec![0.5, 0.4, 0.3, 0.2, 0.1] } },
            horizon: 60,
            seed: rng.gen(),
            ..Default::default()
        };
        let x0: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..10.0)).collect();
        let m = run(&g, &FaultModel::none(1), &x0, &cfg).unwrap();
        let t = &m.trajectory;
        for idx in 0..5 {
            for k in 0..t.len() {
                let xh = t.x_hat[k][idx];
                prop_assert!((0..=k).any(|s| t.x[s][idx] == xh));
                if k > 0 && !t.fired[k - 1][idx] {
                    prop_assert_eq!(xh, t.x_hat[k - 1][idx]);
                }
            }
        }
    }
}
