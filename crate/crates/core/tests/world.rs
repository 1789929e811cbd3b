//! End-to-end runs of the bundled scenarios through the discrete-event world.

use std::path::Path;

use rescuemesh_core::log::{to_jsonl, tx_counts, Channel, LogEvent};
use rescuemesh_core::report::MessageOutcome;
use rescuemesh_core::routing::RouteKind;
use rescuemesh_core::scenario::{RoutingPolicy, SchedulePolicy};
use rescuemesh_core::sim::{run_scenario, RunOutput, RunOverrides, SimError};
use rescuemesh_core::units::Micros;
use rescuemesh_core::{load_scenario, NodeId, Scenario};

fn scenario(name: &str) -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name);
    load_scenario(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn run(sc: &Scenario) -> RunOutput {
    run_scenario(sc, &RunOverrides::default()).unwrap()
}

fn run_with_policy(sc: &Scenario, policy: RoutingPolicy) -> RunOutput {
    let overrides = RunOverrides {
        routing_policy: Some(policy),
        ..RunOverrides::default()
    };
    run_scenario(sc, &overrides).unwrap()
}

fn only_message(out: &RunOutput) -> &MessageOutcome {
    assert_eq!(out.metrics.messages.len(), 1);
    &out.metrics.messages[0]
}

fn secs(s: f64) -> u64 {
    (s * 1e6) as u64
}

const SLOT_AWAKE_MJ: f64 = 1011.5;
const SLOT_SLEEP_MJ: f64 = 64.9;

#[test]
fn six_node_rescue_end_to_end() {
    let sc = scenario("six-node-group.toml");
    let out = run(&sc);
    let m = &out.metrics;

    // Protocol overhead: 3n + n² + n_f·n with n = 6, n_f = 3.
    let rescue_tx = &m.overhead.rescue_tx;
    assert_eq!(rescue_tx["rescue-hello"], 6);
    assert_eq!(rescue_tx["rescue-neighbor-set"], 6);
    assert_eq!(rescue_tx["rescue-priority"], 36);
    assert_eq!(rescue_tx["rescue-claim"], 6);
    assert_eq!(rescue_tx["rescue-completion"], 18);
    assert_eq!(rescue_tx.values().sum::<u64>(), 72);
    assert!(m.overhead.radio_tx.is_empty());
    assert!(m.overhead.cell_tx.is_empty());

    let rescue = m.rescue.as_ref().unwrap();
    assert_eq!(rescue.setup_slots, 1);
    assert_eq!(rescue.total_slots, 13);
    assert!((rescue.slot_awake_mj - SLOT_AWAKE_MJ).abs() < 1e-9);
    assert!((rescue.slot_sleep_mj - SLOT_SLEEP_MJ).abs() < 1e-9);

    assert_eq!(rescue.groups.len(), 1);
    let g = &rescue.groups[0];
    assert_eq!(g.members, (0..6).map(NodeId).collect::<Vec<_>>());
    assert_eq!(g.hyperperiod, Some(12));
    assert_eq!(g.overhead_expected, 72);
    assert!(g.faults.is_empty());

    let slots: Vec<(u32, Vec<u64>)> = g
        .schedules
        .iter()
        .map(|s| (s.node.0, s.slots.clone()))
        .collect();
    assert_eq!(
        slots,
        vec![
            (0, vec![0, 4, 8]),
            (1, vec![1, 5, 9]),
            (2, vec![2, 3, 6, 7]),
            (3, vec![2, 6, 10]),
            (4, vec![1, 3, 5, 7, 9, 11]),
            (5, vec![3, 7, 11]),
        ]
    );
    assert_eq!(g.schedules[0].gamma, "1/4");
    assert_eq!(g.schedules[0].theta, "13/12");
    assert_eq!(g.schedules[1].theta, "7/12");
    assert_eq!(g.schedules[4].gamma, "1/2");

    let w = g.wakeups_per_hyperperiod.as_ref().unwrap();
    assert_eq!(w.clique, 22);
    assert_eq!(w.mis_rotation, "27");
    assert_eq!(w.always_awake, 72);
    assert!((w.savings_vs_always - (1.0 - 22.0 / 72.0)).abs() < 1e-12);

    let vac: Vec<(Vec<u32>, &str)> = g
        .vacancies
        .iter()
        .map(|v| (v.clique.iter().map(|n| n.0).collect(), v.vacancy.as_str()))
        .collect();
    assert_eq!(
        vac,
        vec![
            (vec![0, 1, 2], "1/6"),
            (vec![0, 1, 3, 5], "0"),
            (vec![0, 4], "1/4"),
        ]
    );

    // Relative positioning: everyone but the outlier 4, all nodes agreeing.
    let p = &g.positioning;
    assert!(p.agreed);
    assert_eq!(p.frame, Some(NodeId(0)));
    let placed: Vec<u32> = p.positions.iter().map(|q| q.node.0).collect();
    assert_eq!(placed, vec![0, 1, 2, 3, 5]);
    assert_eq!(p.unpositioned, vec![NodeId(4)]);
    assert_eq!(p.pending_edges, vec![(NodeId(0), NodeId(4))]);

    // Energy on the nominal slot grid: one all-awake setup slot, then the
    // claimed schedule for the remaining 12 (one full hyperperiod).
    let total: f64 = m.energy.iter().map(|e| e.energy_mj).sum();
    let expected = 28.0 * SLOT_AWAKE_MJ + 50.0 * SLOT_SLEEP_MJ;
    assert!((total - expected).abs() < 1e-6, "{total} vs {expected}");
    let ratio = m.energy_vs_always_ratio.unwrap();
    let expected_ratio = expected / (78.0 * SLOT_AWAKE_MJ);
    assert!((ratio - expected_ratio).abs() < 1e-12);
    let e0 = &m.energy[0];
    assert_eq!(e0.node, NodeId(0));
    assert_eq!(e0.scheduled_wakeups, Some(3));
    assert!((e0.energy_mj - (4.0 * SLOT_AWAKE_MJ + 9.0 * SLOT_SLEEP_MJ)).abs() < 1e-9);

    // Slot attributions in the log agree with the energy accounting.
    let mut awake_slots = 0;
    let mut slot_records = 0;
    for r in &out.log {
        if let LogEvent::Slot { awake, .. } = r.event {
            slot_records += 1;
            if awake {
                awake_slots += 1;
            }
        }
    }
    assert_eq!(slot_records, 13 * 6);
    assert_eq!(awake_slots, 28);

    // No messaging in this scenario.
    assert!(m.messages.is_empty());
    assert_eq!(m.delivery_ratio, None);

    // The event log reconciles with the overhead counters.
    assert_eq!(tx_counts(&out.log, Channel::Radio), m.overhead.rescue_tx);
    assert!(tx_counts(&out.log, Channel::Cell).is_empty());
}

#[test]
fn six_node_is_deterministic_and_seed_stable() {
    let sc = scenario("six-node-group.toml");
    let a = run(&sc);
    let b = run(&sc);
    assert_eq!(to_jsonl(&a.log), to_jsonl(&b.log));

    // A different seed redraws clock skews, which moves hello timestamps but
    // cannot change schedules, counts or nominal-grid energy.
    let other = run_scenario(
        &sc,
        &RunOverrides {
            seed: Some(8),
            ..RunOverrides::default()
        },
    )
    .unwrap();
    assert_ne!(to_jsonl(&a.log), to_jsonl(&other.log));
    assert_eq!(other.metrics.overhead.rescue_tx, a.metrics.overhead.rescue_tx);
    assert_eq!(
        serde_json::to_value(&other.metrics.rescue).unwrap(),
        serde_json::to_value(&a.metrics.rescue).unwrap()
    );
    assert_eq!(
        serde_json::to_value(&other.metrics.energy).unwrap(),
        serde_json::to_value(&a.metrics.energy).unwrap()
    );
}

#[test]
fn six_node_schedule_policy_baselines() {
    let mut sc = scenario("six-node-group.toml");
    let clique = run(&sc).metrics.energy_vs_always_ratio.unwrap();

    sc.experiment.schedule_policy = SchedulePolicy::MisRotation;
    let mis = run(&sc).metrics.energy_vs_always_ratio.unwrap();

    sc.experiment.schedule_policy = SchedulePolicy::AlwaysAwake;
    let always = run(&sc).metrics.energy_vs_always_ratio.unwrap();

    // 22, 27 and 72 wake-ups per hyperperiod plus one setup slot each.
    let expect = |awake: f64| {
        (awake * SLOT_AWAKE_MJ + (78.0 - awake) * SLOT_SLEEP_MJ) / (78.0 * SLOT_AWAKE_MJ)
    };
    assert!((clique - expect(28.0)).abs() < 1e-12);
    assert!((mis - expect(33.0)).abs() < 1e-12);
    assert!((always - 1.0).abs() < 1e-12);
    assert!(clique < mis && mis < always);
}

#[test]
fn eight_node_cascade_counts_and_consensus() {
    let sc = scenario("eight-node-cascade.toml");
    let out = run(&sc);
    let m = &out.metrics;

    let rescue_tx = &m.overhead.rescue_tx;
    assert_eq!(rescue_tx["rescue-hello"], 8);
    assert_eq!(rescue_tx["rescue-neighbor-set"], 8);
    assert_eq!(rescue_tx["rescue-priority"], 64);
    assert_eq!(rescue_tx["rescue-claim"], 8);
    assert_eq!(rescue_tx["rescue-completion"], 32);
    assert_eq!(rescue_tx.values().sum::<u64>(), 120);

    let g = &m.rescue.as_ref().unwrap().groups[0];
    assert_eq!(g.members.len(), 8);
    assert_eq!(g.hyperperiod, Some(12));
    assert_eq!(g.overhead_expected, 120);
    assert!(g.positioning.agreed);
    let placed: Vec<u32> = g.positioning.positions.iter().map(|q| q.node.0).collect();
    assert_eq!(placed, vec![0, 1, 2, 3, 5, 6, 7]);
    assert_eq!(g.positioning.unpositioned, vec![NodeId(4)]);
}

#[test]
fn positioning_square_matches_survey_oracle() {
    let sc = scenario("positioning-square.toml");
    let out = run(&sc);
    let g = &out.metrics.rescue.as_ref().unwrap().groups[0];
    let p = &g.positioning;
    assert!(p.agreed);
    assert_eq!(p.frame, Some(NodeId(0)));
    assert!(p.unpositioned.is_empty());
    assert!(p.pending_edges.is_empty());

    let pos = |i: u32| {
        p.positions
            .iter()
            .find(|q| q.node == NodeId(i))
            .unwrap_or_else(|| panic!("node {i} unplaced"))
    };
    let close = |v: f64, want: f64| (v - want).abs() < 1e-6;
    assert!(close(pos(0).x, 0.0) && close(pos(0).y, 0.0));
    assert!(close(pos(1).x, 12.0) && close(pos(1).y, 0.0));
    assert!(close(pos(2).x, 12.997200000000) && close(pos(2).y, 8.753381755642));
    assert!(close(pos(3).x, 2.872091122642) && close(pos(3).y, 9.463783206691));
}

#[test]
fn passerby_carries_emergency_report_into_coverage() {
    let sc = scenario("passerby-pickup.toml");
    let out = run(&sc);
    let msg = only_message(&out);
    assert!(msg.delivered, "{msg:?}");
    assert_eq!(msg.id, "0#1");
    assert_eq!(msg.dst, NodeId(100));
    assert_eq!(msg.route, Some(RouteKind::Flood));
    assert_eq!(msg.hops, Some(2));
    let at = msg.delivered_at_us.unwrap();
    assert!(
        (secs(337.0)..secs(340.0)).contains(&at),
        "delivered at {at}"
    );

    // Exactly one handoff: the first outside hello heard during an awake
    // slot; repeats to the same carrier are suppressed.
    let handoffs: Vec<_> = out
        .log
        .iter()
        .filter(|r| matches!(r.event, LogEvent::EmergencyHandoff { .. }))
        .collect();
    assert_eq!(handoffs.len(), 1);
    let h = handoffs[0];
    assert_eq!(h.node, NodeId(0));
    assert!((secs(25.0)..secs(26.5)).contains(&h.t_us), "handoff at {}", h.t_us);
    match h.event {
        LogEvent::EmergencyHandoff { to, members } => {
            assert_eq!(to, NodeId(10));
            assert_eq!(members, 6);
        }
        _ => unreachable!(),
    }

    // The rescue group still schedules normally underneath the messaging.
    let g = &out.metrics.rescue.as_ref().unwrap().groups[0];
    assert_eq!(g.hyperperiod, Some(12));
    assert_eq!(out.metrics.overhead.rescue_tx.values().sum::<u64>(), 72);

    // Log/metrics reconciliation with both channels and both subsystems.
    let mut radio = out.metrics.overhead.rescue_tx.clone();
    radio.extend(
        out.metrics
            .overhead
            .radio_tx
            .iter()
            .map(|(k, v)| (k.clone(), *v)),
    );
    assert_eq!(tx_counts(&out.log, Channel::Radio), radio);
    assert_eq!(tx_counts(&out.log, Channel::Cell), out.metrics.overhead.cell_tx);
}

#[test]
fn data_mule_floods_across_the_gap_but_static_cannot() {
    let sc = scenario("data-mule.toml");

    let flood = run(&sc);
    let msg = only_message(&flood);
    assert!(msg.delivered);
    assert_eq!(msg.route, Some(RouteKind::Flood));
    let at = msg.delivered_at_us.unwrap();
    assert!(
        (secs(234.0)..secs(239.0)).contains(&at),
        "delivered at {at}"
    );

    // The walker comes within radio range of the receiver at 400 m along the
    // path, i.e. t = 233.3 s; the first hello lands within the next second.
    let first_contact = flood
        .log
        .iter()
        .find(|r| {
            r.node == NodeId(2)
                && matches!(
                    &r.event,
                    LogEvent::Rx { channel: Channel::Radio, from: NodeId(3), .. }
                )
        })
        .expect("receiver hears the walker")
        .t_us;
    assert!(
        (secs(233.3)..secs(235.4)).contains(&first_contact),
        "first contact at {first_contact}"
    );

    let stranded = run_with_policy(&sc, RoutingPolicy::Static);
    let msg = only_message(&stranded);
    assert!(!msg.delivered, "static custody must not use a moving carrier");
    assert_eq!(stranded.metrics.delivery_ratio, Some(0.0));
}

#[test]
fn link_break_replication_beats_rerouting() {
    let sc = scenario("link-break.toml");

    let adhoc = run(&sc);
    let msg = only_message(&adhoc);
    assert!(msg.delivered, "{msg:?}");
    assert_eq!(msg.route, Some(RouteKind::Adhoc));
    assert_eq!(msg.hops, Some(3));
    let rerouted = msg.delivered_at_us.unwrap();
    assert!(
        (secs(32.0)..secs(33.2)).contains(&rerouted),
        "reroute delivered at {rerouted}"
    );

    let flood = run_with_policy(&sc, RoutingPolicy::Flood);
    let msg = only_message(&flood);
    assert!(msg.delivered);
    assert_eq!(msg.route, Some(RouteKind::Flood));
    let replicated = msg.delivered_at_us.unwrap();
    assert!(
        (secs(29.4)..secs(31.2)).contains(&replicated),
        "flood delivered at {replicated}"
    );
    assert!(replicated < rerouted);
}

#[test]
fn gateway_is_ignored_when_a_direct_route_exists() {
    let sc = scenario("gateway-direct.toml");
    let out = run(&sc);
    let msg = only_message(&out);
    assert!(msg.delivered);
    assert_eq!(msg.route, Some(RouteKind::Adhoc));
    assert_eq!(msg.hops, Some(3));
    let at = msg.delivered_at_us.unwrap();
    assert!((secs(9.0)..secs(10.2)).contains(&at), "delivered at {at}");
    // Nothing crossed the infrastructure on the message's behalf.
    assert!(!out.metrics.overhead.cell_tx.contains_key("cell-data"));
}

#[test]
fn nearest_gateway_bridges_to_covered_destination() {
    let sc = scenario("gateway-nearest.toml");
    let out = run(&sc);
    let msg = only_message(&out);
    assert!(msg.delivered, "{msg:?}");
    assert_eq!(msg.route, Some(RouteKind::Gateway));
    // 1→2 over radio, 2→center and center→5 over cellular.
    assert_eq!(msg.hops, Some(3));
    let at = msg.delivered_at_us.unwrap();
    assert!((secs(9.0)..secs(10.2)).contains(&at), "delivered at {at}");
    assert_eq!(out.metrics.overhead.cell_tx["cell-data"], 2);
}

#[test]
fn mailbox_holds_until_receiver_attaches() {
    let sc = scenario("mailbox.toml");
    let out = run(&sc);
    let msg = only_message(&out);
    assert!(msg.delivered, "{msg:?}");
    assert_eq!(msg.route, Some(RouteKind::Cellular));
    assert_eq!(msg.hops, Some(2));
    let at = msg.delivered_at_us.unwrap();
    // The receiver crosses into its disc at t = 250 m / 1.5 m/s ≈ 166.7 s.
    assert!((secs(166.6)..secs(167.5)).contains(&at), "delivered at {at}");
    assert_eq!(tx_counts(&out.log, Channel::Cell), out.metrics.overhead.cell_tx);
}

#[test]
fn coverage_samples_are_emitted_on_request() {
    let sc = scenario("mailbox.toml");
    let out = run_scenario(
        &sc,
        &RunOverrides {
            coverage_samples: Some(1),
            ..RunOverrides::default()
        },
    )
    .unwrap();
    let samples = out
        .log
        .iter()
        .filter(|r| matches!(r.event, LogEvent::CoverageSample { .. }))
        .count();
    // One per second per phone (two phones, 200 s inclusive).
    assert_eq!(samples, 201 * 2);
    // A coarser period thins the samples proportionally.
    let coarse = run_scenario(
        &sc,
        &RunOverrides {
            coverage_samples: Some(10),
            ..RunOverrides::default()
        },
    )
    .unwrap();
    let coarse_samples = coarse
        .log
        .iter()
        .filter(|r| matches!(r.event, LogEvent::CoverageSample { .. }))
        .count();
    assert_eq!(coarse_samples, 21 * 2);
}

#[test]
fn horizon_override_must_stay_slot_aligned() {
    let sc = scenario("six-node-group.toml");
    let err = run_scenario(
        &sc,
        &RunOverrides {
            horizon: Some(Micros::from_secs(63)),
            ..RunOverrides::default()
        },
    )
    .unwrap_err();
    assert!(matches!(err, SimError::MisalignedHorizon { .. }));
}

#[test]
fn energy_ladder_across_topologies() {
    // Wake fractions ½, ½, ⅜ mean, ⅓, ¼ over one hyperperiod, with one
    // all-awake setup slot and twelve scheduled slots per node.
    let expect = |fractions: &[f64]| {
        let n = fractions.len() as f64;
        let awake: f64 = fractions.iter().map(|f| 1.0 + 12.0 * f).sum();
        let sleep = 13.0 * n - awake;
        (awake * SLOT_AWAKE_MJ + sleep * SLOT_SLEEP_MJ) / (13.0 * n * SLOT_AWAKE_MJ)
    };
    let ratio = |name: &str| {
        run(&scenario(name))
            .metrics
            .energy_vs_always_ratio
            .unwrap()
    };

    let path = ratio("energy-path.toml");
    let star = ratio("energy-star.toml");
    let triangle = ratio("energy-triangle.toml");
    let near_clique = ratio("energy-near-clique.toml");
    let clique = ratio("energy-clique.toml");

    assert!((path - expect(&[0.5, 0.5, 0.5])).abs() < 1e-12);
    assert!((star - expect(&[0.5, 0.5, 0.5, 0.5])).abs() < 1e-12);
    assert!((triangle - expect(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.5])).abs() < 1e-12);
    assert!((near_clique - expect(&[0.25; 4].map(|_| 1.0 / 3.0))).abs() < 1e-12);
    assert!((clique - expect(&[0.25; 4])).abs() < 1e-12);

    // Denser groups sleep more.
    assert!((path - star).abs() < 1e-12);
    assert!(triangle < path);
    assert!(near_clique < triangle);
    assert!(clique < near_clique);
    // A clique's duty cycle approaches 1/n of always-awake as sleep power
    // vanishes; with real sleep power it stays within a few points of ⅓.
    assert!(triangle < 0.5 && near_clique < 0.5 && clique < 0.5);
    assert!((clique - 1.0 / 3.0).abs() < 0.03);
}
