mod common;

use std::time::Duration;

use proptest::prelude::*;
use rtls_core::energy::{lux_to_power, BatteryModel, BatteryState, Energy, HarvestProfile, LuxPowerModel};
use rtls_core::protocol::{
    anchor_event_cost, anchor_reply_delay, message_count, tag_event_cost, EnergyCostModel, ProtocolParams, TagRole,
};
use rtls_core::scheduler::Variant;
use rtls_core::sim::{Simulation, MINUTES_PER_DAY};

#[derive(Debug, Clone)]
enum Op {
    Deposit(u64),
    Withdraw(u64),
    Drain(u64),
    Leak(u64),
}

fn op() -> impl Strategy<Value = Op> {
    let amount = prop_oneof![0u64..10, 0u64..5_000_000_000, 0u64..600_000_000_000_000];
    prop_oneof![
        amount.clone().prop_map(Op::Deposit),
        amount.clone().prop_map(Op::Withdraw),
        amount.clone().prop_map(Op::Drain),
        amount.prop_map(Op::Leak),
    ]
}

proptest! {
    #[test]
    fn battery_stays_in_bounds_and_ledger_balances(
        soc in 0.0f64..=1.0,
        ops in prop::collection::vec(op(), 0..200),
    ) {
        let capacity = BatteryModel::default().capacity();
        let mut b = BatteryState::with_soc(capacity, soc);
        for op in ops {
            let before = b.stored();
            match op {
                Op::Deposit(pj) => {
                    let discarded = b.deposit(Energy::from_picojoules(pj));
                    prop_assert_eq!(b.stored() - before + discarded, Energy::from_picojoules(pj));
                }
                Op::Withdraw(pj) => {
                    let ok = b.withdraw(Energy::from_picojoules(pj));
                    prop_assert_eq!(ok, pj < before.picojoules());
                    prop_assert!(ok || b.stored().is_zero());
                }
                Op::Drain(pj) => b.drain(Energy::from_picojoules(pj)),
                Op::Leak(pj) => b.leak(Energy::from_picojoules(pj)),
            }
            prop_assert!(b.stored() <= capacity);
            prop_assert!((0.0..=1.0).contains(&b.soc()));
            prop_assert_eq!(b.ledger().expected_stored(), b.stored());
        }
    }

    #[test]
    fn leakage_follows_the_linear_model(soc in 0.0f64..=1.0) {
        let expected_ua = if soc <= 0.3 { 1.0 } else { 1.0 + 3.0 * (soc - 0.3) / 0.7 };
        let got = BatteryModel::default().self_discharge_current(soc);
        prop_assert!((got / (expected_ua * 1e-6) - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn battery_examples() {
    let cap = BatteryModel::default().capacity();
    let j = |x: f64| Energy::from_joules(x);
    let mut b = BatteryState::new(cap, Energy::ZERO);
    b.deposit(j(1.0));
    assert_eq!(b.stored(), j(1.0));

    let mut b = BatteryState::new(cap, j(466.0));
    let discarded = b.deposit(j(1.0));
    assert_eq!(b.stored(), cap);
    assert_eq!(discarded, j(0.8));

    let uj = Energy::from_microjoules_exact;
    let anchor = EnergyCostModel::default().anchor_base_energy;
    let mut b = BatteryState::new(cap, uj(1000));
    assert!(b.withdraw(anchor));
    let mut b = BatteryState::new(cap, uj(300));
    assert!(!b.withdraw(anchor));
    assert!(b.stored().is_zero());
    let mut b = BatteryState::new(cap, anchor);
    assert!(!b.withdraw(anchor));
    assert!(b.stored().is_zero());
}

#[test]
fn anchor_costs_for_slots_1_to_25() {
    let model = EnergyCostModel::default();
    let params = ProtocolParams::default();
    for i in 1u32..=25 {
        let slot = u64::from((i - 1) % 10);
        let (e, d) = anchor_event_cost(i, &model, &params);
        // 338.30 uJ + 15.28 uJ per slot, 30.55 ms + 290 us per slot.
        assert_eq!(e.picojoules(), 338_300_000 + 15_280_000 * slot, "slot {i}");
        assert_eq!(d, Duration::from_micros(30_550 + 290 * slot), "slot {i}");
    }
    let (e, d) = anchor_event_cost(5, &model, &params);
    assert_eq!((e.picojoules(), d), (399_420_000, Duration::from_micros(31_710)));
}

#[test]
fn tag_costs_and_rate_limit() {
    let model = EnergyCostModel::default();
    let (e, d) = tag_event_cost(TagRole::Active, &model);
    assert_eq!((e.picojoules(), d), (3_220_000_000, Duration::from_micros(84_520)));
    let (e, d) = tag_event_cost(TagRole::Passive, &model);
    assert_eq!((e.picojoules(), d), (951_160_000, Duration::from_micros(34_180)));
    let hz = 1.0 / tag_event_cost(TagRole::Active, &model).1.as_secs_f64();
    assert!((hz - 11.8).abs() < 0.05, "{hz}");
}

#[test]
fn reply_slots_are_collision_free_and_periodic() {
    let p = ProtocolParams {
        delta_t_fix: Duration::from_millis(2),
        delta_t: Duration::from_millis(1),
        n_hat_a: 10,
    };
    assert_eq!(anchor_reply_delay(3, &p), Duration::from_millis(4));
    assert_eq!(anchor_reply_delay(11, &p), p.delta_t_fix);
    for i in 1..=40u32 {
        assert_eq!(anchor_reply_delay(i, &p), anchor_reply_delay(i + p.n_hat_a, &p));
        for j in 1..=40u32 {
            if (i - 1) % 10 != (j - 1) % 10 {
                let (a, b) = (anchor_reply_delay(i, &p), anchor_reply_delay(j, &p));
                assert!(a.abs_diff(b) >= p.delta_t);
            }
        }
    }
    assert_eq!(message_count(5), 6);
    assert_eq!(message_count(89), 90);
}

#[test]
fn typical_profile_lands_in_its_band() {
    let model = LuxPowerModel::default();
    assert_eq!(lux_to_power(0.0, &model), 0.0);
    let e = HarvestProfile::bundled("typical", &model).unwrap().daily_energy();
    assert!((e - 1.81).abs() <= 1.21, "{e}");
}

/// Closed-form lifetime of a full battery under sleep power plus the
/// piecewise-linear leakage, with no harvest. Above the knee
/// `dE/dt = -(a + b (soc - knee))` with `a = P_sleep + V I_knee`,
/// `b = V (I_full - I_knee) / (1 - knee)`, below it `dE/dt = -a`.
fn closed_form_soc(t: f64) -> f64 {
    let m = BatteryModel::default();
    let c = m.capacity().joules();
    let a = 7.84e-6 + m.voltage * m.leak_knee_ua * 1e-6;
    let b = m.voltage * (m.leak_full_ua - m.leak_knee_ua) * 1e-6 / (1.0 - m.leak_knee_soc);
    let k = m.leak_knee_soc;
    let x0 = 1.0 - k;
    let t_knee = c / b * ((a + b * x0) / a).ln();
    if t <= t_knee {
        ((a + b * x0) * (-b * t / c).exp() - a) / b + k
    } else {
        (k - a * (t - t_knee) / c).max(0.0)
    }
}

#[test]
fn zero_harvest_drain_matches_closed_form() {
    let mut config = common::small_world(&common::ring(4), &[[0.0, 0.0, 1.0]], "const:0");
    config.initial_soc = 1.0;
    config.scheduler.variant = Variant::ConstantRate;
    config.scheduler.constant_rate_k = 0;
    config.days = 400;
    config.validate().unwrap();
    let mut sim = Simulation::new(&config).unwrap();
    let tag = sim.tag_node(0);
    let mut empty_at = None;
    for day in 1..=400u64 {
        for _ in 0..MINUTES_PER_DAY {
            sim.step_minute();
        }
        let soc = sim.battery(tag).soc();
        let expected = closed_form_soc(day as f64 * 86_400.0);
        if expected > 0.01 {
            assert!((soc / expected - 1.0).abs() < 1e-3, "day {day}: {soc} vs {expected}");
        }
        if soc == 0.0 && empty_at.is_none() {
            empty_at = Some(day);
        }
    }
    // Depletion time, from the closed form, in days.
    let m = BatteryModel::default();
    let c = m.capacity().joules();
    let a = 7.84e-6 + 3.7e-6;
    let b = 3.7 * 3e-6 / 0.7;
    let lifetime = (c / b * ((a + 0.7 * b) / a).ln() + 0.3 * c / a) / 86_400.0;
    let empty_at = empty_at.expect("battery empties") as f64;
    assert!(empty_at >= lifetime && empty_at - lifetime < 1.0, "{empty_at} vs {lifetime}");
}
