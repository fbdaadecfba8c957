//! The per-minute event loop.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{layout_anchor_id, parse_constant_profile, Layout, SimConfig};
use super::measurements::{synthesize_measurements, Exchange};
use super::stats::{
    DailyRecord, HourlyRecord, LoadBreakdown, NodeInfo, Role, RunTotals, SimStats, SolverKind,
    SolverRecord,
};
use super::world::{reachable_anchors, sample_floor, two_rooms, Mobility, RadioRange, Wall};
use crate::energy::{ingest_trace, BatteryState, Energy, HarvestProfile};
use crate::protocol::{anchor_event_cost, tag_event_cost, TagRole};
use crate::scheduler::{schedule_hour_with, AimdController, MINUTES_PER_HOUR};
use crate::solvers::{larsson_multilaterate, lm_multilaterate, lm_tdoa};
use crate::Position;

pub const MINUTES_PER_DAY: u64 = 1440;

// Independent random streams, so enabling one feature never perturbs another.
const STREAM_PLACEMENT: u64 = 1;
const STREAM_ORDER: u64 = 2;
const STREAM_SCHEDULE: u64 = 3;
const STREAM_NOISE: u64 = 4;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone)]
pub struct AnchorSite {
    pub id: String,
    pub position: Position,
    pub slot_index: u32,
    pub profile: String,
}

#[derive(Debug, Clone)]
pub struct TagSite {
    pub id: String,
    pub mobility: Mobility,
    pub profile: String,
}

/// Resolved geometry of a scenario.
#[derive(Debug, Clone)]
pub struct World {
    pub anchors: Vec<AnchorSite>,
    pub tags: Vec<TagSite>,
    pub walls: Vec<Wall>,
    pub range: RadioRange,
    pub min_responses: usize,
}

impl World {
    /// Builds the layout, listed nodes and randomly placed tags. Placement
    /// uses its own stream of `config.seed`.
    pub fn from_config(config: &SimConfig) -> Self {
        let w = &config.world;
        let mut anchors = Vec::new();
        let mut walls = Vec::new();
        if w.layout == Layout::TwoRooms {
            for (i, p) in two_rooms::anchors().into_iter().enumerate() {
                anchors.push(AnchorSite {
                    id: layout_anchor_id(i),
                    position: p,
                    slot_index: i as u32 + 1,
                    profile: w.anchor_profile.clone(),
                });
            }
            walls.extend(two_rooms::walls());
        }
        anchors.extend(w.anchors.iter().map(|a| AnchorSite {
            id: a.id.clone(),
            position: a.position.into(),
            slot_index: a.slot_index,
            profile: a.profile.clone(),
        }));
        walls.extend(w.walls.iter().copied());

        let mut tags: Vec<TagSite> = w
            .tags
            .iter()
            .map(|t| TagSite {
                id: t.id.clone(),
                mobility: match t.position {
                    Some(p) => Mobility::Static(p.into()),
                    None => Mobility::Path(t.waypoints.clone()),
                },
                profile: t.profile.clone(),
            })
            .collect();
        let regions = config.tag_regions();
        let mut rng = stream(config.seed, STREAM_PLACEMENT);
        let taken: std::collections::BTreeSet<String> = tags.iter().map(|t| t.id.clone()).collect();
        let mut n = 0;
        while tags.len() < w.tags.len() + w.random_tags.count {
            n += 1;
            let id = format!("T{n:03}");
            if taken.contains(&id) {
                continue;
            }
            tags.push(TagSite {
                id,
                mobility: Mobility::Static(sample_floor(&regions, w.random_tags.height_m, &mut rng)),
                profile: w.random_tags.profile.clone(),
            });
        }
        Self {
            anchors,
            tags,
            walls,
            range: config.radio_range(),
            min_responses: w.min_anchor_responses,
        }
    }

    pub fn anchor_positions(&self) -> Vec<Position> {
        self.anchors.iter().map(|a| a.position).collect()
    }
}

/// Outcome of one active attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActiveOutcome {
    Success(usize),
    Failure(usize),
}

impl ActiveOutcome {
    pub fn responses(self) -> usize {
        match self {
            ActiveOutcome::Success(n) | ActiveOutcome::Failure(n) => n,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    attempts: u32,
    active: u32,
    passive: u32,
    responses: u32,
}

#[derive(Debug, Clone)]
struct NodeState {
    battery: BatteryState,
    harvest: Arc<[Energy]>,
    loads: LoadBreakdown,
    day: Tally,
    hour: Tally,
}

#[derive(Debug, Clone)]
struct TagState {
    node: usize,
    controller: AimdController,
    schedule: [bool; MINUTES_PER_HOUR as usize],
    position: Position,
    /// Reachable anchors, as indices and as a membership mask.
    reach: Vec<usize>,
    reach_mask: Vec<bool>,
    estimate: Option<Position>,
}

/// A running simulation. Anchors occupy node indices `0..anchors`, tags
/// follow.
pub struct Simulation {
    config: SimConfig,
    world: World,
    nodes: Vec<NodeState>,
    tags: Vec<TagState>,
    anchor_positions: Vec<Position>,
    anchor_costs: Vec<Energy>,
    active_cost: Energy,
    passive_cost: Energy,
    sleep_per_minute: Energy,
    capacity_j: f64,
    minute: u64,
    order_rng: ChaCha8Rng,
    schedule_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    order: Vec<usize>,
    stats: SimStats,
}

impl Simulation {
    /// Prepares a run. The config is assumed valid; trace files are read
    /// here.
    pub fn new(config: &SimConfig) -> Result<Self, String> {
        let world = World::from_config(config);
        let capacity = config.battery.capacity();
        let mut profiles: BTreeMap<String, Arc<[Energy]>> = BTreeMap::new();
        let mut per_minute = |label: &str| -> Result<Arc<[Energy]>, String> {
            if let Some(p) = profiles.get(label) {
                return Ok(p.clone());
            }
            let profile = resolve_profile(label, config)?;
            let energies: Arc<[Energy]> = profile
                .samples
                .iter()
                .map(|w| Energy::from_joules(w * 60.0))
                .collect();
            profiles.insert(label.to_string(), energies.clone());
            Ok(energies)
        };

        let mut nodes = Vec::new();
        let mut infos = Vec::new();
        for a in &world.anchors {
            nodes.push(NodeState {
                battery: BatteryState::with_soc(capacity, config.initial_soc),
                harvest: per_minute(&a.profile)?,
                loads: LoadBreakdown::default(),
                day: Tally::default(),
                hour: Tally::default(),
            });
            infos.push(NodeInfo {
                id: a.id.clone(),
                role: Role::Anchor,
            });
        }
        let anchor_positions = world.anchor_positions();
        let mut tags = Vec::new();
        for t in &world.tags {
            let node = nodes.len();
            nodes.push(NodeState {
                battery: BatteryState::with_soc(capacity, config.initial_soc),
                harvest: per_minute(&t.profile)?,
                loads: LoadBreakdown::default(),
                day: Tally::default(),
                hour: Tally::default(),
            });
            infos.push(NodeInfo {
                id: t.id.clone(),
                role: Role::Tag,
            });
            let mut tag = TagState {
                node,
                controller: AimdController::new(config.scheduler, config.initial_soc),
                schedule: [false; MINUTES_PER_HOUR as usize],
                position: t.mobility.position_at(0),
                reach: Vec::new(),
                reach_mask: Vec::new(),
                estimate: None,
            };
            refresh_reach(&mut tag, &anchor_positions, &world.walls, &world.range);
            tags.push(tag);
        }

        let anchor_costs = world
            .anchors
            .iter()
            .map(|a| anchor_event_cost(a.slot_index, &config.costs, &config.protocol).0)
            .collect();
        let n = nodes.len();
        Ok(Self {
            world,
            active_cost: tag_event_cost(TagRole::Active, &config.costs).0,
            passive_cost: tag_event_cost(TagRole::Passive, &config.costs).0,
            sleep_per_minute: config.costs.sleep_power.over(Duration::from_secs(60)),
            capacity_j: capacity.joules(),
            minute: 0,
            order_rng: stream(config.seed, STREAM_ORDER),
            schedule_rng: stream(config.seed, STREAM_SCHEDULE),
            noise_rng: stream(config.seed, STREAM_NOISE),
            order: (0..tags.len()).collect(),
            anchor_positions,
            anchor_costs,
            stats: SimStats {
                nodes: infos,
                days: 0,
                daily: Vec::new(),
                hourly: Vec::new(),
                ledgers: vec![Default::default(); n],
                final_stored: vec![Energy::ZERO; n],
                loads: vec![LoadBreakdown::default(); n],
                totals: RunTotals::default(),
                solver_records: Vec::new(),
            },
            nodes,
            tags,
            config: config.clone(),
        })
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn minute(&self) -> u64 {
        self.minute
    }

    pub fn battery(&self, node: usize) -> &BatteryState {
        &self.nodes[node].battery
    }

    /// Replaces a node's battery, for scripted scenarios.
    pub fn set_battery(&mut self, node: usize, battery: BatteryState) {
        self.nodes[node].battery = battery;
    }

    pub fn controller(&self, tag: usize) -> &AimdController {
        &self.tags[tag].controller
    }

    /// Node index of the `tag`-th tag.
    pub fn tag_node(&self, tag: usize) -> usize {
        self.tags[tag].node
    }

    pub fn tag_count(&self) -> usize {
        self.tags.len()
    }

    /// Indices of anchors the `tag`-th tag can currently reach.
    pub fn reachable(&self, tag: usize) -> &[usize] {
        &self.tags[tag].reach
    }

    pub fn totals(&self) -> &RunTotals {
        &self.stats.totals
    }

    /// Forces a tag's schedule for the current hour.
    pub fn set_schedule(&mut self, tag: usize, minutes: &[u32]) {
        let s = &mut self.tags[tag].schedule;
        *s = [false; MINUTES_PER_HOUR as usize];
        for &m in minutes {
            s[m as usize] = true;
        }
    }

    /// Advances one minute: hourly controller update and schedule draw,
    /// harvest, leakage and sleep, then the tags in random order.
    pub fn step_minute(&mut self) {
        let minute = self.minute;
        if minute.is_multiple_of(u64::from(MINUTES_PER_HOUR)) {
            self.start_hour();
        }
        self.move_tags(minute);

        for node in &mut self.nodes {
            let harvest = node.harvest[(minute % node.harvest.len() as u64) as usize];
            node.battery.deposit(harvest);
            let leak = self.config.battery.leak_per_minute(node.battery.soc());
            node.battery.leak(leak);
            let before = node.battery.stored();
            node.battery.drain(self.sleep_per_minute);
            node.loads.sleep += before - node.battery.stored();
        }

        self.order.shuffle(&mut self.order_rng);
        let slot = (minute % u64::from(MINUTES_PER_HOUR)) as usize;
        for i in 0..self.order.len() {
            let tag = self.order[i];
            if !self.tags[tag].schedule[slot] {
                continue;
            }
            let node = self.tags[tag].node;
            if !self.nodes[node].battery.can_supply(self.active_cost) {
                self.stats.totals.skipped += 1;
                continue;
            }
            let (outcome, responders) = self.resolve_active(tag);
            if let ActiveOutcome::Success(_) = outcome {
                self.passive_round(tag, &responders);
            }
        }

        self.minute += 1;
        if self.minute.is_multiple_of(u64::from(MINUTES_PER_HOUR)) {
            self.end_hour();
        }
        if self.minute.is_multiple_of(MINUTES_PER_DAY) {
            self.end_day();
        }
    }

    fn start_hour(&mut self) {
        for tag in &mut self.tags {
            let soc = self.nodes[tag.node].battery.soc();
            tag.controller.update(soc, self.capacity_j);
            let minutes = schedule_hour_with(tag.controller.k, &mut self.schedule_rng);
            tag.schedule = [false; MINUTES_PER_HOUR as usize];
            for m in minutes {
                tag.schedule[m as usize] = true;
            }
        }
    }

    fn move_tags(&mut self, minute: u64) {
        for (i, site) in self.world.tags.iter().enumerate() {
            if site.mobility.is_static() {
                continue;
            }
            let tag = &mut self.tags[i];
            let p = site.mobility.position_at(minute);
            if p != tag.position {
                tag.position = p;
                refresh_reach(tag, &self.anchor_positions, &self.world.walls, &self.world.range);
            }
        }
    }

    /// One active exchange by the `tag`-th tag. The tag pays for the attempt
    /// whatever the outcome; every reachable anchor is woken and pays for its
    /// response, which counts only if the anchor's battery survives it.
    pub fn resolve_active(&mut self, tag: usize) -> (ActiveOutcome, Vec<usize>) {
        let node = self.tags[tag].node;
        let paid = self.nodes[node].battery.stored().min(self.active_cost);
        self.nodes[node].battery.withdraw(self.active_cost);
        self.nodes[node].loads.events += paid;
        self.stats.totals.attempts += 1;
        self.nodes[node].hour.attempts += 1;
        self.nodes[node].day.attempts += 1;

        let mut responders = Vec::new();
        for &a in &self.tags[tag].reach {
            let cost = self.anchor_costs[a];
            let anchor = &mut self.nodes[a];
            let paid = anchor.battery.stored().min(cost);
            let ok = anchor.battery.withdraw(cost);
            anchor.loads.events += paid;
            if ok {
                anchor.day.responses += 1;
                anchor.hour.responses += 1;
                responders.push(a);
            }
        }
        let n = responders.len();
        self.stats.totals.anchor_responses += n as u64;
        let tally = &mut self.nodes[node];
        tally.day.responses += n as u32;
        tally.hour.responses += n as u32;
        if n >= self.world.min_responses {
            self.stats.totals.successes += 1;
            tally.day.active += 1;
            tally.hour.active += 1;
            (ActiveOutcome::Success(n), responders)
        } else {
            self.stats.totals.failures += 1;
            (ActiveOutcome::Failure(n), responders)
        }
    }

    /// Opportunistic passive localizations on a successful exchange: every
    /// other tag that heard enough of the responders and can afford to
    /// listen records one.
    fn passive_round(&mut self, initiator: usize, responders: &[usize]) {
        let mut listeners = Vec::new();
        for j in 0..self.tags.len() {
            if j == initiator {
                continue;
            }
            let heard: Vec<usize> = responders
                .iter()
                .enumerate()
                .filter(|(_, &a)| self.tags[j].reach_mask[a])
                .map(|(k, _)| k)
                .collect();
            if heard.len() < self.world.min_responses {
                continue;
            }
            let node = &mut self.nodes[self.tags[j].node];
            if !node.battery.can_supply(self.passive_cost) {
                continue;
            }
            node.battery.withdraw(self.passive_cost);
            node.loads.events += self.passive_cost;
            node.day.passive += 1;
            node.hour.passive += 1;
            self.stats.totals.passive_observed += 1;
            listeners.push((j, heard));
        }
        if self.config.measurements.with_solvers {
            self.run_solvers(initiator, responders, &listeners);
        }
    }

    fn run_solvers(&mut self, initiator: usize, responders: &[usize], listeners: &[(usize, Vec<usize>)]) {
        let exchange = Exchange {
            initiator: self.tags[initiator].position,
            responders: responders.iter().map(|&a| self.anchor_positions[a]).collect(),
            listeners: listeners
                .iter()
                .map(|(j, heard)| (self.tags[*j].position, heard.clone()))
                .collect(),
        };
        let sigma = self.config.measurements.noise_sigma_m;
        let m = synthesize_measurements(&exchange, sigma, &mut self.noise_rng);
        let cfg = self.config.solver;
        let minute = self.minute;
        let truth = exchange.initiator;
        let start = self.tags[initiator].estimate.unwrap_or_else(|| self.first_guess(m.active.centroid()));
        let node = self.tags[initiator].node;
        let mut estimate = None;
        if let Ok(r) = lm_multilaterate(&m.active, start, &cfg) {
            estimate = Some(r.position);
            self.record(minute, node, SolverKind::Lm, r.position.distance(&truth), r.converged, r.iterations);
        }
        if let Ok(r) = larsson_multilaterate(&m.active, &cfg) {
            self.record(minute, node, SolverKind::Larsson, r.position.distance(&truth), r.converged, r.iterations);
        }
        let Some(q_hat) = estimate else { return };
        self.tags[initiator].estimate = Some(q_hat);
        for ((j, _), mut problem) in listeners.iter().zip(m.passive) {
            problem.initiator = q_hat;
            let truth = self.tags[*j].position;
            let start = self.tags[*j]
                .estimate
                .or_else(|| problem.linear_start())
                .unwrap_or_else(|| self.first_guess(problem.centroid()));
            if let Ok(r) = lm_tdoa(&problem, start, &cfg) {
                self.tags[*j].estimate = Some(r.position);
                let node = self.tags[*j].node;
                self.record(minute, node, SolverKind::Tdoa, r.position.distance(&truth), r.converged, r.iterations);
            }
        }
    }

    /// Ceiling anchors are coplanar, and their centroid sits on the plane
    /// that mirrors every solution, where the height gradient vanishes. First
    /// fixes start from the centroid lowered to the configured tag height.
    fn first_guess(&self, centroid: Position) -> Position {
        Position::new(centroid.x, centroid.y, self.config.world.random_tags.height_m)
    }

    fn record(&mut self, minute: u64, node: usize, solver: SolverKind, error_m: f64, converged: bool, iterations: usize) {
        self.stats.solver_records.push(SolverRecord {
            minute,
            node,
            solver,
            error_m,
            converged,
            iterations,
        });
    }

    fn end_hour(&mut self) {
        let hour = (self.minute / u64::from(MINUTES_PER_HOUR) - 1) as u32;
        for (i, node) in self.nodes.iter_mut().enumerate() {
            let t = std::mem::take(&mut node.hour);
            self.stats.hourly.push(HourlyRecord {
                hour,
                node: i,
                soc: node.battery.soc(),
                attempts: t.attempts,
                active: t.active,
                passive: t.passive,
            });
        }
    }

    fn end_day(&mut self) {
        let day = (self.minute / MINUTES_PER_DAY - 1) as u32;
        for (i, node) in self.nodes.iter_mut().enumerate() {
            let t = std::mem::take(&mut node.day);
            self.stats.daily.push(DailyRecord {
                day,
                node: i,
                active: u64::from(t.active),
                passive: u64::from(t.passive),
                responses: u64::from(t.responses),
                soc: node.battery.soc(),
            });
        }
        self.stats.days = day + 1;
    }

    /// Runs to the configured duration and returns the statistics.
    pub fn run(mut self) -> SimStats {
        let end = u64::from(self.config.days) * MINUTES_PER_DAY;
        while self.minute < end {
            self.step_minute();
        }
        self.finish()
    }

    /// Statistics so far, including ledgers.
    pub fn finish(mut self) -> SimStats {
        for (i, node) in self.nodes.iter().enumerate() {
            self.stats.ledgers[i] = *node.battery.ledger();
            self.stats.final_stored[i] = node.battery.stored();
            self.stats.loads[i] = node.loads;
        }
        self.stats
    }
}

fn refresh_reach(tag: &mut TagState, anchors: &[Position], walls: &[Wall], range: &RadioRange) {
    tag.reach = reachable_anchors(&tag.position, anchors, walls, range);
    tag.reach_mask = vec![false; anchors.len()];
    for &a in &tag.reach {
        tag.reach_mask[a] = true;
    }
}

/// Looks up a harvest profile label: bundled names, `const:<uW>`, or a trace
/// listed in the config.
pub fn resolve_profile(label: &str, config: &SimConfig) -> Result<HarvestProfile, String> {
    if let Some(p) = HarvestProfile::bundled(label, &config.lux_model) {
        return Ok(p);
    }
    if let Some(uw) = parse_constant_profile(label) {
        return HarvestProfile::constant(label, uw * 1e-6);
    }
    let source = config
        .harvest
        .traces
        .iter()
        .find(|t| t.label == label)
        .ok_or_else(|| format!("unknown harvest profile {label:?}"))?;
    let mut trace = ingest_trace(&source.path, &config.lux_model).map_err(|e| e.to_string())?;
    trace.profile.label = label.to_string();
    Ok(trace.profile)
}

/// Validates a config and runs it to completion.
pub fn run(config: &SimConfig) -> Result<SimStats, String> {
    config.validate().map_err(|e| e.join("; "))?;
    Ok(Simulation::new(config)?.run())
}
