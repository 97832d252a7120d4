//! Five-way modular redundancy: structural replication under a chosen
//! voter, fault-injection campaigns, and analytic reliability.
//!
//! A fault in one replica never reaches the other four (replicas only
//! share primary inputs, and the voter is purely combinational), so
//! campaign code simulates the faulted replica's cone on the base
//! datapath and votes at word level with [`word_vote`]. That
//! decomposition is exact and is cross-checked against full-system
//! netlist simulation in the tests.

use std::collections::HashMap;
use std::ops::Range;

use serde::Serialize;
use thiserror::Error;

use crate::arith::{ArithError, Signedness, Word};
use crate::circuit::{BatchSim, CircuitError, Driver, FaultMode, NetId, Netlist};
use crate::rng::SplitMix64;
use crate::voters::{bit_vote, build_word_voter, word_vote, VoterError, VoterKind};

#[derive(Debug, Error)]
pub enum RedundancyError {
    #[error("replication needs one all-input port group and one output port group: {0}")]
    PortShape(String),
    #[error("replica index {0} out of range 0..5")]
    BadReplica(usize),
    #[error("net {0} is not in the replica fault universe")]
    NotInUniverse(u32),
    #[error("cycle {cycle} is beyond the stimulus length {len}")]
    CycleBeyondStimulus { cycle: u64, len: usize },
    #[error("stimulus must be nonempty")]
    EmptyStimulus,
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("campaign needs at least one trial")]
    NoTrials,
    #[error("module reliability {0} outside [0, 1]")]
    BadReliability(f64),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Voter(#[from] VoterError),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// A transient fault aimed at one replica of a [`ReplicaSystem`]. `net`
/// names the target in the base datapath's net table; the same structural
/// site exists in every replica.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultSpec {
    pub replica: usize,
    pub net: NetId,
    pub mode: FaultMode,
    pub window: Range<u64>,
}

/// Five structural copies of a datapath sharing primary inputs, with a
/// word-level voter of the chosen kind on their outputs.
#[derive(Debug, Clone)]
pub struct ReplicaSystem {
    pub netlist: Netlist,
    pub voter: VoterKind,
    /// The unreplicated datapath (used for golden runs and fault cones).
    pub base: Netlist,
    pub input_port: String,
    pub output_port: String,
    pub output_width: usize,
    /// Per replica: system net for each base net (indexed by base net id).
    base_to_replica: Vec<Vec<NetId>>,
    /// Injectable sites of one replica, as base net ids.
    base_universe: Vec<NetId>,
}

fn find_ports(base: &Netlist) -> Result<(String, String), RedundancyError> {
    let mut input = None;
    let mut output = None;
    for (name, nets) in base.ports() {
        let all_inputs = nets.iter().all(|n| base.driver(*n) == Driver::Input);
        if all_inputs {
            if input.replace(name.clone()).is_some() {
                return Err(RedundancyError::PortShape(
                    "multiple input port groups".into(),
                ));
            }
        } else if output.replace(name.clone()).is_some() {
            return Err(RedundancyError::PortShape(
                "multiple output port groups".into(),
            ));
        }
    }
    let input = input.ok_or_else(|| RedundancyError::PortShape("no input port group".into()))?;
    let output = output.ok_or_else(|| RedundancyError::PortShape("no output port group".into()))?;
    if base.port(&input).unwrap().len() != base.primary_inputs().len() {
        return Err(RedundancyError::PortShape(
            "input port group must cover every primary input".into(),
        ));
    }
    Ok((input, output))
}

/// Replicates `base` five times and votes its output port word with the
/// chosen voter. With no faults the system output equals the base output
/// bit for bit.
pub fn replicate(base: &Netlist, voter: VoterKind) -> Result<ReplicaSystem, RedundancyError> {
    base.validate()?;
    let (input_port, output_port) = find_ports(base)?;
    let in_nets = base.port(&input_port).unwrap().to_vec();
    let out_nets = base.port(&output_port).unwrap().to_vec();

    let mut sys = Netlist::new();
    let shared: Vec<NetId> = base
        .primary_inputs()
        .iter()
        .map(|&pi| sys.add_input(base.net_name(pi)))
        .collect();
    let share: Vec<(NetId, NetId)> = base
        .primary_inputs()
        .iter()
        .copied()
        .zip(shared.iter().copied())
        .collect();

    let mut base_to_replica = Vec::with_capacity(5);
    let mut replica_outputs = Vec::with_capacity(5);
    for r in 0..5 {
        let map = sys.append_copy(base, &format!("r{r}."), &share)?;
        let word = Word::new(
            out_nets.iter().map(|n| map[n.index()]).collect(),
            Signedness::Unsigned,
        )?;
        replica_outputs.push(word);
        base_to_replica.push(map);
    }
    let voted = build_word_voter(
        &mut sys,
        voter,
        &[
            replica_outputs[0].clone(),
            replica_outputs[1].clone(),
            replica_outputs[2].clone(),
            replica_outputs[3].clone(),
            replica_outputs[4].clone(),
        ],
    )?;
    for &b in voted.bits() {
        sys.mark_output(b);
    }
    let sys_in: Vec<NetId> = in_nets.iter().map(|n| base_to_replica[0][n.index()]).collect();
    sys.add_port_group(&input_port, &sys_in)?;
    sys.add_port_group(&output_port, voted.bits())?;
    sys.validate()?;

    Ok(ReplicaSystem {
        netlist: sys,
        voter,
        base: base.clone(),
        input_port,
        output_port,
        output_width: out_nets.len(),
        base_to_replica,
        base_universe: base.driven_nets(),
    })
}

/// Streams a port-word stimulus through a netlist and collects the output
/// port as per-bit lane vectors, one entry per cycle, with optional
/// lane-selective faults.
fn simulate_words(
    nl: &Netlist,
    input_port: &str,
    output_port: &str,
    stimulus: &[u64],
    faults: &[(NetId, FaultMode, u64, Range<u64>)],
) -> Result<Vec<Vec<u64>>, RedundancyError> {
    let in_nets = nl.port(input_port).expect("input port exists");
    let out_nets = nl.port(output_port).expect("output port exists");
    let pi_pos: HashMap<NetId, usize> = nl
        .primary_inputs()
        .iter()
        .enumerate()
        .map(|(i, &n)| (n, i))
        .collect();
    let bit_to_pi: Vec<usize> = in_nets.iter().map(|n| pi_pos[n]).collect();

    let mut sim = BatchSim::new(nl)?;
    for (net, mode, lanes, window) in faults {
        sim.add_fault(*net, *mode, *lanes, window.clone())?;
    }
    let mut trace = Vec::with_capacity(stimulus.len());
    let mut inputs = vec![0u64; nl.primary_inputs().len()];
    for &word in stimulus {
        for v in inputs.iter_mut() {
            *v = 0;
        }
        for (bit, &pi) in bit_to_pi.iter().enumerate() {
            inputs[pi] = if (word >> bit) & 1 == 1 { !0 } else { 0 };
        }
        sim.step(&inputs)?;
        trace.push(out_nets.iter().map(|n| sim.value(*n)).collect());
    }
    Ok(trace)
}

fn lane0_words(trace: &[Vec<u64>]) -> Vec<u64> {
    trace
        .iter()
        .map(|bits| {
            bits.iter()
                .enumerate()
                .fold(0u64, |acc, (b, &lanes)| acc | ((lanes & 1) << b))
        })
        .collect()
}

fn word_mask(width: usize) -> u64 {
    if width == 64 {
        !0
    } else {
        (1u64 << width) - 1
    }
}

impl ReplicaSystem {
    /// Injectable fault sites of one replica (base net ids).
    pub fn universe(&self) -> &[NetId] {
        &self.base_universe
    }

    pub fn universe_size(&self) -> usize {
        self.base_universe.len()
    }

    /// Maps a [`FaultSpec`] onto the system netlist's copy of that net.
    pub fn map_fault(&self, spec: &FaultSpec) -> Result<NetId, RedundancyError> {
        if spec.replica >= 5 {
            return Err(RedundancyError::BadReplica(spec.replica));
        }
        if spec.net.index() >= self.base.net_count()
            || !matches!(
                self.base.driver(spec.net),
                Driver::Gate(_) | Driver::Register(_)
            )
        {
            return Err(RedundancyError::NotInUniverse(spec.net.index() as u32));
        }
        Ok(self.base_to_replica[spec.replica][spec.net.index()])
    }

    /// Fault-free run of the base datapath: the golden output trace.
    pub fn golden(&self, stimulus: &[u64]) -> Result<Vec<u64>, RedundancyError> {
        if stimulus.is_empty() {
            return Err(RedundancyError::EmptyStimulus);
        }
        let trace = simulate_words(&self.base, &self.input_port, &self.output_port, stimulus, &[])?;
        Ok(lane0_words(&trace))
    }

    /// Runs the system under the given faults by simulating each faulted
    /// replica's cone on the base datapath and voting at word level.
    pub fn run(&self, stimulus: &[u64], faults: &[FaultSpec]) -> Result<Vec<u64>, RedundancyError> {
        let golden = self.golden(stimulus)?;
        let mut by_replica: [Vec<&FaultSpec>; 5] = Default::default();
        for f in faults {
            self.map_fault(f)?; // validates replica and net
            by_replica[f.replica].push(f);
        }
        let mut traces: [Option<Vec<u64>>; 5] = Default::default();
        for (r, specs) in by_replica.iter().enumerate() {
            if specs.is_empty() {
                continue;
            }
            let faults: Vec<(NetId, FaultMode, u64, Range<u64>)> = specs
                .iter()
                .map(|f| (f.net, f.mode, !0u64, f.window.clone()))
                .collect();
            let trace = simulate_words(
                &self.base,
                &self.input_port,
                &self.output_port,
                stimulus,
                &faults,
            )?;
            traces[r] = Some(lane0_words(&trace));
        }
        let mask = word_mask(self.output_width);
        Ok(golden
            .iter()
            .enumerate()
            .map(|(t, &g)| {
                let words = [0, 1, 2, 3, 4].map(|r| traces[r].as_ref().map_or(g, |tr| tr[t]));
                word_vote(self.voter, words) & mask
            })
            .collect())
    }

    /// Runs the full system netlist directly. Slower than [`run`] but with
    /// no decomposition; the two must agree bit for bit.
    pub fn run_direct(
        &self,
        stimulus: &[u64],
        faults: &[FaultSpec],
    ) -> Result<Vec<u64>, RedundancyError> {
        if stimulus.is_empty() {
            return Err(RedundancyError::EmptyStimulus);
        }
        let mapped: Vec<(NetId, FaultMode, u64, Range<u64>)> = faults
            .iter()
            .map(|f| Ok((self.map_fault(f)?, f.mode, !0u64, f.window.clone())))
            .collect::<Result<_, RedundancyError>>()?;
        let trace = simulate_words(
            &self.netlist,
            &self.input_port,
            &self.output_port,
            stimulus,
            &mapped,
        )?;
        Ok(lane0_words(&trace))
    }
}

// ---- masking reports ---------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReplicaBreakdown {
    pub injected: u64,
    pub masked: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairOutcome {
    pub pair: (usize, usize),
    pub all_masked: bool,
}

/// Aggregated result of a fault campaign.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaskingReport {
    pub config: String,
    pub mode: String,
    pub seed: Option<u64>,
    pub total: u64,
    pub masked: u64,
    pub unmasked: u64,
    /// Size of one replica's injectable net universe. Voter nets are not
    /// part of it: the voter is the assumed-good reliability kernel.
    pub universe_size: usize,
    pub per_replica: Vec<ReplicaBreakdown>,
    /// Per replica-pair outcomes for double-fault enumerations.
    pub pairs: Option<Vec<PairOutcome>>,
}

impl MaskingReport {
    pub fn masking_rate(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.masked as f64 / self.total as f64
        }
    }

    /// One header line plus one data row.
    pub fn to_csv(&self) -> String {
        let mut s =
            String::from("config,mode,seed,trials,masked,unmasked,masking_rate,universe_size");
        for r in 0..self.per_replica.len() {
            s.push_str(&format!(",r{r}_injected,r{r}_masked"));
        }
        s.push('\n');
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}",
            self.config,
            self.mode,
            self.seed.map_or(String::new(), |s| s.to_string()),
            self.total,
            self.masked,
            self.unmasked,
            self.masking_rate(),
            self.universe_size
        ));
        for r in &self.per_replica {
            s.push_str(&format!(",{},{}", r.injected, r.masked));
        }
        s.push('\n');
        s
    }

    /// Pair outcomes as CSV (double-fault enumerations only).
    pub fn pairs_csv(&self) -> Option<String> {
        let pairs = self.pairs.as_ref()?;
        let mut s = String::from("config,replica_a,replica_b,all_masked\n");
        for p in pairs {
            s.push_str(&format!(
                "{},{},{},{}\n",
                self.config, p.pair.0, p.pair.1, p.all_masked
            ));
        }
        Some(s)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Per-site disagreement summary against the golden trace: whether the
/// faulted cone ever differs where the golden bit is 0 resp. 1.
fn site_diff_flags(
    system: &ReplicaSystem,
    stimulus: &[u64],
    cycle: u64,
    golden: &[u64],
) -> Result<Vec<(bool, bool)>, RedundancyError> {
    let universe = &system.base_universe;
    let mut flags = Vec::with_capacity(universe.len());
    for chunk in universe.chunks(64) {
        let faults: Vec<(NetId, FaultMode, u64, Range<u64>)> = chunk
            .iter()
            .enumerate()
            .map(|(lane, &net)| (net, FaultMode::Flip, 1u64 << lane, cycle..cycle + 1))
            .collect();
        let trace = simulate_words(
            &system.base,
            &system.input_port,
            &system.output_port,
            stimulus,
            &faults,
        )?;
        let mut bad0 = 0u64;
        let mut bad1 = 0u64;
        for (t, bits) in trace.iter().enumerate() {
            let g = golden[t];
            for (b, &lanes) in bits.iter().enumerate() {
                let gbit = (g >> b) & 1 == 1;
                let diff = lanes ^ if gbit { !0 } else { 0 };
                if gbit {
                    bad1 |= diff;
                } else {
                    bad0 |= diff;
                }
            }
        }
        for lane in 0..chunk.len() {
            flags.push(((bad0 >> lane) & 1 == 1, (bad1 >> lane) & 1 == 1));
        }
    }
    Ok(flags)
}

fn check_stimulus(stimulus: &[u64], cycle: u64) -> Result<(), RedundancyError> {
    if stimulus.is_empty() {
        return Err(RedundancyError::EmptyStimulus);
    }
    if cycle >= stimulus.len() as u64 {
        return Err(RedundancyError::CycleBeyondStimulus {
            cycle,
            len: stimulus.len(),
        });
    }
    Ok(())
}

/// Flips every net of every replica (one at a time) at the given cycle and
/// reports how many of the `universe * 5` faults the voter masks.
pub fn enumerate_single_faults(
    system: &ReplicaSystem,
    stimulus: &[u64],
    cycle: u64,
) -> Result<MaskingReport, RedundancyError> {
    check_stimulus(stimulus, cycle)?;
    let golden = system.golden(stimulus)?;
    let flags = site_diff_flags(system, stimulus, cycle, &golden)?;

    // Does one wrong voter input at position k corrupt the output when the
    // correct bit is g? (False for all five kinds; measured, not assumed.)
    let corrupts: [[bool; 2]; 5] = std::array::from_fn(|k| {
        std::array::from_fn(|g| {
            let g = g == 1;
            let mut x = [g; 5];
            x[k] = !g;
            bit_vote(system.voter, x) != g
        })
    });

    let mut per_replica = vec![
        ReplicaBreakdown {
            injected: 0,
            masked: 0
        };
        5
    ];
    for &(bad0, bad1) in &flags {
        for (k, breakdown) in per_replica.iter_mut().enumerate() {
            breakdown.injected += 1;
            let corrupted = (bad0 && corrupts[k][0]) || (bad1 && corrupts[k][1]);
            if !corrupted {
                breakdown.masked += 1;
            }
        }
    }
    let total: u64 = per_replica.iter().map(|r| r.injected).sum();
    let masked: u64 = per_replica.iter().map(|r| r.masked).sum();
    Ok(MaskingReport {
        config: system.voter.id().into(),
        mode: "exhaustive-single".into(),
        seed: None,
        total,
        masked,
        unmasked: total - masked,
        universe_size: system.universe_size(),
        per_replica,
        pairs: None,
    })
}

/// Double faults across every replica pair.
///
/// Adversarial mode replaces the two faulty replicas' outputs with every
/// per-bit disagreement pattern (all four value combinations, under both
/// correct values) and asks whether the voter masks all of them.
/// Non-adversarial mode flips the same structural site in both replicas of
/// a pair, for every universe site, at the given cycle.
pub fn enumerate_double_faults(
    system: &ReplicaSystem,
    stimulus: &[u64],
    cycle: u64,
    adversarial: bool,
) -> Result<MaskingReport, RedundancyError> {
    check_stimulus(stimulus, cycle)?;
    let kind = system.voter;
    let pairs: Vec<(usize, usize)> = (0..5)
        .flat_map(|i| ((i + 1)..5).map(move |j| (i, j)))
        .collect();

    if adversarial {
        let pair_fully_masked = |i: usize, j: usize| -> bool {
            for g in [false, true] {
                for a in [false, true] {
                    for b in [false, true] {
                        let mut x = [g; 5];
                        x[i] = a;
                        x[j] = b;
                        if bit_vote(kind, x) != g {
                            return false;
                        }
                    }
                }
            }
            true
        };
        let outcomes: Vec<PairOutcome> = pairs
            .iter()
            .map(|&(i, j)| PairOutcome {
                pair: (i, j),
                all_masked: pair_fully_masked(i, j),
            })
            .collect();
        let masked = outcomes.iter().filter(|o| o.all_masked).count() as u64;
        let per_replica = (0..5)
            .map(|r| {
                let touching: Vec<&PairOutcome> = outcomes
                    .iter()
                    .filter(|o| o.pair.0 == r || o.pair.1 == r)
                    .collect();
                ReplicaBreakdown {
                    injected: touching.len() as u64,
                    masked: touching.iter().filter(|o| o.all_masked).count() as u64,
                }
            })
            .collect();
        return Ok(MaskingReport {
            config: kind.id().into(),
            mode: "exhaustive-double-adversarial".into(),
            seed: None,
            total: outcomes.len() as u64,
            masked,
            unmasked: outcomes.len() as u64 - masked,
            universe_size: system.universe_size(),
            per_replica,
            pairs: Some(outcomes),
        });
    }

    // Coupled identical flips: the same site fails in both replicas, so
    // both wrong inputs agree. Site diffs come from one cone simulation.
    let golden = system.golden(stimulus)?;
    let flags = site_diff_flags(system, stimulus, cycle, &golden)?;
    let mut total = 0u64;
    let mut masked = 0u64;
    let mut per_replica = vec![
        ReplicaBreakdown {
            injected: 0,
            masked: 0
        };
        5
    ];
    let mut outcomes: Vec<PairOutcome> = Vec::with_capacity(pairs.len());
    for &(i, j) in &pairs {
        let corrupt: [bool; 2] = std::array::from_fn(|g| {
            let g = g == 1;
            let mut x = [g; 5];
            x[i] = !g;
            x[j] = !g;
            bit_vote(kind, x) != g
        });
        let mut pair_masked = true;
        for &(bad0, bad1) in &flags {
            total += 1;
            per_replica[i].injected += 1;
            per_replica[j].injected += 1;
            let corrupted = (bad0 && corrupt[0]) || (bad1 && corrupt[1]);
            if corrupted {
                pair_masked = false;
            } else {
                masked += 1;
                per_replica[i].masked += 1;
                per_replica[j].masked += 1;
            }
        }
        outcomes.push(PairOutcome {
            pair: (i, j),
            all_masked: pair_masked,
        });
    }
    Ok(MaskingReport {
        config: kind.id().into(),
        mode: "exhaustive-double".into(),
        seed: None,
        total,
        masked,
        unmasked: total - masked,
        universe_size: system.universe_size(),
        per_replica,
        pairs: Some(outcomes),
    })
}

/// How a replica fails in a Monte Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureMode {
    /// The replica's output word is forced to its bitwise complement for
    /// the whole run: the guaranteed-wrong failure assumed by the analytic
    /// reliability formulas, so campaign and formula are comparable.
    ForcedWrong,
    /// One uniformly chosen net of the replica flips for the whole run.
    /// Such faults may be logically masked inside the replica.
    NetFlip,
}

impl FailureMode {
    pub fn label(self) -> &'static str {
        match self {
            FailureMode::ForcedWrong => "forced-wrong",
            FailureMode::NetFlip => "net-flip",
        }
    }
}

/// Seeded Monte Carlo campaign: each replica independently fails with the
/// given probability per trial. Trials use substreams of (seed, trial), so
/// the report is identical regardless of evaluation order.
pub fn monte_carlo_campaign(
    system: &ReplicaSystem,
    stimulus: &[u64],
    fault_probability: f64,
    trials: u64,
    seed: u64,
    mode: FailureMode,
) -> Result<MaskingReport, RedundancyError> {
    if !(0.0..=1.0).contains(&fault_probability) {
        return Err(RedundancyError::BadProbability(fault_probability));
    }
    if trials == 0 {
        return Err(RedundancyError::NoTrials);
    }
    if stimulus.is_empty() {
        return Err(RedundancyError::EmptyStimulus);
    }
    let golden = system.golden(stimulus)?;
    let kind = system.voter;
    let mask = word_mask(system.output_width);

    // Which golden bit values actually occur in the trace.
    let mut g0_present = false;
    let mut g1_present = false;
    for &g in &golden {
        if g & mask != mask {
            g0_present = true;
        }
        if g & mask != 0 {
            g1_present = true;
        }
    }

    // Failure sets drawn up front so NetFlip can batch its cone runs.
    let mut fail_sets = Vec::with_capacity(trials as usize);
    let mut sites: Vec<[usize; 5]> = Vec::with_capacity(trials as usize);
    for trial in 0..trials {
        let mut rng = SplitMix64::substream(seed, trial);
        let mut set = 0u8;
        let mut trial_sites = [0usize; 5];
        for (r, site) in trial_sites.iter_mut().enumerate() {
            if rng.next_bool(fault_probability) {
                set |= 1 << r;
                if mode == FailureMode::NetFlip {
                    *site = rng.next_below(system.universe_size() as u64) as usize;
                }
            }
        }
        fail_sets.push(set);
        sites.push(trial_sites);
    }

    // ForcedWrong: does the vote hold when the set S presents complements?
    let forced_masked: [[bool; 2]; 32] = std::array::from_fn(|set| {
        std::array::from_fn(|g| {
            let g = g == 1;
            let x = std::array::from_fn::<bool, 5, _>(|r| if set >> r & 1 == 1 { !g } else { g });
            bit_vote(kind, x) == g
        })
    });

    // NetFlip: simulate each distinct faulted cone once.
    let mut site_traces: HashMap<usize, Vec<u64>> = HashMap::new();
    if mode == FailureMode::NetFlip {
        let mut unique: Vec<usize> = fail_sets
            .iter()
            .zip(&sites)
            .flat_map(|(&set, s)| (0..5).filter(move |&r| set >> r & 1 == 1).map(|r| s[r]))
            .collect();
        unique.sort_unstable();
        unique.dedup();
        for chunk in unique.chunks(64) {
            let faults: Vec<(NetId, FaultMode, u64, Range<u64>)> = chunk
                .iter()
                .enumerate()
                .map(|(lane, &site)| {
                    (
                        system.base_universe[site],
                        FaultMode::Flip,
                        1u64 << lane,
                        0..stimulus.len() as u64,
                    )
                })
                .collect();
            let trace = simulate_words(
                &system.base,
                &system.input_port,
                &system.output_port,
                stimulus,
                &faults,
            )?;
            for (lane, &site) in chunk.iter().enumerate() {
                let words: Vec<u64> = trace
                    .iter()
                    .map(|bits| {
                        bits.iter()
                            .enumerate()
                            .fold(0u64, |acc, (b, &lanes)| acc | (((lanes >> lane) & 1) << b))
                    })
                    .collect();
                site_traces.insert(site, words);
            }
        }
    }

    let mut masked = 0u64;
    let mut per_replica = vec![
        ReplicaBreakdown {
            injected: 0,
            masked: 0
        };
        5
    ];
    for (&set, trial_sites) in fail_sets.iter().zip(&sites) {
        let ok = match mode {
            FailureMode::ForcedWrong => {
                let entry = forced_masked[set as usize];
                (!g0_present || entry[0]) && (!g1_present || entry[1])
            }
            FailureMode::NetFlip => {
                if set == 0 {
                    true
                } else {
                    let mut ok = true;
                    for (t, &g) in golden.iter().enumerate() {
                        let words = std::array::from_fn::<u64, 5, _>(|r| {
                            if set >> r & 1 == 1 {
                                site_traces[&trial_sites[r]][t]
                            } else {
                                g
                            }
                        });
                        if word_vote(kind, words) & mask != g {
                            ok = false;
                            break;
                        }
                    }
                    ok
                }
            }
        };
        if ok {
            masked += 1;
        }
        for (r, breakdown) in per_replica.iter_mut().enumerate() {
            if set >> r & 1 == 1 {
                breakdown.injected += 1;
                if ok {
                    breakdown.masked += 1;
                }
            }
        }
    }

    Ok(MaskingReport {
        config: kind.id().into(),
        mode: format!("monte-carlo-{}", mode.label()),
        seed: Some(seed),
        total: trials,
        masked,
        unmasked: trials - masked,
        universe_size: system.universe_size(),
        per_replica,
        pairs: None,
    })
}

// ---- analytic reliability ------------------------------------------------------

/// Redundancy schemes with closed-form system reliability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RedundancyKind {
    Tmr,
    Majority5mr,
}

impl RedundancyKind {
    pub fn label(self) -> &'static str {
        match self {
            RedundancyKind::Tmr => "tmr",
            RedundancyKind::Majority5mr => "majority5mr",
        }
    }
}

/// System reliability given module reliability `r`: TMR `3r^2 - 2r^3`;
/// 5MR majority `sum_{k=3..5} C(5,k) r^k (1-r)^(5-k)`.
pub fn analytic_reliability(kind: RedundancyKind, r: f64) -> Result<f64, RedundancyError> {
    if !(0.0..=1.0).contains(&r) {
        return Err(RedundancyError::BadReliability(r));
    }
    Ok(match kind {
        RedundancyKind::Tmr => 3.0 * r * r - 2.0 * r * r * r,
        RedundancyKind::Majority5mr => {
            let q = 1.0 - r;
            let c = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0];
            (3..=5usize)
                .map(|k| c[k] * r.powi(k as i32) * q.powi(5 - k as i32))
                .sum()
        }
    })
}

/// Reliability over a module-reliability grid.
#[derive(Debug, Clone, Serialize)]
pub struct ReliabilityCurve {
    pub kind: String,
    pub points: Vec<(f64, f64)>,
}

pub fn reliability_curve(
    kind: RedundancyKind,
    grid: &[f64],
) -> Result<ReliabilityCurve, RedundancyError> {
    let points = grid
        .iter()
        .map(|&r| Ok((r, analytic_reliability(kind, r)?)))
        .collect::<Result<_, RedundancyError>>()?;
    Ok(ReliabilityCurve {
        kind: kind.label().into(),
        points,
    })
}

impl ReliabilityCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,module_reliability,system_reliability\n");
        for (r, sys) in &self.points {
            s.push_str(&format!("{},{},{}\n", self.kind, r, sys));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fir::{build_fir, design_lowpass, FilterSpec};

    fn small_system(voter: VoterKind) -> ReplicaSystem {
        let coeffs = design_lowpass(&FilterSpec {
            num_taps: 3,
            ..FilterSpec::default()
        })
        .unwrap();
        let dp = build_fir(&coeffs).unwrap();
        replicate(&dp.netlist, voter).unwrap()
    }

    fn ramp_stimulus(len: usize) -> Vec<u64> {
        (0..len).map(|t| (t * 331 + 17) as u16 as u64).collect()
    }

    #[test]
    fn replicate_shares_inputs_and_multiplies_registers() {
        let sys = small_system(VoterKind::Majority5);
        assert_eq!(
            sys.netlist.primary_inputs().len(),
            sys.base.primary_inputs().len()
        );
        assert_eq!(sys.netlist.registers().len(), 5 * sys.base.registers().len());
        for r in 1..5 {
            assert_eq!(sys.base_to_replica[r].len(), sys.base_to_replica[0].len());
        }
    }

    #[test]
    fn one_tap_identity_replica_passes_an_impulse_through() {
        // Unity coefficient at Q2.14; the replicated system's impulse
        // response equals the unreplicated datapath's.
        let coeffs = crate::fir::QuantizedCoeffs {
            real: vec![1.0],
            fixed: vec![16384],
            frac_bits: 14,
        };
        let dp = build_fir(&coeffs).unwrap();
        let sys = replicate(&dp.netlist, VoterKind::Majority5).unwrap();
        let mut stimulus = vec![0u64; 8];
        stimulus[0] = 100;
        let golden = sys.golden(&stimulus).unwrap();
        let system = sys.run_direct(&stimulus, &[]).unwrap();
        assert_eq!(system, golden);
        // Latency 2, then the scaled impulse.
        assert_eq!(system[2], 100 * 16384);
        assert!(system[3..].iter().all(|&w| w == 0));
    }

    #[test]
    fn fault_free_system_is_transparent() {
        for voter in VoterKind::ALL {
            let sys = small_system(voter);
            let stim = ramp_stimulus(24);
            let golden = sys.golden(&stim).unwrap();
            let direct = sys.run_direct(&stim, &[]).unwrap();
            let fast = sys.run(&stim, &[]).unwrap();
            assert_eq!(direct, golden, "{voter:?} direct");
            assert_eq!(fast, golden, "{voter:?} fast");
        }
    }

    #[test]
    fn decomposed_run_matches_direct_run_under_faults() {
        let sys = small_system(VoterKind::CascadedTmr5);
        let stim = ramp_stimulus(20);
        let mut rng = SplitMix64::new(0xfa117);
        for _ in 0..12 {
            let n_faults = 1 + rng.next_below(3);
            let faults: Vec<FaultSpec> = (0..n_faults)
                .map(|_| {
                    let site = rng.next_below(sys.universe_size() as u64) as usize;
                    let start = rng.next_below(18);
                    let mode = match rng.next_below(3) {
                        0 => FaultMode::Flip,
                        1 => FaultMode::Stuck0,
                        _ => FaultMode::Stuck1,
                    };
                    FaultSpec {
                        replica: rng.next_below(5) as usize,
                        net: sys.base_universe[site],
                        mode,
                        window: start..start + 1 + rng.next_below(4),
                    }
                })
                .collect();
            let direct = sys.run_direct(&stim, &faults).unwrap();
            let fast = sys.run(&stim, &faults).unwrap();
            assert_eq!(direct, fast, "faults {faults:?}");
        }
    }

    #[test]
    fn fault_spec_validation() {
        let sys = small_system(VoterKind::Majority5);
        let bad_replica = FaultSpec {
            replica: 5,
            net: sys.base_universe[0],
            mode: FaultMode::Flip,
            window: 0..1,
        };
        assert!(matches!(
            sys.map_fault(&bad_replica),
            Err(RedundancyError::BadReplica(5))
        ));
        let pi = sys.base.primary_inputs()[0];
        let not_universe = FaultSpec {
            replica: 0,
            net: pi,
            mode: FaultMode::Flip,
            window: 0..1,
        };
        assert!(matches!(
            sys.map_fault(&not_universe),
            Err(RedundancyError::NotInUniverse(_))
        ));
    }

    #[test]
    fn single_fault_enumeration_fully_masks_on_majority_voters() {
        for voter in [VoterKind::Majority5, VoterKind::Mux41_5] {
            let sys = small_system(voter);
            let stim = ramp_stimulus(16);
            let report = enumerate_single_faults(&sys, &stim, 4).unwrap();
            assert_eq!(report.total, 5 * sys.universe_size() as u64);
            assert_eq!(report.masked, report.total, "{voter:?}");
            assert_eq!(report.unmasked, 0);
            assert_eq!(report.masking_rate(), 1.0);
        }
    }

    #[test]
    fn single_fault_enumeration_rejects_late_cycle() {
        let sys = small_system(VoterKind::Majority5);
        let stim = ramp_stimulus(8);
        assert!(matches!(
            enumerate_single_faults(&sys, &stim, 8),
            Err(RedundancyError::CycleBeyondStimulus { .. })
        ));
    }

    #[test]
    fn adversarial_double_fault_pair_sets_are_pinned() {
        let stim = ramp_stimulus(8);
        let masked_pairs = |voter: VoterKind| -> Vec<(usize, usize)> {
            let sys = small_system(voter);
            let report = enumerate_double_faults(&sys, &stim, 2, true).unwrap();
            report
                .pairs
                .unwrap()
                .iter()
                .filter(|o| o.all_masked)
                .map(|o| o.pair)
                .collect()
        };
        let all_ten: Vec<(usize, usize)> = (0..5)
            .flat_map(|i| ((i + 1)..5).map(move |j| (i, j)))
            .collect();
        assert_eq!(masked_pairs(VoterKind::Majority5), all_ten);
        assert_eq!(masked_pairs(VoterKind::Mux41_5), all_ten);
        // The cascade's second stage is defenseless when x4 and x5 fail
        // together; everything else routes through exact 3-majorities.
        let xor5: Vec<(usize, usize)> =
            all_ten.iter().copied().filter(|&p| p != (3, 4)).collect();
        assert_eq!(masked_pairs(VoterKind::Xor5), xor5);
        assert_eq!(masked_pairs(VoterKind::Xnor5), xor5);
        let cascaded: Vec<(usize, usize)> = all_ten
            .iter()
            .copied()
            .filter(|&p| p != (1, 2) && p != (2, 3))
            .collect();
        assert_eq!(masked_pairs(VoterKind::CascadedTmr5), cascaded);
        assert!(cascaded.contains(&(0, 4)), "outermost pair stays masked");
    }

    #[test]
    fn analytic_reliability_boundaries_and_midpoint() {
        for kind in [RedundancyKind::Tmr, RedundancyKind::Majority5mr] {
            assert_eq!(analytic_reliability(kind, 1.0).unwrap(), 1.0);
            assert_eq!(analytic_reliability(kind, 0.0).unwrap(), 0.0);
            let half = analytic_reliability(kind, 0.5).unwrap();
            assert!((half - 0.5).abs() < 1e-15, "{kind:?} at 0.5: {half}");
        }
        assert!(matches!(
            analytic_reliability(RedundancyKind::Tmr, 1.5),
            Err(RedundancyError::BadReliability(_))
        ));
    }

    #[test]
    fn analytic_5mr_matches_subset_enumeration_oracle() {
        // Oracle: sum over all 32 failure subsets with at most 2 failures.
        let oracle = |r: f64| -> f64 {
            (0u32..32)
                .filter(|s| s.count_ones() <= 2)
                .map(|s| {
                    let fails = s.count_ones() as i32;
                    (1.0 - r).powi(fails) * r.powi(5 - fails)
                })
                .sum()
        };
        for r in [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0] {
            let analytic = analytic_reliability(RedundancyKind::Majority5mr, r).unwrap();
            assert!(
                (analytic - oracle(r)).abs() < 1e-12,
                "r={r}: {analytic} vs {}",
                oracle(r)
            );
        }
    }

    #[test]
    fn monte_carlo_zero_probability_masks_everything() {
        let sys = small_system(VoterKind::Xor5);
        let stim = ramp_stimulus(12);
        for mode in [FailureMode::ForcedWrong, FailureMode::NetFlip] {
            let report = monte_carlo_campaign(&sys, &stim, 0.0, 500, 1, mode).unwrap();
            assert_eq!(report.masked, 500);
            assert_eq!(report.masking_rate(), 1.0);
        }
    }

    #[test]
    fn monte_carlo_is_seed_deterministic() {
        let sys = small_system(VoterKind::Majority5);
        let stim = ramp_stimulus(12);
        let a = monte_carlo_campaign(&sys, &stim, 0.3, 2_000, 99, FailureMode::NetFlip).unwrap();
        let b = monte_carlo_campaign(&sys, &stim, 0.3, 2_000, 99, FailureMode::NetFlip).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo_campaign(&sys, &stim, 0.3, 2_000, 100, FailureMode::NetFlip).unwrap();
        assert_ne!(a.masked, c.masked);
    }

    #[test]
    fn monte_carlo_forced_wrong_tracks_analytic_value() {
        let sys = small_system(VoterKind::Majority5);
        let stim = ramp_stimulus(12);
        let trials = 20_000u64;
        let p_fail = 0.1;
        let report =
            monte_carlo_campaign(&sys, &stim, p_fail, trials, 7, FailureMode::ForcedWrong).unwrap();
        let expect = analytic_reliability(RedundancyKind::Majority5mr, 1.0 - p_fail).unwrap();
        let sigma = (expect * (1.0 - expect) / trials as f64).sqrt();
        let rate = report.masking_rate();
        assert!(
            (rate - expect).abs() <= 3.0 * sigma,
            "rate {rate} vs analytic {expect} (3 sigma {})",
            3.0 * sigma
        );
    }

    #[test]
    fn reports_serialize_with_stable_shapes() {
        let sys = small_system(VoterKind::Majority5);
        let stim = ramp_stimulus(8);
        let report = enumerate_double_faults(&sys, &stim, 2, true).unwrap();
        let csv = report.to_csv();
        assert!(csv.starts_with("config,mode,seed,trials,masked"));
        assert_eq!(csv.lines().count(), 2);
        let pairs = report.pairs_csv().unwrap();
        assert_eq!(pairs.lines().count(), 11);
        assert!(report.to_json().contains("\"universe_size\""));
        let curve = reliability_curve(RedundancyKind::Tmr, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(curve.to_csv().lines().count(), 4);
    }
}
