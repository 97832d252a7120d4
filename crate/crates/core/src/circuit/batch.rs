//! 64-lane bit-parallel simulator.
//!
//! Every net carries a `u64` whose bit `l` is the value of the net in lane
//! `l`, so one pass simulates up to 64 independent stimuli or fault
//! candidates. This is the engine behind fault campaigns and long FIR
//! runs; its semantics are cross-checked against the scalar evaluator.

use std::ops::Range;

use super::{CircuitError, FaultMode, GateKind, NetId, Netlist};

#[derive(Debug, Clone)]
struct LaneFault {
    net: u32,
    mode: FaultMode,
    lanes: u64,
    window: Range<u64>,
}

/// Multi-lane clocked simulator bound to one netlist.
#[derive(Debug, Clone)]
pub struct BatchSim<'n> {
    netlist: &'n Netlist,
    topo: Vec<u32>,
    values: Vec<u64>,
    registers: Vec<u64>,
    cycle: u64,
    faults: Vec<LaneFault>,
    /// Per net: 1 if any fault targets it (skips the fault scan on the
    /// overwhelmingly common clean nets).
    faulted: Vec<bool>,
}

impl<'n> BatchSim<'n> {
    /// Validates the netlist and prepares the evaluation order.
    pub fn new(netlist: &'n Netlist) -> Result<Self, CircuitError> {
        netlist.validate()?;
        let topo = netlist.topo_order()?;
        let registers = netlist
            .registers()
            .iter()
            .map(|r| if r.reset { !0u64 } else { 0 })
            .collect();
        Ok(Self {
            netlist,
            topo,
            values: vec![0; netlist.net_count()],
            registers,
            cycle: 0,
            faults: Vec::new(),
            faulted: vec![false; netlist.net_count()],
        })
    }

    /// Back to reset: registers reloaded, cycle 0. Faults are kept.
    pub fn reset(&mut self) {
        for (v, r) in self.registers.iter_mut().zip(self.netlist.registers()) {
            *v = if r.reset { !0u64 } else { 0 };
        }
        self.values.fill(0);
        self.cycle = 0;
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    /// Injects a fault on `net` in the lanes selected by `lanes`, active
    /// while the cycle is inside `window`.
    pub fn add_fault(
        &mut self,
        net: NetId,
        mode: FaultMode,
        lanes: u64,
        window: Range<u64>,
    ) -> Result<(), CircuitError> {
        if net.index() >= self.netlist.net_count() {
            return Err(CircuitError::UnknownNet(
                net.0,
                self.netlist.net_count(),
            ));
        }
        if window.is_empty() {
            return Err(CircuitError::EmptyFaultWindow(
                self.netlist.net_name(net).into(),
            ));
        }
        self.faulted[net.index()] = true;
        self.faults.push(LaneFault {
            net: net.0,
            mode,
            lanes,
            window,
        });
        Ok(())
    }

    pub fn clear_faults(&mut self) {
        self.faults.clear();
        self.faulted.fill(false);
    }

    #[inline]
    fn apply_faults(&self, net: u32, value: u64, cycle: u64) -> u64 {
        let mut v = value;
        for f in &self.faults {
            if f.net == net && f.window.contains(&cycle) {
                v = match f.mode {
                    FaultMode::Flip => v ^ f.lanes,
                    FaultMode::Stuck0 => v & !f.lanes,
                    FaultMode::Stuck1 => v | f.lanes,
                };
            }
        }
        v
    }

    /// One clock cycle over all lanes. `inputs[i]` is the lane vector for
    /// primary input `i`. Returns the lane vectors of the primary outputs.
    pub fn step(&mut self, inputs: &[u64]) -> Result<Vec<u64>, CircuitError> {
        let nl = self.netlist;
        if inputs.len() != nl.primary_inputs().len() {
            return Err(CircuitError::InputCount {
                expected: nl.primary_inputs().len(),
                got: inputs.len(),
            });
        }
        let cycle = self.cycle;
        let any_faults = !self.faults.is_empty();

        for (i, &net) in nl.primary_inputs().iter().enumerate() {
            let mut v = inputs[i];
            if any_faults && self.faulted[net.index()] {
                v = self.apply_faults(net.0, v, cycle);
            }
            self.values[net.index()] = v;
        }
        for (i, reg) in nl.registers().iter().enumerate() {
            let mut v = self.registers[i];
            if any_faults && self.faulted[reg.output.index()] {
                v = self.apply_faults(reg.output.0, v, cycle);
            }
            self.values[reg.output.index()] = v;
        }
        for &gi in &self.topo {
            let gate = &nl.gates()[gi as usize];
            let out = match gate.kind {
                GateKind::And => {
                    self.values[gate.inputs[0].index()] & self.values[gate.inputs[1].index()]
                }
                GateKind::Or => {
                    self.values[gate.inputs[0].index()] | self.values[gate.inputs[1].index()]
                }
                GateKind::Not => !self.values[gate.inputs[0].index()],
                GateKind::Xor => {
                    self.values[gate.inputs[0].index()] ^ self.values[gate.inputs[1].index()]
                }
                GateKind::Xnor => {
                    !(self.values[gate.inputs[0].index()] ^ self.values[gate.inputs[1].index()])
                }
                GateKind::Mux2 => {
                    let s = self.values[gate.inputs[0].index()];
                    (s & self.values[gate.inputs[2].index()])
                        | (!s & self.values[gate.inputs[1].index()])
                }
                GateKind::Const0 => 0,
                GateKind::Const1 => !0u64,
            };
            let out = if any_faults && self.faulted[gate.output.index()] {
                self.apply_faults(gate.output.0, out, cycle)
            } else {
                out
            };
            self.values[gate.output.index()] = out;
        }
        for (i, reg) in nl.registers().iter().enumerate() {
            self.registers[i] = self.values[reg.input.index()];
        }
        self.cycle += 1;
        Ok(nl
            .primary_outputs()
            .iter()
            .map(|n| self.values[n.index()])
            .collect())
    }

    /// Lane vector currently held by `net` (after the last step).
    pub fn value(&self, net: NetId) -> u64 {
        self.values[net.index()]
    }

    /// Packs the bits of a port group into per-lane words: result bit `i`
    /// of lane `l` is the lane-`l` value of the group's `i`-th net.
    pub fn port_words(&self, nets: &[NetId]) -> Vec<u64> {
        let mut words = vec![0u64; 64];
        for (bit, net) in nets.iter().enumerate() {
            let v = self.values[net.index()];
            for (lane, word) in words.iter_mut().enumerate() {
                *word |= ((v >> lane) & 1) << bit;
            }
        }
        words
    }
}
