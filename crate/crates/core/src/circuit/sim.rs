//! Scalar reference simulation: combinational evaluation, clocked stepping,
//! and fault-overlay evaluation.
//!
//! This evaluator favors clarity over speed; campaign code uses
//! [`BatchSim`](super::BatchSim) and is cross-checked against this one.

use std::ops::Range;

use super::{CircuitError, Driver, GateKind, NetId, Netlist};

/// Per-simulation register state. Owned by one simulation at a time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimState {
    pub register_values: Vec<bool>,
    pub cycle: u64,
}

/// How a faulted net misbehaves while its window is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultMode {
    Flip,
    Stuck0,
    Stuck1,
}

impl FaultMode {
    pub fn apply(self, value: bool) -> bool {
        match self {
            FaultMode::Flip => !value,
            FaultMode::Stuck0 => false,
            FaultMode::Stuck1 => true,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FaultMode::Flip => "flip",
            FaultMode::Stuck0 => "stuck0",
            FaultMode::Stuck1 => "stuck1",
        }
    }
}

/// A transient fault on one net over a half-open cycle window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultPoint {
    pub net: NetId,
    pub window: Range<u64>,
    pub mode: FaultMode,
}

/// A set of injected faults applied during evaluation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FaultOverlay {
    pub points: Vec<FaultPoint>,
}

impl FaultOverlay {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(net: NetId, mode: FaultMode, window: Range<u64>) -> Self {
        Self {
            points: vec![FaultPoint { net, window, mode }],
        }
    }
}

impl Netlist {
    /// Initial state: registers at their reset values, cycle 0.
    pub fn reset_state(&self) -> SimState {
        SimState {
            register_values: self.registers().iter().map(|r| r.reset).collect(),
            cycle: 0,
        }
    }

    /// Combinational evaluation: returns the value of every net.
    ///
    /// Register outputs read as their reset values; use [`step`](Self::step)
    /// for clocked simulation.
    pub fn evaluate(&self, inputs: &[bool]) -> Result<Vec<bool>, CircuitError> {
        let state = self.reset_state();
        self.eval_nets(&state, inputs, &FaultOverlay::empty())
    }

    /// One clock cycle: outputs computed from current register values, then
    /// registers latch their input nets and the cycle count advances.
    pub fn step(
        &self,
        state: &SimState,
        inputs: &[bool],
    ) -> Result<(Vec<bool>, SimState), CircuitError> {
        self.evaluate_with_faults(state, inputs, &FaultOverlay::empty())
    }

    /// [`step`](Self::step) with a fault overlay: each overlaid net whose
    /// window covers the current cycle is forced after its driver computes
    /// and before any consumer (gates and register D inputs alike) reads it.
    pub fn evaluate_with_faults(
        &self,
        state: &SimState,
        inputs: &[bool],
        overlay: &FaultOverlay,
    ) -> Result<(Vec<bool>, SimState), CircuitError> {
        if state.register_values.len() != self.registers().len() {
            return Err(CircuitError::StateSize {
                expected: self.registers().len(),
                got: state.register_values.len(),
            });
        }
        let values = self.eval_nets(state, inputs, overlay)?;
        let outputs = self
            .primary_outputs()
            .iter()
            .map(|n| values[n.index()])
            .collect();
        let next = SimState {
            register_values: self
                .registers()
                .iter()
                .map(|r| values[r.input.index()])
                .collect(),
            cycle: state.cycle + 1,
        };
        Ok((outputs, next))
    }

    fn eval_nets(
        &self,
        state: &SimState,
        inputs: &[bool],
        overlay: &FaultOverlay,
    ) -> Result<Vec<bool>, CircuitError> {
        if inputs.len() != self.primary_inputs().len() {
            return Err(CircuitError::InputCount {
                expected: self.primary_inputs().len(),
                got: inputs.len(),
            });
        }
        for point in &overlay.points {
            if point.net.index() >= self.net_count() {
                return Err(CircuitError::UnknownNet(point.net.0, self.net_count()));
            }
            if point.window.is_empty() {
                return Err(CircuitError::EmptyFaultWindow(
                    self.net_name(point.net).into(),
                ));
            }
        }
        let fault_at = |net: NetId, value: bool| -> bool {
            let mut v = value;
            for point in &overlay.points {
                if point.net == net && point.window.contains(&state.cycle) {
                    v = point.mode.apply(v);
                }
            }
            v
        };

        if let Some(undriven) = (0..self.net_count() as u32)
            .map(NetId)
            .find(|n| self.driver(*n) == Driver::None)
        {
            return Err(CircuitError::Undriven(self.net_name(undriven).into()));
        }

        let mut values = vec![false; self.net_count()];
        for (i, &net) in self.primary_inputs().iter().enumerate() {
            values[net.index()] = fault_at(net, inputs[i]);
        }
        for (i, reg) in self.registers().iter().enumerate() {
            values[reg.output.index()] = fault_at(reg.output, state.register_values[i]);
        }
        for &gi in &self.topo_order()? {
            let gate = &self.gates()[gi as usize];
            let read = |n: NetId| values[n.index()];
            let out = match gate.kind {
                GateKind::And => read(gate.inputs[0]) & read(gate.inputs[1]),
                GateKind::Or => read(gate.inputs[0]) | read(gate.inputs[1]),
                GateKind::Not => !read(gate.inputs[0]),
                GateKind::Xor => read(gate.inputs[0]) ^ read(gate.inputs[1]),
                GateKind::Xnor => !(read(gate.inputs[0]) ^ read(gate.inputs[1])),
                GateKind::Mux2 => {
                    if read(gate.inputs[0]) {
                        read(gate.inputs[2])
                    } else {
                        read(gate.inputs[1])
                    }
                }
                GateKind::Const0 => false,
                GateKind::Const1 => true,
            };
            values[gate.output.index()] = fault_at(gate.output, out);
        }
        Ok(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_and() -> (Netlist, NetId) {
        let mut nl = Netlist::new();
        let a = nl.add_input("a");
        let b = nl.add_input("b");
        let y = nl.add_gate(GateKind::And, &[a, b]).unwrap();
        nl.mark_output(y);
        (nl, y)
    }

    #[test]
    fn and_gate_truth() {
        let (nl, y) = single_and();
        for (a, b) in [(false, false), (false, true), (true, false), (true, true)] {
            let values = nl.evaluate(&[a, b]).unwrap();
            assert_eq!(values[y.index()], a & b);
        }
    }

    #[test]
    fn mux_selects_when1() {
        let mut nl = Netlist::new();
        let s = nl.add_input("s");
        let w0 = nl.add_input("w0");
        let w1 = nl.add_input("w1");
        let y = nl.add_gate(GateKind::Mux2, &[s, w0, w1]).unwrap();
        nl.mark_output(y);
        let values = nl.evaluate(&[true, false, true]).unwrap();
        assert!(values[y.index()]);
        let values = nl.evaluate(&[false, false, true]).unwrap();
        assert!(!values[y.index()]);
    }

    #[test]
    fn xor_self_cancels() {
        let mut nl = Netlist::new();
        let x = nl.add_input("x");
        let y = nl.add_gate(GateKind::Xor, &[x, x]).unwrap();
        nl.mark_output(y);
        for x in [false, true] {
            assert!(!nl.evaluate(&[x]).unwrap()[y.index()]);
        }
    }

    #[test]
    fn missing_input_assignment_is_an_error() {
        let (nl, _) = single_and();
        assert!(matches!(
            nl.evaluate(&[true]),
            Err(CircuitError::InputCount { .. })
        ));
    }

    #[test]
    fn register_delays_by_one_cycle() {
        let mut nl = Netlist::new();
        let d = nl.add_input("d");
        let q = nl.add_register(d, false, "q").unwrap();
        nl.mark_output(q);
        let mut state = nl.reset_state();
        let mut seen = Vec::new();
        for _ in 0..3 {
            let (out, next) = nl.step(&state, &[true]).unwrap();
            seen.push(out[0]);
            state = next;
        }
        assert_eq!(seen, vec![false, true, true]);
        assert_eq!(state.cycle, 3);
    }

    #[test]
    fn shift_register_walks_an_impulse() {
        let mut nl = Netlist::new();
        let d = nl.add_input("d");
        let q0 = nl.add_register(d, false, "q0").unwrap();
        let q1 = nl.add_register(q0, false, "q1").unwrap();
        let q2 = nl.add_register(q1, false, "q2").unwrap();
        for q in [q0, q1, q2] {
            nl.mark_output(q);
        }
        let mut state = nl.reset_state();
        let mut taps = Vec::new();
        for t in 0..4 {
            let (out, next) = nl.step(&state, &[t == 0]).unwrap();
            state = next;
            taps.push(out);
        }
        assert_eq!(taps[1], vec![true, false, false]);
        assert_eq!(taps[2], vec![false, true, false]);
        assert_eq!(taps[3], vec![false, false, true]);
    }

    #[test]
    fn zero_register_step_matches_evaluate() {
        let (nl, y) = single_and();
        let state = nl.reset_state();
        let (out, next) = nl.step(&state, &[true, true]).unwrap();
        assert_eq!(out, vec![true]);
        assert!(nl.evaluate(&[true, true]).unwrap()[y.index()]);
        assert_eq!(next.register_values, state.register_values);
        assert_eq!(next.cycle, 1);
    }

    #[test]
    fn flip_fault_inverts_downstream_view() {
        let mut nl = Netlist::new();
        let a = nl.add_input("a");
        let b = nl.add_input("b");
        let y = nl.add_gate(GateKind::And, &[a, b]).unwrap();
        let z = nl.add_gate(GateKind::Or, &[y, y]).unwrap();
        nl.mark_output(z);
        let overlay = FaultOverlay::single(y, FaultMode::Flip, 0..1);
        let state = nl.reset_state();
        let (out, _) = nl
            .evaluate_with_faults(&state, &[true, true], &overlay)
            .unwrap();
        assert_eq!(out, vec![false]);
    }

    #[test]
    fn stuck1_on_high_net_is_invisible() {
        let (nl, y) = single_and();
        let state = nl.reset_state();
        let overlay = FaultOverlay::single(y, FaultMode::Stuck1, 0..4);
        let (faulted, _) = nl
            .evaluate_with_faults(&state, &[true, true], &overlay)
            .unwrap();
        let (clean, _) = nl.step(&state, &[true, true]).unwrap();
        assert_eq!(faulted, clean);
    }

    #[test]
    fn expired_fault_window_is_inert() {
        let (nl, y) = single_and();
        let mut state = nl.reset_state();
        state.cycle = 10;
        let overlay = FaultOverlay::single(y, FaultMode::Flip, 0..5);
        let (faulted, _) = nl
            .evaluate_with_faults(&state, &[true, true], &overlay)
            .unwrap();
        assert_eq!(faulted, vec![true]);
    }

    #[test]
    fn empty_fault_window_rejected() {
        let (nl, y) = single_and();
        let state = nl.reset_state();
        let overlay = FaultOverlay::single(y, FaultMode::Flip, 3..3);
        assert!(matches!(
            nl.evaluate_with_faults(&state, &[true, true], &overlay),
            Err(CircuitError::EmptyFaultWindow(_))
        ));
    }
}
