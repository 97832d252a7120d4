//! Gate-level netlist representation and simulation.
//!
//! A [`Netlist`] is a directed graph of two-valued logic: named nets,
//! primitive gates, and rising-edge D registers. Combinational cycles are
//! rejected; cycles are only legal through registers. Netlists are plain
//! data — immutable once built, freely shared across threads — while all
//! simulation state lives in [`SimState`] or a simulator instance.

mod batch;
mod export;
mod sim;

pub use batch::BatchSim;
pub use export::{export_netlist, import_netlist, ExportFormat};
pub use sim::{FaultMode, FaultOverlay, FaultPoint, SimState};

use std::collections::BTreeMap;
use std::ops::Range;

use thiserror::Error;

/// Opaque handle into a netlist's net table.
///
/// Ids are only meaningful for the netlist that issued them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NetId(pub(crate) u32);

impl NetId {
    /// Position of this net in the owning netlist's net table.
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Rebuilds a handle from a table index, e.g. one taken from an
    /// exported document. Only meaningful against the same netlist.
    pub fn from_index(index: usize) -> Self {
        NetId(index as u32)
    }
}

/// Primitive gate kinds. `Mux2` inputs are ordered (select, when0, when1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GateKind {
    And,
    Or,
    Not,
    Xor,
    Xnor,
    Mux2,
    Const0,
    Const1,
}

impl GateKind {
    /// Fixed input arity per kind.
    pub fn arity(self) -> usize {
        match self {
            GateKind::Not => 1,
            GateKind::Mux2 => 3,
            GateKind::Const0 | GateKind::Const1 => 0,
            _ => 2,
        }
    }

    /// Lowercase label used by the export formats.
    pub fn label(self) -> &'static str {
        match self {
            GateKind::And => "and",
            GateKind::Or => "or",
            GateKind::Not => "not",
            GateKind::Xor => "xor",
            GateKind::Xnor => "xnor",
            GateKind::Mux2 => "mux2",
            GateKind::Const0 => "const0",
            GateKind::Const1 => "const1",
        }
    }

    pub const ALL: [GateKind; 8] = [
        GateKind::And,
        GateKind::Or,
        GateKind::Not,
        GateKind::Xor,
        GateKind::Xnor,
        GateKind::Mux2,
        GateKind::Const0,
        GateKind::Const1,
    ];
}

/// A primitive gate: `kind(inputs) -> output`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub inputs: Vec<NetId>,
    pub output: NetId,
}

/// Rising-edge D register with an explicit reset value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    pub input: NetId,
    pub output: NetId,
    pub reset: bool,
}

/// What drives a net. Every net has exactly one driver once construction
/// is complete.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    /// Not yet driven (only legal mid-construction).
    None,
    Input,
    Gate(u32),
    Register(u32),
}

/// A builder-attached structural tag covering a contiguous range of gates
/// and registers. Cells nest; `depth` is 0 for top-level cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub kind: String,
    pub gates: Range<u32>,
    pub registers: Range<u32>,
    pub depth: u32,
}

/// Token returned by [`Netlist::begin_cell`], consumed by [`Netlist::end_cell`].
#[derive(Debug)]
#[must_use]
pub struct CellMarker {
    kind: String,
    gate_start: u32,
    register_start: u32,
    depth: u32,
}

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("unknown net id {0} (netlist has {1} nets)")]
    UnknownNet(u32, usize),
    #[error("net '{0}' already has a driver")]
    AlreadyDriven(String),
    #[error("net '{0}' has no driver")]
    Undriven(String),
    #[error("gate kind {kind:?} expects {expected} inputs, got {got}")]
    BadArity {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("combinational cycle through net '{0}'")]
    CombinationalCycle(String),
    #[error("expected {expected} primary input values, got {got}")]
    InputCount { expected: usize, got: usize },
    #[error("state has {got} register values, netlist has {expected} registers")]
    StateSize { expected: usize, got: usize },
    #[error("fault window on net '{0}' is empty")]
    EmptyFaultWindow(String),
    #[error("port group '{0}' is already defined")]
    DuplicatePort(String),
    #[error("unbalanced cell marker for '{0}'")]
    CellNesting(String),
    #[error("netlist parse error: {0}")]
    Parse(String),
}

/// Structural gate-level netlist.
#[derive(Debug, Clone, Default)]
pub struct Netlist {
    net_names: Vec<String>,
    gates: Vec<Gate>,
    registers: Vec<Register>,
    drivers: Vec<Driver>,
    primary_inputs: Vec<NetId>,
    primary_outputs: Vec<NetId>,
    ports: BTreeMap<String, Vec<NetId>>,
    cells: Vec<Cell>,
    cell_depth: u32,
    const0: Option<NetId>,
    const1: Option<NetId>,
}

impl Netlist {
    pub fn new() -> Self {
        Self::default()
    }

    // ---- construction ----------------------------------------------------

    /// Adds an undriven net and returns its id.
    pub fn add_net(&mut self, name: impl Into<String>) -> NetId {
        let id = NetId(self.net_names.len() as u32);
        self.net_names.push(name.into());
        self.drivers.push(Driver::None);
        id
    }

    fn auto_net(&mut self) -> NetId {
        let name = format!("n{}", self.net_names.len());
        self.add_net(name)
    }

    /// Adds a primary input net.
    pub fn add_input(&mut self, name: impl Into<String>) -> NetId {
        let id = self.add_net(name);
        self.drivers[id.index()] = Driver::Input;
        self.primary_inputs.push(id);
        id
    }

    /// Marks an existing net as a primary output.
    pub fn mark_output(&mut self, net: NetId) {
        self.primary_outputs.push(net);
    }

    /// Adds a gate driving a fresh auto-named net; returns the output net.
    pub fn add_gate(&mut self, kind: GateKind, inputs: &[NetId]) -> Result<NetId, CircuitError> {
        let out = self.auto_net();
        self.add_gate_to(kind, inputs, out)?;
        Ok(out)
    }

    /// Adds a gate driving an existing (undriven) net.
    pub fn add_gate_to(
        &mut self,
        kind: GateKind,
        inputs: &[NetId],
        output: NetId,
    ) -> Result<(), CircuitError> {
        if inputs.len() != kind.arity() {
            return Err(CircuitError::BadArity {
                kind,
                expected: kind.arity(),
                got: inputs.len(),
            });
        }
        for &n in inputs {
            self.check_net(n)?;
        }
        self.check_net(output)?;
        if self.drivers[output.index()] != Driver::None {
            return Err(CircuitError::AlreadyDriven(self.net_name(output).into()));
        }
        self.drivers[output.index()] = Driver::Gate(self.gates.len() as u32);
        self.gates.push(Gate {
            kind,
            inputs: inputs.to_vec(),
            output,
        });
        Ok(())
    }

    /// Adds a rising-edge D register; returns its output net.
    ///
    /// The input net must exist but may be driven later (feedback through
    /// registers is legal).
    pub fn add_register(
        &mut self,
        input: NetId,
        reset: bool,
        name: impl Into<String>,
    ) -> Result<NetId, CircuitError> {
        self.check_net(input)?;
        let out = self.add_net(name);
        self.drivers[out.index()] = Driver::Register(self.registers.len() as u32);
        self.registers.push(Register {
            input,
            output: out,
            reset,
        });
        Ok(out)
    }

    /// Shared constant-0 net (one `Const0` gate per netlist).
    pub fn const0(&mut self) -> NetId {
        if let Some(id) = self.const0 {
            return id;
        }
        let id = self.add_net("const0");
        self.add_gate_to(GateKind::Const0, &[], id)
            .expect("fresh net");
        self.const0 = Some(id);
        id
    }

    /// Shared constant-1 net (one `Const1` gate per netlist).
    pub fn const1(&mut self) -> NetId {
        if let Some(id) = self.const1 {
            return id;
        }
        let id = self.add_net("const1");
        self.add_gate_to(GateKind::Const1, &[], id)
            .expect("fresh net");
        self.const1 = Some(id);
        id
    }

    /// Registers a named group of nets (a word-width bundle).
    pub fn add_port_group(
        &mut self,
        name: impl Into<String>,
        nets: &[NetId],
    ) -> Result<(), CircuitError> {
        let name = name.into();
        for &n in nets {
            self.check_net(n)?;
        }
        if self.ports.contains_key(&name) {
            return Err(CircuitError::DuplicatePort(name));
        }
        self.ports.insert(name, nets.to_vec());
        Ok(())
    }

    /// Opens a structural cell tag; everything added until the matching
    /// [`end_cell`](Self::end_cell) belongs to it.
    pub fn begin_cell(&mut self, kind: impl Into<String>) -> CellMarker {
        let marker = CellMarker {
            kind: kind.into(),
            gate_start: self.gates.len() as u32,
            register_start: self.registers.len() as u32,
            depth: self.cell_depth,
        };
        self.cell_depth += 1;
        marker
    }

    /// Closes a cell tag opened by [`begin_cell`](Self::begin_cell).
    pub fn end_cell(&mut self, marker: CellMarker) {
        self.cell_depth -= 1;
        debug_assert_eq!(self.cell_depth, marker.depth, "cell markers must nest");
        self.cells.push(Cell {
            kind: marker.kind,
            gates: marker.gate_start..self.gates.len() as u32,
            registers: marker.register_start..self.registers.len() as u32,
            depth: marker.depth,
        });
    }

    /// Copies every net, gate, register, and cell of `other` into `self`.
    ///
    /// Net names gain `prefix`; `share` maps nets of `other` (typically its
    /// primary inputs) onto existing nets of `self` instead of copying.
    /// Returns the net map from `other` ids to `self` ids. Port groups and
    /// output markings of `other` are not copied; the caller re-exposes
    /// what it needs through the map.
    pub fn append_copy(
        &mut self,
        other: &Netlist,
        prefix: &str,
        share: &[(NetId, NetId)],
    ) -> Result<Vec<NetId>, CircuitError> {
        let mut map: Vec<Option<NetId>> = vec![None; other.net_count()];
        for &(theirs, ours) in share {
            other.check_net(theirs)?;
            self.check_net(ours)?;
            map[theirs.index()] = Some(ours);
        }
        let map: Vec<NetId> = (0..other.net_count())
            .map(|i| match map[i] {
                Some(id) => id,
                None => self.add_net(format!("{prefix}{}", other.net_names[i])),
            })
            .collect();
        let gate_base = self.gates.len() as u32;
        let reg_base = self.registers.len() as u32;
        for gate in &other.gates {
            let inputs: Vec<NetId> = gate.inputs.iter().map(|n| map[n.index()]).collect();
            self.add_gate_to(gate.kind, &inputs, map[gate.output.index()])?;
        }
        for reg in &other.registers {
            let out = map[reg.output.index()];
            self.check_net(reg.input)?;
            if self.drivers[out.index()] != Driver::None {
                return Err(CircuitError::AlreadyDriven(self.net_name(out).into()));
            }
            self.drivers[out.index()] = Driver::Register(self.registers.len() as u32);
            self.registers.push(Register {
                input: map[reg.input.index()],
                output: out,
                reset: reg.reset,
            });
        }
        for cell in &other.cells {
            self.cells.push(Cell {
                kind: cell.kind.clone(),
                gates: cell.gates.start + gate_base..cell.gates.end + gate_base,
                registers: cell.registers.start + reg_base..cell.registers.end + reg_base,
                depth: cell.depth,
            });
        }
        Ok(map)
    }

    // ---- accessors ---------------------------------------------------------

    pub fn net_count(&self) -> usize {
        self.net_names.len()
    }

    pub fn net_name(&self, net: NetId) -> &str {
        &self.net_names[net.index()]
    }

    pub fn net_names(&self) -> &[String] {
        &self.net_names
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn primary_inputs(&self) -> &[NetId] {
        &self.primary_inputs
    }

    pub fn primary_outputs(&self) -> &[NetId] {
        &self.primary_outputs
    }

    pub fn ports(&self) -> &BTreeMap<String, Vec<NetId>> {
        &self.ports
    }

    pub fn port(&self, name: &str) -> Option<&[NetId]> {
        self.ports.get(name).map(|v| v.as_slice())
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn driver(&self, net: NetId) -> Driver {
        self.drivers[net.index()]
    }

    /// All nets driven by a gate or register, i.e. the injectable fault
    /// universe of this netlist (primary inputs excluded).
    pub fn driven_nets(&self) -> Vec<NetId> {
        (0..self.net_count() as u32)
            .map(NetId)
            .filter(|n| {
                matches!(
                    self.drivers[n.index()],
                    Driver::Gate(_) | Driver::Register(_)
                )
            })
            .collect()
    }

    fn check_net(&self, net: NetId) -> Result<(), CircuitError> {
        if net.index() >= self.net_count() {
            return Err(CircuitError::UnknownNet(net.0, self.net_count()));
        }
        Ok(())
    }

    // ---- validation / ordering --------------------------------------------

    /// Checks well-formedness: every net driven, port nets valid, and the
    /// combinational subgraph acyclic.
    pub fn validate(&self) -> Result<(), CircuitError> {
        for (i, d) in self.drivers.iter().enumerate() {
            if *d == Driver::None {
                return Err(CircuitError::Undriven(self.net_names[i].clone()));
            }
        }
        self.topo_order().map(|_| ())
    }

    /// Topological order of gate indices over the combinational subgraph.
    ///
    /// Register outputs, primary inputs, and constants are sources;
    /// register inputs do not create combinational edges. Deterministic for
    /// a given netlist.
    pub fn topo_order(&self) -> Result<Vec<u32>, CircuitError> {
        let n = self.gates.len();
        let mut indegree = vec![0u32; n];
        // consumers[g] = gates reading nets driven by gate g
        let mut consumers: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (gi, gate) in self.gates.iter().enumerate() {
            for &inp in &gate.inputs {
                if let Driver::Gate(src) = self.drivers[inp.index()] {
                    consumers[src as usize].push(gi as u32);
                    indegree[gi] += 1;
                }
            }
        }
        let mut ready: std::collections::VecDeque<u32> = (0..n as u32)
            .filter(|&g| indegree[g as usize] == 0)
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(g) = ready.pop_front() {
            order.push(g);
            for &c in &consumers[g as usize] {
                indegree[c as usize] -= 1;
                if indegree[c as usize] == 0 {
                    ready.push_back(c);
                }
            }
        }
        if order.len() != n {
            let stuck = (0..n).find(|&g| indegree[g] > 0).unwrap();
            return Err(CircuitError::CombinationalCycle(
                self.net_name(self.gates[stuck].output).into(),
            ));
        }
        Ok(order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_arity_enforced() {
        let mut nl = Netlist::new();
        let a = nl.add_input("a");
        let err = nl.add_gate(GateKind::And, &[a]).unwrap_err();
        assert!(matches!(err, CircuitError::BadArity { .. }));
    }

    #[test]
    fn single_driver_enforced() {
        let mut nl = Netlist::new();
        let a = nl.add_input("a");
        let b = nl.add_input("b");
        let out = nl.add_net("out");
        nl.add_gate_to(GateKind::And, &[a, b], out).unwrap();
        let err = nl.add_gate_to(GateKind::Or, &[a, b], out).unwrap_err();
        assert!(matches!(err, CircuitError::AlreadyDriven(_)));
    }

    #[test]
    fn undriven_net_rejected_at_validate() {
        let mut nl = Netlist::new();
        let a = nl.add_input("a");
        let dangling = nl.add_net("dangling");
        let _ = nl.add_gate(GateKind::And, &[a, dangling]).unwrap();
        let err = nl.validate().unwrap_err();
        assert!(matches!(err, CircuitError::Undriven(name) if name == "dangling"));
    }

    #[test]
    fn combinational_cycle_detected() {
        let mut nl = Netlist::new();
        let a = nl.add_input("a");
        let x = nl.add_net("x");
        let y = nl.add_gate(GateKind::And, &[a, x]).unwrap();
        nl.add_gate_to(GateKind::Or, &[y, a], x).unwrap();
        assert!(matches!(
            nl.validate(),
            Err(CircuitError::CombinationalCycle(_))
        ));
    }

    #[test]
    fn cycle_through_register_is_legal() {
        let mut nl = Netlist::new();
        let fb = nl.add_net("fb");
        let q = nl.add_register(fb, false, "q").unwrap();
        nl.add_gate_to(GateKind::Not, &[q], fb).unwrap();
        nl.mark_output(q);
        nl.validate().unwrap();
    }

    #[test]
    fn cells_nest_and_record_ranges() {
        let mut nl = Netlist::new();
        let a = nl.add_input("a");
        let b = nl.add_input("b");
        let outer = nl.begin_cell("outer");
        let inner = nl.begin_cell("inner");
        let _ = nl.add_gate(GateKind::And, &[a, b]).unwrap();
        nl.end_cell(inner);
        let _ = nl.add_gate(GateKind::Or, &[a, b]).unwrap();
        nl.end_cell(outer);
        assert_eq!(nl.cells().len(), 2);
        assert_eq!(nl.cells()[0].kind, "inner");
        assert_eq!(nl.cells()[0].depth, 1);
        assert_eq!(nl.cells()[1].kind, "outer");
        assert_eq!(nl.cells()[1].depth, 0);
        assert_eq!(nl.cells()[1].gates, 0..2);
    }

    #[test]
    fn shared_constants_are_cached() {
        let mut nl = Netlist::new();
        let c0 = nl.const0();
        let c0_again = nl.const0();
        assert_eq!(c0, c0_again);
        assert_eq!(nl.gates().len(), 1);
    }
}
