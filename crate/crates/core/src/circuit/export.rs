//! Netlist interchange: a self-describing structured-data (JSON) form that
//! round-trips losslessly, and a graph-description (DOT) form for external
//! rendering. Both emit gates in insertion order so exports are
//! byte-identical across runs.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Cell, CircuitError, GateKind, NetId, Netlist};

/// Output flavor for [`export_netlist`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    /// Self-describing JSON document; see [`import_netlist`].
    StructuredData,
    /// Graphviz DOT digraph.
    GraphDescription,
}

#[derive(Debug, Serialize, Deserialize)]
struct GateDoc {
    kind: String,
    inputs: Vec<u32>,
    output: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct RegisterDoc {
    input: u32,
    output: u32,
    reset: u8,
}

#[derive(Debug, Serialize, Deserialize)]
struct CellDoc {
    kind: String,
    gates: [u32; 2],
    registers: [u32; 2],
    depth: u32,
}

/// On-disk schema. Field names are stable; net references are indices
/// into `nets`.
#[derive(Debug, Serialize, Deserialize)]
struct NetlistDoc {
    nets: Vec<String>,
    gates: Vec<GateDoc>,
    registers: Vec<RegisterDoc>,
    primary_inputs: Vec<u32>,
    primary_outputs: Vec<u32>,
    ports: std::collections::BTreeMap<String, Vec<u32>>,
    cells: Vec<CellDoc>,
}

/// Serializes a netlist to the requested text form.
pub fn export_netlist(netlist: &Netlist, format: ExportFormat) -> String {
    match format {
        ExportFormat::StructuredData => to_json(netlist),
        ExportFormat::GraphDescription => to_dot(netlist),
    }
}

fn to_json(nl: &Netlist) -> String {
    let doc = NetlistDoc {
        nets: nl.net_names().to_vec(),
        gates: nl
            .gates()
            .iter()
            .map(|g| GateDoc {
                kind: g.kind.label().into(),
                inputs: g.inputs.iter().map(|n| n.0).collect(),
                output: g.output.0,
            })
            .collect(),
        registers: nl
            .registers()
            .iter()
            .map(|r| RegisterDoc {
                input: r.input.0,
                output: r.output.0,
                reset: r.reset as u8,
            })
            .collect(),
        primary_inputs: nl.primary_inputs().iter().map(|n| n.0).collect(),
        primary_outputs: nl.primary_outputs().iter().map(|n| n.0).collect(),
        ports: nl
            .ports()
            .iter()
            .map(|(k, v)| (k.clone(), v.iter().map(|n| n.0).collect()))
            .collect(),
        cells: nl
            .cells()
            .iter()
            .map(|c| CellDoc {
                kind: c.kind.clone(),
                gates: [c.gates.start, c.gates.end],
                registers: [c.registers.start, c.registers.end],
                depth: c.depth,
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("netlist serializes");
    out.push('\n');
    out
}

fn to_dot(nl: &Netlist) -> String {
    let mut s = String::new();
    s.push_str("digraph netlist {\n  rankdir=LR;\n");
    for &pi in nl.primary_inputs() {
        let _ = writeln!(
            s,
            "  \"net{}\" [label=\"{}\" shape=triangle];",
            pi.0,
            nl.net_name(pi)
        );
    }
    for (gi, gate) in nl.gates().iter().enumerate() {
        let _ = writeln!(
            s,
            "  \"g{}\" [label=\"{}\" shape=box];",
            gi,
            gate.kind.label().to_uppercase()
        );
        for &inp in &gate.inputs {
            let _ = writeln!(s, "  \"net{}\" -> \"g{}\";", inp.0, gi);
        }
        let _ = writeln!(
            s,
            "  \"net{}\" [label=\"{}\" shape=point];",
            gate.output.0,
            nl.net_name(gate.output)
        );
        let _ = writeln!(s, "  \"g{}\" -> \"net{}\";", gi, gate.output.0);
    }
    for (ri, reg) in nl.registers().iter().enumerate() {
        let _ = writeln!(s, "  \"r{ri}\" [label=\"DFF\" shape=box3d];");
        let _ = writeln!(s, "  \"net{}\" -> \"r{}\";", reg.input.0, ri);
        let _ = writeln!(
            s,
            "  \"net{}\" [label=\"{}\" shape=point];",
            reg.output.0,
            nl.net_name(reg.output)
        );
        let _ = writeln!(s, "  \"r{}\" -> \"net{}\";", ri, reg.output.0);
    }
    for &po in nl.primary_outputs() {
        let _ = writeln!(
            s,
            "  \"out_net{}\" [label=\"{}\" shape=invtriangle];",
            po.0,
            nl.net_name(po)
        );
        let _ = writeln!(s, "  \"net{}\" -> \"out_net{}\";", po.0, po.0);
    }
    s.push_str("}\n");
    s
}

fn kind_from_label(label: &str) -> Result<GateKind, CircuitError> {
    GateKind::ALL
        .iter()
        .copied()
        .find(|k| k.label() == label)
        .ok_or_else(|| CircuitError::Parse(format!("unknown gate kind '{label}'")))
}

/// Rebuilds a netlist from its structured-data form. The result is
/// structurally identical to the exported netlist: same nets, names,
/// gates, registers, ports, and cell tags.
pub fn import_netlist(text: &str) -> Result<Netlist, CircuitError> {
    let doc: NetlistDoc =
        serde_json::from_str(text).map_err(|e| CircuitError::Parse(e.to_string()))?;
    let mut nl = Netlist::new();
    let ids: Vec<NetId> = doc.nets.iter().map(|name| nl.add_net(name.clone())).collect();
    let resolve = |idx: u32| -> Result<NetId, CircuitError> {
        ids.get(idx as usize)
            .copied()
            .ok_or(CircuitError::UnknownNet(idx, ids.len()))
    };
    for &pi in &doc.primary_inputs {
        let net = resolve(pi)?;
        nl.drivers[net.index()] = super::Driver::Input;
        nl.primary_inputs.push(net);
    }
    for gate in &doc.gates {
        let kind = kind_from_label(&gate.kind)?;
        let inputs: Vec<NetId> = gate
            .inputs
            .iter()
            .map(|&i| resolve(i))
            .collect::<Result<_, _>>()?;
        nl.add_gate_to(kind, &inputs, resolve(gate.output)?)?;
    }
    for reg in &doc.registers {
        let input = resolve(reg.input)?;
        let output = resolve(reg.output)?;
        if nl.drivers[output.index()] != super::Driver::None {
            return Err(CircuitError::AlreadyDriven(nl.net_name(output).into()));
        }
        nl.drivers[output.index()] = super::Driver::Register(nl.registers.len() as u32);
        nl.registers.push(super::Register {
            input,
            output,
            reset: reg.reset != 0,
        });
    }
    for &po in &doc.primary_outputs {
        nl.primary_outputs.push(resolve(po)?);
    }
    for (name, nets) in &doc.ports {
        let nets: Vec<NetId> = nets.iter().map(|&i| resolve(i)).collect::<Result<_, _>>()?;
        nl.add_port_group(name.clone(), &nets)?;
    }
    let gate_count = nl.gates.len() as u32;
    let reg_count = nl.registers.len() as u32;
    for cell in &doc.cells {
        if cell.gates[1] > gate_count || cell.registers[1] > reg_count {
            return Err(CircuitError::Parse(format!(
                "cell '{}' range out of bounds",
                cell.kind
            )));
        }
        nl.cells.push(Cell {
            kind: cell.kind.clone(),
            gates: cell.gates[0]..cell.gates[1],
            registers: cell.registers[0]..cell.registers[1],
            depth: cell.depth,
        });
    }
    nl.validate()?;
    Ok(nl)
}
