//! Structural primitive census and the reference utilization comparison.
//!
//! The census walks the gate and register tables; no LUT packing is
//! attempted, since mapping into FPGA LUTs is synthesis-tool territory.
//! The published LUT/FF/carry figures for the five configurations ride
//! along as fixed reference columns.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::circuit::{Cell, GateKind, Netlist};
use crate::voters::VoterKind;

/// Primitive counts of a netlist (or a tagged slice of one).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ResourceCount {
    pub flip_flops: usize,
    pub gates_by_kind: BTreeMap<GateKind, usize>,
    pub full_adder_cells: usize,
    pub mux2: usize,
    pub total_gates: usize,
}

impl ResourceCount {
    pub fn gates(&self, kind: GateKind) -> usize {
        self.gates_by_kind.get(&kind).copied().unwrap_or(0)
    }
}

/// Exact structural counts by walking the gate and register tables;
/// full-adder cells come from builder-attached tags.
pub fn census(netlist: &Netlist) -> ResourceCount {
    let mut gates_by_kind = BTreeMap::new();
    for gate in netlist.gates() {
        *gates_by_kind.entry(gate.kind).or_insert(0) += 1;
    }
    let full_adder_cells = netlist
        .cells()
        .iter()
        .filter(|c| c.kind == "full_adder")
        .count();
    let mux2 = gates_by_kind.get(&GateKind::Mux2).copied().unwrap_or(0);
    ResourceCount {
        flip_flops: netlist.registers().len(),
        total_gates: netlist.gates().len(),
        full_adder_cells,
        mux2,
        gates_by_kind,
    }
}

/// Census restricted to one tagged cell's gate/register ranges.
pub fn census_cell(netlist: &Netlist, cell: &Cell) -> ResourceCount {
    let mut gates_by_kind = BTreeMap::new();
    for gate in &netlist.gates()[cell.gates.start as usize..cell.gates.end as usize] {
        *gates_by_kind.entry(gate.kind).or_insert(0) += 1;
    }
    let full_adder_cells = netlist
        .cells()
        .iter()
        .filter(|c| {
            c.kind == "full_adder"
                && c.gates.start >= cell.gates.start
                && c.gates.end <= cell.gates.end
        })
        .count();
    let mux2 = gates_by_kind.get(&GateKind::Mux2).copied().unwrap_or(0);
    ResourceCount {
        flip_flops: (cell.registers.end - cell.registers.start) as usize,
        total_gates: (cell.gates.end - cell.gates.start) as usize,
        full_adder_cells,
        mux2,
        gates_by_kind,
    }
}

/// Published FPGA utilization of one configuration, kept as reference
/// columns beside our structural counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReferenceUtilization {
    pub config: VoterKind,
    pub lut: u32,
    pub ff: u32,
    pub carry: u32,
}

/// Reference LUT/FF/carry figures for the five configurations, in
/// [`VoterKind::ALL`] order.
pub const REFERENCE_TABLE: [ReferenceUtilization; 5] = [
    ReferenceUtilization {
        config: VoterKind::Majority5,
        lut: 122,
        ff: 132,
        carry: 33,
    },
    ReferenceUtilization {
        config: VoterKind::Xor5,
        lut: 122,
        ff: 132,
        carry: 33,
    },
    ReferenceUtilization {
        config: VoterKind::Xnor5,
        lut: 122,
        ff: 132,
        carry: 33,
    },
    ReferenceUtilization {
        config: VoterKind::CascadedTmr5,
        lut: 225,
        ff: 132,
        carry: 57,
    },
    ReferenceUtilization {
        config: VoterKind::Mux41_5,
        lut: 244,
        ff: 148,
        carry: 57,
    },
];

#[derive(Debug, Error)]
pub enum ResourceError {
    #[error("missing configuration '{0}' in comparison input")]
    MissingConfiguration(&'static str),
}

/// One comparison row: our structural counts beside the reference column.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub config: VoterKind,
    pub ours: ResourceCount,
    /// Gates belonging to the voter stage: system total minus five base
    /// datapath copies.
    pub voter_gates: usize,
    pub reference: ReferenceUtilization,
}

/// The five-row comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

/// Builds the comparison table from the base datapath census and one
/// system census per configuration.
pub fn compare_with_reference(
    base: &ResourceCount,
    systems: &BTreeMap<VoterKind, ResourceCount>,
) -> Result<ComparisonTable, ResourceError> {
    let mut rows = Vec::with_capacity(5);
    for reference in REFERENCE_TABLE {
        let ours = systems
            .get(&reference.config)
            .ok_or(ResourceError::MissingConfiguration(reference.config.id()))?
            .clone();
        let voter_gates = ours.total_gates - 5 * base.total_gates;
        rows.push(ComparisonRow {
            config: reference.config,
            ours,
            voter_gates,
            reference,
        });
    }
    Ok(ComparisonTable { rows })
}

impl ComparisonTable {
    /// The structural relations the reference data exhibits: equal
    /// flip-flop counts across the three base configurations, and strictly
    /// more voter gates in the cascaded and 4:1-mux configurations than in
    /// the xor/xnor cascade voter.
    pub fn relations_hold(&self) -> bool {
        let ff = |kind: VoterKind| {
            self.rows
                .iter()
                .find(|r| r.config == kind)
                .map(|r| r.ours.flip_flops)
        };
        let voter_gates = |kind: VoterKind| {
            self.rows
                .iter()
                .find(|r| r.config == kind)
                .map(|r| r.voter_gates)
        };
        let base_ff_equal = ff(VoterKind::Majority5) == ff(VoterKind::Xor5)
            && ff(VoterKind::Xor5) == ff(VoterKind::Xnor5);
        let cascade = voter_gates(VoterKind::Xor5).unwrap_or(0);
        let heavier = voter_gates(VoterKind::CascadedTmr5).unwrap_or(0) > cascade
            && voter_gates(VoterKind::Mux41_5).unwrap_or(0) > cascade;
        base_ff_equal && heavier
    }

    /// CSV with our counts and the reference columns.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "config,ff,xor,xnor,and,or,not,mux2,fa_cells,paper_lut,paper_ff,paper_carry\n",
        );
        for row in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                row.config.id(),
                row.ours.flip_flops,
                row.ours.gates(GateKind::Xor),
                row.ours.gates(GateKind::Xnor),
                row.ours.gates(GateKind::And),
                row.ours.gates(GateKind::Or),
                row.ours.gates(GateKind::Not),
                row.ours.mux2,
                row.ours.full_adder_cells,
                row.reference.lut,
                row.reference.ff,
                row.reference.carry
            ));
        }
        s
    }
}
