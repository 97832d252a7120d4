//! Bit-level and word-level voters for the five 5-modular-redundancy
//! configurations, plus median fusion for measurement channels.
//!
//! Two of the five (the XOR-MUX and XNOR-MUX cascades) are not exact
//! 5-input majority functions; their agreement sets with majority-of-5
//! are fixed by exhaustive enumeration in the tests.

use thiserror::Error;

use crate::arith::{ArithError, Word};
use crate::circuit::{GateKind, NetId, Netlist};

/// The five voter configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VoterKind {
    /// Sum-of-products majority-of-5 (OR over the ten 3-input AND terms).
    Majority5,
    /// Two-stage cascade of XOR-MUX 3-input majority cells.
    Xor5,
    /// Two-stage cascade of XNOR-MUX 3-input majority cells.
    Xnor5,
    /// Second-level vote over three overlapping first-level TMR planes.
    CascadedTmr5,
    /// Shannon expansion on two inputs feeding a 4-to-1 multiplexer.
    Mux41_5,
}

impl VoterKind {
    pub const ALL: [VoterKind; 5] = [
        VoterKind::Majority5,
        VoterKind::Xor5,
        VoterKind::Xnor5,
        VoterKind::CascadedTmr5,
        VoterKind::Mux41_5,
    ];

    /// Stable identifier used by reports and the CLI.
    pub fn id(self) -> &'static str {
        match self {
            VoterKind::Majority5 => "majority5",
            VoterKind::Xor5 => "xor5",
            VoterKind::Xnor5 => "xnor5",
            VoterKind::CascadedTmr5 => "cascaded",
            VoterKind::Mux41_5 => "mux41",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.id() == id)
    }
}

#[derive(Debug, Error)]
pub enum VoterError {
    #[error("word voter needs equal widths, got {0} and {1}")]
    WidthMismatch(usize, usize),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

// ---- bit-level builders --------------------------------------------------

/// 3-input majority as MUX2(select = a^b, when0 = a, when1 = c):
/// if a and b agree the answer is a, otherwise c breaks the tie.
pub fn build_vote3_xor_mux(
    nl: &mut Netlist,
    a: NetId,
    b: NetId,
    c: NetId,
) -> Result<NetId, VoterError> {
    let select = nl.add_gate(GateKind::Xor, &[a, b]).map_err(ArithError::from)?;
    Ok(nl
        .add_gate(GateKind::Mux2, &[select, a, c])
        .map_err(ArithError::from)?)
}

/// 3-input majority as MUX2(select = XNOR(a,b), when0 = c, when1 = a).
pub fn build_vote3_xnor_mux(
    nl: &mut Netlist,
    a: NetId,
    b: NetId,
    c: NetId,
) -> Result<NetId, VoterError> {
    let select = nl
        .add_gate(GateKind::Xnor, &[a, b])
        .map_err(ArithError::from)?;
    Ok(nl
        .add_gate(GateKind::Mux2, &[select, c, a])
        .map_err(ArithError::from)?)
}

/// Exact majority-of-5 as the OR of all ten 3-input AND terms.
pub fn build_vote5_majority(nl: &mut Netlist, x: [NetId; 5]) -> Result<NetId, VoterError> {
    let mut terms = Vec::with_capacity(10);
    for i in 0..5 {
        for j in (i + 1)..5 {
            for k in (j + 1)..5 {
                let ij = nl
                    .add_gate(GateKind::And, &[x[i], x[j]])
                    .map_err(ArithError::from)?;
                let ijk = nl
                    .add_gate(GateKind::And, &[ij, x[k]])
                    .map_err(ArithError::from)?;
                terms.push(ijk);
            }
        }
    }
    let mut acc = terms[0];
    for &t in &terms[1..] {
        acc = nl
            .add_gate(GateKind::Or, &[acc, t])
            .map_err(ArithError::from)?;
    }
    Ok(acc)
}

/// Two-stage XOR-MUX cascade: vote3(vote3(x1,x2,x3), x4, x5). Not an exact
/// majority-of-5; see the enumeration tests for its agreement set.
pub fn build_vote5_xor_mux(nl: &mut Netlist, x: [NetId; 5]) -> Result<NetId, VoterError> {
    let first = build_vote3_xor_mux(nl, x[0], x[1], x[2])?;
    build_vote3_xor_mux(nl, first, x[3], x[4])
}

/// Two-stage XNOR-MUX cascade; logically equivalent to the XOR form since
/// both 3-input cells realize exact majority.
pub fn build_vote5_xnor_mux(nl: &mut Netlist, x: [NetId; 5]) -> Result<NetId, VoterError> {
    let first = build_vote3_xnor_mux(nl, x[0], x[1], x[2])?;
    build_vote3_xnor_mux(nl, first, x[3], x[4])
}

/// Second-level majority over three overlapping TMR planes:
/// vote3(vote3(x1,x2,x3), vote3(x2,x3,x4), vote3(x3,x4,x5)).
pub fn build_vote5_cascaded_tmr(nl: &mut Netlist, x: [NetId; 5]) -> Result<NetId, VoterError> {
    let p1 = build_vote3_xor_mux(nl, x[0], x[1], x[2])?;
    let p2 = build_vote3_xor_mux(nl, x[1], x[2], x[3])?;
    let p3 = build_vote3_xor_mux(nl, x[2], x[3], x[4])?;
    build_vote3_xor_mux(nl, p1, p2, p3)
}

/// Majority-of-5 by Shannon expansion on (x1, x2) into a 4-to-1
/// multiplexer: both high selects OR(x3..x5), both low AND(x3..x5), mixed
/// selects the TMR vote of (x3, x4, x5).
pub fn build_vote5_mux41(nl: &mut Netlist, x: [NetId; 5]) -> Result<NetId, VoterError> {
    let and34 = nl
        .add_gate(GateKind::And, &[x[2], x[3]])
        .map_err(ArithError::from)?;
    let all_and = nl
        .add_gate(GateKind::And, &[and34, x[4]])
        .map_err(ArithError::from)?;
    let or34 = nl
        .add_gate(GateKind::Or, &[x[2], x[3]])
        .map_err(ArithError::from)?;
    let any_or = nl
        .add_gate(GateKind::Or, &[or34, x[4]])
        .map_err(ArithError::from)?;
    let tmr = build_vote3_xor_mux(nl, x[2], x[3], x[4])?;
    // 4:1 multiplexer from three MUX2 cells; select bits (x1, x2).
    let low = nl
        .add_gate(GateKind::Mux2, &[x[1], all_and, tmr])
        .map_err(ArithError::from)?;
    let high = nl
        .add_gate(GateKind::Mux2, &[x[1], tmr, any_or])
        .map_err(ArithError::from)?;
    Ok(nl
        .add_gate(GateKind::Mux2, &[x[0], low, high])
        .map_err(ArithError::from)?)
}

/// Builds the chosen bit voter over five input nets.
pub fn build_bit_voter(
    nl: &mut Netlist,
    kind: VoterKind,
    x: [NetId; 5],
) -> Result<NetId, VoterError> {
    match kind {
        VoterKind::Majority5 => build_vote5_majority(nl, x),
        VoterKind::Xor5 => build_vote5_xor_mux(nl, x),
        VoterKind::Xnor5 => build_vote5_xnor_mux(nl, x),
        VoterKind::CascadedTmr5 => build_vote5_cascaded_tmr(nl, x),
        VoterKind::Mux41_5 => build_vote5_mux41(nl, x),
    }
}

/// Applies the chosen bit voter independently to each bit position across
/// five equal-width words.
pub fn build_word_voter(
    nl: &mut Netlist,
    kind: VoterKind,
    words: &[Word; 5],
) -> Result<Word, VoterError> {
    let width = words[0].width();
    for w in words.iter() {
        if w.width() != width {
            return Err(VoterError::WidthMismatch(width, w.width()));
        }
    }
    let cell = nl.begin_cell(format!("voter_{}", kind.id()));
    let mut bits = Vec::with_capacity(width);
    for i in 0..width {
        let x = [
            words[0].bit(i),
            words[1].bit(i),
            words[2].bit(i),
            words[3].bit(i),
            words[4].bit(i),
        ];
        bits.push(build_bit_voter(nl, kind, x)?);
    }
    nl.end_cell(cell);
    Word::new(bits, words[0].signedness()).map_err(VoterError::Arith)
}

// ---- behavioral references ----------------------------------------------

/// Behavioral model of each voter, mirroring the gate structure exactly.
/// The tests assert it equals the built netlists on all 32 input patterns,
/// which lets campaign code vote at word level without re-simulating the
/// voter gates.
pub fn bit_vote(kind: VoterKind, x: [bool; 5]) -> bool {
    let maj3 = |a: bool, b: bool, c: bool| if a == b { a } else { c };
    match kind {
        VoterKind::Majority5 | VoterKind::Mux41_5 => {
            x.iter().filter(|&&v| v).count() >= 3
        }
        VoterKind::Xor5 | VoterKind::Xnor5 => maj3(maj3(x[0], x[1], x[2]), x[3], x[4]),
        VoterKind::CascadedTmr5 => maj3(
            maj3(x[0], x[1], x[2]),
            maj3(x[1], x[2], x[3]),
            maj3(x[2], x[3], x[4]),
        ),
    }
}

/// Bitwise-parallel form of [`bit_vote`]: votes all 64 lane bits of five
/// words at once. Campaign code leans on this for word-level voting.
pub fn word_vote(kind: VoterKind, x: [u64; 5]) -> u64 {
    let maj3 = |a: u64, b: u64, c: u64| (a & b) | ((a ^ b) & c);
    match kind {
        VoterKind::Majority5 | VoterKind::Mux41_5 => {
            let mut out = 0;
            for i in 0..5 {
                for j in (i + 1)..5 {
                    for k in (j + 1)..5 {
                        out |= x[i] & x[j] & x[k];
                    }
                }
            }
            out
        }
        VoterKind::Xor5 | VoterKind::Xnor5 => maj3(maj3(x[0], x[1], x[2]), x[3], x[4]),
        VoterKind::CascadedTmr5 => maj3(
            maj3(x[0], x[1], x[2]),
            maj3(x[1], x[2], x[3]),
            maj3(x[2], x[3], x[4]),
        ),
    }
}

/// The 3rd order statistic of five values: the fusion rule for five
/// simultaneous measurements of the same signal.
pub fn median5(values: [i64; 5]) -> i64 {
    let mut v = values;
    v.sort_unstable();
    v[2]
}
