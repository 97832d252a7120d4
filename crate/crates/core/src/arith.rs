//! Netlist builders for datapath arithmetic: full adders, ripple-carry and
//! carry-save adders, the 4x4 Urdhva-Tiryagbhyam multiplier and its
//! recursive 8x8/16x16 compositions, and a signed 16x16 multiplier.
//!
//! Every builder is verified against plain integer arithmetic. The full
//! adder uses a fixed gate recipe (2 XOR, 2 AND, 1 OR) and tags itself as
//! a `full_adder` cell so structural resource counts are reproducible.

use thiserror::Error;

use crate::circuit::{CircuitError, GateKind, NetId, Netlist};

/// Interpretation tag for a [`Word`]'s bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signedness {
    Unsigned,
    /// Two's complement.
    Signed,
}

/// Fixed-width bit vector over netlist nets; index 0 is the LSB.
#[derive(Debug, Clone)]
pub struct Word {
    bits: Vec<NetId>,
    signedness: Signedness,
}

#[derive(Debug, Error)]
pub enum ArithError {
    #[error("word width {0} outside supported range 1..=64")]
    BadWidth(usize),
    #[error("width mismatch: {0} vs {1}")]
    WidthMismatch(usize, usize),
    #[error("multiplier width {0} unsupported (expected 4, 8, or 16)")]
    UnsupportedWidth(usize),
    #[error("carry-save tree needs at least one operand")]
    EmptyOperands,
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

impl Word {
    pub fn new(bits: Vec<NetId>, signedness: Signedness) -> Result<Self, ArithError> {
        if bits.is_empty() || bits.len() > 64 {
            return Err(ArithError::BadWidth(bits.len()));
        }
        Ok(Self { bits, signedness })
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[NetId] {
        &self.bits
    }

    pub fn bit(&self, i: usize) -> NetId {
        self.bits[i]
    }

    pub fn msb(&self) -> NetId {
        *self.bits.last().unwrap()
    }

    pub fn signedness(&self) -> Signedness {
        self.signedness
    }

    pub fn with_signedness(mut self, signedness: Signedness) -> Self {
        self.signedness = signedness;
        self
    }

    fn check_same_width(&self, other: &Word) -> Result<(), ArithError> {
        if self.width() != other.width() {
            return Err(ArithError::WidthMismatch(self.width(), other.width()));
        }
        Ok(())
    }
}

/// Sum/carry pair produced by a carry-save adder. Bit `i` of `carry`
/// already has weight `2^i`, so `value(sum) + value(carry)` is the total.
#[derive(Debug, Clone)]
pub struct CsaPair {
    pub sum: Word,
    pub carry: Word,
}

// ---- word plumbing ---------------------------------------------------------

/// Adds a `width`-bit primary-input word named `name` (nets `name[i]`),
/// registered as a port group.
pub fn input_word(
    nl: &mut Netlist,
    name: &str,
    width: usize,
    signedness: Signedness,
) -> Result<Word, ArithError> {
    let bits: Vec<NetId> = (0..width).map(|i| nl.add_input(format!("{name}[{i}]"))).collect();
    let word = Word::new(bits, signedness)?;
    nl.add_port_group(name, word.bits())?;
    Ok(word)
}

/// Marks a word's nets as primary outputs under a named port group.
pub fn output_word(nl: &mut Netlist, name: &str, word: &Word) -> Result<(), ArithError> {
    for &b in word.bits() {
        nl.mark_output(b);
    }
    nl.add_port_group(name, word.bits())?;
    Ok(())
}

/// A word of constant bits, wired from the shared constant nets.
pub fn constant_word(
    nl: &mut Netlist,
    value: u64,
    width: usize,
    signedness: Signedness,
) -> Result<Word, ArithError> {
    let bits: Vec<NetId> = (0..width)
        .map(|i| {
            if (value >> i) & 1 == 1 {
                nl.const1()
            } else {
                nl.const0()
            }
        })
        .collect();
    Word::new(bits, signedness)
}

/// Zero-extends to `width` with the shared constant-0 net.
pub fn zero_extend(nl: &mut Netlist, word: &Word, width: usize) -> Result<Word, ArithError> {
    if width < word.width() {
        return Err(ArithError::WidthMismatch(word.width(), width));
    }
    let mut bits = word.bits().to_vec();
    let c0 = nl.const0();
    bits.resize(width, c0);
    Word::new(bits, word.signedness())
}

/// Sign-extends to `width` by repeating the MSB net (adds no gates).
pub fn sign_extend(word: &Word, width: usize) -> Result<Word, ArithError> {
    if width < word.width() {
        return Err(ArithError::WidthMismatch(word.width(), width));
    }
    let mut bits = word.bits().to_vec();
    let msb = word.msb();
    bits.resize(width, msb);
    Word::new(bits, word.signedness())
}

/// Chains each bit through a D register; returns the registered word.
pub fn register_word(
    nl: &mut Netlist,
    word: &Word,
    name: &str,
) -> Result<Word, ArithError> {
    let bits: Vec<NetId> = word
        .bits()
        .iter()
        .enumerate()
        .map(|(i, &b)| nl.add_register(b, false, format!("{name}[{i}]")))
        .collect::<Result<_, _>>()?;
    Word::new(bits, word.signedness())
}

/// Reads a word's unsigned value out of a full net-value assignment.
pub fn word_value(values: &[bool], word: &Word) -> u64 {
    word.bits()
        .iter()
        .enumerate()
        .fold(0u64, |acc, (i, &b)| acc | ((values[b.index()] as u64) << i))
}

/// Reads a word as two's complement.
pub fn word_value_signed(values: &[bool], word: &Word) -> i64 {
    sign_extend_value(word_value(values, word), word.width())
}

/// Sign-extends the low `width` bits of `raw` into an `i64`.
pub fn sign_extend_value(raw: u64, width: usize) -> i64 {
    debug_assert!((1..=64).contains(&width));
    let shift = 64 - width;
    ((raw << shift) as i64) >> shift
}

/// Builds a primary-input assignment that drives each listed word with a
/// value (word bits must be primary inputs; unlisted inputs read 0).
pub fn input_assignment(nl: &Netlist, drives: &[(&Word, u64)]) -> Vec<bool> {
    let mut by_net = vec![false; nl.net_count()];
    for (word, value) in drives {
        for (i, &b) in word.bits().iter().enumerate() {
            by_net[b.index()] = (value >> i) & 1 == 1;
        }
    }
    nl.primary_inputs().iter().map(|n| by_net[n.index()]).collect()
}

/// Per-lane variant of [`input_assignment`]: `drives` gives up to 64 lane
/// values per word; returns one lane vector per primary input.
pub fn lane_assignment(nl: &Netlist, drives: &[(&Word, &[u64])]) -> Vec<u64> {
    let mut by_net = vec![0u64; nl.net_count()];
    for (word, lanes) in drives {
        assert!(lanes.len() <= 64);
        for (i, &b) in word.bits().iter().enumerate() {
            let mut v = 0u64;
            for (lane, &value) in lanes.iter().enumerate() {
                v |= ((value >> i) & 1) << lane;
            }
            by_net[b.index()] = v;
        }
    }
    nl.primary_inputs().iter().map(|n| by_net[n.index()]).collect()
}

// ---- adders ----------------------------------------------------------------

/// One full adder: `sum = a ^ b ^ cin`, `cout = majority(a, b, cin)`,
/// realized as 2 XOR + 2 AND + 1 OR and tagged as a `full_adder` cell.
pub fn build_full_adder(
    nl: &mut Netlist,
    a: NetId,
    b: NetId,
    cin: NetId,
) -> Result<(NetId, NetId), ArithError> {
    let cell = nl.begin_cell("full_adder");
    let out = fa_gates(nl, a, b, cin)?;
    nl.end_cell(cell);
    Ok(out)
}

/// The full-adder gate recipe without the cell tag. Used where the adder
/// bits belong to an enclosing cell of a different kind (e.g. the small
/// ripple adder inside the 4x4 multiplier, which keeps its own census).
fn fa_gates(nl: &mut Netlist, a: NetId, b: NetId, cin: NetId) -> Result<(NetId, NetId), ArithError> {
    let axb = nl.add_gate(GateKind::Xor, &[a, b])?;
    let sum = nl.add_gate(GateKind::Xor, &[axb, cin])?;
    let g1 = nl.add_gate(GateKind::And, &[a, b])?;
    let g2 = nl.add_gate(GateKind::And, &[axb, cin])?;
    let cout = nl.add_gate(GateKind::Or, &[g1, g2])?;
    Ok((sum, cout))
}

/// Sum bit only (`a ^ b ^ cin`); for top positions whose carry is dropped.
fn sum_gates(nl: &mut Netlist, a: NetId, b: NetId, cin: NetId) -> Result<NetId, ArithError> {
    let axb = nl.add_gate(GateKind::Xor, &[a, b])?;
    Ok(nl.add_gate(GateKind::Xor, &[axb, cin])?)
}

fn rca_core(
    nl: &mut Netlist,
    a: &[NetId],
    b: &[NetId],
    cin: Option<NetId>,
    emit_cout: bool,
) -> Result<Vec<NetId>, ArithError> {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let mut carry = match cin {
        Some(c) => c,
        None => nl.const0(),
    };
    let mut out = Vec::with_capacity(n + emit_cout as usize);
    for i in 0..n {
        if i + 1 == n && !emit_cout {
            out.push(sum_gates(nl, a[i], b[i], carry)?);
        } else {
            let (s, c) = fa_gates(nl, a[i], b[i], carry)?;
            out.push(s);
            carry = c;
        }
    }
    if emit_cout {
        out.push(carry);
    }
    Ok(out)
}

/// Ripple-carry adder; the result is one bit wider than the operands, the
/// top bit being the carry out. Tagged as a `ripple_adder` cell.
pub fn build_ripple_carry_adder(
    nl: &mut Netlist,
    a: &Word,
    b: &Word,
    cin: Option<NetId>,
) -> Result<Word, ArithError> {
    a.check_same_width(b)?;
    let cell = nl.begin_cell("ripple_adder");
    let bits = rca_core(nl, a.bits(), b.bits(), cin, true)?;
    nl.end_cell(cell);
    Word::new(bits, Signedness::Unsigned)
}

/// Ripple-carry addition modulo `2^n` (no carry out).
fn add_truncated(nl: &mut Netlist, a: &[NetId], b: &[NetId]) -> Result<Vec<NetId>, ArithError> {
    let cell = nl.begin_cell("ripple_adder");
    let bits = rca_core(nl, a, b, None, false)?;
    nl.end_cell(cell);
    Ok(bits)
}

// ---- carry-save adders -------------------------------------------------

/// 3:2 compressor: bitwise `sum = a ^ b ^ c`, `carry[i+1] = majority`.
/// Outputs are `n + 1` bits wide so no information is lost.
pub fn build_csa(nl: &mut Netlist, a: &Word, b: &Word, c: &Word) -> Result<CsaPair, ArithError> {
    a.check_same_width(b)?;
    a.check_same_width(c)?;
    let n = a.width();
    let cell = nl.begin_cell("csa");
    let mut sum_bits = Vec::with_capacity(n + 1);
    let mut carry_bits = Vec::with_capacity(n + 1);
    carry_bits.push(nl.const0());
    for i in 0..n {
        let (s, co) = build_full_adder(nl, a.bit(i), b.bit(i), c.bit(i))?;
        sum_bits.push(s);
        carry_bits.push(co);
    }
    sum_bits.push(nl.const0());
    nl.end_cell(cell);
    Ok(CsaPair {
        sum: Word::new(sum_bits, Signedness::Unsigned)?,
        carry: Word::new(carry_bits, Signedness::Unsigned)?,
    })
}

/// 3:2 compression at a fixed width `w`: the carry out of the top bit is
/// not built, so the pair represents `a + b + c` modulo `2^w`.
fn csa_fixed(
    nl: &mut Netlist,
    a: &[NetId],
    b: &[NetId],
    c: &[NetId],
) -> Result<(Vec<NetId>, Vec<NetId>), ArithError> {
    let w = a.len();
    let mut sum = Vec::with_capacity(w);
    let mut carry = Vec::with_capacity(w);
    carry.push(nl.const0());
    for i in 0..w {
        if i + 1 == w {
            sum.push(sum_gates(nl, a[i], b[i], c[i])?);
        } else {
            let (s, co) = build_full_adder(nl, a[i], b[i], c[i])?;
            sum.push(s);
            carry.push(co);
        }
    }
    Ok((sum, carry))
}

/// Reduces any number of equal-width operand vectors to a single vector of
/// the same width, equal to their sum modulo `2^w`: repeated 3:2
/// compression followed by one ripple-carry adder.
pub(crate) fn reduce_sum_mod(
    nl: &mut Netlist,
    operands: Vec<Vec<NetId>>,
) -> Result<Vec<NetId>, ArithError> {
    if operands.is_empty() {
        return Err(ArithError::EmptyOperands);
    }
    let mut queue = std::collections::VecDeque::from(operands);
    while queue.len() > 2 {
        let a = queue.pop_front().unwrap();
        let b = queue.pop_front().unwrap();
        let c = queue.pop_front().unwrap();
        let (sum, carry) = csa_fixed(nl, &a, &b, &c)?;
        queue.push_back(sum);
        queue.push_back(carry);
    }
    match queue.len() {
        1 => Ok(queue.pop_front().unwrap()),
        _ => {
            let a = queue.pop_front().unwrap();
            let b = queue.pop_front().unwrap();
            add_truncated(nl, &a, &b)
        }
    }
}

/// Sums `k >= 1` equal-width unsigned operands exactly. The result width is
/// `operand width + ceil(log2 k)`, which is sufficient for any input
/// values, so the dropped top carries are provably zero.
pub fn build_csa_tree(nl: &mut Netlist, operands: &[Word]) -> Result<Word, ArithError> {
    if operands.is_empty() {
        return Err(ArithError::EmptyOperands);
    }
    let w = operands[0].width();
    for op in operands {
        operands[0].check_same_width(op)?;
    }
    let w_out = w + ceil_log2(operands.len());
    let extended: Vec<Vec<NetId>> = operands
        .iter()
        .map(|op| Ok(zero_extend(nl, op, w_out)?.bits().to_vec()))
        .collect::<Result<_, ArithError>>()?;
    let bits = reduce_sum_mod(nl, extended)?;
    Word::new(bits, Signedness::Unsigned)
}

pub(crate) fn ceil_log2(k: usize) -> usize {
    debug_assert!(k >= 1);
    k.next_power_of_two().trailing_zeros() as usize
}

// ---- multipliers -------------------------------------------------------

/// 4x4 Urdhva-Tiryagbhyam multiplier: 16 partial products compressed
/// column-wise by exactly 9 full adders, finished by a small 4-bit ripple
/// adder for the upper product bits.
pub fn build_vedic_4x4(nl: &mut Netlist, a: &Word, b: &Word) -> Result<Word, ArithError> {
    if a.width() != 4 || b.width() != 4 {
        return Err(ArithError::WidthMismatch(a.width(), b.width()));
    }
    let cell = nl.begin_cell("vedic4x4");
    let bits = vedic_4x4_core(nl, a.bits(), b.bits())?;
    nl.end_cell(cell);
    Word::new(bits, Signedness::Unsigned)
}

fn vedic_4x4_core(nl: &mut Netlist, a: &[NetId], b: &[NetId]) -> Result<Vec<NetId>, ArithError> {
    // Partial products p[i][j] = a_i & b_j, weight 2^(i+j).
    let mut p = [[NetId(0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            p[i][j] = nl.add_gate(GateKind::And, &[a[i], b[j]])?;
        }
    }
    let c0 = nl.const0();

    let out0 = p[0][0];
    // Column 1: p10 + p01.
    let (out1, c1) = build_full_adder(nl, p[1][0], p[0][1], c0)?;
    // Column 2: p20 + p11 + p02, then fold in c1.
    let (s2a, c2a) = build_full_adder(nl, p[2][0], p[1][1], p[0][2])?;
    let (out2, c2b) = build_full_adder(nl, s2a, c1, c0)?;
    // Column 3: p30 + p21 + p12 + p03 + carries from column 2.
    let (s3a, c3a) = build_full_adder(nl, p[3][0], p[2][1], p[1][2])?;
    let (s3b, c3b) = build_full_adder(nl, s3a, p[0][3], c2a)?;
    let (out3, c3c) = build_full_adder(nl, s3b, c2b, c0)?;
    // Column 4: p31 + p22 + p13 + carries from column 3.
    let (s4a, c4a) = build_full_adder(nl, p[3][1], p[2][2], p[1][3])?;
    let (s4b, c4b) = build_full_adder(nl, s4a, c3a, c3b)?;
    // Column 5: p32 + p23 + c4a.
    let (s5a, c5a) = build_full_adder(nl, p[3][2], p[2][3], c4a)?;
    // Upper bits via the 4-bit ripple adder: columns 4..6 have two entries
    // left each; bit 7 is its carry out.
    let cell = nl.begin_cell("ripple_adder");
    let upper = rca_core(nl, &[s4b, s5a, p[3][3]], &[c3c, c4b, c5a], None, true)?;
    nl.end_cell(cell);

    let mut bits = vec![out0, out1, out2, out3];
    bits.extend(upper);
    debug_assert_eq!(bits.len(), 8);
    Ok(bits)
}

fn vedic_core(nl: &mut Netlist, a: &[NetId], b: &[NetId]) -> Result<Vec<NetId>, ArithError> {
    let n = a.len();
    if n == 4 {
        let cell = nl.begin_cell("vedic4x4");
        let bits = vedic_4x4_core(nl, a, b)?;
        nl.end_cell(cell);
        return Ok(bits);
    }
    let cell = nl.begin_cell(format!("vedic{n}x{n}"));
    let half = n / 2;
    let (al, ah) = (&a[..half], &a[half..]);
    let (bl, bh) = (&b[..half], &b[half..]);
    let ll = vedic_core(nl, al, bl)?;
    let lh = vedic_core(nl, al, bh)?;
    let hl = vedic_core(nl, ah, bl)?;
    let hh = vedic_core(nl, ah, bh)?;
    // ll + (lh + hl) << half + hh << n, all below 2^(2n).
    let w = 2 * n;
    let c0 = nl.const0();
    let pad = |bits: Vec<NetId>, shift: usize| -> Vec<NetId> {
        let mut v = vec![c0; shift];
        v.extend(bits);
        v.resize(w, c0);
        v
    };
    let operands = vec![pad(ll, 0), pad(lh, half), pad(hl, half), pad(hh, n)];
    let bits = reduce_sum_mod(nl, operands)?;
    nl.end_cell(cell);
    Ok(bits)
}

/// Unsigned Vedic multiplier for operand widths 4, 8, or 16. Wider cells
/// are built from four half-width cells whose partial products are
/// combined with carry-save adders and one final carry-propagate adder.
pub fn build_vedic_multiplier(nl: &mut Netlist, a: &Word, b: &Word) -> Result<Word, ArithError> {
    a.check_same_width(b)?;
    if !matches!(a.width(), 4 | 8 | 16) {
        return Err(ArithError::UnsupportedWidth(a.width()));
    }
    let bits = vedic_core(nl, a.bits(), b.bits())?;
    Word::new(bits, Signedness::Unsigned)
}

/// `word ^ cond` on every bit, then `+cond`: two's-complement negation
/// when `cond` is 1, identity when 0. Result is modulo `2^n`.
fn conditional_negate(nl: &mut Netlist, bits: &[NetId], cond: NetId) -> Result<Vec<NetId>, ArithError> {
    let flipped: Vec<NetId> = bits
        .iter()
        .map(|&b| nl.add_gate(GateKind::Xor, &[b, cond]))
        .collect::<Result<_, _>>()?;
    let mut carry = cond;
    let mut out = Vec::with_capacity(bits.len());
    for (i, &x) in flipped.iter().enumerate() {
        out.push(nl.add_gate(GateKind::Xor, &[x, carry])?);
        if i + 1 < bits.len() {
            carry = nl.add_gate(GateKind::And, &[x, carry])?;
        }
    }
    Ok(out)
}

/// Signed 16x16 -> 32 multiplier: unsigned Vedic core on the operand
/// magnitudes with sign-correction logic around it.
pub fn build_signed_multiplier_16x16(
    nl: &mut Netlist,
    a: &Word,
    b: &Word,
) -> Result<Word, ArithError> {
    if a.width() != 16 || b.width() != 16 {
        return Err(ArithError::WidthMismatch(a.width(), b.width()));
    }
    let cell = nl.begin_cell("signed_mul16");
    let sa = a.msb();
    let sb = b.msb();
    let mag_a = conditional_negate(nl, a.bits(), sa)?;
    let mag_b = conditional_negate(nl, b.bits(), sb)?;
    let product = vedic_core(nl, &mag_a, &mag_b)?;
    let negate = nl.add_gate(GateKind::Xor, &[sa, sb])?;
    let bits = conditional_negate(nl, &product, negate)?;
    nl.end_cell(cell);
    Word::new(bits, Signedness::Signed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::BatchSim;

    fn count_cells(nl: &Netlist, kind: &str) -> usize {
        nl.cells().iter().filter(|c| c.kind == kind).count()
    }

    #[test]
    fn full_adder_truth_table() {
        for pattern in 0..8u32 {
            let mut nl = Netlist::new();
            let a = nl.add_input("a");
            let b = nl.add_input("b");
            let cin = nl.add_input("cin");
            let (s, c) = build_full_adder(&mut nl, a, b, cin).unwrap();
            let values = nl
                .evaluate(&[pattern & 1 == 1, pattern & 2 == 2, pattern & 4 == 4])
                .unwrap();
            let total = (pattern & 1) + ((pattern >> 1) & 1) + ((pattern >> 2) & 1);
            assert_eq!(values[s.index()] as u32, total & 1, "sum for {pattern:03b}");
            assert_eq!(values[c.index()] as u32, total >> 1, "cout for {pattern:03b}");
        }
    }

    #[test]
    fn full_adder_gate_recipe_is_fixed() {
        let mut nl = Netlist::new();
        let a = nl.add_input("a");
        let b = nl.add_input("b");
        let cin = nl.add_input("cin");
        build_full_adder(&mut nl, a, b, cin).unwrap();
        let kinds: Vec<GateKind> = nl.gates().iter().map(|g| g.kind).collect();
        assert_eq!(
            kinds,
            vec![
                GateKind::Xor,
                GateKind::Xor,
                GateKind::And,
                GateKind::And,
                GateKind::Or
            ]
        );
        assert_eq!(count_cells(&nl, "full_adder"), 1);
    }

    #[test]
    fn ripple_adder_matches_integers() {
        let mut nl = Netlist::new();
        let a = input_word(&mut nl, "a", 8, Signedness::Unsigned).unwrap();
        let b = input_word(&mut nl, "b", 8, Signedness::Unsigned).unwrap();
        let sum = build_ripple_carry_adder(&mut nl, &a, &b, None).unwrap();
        assert_eq!(sum.width(), 9);
        for (x, y) in [(0u64, 0u64), (255, 255), (170, 85), (19, 200), (128, 128)] {
            let values = nl.evaluate(&input_assignment(&nl, &[(&a, x), (&b, y)])).unwrap();
            assert_eq!(word_value(&values, &sum), x + y);
        }
    }

    #[test]
    fn csa_compresses_example_triple() {
        let mut nl = Netlist::new();
        let a = input_word(&mut nl, "a", 3, Signedness::Unsigned).unwrap();
        let b = input_word(&mut nl, "b", 3, Signedness::Unsigned).unwrap();
        let c = input_word(&mut nl, "c", 3, Signedness::Unsigned).unwrap();
        let pair = build_csa(&mut nl, &a, &b, &c).unwrap();
        let values = nl
            .evaluate(&input_assignment(&nl, &[(&a, 5), (&b, 3), (&c, 2)]))
            .unwrap();
        assert_eq!(word_value(&values, &pair.sum), 4);
        assert_eq!(word_value(&values, &pair.carry), 6);
    }

    #[test]
    fn csa_recombines_random_16bit_triples() {
        let mut nl = Netlist::new();
        let a = input_word(&mut nl, "a", 16, Signedness::Unsigned).unwrap();
        let b = input_word(&mut nl, "b", 16, Signedness::Unsigned).unwrap();
        let c = input_word(&mut nl, "c", 16, Signedness::Unsigned).unwrap();
        let pair = build_csa(&mut nl, &a, &b, &c).unwrap();
        let mut rng = crate::rng::SplitMix64::new(0xc5a);
        for _ in 0..2_000 {
            let (x, y, z) = (
                rng.next_below(1 << 16),
                rng.next_below(1 << 16),
                rng.next_below(1 << 16),
            );
            let values = nl
                .evaluate(&input_assignment(&nl, &[(&a, x), (&b, y), (&c, z)]))
                .unwrap();
            assert_eq!(
                word_value(&values, &pair.sum) + word_value(&values, &pair.carry),
                x + y + z
            );
        }
    }

    #[test]
    fn csa_tree_single_operand_is_identity() {
        let mut nl = Netlist::new();
        let a = input_word(&mut nl, "a", 4, Signedness::Unsigned).unwrap();
        let out = build_csa_tree(&mut nl, std::slice::from_ref(&a)).unwrap();
        assert_eq!(out.width(), 4);
        let values = nl.evaluate(&input_assignment(&nl, &[(&a, 11)])).unwrap();
        assert_eq!(word_value(&values, &out), 11);
    }

    #[test]
    fn csa_tree_of_five_ones() {
        let mut nl = Netlist::new();
        let ops: Vec<Word> = (0..5)
            .map(|i| input_word(&mut nl, &format!("x{i}"), 4, Signedness::Unsigned).unwrap())
            .collect();
        let out = build_csa_tree(&mut nl, &ops).unwrap();
        assert_eq!(out.width(), 7);
        let drives: Vec<(&Word, u64)> = ops.iter().map(|w| (w, 1u64)).collect();
        let values = nl.evaluate(&input_assignment(&nl, &drives)).unwrap();
        assert_eq!(word_value(&values, &out), 5);
    }

    #[test]
    fn csa_tree_sums_seven_20bit_operands() {
        let mut nl = Netlist::new();
        let ops: Vec<Word> = (0..7)
            .map(|i| input_word(&mut nl, &format!("x{i}"), 20, Signedness::Unsigned).unwrap())
            .collect();
        let out = build_csa_tree(&mut nl, &ops).unwrap();
        assert_eq!(out.width(), 23);
        let mut rng = crate::rng::SplitMix64::new(7);
        for _ in 0..200 {
            let values: Vec<u64> = (0..7).map(|_| rng.next_below(1 << 20)).collect();
            let drives: Vec<(&Word, u64)> =
                ops.iter().zip(&values).map(|(w, &v)| (w, v)).collect();
            let assignment = input_assignment(&nl, &drives);
            let nets = nl.evaluate(&assignment).unwrap();
            assert_eq!(word_value(&nets, &out), values.iter().sum::<u64>());
        }
    }

    #[test]
    fn vedic_4x4_exhaustive_and_structure() {
        let mut nl = Netlist::new();
        let a = input_word(&mut nl, "a", 4, Signedness::Unsigned).unwrap();
        let b = input_word(&mut nl, "b", 4, Signedness::Unsigned).unwrap();
        let p = build_vedic_4x4(&mut nl, &a, &b).unwrap();
        output_word(&mut nl, "p", &p).unwrap();
        assert_eq!(count_cells(&nl, "full_adder"), 9);
        assert_eq!(count_cells(&nl, "vedic4x4"), 1);
        for x in 0..16u64 {
            for y in 0..16u64 {
                let values = nl.evaluate(&input_assignment(&nl, &[(&a, x), (&b, y)])).unwrap();
                assert_eq!(word_value(&values, &p), x * y, "{x} * {y}");
            }
        }
    }

    #[test]
    fn vedic_8x8_random_sample() {
        let mut nl = Netlist::new();
        let a = input_word(&mut nl, "a", 8, Signedness::Unsigned).unwrap();
        let b = input_word(&mut nl, "b", 8, Signedness::Unsigned).unwrap();
        let p = build_vedic_multiplier(&mut nl, &a, &b).unwrap();
        assert_eq!(p.width(), 16);
        let mut rng = crate::rng::SplitMix64::new(88);
        for _ in 0..500 {
            let (x, y) = (rng.next_below(256), rng.next_below(256));
            let values = nl.evaluate(&input_assignment(&nl, &[(&a, x), (&b, y)])).unwrap();
            assert_eq!(word_value(&values, &p), x * y);
        }
        let values = nl
            .evaluate(&input_assignment(&nl, &[(&a, 255), (&b, 255)]))
            .unwrap();
        assert_eq!(word_value(&values, &p), 65_025);
    }

    #[test]
    fn vedic_16x16_edges_and_sample_via_lanes() {
        let mut nl = Netlist::new();
        let a = input_word(&mut nl, "a", 16, Signedness::Unsigned).unwrap();
        let b = input_word(&mut nl, "b", 16, Signedness::Unsigned).unwrap();
        let p = build_vedic_multiplier(&mut nl, &a, &b).unwrap();
        nl.add_port_group("p", p.bits()).unwrap();

        let edges = [0u64, 1, 0xffff, 0x8000, 0xaaaa, 0x5555];
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &x in &edges {
            for &y in &edges {
                xs.push(x);
                ys.push(y);
            }
        }
        let mut rng = crate::rng::SplitMix64::new(1616);
        while xs.len() < 64 {
            xs.push(rng.next_below(1 << 16));
            ys.push(rng.next_below(1 << 16));
        }
        let mut sim = BatchSim::new(&nl).unwrap();
        sim.step(&lane_assignment(&nl, &[(&a, &xs), (&b, &ys)])).unwrap();
        let words = sim.port_words(p.bits());
        for lane in 0..64 {
            assert_eq!(words[lane], xs[lane] * ys[lane], "{} * {}", xs[lane], ys[lane]);
        }
    }

    #[test]
    fn signed_multiplier_examples_and_sample() {
        let mut nl = Netlist::new();
        let a = input_word(&mut nl, "a", 16, Signedness::Signed).unwrap();
        let b = input_word(&mut nl, "b", 16, Signedness::Signed).unwrap();
        let p = build_signed_multiplier_16x16(&mut nl, &a, &b).unwrap();
        assert_eq!(p.width(), 32);
        let check = |x: i64, y: i64| {
            let values = nl
                .evaluate(&input_assignment(
                    &nl,
                    &[(&a, (x as u64) & 0xffff), (&b, (y as u64) & 0xffff)],
                ))
                .unwrap();
            assert_eq!(word_value_signed(&values, &p), x * y, "{x} * {y}");
        };
        check(-1, -1);
        check(-32768, 1);
        check(-32768, -32768);
        check(32767, -32768);
        check(0, -12345);
        let mut rng = crate::rng::SplitMix64::new(55);
        for _ in 0..500 {
            let x = rng.next_below(1 << 16) as i64 - 32768;
            let y = rng.next_below(1 << 16) as i64 - 32768;
            check(x, y);
        }
    }

    #[test]
    fn building_twice_yields_identical_structure() {
        let build = || {
            let mut nl = Netlist::new();
            let a = input_word(&mut nl, "a", 16, Signedness::Unsigned).unwrap();
            let b = input_word(&mut nl, "b", 16, Signedness::Unsigned).unwrap();
            let _ = build_vedic_multiplier(&mut nl, &a, &b).unwrap();
            nl
        };
        let first = build();
        let second = build();
        assert_eq!(first.gates(), second.gates());
        assert_eq!(first.cells(), second.cells());
    }

    #[test]
    fn width_checks_are_enforced() {
        let mut nl = Netlist::new();
        let a = input_word(&mut nl, "a", 4, Signedness::Unsigned).unwrap();
        let b = input_word(&mut nl, "b", 8, Signedness::Unsigned).unwrap();
        assert!(matches!(
            build_vedic_multiplier(&mut nl, &a, &b),
            Err(ArithError::WidthMismatch(..))
        ));
        let c = input_word(&mut nl, "c", 8, Signedness::Unsigned).unwrap();
        assert!(matches!(
            build_vedic_4x4(&mut nl, &c, &c),
            Err(ArithError::WidthMismatch(..))
        ));
        assert!(matches!(
            build_csa_tree(&mut nl, &[]),
            Err(ArithError::EmptyOperands)
        ));
    }
}
