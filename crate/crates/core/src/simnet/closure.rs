//! Bounded Dolev-Yao knowledge closure over concrete bit strings.
//!
//! Rules:
//! - XOR of any derivable terms. The XOR closure is a GF(2) span and is kept
//!   as a reduced basis, so it is saturated exactly at every level.
//! - Hash of a concatenation of derivable terms. Candidate preimages are the
//!   hash evaluations the protocol itself performed (the [`Algebra`]). Any
//!   other input hashes to a value unrelated to every protocol term, so no
//!   protocol value is lost by this restriction.
//! - Slicing at field boundaries happens when messages are learned, see
//!   [`AdversaryKnowledge::learn_message`].
//!
//! `depth` bounds the number of hash layers. Terms up to 192 bits take part
//! in XOR; narrower terms are zero-extended on the left, matching
//! [`BitString::xor`]. Wider terms are matched exactly.
//!
//! Non-membership is an engineering proxy for "infeasible to derive", not a
//! proof.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::primitives::{concat, hash, BitString, HashRecord};
use crate::wire::WireMessage;

const LANE_BITS: usize = 192;
type Lane = [u64; 3];

fn to_lane(v: &BitString) -> Option<Lane> {
    if v.width() > LANE_BITS {
        return None;
    }
    let wide = v.widen(LANE_BITS);
    let b = wide.as_bytes();
    let word = |i: usize| u64::from_be_bytes(b[i * 8..i * 8 + 8].try_into().unwrap());
    Some([word(0), word(1), word(2)])
}

fn top_bit(l: &Lane) -> Option<usize> {
    l.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.leading_zeros() as usize)
}

fn xor_lane(a: &mut Lane, b: &Lane) {
    for i in 0..3 {
        a[i] ^= b[i];
    }
}

/// Set of atom indices, as a bitset.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Combo(Vec<u64>);

impl Combo {
    fn single(i: usize) -> Combo {
        let mut c = Combo::default();
        c.toggle(i);
        c
    }

    fn toggle(&mut self, i: usize) {
        if self.0.len() <= i / 64 {
            self.0.resize(i / 64 + 1, 0);
        }
        self.0[i / 64] ^= 1 << (i % 64);
    }

    fn xor(&mut self, o: &Combo) {
        if self.0.len() < o.0.len() {
            self.0.resize(o.0.len(), 0);
        }
        for (a, b) in self.0.iter_mut().zip(&o.0) {
            *a ^= b;
        }
    }

    fn members(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (wi, w) in self.0.iter().enumerate() {
            for b in 0..64 {
                if w & (1 << b) != 0 {
                    out.push(wi * 64 + b);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default)]
struct XorBasis {
    /// pivot bit -> (reduced vector, atoms that XOR to it)
    rows: BTreeMap<usize, (Lane, Combo)>,
}

impl XorBasis {
    fn reduce(&self, mut v: Lane) -> (Lane, Combo) {
        let mut combo = Combo::default();
        while let Some(p) = top_bit(&v) {
            match self.rows.get(&p) {
                Some((row, c)) => {
                    xor_lane(&mut v, row);
                    combo.xor(c);
                }
                None => break,
            }
        }
        (v, combo)
    }

    fn insert(&mut self, v: Lane, atom: usize) -> bool {
        let (rest, mut combo) = self.reduce(v);
        match top_bit(&rest) {
            None => false,
            Some(p) => {
                combo.toggle(atom);
                self.rows.insert(p, (rest, combo));
                true
            }
        }
    }

    fn represent(&self, v: &Lane) -> Option<Combo> {
        let (rest, combo) = self.reduce(*v);
        top_bit(&rest).is_none().then_some(combo)
    }
}

/// Terms the adversary holds, each with a label for derivation traces.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AdversaryKnowledge {
    terms: Vec<(String, BitString)>,
}

impl AdversaryKnowledge {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn learn(&mut self, label: impl Into<String>, value: BitString) {
        self.terms.push((label.into(), value));
    }

    /// Learns the encoded message and each of its fields.
    pub fn learn_message<M: WireMessage>(&mut self, label: &str, msg: &M) {
        if let Ok(raw) = msg.encode() {
            self.learn_sliced(label, &raw, M::LAYOUT);
        }
    }

    /// Learns `raw` and its slices at the given field boundaries.
    pub fn learn_sliced(&mut self, label: &str, raw: &BitString, layout: &[(&str, usize)]) {
        self.learn(label, raw.clone());
        let mut offset = 0;
        for (name, width) in layout {
            if offset + width > raw.width() {
                break;
            }
            self.learn(format!("{label}.{name}"), raw.slice(offset, *width));
            offset += width;
        }
    }

    pub fn extend(&mut self, other: &AdversaryKnowledge) {
        self.terms.extend(other.terms.iter().cloned());
    }

    pub fn terms(&self) -> &[(String, BitString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Hash evaluations available as candidate preimages.
#[derive(Debug, Clone, Default)]
pub struct Algebra {
    records: Vec<HashRecord>,
    outputs: BTreeSet<BitString>,
}

impl Algebra {
    pub fn new(records: impl IntoIterator<Item = HashRecord>) -> Algebra {
        let mut a = Algebra::default();
        a.extend(records);
        a
    }

    pub fn extend(&mut self, records: impl IntoIterator<Item = HashRecord>) {
        for r in records {
            if self.outputs.insert(r.output.clone()) {
                self.records.push(r);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone)]
enum Origin {
    Known(String),
    Hash { parts: Vec<(BitString, Combo)> },
}

#[derive(Debug, Clone)]
struct Atom {
    value: BitString,
    origin: Origin,
    level: usize,
}

/// Result of [`closure`]: the generating atoms plus their XOR span.
#[derive(Debug, Clone)]
pub struct Closure {
    atoms: Vec<Atom>,
    basis: XorBasis,
    depth: usize,
}

/// Computes the closure of `knowledge` with at most `depth` hash layers.
pub fn closure(knowledge: &AdversaryKnowledge, algebra: &Algebra, depth: usize) -> Closure {
    let mut c = Closure {
        atoms: Vec::new(),
        basis: XorBasis::default(),
        depth,
    };
    for (label, value) in &knowledge.terms {
        c.add_atom(value.clone(), Origin::Known(label.clone()), 0);
    }
    let mut pending: Vec<&HashRecord> = algebra.records.iter().collect();
    for level in 1..=depth {
        let mut fired = Vec::new();
        pending.retain(|rec| {
            if c.contains(&rec.output) {
                return false;
            }
            let parts: Option<Vec<_>> = rec
                .parts
                .iter()
                .map(|p| c.represent(p).map(|combo| (p.clone(), combo)))
                .collect();
            match parts {
                Some(parts) => {
                    fired.push((rec.output.clone(), parts));
                    false
                }
                None => true,
            }
        });
        if fired.is_empty() {
            break;
        }
        for (output, parts) in fired {
            if !c.contains(&output) {
                c.add_atom(output, Origin::Hash { parts }, level);
            }
        }
    }
    c
}

impl Closure {
    fn add_atom(&mut self, value: BitString, origin: Origin, level: usize) {
        let idx = self.atoms.len();
        let lane = to_lane(&value);
        self.atoms.push(Atom {
            value,
            origin,
            level,
        });
        if let Some(l) = lane {
            self.basis.insert(l, idx);
        }
    }

    fn represent(&self, v: &BitString) -> Option<Combo> {
        match to_lane(v) {
            Some(l) => self.basis.represent(&l),
            None => self
                .atoms
                .iter()
                .position(|a| a.value == *v)
                .map(Combo::single),
        }
    }

    /// Whether `v` is derivable.
    pub fn contains(&self, v: &BitString) -> bool {
        self.represent(v).is_some()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Known terms plus every hash output derived; the closure is their XOR
    /// span.
    pub fn generators(&self) -> impl Iterator<Item = &BitString> {
        self.atoms.iter().map(|a| &a.value)
    }

    /// Hash layers needed to reach `v`, if derivable.
    pub fn level_of(&self, v: &BitString) -> Option<usize> {
        let combo = self.represent(v)?;
        Some(
            combo
                .members()
                .iter()
                .map(|&i| self.atoms[i].level)
                .max()
                .unwrap_or(0),
        )
    }

    /// A replayable trace deriving `v` from the initial knowledge.
    pub fn derive(&self, v: &BitString) -> Option<Derivation> {
        let combo = self.represent(v)?;
        let mut builder = TraceBuilder {
            closure: self,
            steps: Vec::new(),
            atom_step: BTreeMap::new(),
        };
        builder.value(v, &combo);
        Some(Derivation {
            steps: builder.steps,
        })
    }
}

struct TraceBuilder<'a> {
    closure: &'a Closure,
    steps: Vec<Step>,
    atom_step: BTreeMap<usize, usize>,
}

impl TraceBuilder<'_> {
    fn push(&mut self, value: BitString, rule: Rule) -> usize {
        self.steps.push(Step { value, rule });
        self.steps.len() - 1
    }

    fn atom(&mut self, idx: usize) -> usize {
        if let Some(&s) = self.atom_step.get(&idx) {
            return s;
        }
        let atom = &self.closure.atoms[idx];
        let step = match &atom.origin {
            Origin::Known(label) => self.push(
                atom.value.clone(),
                Rule::Known {
                    label: label.clone(),
                },
            ),
            Origin::Hash { parts } => {
                let inputs = parts.iter().map(|(p, c)| self.value(p, c)).collect();
                self.push(atom.value.clone(), Rule::Hash { parts: inputs })
            }
        };
        self.atom_step.insert(idx, step);
        step
    }

    fn value(&mut self, v: &BitString, combo: &Combo) -> usize {
        let operands: Vec<usize> = combo.members().into_iter().map(|i| self.atom(i)).collect();
        let joined = match operands.as_slice() {
            [single] => *single,
            _ => {
                let value = operands
                    .iter()
                    .fold(BitString::empty(), |acc, &s| acc.xor(&self.steps[s].value));
                self.push(value, Rule::Xor { operands })
            }
        };
        if self.steps[joined].value == *v {
            joined
        } else {
            self.push(v.clone(), Rule::Fit { from: joined })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    Known {
        label: String,
    },
    Xor {
        operands: Vec<usize>,
    },
    Hash {
        parts: Vec<usize>,
    },
    /// Change of width by adding or removing leading zero bits.
    Fit {
        from: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub value: BitString,
    #[serde(flatten)]
    pub rule: Rule,
}

/// Steps in dependency order; the last step is the derived term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    pub steps: Vec<Step>,
}

impl Derivation {
    pub fn result(&self) -> Option<&BitString> {
        self.steps.last().map(|s| &s.value)
    }

    pub fn hash_layers(&self) -> usize {
        let mut layer = vec![0usize; self.steps.len()];
        for (i, s) in self.steps.iter().enumerate() {
            layer[i] = match &s.rule {
                Rule::Known { .. } => 0,
                Rule::Xor { operands } => operands.iter().map(|&o| layer[o]).max().unwrap_or(0),
                Rule::Hash { parts } => 1 + parts.iter().map(|&o| layer[o]).max().unwrap_or(0),
                Rule::Fit { from } => layer[*from],
            };
        }
        layer.last().copied().unwrap_or(0)
    }

    /// Re-executes every step against `knowledge`, independently of the
    /// closure that produced the trace.
    pub fn verify(&self, knowledge: &AdversaryKnowledge) -> bool {
        for (i, step) in self.steps.iter().enumerate() {
            let earlier = |j: &usize| *j < i;
            let ok = match &step.rule {
                Rule::Known { label } => knowledge
                    .terms
                    .iter()
                    .any(|(l, v)| l == label && *v == step.value),
                Rule::Xor { operands } => {
                    operands.iter().all(earlier)
                        && operands
                            .iter()
                            .fold(BitString::empty(), |acc, &o| acc.xor(&self.steps[o].value))
                            == step.value
                }
                Rule::Hash { parts } => {
                    parts.iter().all(earlier)
                        && *hash(&concat(parts.iter().map(|&p| &self.steps[p].value))).bits()
                            == step.value
                }
                Rule::Fit { from } => {
                    earlier(from) && {
                        let src = &self.steps[*from].value;
                        let w = src.width().max(step.value.width());
                        src.widen(w) == step.value.widen(w)
                    }
                }
            };
            if !ok {
                return false;
            }
        }
        !self.steps.is_empty()
    }
}

/// A derivation step without its value, for compact reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    #[serde(flatten)]
    pub rule: Rule,
    pub width: usize,
}

impl Derivation {
    pub fn skeleton(&self) -> Vec<TraceStep> {
        self.steps
            .iter()
            .map(|s| TraceStep {
                rule: s.rule.clone(),
                width: s.value.width(),
            })
            .collect()
    }
}

/// Recomputes the value a skeleton derives, looking known terms up by label.
pub fn replay_skeleton(steps: &[TraceStep], knowledge: &AdversaryKnowledge) -> Option<BitString> {
    let mut values: Vec<BitString> = Vec::with_capacity(steps.len());
    for (i, step) in steps.iter().enumerate() {
        let get = |j: &usize| (*j < i).then(|| &values[*j]);
        let v = match &step.rule {
            Rule::Known { label } => knowledge
                .terms
                .iter()
                .find(|(l, _)| l == label)
                .map(|(_, v)| v.clone())?,
            Rule::Xor { operands } => {
                let mut acc = BitString::empty();
                for o in operands {
                    acc = acc.xor(get(o)?);
                }
                acc
            }
            Rule::Hash { parts } => {
                let parts: Option<Vec<&BitString>> = parts.iter().map(get).collect();
                hash(&concat(parts?)).into_bits()
            }
            Rule::Fit { from } => {
                let src = get(from)?;
                if src.width() <= step.width {
                    src.widen(step.width)
                } else if src.has_zero_prefix(src.width() - step.width) {
                    src.slice(src.width() - step.width, step.width)
                } else {
                    return None;
                }
            }
        };
        if v.width() != step.width {
            return None;
        }
        values.push(v);
    }
    values.pop()
}
