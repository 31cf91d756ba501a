//! Bit coverage over formula nodes.
//!
//! Nodes are numbered in pre-order (formula nodes and term nodes alike,
//! every occurrence counted). A Bool node owns 1 bit, an Int node the low 64
//! bits of its two's-complement value, an array node none. A bit is covered
//! once it has been seen both as 0 and as 1.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::formula::{Formula, Sort, Term};
use crate::model::{eval_formula, eval_int, Model};

pub const MAGIC: &[u8; 7] = b"MGACOV1";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NodeMask {
    /// 0, 1 or 64.
    pub width: u8,
    pub seen_zero: u64,
    pub seen_one: u64,
}

impl NodeMask {
    fn full(&self) -> u64 {
        match self.width {
            0 => 0,
            64 => u64::MAX,
            w => (1u64 << w) - 1,
        }
    }

    fn record(&mut self, bits: u64) {
        let full = self.full();
        self.seen_one |= bits & full;
        self.seen_zero |= !bits & full;
    }

    pub fn covered(&self) -> u64 {
        self.seen_zero & self.seen_one
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoverageBitmap {
    pub nodes: Vec<NodeMask>,
}

/// Low 64 bits of the two's-complement representation.
pub fn low_bits(v: &BigInt) -> u64 {
    let bytes = v.to_signed_bytes_le();
    let fill = if v.sign() == num_bigint::Sign::Minus { 0xff } else { 0 };
    let mut buf = [fill; 8];
    for (b, x) in buf.iter_mut().zip(&bytes) {
        *b = *x;
    }
    u64::from_le_bytes(buf)
}

fn term_width(t: &Term) -> u8 {
    match t.sort() {
        Sort::Int => 64,
        Sort::Bool => 1,
        Sort::Array => 0,
    }
}

fn widths_formula(f: &Formula, out: &mut Vec<NodeMask>) {
    out.push(NodeMask {
        width: 1,
        ..NodeMask::default()
    });
    match f {
        Formula::Atom(_, l, r) => {
            widths_term(l, out);
            widths_term(r, out);
        }
        Formula::Distinct(ts) => ts.iter().for_each(|t| widths_term(t, out)),
        _ => f.children().into_iter().for_each(|c| widths_formula(c, out)),
    }
}

fn widths_term(t: &Term, out: &mut Vec<NodeMask>) {
    out.push(NodeMask {
        width: term_width(t),
        ..NodeMask::default()
    });
    if let Term::Ite(c, a, b) = t {
        widths_formula(c, out);
        widths_term(a, out);
        widths_term(b, out);
    } else {
        t.children().into_iter().for_each(|c| widths_term(c, out));
    }
}

impl CoverageBitmap {
    /// An empty bitmap with one entry per node of `f`.
    pub fn for_formula(f: &Formula) -> Self {
        let mut nodes = Vec::new();
        widths_formula(f, &mut nodes);
        CoverageBitmap { nodes }
    }

    /// Evaluates every node of `f` under `s` and records its bits.
    pub fn record_sample(&mut self, f: &Formula, s: &Model) -> Result<()> {
        let len = self.nodes.len();
        let mut w = Walker {
            bm: self,
            next: 0,
            m: s,
        };
        w.formula(f)?;
        if w.next != len {
            return Err(Error::BitmapMismatch(format!(
                "formula has {} nodes, bitmap {len}",
                w.next
            )));
        }
        Ok(())
    }

    pub fn total_bits(&self) -> u64 {
        self.nodes.iter().map(|n| n.width as u64).sum()
    }

    pub fn covered_bits(&self) -> u64 {
        self.nodes.iter().map(|n| n.covered().count_ones() as u64).sum()
    }

    /// Covered bits over total bits; 0 for a bitmap without bits.
    pub fn raw_coverage(&self) -> f64 {
        match self.total_bits() {
            0 => 0.0,
            t => self.covered_bits() as f64 / t as f64,
        }
    }

    fn check_shape(&self, other: &CoverageBitmap) -> Result<()> {
        let same = self.nodes.len() == other.nodes.len()
            && self.nodes.iter().zip(&other.nodes).all(|(a, b)| a.width == b.width);
        if same {
            Ok(())
        } else {
            Err(Error::BitmapMismatch("bitmaps describe different formulas".into()))
        }
    }

    pub fn merge(&mut self, other: &CoverageBitmap) -> Result<()> {
        self.check_shape(other)?;
        for (a, b) in self.nodes.iter_mut().zip(&other.nodes) {
            a.seen_zero |= b.seen_zero;
            a.seen_one |= b.seen_one;
        }
        Ok(())
    }

    /// Bits covered by at least one input.
    pub fn covered_union(maps: &[&CoverageBitmap]) -> Result<u64> {
        let Some(first) = maps.first() else { return Ok(0) };
        let mut covered: Vec<u64> = first.nodes.iter().map(NodeMask::covered).collect();
        for m in &maps[1..] {
            first.check_shape(m)?;
            for (c, n) in covered.iter_mut().zip(&m.nodes) {
                *c |= n.covered();
            }
        }
        Ok(covered.iter().map(|c| c.count_ones() as u64).sum())
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.nodes.len() as u64).to_le_bytes())?;
        for n in &self.nodes {
            w.write_all(&[n.width])?;
            w.write_all(&n.seen_zero.to_le_bytes())?;
            w.write_all(&n.seen_one.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 7];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a coverage bitmap (bad magic)".into()));
        }
        let mut u64buf = [0u8; 8];
        r.read_exact(&mut u64buf)?;
        let count = u64::from_le_bytes(u64buf);
        let mut nodes = Vec::new();
        for _ in 0..count {
            let mut width = [0u8; 1];
            r.read_exact(&mut width)?;
            if !matches!(width[0], 0 | 1 | 64) {
                return Err(Error::Format(format!("bad node width {}", width[0])));
            }
            r.read_exact(&mut u64buf)?;
            let seen_zero = u64::from_le_bytes(u64buf);
            r.read_exact(&mut u64buf)?;
            let seen_one = u64::from_le_bytes(u64buf);
            let mask = if width[0] == 64 {
                u64::MAX
            } else {
                (1u64 << width[0]) - 1
            };
            if (seen_zero | seen_one) & !mask != 0 {
                return Err(Error::Format(format!("mask bits set above node width {}", width[0])));
            }
            nodes.push(NodeMask {
                width: width[0],
                seen_zero,
                seen_one,
            });
        }
        if r.read(&mut [0u8; 1])? != 0 {
            return Err(Error::Format("trailing bytes after coverage bitmap".into()));
        }
        Ok(CoverageBitmap { nodes })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        CoverageBitmap::read_from(&mut BufReader::new(File::open(path)?))
    }
}

/// `covered(mine) / covered(mine ∪ others)`, with 0/0 = 1.
pub fn normalized_coverage(mine: &CoverageBitmap, others: &[CoverageBitmap]) -> Result<f64> {
    let mut all = vec![mine];
    all.extend(others);
    let union = CoverageBitmap::covered_union(&all)?;
    if union == 0 {
        return Ok(1.0);
    }
    Ok(mine.covered_bits() as f64 / union as f64)
}

struct Walker<'a> {
    bm: &'a mut CoverageBitmap,
    next: usize,
    m: &'a Model,
}

impl Walker<'_> {
    fn slot(&mut self) -> Result<usize> {
        let i = self.next;
        if i >= self.bm.nodes.len() {
            return Err(Error::BitmapMismatch("formula has more nodes than the bitmap".into()));
        }
        self.next += 1;
        Ok(i)
    }

    fn formula(&mut self, f: &Formula) -> Result<()> {
        let i = self.slot()?;
        let v = eval_formula(f, self.m)?;
        self.bm.nodes[i].record(v as u64);
        match f {
            Formula::Atom(_, l, r) => {
                self.term(l)?;
                self.term(r)
            }
            Formula::Distinct(ts) => ts.iter().try_for_each(|t| self.term(t)),
            _ => f.children().into_iter().try_for_each(|c| self.formula(c)),
        }
    }

    fn term(&mut self, t: &Term) -> Result<()> {
        let i = self.slot()?;
        if t.sort() == Sort::Int {
            let v = eval_int(t, self.m)?;
            self.bm.nodes[i].record(low_bits(&v));
        }
        if let Term::Ite(c, a, b) = t {
            self.formula(c)?;
            self.term(a)?;
            self.term(b)
        } else {
            t.children().into_iter().try_for_each(|c| self.term(c))
        }
    }
}
