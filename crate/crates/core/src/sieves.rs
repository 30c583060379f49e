//! Sieves: chains of interval partitions `E_0 ⊂ … ⊂ E_k` of `{0..n}`,
//! from discrete to indiscrete.
//!
//! A sieve is stored by the level at which each gap `(i, i+1)` is first
//! crossed; levels are then recovered by splitting at every gap whose merge
//! level exceeds the level index.
//!
//! The parenthesis form omits the outermost pair and any pair equal to its
//! only child. When parsing, a pair sits at one level above its highest
//! child, and the top level is the given depth. Where a block first forms
//! later than that rule predicts, its first highest child gets explicit
//! wrapping pairs.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::series::laurent::ExpansionOrder;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sieve {
    depth: u32,
    merge: Vec<u32>,
}

/// An interval partition as the exclusive end of each block.
pub type Level = Vec<usize>;

impl Sieve {
    pub fn from_merge_levels(depth: u32, merge: Vec<u32>) -> Result<Self> {
        if merge.iter().any(|&m| m == 0 || m > depth) {
            return Err(Error::InvalidSieve(format!(
                "merge levels {merge:?} must lie in 1..={depth}"
            )));
        }
        Ok(Sieve { depth, merge })
    }

    /// From explicit levels `E_0..E_k`, each a list of blocks.
    pub fn from_levels(width: usize, levels: &[Vec<Vec<usize>>]) -> Result<Self> {
        if width == 0 || levels.is_empty() {
            return Err(Error::InvalidSieve("empty sieve".into()));
        }
        let bad = |m: String| Err(Error::InvalidSieve(m));
        let mut ends: Vec<Level> = Vec::new();
        for (m, lvl) in levels.iter().enumerate() {
            let mut next = 0;
            let mut e = Vec::new();
            for block in lvl {
                if block.is_empty() || block[0] != next {
                    return bad(format!("level {m} is not an ordered interval partition"));
                }
                if block.windows(2).any(|w| w[1] != w[0] + 1) {
                    return bad(format!("level {m} has a non-interval block"));
                }
                next = block[block.len() - 1] + 1;
                e.push(next);
            }
            if next != width {
                return bad(format!("level {m} does not cover 0..{width}"));
            }
            ends.push(e);
        }
        let k = levels.len() - 1;
        if ends[0].len() != width {
            return bad("first level must be discrete".into());
        }
        if ends[k].len() != 1 {
            return bad("last level must be indiscrete".into());
        }
        for m in 1..=k {
            if !ends[m].iter().all(|e| ends[m - 1].contains(e)) {
                return bad(format!("level {m} does not coarsen level {}", m - 1));
            }
        }
        let merge = (0..width - 1)
            .map(|g| (1..=k).find(|&m| !ends[m].contains(&(g + 1))).unwrap() as u32)
            .collect();
        Ok(Sieve {
            depth: k as u32,
            merge,
        })
    }

    pub fn width(&self) -> usize {
        self.merge.len() + 1
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn merge_levels(&self) -> &[u32] {
        &self.merge
    }

    /// Block ends of `E_m`.
    pub fn level(&self, m: u32) -> Level {
        let n = self.width();
        let mut ends: Level = (0..n - 1).filter(|&g| self.merge[g] > m).map(|g| g + 1).collect();
        ends.push(n);
        ends
    }

    pub fn levels(&self) -> Vec<Level> {
        (0..=self.depth).map(|m| self.level(m)).collect()
    }

    /// `self` refines `other` when every level of `other` is a level of `self`.
    pub fn refines(&self, other: &Sieve) -> bool {
        if self.width() != other.width() {
            return false;
        }
        let mine: BTreeSet<Level> = self.levels().into_iter().collect();
        other.levels().iter().all(|l| mine.contains(l))
    }

    /// Blocks of `E_m` lying inside `[lo, hi)`.
    fn blocks_within(&self, m: u32, lo: usize, hi: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = lo;
        for g in lo..hi - 1 {
            if self.merge[g] > m {
                out.push((start, g + 1));
                start = g + 1;
            }
        }
        out.push((start, hi));
        out
    }

    fn render_node(&self, lo: usize, hi: usize, m: u32) -> (String, u32) {
        if m == 0 {
            return ("•".into(), 0);
        }
        let children = self.blocks_within(m - 1, lo, hi);
        if children.len() == 1 {
            return self.render_node(lo, hi, m - 1);
        }
        let mut parts: Vec<(String, u32)> = children
            .iter()
            .map(|&(a, b)| self.render_node(a, b, m - 1))
            .collect();
        let top = parts.iter().map(|p| p.1).max().unwrap();
        if top < m - 1 {
            let idx = parts.iter().position(|p| p.1 == top).unwrap();
            let (s, l) = &mut parts[idx];
            for _ in *l..m - 1 {
                *s = format!("({s})");
            }
            *l = m - 1;
        }
        let inner: String = parts.into_iter().map(|p| p.0).collect();
        (format!("({inner})"), m)
    }

    /// Parenthesis form with `•` for points.
    pub fn render(&self) -> String {
        if self.depth == 0 {
            return "•".into();
        }
        self.blocks_within(self.depth - 1, 0, self.width())
            .into_iter()
            .map(|(a, b)| self.render_node(a, b, self.depth - 1).0)
            .collect()
    }

    pub fn parse(s: &str, depth: u32) -> Result<Self> {
        let nodes = parse_seq(&mut s.chars().filter(|c| !c.is_whitespace()).peekable(), false)?;
        let width: usize = nodes.iter().map(Node::width).sum();
        if width == 0 {
            return Err(Error::Parse("no points".into()));
        }
        let mut merge = vec![0u32; width - 1];
        let mut pos = 0;
        let levels: Vec<u32> = nodes.iter().map(Node::level).collect();
        let limit = if nodes.len() == 1 { depth } else { depth.saturating_sub(1) };
        if depth == 0 && width > 1 || levels.iter().any(|&l| l > limit) {
            return Err(Error::Parse(format!("`{s}` does not fit depth {depth}")));
        }
        for (k, n) in nodes.iter().enumerate() {
            n.assign(pos, &mut merge);
            pos += n.width();
            if k + 1 < nodes.len() {
                merge[pos - 1] = depth;
            }
        }
        Sieve::from_merge_levels(depth, merge)
    }

    /// Graft `ps` onto the points of `q`.
    pub fn compose(q: &Sieve, ps: &[Sieve]) -> Result<Self> {
        if ps.len() != q.width() {
            return Err(Error::InvalidSieve(format!(
                "{} sieves for a width-{} sieve",
                ps.len(),
                q.width()
            )));
        }
        let dp = ps[0].depth;
        if ps.iter().any(|p| p.depth != dp) {
            return Err(Error::InvalidSieve("grafted sieves differ in depth".into()));
        }
        let mut merge = Vec::new();
        for (i, p) in ps.iter().enumerate() {
            merge.extend_from_slice(&p.merge);
            if i + 1 < ps.len() {
                merge.push(dp + q.merge[i]);
            }
        }
        Sieve::from_merge_levels(q.depth + dp, merge)
    }

    /// All sieves of the given width and depth.
    pub fn enumerate(width: usize, depth: u32) -> Vec<Sieve> {
        if width == 0 {
            return Vec::new();
        }
        let mut out = vec![Vec::new()];
        for _ in 0..width - 1 {
            let mut next = Vec::new();
            for prefix in &out {
                for m in 1..=depth {
                    let mut p: Vec<u32> = prefix.clone();
                    p.push(m);
                    next.push(p);
                }
            }
            out = next;
        }
        out.into_iter()
            .map(|merge| Sieve { depth, merge })
            .collect()
    }

    /// The expansion order: points joined at the lowest level keep their
    /// mutual differences, and a completed block sits inside the single
    /// points it later joins. Blocks with two or more composite children
    /// are not supported.
    pub fn expansion_order(&self) -> Result<ExpansionOrder> {
        let n = self.width();
        let mut rank = vec![0u32; n];
        let mut kept = BTreeSet::new();
        self.assign_ranks(0, n, self.depth, 0, &mut rank, &mut kept)?;
        ExpansionOrder::new(rank, kept)
    }

    fn assign_ranks(
        &self,
        lo: usize,
        hi: usize,
        m: u32,
        base: u32,
        rank: &mut [u32],
        kept: &mut BTreeSet<(usize, usize)>,
    ) -> Result<()> {
        if hi - lo == 1 || m == 0 {
            rank[lo] = base;
            return Ok(());
        }
        let children = self.blocks_within(m - 1, lo, hi);
        if children.len() == 1 {
            return self.assign_ranks(lo, hi, m - 1, base, rank, kept);
        }
        let composite: Vec<(usize, usize)> =
            children.iter().copied().filter(|(a, b)| b - a > 1).collect();
        match composite.as_slice() {
            [] => {
                for i in lo..hi {
                    rank[i] = base;
                    for j in i + 1..hi {
                        kept.insert((i, j));
                    }
                }
            }
            [(a, b)] => {
                for i in lo..hi {
                    rank[i] = base;
                }
                self.assign_ranks(*a, *b, m - 1, base + 1, rank, kept)?;
            }
            _ => {
                return Err(Error::UnsupportedExpansion(format!(
                    "block {lo}..{hi} of {} has several composite children",
                    self.render()
                )))
            }
        }
        Ok(())
    }
}

impl fmt::Display for Sieve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

enum Node {
    Leaf,
    Pair(Vec<Node>),
}

impl Node {
    fn width(&self) -> usize {
        match self {
            Node::Leaf => 1,
            Node::Pair(c) => c.iter().map(Node::width).sum(),
        }
    }

    fn level(&self) -> u32 {
        match self {
            Node::Leaf => 0,
            Node::Pair(c) => 1 + c.iter().map(Node::level).max().unwrap_or(0),
        }
    }

    fn assign(&self, start: usize, merge: &mut [u32]) {
        if let Node::Pair(children) = self {
            let lvl = self.level();
            let mut pos = start;
            for (k, c) in children.iter().enumerate() {
                c.assign(pos, merge);
                pos += c.width();
                if k + 1 < children.len() {
                    merge[pos - 1] = lvl;
                }
            }
        }
    }
}

fn parse_seq(
    it: &mut std::iter::Peekable<impl Iterator<Item = char>>,
    nested: bool,
) -> Result<Vec<Node>> {
    let mut out = Vec::new();
    loop {
        match it.next() {
            Some('•') | Some('*') | Some('.') => out.push(Node::Leaf),
            Some('(') => {
                let inner = parse_seq(it, true)?;
                if inner.is_empty() {
                    return Err(Error::Parse("empty parentheses".into()));
                }
                out.push(Node::Pair(inner));
            }
            Some(')') if nested => return Ok(out),
            None if !nested => return Ok(out),
            Some(c) => return Err(Error::Parse(format!("unexpected `{c}`"))),
            None => return Err(Error::Parse("unbalanced parentheses".into())),
        }
    }
}
