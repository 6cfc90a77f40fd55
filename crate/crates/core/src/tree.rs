//! Geometry and addressing of the rooted binary tree.
//!
//! Vertices are addressed by finite bit strings: the root is the empty string
//! (rendered `"r"`), and the two children of `v` are `v0` and `v1`. The cell
//! of `v` is the overlapping triple `{v, v0, v1}`. Spheres and balls are
//! ordered lexicographically within each level, and that order drives all
//! iteration and file output.

use std::fmt;

use crate::error::{domain, Error, Result};

/// Branching order of the tree. The exact machinery is specific to binary
/// trees (cells of size 3); only the order-k moment formulas in `perco`
/// accept a general k.
pub const TREE_ORDER: usize = 2;

/// A vertex address: the sequence of branch choices from the root.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexAddress {
    bits: Vec<u8>,
}

impl VertexAddress {
    pub fn root() -> Self {
        VertexAddress { bits: Vec::new() }
    }

    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(domain!("vertex address bits must be 0 or 1"));
        }
        Ok(VertexAddress { bits })
    }

    /// Vertex at `level` with lexicographic index `index` (0-based).
    pub fn from_level_index(level: usize, index: u64) -> Result<Self> {
        if level < 64 && index >= (1u64 << level) {
            return Err(domain!("index {index} out of range at level {level}"));
        }
        let bits = (0..level)
            .map(|i| ((index >> (level - 1 - i)) & 1) as u8)
            .collect();
        Ok(VertexAddress { bits })
    }

    /// Parse the canonical rendering: `"r"` for the root, else a bit string.
    pub fn parse(s: &str) -> Result<Self> {
        if s == "r" {
            return Ok(Self::root());
        }
        if s.is_empty() {
            return Err(Error::Parse("empty vertex address".into()));
        }
        let bits: Vec<u8> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::Parse(format!("invalid address character {c:?}"))),
            })
            .collect::<Result<_>>()?;
        Ok(VertexAddress { bits })
    }

    pub fn is_root(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn level(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Lexicographic index within `sphere(level)`.
    pub fn index(&self) -> u64 {
        self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn child(&self, bit: u8) -> Result<Self> {
        if bit > 1 {
            return Err(domain!("child bit must be 0 or 1"));
        }
        let mut bits = self.bits.clone();
        bits.push(bit);
        Ok(VertexAddress { bits })
    }

    pub fn children(&self) -> (Self, Self) {
        let mut left = self.bits.clone();
        left.push(0);
        let mut right = self.bits.clone();
        right.push(1);
        (VertexAddress { bits: left }, VertexAddress { bits: right })
    }

    pub fn parent(&self) -> Result<Self> {
        if self.is_root() {
            return Err(Error::RootHasNoParent);
        }
        let mut bits = self.bits.clone();
        bits.pop();
        Ok(VertexAddress { bits })
    }

    /// Sibling: the other child of the parent.
    pub fn sibling(&self) -> Result<Self> {
        let last = *self.bits.last().ok_or(Error::RootHasNoParent)?;
        let mut bits = self.bits.clone();
        *bits.last_mut().unwrap() = 1 - last;
        Ok(VertexAddress { bits })
    }

    /// The overlapping cell `{v, v0, v1}`.
    pub fn cell(&self) -> [Self; 3] {
        let (l, r) = self.children();
        [self.clone(), l, r]
    }
}

impl fmt::Display for VertexAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_root() {
            return write!(f, "r");
        }
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for VertexAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VertexAddress({self})")
    }
}

/// All vertices at distance exactly `r` from the root, lexicographic order.
pub fn sphere(r: usize) -> Vec<VertexAddress> {
    (0..(1u64 << r))
        .map(|i| VertexAddress::from_level_index(r, i).expect("index in range"))
        .collect()
}

/// All vertices at distance at most `r`, level by level, lexicographic within
/// each level.
pub fn ball(r: usize) -> Vec<VertexAddress> {
    let mut out = Vec::with_capacity(ball_size(r));
    for k in 0..=r {
        out.extend(sphere(k));
    }
    out
}

pub fn sphere_size(r: usize) -> usize {
    1usize << r
}

pub fn ball_size(r: usize) -> usize {
    (1usize << (r + 1)) - 1
}

/// Offset of level `l` inside the flat ball ordering.
pub fn level_offset(l: usize) -> usize {
    (1usize << l) - 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_children() {
        let (a, b) = VertexAddress::root().children();
        assert_eq!(a.to_string(), "0");
        assert_eq!(b.to_string(), "1");
        assert_eq!(a.level(), 1);
    }

    #[test]
    fn suffix_append() {
        let v = VertexAddress::parse("01").unwrap();
        let (a, b) = v.children();
        assert_eq!(a.to_string(), "010");
        assert_eq!(b.to_string(), "011");
        assert_eq!(VertexAddress::parse("010").unwrap().level(), 3);
    }

    #[test]
    fn parent_drops_last_bit() {
        assert_eq!(
            VertexAddress::parse("010").unwrap().parent().unwrap(),
            VertexAddress::parse("01").unwrap()
        );
        assert!(VertexAddress::parse("0").unwrap().parent().unwrap().is_root());
        assert!(matches!(
            VertexAddress::root().parent(),
            Err(Error::RootHasNoParent)
        ));
    }

    #[test]
    fn cells() {
        let root_cell = VertexAddress::root().cell();
        let names: Vec<String> = root_cell.iter().map(|v| v.to_string()).collect();
        assert_eq!(names, ["r", "0", "1"]);

        let c0 = VertexAddress::parse("0").unwrap().cell();
        let names: Vec<String> = c0.iter().map(|v| v.to_string()).collect();
        assert_eq!(names, ["0", "00", "01"]);
    }

    #[test]
    fn neighboring_cells_overlap_in_one_vertex() {
        let v = VertexAddress::parse("01").unwrap();
        let v0 = v.child(0).unwrap();
        let a = v.cell();
        let b = v0.cell();
        let common: Vec<_> = a.iter().filter(|x| b.contains(x)).collect();
        assert_eq!(common, vec![&v0]);
    }

    #[test]
    fn sphere_and_ball_sizes() {
        assert_eq!(sphere(0), vec![VertexAddress::root()]);
        assert_eq!(sphere(3).len(), 8);
        assert_eq!(ball(3).len(), 15);
    }

    #[test]
    fn ball_is_union_of_spheres_in_order() {
        let b = ball(2);
        let expected: Vec<String> = ["r", "0", "1", "00", "01", "10", "11"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let got: Vec<String> = b.iter().map(|v| v.to_string()).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn render_parse_round_trip() {
        for v in ball(4) {
            assert_eq!(VertexAddress::parse(&v.to_string()).unwrap(), v);
        }
    }

    #[test]
    fn index_round_trip() {
        for v in ball(5) {
            let w = VertexAddress::from_level_index(v.level(), v.index()).unwrap();
            assert_eq!(v, w);
        }
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(VertexAddress::parse("").is_err());
        assert!(VertexAddress::parse("012").is_err());
        assert!(VertexAddress::parse("rr").is_err());
    }
}
