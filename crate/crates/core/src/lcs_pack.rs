//! Sequence pair to packed placement by weighted longest common subsequence.
//!
//! Each coordinate is a longest path in the horizontal (or vertical) constraint
//! graph implied by the sequence pair. Walking `pi` in order and keeping a
//! prefix-maximum tree indexed by `pi'` position gives every coordinate in
//! O(log N), so a full pack is O(N log N).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seqpair::SequencePair;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroShape {
    pub width: f64,
    pub height: f64,
}

impl MacroShape {
    pub fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outline {
    pub width: f64,
    pub height: f64,
}

impl Outline {
    pub fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Square outline with `whitespace` fraction of slack over the total area.
    pub fn square_with_whitespace(total_area: f64, whitespace: f64) -> Self {
        let side = ((1.0 + whitespace) * total_area).sqrt();
        Self::new(side, side)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackResult {
    /// Lower-left corner of each macro, indexed by macro id.
    pub positions: Vec<(f64, f64)>,
    pub packed_width: f64,
    pub packed_height: f64,
}

/// Fenwick tree over prefix maxima. Values only ever grow.
struct MaxTree {
    tree: Vec<f64>,
}

impl MaxTree {
    fn new(n: usize) -> Self {
        Self {
            tree: vec![0.0; n + 1],
        }
    }

    /// Maximum over indices `0..end` (0 when empty).
    fn prefix_max(&self, end: usize) -> f64 {
        let mut i = end;
        let mut best = 0.0f64;
        while i > 0 {
            best = best.max(self.tree[i]);
            i &= i - 1;
        }
        best
    }

    fn raise(&mut self, index: usize, value: f64) {
        let mut i = index + 1;
        while i < self.tree.len() {
            if self.tree[i] < value {
                self.tree[i] = value;
            }
            i += i & i.wrapping_neg();
        }
    }
}

fn check_len(sp: &SequencePair, shapes: &[MacroShape]) -> Result<()> {
    if sp.len() != shapes.len() {
        return Err(Error::invalid(format!(
            "sequence pair has {} macros but {} shapes were given",
            sp.len(),
            shapes.len()
        )));
    }
    Ok(())
}

/// Packs `sp` into the minimal placement: every macro sits as far left and
/// down as its left-of / below predecessors allow.
pub fn pack(sp: &SequencePair, shapes: &[MacroShape]) -> Result<PackResult> {
    check_len(sp, shapes)?;
    let n = shapes.len();
    let mut positions = vec![(0.0, 0.0); n];

    // x: predecessors come earlier in pi and earlier in pi'.
    let mut tree = MaxTree::new(n);
    let mut width = 0.0f64;
    for &b in sp.pi.order() {
        let p = sp.pi_prime.position(b);
        let x = tree.prefix_max(p);
        let right = x + shapes[b].width;
        tree.raise(p, right);
        positions[b].0 = x;
        width = width.max(right);
    }

    // y: macros below b come earlier in pi and later in pi'.
    let mut tree = MaxTree::new(n);
    let mut height = 0.0f64;
    for &b in sp.pi.order() {
        let q = n - 1 - sp.pi_prime.position(b);
        let y = tree.prefix_max(q);
        let top = y + shapes[b].height;
        tree.raise(q, top);
        positions[b].1 = y;
        height = height.max(top);
    }

    Ok(PackResult {
        positions,
        packed_width: width,
        packed_height: height,
    })
}

/// Packed width and height only.
pub fn packed_dims(sp: &SequencePair, shapes: &[MacroShape]) -> Result<(f64, f64)> {
    let r = pack(sp, shapes)?;
    Ok((r.packed_width, r.packed_height))
}

/// Whether the minimal packing fits inside `outline` (inclusive).
pub fn is_feasible(sp: &SequencePair, shapes: &[MacroShape], outline: &Outline) -> Result<bool> {
    let (w, h) = packed_dims(sp, shapes)?;
    Ok(w <= outline.width && h <= outline.height)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shapes(ws: &[f64], hs: &[f64]) -> Vec<MacroShape> {
        ws.iter().zip(hs).map(|(&w, &h)| MacroShape::new(w, h)).collect()
    }

    #[test]
    fn single_macro() {
        let r = pack(&SequencePair::identity(1), &[MacroShape::new(3.0, 2.0)]).unwrap();
        assert_eq!(r.positions, vec![(0.0, 0.0)]);
        assert_eq!((r.packed_width, r.packed_height), (3.0, 2.0));
    }

    #[test]
    fn identical_sequences_chain_left_to_right() {
        let s = shapes(&[2.0, 3.0, 4.0], &[1.0, 5.0, 2.0]);
        let r = pack(&SequencePair::identity(3), &s).unwrap();
        assert_eq!(r.positions, vec![(0.0, 0.0), (2.0, 0.0), (5.0, 0.0)]);
        assert_eq!((r.packed_width, r.packed_height), (9.0, 5.0));
    }

    #[test]
    fn reversed_sequence_stacks_vertically() {
        // 0 above 1 above 2
        let s = shapes(&[2.0, 3.0, 4.0], &[1.0, 5.0, 2.0]);
        let sp = SequencePair::from_orders(vec![2, 1, 0], vec![0, 1, 2]).unwrap();
        let r = pack(&sp, &s).unwrap();
        assert_eq!(r.positions, vec![(0.0, 7.0), (0.0, 2.0), (0.0, 0.0)]);
        assert_eq!((r.packed_width, r.packed_height), (4.0, 8.0));
    }

    #[test]
    fn length_mismatch() {
        let err = pack(&SequencePair::identity(2), &[MacroShape::new(1.0, 1.0)]);
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
        let o = Outline::new(5.0, 5.0);
        assert!(is_feasible(&SequencePair::identity(2), &[MacroShape::new(1.0, 1.0)], &o).is_err());
    }

    #[test]
    fn outline_boundary_is_inclusive() {
        let s = shapes(&[2.0, 3.0, 4.0], &[1.0, 5.0, 2.0]);
        let sp = SequencePair::identity(3);
        assert!(is_feasible(&sp, &s, &Outline::new(9.0, 5.0)).unwrap());
        assert!(!is_feasible(&sp, &s, &Outline::new(9.0 - 1e-9, 5.0)).unwrap());
        assert!(!is_feasible(&sp, &s, &Outline::new(9.0, 5.0 - 1e-9)).unwrap());
    }

    #[test]
    fn max_tree_prefixes() {
        let mut t = MaxTree::new(5);
        t.raise(2, 4.0);
        t.raise(0, 1.0);
        assert_eq!(t.prefix_max(0), 0.0);
        assert_eq!(t.prefix_max(1), 1.0);
        assert_eq!(t.prefix_max(2), 1.0);
        assert_eq!(t.prefix_max(3), 4.0);
        assert_eq!(t.prefix_max(5), 4.0);
    }
}
