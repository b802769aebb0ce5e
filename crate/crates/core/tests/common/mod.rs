#![allow(dead_code)]

use rand::Rng;
use spbo::lcs_pack::{MacroShape, Outline};
use spbo::netlist::{Design, IoPad, Macro, Net, Pin};
use spbo::seqpair::{Relation, SequencePair};

pub fn random_shapes<R: Rng>(n: usize, rng: &mut R) -> Vec<MacroShape> {
    (0..n)
        .map(|_| MacroShape::new(rng.random_range(1..=20) as f64, rng.random_range(1..=20) as f64))
        .collect()
}

/// Longest-path packing computed straight from the pairwise relations, O(N^2)
/// per axis after a topological order given by `pi`.
pub fn pack_by_relations(sp: &SequencePair, shapes: &[MacroShape]) -> Vec<(f64, f64)> {
    let n = shapes.len();
    let mut pos = vec![(0.0f64, 0.0f64); n];
    // Every predecessor of a macro in either graph precedes it in pi.
    for &b in sp.pi.order() {
        for &a in sp.pi.order() {
            if a == b {
                break;
            }
            match sp.relation(a, b).unwrap() {
                Relation::LeftOf => pos[b].0 = pos[b].0.max(pos[a].0 + shapes[a].width),
                Relation::Below => pos[b].1 = pos[b].1.max(pos[a].1 + shapes[a].height),
                _ => {}
            }
        }
    }
    pos
}

/// Small design with integer shapes, pin offsets and pads on the boundary.
pub fn random_design<R: Rng>(n: usize, outline: (f64, f64), side: u32, rng: &mut R) -> Design {
    let macros: Vec<Macro> = (0..n)
        .map(|i| Macro {
            name: format!("m{i}"),
            shape: MacroShape::new(
                rng.random_range(1..=side) as f64,
                rng.random_range(1..=side) as f64,
            ),
        })
        .collect();
    let pads: Vec<IoPad> = (0..3)
        .map(|i| {
            let t = rng.random_range(0..=outline.0 as u32) as f64;
            let (x, y) = match rng.random_range(0..4) {
                0 => (t, 0.0),
                1 => (t, outline.1),
                2 => (0.0, t.min(outline.1)),
                _ => (outline.0, t.min(outline.1)),
            };
            IoPad {
                name: format!("p{i}"),
                x,
                y,
            }
        })
        .collect();
    let nets = (0..rng.random_range(1..=5))
        .map(|k| {
            let mut pins = Vec::new();
            let mut net_pads = Vec::new();
            let degree = rng.random_range(2..=4);
            while pins.len() + net_pads.len() < degree {
                if rng.random_bool(0.25) {
                    net_pads.push(rng.random_range(0..pads.len()));
                } else {
                    let m = rng.random_range(0..n);
                    let s = macros[m].shape;
                    pins.push(Pin {
                        macro_id: m,
                        dx: rng.random_range(0..=s.width as u32) as f64,
                        dy: rng.random_range(0..=s.height as u32) as f64,
                    });
                }
            }
            if pins.is_empty() {
                pins.push(Pin {
                    macro_id: 0,
                    dx: 0.0,
                    dy: 0.0,
                });
            }
            Net {
                name: format!("n{k}"),
                pins,
                pads: net_pads,
            }
        })
        .collect();
    Design {
        name: "random".into(),
        macros,
        pads,
        nets,
        outline: Outline::new(outline.0, outline.1),
        center_pins: false,
    }
}

/// All sequence pairs on `n` macros.
pub fn all_sequence_pairs(n: usize) -> Vec<SequencePair> {
    let perms = permutations(n);
    let mut out = Vec::new();
    for a in &perms {
        for b in &perms {
            out.push(SequencePair::from_orders(a.clone(), b.clone()).unwrap());
        }
    }
    out
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}
