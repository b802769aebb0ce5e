//! The expensive objective: the minimum total half-perimeter wire length over
//! all placements consistent with a sequence pair and the outline.
//!
//! The two axes share no constraint, so the problem splits into one LP per
//! axis. Each LP has the macro coordinates plus an interval `[L_k, U_k]` per
//! net as variables; ordering, box and terminal-bracketing constraints are all
//! differences of two variables (pads and the outline enter as constants
//! against a fixed origin), and the objective is `sum_k (U_k - L_k)`.

use serde::{Deserialize, Serialize};

use crate::diff_lp::{self, Difference};
use crate::error::{Error, Result};
use crate::lcs_pack::is_feasible;
use crate::netlist::Design;
use crate::seqpair::{Relation, SequencePair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LpVar {
    /// Fixed at 0; carries the outline bounds and pad coordinates.
    Origin,
    Coord(usize),
    Lower(usize),
    Upper(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Ordering,
    Box,
    Terminal,
}

/// `lhs - rhs <= bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpConstraint {
    pub kind: ConstraintKind,
    pub lhs: LpVar,
    pub rhs: LpVar,
    pub bound: f64,
}

/// One axis of the wirelength LP. Minimizes `sum_k (Upper(k) - Lower(k))`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisLp {
    pub axis: Axis,
    pub num_macros: usize,
    pub num_nets: usize,
    pub constraints: Vec<LpConstraint>,
}

impl AxisLp {
    pub fn num_vars(&self) -> usize {
        1 + self.num_macros + 2 * self.num_nets
    }

    pub fn var_index(&self, v: LpVar) -> usize {
        match v {
            LpVar::Origin => 0,
            LpVar::Coord(i) => 1 + i,
            LpVar::Lower(k) => 1 + self.num_macros + k,
            LpVar::Upper(k) => 1 + self.num_macros + self.num_nets + k,
        }
    }

    pub fn count(&self, kind: ConstraintKind) -> usize {
        self.constraints.iter().filter(|c| c.kind == kind).count()
    }

    /// Whether every constraint only mentions declared variables.
    pub fn is_well_formed(&self) -> bool {
        let ok = |v: LpVar| match v {
            LpVar::Origin => true,
            LpVar::Coord(i) => i < self.num_macros,
            LpVar::Lower(k) | LpVar::Upper(k) => k < self.num_nets,
        };
        self.constraints.iter().all(|c| ok(c.lhs) && ok(c.rhs))
    }

    /// Largest amount by which `values` (indexed by [`AxisLp::var_index`])
    /// violates a constraint; 0 when all hold.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| values[self.var_index(c.lhs)] - values[self.var_index(c.rhs)] - c.bound)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisSolution {
    /// Macro lower-left coordinates on this axis.
    pub coords: Vec<f64>,
    /// All LP variable values, indexed by [`AxisLp::var_index`].
    pub values: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub positions: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    /// Recomputed from `placement`, not taken from the solver.
    pub hpwl: f64,
    pub placement: Placement,
    /// Optimal objective of the x and y LPs.
    pub lp_objectives: (f64, f64),
}

pub fn build_axis_lps(design: &Design, sp: &SequencePair) -> Result<(AxisLp, AxisLp)> {
    let n = design.num_macros();
    if sp.len() != n {
        return Err(Error::invalid(format!(
            "sequence pair has {} macros, design has {n}",
            sp.len()
        )));
    }
    Ok((build_axis(design, sp, Axis::X), build_axis(design, sp, Axis::Y)))
}

fn build_axis(design: &Design, sp: &SequencePair, axis: Axis) -> AxisLp {
    let n = design.num_macros();
    let extent = |i: usize| match axis {
        Axis::X => design.macros[i].shape.width,
        Axis::Y => design.macros[i].shape.height,
    };
    let limit = match axis {
        Axis::X => design.outline.width,
        Axis::Y => design.outline.height,
    };
    let before = match axis {
        Axis::X => Relation::LeftOf,
        Axis::Y => Relation::Below,
    };
    let mut cons = Vec::new();
    let mut push = |kind, lhs, rhs, bound| {
        cons.push(LpConstraint {
            kind,
            lhs,
            rhs,
            bound,
        })
    };

    for i in 0..n {
        for j in 0..n {
            if i != j && sp.relation_unchecked(i, j) == before {
                push(ConstraintKind::Ordering, LpVar::Coord(i), LpVar::Coord(j), -extent(i));
            }
        }
    }
    for i in 0..n {
        push(ConstraintKind::Box, LpVar::Origin, LpVar::Coord(i), 0.0);
        push(ConstraintKind::Box, LpVar::Coord(i), LpVar::Origin, limit - extent(i));
    }
    for (k, net) in design.nets.iter().enumerate() {
        for pin in &net.pins {
            let off = match axis {
                Axis::X => pin.dx,
                Axis::Y => pin.dy,
            };
            let c = LpVar::Coord(pin.macro_id);
            push(ConstraintKind::Terminal, LpVar::Lower(k), c, off);
            push(ConstraintKind::Terminal, c, LpVar::Upper(k), -off);
        }
        for &p in &net.pads {
            let pad = &design.pads[p];
            let at = match axis {
                Axis::X => pad.x,
                Axis::Y => pad.y,
            };
            push(ConstraintKind::Terminal, LpVar::Lower(k), LpVar::Origin, at);
            push(ConstraintKind::Terminal, LpVar::Origin, LpVar::Upper(k), -at);
        }
    }

    AxisLp {
        axis,
        num_macros: n,
        num_nets: design.nets.len(),
        constraints: cons,
    }
}

pub fn solve_axis_lp(lp: &AxisLp) -> Result<AxisSolution> {
    if !lp.is_well_formed() {
        return Err(Error::invalid("axis LP references undeclared variables"));
    }
    let diffs: Vec<Difference> = lp
        .constraints
        .iter()
        .map(|c| Difference {
            a: lp.var_index(c.lhs),
            b: lp.var_index(c.rhs),
            bound: c.bound,
        })
        .collect();
    let pairs: Vec<(usize, usize)> = (0..lp.num_nets)
        .map(|k| (lp.var_index(LpVar::Lower(k)), lp.var_index(LpVar::Upper(k))))
        .collect();
    let sol = diff_lp::solve(lp.num_vars(), 0, &diffs, &pairs).map_err(|e| match e {
        Error::Infeasible(m) => Error::Infeasible(format!("{:?}-axis LP: {m}", lp.axis)),
        other => other,
    })?;
    let coords = sol.values[1..=lp.num_macros].to_vec();
    Ok(AxisSolution {
        coords,
        values: sol.values,
        objective: sol.objective,
    })
}

/// Sum over nets of the bounding-box half perimeter of the net's terminals.
pub fn hpwl_of(design: &Design, placement: &Placement) -> f64 {
    design
        .nets
        .iter()
        .map(|net| {
            let mut lo = (f64::INFINITY, f64::INFINITY);
            let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            let mut add = |x: f64, y: f64| {
                lo = (lo.0.min(x), lo.1.min(y));
                hi = (hi.0.max(x), hi.1.max(y));
            };
            for pin in &net.pins {
                let (x, y) = placement.positions[pin.macro_id];
                add(x + pin.dx, y + pin.dy);
            }
            for &p in &net.pads {
                add(design.pads[p].x, design.pads[p].y);
            }
            if net.terminal_count() == 0 {
                0.0
            } else {
                (hi.0 - lo.0) + (hi.1 - lo.1)
            }
        })
        .sum()
}

/// Optimal HPWL placement for a feasible sequence pair.
pub fn evaluate_sp(design: &Design, sp: &SequencePair) -> Result<ObjectiveValue> {
    let shapes = design.shapes();
    if !is_feasible(sp, &shapes, &design.outline)? {
        return Err(Error::Infeasible(format!(
            "sequence pair {sp} does not fit the {}x{} outline",
            design.outline.width, design.outline.height
        )));
    }
    let (xlp, ylp) = build_axis_lps(design, sp)?;
    let xs = solve_axis_lp(&xlp)?;
    let ys = solve_axis_lp(&ylp)?;
    let placement = Placement {
        positions: xs.coords.iter().copied().zip(ys.coords.iter().copied()).collect(),
    };
    let hpwl = hpwl_of(design, &placement);
    Ok(ObjectiveValue {
        hpwl,
        placement,
        lp_objectives: (xs.objective, ys.objective),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lcs_pack::{MacroShape, Outline};
    use crate::netlist::{IoPad, Macro, Net, Pin};

    fn design(shapes: &[(f64, f64)], outline: (f64, f64)) -> Design {
        Design {
            name: "t".into(),
            macros: shapes
                .iter()
                .enumerate()
                .map(|(i, &(w, h))| Macro {
                    name: format!("m{i}"),
                    shape: MacroShape::new(w, h),
                })
                .collect(),
            pads: vec![],
            nets: vec![],
            outline: Outline::new(outline.0, outline.1),
            center_pins: false,
        }
    }

    #[test]
    fn constraint_counts_follow_relations() {
        let d = design(&[(1.0, 1.0), (1.0, 1.0)], (5.0, 5.0));
        let (x, y) = build_axis_lps(&d, &SequencePair::identity(2)).unwrap();
        assert_eq!(x.count(ConstraintKind::Ordering), 1);
        assert_eq!(y.count(ConstraintKind::Ordering), 0);
        assert_eq!(x.count(ConstraintKind::Box), 4);

        let d = design(&[(1.0, 1.0); 3], (5.0, 5.0));
        let (x, y) = build_axis_lps(&d, &SequencePair::identity(3)).unwrap();
        assert_eq!(x.count(ConstraintKind::Ordering), 3);
        assert_eq!(y.count(ConstraintKind::Ordering), 0);
        assert!(x.is_well_formed() && y.is_well_formed());
    }

    #[test]
    fn zero_nets_zero_objective() {
        let d = design(&[(2.0, 1.0), (3.0, 2.0)], (10.0, 10.0));
        let sp: SequencePair = "1 0 / 0 1".parse().unwrap();
        let v = evaluate_sp(&d, &sp).unwrap();
        assert_eq!(v.hpwl, 0.0);
        assert_eq!(v.lp_objectives, (0.0, 0.0));
        let (x, y) = build_axis_lps(&d, &sp).unwrap();
        let xs = solve_axis_lp(&x).unwrap();
        let ys = solve_axis_lp(&y).unwrap();
        assert!(x.max_violation(&xs.values) <= 1e-9);
        assert!(y.max_violation(&ys.values) <= 1e-9);
    }

    #[test]
    fn single_macro_follows_pad() {
        // width 2, pin at the macro center, pad at x = 10 on a 12-wide outline
        let mut d = design(&[(2.0, 2.0)], (12.0, 12.0));
        d.pads.push(IoPad { name: "p".into(), x: 10.0, y: 6.0 });
        d.nets.push(Net {
            name: "n".into(),
            pins: vec![Pin { macro_id: 0, dx: 1.0, dy: 1.0 }],
            pads: vec![0],
        });
        let (x, _) = build_axis_lps(&d, &SequencePair::identity(1)).unwrap();
        let xs = solve_axis_lp(&x).unwrap();
        assert_eq!(xs.coords, vec![9.0]);
        assert_eq!(xs.objective, 0.0);
        let v = evaluate_sp(&d, &SequencePair::identity(1)).unwrap();
        assert_eq!(v.hpwl, 0.0);
        assert_eq!(v.placement.positions, vec![(9.0, 5.0)]);
    }

    #[test]
    fn hpwl_of_terminal_sets() {
        let mut d = design(&[(1.0, 1.0)], (10.0, 10.0));
        d.pads = vec![
            IoPad { name: "a".into(), x: 0.0, y: 0.0 },
            IoPad { name: "b".into(), x: 3.0, y: 4.0 },
            IoPad { name: "c".into(), x: 2.0, y: 5.0 },
            IoPad { name: "d".into(), x: 7.0, y: 1.0 },
        ];
        let place = Placement { positions: vec![(0.0, 0.0)] };
        let net = |pads: Vec<usize>| Net { name: "n".into(), pins: vec![], pads };
        d.nets = vec![net(vec![0, 1])];
        assert_eq!(hpwl_of(&d, &place), 7.0);
        d.nets = vec![net(vec![2])];
        assert_eq!(hpwl_of(&d, &place), 0.0);
        d.nets = vec![net(vec![0, 2, 3])];
        assert_eq!(hpwl_of(&d, &place), 12.0);
    }

    #[test]
    fn infeasible_sp_is_a_precondition_error() {
        let d = design(&[(3.0, 1.0), (3.0, 1.0)], (5.0, 5.0));
        assert!(matches!(
            evaluate_sp(&d, &SequencePair::identity(2)),
            Err(Error::Infeasible(_))
        ));
        // the same pair stacked vertically fits
        assert!(evaluate_sp(&d, &"0 1 / 1 0".parse().unwrap()).is_ok());
    }

    #[test]
    fn infeasible_lp_is_reported() {
        let d = design(&[(3.0, 1.0), (3.0, 1.0)], (5.0, 5.0));
        let (x, _) = build_axis_lps(&d, &SequencePair::identity(2)).unwrap();
        assert!(matches!(solve_axis_lp(&x), Err(Error::Infeasible(_))));
    }
}
