//! Design data model: hard macros with pins, fixed I/O pads, nets and the
//! fixed outline. Reads the native text format and the Bookshelf
//! `.blocks` / `.nets` / `.pl` triple.
//!
//! Native format (`#` starts a comment, blank lines are ignored):
//!
//! ```text
//! spbo-design 1
//! name apte
//! outline 10500 10500
//! center-pins false
//!
//! [macros]
//! cc_11 3100 3100
//!
//! [pads]
//! VDD 0 5250
//!
//! [nets]
//! net n0
//!   pin cc_11 1550 3100
//!   pad VDD
//! ```
//!
//! Pin offsets are measured from the macro's lower-left corner. `center-pins`
//! records that the source data had no offsets and pins were put at macro
//! centers.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::lcs_pack::{MacroShape, Outline};

pub const NATIVE_HEADER: &str = "spbo-design 1";

/// Whitespace fraction used when an outline has to be derived.
pub const DEFAULT_WHITESPACE: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Macro {
    pub name: String,
    pub shape: MacroShape,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pin {
    pub macro_id: usize,
    pub dx: f64,
    pub dy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IoPad {
    pub name: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Net {
    pub name: String,
    pub pins: Vec<Pin>,
    /// Indices into [`Design::pads`].
    pub pads: Vec<usize>,
}

impl Net {
    pub fn terminal_count(&self) -> usize {
        self.pins.len() + self.pads.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub name: String,
    pub macros: Vec<Macro>,
    pub pads: Vec<IoPad>,
    pub nets: Vec<Net>,
    pub outline: Outline,
    /// Pins were placed at macro centers because the source had no offsets.
    pub center_pins: bool,
}

impl Design {
    pub fn num_macros(&self) -> usize {
        self.macros.len()
    }

    pub fn shapes(&self) -> Vec<MacroShape> {
        self.macros.iter().map(|m| m.shape).collect()
    }

    pub fn total_macro_area(&self) -> f64 {
        self.macros.iter().map(|m| m.shape.area()).sum()
    }

    /// Moves every pad lying outside the outline to the nearest boundary point.
    pub fn project_pads(&mut self) {
        let (w, h) = (self.outline.width, self.outline.height);
        for p in &mut self.pads {
            if p.x < 0.0 || p.x > w || p.y < 0.0 || p.y > h {
                p.x = p.x.clamp(0.0, w);
                p.y = p.y.clamp(0.0, h);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DesignFormat {
    Native,
    Bookshelf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutlineSpec {
    /// Keep the outline stored in the file. Bookshelf data has none, so it
    /// falls back to a square with [`DEFAULT_WHITESPACE`].
    FromFile,
    Explicit(Outline),
    /// Square of side `sqrt((1 + gamma) * total macro area)`.
    Whitespace(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PadPolicy {
    #[default]
    Reject,
    Project,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadOptions {
    pub outline: OutlineSpec,
    pub pads: PadPolicy,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            outline: OutlineSpec::FromFile,
            pads: PadPolicy::Reject,
        }
    }
}

/// Loads and validates a design.
///
/// For Bookshelf data `path` may name any of the three files or their common
/// stem; the siblings are found by extension.
pub fn load_design(path: &Path, format: DesignFormat, opts: &LoadOptions) -> Result<Design> {
    let mut design = match format {
        DesignFormat::Native => {
            let text = fs::read_to_string(path)?;
            parse_native(&text)?
        }
        DesignFormat::Bookshelf => read_bookshelf(path)?,
    };
    match opts.outline {
        OutlineSpec::FromFile if format == DesignFormat::Bookshelf => {
            design.outline =
                Outline::square_with_whitespace(design.total_macro_area(), DEFAULT_WHITESPACE)
        }
        OutlineSpec::FromFile => {}
        OutlineSpec::Explicit(o) => design.outline = o,
        OutlineSpec::Whitespace(g) => {
            design.outline = Outline::square_with_whitespace(design.total_macro_area(), g)
        }
    }
    if opts.pads == PadPolicy::Project {
        design.project_pads();
    }
    let violations = validate(&design);
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    Ok(design)
}

/// Checks every structural invariant and returns all violations found.
pub fn validate(design: &Design) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut v = |msg: String| out.push(Violation(msg));

    let o = design.outline;
    if !(o.width.is_finite() && o.height.is_finite() && o.width > 0.0 && o.height > 0.0) {
        v(format!("outline {}x{} must be positive", o.width, o.height));
    }
    if design.macros.is_empty() {
        v("design has no macros".into());
    }

    let mut seen = HashMap::new();
    for (i, m) in design.macros.iter().enumerate() {
        let s = m.shape;
        if !(s.width.is_finite() && s.height.is_finite() && s.width > 0.0 && s.height > 0.0) {
            v(format!("macro `{}` has non-positive size {}x{}", m.name, s.width, s.height));
        }
        if let Some(prev) = seen.insert(m.name.as_str(), i) {
            v(format!("macro name `{}` used by macros {prev} and {i}", m.name));
        }
    }

    let mut seen = HashMap::new();
    for (i, p) in design.pads.iter().enumerate() {
        if !(p.x.is_finite() && p.y.is_finite()) {
            v(format!("pad `{}` has a non-finite position", p.name));
        } else if p.x < 0.0 || p.x > o.width || p.y < 0.0 || p.y > o.height {
            v(format!(
                "pad `{}` at ({}, {}) lies outside the {}x{} outline",
                p.name, p.x, p.y, o.width, o.height
            ));
        }
        if let Some(prev) = seen.insert(p.name.as_str(), i) {
            v(format!("pad name `{}` used by pads {prev} and {i}", p.name));
        }
    }

    let n = design.macros.len();
    for net in &design.nets {
        if net.terminal_count() == 0 {
            v(format!("net `{}` has no terminals", net.name));
        }
        for (k, pin) in net.pins.iter().enumerate() {
            if pin.macro_id >= n {
                v(format!(
                    "net `{}` pin {k} references macro {} but the design has {n}",
                    net.name, pin.macro_id
                ));
                continue;
            }
            let m = &design.macros[pin.macro_id];
            let (w, h) = (m.shape.width, m.shape.height);
            if !(pin.dx >= 0.0 && pin.dx <= w && pin.dy >= 0.0 && pin.dy <= h) {
                v(format!(
                    "net `{}` pin {k} on macro `{}`: offset ({}, {}) outside the {}x{} macro",
                    net.name, m.name, pin.dx, pin.dy, w, h
                ));
            }
        }
        for &p in &net.pads {
            if p >= design.pads.len() {
                v(format!("net `{}` references missing pad {p}", net.name));
            }
        }
    }

    let area = design.total_macro_area();
    if area > o.area() {
        v(format!(
            "total macro area {area} exceeds outline area {}",
            o.area()
        ));
    }
    out
}

/// Writes the native format with a fixed field order.
pub fn save_design(design: &Design, path: &Path) -> Result<()> {
    fs::write(path, to_native_string(design))?;
    Ok(())
}

pub fn to_native_string(design: &Design) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{NATIVE_HEADER}");
    let _ = writeln!(s, "name {}", design.name);
    let _ = writeln!(s, "outline {} {}", design.outline.width, design.outline.height);
    let _ = writeln!(s, "center-pins {}", design.center_pins);
    let _ = writeln!(s, "\n[macros]");
    for m in &design.macros {
        let _ = writeln!(s, "{} {} {}", m.name, m.shape.width, m.shape.height);
    }
    let _ = writeln!(s, "\n[pads]");
    for p in &design.pads {
        let _ = writeln!(s, "{} {} {}", p.name, p.x, p.y);
    }
    let _ = writeln!(s, "\n[nets]");
    for net in &design.nets {
        let _ = writeln!(s, "net {}", net.name);
        for pin in &net.pins {
            let _ = writeln!(
                s,
                "  pin {} {} {}",
                design.macros[pin.macro_id].name, pin.dx, pin.dy
            );
        }
        for &p in &net.pads {
            let _ = writeln!(s, "  pad {}", design.pads[p].name);
        }
    }
    s
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Header,
    Macros,
    Pads,
    Nets,
}

struct Tokens<'a> {
    line: usize,
    items: Vec<(usize, &'a str)>,
}

impl<'a> Tokens<'a> {
    fn new(line: usize, text: &'a str) -> Self {
        let text = text.split('#').next().unwrap_or("");
        let mut items = Vec::new();
        let mut start = None;
        for (i, c) in text.char_indices() {
            match (c.is_whitespace(), start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    items.push((s + 1, &text[s..i]));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            items.push((s + 1, &text[s..]));
        }
        Self { line, items }
    }

    fn expect_len(&self, n: usize, what: &str) -> Result<()> {
        if self.items.len() != n {
            let col = self.items.get(n).map_or(1, |t| t.0);
            return Err(Error::parse(
                self.line,
                col,
                format!("expected {what} ({n} fields), found {} fields", self.items.len()),
            ));
        }
        Ok(())
    }

    fn num(&self, k: usize) -> Result<f64> {
        let (col, tok) = self.items[k];
        tok.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::parse(self.line, col, format!("expected a number, found `{tok}`")))
    }
}

struct PendingPin {
    line: usize,
    macro_name: String,
    dx: f64,
    dy: f64,
}

struct PendingNet {
    name: String,
    pins: Vec<PendingPin>,
    pads: Vec<(usize, String)>,
}

/// Parses the native format. Syntax problems fail with a line/column; name
/// resolution and invariant problems are collected into one validation error.
pub fn parse_native(text: &str) -> Result<Design> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let header = loop {
        match lines.next() {
            Some((n, l)) => {
                let t = Tokens::new(n, l);
                if !t.items.is_empty() {
                    break t;
                }
            }
            None => return Err(Error::parse(1, 1, "empty design file")),
        }
    };
    if header.items.iter().map(|t| t.1).collect::<Vec<_>>().join(" ") != NATIVE_HEADER {
        return Err(Error::parse(
            header.line,
            1,
            format!("expected header `{NATIVE_HEADER}`"),
        ));
    }

    let mut section = Section::Header;
    let mut name = String::from("design");
    let mut outline = None;
    let mut center_pins = false;
    let mut macros = Vec::new();
    let mut pads = Vec::new();
    let mut nets: Vec<PendingNet> = Vec::new();

    for (n, raw) in lines {
        let t = Tokens::new(n, raw);
        if t.items.is_empty() {
            continue;
        }
        let (col, first) = t.items[0];
        if first.starts_with('[') {
            t.expect_len(1, "a section header")?;
            let next = match first {
                "[macros]" => Section::Macros,
                "[pads]" => Section::Pads,
                "[nets]" => Section::Nets,
                _ => return Err(Error::parse(n, col, format!("unknown section `{first}`"))),
            };
            if (next as u8) <= (section as u8) {
                return Err(Error::parse(n, col, format!("section `{first}` out of order")));
            }
            section = next;
            continue;
        }
        match section {
            Section::Header => match first {
                "name" => {
                    t.expect_len(2, "`name <id>`")?;
                    name = t.items[1].1.to_string();
                }
                "outline" => {
                    t.expect_len(3, "`outline <width> <height>`")?;
                    outline = Some(Outline::new(t.num(1)?, t.num(2)?));
                }
                "center-pins" => {
                    t.expect_len(2, "`center-pins <bool>`")?;
                    center_pins = match t.items[1].1 {
                        "true" => true,
                        "false" => false,
                        other => {
                            return Err(Error::parse(
                                n,
                                t.items[1].0,
                                format!("expected true or false, found `{other}`"),
                            ))
                        }
                    };
                }
                _ => return Err(Error::parse(n, col, format!("unknown header key `{first}`"))),
            },
            Section::Macros => {
                t.expect_len(3, "`<name> <width> <height>`")?;
                macros.push(Macro {
                    name: first.to_string(),
                    shape: MacroShape::new(t.num(1)?, t.num(2)?),
                });
            }
            Section::Pads => {
                t.expect_len(3, "`<name> <x> <y>`")?;
                pads.push(IoPad {
                    name: first.to_string(),
                    x: t.num(1)?,
                    y: t.num(2)?,
                });
            }
            Section::Nets => match first {
                "net" => {
                    t.expect_len(2, "`net <name>`")?;
                    nets.push(PendingNet {
                        name: t.items[1].1.to_string(),
                        pins: Vec::new(),
                        pads: Vec::new(),
                    });
                }
                "pin" | "pad" => {
                    let net = nets.last_mut().ok_or_else(|| {
                        Error::parse(n, col, format!("`{first}` before any `net` line"))
                    })?;
                    if first == "pin" {
                        t.expect_len(4, "`pin <macro> <dx> <dy>`")?;
                        net.pins.push(PendingPin {
                            line: n,
                            macro_name: t.items[1].1.to_string(),
                            dx: t.num(2)?,
                            dy: t.num(3)?,
                        });
                    } else {
                        t.expect_len(2, "`pad <name>`")?;
                        net.pads.push((n, t.items[1].1.to_string()));
                    }
                }
                _ => {
                    return Err(Error::parse(
                        n,
                        col,
                        format!("expected `net`, `pin` or `pad`, found `{first}`"),
                    ))
                }
            },
        }
    }

    let outline = outline.ok_or_else(|| Error::parse(1, 1, "missing `outline` line"))?;
    let macro_ids: HashMap<&str, usize> =
        macros.iter().enumerate().map(|(i, m)| (m.name.as_str(), i)).collect();
    let pad_ids: HashMap<&str, usize> =
        pads.iter().enumerate().map(|(i, p)| (p.name.as_str(), i)).collect();

    let mut unresolved = Vec::new();
    let mut resolved = Vec::with_capacity(nets.len());
    for net in &nets {
        let mut pins = Vec::new();
        for p in &net.pins {
            match macro_ids.get(p.macro_name.as_str()) {
                Some(&id) => pins.push(Pin {
                    macro_id: id,
                    dx: p.dx,
                    dy: p.dy,
                }),
                None => unresolved.push(Violation(format!(
                    "line {}: net `{}` references undefined macro `{}`",
                    p.line, net.name, p.macro_name
                ))),
            }
        }
        let mut net_pads = Vec::new();
        for (line, pad) in &net.pads {
            match pad_ids.get(pad.as_str()) {
                Some(&id) => net_pads.push(id),
                None => unresolved.push(Violation(format!(
                    "line {line}: net `{}` references undefined pad `{pad}`",
                    net.name
                ))),
            }
        }
        resolved.push(Net {
            name: net.name.clone(),
            pins,
            pads: net_pads,
        });
    }

    let design = Design {
        name,
        macros,
        pads,
        nets: resolved,
        outline,
        center_pins,
    };
    if !unresolved.is_empty() {
        unresolved.extend(validate(&design));
        return Err(Error::Validation(unresolved));
    }
    Ok(design)
}

fn bookshelf_paths(path: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let known = ["blocks", "nets", "pl"];
    let stem = match path.extension().and_then(|e| e.to_str()) {
        Some(e) if known.contains(&e) => path.with_extension(""),
        _ => path.to_path_buf(),
    };
    let with = |ext: &str| {
        let mut s = stem.clone().into_os_string();
        s.push(".");
        s.push(ext);
        PathBuf::from(s)
    };
    (with("blocks"), with("nets"), with("pl"))
}

fn bookshelf_skip(line: &str) -> bool {
    let l = line.trim();
    l.is_empty() || l.starts_with('#') || l.starts_with("UCLA") || l.starts_with("Num")
}

/// Reads GSRC-style Bookshelf floorplanning data (hard rectilinear blocks and
/// fixed terminals). The outline is left at zero; [`load_design`] fills it in.
pub fn read_bookshelf(path: &Path) -> Result<Design> {
    let (blocks_path, nets_path, pl_path) = bookshelf_paths(path);
    let blocks = fs::read_to_string(&blocks_path)?;
    let nets = fs::read_to_string(&nets_path)?;
    let pl = fs::read_to_string(&pl_path)?;
    let name = blocks_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("design")
        .to_string();
    parse_bookshelf(&name, &blocks, &nets, &pl)
}

enum Orient {
    Rot(u8),
    Flipped(u8),
}

fn parse_orient(s: &str) -> Option<Orient> {
    Some(match s {
        "N" => Orient::Rot(0),
        "W" => Orient::Rot(1),
        "S" => Orient::Rot(2),
        "E" => Orient::Rot(3),
        "FN" => Orient::Flipped(0),
        "FW" => Orient::Flipped(1),
        "FS" => Orient::Flipped(2),
        "FE" => Orient::Flipped(3),
        _ => return None,
    })
}

/// Rotates a center-relative offset by `quarter` counter-clockwise turns.
fn rotate(o: (f64, f64), quarter: u8) -> (f64, f64) {
    match quarter % 4 {
        0 => o,
        1 => (-o.1, o.0),
        2 => (-o.0, -o.1),
        _ => (o.1, -o.0),
    }
}

fn coordinate_span<'a>(values: impl Iterator<Item = &'a f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    hi - lo
}

pub fn parse_bookshelf(name: &str, blocks: &str, nets: &str, pl: &str) -> Result<Design> {
    let mut macros: Vec<Macro> = Vec::new();
    let mut macro_ids: HashMap<String, usize> = HashMap::new();
    let mut terminals: Vec<String> = Vec::new();

    for (i, line) in blocks.lines().enumerate() {
        if bookshelf_skip(line) {
            continue;
        }
        let t = Tokens::new(i + 1, line);
        if t.items.is_empty() {
            continue;
        }
        let bname = t.items[0].1;
        let kind = t.items.get(1).map(|t| t.1).unwrap_or("");
        match kind {
            "terminal" => terminals.push(bname.to_string()),
            "hardrectilinear" => {
                let nums: Vec<f64> = line
                    .split(|c: char| c == '(' || c == ')' || c == ',' || c.is_whitespace())
                    .skip(3)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<f64>()
                            .map_err(|_| Error::parse(i + 1, 1, format!("bad vertex value `{s}`")))
                    })
                    .collect::<Result<_>>()?;
                if nums.len() < 4 || nums.len() % 2 != 0 {
                    return Err(Error::parse(i + 1, 1, "block needs at least two vertices"));
                }
                let w = coordinate_span(nums.iter().step_by(2));
                let h = coordinate_span(nums.iter().skip(1).step_by(2));
                macro_ids.insert(bname.to_string(), macros.len());
                macros.push(Macro {
                    name: bname.to_string(),
                    shape: MacroShape::new(w, h),
                });
            }
            other => {
                return Err(Error::parse(
                    i + 1,
                    t.items.get(1).map_or(1, |t| t.0),
                    format!("unsupported block type `{other}`"),
                ))
            }
        }
    }

    // Placement file: terminal positions and block orientations.
    let mut positions: HashMap<String, (f64, f64)> = HashMap::new();
    let mut quarter_turns = vec![(0u8, false); macros.len()];
    for (i, line) in pl.lines().enumerate() {
        if bookshelf_skip(line) {
            continue;
        }
        let t = Tokens::new(i + 1, line);
        if t.items.len() < 3 {
            continue;
        }
        let pname = t.items[0].1;
        let x = t.num(1)?;
        let y = t.num(2)?;
        positions.insert(pname.to_string(), (x, y));
        if let (Some(&id), Some(&(col, o))) = (macro_ids.get(pname), t.items.get(4)) {
            if t.items[3].1 == ":" {
                let orient = parse_orient(o)
                    .ok_or_else(|| Error::parse(i + 1, col, format!("unknown orientation `{o}`")))?;
                quarter_turns[id] = match orient {
                    Orient::Rot(q) => (q, false),
                    Orient::Flipped(q) => (q, true),
                };
            }
        }
    }

    let mut pads = Vec::new();
    let mut pad_ids = HashMap::new();
    for tname in &terminals {
        let &(x, y) = positions.get(tname).ok_or_else(|| {
            Error::parse(1, 1, format!("terminal `{tname}` has no position in the .pl file"))
        })?;
        pad_ids.insert(tname.clone(), pads.len());
        pads.push(IoPad {
            name: tname.clone(),
            x,
            y,
        });
    }

    // Orientation is baked into the shape; pin offsets are rotated below.
    let base_shapes: Vec<MacroShape> = macros.iter().map(|m| m.shape).collect();
    for (m, &(q, _)) in macros.iter_mut().zip(&quarter_turns) {
        if q % 2 == 1 {
            m.shape = MacroShape::new(m.shape.height, m.shape.width);
        }
    }

    let mut center_pins = false;
    let mut out_nets: Vec<Net> = Vec::new();
    for (i, line) in nets.lines().enumerate() {
        let l = line.trim();
        if l.is_empty() || l.starts_with('#') || l.starts_with("UCLA") || l.starts_with("NumNets") || l.starts_with("NumPins") {
            continue;
        }
        let t = Tokens::new(i + 1, line);
        if t.items[0].1 == "NetDegree" {
            let net_name = t
                .items
                .get(3)
                .map(|t| t.1.to_string())
                .unwrap_or_else(|| format!("net{}", out_nets.len()));
            out_nets.push(Net {
                name: net_name,
                pins: Vec::new(),
                pads: Vec::new(),
            });
            continue;
        }
        let net = out_nets
            .last_mut()
            .ok_or_else(|| Error::parse(i + 1, 1, "pin line before any NetDegree"))?;
        let (col, tname) = t.items[0];
        if let Some(&pid) = pad_ids.get(tname) {
            net.pads.push(pid);
            continue;
        }
        let id = *macro_ids
            .get(tname)
            .ok_or_else(|| Error::parse(i + 1, col, format!("net references unknown node `{tname}`")))?;
        let colon = t.items.iter().position(|t| t.1 == ":");
        let offset = match colon {
            Some(c) if t.items.len() >= c + 3 => {
                let base = base_shapes[id];
                let read = |k: usize, extent: f64| -> Result<f64> {
                    let (col, tok) = t.items[k];
                    let (pct, body) = match tok.strip_prefix('%') {
                        Some(b) => (true, b),
                        None => (false, tok),
                    };
                    let v: f64 = body
                        .parse()
                        .map_err(|_| Error::parse(i + 1, col, format!("bad pin offset `{tok}`")))?;
                    Ok(if pct { v / 100.0 * extent } else { v })
                };
                (read(c + 1, base.width)?, read(c + 2, base.height)?)
            }
            _ => {
                center_pins = true;
                (0.0, 0.0)
            }
        };
        let (q, flipped) = quarter_turns[id];
        let offset = if flipped { (-offset.0, offset.1) } else { offset };
        let (ox, oy) = rotate(offset, q);
        let shape = macros[id].shape;
        net.pins.push(Pin {
            macro_id: id,
            dx: shape.width / 2.0 + ox,
            dy: shape.height / 2.0 + oy,
        });
    }
    out_nets.retain(|n| n.terminal_count() > 0);

    Ok(Design {
        name: name.to_string(),
        macros,
        pads,
        nets: out_nets,
        outline: Outline::new(0.0, 0.0),
        center_pins,
    })
}

/// Parameters of a random benchmark-like design.
#[derive(Debug, Clone)]
pub struct SynthParams {
    pub name: String,
    pub macros: usize,
    pub nets: usize,
    pub pads: usize,
    pub whitespace: f64,
    /// Macro side lengths are drawn uniformly from this integer range.
    pub side: (u32, u32),
    /// Number of terminals per net, inclusive range.
    pub degree: (usize, usize),
    /// Probability that a terminal is a pad rather than a macro pin.
    pub pad_fraction: f64,
}

impl SynthParams {
    /// Sizes matching the apte benchmark: 9 macros, 97 nets, 73 pads. The
    /// outline has 50% whitespace so that uniform sampling finds feasible
    /// sequence pairs at a usable rate.
    pub fn apte_class() -> Self {
        Self {
            name: "apte-class".into(),
            macros: 9,
            nets: 97,
            pads: 73,
            whitespace: 0.5,
            side: (1500, 4500),
            degree: (2, 4),
            pad_fraction: 0.3,
        }
    }
}

/// Random design with integer dimensions and pin offsets; pads are spread
/// along the outline boundary at integer coordinates.
pub fn synthesize<R: Rng + ?Sized>(p: &SynthParams, rng: &mut R) -> Result<Design> {
    if p.macros == 0 || p.degree.0 == 0 || p.degree.0 > p.degree.1 || p.side.0 == 0 || p.side.0 > p.side.1 {
        return Err(Error::invalid("synthetic design parameters out of range"));
    }
    let macros: Vec<Macro> = (0..p.macros)
        .map(|i| Macro {
            name: format!("m{i}"),
            shape: MacroShape::new(
                rng.random_range(p.side.0..=p.side.1) as f64,
                rng.random_range(p.side.0..=p.side.1) as f64,
            ),
        })
        .collect();
    let area: f64 = macros.iter().map(|m| m.shape.area()).sum();
    let side = ((1.0 + p.whitespace) * area).sqrt().ceil();
    let outline = Outline::new(side, side);

    let pads: Vec<IoPad> = (0..p.pads)
        .map(|i| {
            let t = rng.random_range(0.0..4.0 * side);
            let (x, y) = match (t / side) as u32 {
                0 => (t, 0.0),
                1 => (side, t - side),
                2 => (3.0 * side - t, side),
                _ => (0.0, (4.0 * side - t).max(0.0)),
            };
            IoPad {
                name: format!("p{i}"),
                x: x.round().clamp(0.0, side),
                y: y.round().clamp(0.0, side),
            }
        })
        .collect();

    let nets = (0..p.nets)
        .map(|k| {
            let degree = rng.random_range(p.degree.0..=p.degree.1);
            let mut pins = Vec::new();
            let mut net_pads = Vec::new();
            for _ in 0..degree {
                if !pads.is_empty() && rng.random_bool(p.pad_fraction) {
                    net_pads.push(rng.random_range(0..pads.len()));
                } else {
                    let id = rng.random_range(0..macros.len());
                    let s = macros[id].shape;
                    pins.push(Pin {
                        macro_id: id,
                        dx: rng.random_range(0..=s.width as u32) as f64,
                        dy: rng.random_range(0..=s.height as u32) as f64,
                    });
                }
            }
            if pins.is_empty() {
                let id = rng.random_range(0..macros.len());
                let s = macros[id].shape;
                pins.push(Pin {
                    macro_id: id,
                    dx: (s.width / 2.0).floor(),
                    dy: (s.height / 2.0).floor(),
                });
            }
            Net {
                name: format!("n{k}"),
                pins,
                pads: net_pads,
            }
        })
        .collect();

    Ok(Design {
        name: p.name.clone(),
        macros,
        pads,
        nets,
        outline,
        center_pins: false,
    })
}
