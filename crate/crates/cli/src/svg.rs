//! SVG 1.1 rendering of a placement: outline, macros, pins, pads and the
//! bounding box of every net.
//!
//! Shapes are written in layout coordinates inside a group that flips the y
//! axis, so rectangle attributes are exactly the placement values.

use std::fmt::Write as _;

use spbo::Design;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Renders `design` with macro lower-left corners at `positions`.
pub fn render(design: &Design, positions: &[(f64, f64)]) -> String {
    let shapes = design.shapes();
    let mut width = design.outline.width;
    let mut height = design.outline.height;
    for (p, s) in positions.iter().zip(&shapes) {
        width = width.max(p.0 + s.width);
        height = height.max(p.1 + s.height);
    }
    let margin = 0.02 * width.max(height);
    let dot = 0.004 * width.max(height);
    let stroke = 0.002 * width.max(height);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{} {} {} {}">"#,
        -margin,
        -margin,
        width + 2.0 * margin,
        height + 2.0 * margin
    );
    let _ = writeln!(svg, "<title>{}</title>", escape(&design.name));
    let _ = writeln!(
        svg,
        r#"<g transform="matrix(1 0 0 -1 0 {height})" stroke-width="{stroke}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect class="outline" x="0" y="0" width="{}" height="{}" fill="none" stroke="black"/>"#,
        design.outline.width, design.outline.height
    );
    for (i, (m, p)) in design.macros.iter().zip(positions).enumerate() {
        let _ = writeln!(
            svg,
            r##"<rect class="macro" id="macro-{i}" data-name="{}" x="{}" y="{}" width="{}" height="{}" fill="#9ecae1" stroke="#08519c"/>"##,
            escape(&m.name),
            p.0,
            p.1,
            m.shape.width,
            m.shape.height
        );
    }
    for net in &design.nets {
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut extend = |x: f64, y: f64| {
            lo = (lo.0.min(x), lo.1.min(y));
            hi = (hi.0.max(x), hi.1.max(y));
        };
        for pin in &net.pins {
            let p = positions[pin.macro_id];
            let (x, y) = (p.0 + pin.dx, p.1 + pin.dy);
            extend(x, y);
            let _ = writeln!(svg, r#"<circle class="pin" cx="{x}" cy="{y}" r="{dot}" fill="black"/>"#);
        }
        for &k in &net.pads {
            extend(design.pads[k].x, design.pads[k].y);
        }
        if lo.0.is_finite() {
            let _ = writeln!(
                svg,
                r#"<rect class="net" data-name="{}" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="red"/>"#,
                escape(&net.name),
                lo.0,
                lo.1,
                hi.0 - lo.0,
                hi.1 - lo.1
            );
        }
    }
    for pad in &design.pads {
        let _ = writeln!(
            svg,
            r##"<circle class="pad" data-name="{}" cx="{}" cy="{}" r="{}" fill="#31a354"/>"##,
            escape(&pad.name),
            pad.x,
            pad.y,
            2.0 * dot
        );
    }
    svg.push_str("</g>\n</svg>\n");
    svg
}
