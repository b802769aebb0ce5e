use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spbo::netlist::{
    load_design, save_design, synthesize, validate, Design, DesignFormat, LoadOptions, OutlineSpec,
    SynthParams,
};

fn random_params(rng: &mut ChaCha8Rng, i: usize) -> SynthParams {
    let lo = rng.random_range(1..20);
    let d_lo = rng.random_range(2..4);
    SynthParams {
        name: format!("rand{i}"),
        macros: rng.random_range(1..15),
        nets: rng.random_range(0..40),
        pads: rng.random_range(1..10),
        whitespace: rng.random_range(0.1..1.0),
        side: (lo, lo + rng.random_range(0..30)),
        degree: (d_lo, d_lo + rng.random_range(0..4)),
        pad_fraction: rng.random_range(0.0..0.5),
    }
}

#[test]
fn native_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    for i in 0..20 {
        let d = synthesize(&random_params(&mut rng, i), &mut rng).unwrap();
        assert!(validate(&d).is_empty());
        let path = dir.path().join(format!("d{i}.json"));
        save_design(&d, &path).unwrap();
        let back = load_design(&path, DesignFormat::Native, &LoadOptions::default()).unwrap();
        assert_eq!(back, d);
        let again = dir.path().join(format!("d{i}b.json"));
        save_design(&back, &again).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
    }
}

/// Writes `d` as a Bookshelf triple with every block in N orientation and pin
/// offsets relative to block centers.
fn write_bookshelf(d: &Design, stem: &std::path::Path) {
    let mut blocks = String::from("UCLA blocks 1.0\n");
    writeln!(blocks, "NumHardRectilinearBlocks : {}", d.macros.len()).unwrap();
    writeln!(blocks, "NumTerminals : {}", d.pads.len()).unwrap();
    for m in &d.macros {
        let (w, h) = (m.shape.width, m.shape.height);
        writeln!(blocks, "{} hardrectilinear 4 (0, 0) (0, {h}) ({w}, {h}) ({w}, 0)", m.name).unwrap();
    }
    for p in &d.pads {
        writeln!(blocks, "{} terminal", p.name).unwrap();
    }
    let mut nets = String::from("UCLA nets 1.0\n");
    for n in &d.nets {
        writeln!(nets, "NetDegree : {} {}", n.terminal_count(), n.name).unwrap();
        for p in &n.pins {
            let m = &d.macros[p.macro_id];
            let ox = p.dx - m.shape.width / 2.0;
            let oy = p.dy - m.shape.height / 2.0;
            writeln!(nets, "{} B : {ox} {oy}", m.name).unwrap();
        }
        for &k in &n.pads {
            writeln!(nets, "{} B", d.pads[k].name).unwrap();
        }
    }
    let mut pl = String::from("UCLA pl 1.0\n");
    for m in &d.macros {
        writeln!(pl, "{} 0 0 : N", m.name).unwrap();
    }
    for p in &d.pads {
        writeln!(pl, "{} {} {}", p.name, p.x, p.y).unwrap();
    }
    std::fs::write(stem.with_extension("blocks"), blocks).unwrap();
    std::fs::write(stem.with_extension("nets"), nets).unwrap();
    std::fs::write(stem.with_extension("pl"), pl).unwrap();
}

#[test]
fn bookshelf_triples_load() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for i in 0..10 {
        let mut params = random_params(&mut rng, i);
        params.side = (2 * params.side.0, 2 * params.side.1);
        let d = synthesize(&params, &mut rng).unwrap();
        let stem = dir.path().join(format!("bench{i}"));
        write_bookshelf(&d, &stem);
        let opts = LoadOptions {
            outline: OutlineSpec::Explicit(d.outline),
            ..LoadOptions::default()
        };
        let back = load_design(&stem.with_extension("nets"), DesignFormat::Bookshelf, &opts).unwrap();
        assert_eq!(back.macros, d.macros);
        assert_eq!(back.pads, d.pads);
        assert_eq!(back.outline, d.outline);
        assert_eq!(back.nets.len(), d.nets.len());
        for (a, b) in back.nets.iter().zip(&d.nets) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.pins, b.pins);
            assert_eq!(a.pads, b.pads);
        }
    }
}

#[test]
fn bookshelf_without_outline_gets_a_whitespace_square() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(62);
    let d = synthesize(&SynthParams::apte_class(), &mut rng).unwrap();
    let stem = dir.path().join("apte");
    write_bookshelf(&d, &stem);
    let opts = LoadOptions {
        outline: OutlineSpec::Whitespace(0.5),
        pads: spbo::netlist::PadPolicy::Project,
    };
    let back = load_design(&stem, DesignFormat::Bookshelf, &opts).unwrap();
    let side = (1.5 * d.total_macro_area()).sqrt();
    assert!((back.outline.width - side).abs() < 1e-9);
    assert!((back.outline.height - side).abs() < 1e-9);
}
