mod common;

use proptest::prelude::*;
use satidi::compilers::CellTag;
use satidi::engine::{simulate, Record, SimConfig};
use satidi::model::TileSystem;
use satidi_cli::format::*;

use common::{construction, CORPUS};

fn same_system(a: &TileSystem, b: &TileSystem) {
    assert_eq!(a.tile_count(), b.tile_count());
    assert_eq!((a.k(), a.c0()), (b.k(), b.c0()));
    for t in a.tiles() {
        let (ia, ib) = (a.tile_id(&t.name).unwrap(), b.tile_id(&t.name).unwrap());
        assert_eq!(a.concentration(ia), b.concentration(ib));
        let u = b.tile(ib);
        for d in satidi::model::Dir::ALL {
            for (la, lb) in t.side(d).iter().zip(u.side(d)) {
                assert_eq!(a.label_name(*la), b.label_name(lb));
                assert_eq!(a.strength(*la), b.strength(lb));
            }
        }
    }
}

#[test]
fn corpus_round_trips() {
    for recipe in CORPUS {
        let (c, args) = construction(recipe);
        let text = write_system(&c.system).unwrap();
        let sys: TileSystem = parse_system(&text).unwrap();
        assert_eq!(write_system(&sys).unwrap(), text, "{recipe}");
        same_system(&c.system, &sys);

        let file = AssemblyFile { assembly: c.initial.clone(), construction: Some(args), readout_map: Some(c.tags.clone()) };
        let text = write_assembly(&c.system, &file).unwrap();
        assert_eq!(parse_assembly(&c.system, &text).unwrap(), file, "{recipe}");
        let back = parse_assembly(&sys, &text).unwrap();
        assert_eq!(write_assembly(&sys, &back).unwrap(), text);

        let cfg = SimConfig::events(11, 300).with_audit(1);
        let tr = simulate(&c.system, &c.initial, &cfg).unwrap();
        let text = write_trajectory(&c.system, &cfg, &tr).unwrap();
        let (cfg2, tr2) = parse_trajectory(&c.system, &c.initial, &text).unwrap();
        assert_eq!(write_trajectory(&c.system, &cfg2, &tr2).unwrap(), text, "{recipe}");
        assert_eq!(tr2.events, tr.events);
        assert_eq!(tr2.warnings, tr.warnings);
        assert_eq!(tr2.energy, tr.energy);
        assert_eq!(tr2.replay(&c.system).unwrap(), tr.final_assembly);
    }
}

#[test]
fn final_only_trajectories_keep_the_final_state() {
    let (c, _) = construction("wire --kind reversible --length 5");
    let cfg = SimConfig::events(2, 50).with_record(Record::FinalOnly).with_max_time(1e6);
    let tr = simulate(&c.system, &c.initial, &cfg).unwrap();
    let text = write_trajectory(&c.system, &cfg, &tr).unwrap();
    assert!(text.contains("config max_events=50 max_time=1.0000000000000000e6 audit_every=0 record=final"));
    let (cfg2, tr2) = parse_trajectory(&c.system, &c.initial, &text).unwrap();
    assert_eq!(cfg2.max_time, Some(1e6));
    assert_eq!(tr2.final_assembly, tr.final_assembly);
    assert_eq!(tr2.event_count, 50);
    assert_eq!(write_trajectory(&c.system, &cfg2, &tr2).unwrap(), text);
}

const HAND: &str = "\
satidi-system 1   # hand written
k 2.5
c0 1 M

[strengths]
x 1.5
y 2
[tiles]
b  - -  x y  - -  - -
a  - -  - -  - -  x y
[concentrations]
a 100 nM
b 2.5uM
";

#[test]
fn hand_written_system_is_canonicalized() {
    let sys: TileSystem = parse_system(HAND).unwrap();
    let a = sys.tile_id("a").unwrap();
    assert!((sys.concentration(a) - 1e-7).abs() < 1e-22);
    assert!((sys.concentration(sys.tile_id("b").unwrap()) - 2.5e-6).abs() < 1e-21);
    let text = write_system(&sys).unwrap();
    assert!(text.starts_with("satidi-system 1\nk 2.5000000000000000e0\n"));
    // tiles come out in name order
    assert!(text.find("\na ").unwrap() < text.find("\nb ").unwrap());
    assert_eq!(write_system(&parse_system::<f64>(&text).unwrap()).unwrap(), text);
}

#[test]
fn malformed_files_are_rejected() {
    let bad = |t: &str| parse_system::<f64>(t).is_err();
    assert!(bad(&HAND.replace("satidi-system 1", "satidi-system 2")));
    assert!(bad(&HAND.replace("satidi-system 1", "satidi-system")));
    assert!(bad(&HAND.replace("x y  - -  - -", "x z  - -  - -")), "unknown label");
    assert!(bad(&HAND.replace("y 2\n", "y 2\ny 3\n")), "duplicate label");
    assert!(bad(&HAND.replace("a 100 nM", "c 100 nM")), "unknown tile");
    assert!(bad(&HAND.replace("a 100 nM", "a 100 n")), "prefix without unit");
    assert!(bad(&HAND.replace("a 100 nM", "a -1")), "negative concentration");
    assert!(bad(&HAND.replace("b  - -  x y  - -  - -", "b  - -  x y  - -")));

    let sys: TileSystem = parse_system(HAND).unwrap();
    let asm = "satidi-assembly 1\nsize 2 1\n[cells]\na b\n";
    assert!(parse_assembly(&sys, asm).is_ok());
    assert!(parse_assembly(&sys, &asm.replace("a b", "a c")).is_err());
    assert!(parse_assembly(&sys, &asm.replace("a b", "a")).is_err());
    assert!(parse_assembly(&sys, &asm.replace("size 2 1", "size 2 2")).is_err());
    assert!(parse_assembly(&sys, &format!("{asm}[readout_map]\nfiller bogus\n")).is_err());
}

#[test]
fn molar_prefixes() {
    for (s, v) in [("1", 1.0), ("1 M", 1.0), ("3mM", 3e-3), ("3 uM", 3e-6), ("3µM", 3e-6), ("7 nM", 7e-9), ("2pM", 2e-12), ("1fM", 1e-15)] {
        let got: f64 = parse_molar(0, s).unwrap();
        assert!((got - v).abs() <= v * 1e-15, "{s}");
    }
}

fn tags() -> impl Strategy<Value = CellTag> {
    prop_oneof![
        Just(CellTag::Filler),
        Just(CellTag::Border),
        Just(CellTag::Top),
        Just(CellTag::Bottom),
        (0usize..50, proptest::option::of(0u8..2)).prop_map(|(line, bit)| CellTag::Input { line, bit }),
        (0usize..50, 0usize..50).prop_map(|(line, index)| CellTag::Wire { line, index }),
        (0usize..50, 0usize..50).prop_map(|(row, col)| CellTag::Gate { row, col }),
        (0usize..50).prop_map(|line| CellTag::Cap { line }),
        (1usize..50, 1usize..50).prop_map(|(x, y)| CellTag::Cell { x, y }),
        (0u8..2, -20i64..20, -20i64..20).prop_map(|(parity, x, y)| CellTag::Block { parity, x, y }),
    ]
}

proptest! {
    #[test]
    fn reals_round_trip(v in proptest::num::f64::NORMAL | proptest::num::f64::ZERO) {
        let s = fmt_real(v);
        prop_assert_eq!(parse_real::<f64>(0, &s).unwrap(), v);
        let w = v as f32;
        prop_assume!(w.is_finite());
        prop_assert_eq!(parse_real::<f32>(0, &fmt_real(w)).unwrap(), w);
    }

    #[test]
    fn cell_tags_round_trip(t in tags()) {
        prop_assert_eq!(parse_tag(&tag_text(&t)), Some(t));
    }

    #[test]
    fn random_systems_round_trip(
        strengths in proptest::collection::vec(0.01f64..10.0, 1..5),
        tiles in proptest::collection::vec((proptest::collection::vec(0usize..6, 8), 1e-9f64..1.0), 1..8),
        k in 0.1f64..100.0,
    ) {
        let labels: Vec<String> = (0..strengths.len()).map(|i| format!("l{i}")).collect();
        let mut b = TileSystem::<f64>::builder().k(k);
        for (l, e) in labels.iter().zip(&strengths) {
            b = b.strength(l, *e);
        }
        let pick = |i: usize| if i >= labels.len() { "-" } else { labels[i].as_str() };
        for (n, (sides, c)) in tiles.iter().enumerate() {
            let s: Vec<&str> = sides.iter().map(|&i| pick(i)).collect();
            let name = format!("t{}", tiles.len() - n);
            b = b.tile(&name, [s[0], s[1]], [s[2], s[3]], [s[4], s[5]], [s[6], s[7]]).concentration(&name, *c);
        }
        let sys = b.build().unwrap();
        let text = write_system(&sys).unwrap();
        let back: TileSystem = parse_system(&text).unwrap();
        prop_assert_eq!(write_system(&back).unwrap(), text);
        same_system(&sys, &back);
    }
}
