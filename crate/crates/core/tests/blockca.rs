use proptest::prelude::*;
use satidi::blockca::*;

fn balls(w: usize, h: usize, at: &[(usize, usize)]) -> Grid2D {
    let mut g = Grid2D::new(w, h);
    for &(x, y) in at {
        g.set(x, y, 1);
    }
    g
}

fn ones(g: &Grid2D) -> Vec<(usize, usize)> {
    let mut v: Vec<_> = (0..g.len()).filter(|&i| g.get_index(i) == 1).map(|i| g.coords(i)).collect();
    v.sort();
    v
}

#[test]
fn identity_rules_are_constant() {
    let r1 = BlockRule1D::identity(3).unwrap();
    let h = run_bca1d(&r1, &[2, 0, 1, 1], 5, &Boundary1D::Periodic).unwrap();
    assert!(h.iter().all(|row| row == &h[0]));
    let r2 = BlockRule2D::identity(2).unwrap();
    let g = balls(4, 4, &[(1, 2), (3, 3)]);
    let h = run_bca2d(&r2, &g, 4, 0, Boundary2D::Periodic).unwrap();
    assert!(h.iter().all(|x| x == &g));
}

#[test]
fn xor_streams_give_pascal_mod_two() {
    let n = 12;
    let mut left = vec![0; n];
    left[0] = 1;
    let h = run_bca1d(&BlockRule1D::xor(), &[], n, &Boundary1D::Streams { left, right: vec![0; n] })
        .unwrap();
    // row t, pair k sits at rule cell (1 + k, t - k); both outputs carry
    // C(i - 1 + j - 1, i - 1) mod 2 by Lucas' theorem.
    for t in 1..n {
        for k in 0..t - 1 {
            let (a, b) = (k, t - 1 - k);
            let expected = ((a & b) == 0) as u16;
            let out = &h[t + 1][1 + 2 * k..3 + 2 * k];
            assert_eq!(out, &[expected, expected], "row {t} pair {k}");
        }
    }
}

#[test]
fn bbm_table_properties() {
    let bbm = bbm_rule();
    assert!(bbm.conserves(1));
    assert!(bbm.is_symmetric());
    assert_eq!(bbm.apply([1, 0, 0, 0]), [0, 0, 1, 0]);
    assert_eq!(bbm.apply([0, 1, 0, 0]), [0, 0, 0, 1]);
    assert_eq!(bbm.apply([1, 0, 1, 0]), [0, 1, 0, 1]);
    match invert_rule2d(&bbm) {
        Inversion::Bijective(inv) => match invert_rule2d(&inv) {
            Inversion::Bijective(back) => assert_eq!(back, bbm),
            other => panic!("{other:?}"),
        },
        other => panic!("{other:?}"),
    }
}

#[test]
fn critters_is_bijective_and_blinks_on_uniform_grids() {
    let c = critters_rule();
    assert!(c.is_bijective());
    for v in [0, 1] {
        let mut g = Grid2D::new(6, 6);
        for i in 0..g.len() {
            g.set_index(i, v);
        }
        let h = run_bca2d(&c, &g, 2, 0, Boundary2D::Periodic).unwrap();
        assert_ne!(h[1], g);
        assert_eq!(h[2], g);
    }
}

#[test]
fn constant_rule_is_not_bijective() {
    let r = BlockRule2D::from_fn(2, |_| [0; 4]).unwrap();
    match invert_rule2d(&r) {
        Inversion::NotBijective { first, second, image } => {
            assert_ne!(first, second);
            assert_eq!(r.apply(first), image);
            assert_eq!(r.apply(second), image);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn bbm_single_ball_moves_diagonally() {
    let h = run_bca2d(&bbm_rule(), &balls(8, 8, &[(0, 1)]), 3, 0, Boundary2D::Periodic).unwrap();
    assert_eq!(ones(&h[1]), vec![(1, 0)]);
    assert_eq!(ones(&h[2]), vec![(2, 7)]);
    assert_eq!(ones(&h[3]), vec![(3, 6)]);
}

#[test]
fn bbm_head_on_collision_scatters_and_reverses() {
    let bbm = bbm_rule();
    let g = balls(8, 8, &[(0, 5), (5, 0)]);
    let h = run_bca2d(&bbm, &g, 4, 0, Boundary2D::Periodic).unwrap();
    assert_eq!(ones(&h[2]), vec![(2, 3), (3, 2)]);
    assert_eq!(ones(&h[3]), vec![(2, 2), (3, 3)]);
    assert_eq!(ones(&h[4]), vec![(1, 1), (4, 4)]);
    let Inversion::Bijective(inv) = invert_rule2d(&bbm) else { panic!() };
    let back = run_bca2d(&inv, &h[4], 4, 1, Boundary2D::Periodic).unwrap();
    assert_eq!(back[4], g);
}

#[test]
fn bounded_walls_reflect() {
    // A ball heading into the corner is sent back the way it came.
    let bbm = bbm_rule();
    let g = balls(4, 4, &[(2, 1)]);
    let h = run_bca2d(&bbm, &g, 3, 0, Boundary2D::Bounded).unwrap();
    assert_eq!(ones(&h[1]), vec![(3, 0)]);
    assert_eq!(ones(&h[2]), vec![(3, 0)]);
    assert_eq!(ones(&h[3]), vec![(2, 1)]);
    assert!(h.iter().all(|x| x.count(1) == 1));
}

#[test]
fn no_fireable_blocks_leaves_grid_alone() {
    let g = balls(4, 4, &[(1, 1)]);
    let phase: Vec<bool> = (0..16).map(|i| (i % 4 + i / 4) % 2 == 0).collect();
    let a = ArrowGrid::from_parts(g, phase, 0, Boundary2D::Periodic).unwrap();
    let parts = a.partitions().unwrap();
    assert!(a.fireable_blocks(&parts).is_empty());
    let (after, _) = async_run2d(&bbm_rule(), &a, &Schedule::Random { firings: 10, seed: 1 }).unwrap();
    assert_eq!(after, a);
}

#[test]
fn partition_sweeps_equal_two_synchronous_steps() {
    let bbm = bbm_rule();
    let g = balls(8, 8, &[(0, 5), (5, 0), (6, 6), (1, 2)]);
    let a = ArrowGrid::new(g.clone(), 0, Boundary2D::Periodic);
    let parts = a.partitions().unwrap();
    let mut order: Vec<BlockId> = parts.blocks(0).iter().map(|(id, _)| *id).rev().collect();
    order.extend(parts.blocks(1).iter().map(|(id, _)| *id));
    let (after, sheet) = async_run2d(&bbm, &a, &Schedule::Blocks(order)).unwrap();
    let h = run_bca2d(&bbm, &g, 2, 0, Boundary2D::Periodic).unwrap();
    assert_eq!(after.grid(), &h[2]);
    assert!(sheet.times.iter().all(|&t| t == 2));
    assert!(sheet.consistent);
}

#[test]
fn random_schedule_completed_to_flat_sheet_matches_history() {
    let bbm = bbm_rule();
    let g = balls(8, 8, &[(0, 5), (5, 0), (6, 6), (1, 2), (3, 3)]);
    let a = ArrowGrid::new(g.clone(), 0, Boundary2D::Periodic);
    let parts = a.partitions().unwrap();
    let (mut after, mut sheet) = async_run2d(&bbm, &a, &Schedule::Random { firings: 300, seed: 9 }).unwrap();
    assert!(sheet.consistent);
    let top = *sheet.times.iter().max().unwrap();
    complete_to(&bbm, &mut after, &parts, &mut sheet, top).unwrap();
    let h = run_bca2d(&bbm, &g, top as usize, 0, Boundary2D::Periodic).unwrap();
    assert_eq!(after.grid(), &h[top as usize]);
}

#[test]
fn async_matches_sync_for_bbm_and_critters() {
    let g = balls(8, 8, &[(0, 5), (5, 0), (6, 6), (1, 2)]);
    for rule in [bbm_rule(), critters_rule()] {
        let r = check_async_sync_equivalence(&rule, &g, 0, Boundary2D::Periodic, 10, 500, 3, None).unwrap();
        assert!(r.pass(), "{:?}", r.counterexample);
    }
    let id = BlockRule2D::identity(2).unwrap();
    assert!(check_async_sync_equivalence(&id, &g, 1, Boundary2D::Periodic, 10, 100, 3, None).unwrap().pass());
    let bounded = balls(6, 8, &[(1, 1), (4, 5)]);
    let r = check_async_sync_equivalence(&bbm_rule(), &bounded, 1, Boundary2D::Bounded, 10, 500, 4, None).unwrap();
    assert!(r.pass(), "{:?}", r.counterexample);
}

#[test]
fn corrupted_arrow_flip_is_caught() {
    let g = balls(8, 8, &[(0, 5), (5, 0), (6, 6), (1, 2)]);
    let r = check_async_sync_equivalence(
        &critters_rule(),
        &g,
        0,
        Boundary2D::Periodic,
        10,
        500,
        3,
        Some(Fault::SkipArrowFlip { at: 20 }),
    )
    .unwrap();
    let cx = r.counterexample.expect("fault must be detected");
    assert_eq!(cx.trial, 0);
    assert!(cx.cell.0 < 8 && cx.cell.1 < 8);
}

fn random_bijection() -> impl Strategy<Value = BlockRule2D> {
    Just((0..16usize).collect::<Vec<_>>()).prop_shuffle().prop_map(|perm| {
        let dec = |i: usize| [(i >> 3) as u16 & 1, (i >> 2) as u16 & 1, (i >> 1) as u16 & 1, i as u16 & 1];
        BlockRule2D::from_fn(2, |b| dec(perm[(b[0] * 8 + b[1] * 4 + b[2] * 2 + b[3]) as usize])).unwrap()
    })
}

fn random_grid(w: usize, h: usize) -> impl Strategy<Value = Grid2D> {
    proptest::collection::vec(0u16..2, w * h).prop_map(move |cells| {
        let mut g = Grid2D::new(w, h);
        for (i, v) in cells.into_iter().enumerate() {
            g.set_index(i, v);
        }
        g
    })
}

proptest! {
    #[test]
    fn double_inversion_is_identity(r in random_bijection()) {
        let Inversion::Bijective(inv) = invert_rule2d(&r) else { panic!("permutation") };
        let Inversion::Bijective(back) = invert_rule2d(&inv) else { panic!("permutation") };
        prop_assert_eq!(back, r);
    }

    #[test]
    fn bijective_histories_run_backwards(r in random_bijection(), g in random_grid(6, 4), t in 1usize..8, p in 0u8..2) {
        let Inversion::Bijective(inv) = invert_rule2d(&r) else { panic!("permutation") };
        let fwd = run_bca2d(&r, &g, t, p, Boundary2D::Periodic).unwrap();
        let last = p ^ ((t as u8 - 1) & 1);
        let back = run_bca2d(&inv, &fwd[t], t, last, Boundary2D::Periodic).unwrap();
        prop_assert_eq!(&back[t], &g);
    }

    #[test]
    fn bbm_count_is_conserved_synchronously_and_asynchronously(g in random_grid(8, 6), seed in any::<u64>()) {
        let bbm = bbm_rule();
        let n = g.count(1);
        for x in run_bca2d(&bbm, &g, 10, 0, Boundary2D::Periodic).unwrap() {
            prop_assert_eq!(x.count(1), n);
        }
        let a = ArrowGrid::new(g, 1, Boundary2D::Bounded);
        let (after, sheet) = async_run2d(&bbm, &a, &Schedule::Random { firings: 200, seed }).unwrap();
        prop_assert_eq!(after.grid().count(1), n);
        prop_assert!(sheet.consistent);
    }

    #[test]
    fn random_rules_are_async_sync_equivalent(r in random_bijection(), g in random_grid(6, 6), seed in any::<u64>()) {
        let rep = check_async_sync_equivalence(&r, &g, 0, Boundary2D::Periodic, 3, 150, seed, None).unwrap();
        prop_assert!(rep.pass(), "{:?}", rep.counterexample);
    }
}
