use qflab::catalog::{instantiate, FamilyId, FamilySpec};
use qflab::numerics::linspace;
use qflab::spread::check_m2;
use qflab::{Loop64, Policy64, Vec2f64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn targets() -> Vec<Vec2f64> {
    // 8 x 8 nodes
    let g = linspace(-2.0, 2.0, 7);
    g.iter().flat_map(|&x| g.iter().map(move |&y| Vec2f64::new(x, y))).collect()
}

#[test]
fn m2_coverage() {
    let xs = [Vec2f64::new(1.0, 0.0), Vec2f64::new(0.0, 1.0)];
    let mut bad = Vec::new();
    for id in FamilyId::ALL {
        let inst = instantiate::<f64>(&FamilySpec::defaults(id)).unwrap();
        for x in xs {
            let rep = check_m2(&inst.spread, &[x], &targets(), 1e-9).unwrap();
            if rep.coverage < 0.99 {
                bad.push(format!("{id} x={:?}: {} {:?}", (x.x, x.y), rep.coverage, rep.uncovered.first()));
            }
        }
    }
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn spread_loop_matches_section_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst = Vec::new();
    for id in FamilyId::ALL {
        let inst = instantiate::<f64>(&FamilySpec::defaults(id)).unwrap();
        let sl = inst.spread.loop_from_spread(Vec2f64::e1()).unwrap();
        let l = Loop64::new(inst.section.clone(), Policy64::default()).unwrap();
        let mut err: f64 = 0.0;
        for _ in 0..50 {
            let p = Vec2f64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let q = Vec2f64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let a = l.multiply(p, q);
            let b = sl.multiply(p, q);
            let e = match (a, b) {
                (Ok(a), Ok(b)) => a.dist(b) / (1.0 + a.norm()),
                _ => f64::INFINITY,
            };
            err = err.max(e);
        }
        worst.push((id, err));
    }
    let bad: Vec<_> = worst.iter().filter(|(_, e)| !(*e <= 1e-8)).collect();
    assert!(bad.is_empty(), "{bad:?}");
}
