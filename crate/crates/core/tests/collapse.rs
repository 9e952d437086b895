use leafspace_core::chernweil::gv;
use leafspace_core::collapse::{collapse_cocycle, thurston_gv, OneObjectModel};
use leafspace_core::symexpr::{parse_expr, SmoothMap, VarContext};

fn map(e: &str) -> SmoothMap {
    let b = vec![(-2.0, 2.0)];
    SmoothMap::new(vec![parse_expr(e, &VarContext::chart(1)).unwrap()], b.clone(), b).unwrap()
}

fn rotations() -> OneObjectModel {
    OneObjectModel::new(
        vec![(-2.0, 2.0)],
        vec![
            ("r1".into(), map("(24*x1-7)/(7*x1+24)")),
            ("r2".into(), map("(40*x1+9)/(-9*x1+40)")),
            ("r4".into(), map("(38*x1-25)/(20*x1+58)")),
            ("r5".into(), map("(507*x1+110)/(-99*x1+573)")),
        ],
    )
    .unwrap()
}

const REFERENCE: [([&str; 3], f64); 4] = [
    (["r1", "r2", "r4"], -0.00280436264948860700810925371153),
    (["r4", "r5", "r1"], -0.0338592339431153886116579919412),
    (["r2", "r4", "r1"], 0.0317629894986535422279760681701),
    (["r5", "r4", "r2"], -0.0170038269503864304456146794869),
];

#[test]
fn thurston_and_collapse_match_reference() {
    let m = rotations();
    for (names, want) in REFERENCE {
        let idx: Vec<usize> = names.iter().map(|n| m.index(n).unwrap()).collect();
        let f = |i: usize| &m.maps()[idx[i]].1;
        let t = thurston_gv(f(0), f(1), f(2), 1e-12).unwrap();
        let c = collapse_cocycle(&m, &gv(1), 3, &m.string(&idx), 1e-12).unwrap();
        println!("{names:?}: thurston {t:.15} collapse {:.15} ref {want:.15}", c.value);
        assert!((t - want).abs() < 1e-9, "{names:?}: {t} vs {want}");
        assert!((c.value - want).abs() < 1e-9, "{names:?}: {} vs {want}", c.value);
    }
}

#[test]
fn thurston_cocycle_residual() {
    use leafspace_core::collapse::cech_cocycle_check;
    let m = rotations();
    let tuples = m.sample_tuples(4, 20, 7);
    let r = cech_cocycle_check(
        &m,
        |s| {
            let f = |i: usize| &s.links[i].map;
            thurston_gv(f(0), f(1), f(2), 1e-12)
        },
        3,
        &tuples,
    )
    .unwrap();
    println!("{r:?}");
    assert!(r.max_residual < 1e-4);
    let c = cech_cocycle_check(&m, |s| Ok(collapse_cocycle(&m, &gv(1), 3, s, 1e-12)?.value), 3, &tuples).unwrap();
    println!("{c:?}");
    assert!(c.max_residual < 1e-4);
}
