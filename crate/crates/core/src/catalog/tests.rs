use super::*;
use crate::linalg::decompose_gl2plus;
use crate::scalar::{angle_diff, normalize_angle};
use crate::spread::check_m1;
use std::f64::consts::PI;

fn inst(id: FamilyId) -> FamilyInstance<f64> {
    instantiate(&FamilySpec::defaults(id)).unwrap()
}

fn inst_with(id: FamilyId, kv: &[(&str, f64)]) -> FamilyInstance<f64> {
    let o: BTreeMap<String, f64> = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    instantiate(&FamilySpec::with(id, &o)).unwrap()
}

fn spec_with(id: FamilyId, kv: &[(&str, f64)]) -> FamilySpec {
    let o: BTreeMap<String, f64> = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    FamilySpec::with(id, &o)
}

fn all_ids() -> Vec<FamilyId> {
    let mut v = vec![FamilyId::Complex];
    v.extend(FamilyId::ALL);
    v
}

#[test]
fn parse_and_display_round_trip() {
    for id in all_ids() {
        assert_eq!(id.as_str().parse::<FamilyId>().unwrap(), id);
    }
    assert_eq!("p13c".parse::<FamilyId>().unwrap(), FamilyId::P13c);
    assert!(matches!("P15".parse::<FamilyId>(), Err(QfError::UnknownFamily(_))));
    assert_eq!(FamilyId::ALL.len(), 14);
    assert_eq!("power:2.5".parse::<MonotoneFn>().unwrap(), MonotoneFn::Power(2.5));
    assert!("sqrt".parse::<MonotoneFn>().is_err());
}

#[test]
fn defaults_validate() {
    for id in all_ids() {
        let s = FamilySpec::defaults(id);
        assert!(validate(&s).is_ok(), "{id}: {:?}", validate(&s));
    }
}

#[test]
fn validate_examples() {
    assert!(validate(&spec_with(FamilyId::P16b, &[("d", 0.5)])).is_ok());
    let e = validate(&spec_with(FamilyId::P16b, &[("d", 0.4)])).unwrap_err();
    assert_eq!(e.len(), 1);
    assert!(e[0].contains("4d^2 >= 1") && e[0].contains("0.64"), "{e:?}");
    let e = validate(&spec_with(FamilyId::P11a, &[("w", 1.0)])).unwrap_err();
    assert!(e[0].contains("w > 1"));
    let e = validate(&spec_with(FamilyId::P14, &[("w", 0.0), ("z", -1.0 / 3.0), ("p", 0.0), ("q", 3.0)])).unwrap_err();
    assert!(e.iter().any(|m| m.contains("(0, -1/3, 0, 3)")), "{e:?}");
    let e = validate(&spec_with(FamilyId::P13c, &[("w", -1.0), ("z", 0.0), ("p", 1.0), ("q", 0.0)])).unwrap_err();
    assert!(e.iter().any(|m| m.contains("(-1, 0, 1, 0)")), "{e:?}");
    assert!(validate(&spec_with(FamilyId::P12b, &[("gamma", 0.0)])).is_err());
    assert!(validate(&spec_with(FamilyId::P12b, &[("gamma", -1.0)])).is_ok());
    assert!(validate(&spec_with(FamilyId::P13a, &[("s", 1.0)])).is_err());
    assert!(validate(&spec_with(FamilyId::P16a, &[("w", 2.0), ("c", 3.0)])).is_err());
    assert!(validate(&spec_with(FamilyId::P16a, &[("w", 1.0)])).is_err());
    // p = (k-1)/(k+1) q needs an integer k
    assert!(validate(&spec_with(FamilyId::P17a, &[("p", 0.5), ("q", 1.0)])).is_err());
    assert!(validate(&spec_with(FamilyId::P17a, &[("p", 1.0), ("q", 3.0)])).is_ok());
    assert!(validate(&spec_with(FamilyId::P17b, &[("m", 2.0), ("n", 4.0)])).is_err());
    assert!(validate(&spec_with(FamilyId::P17b, &[("m", 1.5)])).is_err());
    let e = validate(&spec_with(FamilyId::P11b, &[("w", 2.0)])).unwrap_err();
    assert!(e[0].contains("not used"));
    let mut f = FamilySpec::defaults(FamilyId::RemarkF);
    f.f = Some(MonotoneFn::Power(1.0));
    assert!(validate(&f).is_err());
    assert!(matches!(
        instantiate::<f64>(&spec_with(FamilyId::P16b, &[("d", 0.4)])),
        Err(QfError::Violations(_))
    ));
}

#[test]
fn p11a_value_at_three_half_pi() {
    let i = inst_with(FamilyId::P11a, &[("w", 4.0)]);
    let a = i.section.a(1.0, 3.0 * PI / 2.0).unwrap();
    assert!((a - 2.0).abs() < 1e-14, "{a}");
    assert_eq!(i.section.a(1.0, PI / 2.0).unwrap(), 1.0);
}

#[test]
fn p16a_kernel_power_law() {
    let i = inst(FamilyId::P16a);
    for s in [0.3, 1.0, 2.5] {
        // spread element at phi = 0 has first column (s, 0), r = s^{3/2}
        let m = (i.spread.branches[0].eval)(&[s, 0.0]).unwrap();
        let c = decompose_gl2plus(&m).unwrap();
        let r = f64::powf(s, 1.5);
        assert!((c.u - r).abs() < 1e-13 * r);
        let a = i.section.a(r, 0.0).unwrap();
        assert!((a - r.powf(-1.0 / 3.0)).abs() < 1e-14);
        assert!((c.k - a).abs() < 1e-13);
    }
}

/// Native parameter points inside each branch, for the dual-route check.
fn native_points(i: &FamilyInstance<f64>) -> Vec<(usize, Vec<f64>)> {
    let mut out = Vec::new();
    for (bi, br) in i.spread.branches.iter().enumerate() {
        let n = br.seed_box.len();
        for k in 0..25 {
            let p: Vec<f64> = (0..n)
                .map(|d| {
                    let (lo, hi) = br.seed_box[d];
                    let f = ((k * (7 + 5 * d) + 3) % 25) as f64 / 25.0 + 0.02;
                    lo + (hi - lo) * f
                })
                .collect();
            if (br.eval)(&p).is_some() {
                out.push((bi, p));
            }
        }
    }
    out
}

#[test]
fn substitution_matches_spread_decomposition() {
    for id in all_ids() {
        let i = inst(id);
        if !i.is_implicit() {
            continue;
        }
        let mut n = 0;
        for (bi, p) in native_points(&i) {
            let m = (i.spread.branches[bi].eval)(&p).unwrap();
            if m.det() <= 1e-8 {
                continue;
            }
            let c = decompose_gl2plus(&m).unwrap();
            let s = i.substitution(bi, &p).unwrap_or_else(|| panic!("{id} {p:?}"));
            let r = s.rcos.hypot(s.rsin);
            let t = normalize_angle(s.rsin.atan2(s.rcos));
            let scale = 1.0 + c.l.abs() + c.k;
            assert!((r - c.u).abs() < 1e-10 * c.u, "{id} {p:?}: r {r} vs {}", c.u);
            assert!(angle_diff(t, c.t).abs() < 1e-10, "{id} {p:?}: t {t} vs {}", c.t);
            assert!((s.a - c.k).abs() < 1e-10 * scale, "{id} {p:?}: a {} vs {}", s.a, c.k);
            assert!((s.b - c.l).abs() < 1e-10 * scale, "{id} {p:?}: b {} vs {}", s.b, c.l);
            n += 1;
        }
        assert!(n >= 10, "{id}: only {n} points");
    }
}

#[test]
fn p17a_substitution_other_parameters() {
    for kv in [
        vec![("p", 1.0), ("q", 3.0), ("c", 0.0), ("d", 2.0)],
        vec![("p", 0.0), ("q", 1.0), ("c", 0.2), ("d", 2.0)],
        vec![("p", 1.0), ("q", 1.0), ("c", 0.0), ("d", -0.5)],
    ] {
        let s = spec_with(FamilyId::P17a, &kv);
        if validate(&s).is_err() {
            continue;
        }
        let i: FamilyInstance<f64> = instantiate(&s).unwrap();
        for (bi, p) in native_points(&i) {
            let m = (i.spread.branches[bi].eval)(&p).unwrap();
            let c = decompose_gl2plus(&m).unwrap();
            let sb = i.substitution(bi, &p).unwrap();
            assert!((sb.a - c.k).abs() < 1e-9 * (1.0 + c.k), "{kv:?} {p:?}");
            assert!((sb.b - c.l).abs() < 1e-9 * (1.0 + c.l.abs()), "{kv:?} {p:?} b {} vs {}", sb.b, c.l);
        }
    }
}

#[test]
fn chart_inverts_spread() {
    for id in all_ids() {
        let i = inst(id);
        for k in 0..40 {
            let th = 2.0 * PI * (k as f64 + 0.37) / 40.0;
            let rho = 0.2 * 1.13f64.powi(k);
            let x = Vec2::new(rho * th.cos(), rho * th.sin());
            let m = i.spread_matrix(x).unwrap_or_else(|e| panic!("{id} {x:?}: {e}"));
            let col = m.first_column();
            assert!(col.dist(x) < 1e-10 * (1.0 + rho), "{id}: {col:?} vs {x:?}");
        }
    }
}

#[test]
fn section_reproduces_spread() {
    for id in all_ids() {
        let i = inst(id);
        for &r in &[0.2, 0.9, 1.0, 3.7] {
            for j in 0..24 {
                let t = 2.0 * PI * (j as f64 + 0.1) / 24.0;
                let (a, b) = i.section.eval(r, t).unwrap_or_else(|e| panic!("{id} ({r},{t}): {e}"));
                let x = element_of(&i.section, PolarParam::new(r, t)).unwrap();
                let c = decompose_gl2plus(&i.spread_matrix(x).unwrap()).unwrap();
                let scale = 1.0 + a + b.abs();
                assert!((c.u - r).abs() < 1e-9 * r, "{id} u {} vs {r}", c.u);
                assert!((c.k - a).abs() < 1e-9 * scale, "{id} ({r},{t}) a {a} vs {}", c.k);
                assert!((c.l - b).abs() < 1e-9 * scale, "{id} ({r},{t}) b {b} vs {}", c.l);
            }
        }
    }
}

#[test]
fn boundary_values() {
    let rs = [0.125, 0.5, 1.0, 2.0, 8.0];
    for id in [
        FamilyId::P11c,
        FamilyId::P12a,
        FamilyId::P12b,
        FamilyId::P13a,
        FamilyId::P13b,
        FamilyId::P13c,
        FamilyId::P14,
    ] {
        let i = inst(id);
        for &r in &rs {
            for k in [0.0, 1.0] {
                let (a, b) = i.section.eval(r, k * PI).unwrap();
                assert!((a - 1.0).abs() < 1e-9 && b.abs() < 1e-9, "{id} r={r} k={k}: {a} {b}");
            }
        }
    }
    let i = inst(FamilyId::P11b);
    for &r in &rs {
        let (a0, b0) = i.section.eval(r, 0.0).unwrap();
        let (a1, b1) = i.section.eval(r, PI).unwrap();
        assert!((a0 - 1.0).abs() < 1e-12 && b0.abs() < 1e-12);
        assert!((a1 - 3.0).abs() < 1e-9 && b1.abs() < 1e-9, "{a1} {b1}");
    }
    // a(r, pi) = sqrt(-q/z)
    let i = inst_with(FamilyId::P14, &[("q", 2.0), ("z", -1.0)]);
    for &r in &rs {
        assert!((i.section.a(r, 0.0).unwrap() - 1.0).abs() < 1e-9);
        let a = i.section.a(r, PI).unwrap();
        assert!((a - 2f64.sqrt()).abs() < 1e-8, "{a}");
    }
    let i = inst_with(FamilyId::P16b, &[("d", 0.5)]);
    for &r in &rs {
        let (a, b) = i.section.eval(r, 0.0).unwrap();
        assert_eq!(a, 1.0);
        assert!((b - r.ln() / 0.5).abs() < 1e-14);
    }
    let i = inst(FamilyId::RemarkF);
    for u in [0.3f64, 1.0, 2.0] {
        let f = |u: f64| u + u * u * u;
        let r = (u * f(u) / f(1.0)).sqrt();
        let a = i.section.a(r, 0.0).unwrap();
        assert!((a - (u * f(1.0) / f(u)).sqrt()).abs() < 1e-12);
    }
}

#[test]
fn p11b_kernel_translations() {
    use crate::structure::kernel_translations;
    let i = inst(FamilyId::P11b);
    let k = kernel_translations(&i.section, &[0.5, 1.0, 2.0], &NumericPolicyF::default()).unwrap();
    assert!(!k.diagonal);
    for e in &k.entries {
        let m = e.matrix;
        assert!(m[0][1].abs() < 1e-9 && m[1][0].abs() < 1e-12);
        let al = m[0][0];
        if e.k == 0 {
            assert!(al > 0.0 && (m[1][1] - al).abs() < 1e-9);
        } else {
            assert!(al < 0.0 && (m[1][1] - al / 9.0).abs() < 1e-9, "{m:?}");
        }
    }
}

type NumericPolicyF = crate::section::NumericPolicy<f64>;

#[test]
fn p16a_without_shear_is_power_remark() {
    for w in [0.5, 2.0, 3.0] {
        let a = inst_with(FamilyId::P16a, &[("w", w), ("c", 0.0)]);
        let mut spec = FamilySpec::defaults(FamilyId::RemarkF);
        spec.f = Some(MonotoneFn::Power(w));
        let b: FamilyInstance<f64> = instantiate(&spec).unwrap();
        for &r in &[0.125, 0.7, 1.0, 4.0, 8.0] {
            for j in 0..8 {
                let t = j as f64 * 0.8;
                let (a1, b1) = a.section.eval(r, t).unwrap();
                let (a2, b2) = b.section.eval(r, t).unwrap();
                assert!((a1 - a2).abs() < 1e-10 && (b1 - b2).abs() < 1e-10, "w={w} r={r}");
            }
        }
    }
}

#[test]
fn p17b_stated_tuple_is_complex() {
    let i = inst_with(FamilyId::P17b, &[("d", 1.0)]);
    for j in 0..16 {
        let (a, b) = i.section.eval(1.3, j as f64 * 0.4).unwrap();
        assert!((a - 1.0).abs() < 1e-14 && b.abs() < 1e-14);
    }
}

#[test]
fn expected_table() {
    let e = expected_verdicts(FamilyId::P11a);
    assert!(e.decomposable && !e.quasi_simple && e.kind.contains("split"));
    let e = expected_verdicts(FamilyId::P13b);
    assert!(!e.decomposable && e.quasi_simple);
    let e = expected_verdicts(FamilyId::P17b);
    assert!(e.decomposable && e.kind.contains("split"));
    let e = expected_verdicts(FamilyId::P16b);
    assert!(e.decomposable && e.quasi_simple && e.contains_so2);
    assert_eq!(FamilySpec::defaults(FamilyId::P14).expected().kernel_is_diagonal, Some(true));
    assert_eq!(spec_with(FamilyId::P14, &[("q", 2.0)]).expected().kernel_is_diagonal, Some(false));
}

#[test]
fn exports_pass_m1() {
    for id in all_ids() {
        let i = inst(id);
        let s = i.export(10, 20).unwrap();
        assert_eq!(s.elements.len(), 200);
        s.check().unwrap();
        let rep = check_m1(&s, 1e-6).unwrap();
        assert!(rep.passed(), "{id}: min |det| {}", rep.min_abs_det);
        let back = SpreadSample::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }
}

#[test]
fn loop_sections() {
    use crate::section::is_loop_section;
    for id in all_ids() {
        let rep = is_loop_section(&inst(id).section, &NumericPolicyF::default());
        if id == FamilyId::P16b {
            // b(r,0) = ln r / d
            assert!(!rep.ok);
            for &(u, _, b) in &rep.witnesses {
                assert!((b - u.ln() / 1.0).abs() < 1e-12);
            }
            continue;
        }
        if id == FamilyId::P17a {
            // only b(1,0) vanishes on the positive axis
            assert!(!rep.ok);
            assert!(rep.witnesses.iter().all(|w| w.0 != 1.0));
            continue;
        }
        assert!(rep.ok, "{id}: {:?}", &rep.witnesses[..rep.witnesses.len().min(3)]);
    }
}
