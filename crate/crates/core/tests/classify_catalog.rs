use qflab::catalog::{instantiate, FamilyId, FamilySpec};
use qflab::structure::classify;
use qflab::{Loop64, Policy64};

fn classify_spec(spec: &FamilySpec) -> Result<Vec<String>, String> {
    let inst = instantiate::<f64>(spec).map_err(|e| e.to_string())?;
    let l = Loop64::new(inst.section, Policy64::default()).map_err(|e| e.to_string())?;
    let rep = classify(&l).map_err(|e| e.to_string())?;
    Ok(spec.expected().mismatches(&rep.verdicts))
}

#[test]
fn default_families_classify_as_expected() {
    let mut bad = Vec::new();
    for id in std::iter::once(FamilyId::Complex).chain(FamilyId::ALL) {
        match classify_spec(&FamilySpec::defaults(id)) {
            Ok(m) if m.is_empty() => {}
            Ok(m) => bad.push(format!("{id}: {m:?}")),
            Err(e) => bad.push(format!("{id}: {e}")),
        }
    }
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn non_default_parameters() {
    let cases: &[(FamilyId, &[(&str, f64)])] = &[
        (FamilyId::P11a, &[("w", 4.0)]),
        (FamilyId::P16a, &[("w", 3.0), ("c", 0.5)]),
        (FamilyId::P16b, &[("d", 0.5)]),
        (FamilyId::P14, &[("q", 2.0)]),
        (FamilyId::P12b, &[("gamma", 0.5)]),
        (FamilyId::P13a, &[("s", 0.25)]),
    ];
    for (id, kv) in cases {
        let over = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let spec = FamilySpec::with(*id, &over);
        let m = classify_spec(&spec).unwrap();
        assert!(m.is_empty(), "{id} {kv:?}: {m:?}");
    }
}
