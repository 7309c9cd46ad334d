use qflab::{Loop64, Policy64, Section64, Vec2f64};

#[test]
fn readme_example() -> qflab::Result<()> {
    let complex = Loop64::new(Section64::complex(), Policy64::default())?;
    let i = Vec2f64::new(0.0, 1.0);
    let z = complex.multiply(i, i)?;
    assert!((z.x + 1.0).abs() < 1e-12 && z.y.abs() < 1e-12);
    Ok(())
}
