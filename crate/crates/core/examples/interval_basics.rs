//! Moore arithmetic, intersection and an interval matrix-vector product.

use hullstate::interval::{Interval, IntervalMatrix, IntervalVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = Interval::new(1.0, 2.0)?;
    let b = Interval::new(-1.0, 3.0)?;
    println!("a + b = {:?}", a + b);
    let same = a;
    println!("a - a = {:?}  (dependency: not [0, 0])", a - same);
    println!("a * b = {:?}", a * b);
    println!("a ∩ b = {:?}", a.intersect(&b)?);
    println!("mid {} rad {}", b.mid(), b.rad());

    let m = IntervalMatrix::new(
        2,
        2,
        vec![
            Interval::new(0.9, 1.1)?,
            Interval::point(0.0),
            Interval::point(0.5),
            Interval::new(1.9, 2.1)?,
        ],
    )?;
    let v = IntervalVector::new(vec![Interval::new(-1.0, 1.0)?, Interval::point(1.0)]);
    let w = m.matvec(&v)?;
    println!("M v = {:?}", w.as_slice());
    println!("‖M v‖∞ = {}", w.inf_norm());
    Ok(())
}
