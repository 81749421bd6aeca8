// Exact Wasserstein distances between weighted point clouds.
//
// cargo run --example wasserstein_exact

use earlystop::measures::{self, EmpiricalMeasure};
use earlystop::Result;

pub fn run_example() -> Result<()> {
    let a = EmpiricalMeasure::uniform(vec![vec![0.0], vec![2.0]])?;
    let b = EmpiricalMeasure::uniform(vec![vec![1.0], vec![3.0]])?;
    let d1 = measures::wasserstein(&a, &b, 1.0)?;
    println!("d_1({{0,2}}, {{1,3}}) = {d1}");
    assert!((d1 - 1.0).abs() < 1e-12);

    let mu = EmpiricalMeasure::new(
        vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![0.5, 0.25, 0.25],
    )?;
    let nu = EmpiricalMeasure::uniform(vec![vec![0.5, 0.5], vec![-0.5, 0.0]])?;

    // the optimal plan is a coupling: its marginals are mu and nu
    let plan = measures::optimal_coupling(&mu, &nu, 2.0)?;
    assert!(plan.has_marginals(&mu, &nu, 1e-12));
    for i in 0..plan.rows {
        let row: Vec<String> = (0..plan.cols).map(|j| format!("{:.3}", plan.get(i, j))).collect();
        println!("  plan row {i}: [{}]", row.join(", "));
    }

    let (w1, w2) = (measures::wasserstein(&mu, &nu, 1.0)?, measures::wasserstein(&mu, &nu, 2.0)?);
    println!("d_1 = {w1:.6}, d_2 = {w2:.6}");
    assert!(w1 <= w2 + 1e-12);

    // CSV round trip: one column per coordinate plus `weight`
    let mut buf = Vec::new();
    mu.write_csv(&mut buf)?;
    print!("{}", String::from_utf8_lossy(&buf));
    assert_eq!(EmpiricalMeasure::from_csv_reader(buf.as_slice())?, mu);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
