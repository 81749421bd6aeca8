// Finite-difference gradient checks and the quadratic upper bound implied by
// the certified smoothness constant.
//
// cargo run --example gradient_check

use earlystop::measures::EmpiricalMeasure;
use earlystop::{numerics, problems, rng, Result};

pub fn run_example() -> Result<()> {
    let targets = EmpiricalMeasure::uniform(vec![vec![0.3, -0.6, 0.1]])?;
    let mut r = rng::stream(9, 0, rng::HARNESS_NODE);
    for loss in [problems::quadratic_problem(), problems::tanh_composite_problem(&targets, 1.0)?] {
        let (mut worst_fd, mut worst_gap) = (0.0_f64, f64::NEG_INFINITY);
        for _ in 0..200 {
            let y = numerics::random_in_ball(3, 1.0, &mut r);
            let x = numerics::random_in_ball(3, 3.0, &mut r);
            let v = numerics::random_in_ball(3, 1.0, &mut r);
            let g = loss.grad(&y, &x);
            let fd = numerics::central_diff_grad(|z| loss.value(&y, z), &x);
            worst_fd = worst_fd.max(numerics::gradcheck_error(&g, &fd));

            let xv: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + b).collect();
            let upper = loss.value(&y, &x) + earlystop::vecops::dot(&g, &v) + 0.5 * loss.l * earlystop::vecops::norm_sq(&v);
            worst_gap = worst_gap.max(loss.value(&y, &xv) - upper);
        }
        println!("{:?}: L = {:.4}, max gradcheck error {worst_fd:.1e}, max growth excess {worst_gap:.2e}", loss.kind, loss.l);
        assert!(worst_fd < 1e-5 && worst_gap <= 1e-9);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
