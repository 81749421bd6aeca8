// Population gradient at early-stopped SVRG iterates, and concentration of
// empirical measures in the 2-Wasserstein distance.
//
// cargo run --release --example generalization_gap

use earlystop::generalization::{self, SvrgRunner, TestDistribution};
use earlystop::measures::EmpiricalMeasure;
use earlystop::{problems, Result};

pub fn run_example() -> Result<()> {
    let mu = EmpiricalMeasure::uniform(vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]])?;
    let dist = TestDistribution::new(mu.clone())?;
    let loss = problems::tanh_composite_problem(&mu, 1.0)?;
    let eps = 0.05;
    let runner = SvrgRunner { epsilon: eps, x1: vec![0.5, -0.5], max_epochs: 10_000 };

    for n in [16, 64, 256] {
        let est = generalization::mc_generalization_gap(&dist, &loss, &runner, n, 0, 100, 8)?;
        let bound = generalization::generalization_bound_discrete(eps, loss.g, dist.support_size(), n)?;
        println!("n_T = {n:>3}: E||grad f_G||^2 = {:.4} +- {:.4} (bound {bound:.2})", est.mean_grad_sq_g, est.ci);
        assert!(est.mean_grad_sq_g <= bound + est.ci);
    }

    for n in [10, 100, 1000] {
        let est = generalization::concentration_experiment(&mu, n, 200, 7)?;
        println!("N = {n:>4}: E d_2(mu, mu_N)^2 = {:.4} (bound {:.2})", est.mean_w2_sq, est.bound);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
