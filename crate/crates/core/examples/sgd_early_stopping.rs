// SGD on a tanh-composite least-squares problem, stopped by the validation
// gradient, next to the expected stopping-time bound.
//
// cargo run --release --example sgd_early_stopping

use earlystop::measures::{self, EmpiricalMeasure};
use earlystop::problems::{self, FiniteSumObjective};
use earlystop::sgd::{self, BiasModel, Prop31Params, SgdConfig};
use earlystop::{rng, Result};

pub fn run_example() -> Result<()> {
    let mu = EmpiricalMeasure::uniform(vec![
        vec![0.5, 0.0, 0.0],
        vec![-0.5, 0.0, 0.0],
        vec![0.0, 0.5, 0.0],
        vec![0.0, -0.5, 0.2],
    ])?;
    let mut data_rng = rng::stream(1, 0, rng::DATA_NODE);
    let train = measures::sample_empirical(&mu, 100, &mut data_rng)?;
    let validation = measures::sample_empirical(&mu, 100, &mut data_rng)?;

    let loss = problems::tanh_composite_problem(&mu, 1.0)?;
    let mut obj_t = FiniteSumObjective::new(loss.clone(), train.clone())?;
    let mut obj_v = FiniteSumObjective::new(loss.clone(), validation.clone())?;
    let x1 = vec![1.0, 1.0, 1.0];

    let d1 = measures::wasserstein(&validation, &train, 1.0)?;
    let sigma2 = 1.1 * problems::empirical_variance_bound(&obj_t, &problems::variance_probes(&x1, 32, 1))?;
    let (eps, m, c) = (0.05, 10, 0.5);
    let eta = sgd::step_size_cor32(c, loss.l, eps, m, loss.g, d1, sigma2, 0.0, 0.0)?;
    println!("L = {:.4}, d1 = {d1:.4}, sigma2 = {sigma2:.4}, eta = {eta:.3e}", loss.l);

    let rec = sgd::run_sgd(&mut obj_t, &mut obj_v, &SgdConfig::new(eta, m, eps), BiasModel::Zero, &x1, &mut rng::stream(1, 0, 0))?;
    for cp in rec.trace.iter().step_by(rec.trace.len().div_ceil(8)) {
        println!("  t = {:>6}  ||grad f_V||^2 = {:.5}", cp.t, cp.grad_norm_sq);
    }
    println!("stopped at tau = {} after {} IFO calls", rec.tau, rec.ifo_count);
    assert!(rec.stopped() && rec.final_check() <= eps);

    let bound = sgd::tau_bound_prop31(&Prop31Params {
        l: loss.l,
        eta,
        m,
        epsilon: eps,
        sigma2,
        alpha: 0.0,
        beta: 0.0,
        g: loss.g,
        d1,
        f_gap: obj_t.exact_value(&x1) - loss.f_star,
    })?;
    println!("E[tau] bound: {:.1} (valid: {}, margin {:.4})", bound.value_or_inf(), bound.valid, bound.margin);

    // on the training set the returned point is within (sqrt(eps) + G d1)^2
    let gt: f64 = obj_t.exact_grad(&rec.final_x).iter().map(|g| g * g).sum();
    let post = sgd::post_stationarity_bound(eps, loss.g, d1)?;
    println!("||grad f_T||^2 = {gt:.5} <= {post:.5}");
    assert!(gt <= post + 1e-9);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
