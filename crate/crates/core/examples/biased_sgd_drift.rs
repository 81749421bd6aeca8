// SGD with a biased update direction whose size follows a geometric drift
// condition, and the audit of that condition along the run.
//
// cargo run --example biased_sgd_drift

use earlystop::measures::EmpiricalMeasure;
use earlystop::problems::{self, FiniteSumObjective};
use earlystop::sgd::{self, BiasModel, Cor32Params, SgdConfig};
use earlystop::{rng, Result};

pub fn run_example() -> Result<()> {
    let data = EmpiricalMeasure::uniform(vec![vec![0.2, 0.0], vec![-0.2, 0.1], vec![0.0, -0.1]])?;
    let loss = problems::quadratic_problem();
    let obj = FiniteSumObjective::new(loss.clone(), data)?;
    let x1 = [1.0, -1.0];

    let (alpha, rate, eps, m, c) = (0.5, 0.2, 0.1, 4, 0.5);
    let sigma2 = 1.1 * problems::empirical_variance_bound(&obj, &problems::variance_probes(&x1, 8, 0))?;
    let eta = sgd::step_size_cor32(c, loss.l, eps, m, loss.g, 0.0, sigma2, rate, alpha)?;
    let bias = BiasModel::ar1_with_rate(alpha, rate, eta);
    let (_, beta) = bias.constants();
    println!("eta = {eta:.4}, alpha = {alpha}, beta = eta R = {beta:.4}");

    // validation set = training set here, so d1 = 0
    let (mut t, mut v) = (obj.clone(), obj.clone());
    let cfg = SgdConfig { audit: true, ..SgdConfig::new(eta, m, eps) };
    let rec = sgd::run_sgd(&mut t, &mut v, &cfg, bias, &x1, &mut rng::stream(2, 0, 0))?;
    println!("tau = {}, {} drift steps recorded", rec.tau, rec.audit.drift.len());
    for s in rec.audit.drift.iter().take(4) {
        println!("  t = {}: V = {:.4}, U = {:.4}, ||Delta||^2 = {:.4}", s.t, s.v, s.u, s.delta_norm_sq);
    }
    assert_eq!(rec.drift_violation(alpha, beta, 1e-12), None);

    let bound = sgd::tau_bound_cor32(&Cor32Params {
        c,
        l: loss.l,
        epsilon: eps,
        m,
        g: loss.g,
        d1: 0.0,
        sigma2,
        rate,
        alpha,
        f_gap: obj.exact_value(&x1),
    })?;
    println!("closed-form E[tau] bound: {:.1}", bound.value_or_inf());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
