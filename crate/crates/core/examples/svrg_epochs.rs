// SVRG with early stopping on the full training gradient, and the descent
// certificate behind its epoch bound.
//
// cargo run --example svrg_epochs

use earlystop::measures::EmpiricalMeasure;
use earlystop::problems::{self, FiniteSumObjective};
use earlystop::svrg::{self, SvrgConfig};
use earlystop::{rng, Result};

pub fn run_example() -> Result<()> {
    let mut r = rng::stream(4, 0, rng::DATA_NODE);
    let points = (0..64).map(|_| earlystop::numerics::random_in_ball(3, 0.8, &mut r)).collect();
    let data = EmpiricalMeasure::uniform(points)?;
    let loss = problems::tanh_composite_problem(&data, 0.8)?;
    let mut obj = FiniteSumObjective::new(loss.clone(), data)?;

    let (eta, m) = svrg::svrg_hyperparams(obj.n(), loss.l);
    println!("n_T = {}, L = {:.4}: eta = {eta:.5}, m = {m}", obj.n(), loss.l);

    let x1 = [1.0, -1.0, 0.5];
    let f_gap = obj.exact_value(&x1) - loss.f_star;
    let eps = 1e-3;
    let cfg = SvrgConfig { audit: true, ..SvrgConfig::tuned(obj.n(), loss.l, eps) };
    let rec = svrg::run_svrg(&mut obj, &cfg, &x1, &mut rng::stream(4, 0, 0))?;
    for cp in &rec.trace {
        println!("  epoch {}: ||g||^2 = {:.3e}", cp.t, cp.grad_norm_sq);
    }
    assert!(rec.stopped() && rec.final_check() <= eps);
    assert_eq!(rec.ifo_count, rec.tau * 64 + (rec.tau - 1) * 2 * m);

    let gamma = svrg::gamma_lower_bound_check(obj.n(), loss.l)?;
    println!(
        "gamma* = {:.3e} at beta = {:.3} (threshold {:.3e}, passes: {})",
        gamma.gamma_star, gamma.beta_star, gamma.threshold, gamma.passes
    );
    let tau_bound = svrg::tau_bound_svrg(loss.l, obj.n(), f_gap, eps)?;
    println!(
        "tau = {} epochs, bound {tau_bound:.1}; IFO {} <= {:.0}",
        rec.tau,
        rec.ifo_count,
        svrg::ifo_bound_svrg(tau_bound, obj.n(), m)?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
