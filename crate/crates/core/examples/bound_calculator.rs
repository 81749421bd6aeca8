// The stopping-time and IFO bound calculators on small hand-checkable inputs.
//
// cargo run --example bound_calculator

use earlystop::dsgd::{self, DsgdBoundParams};
use earlystop::sgd::{self, Cor32Params, Prop31Params};
use earlystop::svrg;
use earlystop::{measures, Result};

pub fn run_example() -> Result<()> {
    let p31 = sgd::tau_bound_prop31(&Prop31Params {
        l: 1.0,
        eta: 0.1,
        m: 1,
        epsilon: 1.0,
        sigma2: 1.0,
        alpha: 0.0,
        beta: 0.0,
        g: 0.0,
        d1: 0.0,
        f_gap: 1.0,
    })?;
    println!("SGD, fixed step: E[tau] <= {:.4} (margin {:.2})", p31.value_or_inf(), p31.margin);

    let c32 = sgd::tau_bound_cor32(&Cor32Params {
        c: 0.5,
        l: 1.0,
        epsilon: 1.0,
        m: 1,
        g: 0.0,
        d1: 0.0,
        sigma2: 1.0,
        rate: 0.0,
        alpha: 0.0,
        f_gap: 1.0,
    })?;
    println!("SGD, tuned step: E[tau] <= {:.4}", c32.value_or_inf());
    println!("  IFO <= {:.1} with n_V = 10", sgd::ifo_bound_sgd(c32.value_or_inf(), 1, 10)?);

    let c = 0.5 / (4.0 * std::f64::consts::SQRT_2);
    let d = dsgd::tau_bound_dsgd(&DsgdBoundParams {
        l: 1.0,
        epsilon: 1.0,
        m: 1,
        g: 0.0,
        d1: 0.0,
        sigma2: 1.0,
        rho: 0.25,
        c,
        f_gap: 1.0,
    })?;
    println!("DSGD, rho = 1/4: E[tau] <= {:.3} (simplified {:.3})", d.value_or_inf(), d.params["simplified"]);

    let (eta, m) = svrg::svrg_hyperparams(64, 2.0);
    let t = svrg::tau_bound_svrg(2.0, 64, 1.0, 0.1)?;
    println!("SVRG, n_T = 64: eta = {eta}, m = {m}, E[tau] <= {t}, IFO <= {}", svrg::ifo_bound_svrg(t, 64, m)?);

    println!("E d_2(mu, mu_N)^2 <= {:.3} for m = 4, N = 100", measures::discrete_support_bound(4, 100)?);

    // a threshold below the validation/training gap has no bound
    let err = sgd::tau_bound_cor32(&Cor32Params { g: 1.0, d1: 1.0, ..Cor32Params {
        c: 0.5, l: 1.0, epsilon: 1.0, m: 1, g: 0.0, d1: 0.0, sigma2: 1.0, rate: 0.0, alpha: 0.0, f_gap: 1.0,
    } });
    println!("eps <= 2 G^2 d1^2: {}", err.unwrap_err());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
