// Decentralized SGD on a ring of four nodes: spectrum of the mixing matrix,
// dispersion audit, and the stopping-time bound.
//
// cargo run --release --example dsgd_ring

use earlystop::dsgd::{self, DsgdBoundParams, Topology};
use earlystop::measures::EmpiricalMeasure;
use earlystop::problems::{self, FiniteSumObjective};
use earlystop::sgd::SgdConfig;
use earlystop::{rng, Result};

pub fn run_example() -> Result<()> {
    for (kind, s) in [(Topology::Complete, 0.25), (Topology::Ring, 0.5), (Topology::Star, 0.75)] {
        let a = dsgd::make_topology(kind, 4, s)?;
        println!("{kind:?}: eigenvalues {:.3?}, rho = {:.4}", a.eigenvalues(), a.rho());
    }
    let ring = dsgd::make_topology(Topology::Ring, 4, 0.5)?;
    assert!((ring.rho() - 0.25).abs() < 1e-12);

    let data = EmpiricalMeasure::uniform(vec![vec![0.1, 0.0], vec![-0.1, 0.0], vec![0.0, 0.1], vec![0.0, -0.1]])?;
    let loss = problems::tanh_composite_problem(&data, 1.0)?;
    let obj = FiniteSumObjective::new(loss.clone(), data)?;
    let x1 = [1.0, 1.0];
    let sigma2 = 1.1 * problems::empirical_variance_bound(&obj, &problems::variance_probes(&x1, 8, 0))?;

    let (eps, m) = (0.1, 1);
    let c = 0.99 * (1.0 - ring.rho().sqrt()) / (4.0 * std::f64::consts::SQRT_2);
    let eta = dsgd::dsgd_step_size(c, loss.l, eps, m, loss.g, 0.0, sigma2, ring.rho())?;
    let cfg = SgdConfig { audit: true, ..SgdConfig::new(eta, m, eps) };

    let (mut t, mut v) = (obj.clone(), obj.clone());
    let mut streams: Vec<_> = (0..4).map(|i| rng::stream(3, 0, i)).collect();
    let rec = dsgd::run_dsgd(&mut t, &mut v, &ring, &cfg, &x1, &mut streams)?;
    let (alpha, v1) = rec.audit.drift_constants.expect("audited run");
    let peak = rec.audit.drift.iter().map(|d| d.v).fold(0.0, f64::max);
    println!(
        "eta = {eta:.3e}: tau = {}, IFO = {}, peak dispersion V = {peak:.2e}, consensus gap {:.1e}",
        rec.tau,
        rec.ifo_count,
        rec.audit.consensus_gap.unwrap_or(0.0)
    );
    assert_eq!(rec.drift_violation(alpha, v1, 1e-9), None);

    let bound = dsgd::tau_bound_dsgd(&DsgdBoundParams {
        l: loss.l,
        epsilon: eps,
        m,
        g: loss.g,
        d1: 0.0,
        sigma2,
        rho: ring.rho(),
        c,
        f_gap: obj.exact_value(&x1),
    })?;
    println!(
        "E[tau] bound {:.1} (simplified {:.1}); IFO bound {:.1}",
        bound.value_or_inf(),
        bound.params["simplified"],
        dsgd::ifo_bound_dsgd(bound.value_or_inf(), m, obj.n(), 4)?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
