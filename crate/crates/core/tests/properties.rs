use proptest::prelude::*;

use earlystop::dsgd::{self, NodeState, Topology};
use earlystop::harness::stats::{MeanCi, Sum};
use earlystop::measures::{self, EmpiricalMeasure};
use earlystop::numerics;
use earlystop::problems::{self, FiniteSumObjective};
use earlystop::rng;
use earlystop::sgd::{self, BiasModel, SgdConfig};
use earlystop::svrg::{self, SvrgConfig};
use earlystop::vecops;

fn points(n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-2.0..2.0f64, d), n)
}

fn uniform(n: usize, d: usize) -> impl Strategy<Value = EmpiricalMeasure> {
    points(n, d).prop_map(|p| EmpiricalMeasure::uniform(p).unwrap())
}

fn weighted(max_n: usize, d: usize) -> impl Strategy<Value = EmpiricalMeasure> {
    (1..=max_n)
        .prop_flat_map(move |n| (points(n, d), prop::collection::vec(0.05..1.0f64, n)))
        .prop_map(|(p, w)| {
            let s: f64 = w.iter().sum();
            let w: Vec<f64> = w.iter().map(|x| x / s).collect();
            EmpiricalMeasure::new(p, w).unwrap()
        })
}

fn brute_force(a: &EmpiricalMeasure, b: &EmpiricalMeasure, p: f64) -> f64 {
    fn perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        perms(n - 1)
            .into_iter()
            .flat_map(|q| {
                (0..=q.len()).map(move |i| {
                    let mut r = q.clone();
                    r.insert(i, n - 1);
                    r
                })
            })
            .collect()
    }
    let n = a.len();
    perms(n)
        .iter()
        .map(|s| (0..n).map(|i| vecops::dist_sq(a.point(i), b.point(s[i])).sqrt().powf(p)).sum::<f64>() / n as f64)
        .fold(f64::INFINITY, f64::min)
        .powf(1.0 / p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lp_matches_permutations((a, b) in (1usize..=6).prop_flat_map(|n| (uniform(n, 2), uniform(n, 2)))) {
        for p in [1.0, 2.0] {
            let lp = measures::wasserstein(&a, &b, p).unwrap();
            prop_assert!((lp - brute_force(&a, &b, p)).abs() <= 1e-9);
        }
    }

    #[test]
    fn metric_axioms(a in weighted(6, 2), b in weighted(6, 2), c in weighted(6, 2)) {
        for p in [1.0, 2.0] {
            let ab = measures::wasserstein(&a, &b, p).unwrap();
            prop_assert!(measures::wasserstein(&a, &a, p).unwrap() <= 1e-9);
            prop_assert!((ab - measures::wasserstein(&b, &a, p).unwrap()).abs() <= 1e-9);
            let via = measures::wasserstein(&a, &c, p).unwrap() + measures::wasserstein(&c, &b, p).unwrap();
            prop_assert!(ab <= via + 1e-9);
        }
        prop_assert!(measures::wasserstein(&a, &b, 1.0).unwrap() <= measures::wasserstein(&a, &b, 2.0).unwrap() + 1e-9);
    }

    #[test]
    fn coupling_marginals_and_cost(a in weighted(6, 3), b in weighted(6, 3)) {
        for p in [1.0, 2.0] {
            let g = measures::optimal_coupling(&a, &b, p).unwrap();
            prop_assert!(g.has_marginals(&a, &b, 1e-12));
            let w = measures::wasserstein(&a, &b, p).unwrap();
            prop_assert!((g.transport_cost(&a, &b, p).powf(1.0 / p) - w).abs() <= 1e-9);
        }
    }

    #[test]
    fn csv_round_trip(a in weighted(5, 3)) {
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        prop_assert_eq!(EmpiricalMeasure::from_csv_reader(buf.as_slice()).unwrap(), a);
    }

    #[test]
    fn quadratic_growth(y in prop::collection::vec(-1.0..1.0f64, 3),
                        x in prop::collection::vec(-3.0..3.0f64, 3),
                        v in prop::collection::vec(-3.0..3.0f64, 3)) {
        let data = EmpiricalMeasure::dirac(y.clone()).unwrap();
        for loss in [problems::quadratic_problem(), problems::tanh_composite_problem(&data, 3f64.sqrt()).unwrap()] {
            let xv: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + b).collect();
            prop_assert!(numerics::quadratic_growth_holds(
                loss.value(&y, &x), &loss.grad(&y, &x), loss.value(&y, &xv), &v, loss.l, 1e-9));
        }
    }

    /// `||grad f_T(x) - grad f_V(x)|| <= G d_1(Y_V, Y_T)`
    #[test]
    fn gradient_discrepancy_bounded_by_d1(t in weighted(5, 2), v in weighted(5, 2),
                                          x in prop::collection::vec(-3.0..3.0f64, 2)) {
        let scale = |m: &EmpiricalMeasure| {
            let pts = m.points().map(|p| p.iter().map(|c| c / 2.5).collect()).collect();
            EmpiricalMeasure::new(pts, m.weights().to_vec()).unwrap()
        };
        let (t, v) = (scale(&t), scale(&v));
        let d1 = measures::wasserstein(&t, &v, 1.0).unwrap();
        for loss in [problems::quadratic_problem(), problems::tanh_composite_problem(&t, 1.2).unwrap()] {
            let grad = |m: &EmpiricalMeasure| {
                let mut acc = vec![0.0; 2];
                for (y, w) in m.points().zip(m.weights()) {
                    vecops::axpy(*w, &loss.grad(y, &x), &mut acc);
                }
                acc
            };
            let gap = vecops::dist_sq(&grad(&t), &grad(&v)).sqrt();
            prop_assert!(gap <= loss.g * d1 + 1e-9);
        }
    }

    #[test]
    fn ifo_increments(n in 1usize..20, k in 0usize..5, x in prop::collection::vec(-1.0..1.0f64, 2)) {
        let data = EmpiricalMeasure::uniform((0..n).map(|i| vec![i as f64 / n as f64, 0.0]).collect()).unwrap();
        let mut obj = FiniteSumObjective::new(problems::quadratic_problem(), data).unwrap();
        let mut r = rng::from_seed(n as u64);
        for _ in 0..k {
            obj.objective_grad(&x).unwrap();
        }
        obj.stochastic_grad(&x, &mut r).unwrap();
        obj.example_grad(0, &x).unwrap();
        obj.exact_grad(&x);
        obj.gradient_variance(&x);
        prop_assert_eq!(obj.ifo_count(), (k * n + 2) as u64);
    }

    /// IFO of a run is `tau_checks * n_V + updates`, and reruns are identical.
    #[test]
    fn sgd_accounting_and_determinism(seed in any::<u64>(), m in 1u64..6) {
        let data = EmpiricalMeasure::uniform(vec![vec![0.3], vec![-0.2], vec![0.1]]).unwrap();
        let obj = FiniteSumObjective::new(problems::quadratic_problem(), data).unwrap();
        let cfg = SgdConfig::new(0.3, m, 0.01);
        let run = || {
            let (mut t, mut v) = (obj.clone(), obj.clone());
            sgd::run_sgd(&mut t, &mut v, &cfg, BiasModel::Zero, &[2.0], &mut rng::from_seed(seed)).unwrap()
        };
        let a = run();
        prop_assert_eq!(&a, &run());
        let checks = a.trace.len() as u64;
        prop_assert_eq!(a.tau, 1 + (checks - 1) * m);
        prop_assert_eq!(a.ifo_count, checks * 3 + (checks - 1) * m);
    }

    #[test]
    fn ar1_bias_satisfies_drift(seed in any::<u64>(), alpha in 0.0..0.95f64, beta in 0.0..0.5f64) {
        let data = EmpiricalMeasure::uniform(vec![vec![0.3, 0.0], vec![-0.2, 0.1]]).unwrap();
        let obj = FiniteSumObjective::new(problems::quadratic_problem(), data).unwrap();
        let cfg = SgdConfig { max_iters: 200, ..SgdConfig::new(0.1, 4, 1e-6) };
        let (mut t, mut v) = (obj.clone(), obj);
        let bias = BiasModel::Ar1 { alpha, beta };
        let rec = sgd::run_sgd(&mut t, &mut v, &cfg, bias, &[1.0, 1.0], &mut rng::from_seed(seed)).unwrap();
        prop_assert!(rec.drift_violation(alpha, beta, 1e-12).is_none());
    }

    #[test]
    fn svrg_epoch_cost(seed in any::<u64>(), n in 1usize..10) {
        let data = EmpiricalMeasure::uniform((0..n).map(|i| vec![i as f64 / 10.0]).collect()).unwrap();
        let mut obj = FiniteSumObjective::new(problems::quadratic_problem(), data).unwrap();
        let cfg = SvrgConfig { max_epochs: 50, ..SvrgConfig::tuned(n, 1.0, 1e-4) };
        let rec = svrg::run_svrg(&mut obj, &cfg, &[3.0], &mut rng::from_seed(seed)).unwrap();
        prop_assert_eq!(rec.ifo_count, rec.tau * n as u64 + (rec.tau - 1) * 2 * cfg.m);
        if rec.stopped() {
            prop_assert!(vecops::norm_sq(&obj.exact_grad(&rec.final_x)) <= cfg.epsilon);
        }
    }

    /// `||a^k - a_inf||^2 <= rho^k`
    #[test]
    fn spectral_contraction(m in 2usize..9, s in 0.05..0.95f64, k in 1i32..21, kind in 0usize..3) {
        let (kind, s) = match kind {
            0 => (Topology::Complete, s),
            1 => (Topology::Ring, s),
            _ => (Topology::Star, 1.0 - (1.0 - s) / (m - 1) as f64),
        };
        let conn = dsgd::make_topology(kind, m, s).unwrap();
        let a = conn.to_dmatrix();
        let diff = a.pow(k as u32) - nalgebra::DMatrix::from_element(m, m, 1.0 / m as f64);
        let norm = diff.symmetric_eigen().eigenvalues.amax();
        prop_assert!(norm * norm <= conn.rho().powi(k) + 1e-9);
    }

    #[test]
    fn consensus_average_is_tracked(seed in any::<u64>(), m in 1usize..6) {
        let data = EmpiricalMeasure::uniform(vec![vec![0.5, 0.0], vec![0.0, -0.4], vec![-0.3, 0.2]]).unwrap();
        let loss = problems::tanh_composite_problem(&data, 1.0).unwrap();
        let obj = FiniteSumObjective::new(loss, data).unwrap();
        let conn = dsgd::make_topology(Topology::Ring, m, 0.5).unwrap();
        let mut init = rng::from_seed(seed);
        let xs = (0..m).map(|_| numerics::random_in_ball(2, 2.0, &mut init)).collect();
        let cfg = SgdConfig { audit: true, max_iters: 100, ..SgdConfig::new(0.05, 3, 1e-8) };
        let mut streams: Vec<_> = (0..m as u64).map(|i| rng::stream(seed, 0, i)).collect();
        let (mut t, mut v) = (obj.clone(), obj);
        let rec = dsgd::run_dsgd_from(&mut t, &mut v, &conn, &cfg, NodeState::new(xs), &mut streams).unwrap();
        prop_assert!(rec.audit.consensus_gap.unwrap() <= 1e-12);
    }

    #[test]
    fn compensated_mean_is_order_independent(mut xs in prop::collection::vec(-1e6..1e6f64, 2..200), seed in any::<u64>()) {
        let a = MeanCi::from_values(&xs);
        let mut r = rng::from_seed(seed);
        use rand::seq::SliceRandom;
        xs.shuffle(&mut r);
        let b = MeanCi::from_values(&xs);
        prop_assert!((a.mean - b.mean).abs() <= 1e-12 * (1.0 + a.mean.abs()));
        let s: Sum = xs.iter().copied().collect();
        prop_assert!((s.value() / xs.len() as f64 - a.mean).abs() <= 1e-9);
    }
}
