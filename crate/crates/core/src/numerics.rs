//! Finite-difference and Lipschitz audits for loss oracles.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::vecops;

/// Central-difference step `1e-5 * (1 + ||x||)`.
pub fn fd_step(x: &[f64]) -> f64 {
    1e-5 * (1.0 + vecops::norm(x))
}

/// Central-difference gradient of `f` at `x`.
pub fn central_diff_grad(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let h = fd_step(x);
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let xi = x[i];
            xp[i] = xi + h;
            let fp = f(&xp);
            xp[i] = xi - h;
            let fm = f(&xp);
            xp[i] = xi;
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Gradient-check error `||a - b|| / max(1, ||a||, ||b||)`.
///
/// Relative for large gradients, absolute near stationary points where the
/// relative error is not meaningful.
pub fn gradcheck_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = 1.0_f64.max(vecops::norm(analytic)).max(vecops::norm(numeric));
    vecops::norm(&vecops::sub(analytic, numeric)) / scale
}

/// Uniformly distributed unit vector.
pub fn random_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = vecops::norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

/// A point `r * u` with `u` a random unit vector and `r` uniform on
/// `[0, radius]`. Radial sampling puts more probes near the origin than
/// volume-uniform sampling does.
pub fn random_in_ball<R: Rng + ?Sized>(dim: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    let r = rng.gen::<f64>() * radius;
    random_unit(dim, rng).into_iter().map(|c| c * r).collect()
}

/// `f(x + v) <= f(x) + grad(x)' v + (L/2) ||v||^2 + slack`
pub fn quadratic_growth_holds(
    fx: f64,
    gx: &[f64],
    fxv: f64,
    v: &[f64],
    lipschitz: f64,
    slack: f64,
) -> bool {
    fxv <= fx + vecops::dot(gx, v) + 0.5 * lipschitz * vecops::norm_sq(v) + slack
}
