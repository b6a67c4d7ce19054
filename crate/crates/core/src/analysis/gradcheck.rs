use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::approximator::{DenseNet, Head};
use crate::error::Result;
use crate::SimRng;

pub const FD_STEP: f64 = 1e-5;

/// Relative error `|a - b| / max(|a|, |b|, floor)`; the floor keeps
/// near-zero derivatives from dividing by roundoff.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub nets: usize,
    pub components: usize,
    pub max_rel_error: f64,
    pub max_param_rel_error: f64,
    pub max_input_rel_error: f64,
}

/// Analytic parameter and input gradients of `upstream . net(x)` against
/// central differences with step [`FD_STEP`].
pub fn compare_gradients(net: &DenseNet, x: &[f64], upstream: &[f64]) -> Result<(f64, f64, usize)> {
    let (pg, ig) = net.backward(x, upstream)?;
    let objective = |n: &DenseNet, input: &[f64]| -> Result<f64> {
        Ok(n.forward(input)?.iter().zip(upstream).map(|(y, u)| y * u).sum())
    };
    let mut probe = net.clone();
    let mut param_err: f64 = 0.0;
    for j in 0..pg.len() {
        let base = probe.params()[j];
        probe.params_mut()[j] = base + FD_STEP;
        let up = objective(&probe, x)?;
        probe.params_mut()[j] = base - FD_STEP;
        let down = objective(&probe, x)?;
        probe.params_mut()[j] = base;
        let fd = (up - down) / (2.0 * FD_STEP);
        param_err = param_err.max(relative_error(pg[j], fd, REL_ERROR_FLOOR));
    }
    let mut xs = x.to_vec();
    let mut input_err: f64 = 0.0;
    for j in 0..xs.len() {
        let base = xs[j];
        xs[j] = base + FD_STEP;
        let up = objective(net, &xs)?;
        xs[j] = base - FD_STEP;
        let down = objective(net, &xs)?;
        xs[j] = base;
        let fd = (up - down) / (2.0 * FD_STEP);
        input_err = input_err.max(relative_error(ig[j], fd, REL_ERROR_FLOOR));
    }
    Ok((param_err, input_err, pg.len() + ig.len()))
}

/// Random three-hidden-layer networks with random heads, inputs and upstream
/// vectors.
pub fn check_gradients(n_nets: usize, rng: &mut SimRng) -> Result<GradientReport> {
    let mut report = GradientReport {
        nets: n_nets,
        ..Default::default()
    };
    for _ in 0..n_nets {
        let mut dims = vec![rng.random_range(1..=6)];
        for _ in 0..3 {
            dims.push(rng.random_range(2..=12));
        }
        dims.push(rng.random_range(1..=4));
        let head = if rng.random_bool(0.5) {
            Head::Linear
        } else {
            Head::Bounded {
                scale: rng.random_range(0.5..3.0),
            }
        };
        let net = DenseNet::new(dims.clone(), head, rng)?;
        let x: Vec<f64> = (0..dims[0]).map(|_| rng.random_range(-2.0..2.0)).collect();
        let upstream: Vec<f64> = (0..*dims.last().unwrap())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let (p, i, count) = compare_gradients(&net, &x, &upstream)?;
        report.components += count;
        report.max_param_rel_error = report.max_param_rel_error.max(p);
        report.max_input_rel_error = report.max_input_rel_error.max(i);
    }
    report.max_rel_error = report.max_param_rel_error.max(report.max_input_rel_error);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn random_nets_pass_finite_differences() {
        let report = check_gradients(20, &mut SimRng::seed_from_u64(1)).unwrap();
        assert!(report.max_rel_error < 1e-4, "{report:?}");
        assert!(report.components > 0);
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(1.0, 1.0, 1e-6), 0.0);
        assert!((relative_error(2.0, 1.0, 1e-6) - 0.5).abs() < 1e-15);
        assert!((relative_error(1e-9, 0.0, 1e-6) - 1e-3).abs() < 1e-15);
    }
}
