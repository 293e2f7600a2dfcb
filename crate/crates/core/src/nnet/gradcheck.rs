//! Central finite-difference verification of backpropagation.

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::network::{Mode, Network};
use crate::error::Result;

/// Denominator floor for relative errors, so entries that are zero up to
/// rounding do not dominate the report.
pub const REL_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_params: f64,
    pub max_rel_input: f64,
    /// Coordinates skipped because a perturbation crossed a CReLU kink.
    pub skipped: usize,
}

impl GradCheckReport {
    pub fn max_rel(&self) -> f64 {
        self.max_rel_params.max(self.max_rel_input)
    }
}

/// Compares backpropagated gradients of `L = sum(output * weights)` against
/// central differences with step `h`. Dropout masks are replayed from `seed`
/// on every evaluation so the loss is a fixed function of the parameters.
pub fn finite_difference_check(
    net: &Network,
    input: ArrayView2<f64>,
    weights: ArrayView2<f64>,
    mode: Mode,
    seed: u64,
    h: f64,
) -> Result<GradCheckReport> {
    let eval = |n: &Network, x: ArrayView2<f64>| -> Result<(f64, Vec<bool>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tr = n.forward(x, mode, &mut rng)?;
        Ok(((&tr.output * &weights).sum(), tr.kink_signature()))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trace = net.forward(input, mode, &mut rng)?;
    let base_sig = trace.kink_signature();
    let (dx, grads) = net.backward(&trace, weights, true);
    let grads = grads.expect("requested");

    let mut report = GradCheckReport {
        max_rel_params: 0.0,
        max_rel_input: 0.0,
        skipped: 0,
    };

    let groups: Vec<usize> = grads.parts.iter().map(Vec::len).collect();
    let mut probe = net.clone();
    for (gi, &len) in groups.iter().enumerate() {
        for j in 0..len {
            let numeric = {
                let mut central = [0.0; 2];
                let mut crossed = false;
                for (slot, sign) in [1.0, -1.0].into_iter().enumerate() {
                    nudge(&mut probe, gi, j, sign * h);
                    let (l, sig) = eval(&probe, input)?;
                    nudge(&mut probe, gi, j, -sign * h);
                    crossed |= sig != base_sig;
                    central[slot] = l;
                }
                if crossed {
                    report.skipped += 1;
                    continue;
                }
                (central[0] - central[1]) / (2.0 * h)
            };
            let e = relative_error(grads.parts[gi][j], numeric);
            report.max_rel_params = report.max_rel_params.max(e);
        }
    }

    let mut x: Array2<f64> = input.to_owned();
    for idx in 0..x.len() {
        let (r, c) = (idx / x.ncols(), idx % x.ncols());
        let orig = x[[r, c]];
        x[[r, c]] = orig + h;
        let (lp, sp) = eval(net, x.view())?;
        x[[r, c]] = orig - h;
        let (lm, sm) = eval(net, x.view())?;
        x[[r, c]] = orig;
        if sp != base_sig || sm != base_sig {
            report.skipped += 1;
            continue;
        }
        let e = relative_error(dx[[r, c]], (lp - lm) / (2.0 * h));
        report.max_rel_input = report.max_rel_input.max(e);
    }
    Ok(report)
}

fn nudge(net: &mut Network, group: usize, index: usize, delta: f64) {
    let mut gi = 0;
    net.visit_params_mut(|p| {
        if gi == group {
            p[index] += delta;
        }
        gi += 1;
    });
}
