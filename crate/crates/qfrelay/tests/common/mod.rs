//! Independent oracles shared by the integration suites.
//!
//! Everything here recomputes quantities along a different route than the
//! library: rate quantities via entropy combinations over explicitly
//! enumerated joint tables, and gradients via central finite differences of
//! the canonical objective formula. Nothing calls into `qfrelay::info`'s
//! arithmetic beyond constructing models and quantizers.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use qfrelay::{discretize_uplink, ChannelSpec, DiscreteJointModel, GridSpec, QuantizerPmf};

fn h_bits(p: impl IntoIterator<Item = f64>) -> f64 {
    -p.into_iter()
        .filter(|&x| x > 0.0)
        .map(|x| x * x.log2())
        .sum::<f64>()
}

/// Rate quantities computed from entropy combinations over the explicit
/// 4-way joint `p(x1, x2, y_r, ŷ)`.
pub struct BruteReport {
    pub i1: f64,
    pub i2: f64,
    pub c_value: f64,
    pub h_yhat: f64,
    pub j_value: f64,
    pub upper_bound: f64,
}

pub fn brute_report(model: &DiscreteJointModel, q: &QuantizerPmf) -> BruteReport {
    let (nx1, nx2, bins, levels) = (model.nx1(), model.nx2(), model.bins(), q.levels());

    // Full joint, then every marginal by plain accumulation.
    let mut p4 = vec![0.0; nx1 * nx2 * bins * levels];
    for a in 0..nx1 {
        for b in 0..nx2 {
            for j in 0..bins {
                for i in 0..levels {
                    p4[((a * nx2 + b) * bins + j) * levels + i] =
                        model.joint(a, b, j) * q.get(i, j);
                }
            }
        }
    }
    let marginal = |keep: &dyn Fn(usize, usize, usize, usize) -> usize, len: usize| {
        let mut out = vec![0.0; len];
        for a in 0..nx1 {
            for b in 0..nx2 {
                for j in 0..bins {
                    for i in 0..levels {
                        out[keep(a, b, j, i)] += p4[((a * nx2 + b) * bins + j) * levels + i];
                    }
                }
            }
        }
        out
    };

    let p_x1x2 = marginal(&|a, b, _, _| a * nx2 + b, nx1 * nx2);
    let p_x1 = marginal(&|a, _, _, _| a, nx1);
    let p_x2 = marginal(&|_, b, _, _| b, nx2);
    let p_x1x2yhat = marginal(&|a, b, _, i| (a * nx2 + b) * levels + i, nx1 * nx2 * levels);
    let p_x1yhat = marginal(&|a, _, _, i| a * levels + i, nx1 * levels);
    let p_x2yhat = marginal(&|_, b, _, i| b * levels + i, nx2 * levels);
    let p_yhat = marginal(&|_, _, _, i| i, levels);
    let p_yr = marginal(&|_, _, j, _| j, bins);
    let p_yryhat = marginal(&|_, _, j, i| j * levels + i, bins * levels);
    let p_x1x2yr = marginal(&|a, b, j, _| (a * nx2 + b) * bins + j, nx1 * nx2 * bins);
    let p_x1yr = marginal(&|a, _, j, _| a * bins + j, nx1 * bins);
    let p_x2yr = marginal(&|_, b, j, _| b * bins + j, nx2 * bins);

    // I(X1;Ŷ|X2) = H(X1,X2) + H(X2,Ŷ) - H(X2) - H(X1,X2,Ŷ), etc.
    let i1 = h_bits(p_x1x2.iter().copied()) + h_bits(p_x2yhat.iter().copied())
        - h_bits(p_x2.iter().copied())
        - h_bits(p_x1x2yhat.iter().copied());
    let i2 = h_bits(p_x1x2.iter().copied()) + h_bits(p_x1yhat.iter().copied())
        - h_bits(p_x1.iter().copied())
        - h_bits(p_x1x2yhat.iter().copied());
    let c_value = h_bits(p_yr.iter().copied()) + h_bits(p_yhat.iter().copied())
        - h_bits(p_yryhat.iter().copied());
    let ub1 = h_bits(p_x1x2.iter().copied()) + h_bits(p_x2yr.iter().copied())
        - h_bits(p_x2.iter().copied())
        - h_bits(p_x1x2yr.iter().copied());
    let ub2 = h_bits(p_x1x2.iter().copied()) + h_bits(p_x1yr.iter().copied())
        - h_bits(p_x1.iter().copied())
        - h_bits(p_x1x2yr.iter().copied());

    BruteReport {
        i1,
        i2,
        c_value,
        h_yhat: h_bits(p_yhat.iter().copied()),
        j_value: i1 + i2,
        upper_bound: ub1 + ub2,
    }
}

/// The canonical objective expression evaluated on a raw (possibly
/// unnormalized) quantizer matrix, as the unconstrained function of the
/// entries that the stationarity conditions differentiate.
pub fn j_formula(model: &DiscreteJointModel, q_flat: &[f64], levels: usize) -> f64 {
    let (nx1, nx2, bins) = (model.nx1(), model.nx2(), model.bins());
    assert_eq!(q_flat.len(), levels * bins);

    let mut a_tab = vec![0.0; levels * nx1 * nx2];
    for i in 0..levels {
        for a in 0..nx1 {
            for b in 0..nx2 {
                let mut acc = 0.0;
                for j in 0..bins {
                    acc += q_flat[i * bins + j] * model.joint(a, b, j);
                }
                a_tab[(i * nx1 + a) * nx2 + b] = acc;
            }
        }
    }
    let mut total = 0.0;
    for i in 0..levels {
        for a in 0..nx1 {
            for b in 0..nx2 {
                let v = a_tab[(i * nx1 + a) * nx2 + b];
                if v <= 0.0 {
                    continue;
                }
                let bsum: f64 = (0..nx1).map(|aa| a_tab[(i * nx1 + aa) * nx2 + b]).sum();
                let dsum: f64 = (0..nx2).map(|bb| a_tab[(i * nx1 + a) * nx2 + bb]).sum();
                let p12 = model.p_x1x2(a, b);
                total += v
                    * ((v * model.p_x2()[b] / (bsum * p12)).log2()
                        + (v * model.p_x1()[a] / (dsum * p12)).log2());
            }
        }
    }
    total
}

/// Central finite differences of [`j_formula`] entry by entry.
pub fn fd_grad(model: &DiscreteJointModel, q: &QuantizerPmf, step: f64) -> Vec<f64> {
    let levels = q.levels();
    let bins = q.bins();
    let base: Vec<f64> = q.as_slice().to_vec();
    let mut grad = vec![0.0; levels * bins];
    for k in 0..levels * bins {
        let mut plus = base.clone();
        plus[k] += step;
        let mut minus = base.clone();
        minus[k] -= step;
        grad[k] =
            (j_formula(model, &plus, levels) - j_formula(model, &minus, levels)) / (2.0 * step);
    }
    grad
}

/// A randomized small model: random powers and noise, random grid size.
pub fn random_model(rng: &mut ChaCha12Rng) -> DiscreteJointModel {
    let p_db = rng.random_range(-4.0..6.0);
    let nr_db = rng.random_range(-4.0..4.0);
    let spec = ChannelSpec::symmetric_db(p_db, 9.3, nr_db, 0.0);
    let grid = GridSpec {
        num_bins: rng.random_range(3..10),
        span_sigmas: rng.random_range(2.5..4.5),
    };
    discretize_uplink(&spec, &grid).expect("valid random spec")
}

/// A strictly positive random column-stochastic quantizer (entries bounded
/// away from zero so finite differences stay in the smooth region).
pub fn random_positive_quantizer(
    rng: &mut ChaCha12Rng,
    levels: usize,
    bins: usize,
) -> QuantizerPmf {
    let floor = 0.08 / levels as f64;
    let mut data = vec![0.0; levels * bins];
    for j in 0..bins {
        let col: Vec<f64> = (0..levels).map(|_| rng.random_range(0.05..1.0)).collect();
        let sum: f64 = col.iter().sum();
        for i in 0..levels {
            data[i * bins + j] = (1.0 - floor * levels as f64) * col[i] / sum + floor;
        }
    }
    QuantizerPmf::new(levels, bins, data).expect("normalized by construction")
}
