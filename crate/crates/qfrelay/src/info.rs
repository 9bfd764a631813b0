//! Exact information functionals on the discrete model.
//!
//! Everything here is a pure function of the immutable
//! [`DiscreteJointModel`] and a conditional quantizer pmf, evaluated through
//! the chain `(X1, X2) -> Y_r -> Ŷ`: the quantized joint is
//! `p(x1, x2, ŷ_i) = Σ_j p(x1, x2, y_j) · q[i][j]`. All quantities are in
//! bits. Terms with zero probability contribute zero to every entropy sum.

use serde::{Deserialize, Serialize};

use crate::channel::DiscreteJointModel;
use crate::{Error, Result};

/// Floor inside logarithms when a zero-probability cell must be evaluated
/// in the gradient; keeps the fixed-point update finite without perturbing
/// any positive-probability result.
const LOG_FLOOR: f64 = 1e-300;

/// Conditional pmf `q[i][j] = p(ŷ_i | y_j)` with `levels` rows and `bins`
/// columns; every column is a distribution over the quantizer levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizerPmf {
    levels: usize,
    bins: usize,
    /// Row-major, `i * bins + j`.
    data: Vec<f64>,
}

impl QuantizerPmf {
    /// Wrap a row-major matrix, checking shape and column stochasticity.
    pub fn new(levels: usize, bins: usize, data: Vec<f64>) -> Result<Self> {
        if levels == 0 || bins == 0 {
            return Err(Error::InvalidQuantizer(
                "levels and bins must be >= 1".into(),
            ));
        }
        if data.len() != levels * bins {
            return Err(Error::DimensionMismatch {
                expected: levels * bins,
                got: data.len(),
            });
        }
        let q = QuantizerPmf { levels, bins, data };
        q.validate()?;
        Ok(q)
    }

    /// Uniform quantizer: every column is `1/levels`.
    pub fn uniform(levels: usize, bins: usize) -> Self {
        QuantizerPmf {
            levels,
            bins,
            data: vec![1.0 / levels as f64; levels * bins],
        }
    }

    /// Deterministic quantizer from a bin-to-level map.
    pub fn from_map(levels: usize, map: &[usize]) -> Result<Self> {
        let bins = map.len();
        if bins == 0 {
            return Err(Error::EmptyInput("quantizer map"));
        }
        let mut data = vec![0.0; levels * bins];
        for (j, &i) in map.iter().enumerate() {
            if i >= levels {
                return Err(Error::InvalidQuantizer(format!(
                    "map level {i} out of range for {levels} levels"
                )));
            }
            data[i * bins + j] = 1.0;
        }
        Ok(QuantizerPmf { levels, bins, data })
    }

    /// Lossless quantizer (`levels == bins`, identity map).
    pub fn identity(bins: usize) -> Self {
        let mut data = vec![0.0; bins * bins];
        for j in 0..bins {
            data[j * bins + j] = 1.0;
        }
        QuantizerPmf {
            levels: bins,
            bins,
            data,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for j in 0..self.bins {
            let mut col = 0.0;
            for i in 0..self.levels {
                let v = self.data[i * self.bins + j];
                if !(0.0..=1.0 + 1e-12).contains(&v) {
                    return Err(Error::InvalidQuantizer(format!(
                        "entry ({i},{j}) = {v} outside [0, 1]"
                    )));
                }
                col += v;
            }
            if (col - 1.0).abs() > 1e-12 {
                return Err(Error::NotNormalized(col));
            }
        }
        Ok(())
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.bins + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.bins + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Level marginal `p(ŷ_i) = Σ_j q[i][j] · w[j]` for bin weights `w`.
    pub fn level_marginal(&self, w: &[f64]) -> Vec<f64> {
        (0..self.levels)
            .map(|i| (0..self.bins).map(|j| self.get(i, j) * w[j]).sum())
            .collect()
    }

    /// Largest absolute entry-wise difference to another quantizer.
    pub fn max_abs_diff(&self, other: &QuantizerPmf) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// All rate quantities of one (model, quantizer) pair, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoReport {
    /// Objective `J = i1 + i2`.
    pub j_value: f64,
    /// Quantizer rate `I(Y_r; Ŷ)`.
    pub c_value: f64,
    /// `I(X1; Ŷ | X2)`.
    pub i1: f64,
    /// `I(X2; Ŷ | X1)`.
    pub i2: f64,
    /// `H(Ŷ)`.
    pub h_yhat: f64,
    /// `I(X1; Y_r | X2) + I(X2; Y_r | X1)`, the unquantized ceiling.
    pub upper_bound: f64,
}

#[inline]
fn xlog2x(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// Shannon entropy of a normalized pmf, in bits.
pub fn entropy(pmf: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for &p in pmf {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "pmf entry {p} is not a probability"
            )));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(sum));
    }
    Ok(entropy_unchecked(pmf))
}

pub(crate) fn entropy_unchecked(pmf: &[f64]) -> f64 {
    -pmf.iter().map(|&p| xlog2x(p)).sum::<f64>()
}

/// Quantized joint `p(x1, x2, ŷ)` and its marginals.
struct QuantizedJoint {
    levels: usize,
    nx1: usize,
    nx2: usize,
    /// `p(x1, x2, ŷ_i)`, laid out as `(i * nx1 + a) * nx2 + b`.
    a: Vec<f64>,
    /// `p(x2, ŷ_i)`, laid out as `i * nx2 + b`.
    b_x2: Vec<f64>,
    /// `p(x1, ŷ_i)`, laid out as `i * nx1 + a`.
    d_x1: Vec<f64>,
    /// `p(ŷ_i)`.
    e: Vec<f64>,
}

fn quantized_joint(model: &DiscreteJointModel, q: &QuantizerPmf) -> QuantizedJoint {
    let (nx1, nx2, bins, levels) = (model.nx1(), model.nx2(), model.bins(), q.levels());
    let mut a = vec![0.0; levels * nx1 * nx2];
    let mut b_x2 = vec![0.0; levels * nx2];
    let mut d_x1 = vec![0.0; levels * nx1];
    let mut e = vec![0.0; levels];
    for i in 0..levels {
        for x1 in 0..nx1 {
            for x2 in 0..nx2 {
                let mut acc = 0.0;
                for j in 0..bins {
                    acc += q.get(i, j) * model.joint(x1, x2, j);
                }
                a[(i * nx1 + x1) * nx2 + x2] = acc;
                b_x2[i * nx2 + x2] += acc;
                d_x1[i * nx1 + x1] += acc;
                e[i] += acc;
            }
        }
    }
    QuantizedJoint {
        levels,
        nx1,
        nx2,
        a,
        b_x2,
        d_x1,
        e,
    }
}

fn check_dims(model: &DiscreteJointModel, q: &QuantizerPmf) -> Result<()> {
    if q.bins() != model.bins() {
        return Err(Error::DimensionMismatch {
            expected: model.bins(),
            got: q.bins(),
        });
    }
    Ok(())
}

/// Evaluate all rate quantities of a quantizer against the model.
pub fn evaluate(model: &DiscreteJointModel, q: &QuantizerPmf) -> Result<InfoReport> {
    check_dims(model, q)?;
    let qj = quantized_joint(model, q);

    let mut i1 = 0.0;
    let mut i2 = 0.0;
    for i in 0..qj.levels {
        for x1 in 0..qj.nx1 {
            for x2 in 0..qj.nx2 {
                let a = qj.a[(i * qj.nx1 + x1) * qj.nx2 + x2];
                if a <= 0.0 {
                    continue;
                }
                let p12 = model.p_x1x2(x1, x2);
                i1 += a * (a * model.p_x2()[x2] / (qj.b_x2[i * qj.nx2 + x2] * p12)).log2();
                i2 += a * (a * model.p_x1()[x1] / (qj.d_x1[i * qj.nx1 + x1] * p12)).log2();
            }
        }
    }
    let i1 = i1.max(0.0);
    let i2 = i2.max(0.0);

    let w = model.p_yr();
    let mut c_value = 0.0;
    for i in 0..q.levels() {
        for (j, &wj) in w.iter().enumerate() {
            let qij = q.get(i, j);
            if qij > 0.0 && wj > 0.0 && qj.e[i] > 0.0 {
                c_value += qij * wj * (qij / qj.e[i]).log2();
            }
        }
    }

    Ok(InfoReport {
        j_value: i1 + i2,
        c_value: c_value.max(0.0),
        i1,
        i2,
        h_yhat: entropy_unchecked(&qj.e),
        upper_bound: uplink_bound(model),
    })
}

/// Analytic gradient `∂J/∂q[i][j]` of the objective
/// `J(q) = I(X1;Ŷ|X2) + I(X2;Ŷ|X1)`, holding the model fixed. Bits.
///
/// Derivation. Write `w_j(x1,x2) = p(x1,x2,y_j)` for the fixed channel
/// joint and `A_i(x1,x2) = Σ_j q[i][j]·w_j(x1,x2)` for the quantized joint,
/// with marginals `B_i(x2) = Σ_{x1} A_i`, `D_i(x1) = Σ_{x2} A_i`. Expanding
/// both conditional mutual informations over the quantized joint,
///
/// ```text
/// J = Σ_{i,x1,x2} A_i(x1,x2) · log2[ A_i(x1,x2)² p(x1) p(x2)
///                                    / (B_i(x2) D_i(x1) p(x1,x2)²) ].
/// ```
///
/// Every `A_i` is linear in `q` with coefficient `w_j`, so differentiating
/// the `A·log A` terms yields `Σ w_j (log A_i + 1/ln2)` while the
/// `A·log B` and `A·log D` terms contribute `-Σ w_j log B_i - p(y_j)/ln2`
/// and `-Σ w_j log D_i - p(y_j)/ln2`; the three `1/ln2`-scaled mass terms
/// cancel exactly (`Σ_{x1,x2} w_j = p(y_j)`, counted once against two
/// halves). What survives is
///
/// ```text
/// ∂J/∂q[i][j] = Σ_{x1,x2} w_j(x1,x2) · G_i(x1,x2),
/// G_i(x1,x2)  = log2[ A_i² p(x1) p(x2) / (B_i D_i p(x1,x2)²) ].
/// ```
///
/// Zero-probability factors inside `G_i` are floored at `1e-300`, which
/// reproduces the analytic limit (a large negative drift that keeps dead
/// cells dead) without NaNs.
///
/// Returned row-major with the same `(levels, bins)` layout as `q`.
pub fn grad_j(model: &DiscreteJointModel, q: &QuantizerPmf) -> Result<Vec<f64>> {
    check_dims(model, q)?;
    let qj = quantized_joint(model, q);
    let (nx1, nx2, bins, levels) = (model.nx1(), model.nx2(), model.bins(), q.levels());

    // G_i(x1, x2) does not depend on the bin, so tabulate it once.
    let mut g_table = vec![0.0; levels * nx1 * nx2];
    for i in 0..levels {
        for x1 in 0..nx1 {
            for x2 in 0..nx2 {
                let a = qj.a[(i * nx1 + x1) * nx2 + x2].max(LOG_FLOOR);
                let b = qj.b_x2[i * nx2 + x2].max(LOG_FLOOR);
                let d = qj.d_x1[i * nx1 + x1].max(LOG_FLOOR);
                let p12 = model.p_x1x2(x1, x2);
                g_table[(i * nx1 + x1) * nx2 + x2] =
                    (a * a * model.p_x1()[x1] * model.p_x2()[x2] / (b * d * p12 * p12)).log2();
            }
        }
    }

    let mut grad = vec![0.0; levels * bins];
    for i in 0..levels {
        for j in 0..bins {
            let mut acc = 0.0;
            for x1 in 0..nx1 {
                for x2 in 0..nx2 {
                    acc += model.joint(x1, x2, j) * g_table[(i * nx1 + x1) * nx2 + x2];
                }
            }
            grad[i * bins + j] = acc;
        }
    }
    Ok(grad)
}

/// The unquantized ceiling `I(X1;Y_r|X2) + I(X2;Y_r|X1)`, in bits.
pub fn uplink_bound(model: &DiscreteJointModel) -> f64 {
    let (nx1, nx2, bins) = (model.nx1(), model.nx2(), model.bins());
    let mut total = 0.0;
    for x1 in 0..nx1 {
        for x2 in 0..nx2 {
            let p12 = model.p_x1x2(x1, x2);
            for j in 0..bins {
                let w = model.joint(x1, x2, j);
                if w <= 0.0 {
                    continue;
                }
                total += w * (w * model.p_x2()[x2] / (model.p_x2_yr(x2, j) * p12)).log2();
                total += w * (w * model.p_x1()[x1] / (model.p_x1_yr(x1, j) * p12)).log2();
            }
        }
    }
    total.max(0.0)
}
