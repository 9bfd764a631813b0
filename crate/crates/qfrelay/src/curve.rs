//! The constrained-information curve traced by the multiplier sweep.
//!
//! Each solved multiplier contributes one `(C, I)` point; the curve's
//! computational form is the upper concave envelope over those points plus
//! the two analytically valid endpoints `(0, 0)` and
//! `(H(Y_r), uplink_bound)`. The envelope is what the time-split
//! optimization consumes.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::info::QuantizerPmf;

/// One solved multiplier: the achieved rate pair and the quantizer behind it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvePoint {
    pub lambda: f64,
    /// Quantizer rate `I(Y_r; Ŷ)` in bits.
    pub c_value: f64,
    /// Objective `J` in bits.
    pub i_value: f64,
    pub quantizer: QuantizerPmf,
    pub converged: bool,
    pub iters_used: usize,
}

/// Piecewise-linear upper concave envelope over `(c, i)` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    /// Hull vertices sorted by `c`; slopes are non-increasing.
    vertices: Vec<(f64, f64)>,
}

impl Envelope {
    /// Upper concave envelope of a point set (at least one point).
    ///
    /// Points sharing a `c` coordinate keep only the largest ordinate.
    pub fn upper_concave(points: &[(f64, f64)]) -> Envelope {
        assert!(!points.is_empty(), "envelope needs at least one point");
        let mut pts: Vec<(f64, f64)> = points.to_vec();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
        // Sorted with the larger ordinate first, so dedup keeps it.
        pts.dedup_by(|next, kept| next.0 == kept.0);

        let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
        for p in pts {
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                // Pop b when it lies on or below the chord a->p.
                let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
                if cross >= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        Envelope { vertices: hull }
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    /// Ordinate of the right endpoint (the saturation value).
    pub fn right_value(&self) -> f64 {
        self.vertices.last().expect("non-empty hull").1
    }

    /// Piecewise-linear evaluation; constant beyond either endpoint.
    pub fn eval(&self, c: f64) -> f64 {
        let v = &self.vertices;
        if c <= v[0].0 {
            return v[0].1;
        }
        let last = v[v.len() - 1];
        if c >= last.0 {
            return last.1;
        }
        let k = v.partition_point(|p| p.0 <= c);
        let (c0, i0) = v[k - 1];
        let (c1, i1) = v[k];
        i0 + (i1 - i0) * (c - c0) / (c1 - c0)
    }
}

/// The traced curve: solved points sorted by quantizer rate plus their
/// upper concave envelope.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InfoCurve {
    /// Solved multiplier points, sorted by `c_value`, deduplicated within
    /// 1e-9 in `c_value`.
    pub points: Vec<CurvePoint>,
    pub envelope: Envelope,
    /// Entropy of the discretized observation, bits.
    pub h_yr: f64,
    /// Unquantized objective ceiling, bits.
    pub upper_bound: f64,
    /// Whether the achieved `c` values were non-decreasing along the
    /// (descending-multiplier) schedule; a `false` here flags runs that got
    /// trapped in local optima, it does not invalidate the envelope.
    pub schedule_c_monotone: bool,
}

impl InfoCurve {
    /// Assemble a curve from solved points: sort, deduplicate, anchor and
    /// build the envelope.
    pub fn build(
        mut points: Vec<CurvePoint>,
        h_yr: f64,
        upper_bound: f64,
        schedule_c_monotone: bool,
    ) -> InfoCurve {
        points.sort_by(|a, b| {
            a.c_value
                .total_cmp(&b.c_value)
                .then(b.i_value.total_cmp(&a.i_value))
        });
        let mut deduped: Vec<CurvePoint> = Vec::with_capacity(points.len());
        for p in points {
            match deduped.last_mut() {
                Some(kept) if (p.c_value - kept.c_value).abs() < 1e-9 => {
                    if p.i_value > kept.i_value {
                        *kept = p;
                    }
                }
                _ => deduped.push(p),
            }
        }
        let points = deduped;

        let mut env_points: Vec<(f64, f64)> =
            points.iter().map(|p| (p.c_value, p.i_value)).collect();
        env_points.push((0.0, 0.0));
        env_points.push((h_yr, upper_bound));
        let envelope = Envelope::upper_concave(&env_points);

        InfoCurve {
            points,
            envelope,
            h_yr,
            upper_bound,
            schedule_c_monotone,
        }
    }

    /// Envelope value at quantizer rate `c`; zero at `c = 0`, the saturation
    /// value for `c >= H(Y_r)`.
    pub fn eval_envelope(&self, c: f64) -> f64 {
        self.envelope.eval(c)
    }

    /// The best traced point that fits a quantizer-rate budget: largest
    /// objective among points with `c_value <= budget + 1e-9`, ties toward
    /// the smaller rate. `None` only when the curve has no points or every
    /// point exceeds the budget.
    pub fn best_point_within(&self, c_budget: f64) -> Option<(usize, &CurvePoint)> {
        self.points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.c_value <= c_budget + 1e-9)
            .max_by(|(_, a), (_, b)| {
                a.i_value
                    .total_cmp(&b.i_value)
                    .then(b.c_value.total_cmp(&a.c_value))
            })
    }

    /// Write the curve as CSV with columns
    /// `lambda,C_bits,I_bits,converged,iters`. Leading `#` lines carry the
    /// optional comment (e.g. a manifest hash).
    pub fn write_csv<W: Write>(&self, mut w: W, comment: Option<&str>) -> io::Result<()> {
        if let Some(c) = comment {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "lambda,C_bits,I_bits,converged,iters")?;
        for p in &self.points {
            writeln!(
                w,
                "{},{},{},{},{}",
                p.lambda, p.c_value, p.i_value, p.converged, p.iters_used
            )?;
        }
        Ok(())
    }
}
