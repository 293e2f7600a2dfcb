use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples of one joint with their fitting weights.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotSeries {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
    /// Positive; `f64::INFINITY` pins the fit to that knot.
    pub weights: Vec<f64>,
}

impl KnotSeries {
    pub fn new(t: Vec<f64>, values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if t.len() < 2 {
            return Err(Error::Dimension {
                context: "knot count",
                expected: 2,
                actual: t.len(),
            });
        }
        if values.len() != t.len() || weights.len() != t.len() {
            return Err(Error::Dimension {
                context: "knot series",
                expected: t.len(),
                actual: values.len().min(weights.len()),
            });
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("knot times must be strictly increasing".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Singular("knot weights must be positive".into()));
        }
        Ok(Self { t, values, weights })
    }

    /// Knots at `t = 0, 1, ..., T` with unit interior weights and
    /// `endpoint_weight` at both ends.
    pub fn uniform(values: &[f64], endpoint_weight: f64) -> Result<Self> {
        let n = values.len();
        let t = (0..n).map(|i| i as f64).collect();
        let mut w = vec![1.0; n];
        if n >= 1 {
            w[0] = endpoint_weight;
            w[n - 1] = endpoint_weight;
        }
        Self::new(t, values.to_vec(), w)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Piecewise cubic `a + b s + c s^2 + d s^3`, `s = t - t_i`, on each knot interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spline {
    pub t: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

/// Value with first and second derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplinePoint {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Spline {
    pub fn domain(&self) -> (f64, f64) {
        (self.t[0], self.t[self.t.len() - 1])
    }

    pub fn intervals(&self) -> usize {
        self.a.len()
    }

    fn locate(&self, t: f64) -> Result<usize> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfDomain { t, lo, hi });
        }
        let i = self.t.partition_point(|&x| x <= t);
        Ok(i.saturating_sub(1).min(self.intervals() - 1))
    }

    pub fn eval_all(&self, t: f64) -> Result<SplinePoint> {
        let i = self.locate(t)?;
        let s = t - self.t[i];
        let (a, b, c, d) = (self.a[i], self.b[i], self.c[i], self.d[i]);
        Ok(SplinePoint {
            value: a + s * (b + s * (c + s * d)),
            d1: b + s * (2.0 * c + 3.0 * s * d),
            d2: 2.0 * c + 6.0 * s * d,
        })
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(self.eval_all(t)?.value)
    }

    /// Integral of the squared second derivative over the domain.
    pub fn roughness(&self) -> f64 {
        (0..self.intervals())
            .map(|i| {
                let h = self.t[i + 1] - self.t[i];
                let (c, d) = (self.c[i], self.d[i]);
                4.0 * c * c * h + 12.0 * c * d * h * h + 12.0 * d * d * h * h * h
            })
            .sum()
    }

    /// Left and right limits at interior knot `i` (value, first, second derivative).
    pub fn one_sided_at_knot(&self, i: usize) -> ([f64; 3], [f64; 3]) {
        let j = i - 1;
        let h = self.t[i] - self.t[j];
        let left = [
            self.a[j] + h * (self.b[j] + h * (self.c[j] + h * self.d[j])),
            self.b[j] + h * (2.0 * self.c[j] + 3.0 * h * self.d[j]),
            2.0 * self.c[j] + 6.0 * h * self.d[j],
        ];
        let right = [self.a[i], self.b[i], 2.0 * self.c[i]];
        (left, right)
    }

    fn from_values(t: &[f64], a: Vec<f64>, gamma: &[f64]) -> Self {
        let m = t.len() - 1;
        let mut b = Vec::with_capacity(m);
        let mut c = Vec::with_capacity(m);
        let mut d = Vec::with_capacity(m);
        for i in 0..m {
            let h = t[i + 1] - t[i];
            b.push((a[i + 1] - a[i]) / h - h * (2.0 * gamma[i] + gamma[i + 1]) / 6.0);
            c.push(gamma[i] / 2.0);
            d.push((gamma[i + 1] - gamma[i]) / (6.0 * h));
        }
        let mut a = a;
        a.truncate(m);
        Self {
            t: t.to_vec(),
            a,
            b,
            c,
            d,
        }
    }
}

/// Natural cubic smoothing spline minimizing
/// `p * sum w (y - f)^2 + (1 - p) * int f''^2`.
///
/// With `Q` the second-difference operator and `R` the tridiagonal
/// curvature Gram matrix, solves the pentadiagonal system
/// `(p R + (1 - p) Q' W^-1 Q) v = Q' y`; then the interior second
/// derivatives are `p v` and the knot values `y - (1 - p) W^-1 Q v`.
pub fn fit_smoothing_spline(knots: &KnotSeries, p: f64) -> Result<Spline> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("smoothing parameter {p} not in [0, 1]")));
    }
    let n = knots.len();
    let t = &knots.t;
    let y = &knots.values;
    if n == 2 {
        return Ok(Spline::from_values(t, y.clone(), &[0.0, 0.0]));
    }
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let winv: Vec<f64> = knots.weights.iter().map(|w| 1.0 / w).collect();
    let m = n - 2;
    // Column j of Q touches rows j, j+1, j+2.
    let q = |j: usize| -> [f64; 3] { [1.0 / h[j], -1.0 / h[j] - 1.0 / h[j + 1], 1.0 / h[j + 1]] };

    let mut band = SymBand::zeros(m, 2);
    for j in 0..m {
        let qj = q(j);
        band.add(j, j, p * (h[j] + h[j + 1]) / 3.0);
        if j + 1 < m {
            band.add(j + 1, j, p * h[j + 1] / 6.0);
        }
        for off in 0..=2usize {
            let k = j + off;
            if k >= m {
                break;
            }
            let qk = q(k);
            // Rows shared by columns j and k are j+off .. j+2.
            let mut s = 0.0;
            for r in (j + off)..=(j + 2) {
                s += qj[r - j] * winv[r] * qk[r - k];
            }
            band.add(k, j, (1.0 - p) * s);
        }
    }
    let rhs: Vec<f64> = (0..m)
        .map(|j| {
            let qj = q(j);
            qj[0] * y[j] + qj[1] * y[j + 1] + qj[2] * y[j + 2]
        })
        .collect();
    let v = band.solve(rhs)?;

    let mut gamma = vec![0.0; n];
    for j in 0..m {
        gamma[j + 1] = p * v[j];
    }
    let mut qv = vec![0.0; n];
    for j in 0..m {
        let qj = q(j);
        for r in 0..3 {
            qv[j + r] += qj[r] * v[j];
        }
    }
    let a: Vec<f64> = (0..n).map(|i| y[i] - (1.0 - p) * winv[i] * qv[i]).collect();
    Ok(Spline::from_values(t, a, &gamma))
}

/// Symmetric positive-definite band matrix stored by lower diagonals,
/// factored in place as `L D L'`.
struct SymBand {
    n: usize,
    /// `diag[k][i]` holds entry `(i + k, i)`.
    diag: Vec<Vec<f64>>,
}

impl SymBand {
    fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            diag: (0..=bandwidth).map(|k| vec![0.0; n.saturating_sub(k)]).collect(),
        }
    }

    fn add(&mut self, row: usize, col: usize, v: f64) {
        self.diag[row - col][col] += v;
    }

    fn get(&self, row: usize, col: usize) -> f64 {
        let k = row - col;
        if k < self.diag.len() {
            self.diag[k][col]
        } else {
            0.0
        }
    }

    fn solve(mut self, mut rhs: Vec<f64>) -> Result<Vec<f64>> {
        let n = self.n;
        let bw = self.diag.len() - 1;
        let scale = self.diag[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // Factor: L unit lower (stored in the sub-diagonals), D on the diagonal.
        for j in 0..n {
            let mut dj = self.get(j, j);
            for k in j.saturating_sub(bw)..j {
                let l = self.get(j, k);
                dj -= l * l * self.diag[0][k];
            }
            if !(dj > f64::EPSILON * scale * n as f64) {
                return Err(Error::Singular(format!("pivot {j} of the smoothing system is {dj:e}")));
            }
            self.diag[0][j] = dj;
            for i in (j + 1)..(j + 1 + bw).min(n) {
                let mut lij = self.get(i, j);
                for k in i.saturating_sub(bw)..j {
                    lij -= self.get(i, k) * self.get(j, k) * self.diag[0][k];
                }
                self.diag[i - j][j] = lij / dj;
            }
        }
        for i in 0..n {
            for k in i.saturating_sub(bw)..i {
                rhs[i] -= self.get(i, k) * rhs[k];
            }
        }
        for i in 0..n {
            rhs[i] /= self.diag[0][i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..(i + 1 + bw).min(n) {
                rhs[i] -= self.get(k, i) * rhs[k];
            }
        }
        Ok(rhs)
    }
}

/// Sum of squared second differences of a uniformly sampled series.
pub fn second_difference_roughness(values: &[f64]) -> f64 {
    values
        .windows(3)
        .map(|w| {
            let d = w[0] - 2.0 * w[1] + w[2];
            d * d
        })
        .sum()
}
