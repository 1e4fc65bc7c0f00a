//! Dense reference implementations used by the integration tests. They are
//! written from the formulas directly and share no code with the library's
//! sparse and split-matrix paths.

#![allow(dead_code)]

use ndarray::{concatenate, Array1, Array2, Axis};

use graphnav::policynet::PolicyParams;

/// `D^-1/2 (A + I) D^-1/2` as a dense matrix, degrees from `A + I`.
pub fn dense_normalized_adjacency(n: usize, edges: &[(usize, usize)]) -> Array2<f64> {
    let mut a = Array2::<f64>::eye(n);
    for &(i, j) in edges {
        if i != j {
            a[[i, j]] = 1.0;
            a[[j, i]] = 1.0;
        }
    }
    let d: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
    Array2::from_shape_fn((n, n), |(i, j)| a[[i, j]] / (d[i] * d[j]).sqrt())
}

fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| if v > 0.0 { v } else { 0.0 })
}

/// Logits of every node plus the sign pattern of every ReLU input on the
/// nodes listed in `rows`.
pub struct DenseForward {
    pub logits: Array1<f64>,
    pub pattern: Vec<bool>,
}

pub fn dense_forward(
    params: &PolicyParams,
    adj: &Array2<f64>,
    features: &Array2<f64>,
    target: &Array1<f64>,
    rows: &[usize],
) -> DenseForward {
    let conv_pre = adj.dot(features).dot(&params.theta);
    let z = relu(&conv_pre);
    let n = z.nrows();
    let target_pre = target.dot(&params.theta);
    let zt_row = target_pre.mapv(|v| v.max(0.0)).insert_axis(Axis(0));
    let zt = zt_row.broadcast((n, zt_row.ncols())).unwrap().to_owned();
    let x = concatenate(Axis(1), &[z.view(), zt.view()]).unwrap();
    let h1_pre = x.dot(&params.w1) + &params.b1;
    let h1 = relu(&h1_pre);
    let h2_pre = h1.dot(&params.w2) + &params.b2;
    let h2 = relu(&h2_pre);
    let out = h2.dot(&params.w3) + &params.b3;
    let logits = out.column(0).to_owned();
    let mut pattern: Vec<bool> = target_pre.iter().map(|&v| v > 0.0).collect();
    for &r in rows {
        for m in [&conv_pre, &h1_pre, &h2_pre] {
            pattern.extend(m.row(r).iter().map(|&v| v > 0.0));
        }
    }
    DenseForward { logits, pattern }
}

/// `(lse(up) - lse(down))` over the same index set, accurate to a few ulps of
/// the difference itself rather than of the log-sum-exp values.
pub fn logsumexp_difference(up: &[Dd], down: &[Dd]) -> f64 {
    let down_f: Vec<f64> = down.iter().map(|d| d.to_f64()).collect();
    let lse = logsumexp(&down_f);
    let s: f64 = up
        .iter()
        .zip(down)
        .zip(&down_f)
        .map(|((u, d), &df)| (df - lse).exp() * u.sub(*d).to_f64().exp_m1())
        .sum();
    s.ln_1p()
}

pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Double-double number `hi + lo`, enough precision for finite-difference
/// quotients far below the f64 round-off floor.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub fn new(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        Self {
            hi: s,
            lo: (a - (s - bb)) + (b - bb),
        }
    }

    fn quick(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Self { hi: s, lo: lo - (s - hi) }
    }

    pub fn add(self, o: Self) -> Self {
        let s = Self::two_sum(self.hi, o.hi);
        let t = Self::two_sum(self.lo, o.lo);
        let u = Self::quick(s.hi, s.lo + t.hi);
        Self::quick(u.hi, u.lo + t.lo)
    }

    pub fn sub(self, o: Self) -> Self {
        self.add(Self { hi: -o.hi, lo: -o.lo })
    }

    pub fn mul(self, o: Self) -> Self {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Self::quick(p, e + (self.hi * o.lo + self.lo * o.hi))
    }

    pub fn relu(self) -> Self {
        if self.hi > 0.0 {
            self
        } else {
            Self::default()
        }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

fn dd_matmul(a: &[Vec<Dd>], b: &Array2<f64>) -> Vec<Vec<Dd>> {
    a.iter()
        .map(|row| {
            (0..b.ncols())
                .map(|j| {
                    row.iter()
                        .enumerate()
                        .fold(Dd::default(), |acc, (k, &x)| acc.add(x.mul(Dd::new(b[[k, j]]))))
                })
                .collect()
        })
        .collect()
}

fn dd_bias(m: &mut [Vec<Dd>], b: &Array1<f64>) {
    for row in m {
        for (x, &bv) in row.iter_mut().zip(b) {
            *x = x.add(Dd::new(bv));
        }
    }
}

/// Same network as [`dense_forward`] in double-double arithmetic. Returns
/// logits and the ReLU sign pattern on `rows`.
pub fn dense_forward_dd(
    params: &PolicyParams,
    adj: &Array2<f64>,
    features: &Array2<f64>,
    target: &Array1<f64>,
    rows: &[usize],
) -> (Vec<Dd>, Vec<bool>) {
    let n = adj.nrows();
    let ay: Vec<Vec<Dd>> = (0..n)
        .map(|i| {
            (0..features.ncols())
                .map(|d| {
                    (0..n).fold(Dd::default(), |acc, j| {
                        acc.add(Dd::new(adj[[i, j]]).mul(Dd::new(features[[j, d]])))
                    })
                })
                .collect()
        })
        .collect();
    let conv_pre = dd_matmul(&ay, &params.theta);
    let target_row: Vec<Dd> = target.iter().map(|&v| Dd::new(v)).collect();
    let target_pre = dd_matmul(&[target_row], &params.theta).remove(0);
    let x: Vec<Vec<Dd>> = conv_pre
        .iter()
        .map(|r| r.iter().chain(&target_pre).map(|v| v.relu()).collect())
        .collect();
    let mut h1_pre = dd_matmul(&x, &params.w1);
    dd_bias(&mut h1_pre, &params.b1);
    let h1: Vec<Vec<Dd>> = h1_pre.iter().map(|r| r.iter().map(|v| v.relu()).collect()).collect();
    let mut h2_pre = dd_matmul(&h1, &params.w2);
    dd_bias(&mut h2_pre, &params.b2);
    let h2: Vec<Vec<Dd>> = h2_pre.iter().map(|r| r.iter().map(|v| v.relu()).collect()).collect();
    let mut out = dd_matmul(&h2, &params.w3);
    dd_bias(&mut out, &params.b3);
    let logits = out.into_iter().map(|r| r[0]).collect();
    let mut pattern: Vec<bool> = target_pre.iter().map(|v| v.hi > 0.0).collect();
    for &r in rows {
        for m in [&conv_pre, &h1_pre, &h2_pre] {
            pattern.extend(m[r].iter().map(|v| v.hi > 0.0));
        }
    }
    (logits, pattern)
}
