//! Nodal Lagrange bases on equidistant points and Clenshaw-Curtis rules on
//! the reference interval `[0, 1]`, tensorised for the unit square.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// One-dimensional Lagrange basis of order `p` on `p + 1` equidistant nodes
/// in `[0, 1]` (the single node `0.5` when `p = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeBasis {
    order: usize,
    nodes: Vec<f64>,
    /// `1 / prod_{k != i} (x_i - x_k)`
    denominators: Vec<f64>,
}

impl LagrangeBasis {
    pub fn new(order: usize) -> Self {
        let nodes: Vec<f64> = if order == 0 {
            vec![0.5]
        } else {
            (0..=order).map(|k| k as f64 / order as f64).collect()
        };
        let denominators = (0..=order)
            .map(|i| {
                let prod: f64 = (0..=order).filter(|&k| k != i).map(|k| nodes[i] - nodes[k]).product();
                1.0 / prod
            })
            .collect();
        Self { order, nodes, denominators }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.order + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    fn check(&self, i: usize) -> Result<()> {
        if i > self.order {
            Err(Error::IndexOutOfRange { index: i, order: self.order })
        } else {
            Ok(())
        }
    }

    pub fn eval(&self, i: usize, x: f64) -> Result<f64> {
        self.check(i)?;
        Ok(self.value(i, x))
    }

    pub fn grad(&self, i: usize, x: f64) -> Result<f64> {
        self.check(i)?;
        Ok(self.derivative(i, x))
    }

    pub(crate) fn value(&self, i: usize, x: f64) -> f64 {
        let mut v = self.denominators[i];
        for (k, &xk) in self.nodes.iter().enumerate() {
            if k != i {
                v *= x - xk;
            }
        }
        v
    }

    pub(crate) fn derivative(&self, i: usize, x: f64) -> f64 {
        let n = self.nodes.len();
        let mut sum = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let mut prod = 1.0;
            for k in 0..n {
                if k != i && k != j {
                    prod *= x - self.nodes[k];
                }
            }
            sum += prod;
        }
        sum * self.denominators[i]
    }
}

/// Tensor-product Lagrange basis on the reference cell `[0, 1]^dim`.
///
/// Local index `i = ix + (p + 1) * iy`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorBasis {
    dim: usize,
    line: LagrangeBasis,
}

impl TensorBasis {
    pub fn new(dim: usize, order: usize) -> Self {
        Self { dim, line: LagrangeBasis::new(order) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.line.order
    }

    pub fn line(&self) -> &LagrangeBasis {
        &self.line
    }

    /// Basis functions per cell, `(p + 1)^dim`.
    pub fn len(&self) -> usize {
        self.line.len().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn multi_index(&self, i: usize) -> [usize; 2] {
        let n = self.line.len();
        if self.dim == 1 {
            [i, 0]
        } else {
            [i % n, i / n]
        }
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        let mi = self.multi_index(i);
        let mut x = [0.0; 2];
        for a in 0..self.dim {
            x[a] = self.line.nodes[mi[a]];
        }
        x
    }

    pub fn eval_multi(&self, idx: [usize; 2], x: [f64; 2]) -> Result<f64> {
        let mut v = 1.0;
        for a in 0..self.dim {
            v *= self.line.eval(idx[a], x[a])?;
        }
        Ok(v)
    }

    pub fn eval(&self, i: usize, x: [f64; 2]) -> Result<f64> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange { index: i, order: self.order() });
        }
        Ok(self.value(i, x))
    }

    pub fn grad(&self, i: usize, x: [f64; 2]) -> Result<[f64; 2]> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange { index: i, order: self.order() });
        }
        Ok(self.gradient(i, x))
    }

    pub(crate) fn value(&self, i: usize, x: [f64; 2]) -> f64 {
        let mi = self.multi_index(i);
        (0..self.dim).map(|a| self.line.value(mi[a], x[a])).product()
    }

    /// Gradient on the reference cell; divide by `h` for physical cells.
    pub(crate) fn gradient(&self, i: usize, x: [f64; 2]) -> [f64; 2] {
        let mi = self.multi_index(i);
        if self.dim == 1 {
            return [self.line.derivative(mi[0], x[0]), 0.0];
        }
        let (vx, vy) = (self.line.value(mi[0], x[0]), self.line.value(mi[1], x[1]));
        [self.line.derivative(mi[0], x[0]) * vy, vx * self.line.derivative(mi[1], x[1])]
    }
}

/// Quadrature rule on `[0, 1]`; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Tensor rule on `[0, 1]^dim` as (point, weight) pairs, x fastest.
    pub fn tensor(&self, dim: usize) -> Vec<([f64; 2], f64)> {
        if dim == 1 {
            return self.nodes.iter().zip(&self.weights).map(|(&x, &w)| ([x, 0.0], w)).collect();
        }
        let mut out = Vec::with_capacity(self.len() * self.len());
        for (&y, &wy) in self.nodes.iter().zip(&self.weights) {
            for (&x, &wx) in self.nodes.iter().zip(&self.weights) {
                out.push(([x, y], wx * wy));
            }
        }
        out
    }
}

/// Clenshaw-Curtis rule with `n` points (endpoints included) mapped to `[0, 1]`.
pub fn clenshaw_curtis(n: usize) -> Result<QuadRule> {
    if n < 2 {
        return Err(Error::TooFewQuadraturePoints(n));
    }
    let big_n = n - 1;
    let nf = big_n as f64;
    let mut nodes = vec![0.0; n];
    for j in 0..=big_n / 2 {
        let s = (j as f64 * PI / (2.0 * nf)).sin();
        nodes[j] = s * s;
        nodes[big_n - j] = 1.0 - s * s;
    }
    if big_n % 2 == 0 {
        nodes[big_n / 2] = 0.5;
    }
    let mut weights = vec![0.0; n];
    let end_weight = if big_n % 2 == 0 { 1.0 / (nf * nf - 1.0) } else { 1.0 / (nf * nf) };
    weights[0] = end_weight / 2.0;
    weights[big_n] = end_weight / 2.0;
    for (j, w) in weights.iter_mut().enumerate().take(big_n).skip(1) {
        let theta = j as f64 * PI / nf;
        let mut v = 1.0;
        if big_n % 2 == 0 {
            for k in 1..big_n / 2 {
                let kf = k as f64;
                v -= 2.0 * (2.0 * kf * theta).cos() / (4.0 * kf * kf - 1.0);
            }
            v -= (nf * theta).cos() / (nf * nf - 1.0);
        } else {
            for k in 1..=(big_n - 1) / 2 {
                let kf = k as f64;
                v -= 2.0 * (2.0 * kf * theta).cos() / (4.0 * kf * kf - 1.0);
            }
        }
        // 2v/N on [-1, 1], halved for [0, 1]
        *w = v / nf;
    }
    Ok(QuadRule { nodes, weights })
}

/// Default points per axis for the solver rule.
pub fn default_quadrature_points(order: usize) -> usize {
    2 * order + 3
}
