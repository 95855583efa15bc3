//! Truncated tensor-product grids over `[-L, L]^d` and finite-difference
//! weak derivatives on them.
//!
//! A [`TensorGrid`] owns the node coordinates and a table of difference
//! stencils for derivative orders 1 to 4. Interior nodes use centred
//! fourth-order stencils; nodes too close to the boundary for the centred
//! window use a shifted (one-sided) window of `order + 4` points. Every
//! stencil is exact for polynomials of degree at most 4.

use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Highest derivative order per axis supported by the stencil table.
pub const MAX_DIFF_ORDER: usize = 4;

#[derive(Debug, Clone)]
struct Stencil {
    start: usize,
    weights: Vec<f64>,
}

/// Uniform tensor-product grid with `n` nodes per axis on `[-L, L]^d`.
#[derive(Debug)]
pub struct TensorGrid {
    dim: usize,
    half_width: f64,
    n: usize,
    spacing: f64,
    nodes: Vec<f64>,
    // stencils[order - 1][node]
    stencils: Vec<Vec<Stencil>>,
}

impl PartialEq for TensorGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.half_width == other.half_width
    }
}

impl TensorGrid {
    /// Builds the grid. `n` must be odd and at least 9 so that 0 is a node.
    pub fn new(dim: usize, half_width: f64, n: usize) -> Result<Arc<Self>> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!("half-width {half_width} must be positive")));
        }
        if n < 9 || n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("points per axis {n} must be odd and >= 9")));
        }
        let spacing = 2.0 * half_width / (n - 1) as f64;
        let mid = (n / 2) as isize;
        // Symmetric by construction: node i and node n-1-i are exact negatives.
        let nodes = (0..n).map(|i| (i as isize - mid) as f64 * spacing).collect();
        let stencils = (1..=MAX_DIFF_ORDER)
            .map(|order| build_stencils(order, n, spacing))
            .collect();
        Ok(Arc::new(Self { dim, half_width, n, spacing, nodes, stencils }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Axis coordinates, shared by every axis.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Total number of grid points, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Per-axis node indices of a flat index. Axis 0 varies slowest.
    pub fn multi_index(&self, flat: usize) -> [usize; 2] {
        match self.dim {
            1 => [flat, 0],
            _ => [flat / self.n, flat % self.n],
        }
    }

    /// Coordinates of the point at a flat index.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let idx = self.multi_index(flat);
        (0..self.dim).map(|axis| self.nodes[idx[axis]]).collect()
    }

    /// Whether every axis index of `flat` is at least `margin` nodes away from the boundary.
    pub fn is_interior(&self, flat: usize, margin: usize) -> bool {
        let idx = self.multi_index(flat);
        (0..self.dim).all(|axis| idx[axis] >= margin && idx[axis] + margin < self.n)
    }

    /// Composite trapezoid weights for the Lebesgue measure on the box.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let axis: Vec<f64> = (0..self.n)
            .map(|i| if i == 0 || i + 1 == self.n { 0.5 * self.spacing } else { self.spacing })
            .collect();
        (0..self.len())
            .map(|flat| {
                let idx = self.multi_index(flat);
                (0..self.dim).map(|a| axis[idx[a]]).product()
            })
            .collect()
    }
}

/// Fornberg's recursion for finite-difference weights of derivative `order`
/// at `x0` from the given sample offsets.
fn fornberg_weights(order: usize, x0: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

fn build_stencils(order: usize, n: usize, h: f64) -> Vec<Stencil> {
    let half_central = order.div_ceil(2) + 1;
    let one_sided = order + 4;
    let scale = h.powi(order as i32);
    (0..n)
        .map(|i| {
            let (start, width) = if i >= half_central && i + half_central < n {
                (i - half_central, 2 * half_central + 1)
            } else {
                let width = one_sided.min(n);
                let start = i.saturating_sub(width / 2).min(n - width);
                (start, width)
            };
            let offsets: Vec<f64> = (start..start + width).map(|j| j as f64).collect();
            let weights = fornberg_weights(order, i as f64, &offsets)
                .into_iter()
                .map(|w| w / scale)
                .collect();
            Stencil { start, weights }
        })
        .collect()
}

/// Multi-index `s = (s_1, ..., s_d)` selecting the partial derivative `D^s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    orders: [usize; 2],
    dim: usize,
}

impl MultiIndex {
    pub fn new(orders: &[usize]) -> Result<Self> {
        if orders.is_empty() || orders.len() > 2 {
            return Err(Error::InvalidGrid(format!(
                "multi-index must have 1 or 2 components, got {}",
                orders.len()
            )));
        }
        let mut s = [0; 2];
        s[..orders.len()].copy_from_slice(orders);
        Ok(Self { orders: s, dim: orders.len() })
    }

    /// The zero multi-index in dimension `dim`.
    pub fn zero(dim: usize) -> Self {
        Self { orders: [0; 2], dim }
    }

    /// First-order derivative along `axis`.
    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut orders = [0; 2];
        orders[axis] = 1;
        Self { orders, dim }
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders[..self.dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `|s| = s_1 + ... + s_d`.
    pub fn weight(&self) -> usize {
        self.orders().iter().sum()
    }
}

/// Real function sampled at every node of a [`TensorGrid`].
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<TensorGrid>,
    values: Vec<f64>,
}

impl PartialEq for GridFunction {
    fn eq(&self, other: &Self) -> bool {
        *self.grid == *other.grid && self.values == other.values
    }
}

impl GridFunction {
    /// Wraps raw node values. Fails on length mismatch or non-finite entries.
    pub fn new(grid: &Arc<TensorGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: format!("non-finite value {} at node {i}", values[i]),
            });
        }
        Ok(Self { grid: Arc::clone(grid), values })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: &Arc<TensorGrid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Self { grid: Arc::clone(grid), values }
    }

    /// Samples a function of the first coordinate.
    pub fn from_fn_1d(grid: &Arc<TensorGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| f(grid.nodes()[grid.multi_index(i)[0]]))
            .collect();
        Self { grid: Arc::clone(grid), values }
    }

    pub fn constant(grid: &Arc<TensorGrid>, c: f64) -> Self {
        Self { grid: Arc::clone(grid), values: vec![c; grid.len()] }
    }

    pub fn zeros(grid: &Arc<TensorGrid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Arc<TensorGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: Arc::clone(&self.grid), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert!(self.same_grid(other));
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self { grid: Arc::clone(&self.grid), values }
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch("grid functions live on different grids".into()))
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + c * b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute value over nodes at least `margin` away from the boundary.
    pub fn max_abs_interior(&self, margin: usize) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.is_interior(*i, margin))
            .fold(0.0, |m, (_, v)| m.max(v.abs()))
    }

    /// Finite-difference approximation of the weak derivative `D^s u`.
    pub fn diff(&self, s: MultiIndex) -> Result<Self> {
        if s.dim() != self.grid.dim {
            return Err(Error::GridMismatch(format!(
                "multi-index of dimension {} on a {}-d grid",
                s.dim(),
                self.grid.dim
            )));
        }
        if s.weight() > MAX_DIFF_ORDER {
            return Err(Error::InvalidParameter {
                name: "s",
                reason: format!("|s| = {} exceeds {MAX_DIFF_ORDER}", s.weight()),
            });
        }
        let mut out = self.clone();
        for (axis, &order) in s.orders().iter().enumerate() {
            if order > 0 {
                out = out.diff_axis(axis, order);
            }
        }
        Ok(out)
    }

    /// Derivative of the given order along a single axis.
    pub fn diff_axis(&self, axis: usize, order: usize) -> Self {
        assert!(axis < self.grid.dim && (1..=MAX_DIFF_ORDER).contains(&order));
        let grid = &self.grid;
        let n = grid.n;
        let table = &grid.stencils[order - 1];
        let stride = if grid.dim == 1 || axis == 1 { 1 } else { n };
        let values = (0..grid.len())
            .map(|flat| {
                let idx = grid.multi_index(flat);
                let i = idx[axis];
                let base = flat - i * stride;
                let st = &table[i];
                st.weights
                    .iter()
                    .enumerate()
                    .map(|(k, w)| w * self.values[base + (st.start + k) * stride])
                    .sum()
            })
            .collect();
        Self { grid: Arc::clone(grid), values }
    }

    /// `d/dx` for one-dimensional grids.
    pub fn d1(&self) -> Self {
        self.diff_axis(0, 1)
    }

    /// `d^2/dx^2` for one-dimensional grids.
    pub fn d2(&self) -> Self {
        self.diff_axis(0, 2)
    }
}

impl Add for &GridFunction {
    type Output = GridFunction;
    fn add(self, rhs: &GridFunction) -> GridFunction {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &GridFunction {
    type Output = GridFunction;
    fn sub(self, rhs: &GridFunction) -> GridFunction {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul for &GridFunction {
    type Output = GridFunction;
    fn mul(self, rhs: &GridFunction) -> GridFunction {
        self.zip_map(rhs, |a, b| a * b)
    }
}
