//! Composite Simpson rules on uniform grids, including the cumulative
//! (prefix) integrals used by the nested time integrals of the expansion.

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Uniform grid of an odd number of nodes on `[a, b]`.
#[derive(Debug, Clone)]
pub struct UniformGrid<T> {
    pub start: T,
    pub end: T,
    nodes: Vec<T>,
    step: T,
}

impl<T: Real> UniformGrid<T> {
    pub fn new(start: T, end: T, n: usize) -> Result<Self> {
        if n < 3 || n % 2 == 0 {
            return Err(Error::Argument(format!(
                "Simpson grid needs an odd number of nodes >= 3, got {n}"
            )));
        }
        if !(end >= start) {
            return Err(Error::Argument(format!("grid end {end} precedes start {start}")));
        }
        let step = (end - start) / lit::<T>((n - 1) as f64);
        let nodes = (0..n)
            .map(|i| {
                if i == n - 1 {
                    end
                } else {
                    start + step * lit::<T>(i as f64)
                }
            })
            .collect();
        Ok(Self {
            start,
            end,
            nodes,
            step,
        })
    }

    #[inline]
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn step(&self) -> T {
        self.step
    }

    /// Simpson weights for this grid.
    pub fn weights(&self) -> Vec<T> {
        simpson_weights(self.len(), self.step)
    }

    /// `int_a^b f` from node values.
    pub fn integrate(&self, values: &[T]) -> T {
        simpson(values, self.step)
    }

    /// `F(s_i) = int_a^{s_i} f` at every node.
    pub fn cumulative(&self, values: &[T]) -> Vec<T> {
        cumulative(values, self.step)
    }

    /// `int_a^b ds f(s) int_a^s dq g(q)`.
    pub fn iterated(&self, f: &[T], g: &[T]) -> T {
        let inner = self.cumulative(g);
        let prod: Vec<T> = f.iter().zip(&inner).map(|(&a, &b)| a * b).collect();
        self.integrate(&prod)
    }

    /// `int_a^b ds1 f(s1) int_{s1}^b ds2 g(s2)`, by the prefix-integral trick.
    pub fn ordered(&self, f: &[T], g: &[T]) -> T {
        let inner = self.cumulative(g);
        let total = *inner.last().expect("non-empty grid");
        let prod: Vec<T> = f
            .iter()
            .zip(&inner)
            .map(|(&a, &b)| a * (total - b))
            .collect();
        self.integrate(&prod)
    }
}

/// Composite Simpson weights `h/3 * [1, 4, 2, 4, ..., 4, 1]`.
pub fn simpson_weights<T: Real>(n: usize, h: T) -> Vec<T> {
    let third = h / lit::<T>(3.0);
    (0..n)
        .map(|i| {
            if i == 0 || i == n - 1 {
                third
            } else if i % 2 == 1 {
                lit::<T>(4.0) * third
            } else {
                lit::<T>(2.0) * third
            }
        })
        .collect()
}

/// Composite Simpson integral; `values.len()` must be odd.
pub fn simpson<T: Real>(values: &[T], h: T) -> T {
    let n = values.len();
    debug_assert!(n % 2 == 1, "Simpson needs an odd node count");
    if n < 3 {
        return T::zero();
    }
    let mut odd = T::zero();
    let mut even = T::zero();
    for (i, &v) in values.iter().enumerate().take(n - 1).skip(1) {
        if i % 2 == 1 {
            odd = odd + v;
        } else {
            even = even + v;
        }
    }
    h / lit::<T>(3.0) * (values[0] + values[n - 1] + lit::<T>(4.0) * odd + lit::<T>(2.0) * even)
}

/// Cumulative integral at every node. Even nodes use composite Simpson;
/// odd nodes add a single-interval three-point rule, so the whole array is
/// exact for quadratics.
pub fn cumulative<T: Real>(values: &[T], h: T) -> Vec<T> {
    let n = values.len();
    let mut out = vec![T::zero(); n];
    if n < 3 {
        if n == 2 {
            out[1] = h * (values[0] + values[1]) / lit::<T>(2.0);
        }
        return out;
    }
    let third = h / lit::<T>(3.0);
    let twelfth = h / lit::<T>(12.0);
    let (five, eight) = (lit::<T>(5.0), lit::<T>(8.0));
    out[1] = twelfth * (five * values[0] + eight * values[1] - values[2]);
    for i in 2..n {
        out[i] = if i % 2 == 0 {
            out[i - 2] + third * (values[i - 2] + lit::<T>(4.0) * values[i - 1] + values[i])
        } else {
            out[i - 1] + twelfth * (five * values[i] + eight * values[i - 1] - values[i - 2])
        };
    }
    out
}
