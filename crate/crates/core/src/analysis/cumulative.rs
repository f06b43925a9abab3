use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Mutex;

use super::quadrature::{integrate_with, QuadOptions};
use crate::{Error, Result};

pub type Integrand = Box<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// `x -> ∫_{x0}^{x} g(t) dt` with checkpointed partial sums.
///
/// Checkpoints sit on the fixed mesh `x0 + i * spacing` and are filled
/// outward from the base point one panel at a time, so the value at a mesh
/// point never depends on the order of queries. A query at an arbitrary `x`
/// starts from the nearest checkpoint and integrates the remaining piece.
pub struct CumulativeIntegral {
    integrand: Integrand,
    base: f64,
    spacing: f64,
    opts: QuadOptions,
    checkpoints: Mutex<BTreeMap<i64, f64>>,
    values: Mutex<HashMap<u64, f64>>,
}

impl fmt::Debug for CumulativeIntegral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CumulativeIntegral")
            .field("base", &self.base)
            .field("spacing", &self.spacing)
            .field("tol", &self.opts.tol)
            .field("checkpoints", &self.checkpoints.lock().map(|c| c.len()).unwrap_or(0))
            .finish()
    }
}

impl CumulativeIntegral {
    pub fn new(integrand: Integrand, base: f64, spacing: f64, opts: QuadOptions) -> Result<Self> {
        if !base.is_finite() || !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "cumulative integral needs a finite base point and positive spacing, got {base}, {spacing}"
            )));
        }
        let mut checkpoints = BTreeMap::new();
        checkpoints.insert(0, 0.0);
        Ok(Self {
            integrand,
            base,
            spacing,
            opts,
            checkpoints: Mutex::new(checkpoints),
            values: Mutex::new(HashMap::new()),
        })
    }

    pub fn base_point(&self) -> f64 {
        self.base
    }

    pub fn tol(&self) -> f64 {
        self.opts.tol
    }

    pub fn integrand(&self, t: f64) -> Result<f64> {
        (self.integrand)(t)
    }

    pub fn mesh_point(&self, index: i64) -> f64 {
        self.base + index as f64 * self.spacing
    }

    /// Index and location of the mesh checkpoint closest to `x`.
    pub fn nearest_checkpoint(&self, x: f64) -> (i64, f64) {
        let index = ((x - self.base) / self.spacing).round() as i64;
        (index, self.mesh_point(index))
    }

    pub fn cached_checkpoints(&self) -> Vec<(f64, f64)> {
        let map = self.checkpoints.lock().expect("checkpoint lock");
        map.iter().map(|(&i, &v)| (self.mesh_point(i), v)).collect()
    }

    /// Accumulated integral at mesh index `index`.
    pub fn checkpoint(&self, index: i64) -> Result<f64> {
        let (mut at, mut acc) = {
            let map = self.checkpoints.lock().expect("checkpoint lock");
            if let Some(&v) = map.get(&index) {
                return Ok(v);
            }
            // furthest cached point on the way from the base to `index`
            let found = if index > 0 {
                map.range(0..index).next_back()
            } else {
                map.range(index + 1..=0).next()
            };
            let (&i, &v) = found.expect("base checkpoint is always cached");
            (i, v)
        };
        let step = index.signum();
        while at != index {
            let next = at + step;
            acc += integrate_with(&self.integrand, self.mesh_point(at), self.mesh_point(next), &self.opts)?;
            at = next;
            self.checkpoints.lock().expect("checkpoint lock").insert(at, acc);
        }
        Ok(acc)
    }

    /// `∫_{x0}^{x} g`, finishing from the nearest checkpoint with adaptive quadrature.
    pub fn value(&self, x: f64) -> Result<f64> {
        self.value_with_tail(x, |c| integrate_with(&self.integrand, c, x, &self.opts))
    }

    /// As [`value`](Self::value), but the last piece `∫_c^x g` comes from
    /// `tail(c)`, where `c` is the nearest checkpoint location.
    pub fn value_with_tail(&self, x: f64, tail: impl FnOnce(f64) -> Result<f64>) -> Result<f64> {
        if x == self.base {
            return Ok(0.0);
        }
        if !x.is_finite() {
            return Err(Error::InvalidConfig(format!("cannot integrate up to {x}")));
        }
        let key = x.to_bits();
        if let Some(&v) = self.values.lock().expect("value lock").get(&key) {
            return Ok(v);
        }
        let (index, c) = self.nearest_checkpoint(x);
        let start = self.checkpoint(index)?;
        let v = if c == x { start } else { start + tail(c)? };
        self.values.lock().expect("value lock").insert(key, v);
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::quadrature::integrate;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn cumulative(g: impl Fn(f64) -> f64 + Send + Sync + 'static, base: f64) -> CumulativeIntegral {
        CumulativeIntegral::new(Box::new(move |t| Ok(g(t))), base, 0.0625, QuadOptions::new(1e-11)).unwrap()
    }

    #[test]
    fn examples() {
        let c = cumulative(|t| t.sin() + 3.0, 0.25);
        assert_eq!(c.value(0.25).unwrap(), 0.0);
        let one = cumulative(|_| 1.0, 0.0);
        assert!((one.value(0.8).unwrap() - 0.8).abs() < 1e-14);
        let neg = cumulative(|t| -t, 0.0);
        assert!((neg.value(1.0).unwrap() + 0.5).abs() < 1e-14);
        assert!((neg.value(-1.0).unwrap() + 0.5).abs() < 1e-14);
    }

    #[test]
    fn checkpoints_fill_outward() {
        let c = cumulative(|t| t.exp(), 0.0);
        c.value(0.3).unwrap();
        let points: Vec<f64> = c.cached_checkpoints().iter().map(|p| p.0).collect();
        assert_eq!(points, vec![0.0, 0.0625, 0.125, 0.1875, 0.25, 0.3125]);
        c.value(-0.1).unwrap();
        assert_eq!(c.cached_checkpoints()[0].0, -0.125);
        for (x, v) in c.cached_checkpoints() {
            assert!((v - (x.exp() - 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn query_order_does_not_change_values() {
        let forward = cumulative(|t| (2.0 * t).cos(), -0.5);
        let backward = cumulative(|t| (2.0 * t).cos(), -0.5);
        let xs: Vec<f64> = (0..40).map(|i| -1.0 + 0.05 * i as f64).collect();
        let a: Vec<f64> = xs.iter().map(|&x| forward.value(x).unwrap()).collect();
        let b: Vec<f64> = xs.iter().rev().map(|&x| backward.value(x).unwrap()).collect();
        let b: Vec<f64> = b.into_iter().rev().collect();
        assert_eq!(a, b);
    }

    #[test]
    fn additive_across_points() {
        let g = |t: f64| 1.0 / (1.0 + t * t / 4.0);
        let c = cumulative(g, 0.0);
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..30 {
            let x: f64 = rng.gen_range(-1.0..1.0);
            let y: f64 = rng.gen_range(x..=1.0);
            let piece = integrate(|t| Ok(g(t)), x, y, c.tol()).unwrap();
            let diff = c.value(x).unwrap() + piece - c.value(y).unwrap();
            assert!(diff.abs() <= 2.0 * c.tol(), "{x} {y}: {diff}");
        }
    }

    #[test]
    fn custom_tail_is_used_off_mesh() {
        let c = cumulative(|_| 1.0, 0.0);
        let on_mesh = c.value_with_tail(0.0625, |_| Ok(100.0)).unwrap();
        assert!((on_mesh - 0.0625).abs() < 1e-15);
        let v = c.value_with_tail(0.07, |start| Ok(0.07 - start)).unwrap();
        assert!((v - 0.07).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_mesh() {
        assert!(CumulativeIntegral::new(Box::new(|_| Ok(1.0)), 0.0, 0.0, QuadOptions::new(1e-9)).is_err());
    }
}
