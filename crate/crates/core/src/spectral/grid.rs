use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

fn default_length() -> f64 {
    2.0 * PI
}

fn default_dealias() -> f64 {
    2.0 / 3.0
}

/// Periodic grid: `modes_per_axis` collocation points per axis on `[0, L)^dim`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub modes_per_axis: usize,
    #[serde(default = "default_length")]
    pub length: f64,
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
}

impl GridSpec {
    /// Grid with side `2π` and the two-thirds truncation.
    pub fn new(dim: usize, modes_per_axis: usize) -> Result<Self> {
        let g = GridSpec {
            dim,
            modes_per_axis,
            length: default_length(),
            dealias_fraction: default_dealias(),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_length(mut self, length: f64) -> Result<Self> {
        self.length = length;
        self.validate()?;
        Ok(self)
    }

    pub fn with_dealias(mut self, fraction: f64) -> Result<Self> {
        self.dealias_fraction = fraction;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(config(format!("grid.dim must be 2 or 3, got {}", self.dim)));
        }
        let n = self.modes_per_axis;
        if n < 4 || n % 2 != 0 {
            return Err(config(format!(
                "grid.modes_per_axis must be an even integer >= 4, got {n}"
            )));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(config(format!("grid.length must be positive, got {}", self.length)));
        }
        let f = self.dealias_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(config(format!("grid.dealias_fraction must lie in (0,1], got {f}")));
        }
        if f * n as f64 / 2.0 < 1.0 {
            return Err(config("grid.dealias_fraction * modes_per_axis / 2 must be >= 1"));
        }
        Ok(())
    }

    /// Number of collocation points, `N^dim`.
    pub fn points(&self) -> usize {
        self.modes_per_axis.pow(self.dim as u32)
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// `2π/L`, the modulus of the unit wavevector.
    pub fn unit(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Largest retained integer wavenumber per axis after truncation.
    ///
    /// Modes with some `|k_i|` above the cutoff are zeroed after every product.
    /// The Nyquist mode is always removed.
    pub fn cutoff(&self) -> i64 {
        let c = (self.dealias_fraction * self.modes_per_axis as f64 / 2.0 - 1e-12).ceil() as i64 - 1;
        c.max(1)
    }

    /// Flat index of integer wavevector `k`, if representable.
    pub fn index_of(&self, k: [i64; 3]) -> Option<usize> {
        let n = self.modes_per_axis as i64;
        let half = n / 2;
        let mut idx = 0usize;
        for (a, &ka) in k.iter().enumerate() {
            if a >= self.dim {
                if ka != 0 {
                    return None;
                }
                continue;
            }
            if ka.abs() > half {
                return None;
            }
            idx = idx * self.modes_per_axis + ka.rem_euclid(n) as usize;
        }
        Some(idx)
    }

    /// Shared per-mode lookup tables for this grid.
    pub fn modes(&self) -> Arc<ModeTable> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize, u64, u64), Arc<ModeTable>>>> =
            OnceLock::new();
        let key = (
            self.dim,
            self.modes_per_axis,
            self.length.to_bits(),
            self.dealias_fraction.to_bits(),
        );
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry(key)
            .or_insert_with(|| Arc::new(ModeTable::build(self)))
            .clone()
    }
}

/// Integer wavevectors, physical wavevectors and truncation mask per flat index.
#[derive(Debug)]
pub struct ModeTable {
    pub kint: Vec<[i64; 3]>,
    pub kvec: Vec<[f64; 3]>,
    pub k2: Vec<f64>,
    pub keep: Vec<bool>,
    pub neg: Vec<usize>,
}

impl ModeTable {
    fn build(g: &GridSpec) -> Self {
        let n = g.modes_per_axis;
        let total = g.points();
        let unit = g.unit();
        let cut = g.cutoff();
        let wrap = |i: usize| -> i64 {
            if i <= n / 2 {
                i as i64
            } else {
                i as i64 - n as i64
            }
        };
        let mut kint = Vec::with_capacity(total);
        let mut kvec = Vec::with_capacity(total);
        let mut k2 = Vec::with_capacity(total);
        let mut keep = Vec::with_capacity(total);
        let mut neg = Vec::with_capacity(total);
        for idx in 0..total {
            let mut rem = idx;
            let mut digits = [0usize; 3];
            for a in (0..g.dim).rev() {
                digits[a] = rem % n;
                rem /= n;
            }
            let mut k = [0i64; 3];
            let mut kv = [0f64; 3];
            let mut nidx = 0usize;
            for a in 0..g.dim {
                k[a] = wrap(digits[a]);
                kv[a] = unit * k[a] as f64;
                nidx = nidx * n + (n - digits[a]) % n;
            }
            kint.push(k);
            kvec.push(kv);
            k2.push(kv.iter().map(|x| x * x).sum());
            keep.push(k.iter().all(|&ka| ka.abs() <= cut));
            neg.push(nidx);
        }
        ModeTable {
            kint,
            kvec,
            k2,
            keep,
            neg,
        }
    }
}

/// Smallest positive Laplace eigenvalue on mean-zero fields, `(2π/L)^2`.
pub fn lambda1(grid: &GridSpec) -> f64 {
    grid.unit().powi(2)
}
