//! Exact dyadic rationals `num / 2^level` and points built from them.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A dyadic rational `num / 2^level` in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dyadic {
    num: i64,
    level: u32,
}

impl Dyadic {
    pub fn new(num: i64, level: u32) -> Self {
        let mut d = Dyadic { num, level };
        if num == 0 {
            d.level = 0;
            return d;
        }
        let tz = num.trailing_zeros().min(level);
        d.num >>= tz;
        d.level -= tz;
        d
    }

    pub fn num(self) -> i64 {
        self.num
    }

    pub fn level(self) -> u32 {
        self.level
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / (2f64).powi(self.level as i32)
    }

    /// Exact decimal expansion, e.g. `0.375`.
    pub fn to_decimal(self) -> String {
        let neg = self.num < 0;
        let mag = self.num.unsigned_abs() as u128;
        let sign = if neg { "-" } else { "" };
        if self.level == 0 {
            return format!("{sign}{mag}");
        }
        let digits = mag * 5u128.pow(self.level);
        let ten = 10u128.pow(self.level);
        let frac = format!("{:0width$}", digits % ten, width = self.level as usize);
        format!("{sign}{}.{}", digits / ten, frac.trim_end_matches('0'))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let l = self.level.max(other.level);
        let a = (self.num as i128) << (l - self.level);
        let b = (other.num as i128) << (l - other.level);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal())
    }
}

/// A point of `[0,1]^d` with exact dyadic coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicPoint(pub Vec<Dyadic>);

impl DyadicPoint {
    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.to_f64()).collect()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Function values at dyadic points, each point evaluated once.
#[derive(Clone, Debug, Default)]
pub struct SampleTable {
    values: HashMap<DyadicPoint, f64>,
}

impl SampleTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Evaluates `f` once at every point (in parallel).
    pub fn evaluate<F>(points: Vec<DyadicPoint>, f: &F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync + ?Sized,
    {
        let values = points
            .into_par_iter()
            .map(|p| {
                let v = f(&p.to_f64());
                (p, v)
            })
            .collect();
        SampleTable { values }
    }

    /// Inserts `value` unless the point is already present; returns the stored value.
    pub fn insert_if_absent(&mut self, p: DyadicPoint, value: f64) -> f64 {
        *self.values.entry(p).or_insert(value)
    }

    pub fn get(&self, p: &DyadicPoint) -> Option<f64> {
        self.values.get(p).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DyadicPoint, &f64)> {
        self.values.iter()
    }
}

impl FromIterator<(DyadicPoint, f64)> for SampleTable {
    fn from_iter<T: IntoIterator<Item = (DyadicPoint, f64)>>(iter: T) -> Self {
        SampleTable {
            values: iter.into_iter().collect(),
        }
    }
}
