//! Tensorized coefficient functionals: level details `q_k` and level operators `Q_k`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::stencil::{level_stencil, LevelStencil};
use crate::bspline::{ShiftRange, SplineOrder};
use crate::dyadic::{DyadicPoint, SampleTable};
use crate::error::{Error, Result};
use crate::tensor::{contract_axis, for_each_index, weighted_box_sum, SparseRows};

/// Coefficients `c^(r)_{k,s}` of one level `k`, dense over the box `J_r^d(k)`
/// in row-major order (dimension 1 slowest).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSurplus {
    pub level: Vec<u32>,
    pub shifts: Vec<ShiftRange>,
    pub values: Vec<f64>,
}

impl LevelSurplus {
    pub fn shape(&self) -> Vec<usize> {
        self.shifts.iter().map(|r| r.len()).collect()
    }

    pub fn get(&self, s: &[i64]) -> Option<f64> {
        if s.len() != self.shifts.len() {
            return None;
        }
        let mut flat = 0usize;
        for (range, &si) in self.shifts.iter().zip(s) {
            if !range.contains(si) {
                return None;
            }
            flat = flat * range.len() + range.offset(si);
        }
        Some(self.values[flat])
    }

    /// All `(s, c_{k,s})` pairs in row-major order.
    pub fn entries(&self) -> Vec<(Vec<i64>, f64)> {
        let mut out = Vec::with_capacity(self.values.len());
        let mut flat = 0;
        for_each_index(&self.shape(), |idx| {
            let s = idx.iter().zip(&self.shifts).map(|(&i, r)| r.lo + i as i64).collect();
            out.push((s, self.values[flat]));
            flat += 1;
        });
        out
    }

    /// Value of `q_k(f)(x) = Σ_s c_{k,s} M^(r)_{k,s}(x)`, touching only the
    /// shifts whose splines can be nonzero at `x`.
    pub fn eval(&self, r: SplineOrder, x: &[f64]) -> f64 {
        let mut starts = Vec::with_capacity(x.len());
        let mut factors = Vec::with_capacity(x.len());
        for ((&k, range), &xi) in self.level.iter().zip(&self.shifts).zip(x) {
            let near = r.shifts_at(k, xi);
            let lo = near.lo.max(range.lo);
            let hi = near.hi.min(range.hi);
            if hi < lo {
                return 0.0;
            }
            starts.push((lo - range.lo) as usize);
            factors.push((lo..=hi).map(|s| r.eval_dilated_1d(k, s, xi)).collect());
        }
        weighted_box_sum(&self.values, &self.shape(), &starts, &factors)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Sparse map `(k, s) -> c^(r)_{k,s}(f)` stored level by level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurplusField {
    pub order: SplineOrder,
    pub dim: usize,
    levels: Vec<LevelSurplus>,
    #[serde(skip)]
    index: BTreeMap<Vec<u32>, usize>,
}

impl SurplusField {
    pub fn new(order: SplineOrder, dim: usize) -> Self {
        SurplusField {
            order,
            dim,
            levels: Vec::new(),
            index: BTreeMap::new(),
        }
    }

    /// Adds (or replaces) the coefficients of one level.
    pub fn insert(&mut self, level: LevelSurplus) {
        if let Some(&i) = self.index.get(&level.level) {
            self.levels[i] = level;
        } else {
            self.index.insert(level.level.clone(), self.levels.len());
            self.levels.push(level);
        }
    }

    pub fn level(&self, k: &[u32]) -> Option<&LevelSurplus> {
        self.index.get(k).map(|&i| &self.levels[i])
    }

    pub fn get(&self, k: &[u32], s: &[i64]) -> Option<f64> {
        self.level(k).and_then(|l| l.get(s))
    }

    pub fn levels(&self) -> impl Iterator<Item = &LevelSurplus> {
        self.levels.iter()
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn num_coefficients(&self) -> usize {
        self.levels.iter().map(|l| l.values.len()).sum()
    }

    /// Rebuilds the level index, e.g. after deserialization.
    pub fn reindex(&mut self) {
        self.index = self
            .levels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.level.clone(), i))
            .collect();
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.levels.iter().map(|l| l.eval(self.order, x)).sum()
    }
}

fn stencils(r: SplineOrder, k: &[u32]) -> Vec<Arc<LevelStencil>> {
    k.iter().map(|&ki| level_stencil(r, ki)).collect()
}

/// Exact sample points used by the functionals of level `k`, per dimension.
pub fn level_points(r: SplineOrder, k: &[u32]) -> Vec<Vec<crate::dyadic::Dyadic>> {
    stencils(r, k).iter().map(|s| s.node_points()).collect()
}

/// Every point of the tensor node grid of level `k`.
pub fn level_point_set(r: SplineOrder, k: &[u32]) -> Vec<DyadicPoint> {
    let axes = level_points(r, k);
    let shape: Vec<usize> = axes.iter().map(|a| a.len()).collect();
    let mut out = Vec::with_capacity(shape.iter().product());
    for_each_index(&shape, |idx| {
        out.push(DyadicPoint(idx.iter().zip(&axes).map(|(&i, a)| a[i]).collect()));
    });
    out
}

fn gather(r: SplineOrder, k: &[u32], table: &SampleTable) -> Result<(Vec<f64>, Vec<usize>, Vec<Arc<LevelStencil>>)> {
    let st = stencils(r, k);
    let axes: Vec<_> = st.iter().map(|s| s.node_points()).collect();
    let shape: Vec<usize> = axes.iter().map(|a| a.len()).collect();
    let mut data = Vec::with_capacity(shape.iter().product());
    let mut missing = None;
    let mut point = DyadicPoint(Vec::with_capacity(k.len()));
    for_each_index(&shape, |idx| {
        point.0.clear();
        point.0.extend(idx.iter().zip(&axes).map(|(&i, a)| a[i]));
        match table.get(&point) {
            Some(v) => data.push(v),
            None => {
                missing.get_or_insert_with(|| point.to_f64());
                data.push(f64::NAN);
            }
        }
    });
    if let Some(p) = missing {
        return Err(Error::MissingSample(p));
    }
    Ok((data, shape, st))
}

/// `c^(r)_{k,s}` for all `s ∈ J_r^d(k)` from tabulated samples; the univariate
/// functional of dimension `d` is applied first, dimension 1 last.
pub fn surplus_from_samples(r: SplineOrder, k: &[u32], table: &SampleTable) -> Result<LevelSurplus> {
    let (mut data, mut shape, st) = gather(r, k, table)?;
    for axis in (0..k.len()).rev() {
        data = contract_axis(&data, &shape, axis, &st[axis].c_rows);
        shape[axis] = st[axis].c_shifts.len();
    }
    Ok(LevelSurplus {
        level: k.to_vec(),
        shifts: st.iter().map(|s| s.c_shifts).collect(),
        values: data,
    })
}

fn sample<F>(f: &F, r: SplineOrder, k: &[u32]) -> SampleTable
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    SampleTable::evaluate(level_point_set(r, k), f)
}

/// All coefficients of `q_k(f)`.
pub fn q_level<F>(f: &F, r: SplineOrder, k: &[u32]) -> Result<LevelSurplus>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    surplus_from_samples(r, k, &sample(f, r, k))
}

/// Coefficients `a_{k,s}`, `s ∈ J^d(k)`, of the level operator `Q_k(f)`.
pub fn q_operator_coefficients(r: SplineOrder, k: &[u32], table: &SampleTable) -> Result<LevelSurplus> {
    let (mut data, mut shape, st) = gather(r, k, table)?;
    for axis in (0..k.len()).rev() {
        data = contract_axis(&data, &shape, axis, &st[axis].a_rows);
        shape[axis] = st[axis].a_shifts.len();
    }
    Ok(LevelSurplus {
        level: k.to_vec(),
        shifts: st.iter().map(|s| s.a_shifts).collect(),
        values: data,
    })
}

fn check_point(d: usize, x: &[f64]) -> Result<()> {
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::OutsideDomain(x.to_vec()));
    }
    Ok(())
}

/// `Q_k(f)(x) = Σ_{s ∈ J^d(k)} a_{k,s}(f) Π_i M(2^{k_i} x_i - s_i)`.
pub fn apply_q<F>(f: &F, r: SplineOrder, k: &[u32], x: &[f64]) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    check_point(k.len(), x)?;
    let a = q_operator_coefficients(r, k, &sample(f, r, k))?;
    let mut starts = Vec::new();
    let mut factors = Vec::new();
    for ((&ki, range), &xi) in k.iter().zip(&a.shifts).zip(x) {
        let t = xi * (2f64).powi(ki as i32);
        let half = r.get() as f64 / 2.0;
        let lo = ((t - half).floor() as i64).max(range.lo);
        let hi = ((t + half).ceil() as i64).min(range.hi);
        starts.push((lo - range.lo) as usize);
        factors.push((lo..=hi).map(|s| r.eval(t - s as f64)).collect::<Vec<f64>>());
    }
    Ok(weighted_box_sum(&a.values, &a.shape(), &starts, &factors))
}

/// `Q_k(f)` on the tensor lattice `axes[0] × ... × axes[d-1]`, row-major.
pub fn apply_q_lattice<F>(f: &F, r: SplineOrder, k: &[u32], axes: &[Vec<f64>]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    if axes.len() != k.len() {
        return Err(Error::DimensionMismatch {
            expected: k.len(),
            got: axes.len(),
        });
    }
    if let Some(&bad) = axes.iter().flatten().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::OutsideDomain(vec![bad]));
    }
    let a = q_operator_coefficients(r, k, &sample(f, r, k))?;
    let mut data = a.values;
    let mut shape: Vec<usize> = a.shifts.iter().map(|s| s.len()).collect();
    for axis in (0..k.len()).rev() {
        let range = a.shifts[axis];
        let mut rows = SparseRows::new();
        for &x in &axes[axis] {
            let t = x * (2f64).powi(k[axis] as i32);
            rows.push_row(range.iter().filter_map(|s| {
                let v = r.eval(t - s as f64);
                (v != 0.0).then(|| ((s - range.lo) as u32, v))
            }));
        }
        data = contract_axis(&data, &shape, axis, &rows);
        shape[axis] = axes[axis].len();
    }
    Ok(data)
}

/// `Σ_{k' <= k} q_{k'}(f)(x)`, the telescoped form of `Q_k(f)(x)`.
pub fn apply_q_telescoping<F>(f: &F, r: SplineOrder, k: &[u32], x: &[f64]) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    check_point(k.len(), x)?;
    let box_shape: Vec<usize> = k.iter().map(|&ki| ki as usize + 1).collect();
    let mut levels = Vec::new();
    for_each_index(&box_shape, |idx| {
        levels.push(idx.iter().map(|&i| i as u32).collect::<Vec<_>>())
    });
    let mut points: Vec<DyadicPoint> = levels.iter().flat_map(|l| level_point_set(r, l)).collect();
    points.sort();
    points.dedup();
    let table = SampleTable::evaluate(points, f);
    let mut total = 0.0;
    for l in &levels {
        total += surplus_from_samples(r, l, &table)?.eval(r, x);
    }
    Ok(total)
}
