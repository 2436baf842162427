//! Cubature induced by the recovery operator: `I_n(f) = ∫ R_Δ(f)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::bspline::SplineOrder;
use crate::dyadic::{DyadicPoint, SampleTable};
use crate::error::{Error, Result};
use crate::grids::LevelSet;
use crate::quasi_interp::{c_terms, level_stencil};
use crate::recovery::Reconstruction;
use crate::tensor::{for_each_index, weighted_box_sum};

/// Weights `λ` at the distinct sample points of a level set.
#[derive(Clone, Debug, PartialEq)]
pub struct CubatureRule {
    pub weights: BTreeMap<DyadicPoint, f64>,
    pub delta: LevelSet,
    pub r: SplineOrder,
    /// `Σ_{k∈Δ} Π_j (2^{k_j} + 1)`.
    pub budget: u128,
}

/// `∫_0^1 M^(r)_{k,s}` for every `s ∈ J_r(k)`.
fn spline_integrals(r: SplineOrder, k: u32) -> Vec<f64> {
    r.active_shifts(k).iter().map(|s| r.integral_1d(k, s)).collect()
}

/// `Σ_{k,s} c_{k,s} ∫ M^(r)_{k,s}` over the stored surpluses.
pub fn integrate_reconstruction(rec: &Reconstruction) -> f64 {
    let r = rec.order;
    let mut total = 0.0;
    for level in rec.surplus.levels() {
        let factors: Vec<Vec<f64>> = level.level.iter().map(|&k| spline_integrals(r, k)).collect();
        let shape = level.shape();
        total += weighted_box_sum(&level.values, &shape, &vec![0; shape.len()], &factors);
    }
    total
}

/// Univariate node weights of level `k`: `v_j = Σ_s w_{s,j} ∫ M_{k,s}` where
/// `c_{k,s} = Σ_j w_{s,j} f(x_j)`; combined exactly per shift before rounding.
fn node_weights(r: SplineOrder, k: u32) -> Vec<f64> {
    let st = level_stencil(r, k);
    let mut v = vec![0.0; st.nodes.len()];
    for s in st.c_shifts.iter() {
        let integral = r.integral_1d(k, s);
        if integral == 0.0 {
            continue;
        }
        for (j, w) in c_terms(r, k, s) {
            let pos = st.nodes.binary_search(&j).expect("node referenced by a functional");
            v[pos] += w.to_f64().expect("finite rational weight") * integral;
        }
    }
    v
}

fn level_contributions(r: SplineOrder, k: &[u32]) -> Vec<(DyadicPoint, f64)> {
    let axes: Vec<_> = k.iter().map(|&ki| level_stencil(r, ki).node_points()).collect();
    let weights: Vec<Vec<f64>> = k.iter().map(|&ki| node_weights(r, ki)).collect();
    let shape: Vec<usize> = axes.iter().map(|a| a.len()).collect();
    let mut out = Vec::with_capacity(shape.iter().product());
    for_each_index(&shape, |idx| {
        let w: f64 = idx.iter().zip(&weights).map(|(&i, v)| v[i]).product();
        out.push((DyadicPoint(idx.iter().zip(&axes).map(|(&i, a)| a[i]).collect()), w));
    });
    out
}

/// Pushes `f ↦ ∫ R_Δ(f)` down to one weight per distinct sample point.
pub fn assemble_weights(delta: &LevelSet, r: SplineOrder) -> CubatureRule {
    let parts: Vec<Vec<(DyadicPoint, f64)>> = delta.levels().par_iter().map(|k| level_contributions(r, k)).collect();
    let mut weights = BTreeMap::new();
    for part in parts {
        for (p, w) in part {
            *weights.entry(p).or_insert(0.0) += w;
        }
    }
    CubatureRule {
        weights,
        delta: delta.clone(),
        r,
        budget: delta.budget(),
    }
}

/// `Σ λ_j f(x_j)`.
pub fn apply_rule<F>(rule: &CubatureRule, f: &F) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    let terms: Vec<(&DyadicPoint, &f64)> = rule.weights.iter().collect();
    let values: Vec<f64> = terms.par_iter().map(|(p, &w)| w * f(&p.to_f64())).collect();
    values.iter().sum()
}

impl CubatureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.delta.dim()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.values().sum()
    }

    /// Rule applied to tabulated samples.
    pub fn apply_table(&self, table: &SampleTable) -> Result<f64> {
        let mut total = 0.0;
        for (p, &w) in &self.weights {
            let v = table.get(p).ok_or_else(|| Error::MissingSample(p.to_f64()))?;
            total += w * v;
        }
        Ok(total)
    }

    /// CSV `x_1,...,x_d,weight` with exact decimal coordinates.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.dim()).map(|i| format!("x_{i}")).collect();
        let _ = writeln!(out, "{},weight", header.join(","));
        for (p, w) in &self.weights {
            let coords: Vec<String> = p.0.iter().map(|c| c.to_decimal()).collect();
            let _ = writeln!(out, "{},{:e}", coords.join(","), w);
        }
        out
    }
}
