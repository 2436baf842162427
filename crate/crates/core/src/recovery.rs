//! The sampling recovery operator `R_Δ(f) = Σ_{k∈Δ} q_k(f)`.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bspline::SplineOrder;
use crate::dyadic::{DyadicPoint, SampleTable};
use crate::error::{Error, Result};
use crate::grids::LevelSet;
use crate::quasi_interp::{level_point_set, max_stencil_width, surplus_from_samples, LevelSurplus, SurplusField};
use crate::tensor::{contract_axis, SparseRows};

const FORMAT: &str = "sparse-qi/reconstruction";
const VERSION: u32 = 1;

/// A reconstruction `R_Δ(f)` stored as its B-spline surpluses.
#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub order: SplineOrder,
    pub delta: LevelSet,
    pub surplus: SurplusField,
    /// Distinct function evaluations actually used.
    pub sample_budget: usize,
    /// `Σ_{k∈Δ} Π_j (2^{k_j} + 1)`.
    pub declared_budget: u128,
}

/// Every distinct sample point the functionals of `delta` read.
pub fn required_points(delta: &LevelSet, r: SplineOrder) -> Vec<DyadicPoint> {
    let mut seen: HashSet<DyadicPoint> = HashSet::new();
    for k in delta.levels() {
        seen.extend(level_point_set(r, k));
    }
    let mut points: Vec<DyadicPoint> = seen.into_iter().collect();
    points.sort();
    points
}

/// Samples `f` at [`required_points`] and builds `R_Δ(f)`.
pub fn build<F>(f: &F, delta: &LevelSet, r: SplineOrder) -> Result<Reconstruction>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    let table = SampleTable::evaluate(required_points(delta, r), f);
    build_from_table(&table, delta, r)
}

/// Builds `R_Δ(f)` from precomputed samples.
pub fn build_from_table(table: &SampleTable, delta: &LevelSet, r: SplineOrder) -> Result<Reconstruction> {
    let levels: Vec<LevelSurplus> = delta
        .levels()
        .par_iter()
        .map(|k| surplus_from_samples(r, k, table))
        .collect::<Result<_>>()?;
    let mut surplus = SurplusField::new(r, delta.dim());
    for l in levels {
        surplus.insert(l);
    }
    let mut used: HashSet<DyadicPoint> = HashSet::new();
    for k in delta.levels() {
        used.extend(level_point_set(r, k));
    }
    Ok(Reconstruction {
        order: r,
        delta: delta.clone(),
        surplus,
        sample_budget: used.len(),
        declared_budget: delta.budget(),
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

#[derive(Serialize, Deserialize)]
struct Dump {
    format: String,
    version: u32,
    order: SplineOrder,
    delta: LevelSet,
    sample_budget: usize,
    declared_budget: u128,
    surplus: SurplusField,
}

impl Reconstruction {
    pub fn dim(&self) -> usize {
        self.delta.dim()
    }

    /// `R_Δ(f)(x)`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        check_point(self.dim(), x)?;
        Ok(self.surplus.eval(x))
    }

    /// [`Reconstruction::evaluate`] at each point, in input order.
    pub fn evaluate_batch(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        points.par_iter().map(|x| self.evaluate(x)).collect()
    }

    /// Values on the tensor lattice `axes[0] × ... × axes[d-1]`, row-major.
    pub fn evaluate_lattice(&self, axes: &[Vec<f64>]) -> Result<Vec<f64>> {
        let d = self.dim();
        if axes.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: axes.len(),
            });
        }
        for axis in axes {
            if let Some(&bad) = axis.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::OutsideDomain(vec![bad]));
            }
        }
        let r = self.order;
        let max_levels = self.delta.max_level_per_dim();
        // basis[i][k]: rows = lattice points of axis i, columns = shifts of J_r(k)
        let basis: Vec<Vec<SparseRows>> = axes
            .iter()
            .zip(&max_levels)
            .map(|(xs, &m)| (0..=m).map(|k| basis_rows(r, k, xs)).collect())
            .collect();
        let out_shape: Vec<usize> = axes.iter().map(|a| a.len()).collect();
        let mut out = vec![0.0; out_shape.iter().product()];
        for level in self.surplus.levels() {
            let mut shape = level.shape();
            let mut data = level.values.clone();
            let mut remaining: Vec<usize> = (0..d).collect();
            while !remaining.is_empty() {
                // contract the axis that grows the tensor least
                let (pos, &axis) = remaining
                    .iter()
                    .enumerate()
                    .min_by(|a, b| {
                        let ra = out_shape[*a.1] as f64 / shape[*a.1] as f64;
                        let rb = out_shape[*b.1] as f64 / shape[*b.1] as f64;
                        ra.total_cmp(&rb)
                    })
                    .expect("nonempty");
                remaining.remove(pos);
                let rows = &basis[axis][level.level[axis] as usize];
                data = contract_axis(&data, &shape, axis, rows);
                shape[axis] = out_shape[axis];
            }
            for (o, v) in out.iter_mut().zip(&data) {
                *o += v;
            }
        }
        Ok(out)
    }

    /// Largest number of samples entering one coefficient functional.
    pub fn max_stencil_width(&self) -> usize {
        let d = self.dim();
        let w = max_stencil_width(self.order, self.delta.max_level());
        w.pow(d as u32)
    }

    pub fn to_json(&self) -> String {
        let dump = Dump {
            format: FORMAT.into(),
            version: VERSION,
            order: self.order,
            delta: self.delta.clone(),
            sample_budget: self.sample_budget,
            declared_budget: self.declared_budget,
            surplus: self.surplus.clone(),
        };
        serde_json::to_string(&dump).expect("reconstruction serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: Dump = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if dump.format != FORMAT || dump.version != VERSION {
            return Err(Error::Parse(format!(
                "unsupported dump {} version {}",
                dump.format, dump.version
            )));
        }
        let mut surplus = dump.surplus;
        surplus.reindex();
        for k in dump.delta.levels() {
            if surplus.level(k).is_none() {
                return Err(Error::UnknownLevel(k.clone()));
            }
        }
        Ok(Reconstruction {
            order: dump.order,
            delta: dump.delta,
            surplus,
            sample_budget: dump.sample_budget,
            declared_budget: dump.declared_budget,
        })
    }
}

/// Values `M^(r)_{k,s}(x)` of the level-`k` splines at the points `xs`.
pub(crate) fn basis_rows(r: SplineOrder, k: u32, xs: &[f64]) -> SparseRows {
    let range = r.active_shifts(k);
    let mut rows = SparseRows::new();
    for &x in xs {
        let near = r.shifts_at(k, x);
        rows.push_row((near.lo..=near.hi).filter_map(|s| {
            let v = r.eval_dilated_1d(k, s, x);
            (v != 0.0).then(|| ((s - range.lo) as u32, v))
        }));
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::{delta_hybrid, SmoothnessSpec, TripleClass};
    use crate::quasi_interp::apply_q;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn o(r: u32) -> SplineOrder {
        SplineOrder::new(r).unwrap()
    }

    fn smooth(x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, v)| ((i + 1) as f64 * v).sin())
            .product::<f64>()
            + (x[0] - x[x.len() - 1]).exp()
    }

    fn hybrid_set(d: usize, xi: f64) -> LevelSet {
        let spec = SmoothnessSpec::hybrid(2.0, 1.0, 2.0, o(4), d, 1.5, -0.5);
        delta_hybrid(xi, &spec, TripleClass::A).unwrap()
    }

    #[test]
    fn reproduces_polynomials() {
        for r in 1..=4 {
            let deg = r as i32 - 1;
            let f = move |x: &[f64]| 1.0 + x[0].powi(deg) * x[1].powi(deg) - 2.0 * x[1].powi(deg);
            let rec = build(&f, &hybrid_set(2, 3.0), o(r)).unwrap();
            for x in [[0.1, 0.2], [0.9, 0.33], [1.0, 1.0], [0.0, 0.5]] {
                assert_abs_diff_eq!(rec.evaluate(&x).unwrap(), f(&x), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn full_box_matches_level_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for r in 1..=4 {
            let rec = build(&smooth, &LevelSet::full_box(&[3, 2]), o(r)).unwrap();
            for _ in 0..20 {
                let x = [rng.random::<f64>(), rng.random::<f64>()];
                let direct = apply_q(&smooth, o(r), &[3, 2], &x).unwrap();
                assert_abs_diff_eq!(rec.evaluate(&x).unwrap(), direct, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn zero_function() {
        let rec = build(&|_x: &[f64]| 0.0, &hybrid_set(2, 4.0), o(4)).unwrap();
        assert!(rec.surplus.levels().all(|l| l.values.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn hat_example() {
        let delta = LevelSet::from_levels(1, vec![vec![0], vec![1]]).unwrap();
        let rec = build(&|x: &[f64]| x[0] * x[0], &delta, o(2)).unwrap();
        assert_abs_diff_eq!(rec.evaluate(&[0.25]).unwrap(), 0.125, epsilon = 1e-15);
        assert_eq!(rec.sample_budget, 3);
        assert_eq!(rec.declared_budget, 5);
        assert!(matches!(rec.evaluate(&[1.25]), Err(Error::OutsideDomain(_))));
    }

    #[test]
    fn interpolates_on_full_box_for_hats() {
        let rec = build(&smooth, &LevelSet::full_box(&[3, 3]), o(2)).unwrap();
        for i in 0..=8 {
            for j in 0..=8 {
                let x = [i as f64 / 8.0, j as f64 / 8.0];
                assert_abs_diff_eq!(rec.evaluate(&x).unwrap(), smooth(&x), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn constants() {
        for r in 1..=4 {
            let rec = build(&|_x: &[f64]| 2.5, &hybrid_set(3, 2.0), o(r)).unwrap();
            assert_abs_diff_eq!(rec.evaluate(&[0.3, 0.7, 1.0]).unwrap(), 2.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn batch_matches_pointwise() {
        let rec = build(&smooth, &hybrid_set(2, 5.0), o(3)).unwrap();
        assert!(rec.evaluate_batch(&[]).unwrap().is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<Vec<f64>> = (0..1000).map(|_| vec![rng.random(), rng.random()]).collect();
        let batch = rec.evaluate_batch(&pts).unwrap();
        for (p, v) in pts.iter().zip(&batch) {
            assert_eq!(rec.evaluate(p).unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn lattice_matches_pointwise() {
        for r in 1..=4 {
            let rec = build(&smooth, &hybrid_set(2, 4.0), o(r)).unwrap();
            let axes = vec![vec![0.0, 0.1, 0.5, 0.77, 1.0], vec![0.0, 0.3, 0.999, 1.0]];
            let vals = rec.evaluate_lattice(&axes).unwrap();
            for (i, &x) in axes[0].iter().enumerate() {
                for (j, &y) in axes[1].iter().enumerate() {
                    assert_abs_diff_eq!(vals[i * 4 + j], rec.evaluate(&[x, y]).unwrap(), epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn linear_and_nested() {
        let g = |x: &[f64]| (x[0] * x[1] * 5.0).cos();
        let small = hybrid_set(2, 3.0);
        let big = hybrid_set(2, 5.0);
        let rf = build(&smooth, &big, o(4)).unwrap();
        let rg = build(&g, &big, o(4)).unwrap();
        let combo = build(&|x: &[f64]| 2.0 * smooth(x) - 3.0 * g(x), &big, o(4)).unwrap();
        for l in combo.surplus.levels() {
            let a = rf.surplus.level(&l.level).unwrap();
            let b = rg.surplus.level(&l.level).unwrap();
            for ((c, x), y) in l.values.iter().zip(&a.values).zip(&b.values) {
                assert_abs_diff_eq!(*c, 2.0 * x - 3.0 * y, epsilon = 1e-12);
            }
        }
        let rs = build(&smooth, &small, o(4)).unwrap();
        for l in rs.surplus.levels() {
            assert_eq!(l, rf.surplus.level(&l.level).unwrap());
        }
    }

    #[test]
    fn json_round_trip() {
        let rec = build(&smooth, &hybrid_set(2, 3.0), o(3)).unwrap();
        let back = Reconstruction::from_json(&rec.to_json()).unwrap();
        assert_eq!(back, rec);
        assert_eq!(back.evaluate(&[0.2, 0.4]).unwrap(), rec.evaluate(&[0.2, 0.4]).unwrap());
        assert!(Reconstruction::from_json("{}").is_err());
    }

    #[test]
    fn missing_samples_are_reported() {
        let table = SampleTable::new();
        let err = build_from_table(&table, &hybrid_set(1, 1.0), o(2)).unwrap_err();
        assert!(matches!(err, Error::MissingSample(_)));
    }

    #[test]
    fn budgets_are_logged() {
        let delta = hybrid_set(2, 6.0);
        let rec = build(&smooth, &delta, o(4)).unwrap();
        assert_eq!(rec.declared_budget, delta.budget());
        assert!(rec.sample_budget as u128 <= rec.declared_budget + 16 * delta.len() as u128);
        assert!(rec.max_stencil_width() >= 1);
    }
}
