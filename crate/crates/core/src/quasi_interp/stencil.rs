//! Univariate coefficient functionals as exact combinations of dyadic samples.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};

use super::extension::{extension_stencil, stencil_level};
use super::mask::mask_for_order;
use crate::bspline::{ShiftRange, SplineOrder};
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::tensor::SparseRows;

/// Sparse combination `Σ w_j f(j 2^-L)` over node indices `j` at level `L`.
pub type Terms = Vec<(i64, Rational64)>;

fn binom(n: usize, k: usize) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i as i64 + 1))
}

fn collect(map: BTreeMap<i64, Rational64>) -> Terms {
    map.into_iter().filter(|(_, w)| !w.is_zero()).collect()
}

fn add_to(map: &mut BTreeMap<i64, Rational64>, terms: &Terms, shift_bits: u32, scale: Rational64) {
    for &(j, w) in terms {
        *map.entry(j << shift_bits).or_insert_with(Rational64::zero) += scale * w;
    }
}

/// `a_{k,s}` in node indices at `stencil_level(r, k)`.
pub fn a_terms(r: SplineOrder, k: u32, s: i64) -> Terms {
    let level = stencil_level(r, k);
    let up = level - k;
    let n = 1i64 << k;
    let mut map = BTreeMap::new();
    for (j, lam) in mask_for_order(r).taps() {
        let t = s - j;
        if (0..=n).contains(&t) {
            *map.entry(t << up).or_insert_with(Rational64::zero) += lam;
        } else {
            for (node, w) in extension_stencil(r, level, t << up) {
                *map.entry(node).or_insert_with(Rational64::zero) += lam * w;
            }
        }
    }
    collect(map)
}

/// `c^(r)_{k,s}` in node indices at `stencil_level(r, k)`; `s` must lie in `J_r(k)`.
pub fn c_terms(r: SplineOrder, k: u32, s: i64) -> Terms {
    let rr = r.get();
    let half_r = rr as i64 / 2;
    let level = stencil_level(r, k);
    let mut map = BTreeMap::new();
    let refine = |map: &mut BTreeMap<i64, Rational64>, j: usize, m: i64| {
        let prev = k - 1;
        if r.operator_shifts(prev).contains(m) {
            let coef = Rational64::new(binom(rr, j), 1i64 << (rr - 1));
            let bits = level - stencil_level(r, prev);
            add_to(map, &a_terms(r, prev, m), bits, -coef);
        }
    };
    if r.is_even() {
        add_to(&mut map, &a_terms(r, k, s), 0, Rational64::from_integer(1));
        if k > 0 {
            for j in 0..=rr {
                let num = s + half_r - j as i64;
                if num.rem_euclid(2) == 0 {
                    refine(&mut map, j, num.div_euclid(2));
                }
            }
        }
    } else if s.rem_euclid(2) == 0 {
        add_to(
            &mut map,
            &a_terms(r, k, s.div_euclid(2)),
            0,
            Rational64::from_integer(1),
        );
    } else if k > 0 {
        for j in 0..=rr {
            let num = s + rr as i64 - 2 * j as i64;
            if num.rem_euclid(4) == 0 {
                refine(&mut map, j, num.div_euclid(4));
            }
        }
    }
    collect(map)
}

/// Coefficient functionals of one univariate level, with sample nodes and
/// floating-point rows ready for tensor contraction.
#[derive(Debug)]
pub struct LevelStencil {
    pub order: SplineOrder,
    pub level: u32,
    /// Level of the dyadic grid the node indices refer to.
    pub node_level: u32,
    /// Sorted node indices (at `node_level`) referenced by any functional.
    pub nodes: Vec<i64>,
    /// `J(k)` and the rows of `a_{k,s}`, columns are positions in `nodes`.
    pub a_shifts: ShiftRange,
    pub a_rows: SparseRows,
    /// `J_r(k)` and the rows of `c^(r)_{k,s}`.
    pub c_shifts: ShiftRange,
    pub c_rows: SparseRows,
}

impl LevelStencil {
    fn build(r: SplineOrder, k: u32) -> Self {
        let node_level = stencil_level(r, k);
        let a_shifts = r.operator_shifts(k);
        let c_shifts = r.active_shifts(k);
        let a: Vec<Terms> = a_shifts.iter().map(|s| a_terms(r, k, s)).collect();
        let c: Vec<Terms> = c_shifts.iter().map(|s| c_terms(r, k, s)).collect();
        let nodes: Vec<i64> = if node_level == k {
            (0..=1i64 << k).collect()
        } else {
            let mut v: Vec<i64> = a.iter().chain(&c).flatten().map(|&(j, _)| j).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let to_rows = |terms: &[Terms]| {
            let mut rows = SparseRows::new();
            for t in terms {
                rows.push_row(t.iter().map(|&(j, w)| {
                    let pos = nodes.binary_search(&j).expect("node referenced by a functional");
                    (pos as u32, w.to_f64().expect("finite rational weight"))
                }));
            }
            rows
        };
        let a_rows = to_rows(&a);
        let c_rows = to_rows(&c);
        LevelStencil {
            order: r,
            level: k,
            node_level,
            nodes,
            a_shifts,
            a_rows,
            c_shifts,
            c_rows,
        }
    }

    pub fn node_points(&self) -> Vec<Dyadic> {
        self.nodes.iter().map(|&j| Dyadic::new(j, self.node_level)).collect()
    }

    /// Largest number of samples entering a single `c` functional.
    pub fn max_stencil_width(&self) -> usize {
        self.c_rows.max_row_len()
    }
}

type Cache = Mutex<HashMap<(usize, u32), Arc<LevelStencil>>>;

/// Shared, lazily built stencil of level `k` for order `r`.
pub fn level_stencil(r: SplineOrder, k: u32) -> Arc<LevelStencil> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(s) = cache.lock().expect("stencil cache poisoned").get(&(r.get(), k)) {
        return s.clone();
    }
    let built = Arc::new(LevelStencil::build(r, k));
    cache
        .lock()
        .expect("stencil cache poisoned")
        .entry((r.get(), k))
        .or_insert(built)
        .clone()
}

/// Maximum number of samples entering any `c^(r)_{k,s}` with `k <= max_level`.
pub fn max_stencil_width(r: SplineOrder, max_level: u32) -> usize {
    (0..=max_level)
        .map(|k| level_stencil(r, k).max_stencil_width())
        .max()
        .unwrap_or(0)
}

fn apply_terms<F: Fn(f64) -> f64 + ?Sized>(f: &F, level: u32, terms: &Terms) -> f64 {
    terms
        .iter()
        .map(|&(j, w)| w.to_f64().unwrap_or(f64::NAN) * f(Dyadic::new(j, level).to_f64()))
        .sum()
}

/// `c^(r)_{k,s}(f)` for even `r`.
pub fn c_coeff_even<F: Fn(f64) -> f64 + ?Sized>(f: &F, r: SplineOrder, k: u32, s: i64) -> Result<f64> {
    if !r.is_even() {
        return Err(Error::ParityMismatch {
            order: r.get(),
            actual: "odd",
            expected: "an even",
        });
    }
    check_shift(r, k, s)?;
    Ok(apply_terms(f, stencil_level(r, k), &c_terms(r, k, s)))
}

/// `c^(r)_{k,s}(f)` for odd `r`, `s` in the half-shift index set `J_r(k)`.
pub fn c_coeff_odd<F: Fn(f64) -> f64 + ?Sized>(f: &F, r: SplineOrder, k: u32, s: i64) -> Result<f64> {
    if r.is_even() {
        return Err(Error::ParityMismatch {
            order: r.get(),
            actual: "even",
            expected: "an odd",
        });
    }
    check_shift(r, k, s)?;
    Ok(apply_terms(f, stencil_level(r, k), &c_terms(r, k, s)))
}

fn check_shift(r: SplineOrder, k: u32, s: i64) -> Result<()> {
    let range = r.active_shifts(k);
    if range.contains(s) {
        Ok(())
    } else {
        Err(Error::InactiveSplineIndex {
            level: k,
            shift: s,
            lo: range.lo,
            hi: range.hi,
        })
    }
}
