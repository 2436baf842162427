//! Coefficient-based quasi-norms: the discrete `B_3` diagnostic and the
//! energy-norm surrogate.

use crate::error::{Error, Result};
use crate::grids::{LevelSet, SmoothnessKind, SmoothnessSpec};
use crate::quasi_interp::LevelSurplus;
use crate::recovery::{build, Reconstruction};

/// `‖v‖_p`, the maximum for `p = ∞`.
pub fn lp_norm(values: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else {
        values.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// `2^{-|k|_1/p} ‖{c_{k,s}}_s‖_p`.
pub fn level_norm(level: &LevelSurplus, p: f64) -> f64 {
    let k1: u32 = level.level.iter().sum();
    (2f64).powf(-(k1 as f64) / p) * lp_norm(&level.values, p)
}

/// `log_2` of the smoothness weight `1/Ω(2^{-k})` of `spec`.
pub fn smoothness_exponent(spec: &SmoothnessSpec, k: &[u32]) -> f64 {
    let k1: f64 = k.iter().map(|&v| v as f64).sum();
    let kinf = k.iter().copied().max().unwrap_or(0) as f64;
    match &spec.kind {
        SmoothnessKind::Mixed { a } => a.iter().zip(k).map(|(ai, &ki)| ai * ki as f64).sum(),
        SmoothnessKind::Hybrid { alpha, beta } => alpha * k1 + beta * kinf,
    }
}

/// `(Σ_k x_k^θ)^{1/θ}`, the maximum for `θ = ∞`.
fn theta_sum(terms: impl Iterator<Item = f64>, theta: f64) -> f64 {
    if theta.is_infinite() {
        terms.fold(0.0, f64::max)
    } else {
        terms.map(|t| t.powf(theta)).sum::<f64>().powf(1.0 / theta)
    }
}

/// Discrete `B_3` quasi-norm of the stored surpluses with `|k|_∞ <= truncation`.
pub fn besov_quasinorm_b3(rec: &Reconstruction, spec: &SmoothnessSpec, truncation: u32) -> f64 {
    let terms = rec
        .surplus
        .levels()
        .filter(|l| l.level.iter().all(|&k| k <= truncation))
        .map(|l| (2f64).powf(smoothness_exponent(spec, &l.level)) * level_norm(l, spec.p));
    theta_sum(terms, spec.theta)
}

/// Energy surrogate `(Σ_k (2^{γ|k|_∞} 2^{-|k|_1/q} ‖c_k(f) - c_k(R)‖_q)^τ)^{1/τ}`
/// over the levels of a finer reconstruction `reference` of the same function.
pub fn energy_surrogate_from(reference: &Reconstruction, rec: &Reconstruction, spec: &SmoothnessSpec) -> Result<f64> {
    let gamma = spec
        .gamma
        .ok_or_else(|| Error::InvalidSpec("energy surrogate needs gamma".into()))?;
    if !(gamma >= 0.0) {
        return Err(Error::InvalidSpec(format!("gamma must be nonnegative, got {gamma}")));
    }
    if reference.order != rec.order || reference.dim() != rec.dim() {
        return Err(Error::InvalidSpec(
            "reference uses a different order or dimension".into(),
        ));
    }
    if !rec.delta.is_subset(&reference.delta) || reference.delta.len() <= rec.delta.len() {
        return Err(Error::ReferenceTooSmall);
    }
    let tau = spec.tau.unwrap_or(spec.q);
    let terms = reference.surplus.levels().map(|l| {
        let kinf = l.level.iter().copied().max().unwrap_or(0);
        let weight = (2f64).powf(gamma * kinf as f64);
        let residual = match rec.surplus.level(&l.level) {
            Some(own) => LevelSurplus {
                level: l.level.clone(),
                shifts: l.shifts.clone(),
                values: l.values.iter().zip(&own.values).map(|(a, b)| a - b).collect(),
            },
            None => l.clone(),
        };
        weight * level_norm(&residual, spec.q)
    });
    Ok(theta_sum(terms, tau))
}

/// [`energy_surrogate_from`] with the reference built by sampling `f` on `reference`.
pub fn energy_error_surrogate<F>(
    f: &F,
    rec: &Reconstruction,
    spec: &SmoothnessSpec,
    reference: &LevelSet,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    if !rec.delta.is_subset(reference) || reference.len() <= rec.delta.len() {
        return Err(Error::ReferenceTooSmall);
    }
    let fine = build(f, reference, rec.order)?;
    energy_surrogate_from(&fine, rec, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bspline::SplineOrder;
    use crate::recovery::build;
    use approx::assert_abs_diff_eq;

    fn o(r: u32) -> SplineOrder {
        SplineOrder::new(r).unwrap()
    }

    fn spec() -> SmoothnessSpec {
        SmoothnessSpec::hybrid(2.0, 2.0, 2.0, o(4), 2, 2.0, 0.0).with_gamma(1.0, 2.0)
    }

    #[test]
    fn polynomials_only_touch_level_zero() {
        let f = |x: &[f64]| 1.0 + x[0] * x[1].powi(3);
        let rec = build(&f, &LevelSet::full_box(&[3, 3]), o(4)).unwrap();
        let s = SmoothnessSpec::mixed(2.0, 2.0, 2.0, o(4), vec![1.0, 1.5]);
        let b = besov_quasinorm_b3(&rec, &s, 3);
        let zero = level_norm(rec.surplus.level(&[0, 0]).unwrap(), 2.0);
        assert_abs_diff_eq!(b, zero, epsilon = 1e-9);
    }

    #[test]
    fn scales_linearly_and_single_level() {
        let f = |x: &[f64]| (x[0] - 0.5).abs().powf(1.5) * (x[1] * 4.0).cos();
        let s = SmoothnessSpec::mixed(2.0, 1.0, 2.0, o(4), vec![1.0, 1.5]);
        let delta = LevelSet::full_box(&[3, 3]);
        let a = build(&f, &delta, o(4)).unwrap();
        let b = build(&|x: &[f64]| -3.0 * f(x), &delta, o(4)).unwrap();
        assert_abs_diff_eq!(
            besov_quasinorm_b3(&b, &s, 3),
            3.0 * besov_quasinorm_b3(&a, &s, 3),
            epsilon = 1e-9
        );

        let mut single = a.clone();
        for l in single.surplus.levels().map(|l| l.level.clone()).collect::<Vec<_>>() {
            if l != [2, 1] {
                let mut z = single.surplus.level(&l).unwrap().clone();
                z.values.iter_mut().for_each(|v| *v = 0.0);
                single.surplus.insert(z);
            }
        }
        let lvl = single.surplus.level(&[2, 1]).unwrap();
        let expect = (2f64).powf(2.0 + 1.5) * (2f64).powf(-3.0 / 2.0) * lp_norm(&lvl.values, 2.0);
        assert_abs_diff_eq!(besov_quasinorm_b3(&single, &s, 3), expect, epsilon = 1e-12);
        assert_eq!(besov_quasinorm_b3(&single, &s, 1), 0.0);
    }

    #[test]
    fn energy_surrogate_properties() {
        let poly = |x: &[f64]| x[0].powi(2) * x[1] + 1.0;
        let small = LevelSet::full_box(&[2, 2]);
        let big = LevelSet::full_box(&[4, 4]);
        let rec = build(&poly, &small, o(4)).unwrap();
        assert_abs_diff_eq!(
            energy_error_surrogate(&poly, &rec, &spec(), &big).unwrap(),
            0.0,
            epsilon = 1e-10
        );
        assert!(matches!(
            energy_error_surrogate(&poly, &rec, &spec(), &small),
            Err(Error::ReferenceTooSmall)
        ));

        let f = |x: &[f64]| (x[0] - 0.5).abs().powf(1.5) * (x[1] - 0.3).abs().powf(1.5);
        let rec = build(&f, &small, o(4)).unwrap();
        let fine = build(&f, &big, o(4)).unwrap();
        let mut prev = 0.0;
        for g in [0.0, 0.5, 1.0, 2.0] {
            let mut s = spec();
            s.gamma = Some(g);
            let e = energy_surrogate_from(&fine, &rec, &s).unwrap();
            assert!(e >= prev);
            prev = e;
        }
    }
}
