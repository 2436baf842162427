//! Discrete `L_q` errors of reconstructions.

use rayon::prelude::*;

use super::lattice::ErrorLattice;
use crate::error::{Error, Result};
use crate::recovery::Reconstruction;

const CHUNK_POINTS: usize = 1 << 20;

/// Running `Σ w|e|^q` or `max |e|`.
struct Accumulator {
    q: f64,
    total: f64,
}

impl Accumulator {
    fn new(q: f64) -> Self {
        Accumulator { q, total: 0.0 }
    }

    fn term(&self, w: f64, e: f64) -> f64 {
        if self.q.is_infinite() {
            e.abs()
        } else {
            w * e.abs().powf(self.q)
        }
    }

    fn add(&mut self, parts: &[f64]) {
        if self.q.is_infinite() {
            self.total = parts.iter().fold(self.total, |m, &v| m.max(v));
        } else {
            self.total += parts.iter().sum::<f64>();
        }
    }

    fn finish(self) -> f64 {
        if self.q.is_infinite() {
            self.total
        } else {
            self.total.powf(1.0 / self.q)
        }
    }
}

/// `(Σ_x w_x |f(x) - R(x)|^q)^{1/q}` over `lattice`, or the maximum for `q = ∞`.
pub fn lq_error_on<F>(f: &F, rec: &Reconstruction, q: f64, lattice: &ErrorLattice) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    if !(q > 0.0) {
        return Err(Error::InvalidSpec(format!("q must be positive, got {q}")));
    }
    if lattice.dim() != rec.dim() {
        return Err(Error::DimensionMismatch {
            expected: rec.dim(),
            got: lattice.dim(),
        });
    }
    let mut acc = Accumulator::new(q);
    match lattice {
        ErrorLattice::Tensor { axes, weights } => {
            let inner: usize = axes[1..].iter().map(Vec::len).product();
            let rows = (CHUNK_POINTS / inner.max(1)).max(1);
            let mut start = 0;
            while start < axes[0].len() {
                let end = (start + rows).min(axes[0].len());
                let mut sub = axes.clone();
                sub[0] = axes[0][start..end].to_vec();
                let approx = rec.evaluate_lattice(&sub)?;
                let parts: Vec<f64> = approx
                    .par_iter()
                    .enumerate()
                    .map(|(flat, &v)| {
                        let mut rem = flat;
                        let mut x = vec![0.0; sub.len()];
                        let mut w = 1.0;
                        for i in (0..sub.len()).rev() {
                            let n = sub[i].len();
                            let j = rem % n;
                            rem /= n;
                            x[i] = sub[i][j];
                            w *= if i == 0 { weights[0][start + j] } else { weights[i][j] };
                        }
                        acc.term(w, f(&x) - v)
                    })
                    .collect();
                acc.add(&parts);
                start = end;
            }
        }
        ErrorLattice::Scattered { points } => {
            let w = 1.0 / points.len() as f64;
            for chunk in points.chunks(CHUNK_POINTS) {
                let approx = rec.evaluate_batch(chunk)?;
                let parts: Vec<f64> = chunk
                    .par_iter()
                    .zip(&approx)
                    .map(|(x, &v)| acc.term(w, f(x) - v))
                    .collect();
                acc.add(&parts);
            }
        }
    }
    Ok(acc.finish())
}

/// [`lq_error_on`] with `resolution` points per dimension; `offset` shifts the
/// lattice to cell midpoints so it avoids the dyadic knots.
pub fn discrete_lq_error<F>(f: &F, rec: &Reconstruction, q: f64, resolution: usize, offset: bool) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    lq_error_on(f, rec, q, &ErrorLattice::uniform(resolution, rec.dim(), offset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bspline::SplineOrder;
    use crate::grids::LevelSet;
    use crate::recovery::build;
    use approx::assert_abs_diff_eq;

    fn o(r: u32) -> SplineOrder {
        SplineOrder::new(r).unwrap()
    }

    #[test]
    fn hat_interpolation_of_square() {
        let rec = build(&|x: &[f64]| x[0] * x[0], &LevelSet::full_box(&[1]), o(2)).unwrap();
        let f = |x: &[f64]| x[0] * x[0];
        let e = discrete_lq_error(&f, &rec, f64::INFINITY, 1025, false).unwrap();
        assert_abs_diff_eq!(e, 1.0 / 16.0, epsilon = 1e-12);
        let brute = (0..=1024)
            .map(|i| i as f64 / 1024.0)
            .map(|x| (x * x - rec.evaluate(&[x]).unwrap()).abs())
            .fold(0.0, f64::max);
        assert_eq!(e, brute);
    }

    #[test]
    fn constant_offset_and_self() {
        let g = |x: &[f64]| (x[0] * 3.0).sin() * x[1];
        let rec = build(&g, &LevelSet::full_box(&[3, 2]), o(4)).unwrap();
        let own = |x: &[f64]| rec.evaluate(x).unwrap();
        for q in [1.0, 2.0, f64::INFINITY] {
            assert!(discrete_lq_error(&own, &rec, q, 17, false).unwrap() < 1e-14);
            let shifted = |x: &[f64]| own(x) + 0.3;
            assert_abs_diff_eq!(
                discrete_lq_error(&shifted, &rec, q, 17, true).unwrap(),
                0.3,
                epsilon = 1e-12
            );
        }
        assert!(discrete_lq_error(&g, &rec, 0.0, 5, false).is_err());
    }

    #[test]
    fn monotone_in_q_and_scattered() {
        let g = |x: &[f64]| (x[0] - 0.5).abs().sqrt() + x[1];
        let rec = build(&g, &LevelSet::full_box(&[2, 2]), o(2)).unwrap();
        let lat = ErrorLattice::uniform(33, 2, false);
        let errs: Vec<f64> = [0.5, 1.0, 2.0, 4.0, f64::INFINITY]
            .iter()
            .map(|&q| lq_error_on(&g, &rec, q, &lat).unwrap())
            .collect();
        assert!(errs.windows(2).all(|w| w[0] <= w[1] + 1e-15));
        let sc = lq_error_on(&g, &rec, 2.0, &ErrorLattice::kronecker(20000, 2)).unwrap();
        assert_abs_diff_eq!(sc, errs[2], epsilon = 0.05 * errs[2]);
        assert!(lq_error_on(&g, &rec, 2.0, &ErrorLattice::uniform(5, 3, false)).is_err());
    }
}
