//! Dense row-major tensors contracted along one axis by sparse matrices.

use rayon::prelude::*;

/// Compressed sparse rows with `u32` column indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseRows {
    offsets: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseRows {
    pub fn new() -> Self {
        SparseRows {
            offsets: vec![0],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn push_row<I: IntoIterator<Item = (u32, f64)>>(&mut self, row: I) {
        for (c, v) in row {
            self.cols.push(c);
            self.vals.push(v);
        }
        self.offsets.push(self.cols.len());
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn max_row_len(&self) -> usize {
        self.offsets.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }
}

const PAR_THRESHOLD: usize = 1 << 15;

/// `out[.., i, ..] = Σ_{(c, w) in rows[i]} w · data[.., c, ..]` along `axis`.
///
/// Each output entry is accumulated by a single thread in a fixed order, so
/// the result does not depend on the thread count.
pub fn contract_axis(data: &[f64], shape: &[usize], axis: usize, rows: &SparseRows) -> Vec<f64> {
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let n_in = shape[axis];
    let n_out = rows.len();
    debug_assert_eq!(data.len(), outer * n_in * inner);
    let mut out = vec![0.0; outer * n_out * inner];
    if out.is_empty() {
        return out;
    }
    let fill_row = |o: usize, i: usize, dst: &mut [f64]| {
        let src = &data[o * n_in * inner..(o + 1) * n_in * inner];
        let (cols, vals) = rows.row(i);
        for (&c, &w) in cols.iter().zip(vals) {
            let c = c as usize;
            let s = &src[c * inner..(c + 1) * inner];
            for (a, b) in dst.iter_mut().zip(s) {
                *a += w * b;
            }
        }
    };
    if out.len() >= PAR_THRESHOLD && rows.nnz() > 0 {
        out.par_chunks_mut(inner).enumerate().for_each(|(flat, dst)| {
            fill_row(flat / n_out, flat % n_out, dst);
        });
    } else {
        for (flat, dst) in out.chunks_mut(inner).enumerate() {
            fill_row(flat / n_out, flat % n_out, dst);
        }
    }
    out
}

/// Calls `f` on every multi-index of `shape` in row-major order.
pub fn for_each_index<F: FnMut(&[usize])>(shape: &[usize], mut f: F) {
    if shape.contains(&0) {
        return;
    }
    let mut idx = vec![0usize; shape.len()];
    loop {
        f(&idx);
        let mut axis = shape.len();
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < shape[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// `Σ_idx data[idx] · Π_i factors[i][idx_i]` over the sub-box
/// `starts[i] .. starts[i] + factors[i].len()` of a row-major tensor.
pub fn weighted_box_sum(data: &[f64], shape: &[usize], starts: &[usize], factors: &[Vec<f64>]) -> f64 {
    fn rec(data: &[f64], shape: &[usize], starts: &[usize], factors: &[Vec<f64>], base: usize) -> f64 {
        let Some((_, rest)) = shape.split_first() else {
            return data[base];
        };
        let stride: usize = rest.iter().product();
        let mut total = 0.0;
        for (j, &w) in factors[0].iter().enumerate() {
            if w != 0.0 {
                let offset = base + (starts[0] + j) * stride;
                total += w * rec(data, rest, &starts[1..], &factors[1..], offset);
            }
        }
        total
    }
    rec(data, shape, starts, factors, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contracts_middle_axis() {
        // shape 2x3x2, contract axis 1 with [[1,0,1],[0,2,0]]
        let data: Vec<f64> = (0..12).map(|v| v as f64).collect();
        let mut rows = SparseRows::new();
        rows.push_row([(0, 1.0), (2, 1.0)]);
        rows.push_row([(1, 2.0)]);
        let out = contract_axis(&data, &[2, 3, 2], 1, &rows);
        assert_eq!(out, vec![4.0, 6.0, 4.0, 6.0, 16.0, 18.0, 16.0, 18.0]);
    }

    #[test]
    fn large_contraction_matches_serial_loop() {
        let n = 300;
        let data: Vec<f64> = (0..n * n).map(|v| (v as f64).sin()).collect();
        let mut rows = SparseRows::new();
        for i in 0..n {
            rows.push_row([(i as u32, 0.5), (((i + 7) % n) as u32, -0.25)]);
        }
        let out = contract_axis(&data, &[n, n], 0, &rows);
        for i in 0..n {
            for j in 0..n {
                let expected = 0.5 * data[i * n + j] + -0.25 * data[((i + 7) % n) * n + j];
                assert_eq!(out[i * n + j], expected);
            }
        }
    }

    #[test]
    fn iterates_row_major() {
        let mut seen = Vec::new();
        for_each_index(&[2, 3], |i| seen.push((i[0], i[1])));
        assert_eq!(seen, vec![(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]);
        let mut count = 0;
        for_each_index(&[], |_| count += 1);
        assert_eq!(count, 1);
        for_each_index(&[3, 0], |_| count += 1);
        assert_eq!(count, 1);
    }

    #[test]
    fn box_sum() {
        let data: Vec<f64> = (0..12).map(|v| v as f64).collect();
        let s = weighted_box_sum(&data, &[3, 4], &[1, 2], &[vec![1.0, 2.0], vec![1.0, -1.0]]);
        assert_eq!(s, (6.0 - 7.0) + 2.0 * (10.0 - 11.0));
    }
}
