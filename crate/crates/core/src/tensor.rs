//! Dense tensor helpers shared by the transform code.

use num_complex::Complex64;
use rayon::prelude::*;

/// Contracts `axis` of a row-major tensor with the `rows × shape[axis]` matrix `m`.
pub(crate) fn contract_axis(data: &[Complex64], shape: &[usize], axis: usize, m: &[Complex64], rows: usize) -> Vec<Complex64> {
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let len = shape[axis];
    let mut out = vec![Complex64::new(0.0, 0.0); outer * rows * inner];
    out.par_chunks_mut(rows * inner).enumerate().for_each(|(o, block)| {
        let src = &data[o * len * inner..(o + 1) * len * inner];
        for r in 0..rows {
            let coeffs = &m[r * len..(r + 1) * len];
            let dst = &mut block[r * inner..(r + 1) * inner];
            for (s, c) in coeffs.iter().enumerate() {
                let row = &src[s * inner..(s + 1) * inner];
                for (d, v) in dst.iter_mut().zip(row) {
                    *d += c * v;
                }
            }
        }
    });
    out
}
