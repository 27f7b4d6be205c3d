use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

const TILE: usize = 16;

/// Unitary DFT along each axis in `axes` of a row-major array with shape `dims`.
pub(crate) fn transform_axes(
    data: &mut [Complex64],
    dims: &[usize],
    axes: std::ops::Range<usize>,
    dir: Direction,
) {
    debug_assert_eq!(data.len(), dims.iter().product::<usize>());
    let zero = Complex64::new(0.0, 0.0);
    let mut scale = 1.0;
    let mut scratch = Vec::new();
    let mut buf = Vec::new();
    for axis in axes {
        let len = dims[axis];
        if len <= 1 {
            continue;
        }
        scale *= len as f64;
        let inner: usize = dims[axis + 1..].iter().product();
        let outer: usize = dims[..axis].iter().product();
        let fft = PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            match dir {
                Direction::Forward => p.plan_fft_forward(len),
                Direction::Inverse => p.plan_fft_inverse(len),
            }
        });
        scratch.resize(fft.get_inplace_scratch_len(), zero);
        buf.resize(len * TILE, zero);
        for o in 0..outer {
            let block = &mut data[o * len * inner..(o + 1) * len * inner];
            if inner == 1 {
                fft.process_with_scratch(block, &mut scratch);
                continue;
            }
            let mut j0 = 0;
            while j0 < inner {
                let w = TILE.min(inner - j0);
                for i in 0..len {
                    let row = &block[i * inner + j0..i * inner + j0 + w];
                    for (j, v) in row.iter().enumerate() {
                        buf[j * len + i] = *v;
                    }
                }
                fft.process_with_scratch(&mut buf[..w * len], &mut scratch);
                for i in 0..len {
                    let row = &mut block[i * inner + j0..i * inner + j0 + w];
                    for (j, v) in row.iter_mut().enumerate() {
                        *v = buf[j * len + i];
                    }
                }
                j0 += w;
            }
        }
    }
    if scale != 1.0 {
        let s = 1.0 / scale.sqrt();
        for v in data.iter_mut() {
            *v *= s;
        }
    }
}

/// Unitary DFT of a single contiguous line.
pub(crate) fn transform_line(line: &mut [Complex64], dir: Direction) {
    let n = line.len();
    transform_axes(line, &[n], 0..1, dir);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(data: &[Complex64], dims: &[usize], sign: f64) -> Vec<Complex64> {
        let total = data.len();
        let mut out = vec![Complex64::new(0.0, 0.0); total];
        let idx = |mut f: usize| {
            let mut v = vec![0usize; dims.len()];
            for a in (0..dims.len()).rev() {
                v[a] = f % dims[a];
                f /= dims[a];
            }
            v
        };
        for (o, slot) in out.iter_mut().enumerate() {
            let ko = idx(o);
            for (i, val) in data.iter().enumerate() {
                let xi = idx(i);
                let mut ph = 0.0;
                for a in 0..dims.len() {
                    ph += (ko[a] * xi[a]) as f64 / dims[a] as f64;
                }
                *slot += val * Complex64::from_polar(1.0, sign * 2.0 * std::f64::consts::PI * ph);
            }
            *slot /= (total as f64).sqrt();
        }
        out
    }

    #[test]
    fn matches_naive_dft() {
        let dims = [4usize, 3, 5];
        let data: Vec<Complex64> = (0..60)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.1).cos()))
            .collect();
        let mut a = data.clone();
        transform_axes(&mut a, &dims, 0..3, Direction::Forward);
        let b = naive(&data, &dims, -1.0);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-12);
        }
        transform_axes(&mut a, &dims, 0..3, Direction::Inverse);
        for (x, y) in a.iter().zip(&data) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn wide_inner_axis_uses_tiles() {
        let dims = [8usize, 40];
        let data: Vec<Complex64> =
            (0..320).map(|i| Complex64::new((i as f64).sqrt(), -(i as f64 * 0.1))).collect();
        let mut a = data.clone();
        transform_axes(&mut a, &dims, 0..1, Direction::Forward);
        let col = |v: &[Complex64], c: usize| -> Vec<Complex64> { (0..8).map(|r| v[r * 40 + c]).collect() };
        for c in [0usize, 17, 39] {
            let expect = naive(&col(&data, c), &[8], -1.0);
            for (x, y) in col(&a, c).iter().zip(&expect) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }
}
