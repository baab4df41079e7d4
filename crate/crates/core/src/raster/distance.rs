use super::{BinaryMask, DistanceField};
use crate::error::{Error, Result};

/// Exact Euclidean distance from every pixel to the nearest true pixel.
///
/// Separable lower-envelope-of-parabolas transform: one 1-D pass down the
/// columns and one along the rows over squared distances, so values are
/// exact up to the final square root.
pub fn distance_transform(mask: &BinaryMask) -> Result<DistanceField> {
    if mask.is_empty() {
        return Err(Error::Empty("distance transform of a mask with no true pixels"));
    }
    let (w, h) = mask.shape();
    // Larger than any squared distance on the grid, small enough to stay exact.
    let inf = ((w * w + h * h) as f64 + 1.0) * 4.0;
    let mut sq: Vec<f64> = mask.data().iter().map(|&b| if b { 0.0 } else { inf }).collect();

    let n = w.max(h);
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];

    for c in 0..w {
        for r in 0..h {
            f[r] = sq[r * w + c];
        }
        lower_envelope(&f[..h], &mut out[..h], &mut v, &mut z);
        for r in 0..h {
            sq[r * w + c] = out[r];
        }
    }
    for r in 0..h {
        let row = &mut sq[r * w..(r + 1) * w];
        f[..w].copy_from_slice(row);
        lower_envelope(&f[..w], &mut out[..w], &mut v, &mut z);
        row.copy_from_slice(&out[..w]);
    }

    Ok(DistanceField {
        width: w,
        height: h,
        data: sq.into_iter().map(f64::sqrt).collect(),
    })
}

/// `out[q] = min_p (q - p)^2 + f[p]`.
fn lower_envelope(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let parabola = |p: usize| f[p] + (p * p) as f64;
        let mut s = (parabola(q) - parabola(v[k])) / (2.0 * (q - v[k]) as f64);
        // z[0] is -inf, so this never underflows k.
        while s <= z[k] {
            k -= 1;
            s = (parabola(q) - parabola(v[k])) / (2.0 * (q - v[k]) as f64);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        *o = d * d + f[p];
    }
}
