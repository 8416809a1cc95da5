use super::{cast, GeomError, Raster, Scalar};

/// Exact Euclidean distance transform of a binary mask: per-pixel distance to
/// the nearest foreground pixel (0 on foreground).
///
/// Two-pass lower-envelope-of-parabolas transform over squared distances, run
/// per column then per row. Squared distances stay exact integers in f64, so
/// the result matches a brute-force nearest-pixel search bit for bit.
pub fn distance_transform<S: Scalar>(mask: &Raster<S>) -> Result<Raster<S>, GeomError> {
    assert_eq!(mask.channels(), 1, "distance transform expects a mask");
    let (h, w) = (mask.height(), mask.width());
    let inf = f64::INFINITY;
    let mut sq = vec![inf; h * w];
    let mut any = false;
    for r in 0..h {
        for c in 0..w {
            if mask.fg(r, c) {
                sq[r * w + c] = 0.0;
                any = true;
            }
        }
    }
    if !any {
        return Err(GeomError::EmptyMask);
    }

    let mut col_buf = vec![0.0; h];
    let mut out_buf = vec![0.0; h.max(w)];
    for c in 0..w {
        for r in 0..h {
            col_buf[r] = sq[r * w + c];
        }
        edt_1d(&col_buf, &mut out_buf[..h]);
        for r in 0..h {
            sq[r * w + c] = out_buf[r];
        }
    }
    let mut row_buf = vec![0.0; w];
    for r in 0..h {
        row_buf.copy_from_slice(&sq[r * w..(r + 1) * w]);
        edt_1d(&row_buf, &mut out_buf[..w]);
        sq[r * w..(r + 1) * w].copy_from_slice(&out_buf[..w]);
    }

    let data = sq.iter().map(|&d| cast::<S>(d.sqrt())).collect();
    Raster::from_data(h, w, 1, data)
}

/// One-dimensional squared-distance transform (Felzenszwalb–Huttenlocher).
fn edt_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    debug_assert!(out.len() >= n);
    if n == 1 {
        out[0] = f[0];
        return;
    }
    let mut v = vec![0usize; n]; // parabola apex positions
    let mut z = vec![0.0f64; n + 1]; // envelope boundaries
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        if f[q] == f64::INFINITY {
            continue;
        }
        loop {
            let p = v[k];
            if f[p] == f64::INFINITY {
                // Empty envelope so far; replace.
                v[k] = q;
                z[k + 1] = f64::INFINITY;
                break;
            }
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2 * (q - p)) as f64;
            if s <= z[k] {
                if k == 0 {
                    v[0] = q;
                    z[1] = f64::INFINITY;
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    let mut k = 0usize;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        out[q] = if f[p] == f64::INFINITY {
            f64::INFINITY
        } else {
            let d = q as f64 - p as f64;
            d * d + f[p]
        };
    }
}
