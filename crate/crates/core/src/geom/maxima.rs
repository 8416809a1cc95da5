use super::{cast, Point, Raster, Scalar};

/// Local maxima of a single-channel raster: pixels at or above `min_value`
/// that dominate every pixel within the given Chebyshev `radius`.
///
/// Plateau ties inside a radius ball keep only the lexicographically smallest
/// (row, col), so the result is deterministic.
pub fn local_maxima<S: Scalar>(h: &Raster<S>, radius: usize, min_value: f64) -> Vec<Point<S>> {
    assert_eq!(h.channels(), 1, "local_maxima expects a single channel");
    assert!(radius >= 1, "radius must be at least 1");
    let floor = cast::<S>(min_value);
    let rad = radius as i64;
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for r in 0..h.height() {
        for c in 0..h.width() {
            let v = h.get(0, r, c);
            if v < floor {
                continue;
            }
            let mut dominated = false;
            'scan: for dr in -rad..=rad {
                for dc in -rad..=rad {
                    let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                    if h.in_bounds(nr, nc) && h.get(0, nr as usize, nc as usize) > v {
                        dominated = true;
                        break 'scan;
                    }
                }
            }
            if !dominated {
                candidates.push((r, c));
            }
        }
    }
    // Candidates are in lexicographic order; greedily keep the first of each
    // tied cluster.
    let mut kept: Vec<(usize, usize)> = Vec::new();
    for &(r, c) in &candidates {
        let clashes = kept.iter().any(|&(kr, kc)| {
            (kr as i64 - r as i64).abs() <= rad && (kc as i64 - c as i64).abs() <= rad
        });
        if !clashes {
            kept.push((r, c));
        }
    }
    kept.into_iter()
        .map(|(r, c)| Point::new(cast(r as f64), cast(c as f64)))
        .collect()
}
