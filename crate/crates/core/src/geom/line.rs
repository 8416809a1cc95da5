use super::{Point, Scalar};

/// Walk the integer grid from `round(a)` to `round(b)`, returning an
/// 8-connected pixel chain that includes both endpoints. Degenerate segments
/// yield a single pixel.
pub fn rasterize_segment<S: Scalar>(a: Point<S>, b: Point<S>) -> Vec<(i64, i64)> {
    let (r0, c0) = a.round();
    let (r1, c1) = b.round();
    let mut out = Vec::new();
    let dr = (r1 - r0).abs();
    let dc = -(c1 - c0).abs();
    let sr = if r0 < r1 { 1 } else { -1 };
    let sc = if c0 < c1 { 1 } else { -1 };
    let mut err = dr + dc;
    let (mut r, mut c) = (r0, c0);
    loop {
        out.push((r, c));
        if r == r1 && c == c1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dc {
            err += dc;
            r += sr;
        }
        if e2 <= dr {
            err += dr;
            c += sc;
        }
    }
    out
}
