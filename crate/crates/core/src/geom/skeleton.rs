use super::{Raster, Scalar};
use std::collections::{BTreeMap, BTreeSet};

/// Neighbor offsets in the two-subiteration thinning order
/// (N, NE, E, SE, S, SW, W, NW).
const RING: [(i64, i64); 8] = [
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
];

struct Grid {
    h: usize,
    w: usize,
    fg: Vec<bool>,
}

impl Grid {
    fn at(&self, r: i64, c: i64) -> bool {
        r >= 0 && c >= 0 && (r as usize) < self.h && (c as usize) < self.w
            && self.fg[r as usize * self.w + c as usize]
    }

    fn ring(&self, r: i64, c: i64) -> [bool; 8] {
        let mut out = [false; 8];
        for (i, (dr, dc)) in RING.iter().enumerate() {
            out[i] = self.at(r + dr, c + dc);
        }
        out
    }
}

/// Yokoi connectivity number for 8-connected foreground: the number of
/// foreground components the pixel's ring would fall apart into if the pixel
/// were removed. Unlike the raw 0->1 crossing count it treats diagonally
/// adjacent ring pixels as connected, so redundant staircase elbows stay
/// removable.
fn connectivity_number(ring: &[bool; 8]) -> usize {
    // ring order: N, NE, E, SE, S, SW, W, NW
    let bg = |i: usize| !ring[i % 8] as usize;
    [0, 2, 4, 6]
        .iter()
        .map(|&k| bg(k) - bg(k) * bg(k + 1) * bg(k + 2))
        .sum()
}

fn neighbor_count(ring: &[bool; 8]) -> usize {
    ring.iter().filter(|&&b| b).count()
}

/// Two-subiteration iterative thinning of a binary mask down to a unit-width
/// skeleton.
///
/// Each subiteration marks its candidates on a snapshot of the mask (so
/// erosion advances one boundary layer per pass and line tips cannot cascade
/// away), then applies the removals in row-major order while re-validating
/// the simple-point conditions against the current mask. The re-validation
/// keeps every 8-connected component connected and never lets one vanish.
pub fn skeletonize<S: Scalar>(mask: &Raster<S>) -> Raster<S> {
    assert_eq!(mask.channels(), 1, "skeletonize expects a mask");
    let (h, w) = (mask.height(), mask.width());
    let mut grid = Grid {
        h,
        w,
        fg: (0..h * w)
            .map(|i| mask.fg(i / w, i % w))
            .collect(),
    };
    let deletable = |ring: &[bool; 8], pass: usize| -> bool {
        let b = neighbor_count(ring);
        if !(2..=6).contains(&b) || connectivity_number(ring) != 1 {
            return false;
        }
        // ring indices: N=0, E=2, S=4, W=6
        if pass == 0 {
            (!ring[0] || !ring[2] || !ring[4]) && (!ring[2] || !ring[4] || !ring[6])
        } else {
            (!ring[0] || !ring[2] || !ring[6]) && (!ring[0] || !ring[4] || !ring[6])
        }
    };
    loop {
        let mut changed = false;
        for pass in 0..2 {
            let mut marked = Vec::new();
            for r in 0..h as i64 {
                for c in 0..w as i64 {
                    if grid.at(r, c) && deletable(&grid.ring(r, c), pass) {
                        marked.push((r, c));
                    }
                }
            }
            for (r, c) in marked {
                // A prior removal may have made this pixel load-bearing.
                let ring = grid.ring(r, c);
                if (2..=6).contains(&neighbor_count(&ring)) && connectivity_number(&ring) == 1 {
                    grid.fg[r as usize * w + c as usize] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut out = Raster::zeros(h, w, 1);
    for r in 0..h {
        for c in 0..w {
            if grid.fg[r * w + c] {
                out.set(0, r, c, S::one());
            }
        }
    }
    out
}

/// One maximal degree-<=2 chain of a skeleton, as an ordered pixel run.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSegment {
    /// Ordered pixels from one endpoint to the other (canonical direction:
    /// starts at the lexicographically smaller endpoint).
    pub pixels: Vec<(i64, i64)>,
    /// The two end pixels; a closed loop reports its start pixel twice.
    pub endpoints: ((i64, i64), (i64, i64)),
    /// Euclidean arc length along the chain.
    pub length: f64,
}

fn chain_length(pixels: &[(i64, i64)]) -> f64 {
    pixels
        .windows(2)
        .map(|w| {
            let (dr, dc) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            ((dr * dr + dc * dc) as f64).sqrt()
        })
        .sum()
}

/// Decompose a skeleton into maximal chains through degree-2 pixels, dropping
/// chains with arc length below `min_len`. Junction pixels (degree >= 3)
/// terminate chains and are included in each incident chain; closed loops are
/// returned as a single chain whose endpoints repeat the start pixel.
pub fn skeleton_segments<S: Scalar>(skel: &Raster<S>, min_len: f64) -> Vec<SkeletonSegment> {
    assert_eq!(skel.channels(), 1, "skeleton_segments expects a mask");
    let (h, w) = (skel.height(), skel.width());
    let mut pixels = BTreeSet::new();
    for r in 0..h {
        for c in 0..w {
            if skel.fg(r, c) {
                pixels.insert((r as i64, c as i64));
            }
        }
    }
    let neighbors = |p: (i64, i64), set: &BTreeSet<(i64, i64)>| -> Vec<(i64, i64)> {
        let mut out = Vec::new();
        for dr in -1..=1i64 {
            for dc in -1..=1i64 {
                if (dr, dc) == (0, 0) {
                    continue;
                }
                let q = (p.0 + dr, p.1 + dc);
                if set.contains(&q) {
                    out.push(q);
                }
            }
        }
        out
    };
    let mut degree = BTreeMap::new();
    for &p in &pixels {
        degree.insert(p, neighbors(p, &pixels).len());
    }

    let mut chains = Vec::new();
    let mut used_edges: BTreeSet<((i64, i64), (i64, i64))> = BTreeSet::new();
    let edge_key = |a: (i64, i64), b: (i64, i64)| if a <= b { (a, b) } else { (b, a) };

    // Walk out of every node (degree != 2 pixel) along each unused edge.
    let nodes: Vec<(i64, i64)> = pixels.iter().copied().filter(|p| degree[p] != 2).collect();
    for &start in &nodes {
        if degree[&start] == 0 {
            chains.push(vec![start]);
            continue;
        }
        for first in neighbors(start, &pixels) {
            if used_edges.contains(&edge_key(start, first)) {
                continue;
            }
            let mut chain = vec![start, first];
            used_edges.insert(edge_key(start, first));
            let (mut prev, mut cur) = (start, first);
            while degree[&cur] == 2 {
                let next = neighbors(cur, &pixels)
                    .into_iter()
                    .find(|&q| q != prev)
                    .expect("degree-2 pixel has a continuation");
                used_edges.insert(edge_key(cur, next));
                chain.push(next);
                prev = cur;
                cur = next;
            }
            chains.push(chain);
        }
    }

    // Remaining unvisited degree-2 pixels form closed loops.
    let mut in_chain: BTreeSet<(i64, i64)> = chains.iter().flatten().copied().collect();
    for &p in &pixels {
        if in_chain.contains(&p) || degree[&p] != 2 {
            continue;
        }
        let mut loop_chain = vec![p];
        let mut prev = p;
        let mut cur = *neighbors(p, &pixels).first().expect("loop pixel has neighbors");
        while cur != p {
            loop_chain.push(cur);
            let next = neighbors(cur, &pixels)
                .into_iter()
                .find(|&q| q != prev)
                .expect("loop continues");
            prev = cur;
            cur = next;
        }
        loop_chain.push(p);
        for &q in &loop_chain {
            in_chain.insert(q);
        }
        chains.push(loop_chain);
    }

    let mut out: Vec<SkeletonSegment> = chains
        .into_iter()
        .map(|mut pixels| {
            let first = pixels[0];
            let last = *pixels.last().unwrap();
            if last < first {
                pixels.reverse();
            }
            let endpoints = (pixels[0], *pixels.last().unwrap());
            let length = chain_length(&pixels);
            SkeletonSegment {
                pixels,
                endpoints,
                length,
            }
        })
        .filter(|seg| seg.length >= min_len)
        .collect();
    out.sort_by_key(|seg| seg.endpoints);
    out
}
