use super::{cast, GeomError, Point, Scalar};

/// Polyline densified so that consecutive samples are at most `max_gap` apart,
/// with the cumulative arc length stored per sample.
///
/// Invariants: at least 2 points, `cum_len` strictly increasing with
/// `cum_len[0] == 0`. Ground-truth processing always densifies at 1 px, which
/// makes "nearest point on the curve" and "nearest sample" agree to 0.5 px.
#[derive(Debug, Clone, PartialEq)]
pub struct DensePolyline<S> {
    points: Vec<Point<S>>,
    cum_len: Vec<S>,
}

/// Result of a nearest-sample query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestHit<S> {
    pub point: Point<S>,
    /// Arc length of the returned sample.
    pub arc: S,
    pub dist: S,
}

/// Linearly subdivide `raw` so consecutive samples are at most `max_gap`
/// apart. Original points are preserved in order; consecutive duplicates are
/// dropped so the arc length stays strictly increasing.
pub fn densify_polyline<S: Scalar>(
    raw: &[Point<S>],
    max_gap: f64,
) -> Result<DensePolyline<S>, GeomError> {
    if max_gap <= 0.0 {
        return Err(GeomError::BadMaxGap(max_gap));
    }
    if raw.len() < 2 {
        return Err(GeomError::DegeneratePolyline(raw.len()));
    }
    let gap = cast::<S>(max_gap);
    let mut points = vec![raw[0]];
    for pair in raw.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let len = a.dist(&b);
        if len == S::zero() {
            continue;
        }
        let n: usize = num_traits::NumCast::from((len / gap).ceil()).expect("finite segment");
        let n = n.max(1);
        for k in 1..=n {
            let t = cast::<S>(k as f64 / n as f64);
            points.push(Point::new(
                a.row + (b.row - a.row) * t,
                a.col + (b.col - a.col) * t,
            ));
        }
    }
    if points.len() < 2 {
        return Err(GeomError::DegeneratePolyline(points.len()));
    }
    let mut cum_len = Vec::with_capacity(points.len());
    let mut acc = S::zero();
    cum_len.push(acc);
    for pair in points.windows(2) {
        acc = acc + pair[0].dist(&pair[1]);
        cum_len.push(acc);
    }
    Ok(DensePolyline { points, cum_len })
}

impl<S: Scalar> DensePolyline<S> {
    pub fn points(&self) -> &[Point<S>] {
        &self.points
    }

    pub fn cum_len(&self) -> &[S] {
        &self.cum_len
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: at least 2 points
    }

    pub fn total_len(&self) -> S {
        *self.cum_len.last().unwrap()
    }

    pub fn first(&self) -> Point<S> {
        self.points[0]
    }

    pub fn last(&self) -> Point<S> {
        *self.points.last().unwrap()
    }

    pub fn reversed(&self) -> Self {
        let raw: Vec<Point<S>> = self.points.iter().rev().copied().collect();
        densify_polyline(&raw, 1.0).expect("reversing preserves validity")
    }

    /// Index of the sample whose arc length is nearest to `arc`
    /// (ties toward the smaller index).
    pub fn index_at_arc(&self, arc: S) -> usize {
        let n = self.cum_len.len();
        if arc <= S::zero() {
            return 0;
        }
        if arc >= self.total_len() {
            return n - 1;
        }
        // First index with cum_len >= arc.
        let mut lo = 0usize;
        let mut hi = n - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.cum_len[mid] < arc {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if lo > 0 && arc - self.cum_len[lo - 1] <= self.cum_len[lo] - arc {
            lo - 1
        } else {
            lo
        }
    }

    /// The sample nearest (in arc length) to `arc`, together with its exact
    /// arc position.
    pub fn sample_at_arc(&self, arc: S) -> (Point<S>, S) {
        let i = self.index_at_arc(arc);
        (self.points[i], self.cum_len[i])
    }

    /// Nearest sample to `q` over the whole polyline; ties broken by the
    /// smallest arc length.
    pub fn nearest_point(&self, q: Point<S>) -> NearestHit<S> {
        self.nearest_point_in(q, None)
            .expect("unwindowed query always hits")
    }

    /// Nearest sample to `q` restricted to samples whose arc length lies in
    /// `window = [lo, hi]`; `None` if no sample falls inside the window.
    pub fn nearest_point_in(&self, q: Point<S>, window: Option<(S, S)>) -> Option<NearestHit<S>> {
        let (start, end) = match window {
            None => (0, self.points.len()),
            Some((lo, hi)) => {
                if hi < lo {
                    return None;
                }
                let start = self.cum_len.partition_point(|&a| a < lo);
                let end = self.cum_len.partition_point(|&a| a <= hi);
                (start, end)
            }
        };
        let mut best: Option<(S, usize)> = None;
        for i in start..end {
            let d2 = q.dist_sq(&self.points[i]);
            match best {
                Some((bd, _)) if d2 >= bd => {}
                _ => best = Some((d2, i)),
            }
        }
        best.map(|(d2, i)| NearestHit {
            point: self.points[i],
            arc: self.cum_len[i],
            dist: d2.sqrt(),
        })
    }
}
