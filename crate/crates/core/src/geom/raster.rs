use super::{cast, GeomError, Point, Scalar};

/// Channel-planar, row-major raster of scalar values.
///
/// A binary raster stores only 0 and 1; foreground is any value above 0.5 so
/// that quantized round-trips stay stable.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<S> {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<S>,
}

impl<S: Scalar> Raster<S> {
    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![S::zero(); height * width * channels],
        }
    }

    pub fn from_data(
        height: usize,
        width: usize,
        channels: usize,
        data: Vec<S>,
    ) -> Result<Self, GeomError> {
        if data.len() != height * width * channels {
            return Err(GeomError::ShapeMismatch {
                height,
                width,
                channels,
                got: data.len(),
            });
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    #[inline]
    fn index(&self, ch: usize, row: usize, col: usize) -> usize {
        debug_assert!(ch < self.channels && row < self.height && col < self.width);
        (ch * self.height + row) * self.width + col
    }

    #[inline]
    pub fn get(&self, ch: usize, row: usize, col: usize) -> S {
        self.data[self.index(ch, row, col)]
    }

    #[inline]
    pub fn set(&mut self, ch: usize, row: usize, col: usize, value: S) {
        let i = self.index(ch, row, col);
        self.data[i] = value;
    }

    pub fn in_bounds(&self, row: i64, col: i64) -> bool {
        row >= 0 && col >= 0 && (row as usize) < self.height && (col as usize) < self.width
    }

    /// Foreground test for binary single-channel rasters.
    #[inline]
    pub fn fg(&self, row: usize, col: usize) -> bool {
        self.get(0, row, col) > cast(0.5)
    }

    /// Extract one channel as a new single-channel raster.
    pub fn channel(&self, ch: usize) -> Raster<S> {
        let plane = self.height * self.width;
        let start = ch * plane;
        Raster {
            height: self.height,
            width: self.width,
            channels: 1,
            data: self.data[start..start + plane].to_vec(),
        }
    }

    /// Stack single-channel planes into one multi-channel raster.
    pub fn stack(planes: &[&Raster<S>]) -> Raster<S> {
        assert!(!planes.is_empty(), "stack of zero channels");
        let (h, w) = (planes[0].height, planes[0].width);
        let mut data = Vec::with_capacity(h * w * planes.len());
        for p in planes {
            assert!(
                p.height == h && p.width == w && p.channels == 1,
                "stack expects matching single-channel planes"
            );
            data.extend_from_slice(&p.data);
        }
        Raster {
            height: h,
            width: w,
            channels: planes.len(),
            data,
        }
    }

    pub fn map<F: Fn(S) -> S>(&self, f: F) -> Raster<S> {
        Raster {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn count_fg(&self) -> usize {
        let half = cast::<S>(0.5);
        self.data.iter().filter(|&&v| v > half).count()
    }
}

/// Crop a `d` x `d` window centered at `round(center)`, zero-padding regions
/// outside the raster. The center pixel lands at output index (d/2, d/2);
/// `d` must be even. Channel count is preserved.
pub fn crop_window<S: Scalar>(
    r: &Raster<S>,
    center: Point<S>,
    d: usize,
) -> Result<Raster<S>, GeomError> {
    if d < 2 || d % 2 != 0 {
        return Err(GeomError::BadCropSize(d));
    }
    let (cr, cc) = center.round();
    let half = (d / 2) as i64;
    let (r0, c0) = (cr - half, cc - half);
    let mut out = Raster::zeros(d, d, r.channels());
    for ch in 0..r.channels() {
        for i in 0..d {
            let src_r = r0 + i as i64;
            if src_r < 0 || src_r as usize >= r.height() {
                continue;
            }
            for j in 0..d {
                let src_c = c0 + j as i64;
                if src_c < 0 || src_c as usize >= r.width() {
                    continue;
                }
                out.set(ch, i, j, r.get(ch, src_r as usize, src_c as usize));
            }
        }
    }
    Ok(out)
}

/// Write a crop directly into a preallocated multi-channel patch, starting at
/// channel `dst_ch`. Same geometry as [`crop_window`].
pub(crate) fn crop_into<S: Scalar>(
    src: &Raster<S>,
    center: Point<S>,
    d: usize,
    dst: &mut Raster<S>,
    dst_ch: usize,
) {
    let (cr, cc) = center.round();
    let half = (d / 2) as i64;
    let (r0, c0) = (cr - half, cc - half);
    for ch in 0..src.channels() {
        for i in 0..d {
            let src_r = r0 + i as i64;
            for j in 0..d {
                let src_c = c0 + j as i64;
                let v = if src.in_bounds(src_r, src_c) {
                    src.get(ch, src_r as usize, src_c as usize)
                } else {
                    S::zero()
                };
                dst.set(dst_ch + ch, i, j, v);
            }
        }
    }
}
