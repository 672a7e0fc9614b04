//! Floating-point raster, finite-difference gradients and channel statistics.

use crate::error::{Error, Result};

/// A row-major `H x W x C` raster of finite `f64` samples.
///
/// Values are nominally in `[0, 1]`; only [`ImageF::clamp01`] enforces that.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageF {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageF {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidParameter(format!(
                "image extents must be positive, got {height}x{width}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidParameter(format!(
                "channel count must be 1 or 3, got {channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::InvalidParameter(format!(
                "buffer holds {} samples, {height}x{width}x{channels} needs {}",
                data.len(),
                height * width * channels
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("sample {i} is not finite")));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    /// Constant image. Panics on zero extents or a channel count other than 1 or 3.
    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Self {
        Self::new(
            height,
            width,
            channels,
            vec![value; height * width * channels],
        )
        .expect("invalid constant image")
    }

    /// The all-ones image `e` matching `like`.
    pub fn ones_like(like: &ImageF) -> Self {
        Self::filled(like.height, like.width, like.channels, 1.0)
    }

    pub fn zeros_like(like: &ImageF) -> Self {
        Self::filled(like.height, like.width, like.channels, 0.0)
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * channels);
        for r in 0..height {
            for c in 0..width {
                for ch in 0..channels {
                    data.push(f(r, c, ch));
                }
            }
        }
        Self::new(height, width, channels, data)
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

    /// `(height, width, channels)`
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize, ch: usize) -> usize {
        (row * self.width + col) * self.channels + ch
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[self.index(row, col, ch)]
    }

    pub fn ensure_same_shape(&self, other: &ImageF) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                found: other.shape(),
            });
        }
        Ok(())
    }

    /// Applies `f` to every sample. The caller keeps results finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ImageF {
        ImageF {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..*self
        }
    }

    pub fn zip_map(&self, other: &ImageF, f: impl Fn(f64, f64) -> f64) -> Result<ImageF> {
        self.ensure_same_shape(other)?;
        Ok(ImageF {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            ..*self
        })
    }

    pub fn clamp01(&self) -> ImageF {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    /// Grayscale is replicated into three identical channels; RGB is returned as is.
    pub fn to_rgb(&self) -> ImageF {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        ImageF {
            height: self.height,
            width: self.width,
            channels: 3,
            data,
        }
    }

    /// Collapses RGB to one channel by averaging; grayscale is returned as is.
    pub fn to_gray(&self) -> ImageF {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| (p[0] + p[1] + p[2]) / 3.0)
            .collect();
        ImageF {
            height: self.height,
            width: self.width,
            channels: 1,
            data,
        }
    }

    /// Single channel `ch` as a one-channel image.
    pub fn channel(&self, ch: usize) -> ImageF {
        assert!(ch < self.channels, "channel {ch} out of range");
        ImageF {
            height: self.height,
            width: self.width,
            channels: 1,
            data: self
                .data
                .iter()
                .skip(ch)
                .step_by(self.channels)
                .copied()
                .collect(),
        }
    }

    // Used by modules that build outputs with a known-valid layout.
    pub(crate) fn from_parts(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width * channels);
        ImageF {
            height,
            width,
            channels,
            data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    /// Differences along a row (column index advances).
    Horizontal,
    /// Differences along a column (row index advances).
    Vertical,
}

/// Order-`n` forward differences of an image along one axis.
///
/// The extent along `axis` is `n` smaller than the source image.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    height: usize,
    width: usize,
    channels: usize,
    order: usize,
    axis: Axis,
    data: Vec<f64>,
}

impl GradientField {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[(row * self.width + col) * self.channels + ch]
    }

    /// Samples of channel `ch`, in row-major order.
    pub fn channel_values(&self, ch: usize) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().skip(ch).step_by(self.channels).copied()
    }
}

/// Order-`n` gradient `x(p) - x(p+1)` applied recursively.
pub fn gradient(img: &ImageF, order: usize, axis: Axis) -> Result<GradientField> {
    if order == 0 {
        return Err(Error::InvalidParameter(
            "gradient order must be >= 1".into(),
        ));
    }
    let extent = match axis {
        Axis::Horizontal => img.width,
        Axis::Vertical => img.height,
    };
    if extent <= order {
        return Err(Error::ImageTooSmall { extent, order });
    }

    let channels = img.channels;
    let (mut h, mut w) = (img.height, img.width);
    let mut cur = img.data.clone();
    for _ in 0..order {
        let (nh, nw) = match axis {
            Axis::Horizontal => (h, w - 1),
            Axis::Vertical => (h - 1, w),
        };
        let (dr, dc) = match axis {
            Axis::Horizontal => (0, 1),
            Axis::Vertical => (1, 0),
        };
        let mut next = Vec::with_capacity(nh * nw * channels);
        for r in 0..nh {
            for c in 0..nw {
                let here = (r * w + c) * channels;
                let there = ((r + dr) * w + c + dc) * channels;
                for ch in 0..channels {
                    next.push(cur[here + ch] - cur[there + ch]);
                }
            }
        }
        cur = next;
        h = nh;
        w = nw;
    }

    Ok(GradientField {
        height: h,
        width: w,
        channels,
        order,
        axis,
        data: cur,
    })
}

/// Per-channel arithmetic mean, accumulated in row-major order.
pub fn channel_mean(img: &ImageF) -> Vec<f64> {
    let mut sums = vec![0.0f64; img.channels];
    for px in img.data.chunks_exact(img.channels) {
        for (s, &v) in sums.iter_mut().zip(px) {
            *s += v;
        }
    }
    let n = img.pixel_count() as f64;
    sums.into_iter().map(|s| s / n).collect()
}

/// Mean over every sample of every channel.
pub fn global_mean(img: &ImageF) -> f64 {
    img.data.iter().sum::<f64>() / img.len() as f64
}
