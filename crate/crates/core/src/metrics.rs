//! Full- and no-reference quality metrics.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::image::{channel_mean, gradient, Axis, ImageF};

pub fn mse(a: &ImageF, b: &ImageF) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.len() as f64)
}

/// Peak signal-to-noise ratio in dB for unit-range images; `+inf` when identical.
pub fn psnr(a: &ImageF, b: &ImageF) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / m).log10())
}

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = (0.01 * 1.0) * (0.01 * 1.0);
const SSIM_C2: f64 = (0.03 * 1.0) * (0.03 * 1.0);

/// Normalised 1-D Gaussian taps; the 2-D window is their outer product.
pub fn gaussian_taps(size: usize, sigma: f64) -> Vec<f64> {
    let mid = (size as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - mid).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Valid-mode separable filtering of a single-channel plane.
fn filter_valid(plane: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut horiz = vec![0.0; h * ow];
    for r in 0..h {
        let row = &plane[r * w..(r + 1) * w];
        for c in 0..ow {
            horiz[r * ow + c] = taps.iter().zip(&row[c..c + k]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = taps
                .iter()
                .enumerate()
                .map(|(i, t)| t * horiz[(r + i) * ow + c])
                .sum();
        }
    }
    out
}

fn ssim_plane(a: &[f64], b: &[f64], h: usize, w: usize, taps: &[f64]) -> f64 {
    let sq = |x: &[f64]| x.iter().map(|v| v * v).collect::<Vec<_>>();
    let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let mu_a = filter_valid(a, h, w, taps);
    let mu_b = filter_valid(b, h, w, taps);
    let e_aa = filter_valid(&sq(a), h, w, taps);
    let e_bb = filter_valid(&sq(b), h, w, taps);
    let e_ab = filter_valid(&prod, h, w, taps);

    let mut total = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let var_a = e_aa[i] - ma * ma;
        let var_b = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        let num = (2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2);
        let den = (ma * ma + mb * mb + SSIM_C1) * (var_a + var_b + SSIM_C2);
        total += num / den;
    }
    total / mu_a.len() as f64
}

/// Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, unit dynamic range; mean over valid windows, then over channels.
pub fn ssim(a: &ImageF, b: &ImageF) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let (h, w, ch) = a.shape();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::InvalidParameter(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {h}x{w}"
        )));
    }
    let taps = gaussian_taps(SSIM_WINDOW, SSIM_SIGMA);
    let total: f64 = (0..ch)
        .map(|k| {
            let pa = a.channel(k);
            let pb = b.channel(k);
            ssim_plane(pa.data(), pb.data(), h, w, &taps)
        })
        .sum();
    Ok(total / ch as f64)
}

pub const LOE_MAX_EXTENT: usize = 100;

/// Per-pixel maximum over channels, nearest-neighbour downsampled so that the
/// larger extent is at most [`LOE_MAX_EXTENT`].
pub fn loe_lightness(img: &ImageF) -> (usize, usize, Vec<f64>) {
    let (h, w, ch) = img.shape();
    let longest = h.max(w);
    let (nh, nw) = if longest > LOE_MAX_EXTENT {
        (
            (h * LOE_MAX_EXTENT / longest).max(1),
            (w * LOE_MAX_EXTENT / longest).max(1),
        )
    } else {
        (h, w)
    };
    let pick = |i: usize, n: usize, full: usize| ((i * full + full / 2) / n).min(full - 1);
    let mut out = Vec::with_capacity(nh * nw);
    for r in 0..nh {
        let sr = pick(r, nh, h);
        for c in 0..nw {
            let sc = pick(c, nw, w);
            let px = (0..ch).map(|k| img.get(sr, sc, k));
            out.push(px.fold(f64::NEG_INFINITY, f64::max));
        }
    }
    (nh, nw, out)
}

/// Lightness order error between two lightness maps of equal length.
///
/// For each `p`, counts the `q` where `L(p) >= L(q)` and `Le(p) >= Le(q)` disagree,
/// then averages over `p`. Runs in `O(n log n)`: the disagreement count is
/// `A_p + B_p - 2 C_p` with `A_p = #{q: L(q) <= L(p)}`, `B_p` likewise for `Le`,
/// and `C_p` the joint count, obtained with a Fenwick tree.
pub fn loe_from_lightness(l: &[f64], le: &[f64]) -> f64 {
    let n = l.len();
    assert_eq!(n, le.len());
    if n == 0 {
        return 0.0;
    }

    // Dense ranks so that equal values share a rank.
    let rank = |v: &[f64]| -> Vec<usize> {
        let mut sorted: Vec<f64> = v.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite lightness"));
        sorted.dedup();
        v.iter()
            .map(|x| sorted.partition_point(|s| s < x))
            .collect()
    };
    let rl = rank(l);
    let re = rank(le);

    // count_le[r] = #{q: rank(q) <= r}
    let cumulative = |ranks: &[usize]| -> Vec<usize> {
        let max = ranks.iter().copied().max().unwrap_or(0);
        let mut hist = vec![0usize; max + 1];
        for &r in ranks {
            hist[r] += 1;
        }
        let mut acc = 0;
        hist.iter()
            .map(|&c| {
                acc += c;
                acc
            })
            .collect()
    };
    let cl = cumulative(&rl);
    let ce = cumulative(&re);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (rl[i], re[i]));
    let mut fenwick = vec![0usize; ce.len() + 1];
    let mut joint = vec![0usize; n];
    let mut i = 0;
    while i < n {
        // Insert the whole group sharing this L rank before querying it.
        let mut j = i;
        while j < n && rl[order[j]] == rl[order[i]] {
            let mut k = re[order[j]] + 1;
            while k < fenwick.len() {
                fenwick[k] += 1;
                k += k & k.wrapping_neg();
            }
            j += 1;
        }
        for &p in &order[i..j] {
            let mut k = re[p] + 1;
            let mut s = 0;
            while k > 0 {
                s += fenwick[k];
                k -= k & k.wrapping_neg();
            }
            joint[p] = s;
        }
        i = j;
    }

    let total: usize = (0..n).map(|p| cl[rl[p]] + ce[re[p]] - 2 * joint[p]).sum();
    total as f64 / n as f64
}

pub fn loe(original: &ImageF, enhanced: &ImageF) -> Result<f64> {
    original.ensure_same_shape(enhanced)?;
    let (_, _, l) = loe_lightness(original);
    let (_, _, le) = loe_lightness(enhanced);
    Ok(loe_from_lightness(&l, &le))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffMap {
    /// `10 (s1 - s2)^2`, clamped to `[0, 1]`.
    pub map: ImageF,
    pub mse: f64,
}

pub fn diff_heatmap(s1: &ImageF, s2: &ImageF) -> Result<DiffMap> {
    let map = s1.zip_map(s2, |a, b| (10.0 * (a - b) * (a - b)).min(1.0))?;
    Ok(DiffMap {
        map,
        mse: mse(s1, s2)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IllumDiagnostics {
    /// Mean absolute first-order gradient of `y`, both axes pooled.
    pub tv_y: f64,
    /// Mean squared difference of the per-channel mean-centred images.
    pub shifted_fidelity: f64,
}

pub fn illum_diagnostics(x: &ImageF, y: &ImageF) -> Result<IllumDiagnostics> {
    x.ensure_same_shape(y)?;
    let (mut abs_sum, mut count) = (0.0, 0usize);
    for axis in [Axis::Horizontal, Axis::Vertical] {
        if let Ok(g) = gradient(y, 1, axis) {
            abs_sum += g.data().iter().map(|v| v.abs()).sum::<f64>();
            count += g.data().len();
        }
    }
    let tv_y = if count == 0 {
        0.0
    } else {
        abs_sum / count as f64
    };

    let mx = channel_mean(x);
    let my = channel_mean(y);
    let ch = x.channels();
    let sum: f64 = x
        .data()
        .iter()
        .zip(y.data())
        .enumerate()
        .map(|(i, (a, b))| {
            let k = i % ch;
            let d = (a - mx[k]) - (b - my[k]);
            d * d
        })
        .sum();
    Ok(IllumDiagnostics {
        tv_y,
        shifted_fidelity: sum / x.len() as f64,
    })
}

fn ser_psnr<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) if x.is_infinite() && *x > 0.0 => s.serialize_str("inf"),
        Some(x) => s.serialize_f64(*x),
        None => s.serialize_none(),
    }
}

/// Named metric values for one image pair. Absent metrics are omitted from JSON,
/// and an infinite PSNR is written as the string `"inf"`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricsReport {
    #[serde(serialize_with = "ser_psnr", skip_serializing_if = "Option::is_none")]
    pub psnr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ssim: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loe: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tv_y: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shifted_fidelity: Option<f64>,
}
