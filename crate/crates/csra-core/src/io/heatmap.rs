//! Attention-heatmap rasterization: one attention row reshaped to its `h x w`
//! grid, min-max normalized, resized, and written as a binary portable pixmap
//! (P5 grayscale or P6 with a fixed colormap).
//!
//! The whole path is a pure function of its inputs, so output bytes are
//! stable across runs and platforms.

use crate::error::{Error, Result};

/// Interpolation used when resizing the attention grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResizeMode {
    /// Half-pixel-center bilinear interpolation; matches the smooth look of
    /// published score maps.
    Bilinear,
    /// Nearest neighbor; keeps cell boundaries sharp, useful for debugging.
    Nearest,
}

impl std::str::FromStr for ResizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bilinear" => Ok(ResizeMode::Bilinear),
            "nearest" => Ok(ResizeMode::Nearest),
            _ => Err(Error::InvalidParameter {
                message: format!("unknown resize mode {s:?} (expected bilinear or nearest)"),
            }),
        }
    }
}

/// Output pixel format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatmapFormat {
    /// P5 binary graymap.
    Gray,
    /// P6 binary pixmap through the fixed thermal colormap below.
    Color,
}

impl std::str::FromStr for HeatmapFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gray" | "grey" => Ok(HeatmapFormat::Gray),
            "color" | "colour" => Ok(HeatmapFormat::Color),
            _ => Err(Error::InvalidParameter {
                message: format!("unknown heatmap format {s:?} (expected gray or color)"),
            }),
        }
    }
}

/// Piecewise-linear thermal ramp (dark violet to bright yellow), anchored at
/// five equally spaced stops.
const COLOR_ANCHORS: [[f64; 3]; 5] = [
    [0.0, 0.0, 4.0],
    [87.0, 16.0, 110.0],
    [188.0, 55.0, 84.0],
    [249.0, 142.0, 9.0],
    [252.0, 255.0, 164.0],
];

fn colormap(t: f64) -> [u8; 3] {
    let x = t.clamp(0.0, 1.0) * (COLOR_ANCHORS.len() - 1) as f64;
    let lo = (x.floor() as usize).min(COLOR_ANCHORS.len() - 2);
    let frac = x - lo as f64;
    let mut rgb = [0u8; 3];
    for (c, out) in rgb.iter_mut().enumerate() {
        let v = COLOR_ANCHORS[lo][c] + frac * (COLOR_ANCHORS[lo + 1][c] - COLOR_ANCHORS[lo][c]);
        *out = v.round().clamp(0.0, 255.0) as u8;
    }
    rgb
}

/// Renders one attention row (length `h * w`, row-major) to pixmap bytes of
/// size `out_w x out_h`.
///
/// The row is min-max normalized first; a constant row (min = max) renders as
/// all zeros. Resizing happens on the normalized plane, then each pixel is
/// quantized to `round(v * 255)`.
pub fn render_heatmap(
    row: &[f64],
    h: usize,
    w: usize,
    out_w: usize,
    out_h: usize,
    mode: ResizeMode,
    format: HeatmapFormat,
) -> Result<Vec<u8>> {
    if h == 0 || w == 0 || row.len() != h * w {
        return Err(Error::ShapeMismatch {
            op: "render_heatmap",
            left: vec![h, w],
            right: vec![row.len()],
        });
    }
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidParameter {
            message: format!("output size must be >= 1x1, got {out_w}x{out_h}"),
        });
    }
    if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter {
            message: format!("attention values must be finite, found {bad}"),
        });
    }

    let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let normalized: Vec<f64> = if max > min {
        row.iter().map(|v| (v - min) / (max - min)).collect()
    } else {
        vec![0.0; row.len()]
    };

    let plane = resize(&normalized, h, w, out_w, out_h, mode);

    let mut bytes = Vec::with_capacity(out_w * out_h * 3 + 32);
    match format {
        HeatmapFormat::Gray => {
            bytes.extend_from_slice(format!("P5\n{out_w} {out_h}\n255\n").as_bytes());
            bytes.extend(plane.iter().map(|&v| (v * 255.0).round() as u8));
        }
        HeatmapFormat::Color => {
            bytes.extend_from_slice(format!("P6\n{out_w} {out_h}\n255\n").as_bytes());
            for &v in &plane {
                bytes.extend_from_slice(&colormap(v));
            }
        }
    }
    Ok(bytes)
}

fn resize(src: &[f64], h: usize, w: usize, out_w: usize, out_h: usize, mode: ResizeMode) -> Vec<f64> {
    let mut out = Vec::with_capacity(out_w * out_h);
    let sx = w as f64 / out_w as f64;
    let sy = h as f64 / out_h as f64;
    for dy in 0..out_h {
        for dx in 0..out_w {
            let v = match mode {
                ResizeMode::Nearest => {
                    let x = (((dx as f64 + 0.5) * sx).floor() as usize).min(w - 1);
                    let y = (((dy as f64 + 0.5) * sy).floor() as usize).min(h - 1);
                    src[y * w + x]
                }
                ResizeMode::Bilinear => {
                    let fx = ((dx as f64 + 0.5) * sx - 0.5).clamp(0.0, (w - 1) as f64);
                    let fy = ((dy as f64 + 0.5) * sy - 0.5).clamp(0.0, (h - 1) as f64);
                    let x0 = fx.floor() as usize;
                    let y0 = fy.floor() as usize;
                    let x1 = (x0 + 1).min(w - 1);
                    let y1 = (y0 + 1).min(h - 1);
                    let tx = fx - x0 as f64;
                    let ty = fy - y0 as f64;
                    let top = (1.0 - tx) * src[y0 * w + x0] + tx * src[y0 * w + x1];
                    let bottom = (1.0 - tx) * src[y1 * w + x0] + tx * src[y1 * w + x1];
                    (1.0 - ty) * top + ty * bottom
                }
            };
            out.push(v);
        }
    }
    out
}
