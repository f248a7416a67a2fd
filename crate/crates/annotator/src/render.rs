//! Feature maps as PNG images.
//!
//! A map with `rows x cols` cells becomes an RGB image of width
//! `cols * scale` and height `rows * scale`; row 0 (lowest frequency or
//! first scattering path) is drawn at the bottom. Cell values are
//! log-scaled, stretched to the map's own min..max and colored with a fixed
//! viridis-like ramp. A constant map renders as a single color.

use pcg_core::features::{FeatureKind, FeatureMap, FeatureParams, LOG_FLOOR};

pub const MAX_SCALE: u32 = 8;

const RAMP: [[f64; 3]; 9] = [
    [68.0, 1.0, 84.0],
    [71.0, 44.0, 122.0],
    [59.0, 81.0, 139.0],
    [44.0, 113.0, 142.0],
    [33.0, 144.0, 141.0],
    [39.0, 173.0, 129.0],
    [92.0, 200.0, 99.0],
    [170.0, 220.0, 50.0],
    [253.0, 231.0, 37.0],
];

/// Color of `t` in [0, 1].
pub fn colormap(t: f64) -> [u8; 3] {
    let x = t.clamp(0.0, 1.0) * (RAMP.len() - 1) as f64;
    let i = (x.floor() as usize).min(RAMP.len() - 2);
    let f = x - i as f64;
    let mut out = [0u8; 3];
    for (c, o) in out.iter_mut().enumerate() {
        *o = (RAMP[i][c] + f * (RAMP[i + 1][c] - RAMP[i][c])).round() as u8;
    }
    out
}

/// Log-domain values of `map`. Scattering maps that are already log
/// compressed pass through.
pub fn log_values(map: &FeatureMap, params: &FeatureParams) -> Vec<f64> {
    if map.kind == FeatureKind::Wst && params.wst_log {
        map.data.clone()
    } else {
        map.data.iter().map(|v| v.max(LOG_FLOOR).ln()).collect()
    }
}

pub fn render_png(map: &FeatureMap, params: &FeatureParams, scale: u32) -> Vec<u8> {
    let scale = scale.clamp(1, MAX_SCALE) as usize;
    let values = log_values(map, params);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi - lo > 1e-12 { hi - lo } else { f64::INFINITY };

    let (w, h) = (map.cols * scale, map.rows * scale);
    let mut rgb = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        let row = map.rows - 1 - y / scale;
        for x in 0..w {
            let v = values[row * map.cols + x / scale];
            rgb.extend_from_slice(&colormap((v - lo) / span));
        }
    }

    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, w as u32, h as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().expect("in-memory png header");
        writer.write_image_data(&rgb).expect("in-memory png data");
    }
    out
}
