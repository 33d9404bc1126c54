//! Error-map rendering: jet-palette PNG heatmaps with a caller-fixed scale
//! so maps from different methods stay visually comparable.

use crate::error::{Error, Result};
use crate::field::{Image, Mask};
use std::path::Path;

/// Classic jet palette. `t` is clamped to `[0, 1]`.
pub fn jet(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let ch = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    [
        ch(1.5 - (4.0 * t - 3.0).abs()),
        ch(1.5 - (4.0 * t - 2.0).abs()),
        ch(1.5 - (4.0 * t - 1.0).abs()),
    ]
}

/// Writes `image` as a jet heatmap PNG. Values map linearly from
/// `[lo, hi]` onto the palette; pixels outside `mask` render black.
pub fn write_heatmap(
    path: &Path,
    image: &Image,
    lo: f64,
    hi: f64,
    mask: Option<&Mask>,
) -> Result<()> {
    if !(hi > lo) {
        return Err(Error::validation(format!(
            "heatmap scale [{lo}, {hi}] is empty"
        )));
    }
    if let Some(m) = mask {
        if !m.same_dims(image) {
            return Err(Error::validation("heatmap mask dimension mismatch"));
        }
    }

    let (w, h) = (image.width(), image.height());
    let mut rgb = image::RgbImage::new(w as u32, h as u32);
    for y in 0..h {
        for x in 0..w {
            let keep = mask.map_or(true, |m| *m.at(x, y));
            let px = if keep {
                jet((image.at(x, y) - lo) / (hi - lo))
            } else {
                [0, 0, 0]
            };
            rgb.put_pixel(x as u32, y as u32, image::Rgb(px));
        }
    }
    rgb.save(path)
        .map_err(|e| Error::format(path, format!("png encode failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;

    #[test]
    fn jet_endpoints_and_midpoint() {
        assert_eq!(jet(0.0), [0, 0, 128]); // dark blue
        assert_eq!(jet(0.5), [128, 255, 128]); // green-ish center
        assert_eq!(jet(1.0), [128, 0, 0]); // dark red
        assert_eq!(jet(-5.0), jet(0.0));
        assert_eq!(jet(5.0), jet(1.0));
    }

    #[test]
    fn writes_png_with_mask() {
        let dir = std::env::temp_dir().join("fringe-png-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("heat.png");

        let img = Grid::from_fn(8, 4, |x, _| x as f64);
        let mut mask = Mask::new(8, 4, true);
        mask.set(0, 0, false);
        write_heatmap(&path, &img, 0.0, 7.0, Some(&mask)).unwrap();

        let back = image::open(&path).unwrap().to_rgb8();
        assert_eq!(back.dimensions(), (8, 4));
        assert_eq!(back.get_pixel(0, 0).0, [0, 0, 0]); // masked
        assert_eq!(back.get_pixel(0, 1).0, jet(0.0));
        assert_eq!(back.get_pixel(7, 1).0, jet(1.0));
    }

    #[test]
    fn rejects_empty_scale() {
        let img = Image::new(2, 2, 0.0);
        let path = std::env::temp_dir().join("never.png");
        assert!(write_heatmap(&path, &img, 1.0, 1.0, None).is_err());
    }
}
