use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ImageTensor, CHANNELS};
use crate::error::{Error, Result};

/// Bilinear resize with corner-aligned sampling: output corners map onto
/// input corners, and a single output row/column samples the input centre.
pub fn resize_bilinear(img: &ImageTensor, out_h: usize, out_w: usize) -> Result<ImageTensor> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::InvalidArgument(format!("output size {out_h}x{out_w} must be positive")));
    }
    let coord = |i: usize, out: usize, inp: usize| -> f64 {
        if out == 1 {
            (inp - 1) as f64 / 2.0
        } else {
            i as f64 * (inp - 1) as f64 / (out - 1) as f64
        }
    };
    let mut data = Vec::with_capacity(out_h * out_w * CHANNELS);
    for y in 0..out_h {
        let sy = coord(y, out_h, img.height);
        for x in 0..out_w {
            let sx = coord(x, out_w, img.width);
            for c in 0..CHANNELS {
                data.push(sample(img, sy, sx, c).clamp(0.0, 1.0));
            }
        }
    }
    ImageTensor::new(out_h, out_w, data)
}

/// Bilinear sample at a real-valued position inside the image.
fn sample(img: &ImageTensor, y: f64, x: f64, c: usize) -> f64 {
    let y = y.clamp(0.0, (img.height - 1) as f64);
    let x = x.clamp(0.0, (img.width - 1) as f64);
    let y0 = y.floor() as usize;
    let x0 = x.floor() as usize;
    let y1 = (y0 + 1).min(img.height - 1);
    let x1 = (x0 + 1).min(img.width - 1);
    let fy = y - y0 as f64;
    let fx = x - x0 as f64;
    let top = img.get(y0, x0, c) * (1.0 - fx) + img.get(y0, x1, c) * fx;
    let bottom = img.get(y1, x0, c) * (1.0 - fx) + img.get(y1, x1, c) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Rotates by `degrees` (counter-clockwise as displayed) and scales by
/// `scale` about the image centre, keeping the input size. Output pixels
/// whose source falls outside the frame are zero.
pub fn rotate_scale(img: &ImageTensor, degrees: f64, scale: f64) -> Result<ImageTensor> {
    if !(scale > 0.0 && scale.is_finite()) || !degrees.is_finite() {
        return Err(Error::InvalidArgument(format!("bad rotation {degrees} or scale {scale}")));
    }
    let (h, w) = (img.height, img.width);
    let cy = (h - 1) as f64 / 2.0;
    let cx = (w - 1) as f64 / 2.0;
    let (sin, cos) = degrees.to_radians().sin_cos();
    const EDGE: f64 = 1e-9;
    let mut data = Vec::with_capacity(img.data.len());
    for y in 0..h {
        for x in 0..w {
            // y grows downwards, so a visual counter-clockwise turn maps the
            // output offset back through the inverse rotation below
            let dy = y as f64 - cy;
            let dx = x as f64 - cx;
            let sx = (cos * dx - sin * dy) / scale + cx;
            let sy = (sin * dx + cos * dy) / scale + cy;
            let inside = sy >= -EDGE && sy <= (h - 1) as f64 + EDGE && sx >= -EDGE && sx <= (w - 1) as f64 + EDGE;
            for c in 0..CHANNELS {
                data.push(if inside { sample(img, sy, sx, c).clamp(0.0, 1.0) } else { 0.0 });
            }
        }
    }
    ImageTensor::new(h, w, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    /// Maximum absolute rotation angle.
    pub rotation_degrees: f64,
    pub scale_range: [f64; 2],
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            rotation_degrees: 15.0,
            scale_range: [0.9, 1.1],
            seed: 42,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=180.0).contains(&self.rotation_degrees) {
            return Err(Error::InvalidArgument(format!(
                "rotation {} must lie in [0, 180]",
                self.rotation_degrees
            )));
        }
        let [lo, hi] = self.scale_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale range [{lo}, {hi}] must be positive and ordered")));
        }
        Ok(())
    }
}

/// Random rotation in `±rotation_degrees` and scale in `scale_range`.
pub fn augment<R: Rng + ?Sized>(img: &ImageTensor, cfg: &AugmentConfig, rng: &mut R) -> Result<ImageTensor> {
    cfg.validate()?;
    let angle = if cfg.rotation_degrees > 0.0 {
        rng.random_range(-cfg.rotation_degrees..=cfg.rotation_degrees)
    } else {
        0.0
    };
    let [lo, hi] = cfg.scale_range;
    let scale = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    if angle == 0.0 && scale == 1.0 {
        return Ok(img.clone());
    }
    rotate_scale(img, angle, scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gray(h: usize, w: usize, v: &[f64]) -> ImageTensor {
        ImageTensor::from_gray(h, w, v).unwrap()
    }

    #[test]
    fn resize_identity() {
        let img = gray(2, 3, &[0.0, 0.2, 0.4, 0.6, 0.8, 1.0]);
        let out = resize_bilinear(&img, 2, 3).unwrap();
        for (a, b) in out.data().iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn resize_to_single_pixel_samples_centre() {
        let img = gray(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let out = resize_bilinear(&img, 1, 1).unwrap();
        assert_eq!(out.data(), &[0.5, 0.5, 0.5]);
    }

    #[test]
    fn resize_shapes() {
        let img = ImageTensor::new(768, 768, vec![0.25; 768 * 768 * 3]).unwrap();
        let out = resize_bilinear(&img, 64, 64).unwrap();
        assert_eq!((out.height(), out.width()), (64, 64));
        assert!(resize_bilinear(&img, 0, 64).is_err());
    }

    #[test]
    fn resize_upsamples_linearly() {
        let img = gray(1, 2, &[0.0, 1.0]);
        let out = resize_bilinear(&img, 1, 5).unwrap();
        assert_eq!(out.channel(1), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn identity_augment() {
        let img = gray(3, 3, &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]);
        let cfg = AugmentConfig {
            rotation_degrees: 0.0,
            scale_range: [1.0, 1.0],
            seed: 0,
        };
        let out = augment(&img, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        for (a, b) in out.data().iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-9);
        }
        let out = rotate_scale(&img, 0.0, 1.0).unwrap();
        for (a, b) in out.data().iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn quarter_turn_matches_hand_rotation() {
        // counter-clockwise quarter turn of
        // a b c      c f i
        // d e f  ->  b e h
        // g h i      a d g
        let v = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
        let expected = [0.3, 0.6, 0.9, 0.2, 0.5, 0.8, 0.1, 0.4, 0.7];
        let out = rotate_scale(&gray(3, 3, &v), 90.0, 1.0).unwrap();
        for (a, b) in out.channel(0).iter().zip(expected) {
            assert!((a - b).abs() < 1e-6, "{:?}", out.channel(0));
        }
    }

    #[test]
    fn out_of_frame_pixels_are_zero() {
        let img = ImageTensor::new(4, 4, vec![1.0; 48]).unwrap();
        let out = rotate_scale(&img, 45.0, 1.0).unwrap();
        assert_eq!(out.get(0, 0, 0), 0.0);
        assert!(out.get(1, 1, 0) > 0.0);
        let shrunk = rotate_scale(&img, 0.0, 0.5).unwrap();
        assert_eq!(shrunk.get(0, 0, 0), 0.0);
    }

    #[test]
    fn augment_is_seeded() {
        let img = gray(4, 4, &(0..16).map(|i| i as f64 / 15.0).collect::<Vec<_>>());
        let cfg = AugmentConfig::default();
        let a = augment(&img, &cfg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = augment(&img, &cfg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        let mut cfg = AugmentConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.rotation_degrees = 181.0;
        assert!(cfg.validate().is_err());
        cfg = AugmentConfig {
            scale_range: [1.1, 0.9],
            ..AugmentConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.scale_range = [0.0, 1.0];
        assert!(cfg.validate().is_err());
    }

    proptest! {
        #[test]
        fn transforms_keep_range_and_shape(
            h in 1usize..7, w in 1usize..7, oh in 1usize..9, ow in 1usize..9,
            seed in 0u64..500, deg in 0.0f64..180.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vals: Vec<f64> = (0..h * w * 3).map(|_| rng.random::<f64>()).collect();
            let img = ImageTensor::new(h, w, vals).unwrap();
            let r = resize_bilinear(&img, oh, ow).unwrap();
            prop_assert_eq!((r.height(), r.width()), (oh, ow));
            let cfg = AugmentConfig { rotation_degrees: deg, scale_range: [0.5, 1.5], seed };
            let a = augment(&img, &cfg, &mut rng).unwrap();
            prop_assert_eq!((a.height(), a.width()), (h, w));
            prop_assert!(a.data().iter().chain(r.data()).all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
