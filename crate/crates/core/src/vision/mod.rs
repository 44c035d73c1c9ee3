//! Image ingestion for the lung and brain pipelines: class-per-folder
//! scanning, PNG/JPEG decoding to `[0, 1]` RGB, bilinear resizing, random
//! rotation/scale augmentation and label binarization.

mod scan;
mod transform;

use std::path::Path;

pub use scan::{binarize_labels, scan_image_dir, scan_image_dir_excluding, ImageFolderDataset, IMAGE_EXTENSIONS};
pub use transform::{augment, resize_bilinear, rotate_scale, AugmentConfig};

use crate::error::{Error, Result};
use crate::neuralnet::Tensor;

/// An RGB image, row-major HWC, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

pub const CHANNELS: usize = 3;

impl ImageTensor {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidArgument(format!("image size {height}x{width} must be positive")));
        }
        if data.len() != height * width * CHANNELS {
            return Err(Error::shape(height * width * CHANNELS, data.len()));
        }
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument("pixel values must lie in [0, 1]".into()));
        }
        Ok(ImageTensor { height, width, data })
    }

    /// Replicates a single-channel image across RGB.
    pub fn from_gray(height: usize, width: usize, gray: &[f64]) -> Result<Self> {
        let data = gray.iter().flat_map(|&v| [v; CHANNELS]).collect();
        ImageTensor::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * CHANNELS + c]
    }

    /// One channel as a row-major plane.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.data.iter().skip(c).step_by(CHANNELS).copied().collect()
    }
}

/// Decodes PNG or JPEG bytes. Grayscale and alpha inputs are converted to RGB.
pub fn decode_image(bytes: &[u8]) -> Result<ImageTensor> {
    let format = image::guess_format(bytes).map_err(|e| Error::Image(e.to_string()))?;
    if !matches!(format, image::ImageFormat::Png | image::ImageFormat::Jpeg) {
        return Err(Error::Image(format!("unsupported image format {format:?}; expected PNG or JPEG")));
    }
    let img = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| Error::Image(e.to_string()))?
        .to_rgb8();
    let (w, h) = img.dimensions();
    let data = img.into_raw().into_iter().map(|v| f64::from(v) / 255.0).collect();
    ImageTensor::new(h as usize, w as usize, data)
}

pub fn load_image(path: &Path) -> Result<ImageTensor> {
    let bytes = std::fs::read(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    decode_image(&bytes).map_err(|e| Error::Image(format!("{}: {e}", path.display())))
}

/// Decodes and resizes each file, stacking the results into `[N, H, W, 3]`.
pub fn load_batch<P: AsRef<Path>>(paths: &[P], height: usize, width: usize) -> Result<Tensor> {
    let mut data = Vec::with_capacity(paths.len() * height * width * CHANNELS);
    for p in paths {
        let img = load_image(p.as_ref())?;
        data.extend(resize_bilinear(&img, height, width)?.into_data());
    }
    Tensor::new(&[paths.len(), height, width, CHANNELS], data)
}


#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn decode_png_and_gray_replication() {
        let gray = image::GrayImage::from_fn(3, 2, |x, y| image::Luma([(x * 100 + y * 10) as u8]));
        let mut bytes = Vec::new();
        gray.write_to(&mut Cursor::new(&mut bytes), image::ImageFormat::Png).unwrap();
        let img = decode_image(&bytes).unwrap();
        assert_eq!((img.height(), img.width()), (2, 3));
        assert_eq!(img.get(1, 2, 0), 210.0 / 255.0);
        assert_eq!(img.channel(0), img.channel(2));
        assert!(img.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn decode_jpeg() {
        let rgb = image::RgbImage::from_pixel(8, 8, image::Rgb([255, 255, 255]));
        let mut bytes = Vec::new();
        rgb.write_to(&mut Cursor::new(&mut bytes), image::ImageFormat::Jpeg).unwrap();
        let img = decode_image(&bytes).unwrap();
        assert_eq!((img.height(), img.width()), (8, 8));
        assert!(img.data().iter().all(|&v| v > 0.95));
    }

    #[test]
    fn rejects_other_formats() {
        assert!(matches!(decode_image(b"GIF89a\x01\x00\x01\x00"), Err(Error::Image(_))));
        assert!(matches!(decode_image(b"not an image"), Err(Error::Image(_))));
    }

    #[test]
    fn new_validates() {
        assert!(ImageTensor::new(1, 1, vec![0.0, 0.5, 1.0]).is_ok());
        assert!(ImageTensor::new(1, 1, vec![0.0, 0.5, 1.5]).is_err());
        assert!(ImageTensor::new(1, 2, vec![0.0; 3]).is_err());
        assert!(ImageTensor::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn load_batch_stacks_resized_images() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.png");
        let b = dir.path().join("b.png");
        testutil::write_png(&a, 10, 6, [255, 0, 0]);
        testutil::write_png(&b, 4, 4, [0, 0, 255]);
        let t = load_batch(&[a, b], 8, 8).unwrap();
        assert_eq!(t.shape(), &[2, 8, 8, 3]);
        assert_eq!(&t.item(0)[..3], &[1.0, 0.0, 0.0]);
        assert_eq!(&t.item(1)[..3], &[0.0, 0.0, 1.0]);
    }
}
