//! PNG / JPEG raster I/O through the `image` crate.

use std::io::Cursor;
use std::path::Path;

use image::codecs::jpeg::JpegEncoder;
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};

use crate::error::{Error, Result};
use crate::image::ImageU8;

/// Read a PNG or JPEG. Grayscale files stay single-channel; anything with
/// color (or alpha) becomes RGB.
pub fn read_image(path: impl AsRef<Path>) -> Result<ImageU8> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|source| Error::Codec {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_png(path: impl AsRef<Path>, img: &ImageU8) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_png(img).map_err(|source| Error::Codec {
        path: path.to_path_buf(),
        source,
    })?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_png(img: &ImageU8) -> Result<Vec<u8>, image::ImageError> {
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out).write_image(
        img.data(),
        img.width() as u32,
        img.height() as u32,
        color_type(img),
    )?;
    Ok(out)
}

/// Baseline JPEG at `quality` (1..=100).
pub fn encode_jpeg(img: &ImageU8, quality: u8) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    JpegEncoder::new_with_quality(&mut out, quality)
        .write_image(
            img.data(),
            img.width() as u32,
            img.height() as u32,
            color_type(img),
        )
        .map_err(Error::Jpeg)?;
    Ok(out)
}

pub fn decode_jpeg(bytes: &[u8]) -> Result<ImageU8> {
    let dynimg = image::load(Cursor::new(bytes), ImageFormat::Jpeg).map_err(Error::Jpeg)?;
    from_dynamic(dynimg).map_err(Error::Jpeg)
}

fn decode(bytes: &[u8]) -> Result<ImageU8, image::ImageError> {
    from_dynamic(image::load_from_memory(bytes)?)
}

fn from_dynamic(dynimg: DynamicImage) -> Result<ImageU8, image::ImageError> {
    let (w, h) = (dynimg.width() as usize, dynimg.height() as usize);
    let (channels, data) = if dynimg.color().has_color() || dynimg.color().has_alpha() {
        (3, dynimg.into_rgb8().into_raw())
    } else {
        (1, dynimg.into_luma8().into_raw())
    };
    ImageU8::new(w, h, channels, data).map_err(|e| {
        image::ImageError::Parameter(image::error::ParameterError::from_kind(
            image::error::ParameterErrorKind::Generic(e.to_string()),
        ))
    })
}

fn color_type(img: &ImageU8) -> ExtendedColorType {
    if img.channels() == 3 {
        ExtendedColorType::Rgb8
    } else {
        ExtendedColorType::L8
    }
}
