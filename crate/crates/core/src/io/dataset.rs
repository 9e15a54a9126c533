//! Labelled image batches and the preprocessing that makes them dyadic.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::cifar::{read_cifar_records, CIFAR_SIDE};
use super::idx::read_idx;
use crate::error::{EqwsError, Result};
use crate::image::ImageField;
use crate::synth::{apodize, embed, resize, rotate, Fill, Interpolation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PreprocessOptions {
    pub pad: u32,
    pub upsample: u32,
    pub interpolation: Interpolation,
    /// 0 leaves the image untouched.
    pub apodize_alpha: f64,
    pub fill: Fill,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            pad: 0,
            upsample: 0,
            interpolation: Interpolation::Bilinear,
            apodize_alpha: 0.0,
            fill: Fill::Zero,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Idx,
    Cifar,
    Memory,
}

/// Enough to rebuild a batch from the files it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Provenance {
    pub format: SourceFormat,
    pub sources: Vec<PathBuf>,
    /// EMNIST stores digits transposed; they are flipped back on load.
    pub transposed: bool,
    /// `(offset, count)` of the rows kept from the source.
    pub subset: Option<(usize, usize)>,
    pub preprocess: Option<PreprocessOptions>,
    pub rotation_angles: Vec<f64>,
    pub rotation_interpolation: Option<Interpolation>,
}

impl Provenance {
    fn new(format: SourceFormat, sources: Vec<PathBuf>) -> Self {
        Provenance {
            format,
            sources,
            transposed: false,
            subset: None,
            preprocess: None,
            rotation_angles: Vec::new(),
            rotation_interpolation: None,
        }
    }
}

/// Images stored `[count][channel][row][column]`, values in `[0, 1]` on load.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBatch {
    pub count: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f64>,
    pub labels: Vec<usize>,
    pub provenance: Provenance,
}

impl DatasetBatch {
    pub fn from_images(images: &[ImageField], labels: Vec<usize>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(pairing(images.len(), labels.len()));
        }
        let first = images
            .first()
            .ok_or_else(|| EqwsError::InvalidParams("empty batch".into()))?;
        let (side, channels) = (first.side(), first.channels());
        let mut pixels = Vec::with_capacity(images.len() * first.data().len());
        for img in images {
            if img.side() != side || img.channels() != channels {
                return Err(EqwsError::InvalidParams("images in a batch must share a shape".into()));
            }
            pixels.extend_from_slice(img.data());
        }
        Ok(DatasetBatch {
            count: images.len(),
            channels,
            height: side,
            width: side,
            pixels,
            labels,
            provenance: Provenance::new(SourceFormat::Memory, Vec::new()),
        })
    }

    fn image_len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn raw(&self, i: usize) -> &[f64] {
        let n = self.image_len();
        &self.pixels[i * n..(i + 1) * n]
    }

    pub fn is_dyadic(&self) -> bool {
        self.height == self.width && self.width.is_power_of_two() && self.width >= 2
    }

    pub fn image(&self, i: usize) -> Result<ImageField> {
        if !self.is_dyadic() {
            return Err(EqwsError::InvalidParams(format!(
                "{}x{} images are not square and dyadic; preprocess first",
                self.width, self.height
            )));
        }
        if i >= self.count {
            return Err(EqwsError::InvalidParams(format!(
                "image {i} outside batch of {}",
                self.count
            )));
        }
        ImageField::with_channels(self.width, self.channels, self.raw(i).to_vec())
    }

    pub fn images(&self) -> Result<Vec<ImageField>> {
        (0..self.count).map(|i| self.image(i)).collect()
    }

    /// Rows `offset..offset + count`, clipped to the batch.
    pub fn subset(&self, offset: usize, count: usize) -> DatasetBatch {
        let start = offset.min(self.count);
        let end = (offset + count).min(self.count);
        let n = self.image_len();
        let mut provenance = self.provenance.clone();
        let base = provenance.subset.map_or(0, |(o, _)| o);
        provenance.subset = Some((base + start, end - start));
        DatasetBatch {
            count: end - start,
            pixels: self.pixels[start * n..end * n].to_vec(),
            labels: self.labels[start..end].to_vec(),
            provenance,
            ..*self
        }
    }

    /// Every image rotated by `angle` degrees, in order.
    pub fn rotated(&self, angle: f64, method: Interpolation) -> Result<DatasetBatch> {
        let images = self
            .images()?
            .iter()
            .map(|img| rotate(img, angle, method))
            .collect::<Result<Vec<_>>>()?;
        let mut out = DatasetBatch::from_images(&images, self.labels.clone())?;
        out.provenance = self.provenance.clone();
        out.provenance.rotation_angles.push(angle);
        out.provenance.rotation_interpolation = Some(method);
        Ok(out)
    }
}

fn pairing(images: usize, labels: usize) -> EqwsError {
    EqwsError::format("idx", format!("pairing mismatch: {images} images but {labels} labels"))
}

/// Loads an IDX image file and its label file.
pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>, transpose: bool) -> Result<DatasetBatch> {
    let img = read_idx(images.as_ref(), Some(3))?;
    let lab = read_idx(labels.as_ref(), Some(1))?;
    let (count, height, width) = (img.dims[0], img.dims[1], img.dims[2]);
    if lab.dims[0] != count {
        return Err(pairing(count, lab.dims[0]));
    }
    let mut pixels = Vec::with_capacity(img.data.len());
    for i in 0..count {
        let src = &img.data[i * height * width..(i + 1) * height * width];
        if transpose {
            for y in 0..width {
                for x in 0..height {
                    pixels.push(src[x * width + y] as f64 / 255.0);
                }
            }
        } else {
            pixels.extend(src.iter().map(|&b| b as f64 / 255.0));
        }
    }
    let (height, width) = if transpose { (width, height) } else { (height, width) };
    let mut provenance = Provenance::new(
        SourceFormat::Idx,
        vec![images.as_ref().to_path_buf(), labels.as_ref().to_path_buf()],
    );
    provenance.transposed = transpose;
    Ok(DatasetBatch {
        count,
        channels: 1,
        height,
        width,
        pixels,
        labels: lab.data.iter().map(|&l| l as usize).collect(),
        provenance,
    })
}

pub fn load_emnist(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<DatasetBatch> {
    load_idx(images, labels, true)
}

pub fn load_cifar(path: impl AsRef<Path>) -> Result<DatasetBatch> {
    let records = read_cifar_records(path.as_ref())?;
    let mut pixels = Vec::with_capacity(records.len() * records[0].pixels.len());
    for r in &records {
        pixels.extend(r.pixels.iter().map(|&b| b as f64 / 255.0));
    }
    Ok(DatasetBatch {
        count: records.len(),
        channels: 3,
        height: CIFAR_SIDE,
        width: CIFAR_SIDE,
        pixels,
        labels: records.iter().map(|r| r.label as usize).collect(),
        provenance: Provenance::new(SourceFormat::Cifar, vec![path.as_ref().to_path_buf()]),
    })
}

/// Side of the canvas an image of `width x height` is embedded in.
pub fn canvas_side(width: usize, height: usize, pad: u32) -> usize {
    width.max(height).max(2).next_power_of_two() << pad
}

/// Embeds each image at the centre of a dyadic canvas, enlarges it by
/// `2^upsample`, then apodizes.
pub fn preprocess(batch: &DatasetBatch, options: &PreprocessOptions) -> Result<DatasetBatch> {
    if !(0.0..=1.0).contains(&options.apodize_alpha) {
        return Err(EqwsError::InvalidParams(format!(
            "apodization alpha must lie in [0, 1], got {}",
            options.apodize_alpha
        )));
    }
    let canvas = canvas_side(batch.width, batch.height, options.pad);
    let target = canvas << options.upsample;
    let plane = batch.width * batch.height;
    let mut images = Vec::with_capacity(batch.count);
    for i in 0..batch.count {
        let raw = batch.raw(i);
        let channels = (0..batch.channels)
            .map(|c| embed(&raw[c * plane..(c + 1) * plane], batch.width, batch.height, canvas))
            .collect::<Result<Vec<_>>>()?;
        let mut img = if channels.len() == 1 {
            channels.into_iter().next().unwrap()
        } else {
            ImageField::stack(&channels)?
        };
        if target != canvas {
            img = resize(&img, target, options.interpolation)?;
        }
        if options.apodize_alpha > 0.0 {
            img = apodize(&img, options.apodize_alpha, options.fill)?;
        }
        images.push(img);
    }
    let mut out = DatasetBatch::from_images(&images, batch.labels.clone())?;
    out.provenance = batch.provenance.clone();
    out.provenance.preprocess = Some(*options);
    Ok(out)
}

/// Rebuilds a batch from its provenance record.
pub fn replay(provenance: &Provenance) -> Result<DatasetBatch> {
    let mut batch = match provenance.format {
        SourceFormat::Idx => {
            let [images, labels] = provenance.sources.as_slice() else {
                return Err(EqwsError::InvalidParams("IDX provenance needs two sources".into()));
            };
            load_idx(images, labels, provenance.transposed)?
        }
        SourceFormat::Cifar => {
            let [path] = provenance.sources.as_slice() else {
                return Err(EqwsError::InvalidParams("CIFAR provenance needs one source".into()));
            };
            load_cifar(path)?
        }
        SourceFormat::Memory => {
            return Err(EqwsError::Unsupported("in-memory batches cannot be replayed".into()));
        }
    };
    if let Some((offset, count)) = provenance.subset {
        batch = batch.subset(offset, count);
    }
    if let Some(options) = &provenance.preprocess {
        batch = preprocess(&batch, options)?;
    }
    if !provenance.rotation_angles.is_empty() {
        let method = provenance.rotation_interpolation.unwrap_or_default();
        for &a in &provenance.rotation_angles {
            batch = batch.rotated(a, method)?;
        }
    }
    Ok(batch)
}
