//! RGB conversions on `[0, 1]` channel values.

use crate::error::{EqwsError, Result};
use crate::image::ImageField;

fn require_rgb(img: &ImageField) -> Result<()> {
    if img.channels() != 3 {
        return Err(EqwsError::InvalidParams(format!(
            "expected 3 channels, got {}",
            img.channels()
        )));
    }
    Ok(())
}

/// `0.299 R + 0.587 G + 0.114 B`
pub fn rgb_to_grey(img: &ImageField) -> Result<ImageField> {
    require_rgb(img)?;
    let (r, g, b) = (img.channel(0), img.channel(1), img.channel(2));
    let data = (0..r.len())
        .map(|i| 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i])
        .collect();
    ImageField::new(img.side(), data)
}

/// Full-range (JPEG) YCbCr with chroma offset 0.5.
pub fn rgb_to_ycbcr(img: &ImageField) -> Result<ImageField> {
    require_rgb(img)?;
    let (r, g, b) = (img.channel(0), img.channel(1), img.channel(2));
    let n = r.len();
    let mut out = Vec::with_capacity(3 * n);
    out.extend((0..n).map(|i| 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i]));
    out.extend((0..n).map(|i| 0.5 - 0.168736 * r[i] - 0.331264 * g[i] + 0.5 * b[i]));
    out.extend((0..n).map(|i| 0.5 + 0.5 * r[i] - 0.418688 * g[i] - 0.081312 * b[i]));
    ImageField::with_channels(img.side(), 3, out)
}
