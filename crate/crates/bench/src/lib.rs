//! Shared fixtures for the criterion benches in `benches/`.

use eqws_core::rng::seeded;
use eqws_core::{FilterBank, FilterBankParams, ImageField};
use rand::Rng;

/// Uniform noise on a `side x side` grid.
pub fn noise_image(side: usize, seed: u64) -> ImageField {
    let mut rng = seeded(seed);
    ImageField::new(side, (0..side * side).map(|_| rng.gen::<f64>()).collect()).expect("square image")
}

/// Default bank (`L = 8`, `c = 1`) at `2^jim` pixels.
pub fn default_bank(jim: u32) -> FilterBank {
    FilterBank::build(FilterBankParams {
        log2_size: jim,
        ..Default::default()
    })
    .expect("valid bank")
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixtures_agree_on_size() {
        let bank = super::default_bank(4);
        assert_eq!(super::noise_image(bank.side(), 1).side(), 16);
    }
}
