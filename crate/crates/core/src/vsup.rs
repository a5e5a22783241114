//! Value-suppressing uncertainty palette quantization.
//!
//! The palette is a tree: layer 0 is a single fully suppressed bin, and each
//! deeper layer splits every bin of the previous one `branching` ways. Low
//! uncertainty selects a deep layer (fine value resolution), high
//! uncertainty a shallow one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PALETTES: [&str; 6] = [
    "viridis",
    "cividis",
    "greyscale",
    "inferno",
    "plasma",
    "magma",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VsupError {
    #[error("layers must be at least 1, got {0}")]
    Layers(u32),
    #[error("branching must be at least 2, got {0}")]
    Branching(u32),
    #[error("palette tree too large: {0} leaf bins")]
    TooManyBins(u64),
    #[error("unknown palette `{0}`")]
    UnknownPalette(String),
}

/// Upper bound on leaf bins; keeps `b^(L-1)` well inside u32.
const MAX_LEAF_BINS: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VsupQuantizer {
    layers: u32,
    branching: u32,
}

impl Default for VsupQuantizer {
    fn default() -> Self {
        Self {
            layers: 4,
            branching: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BinRef {
    pub layer: u32,
    pub bin: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaletteEntry {
    pub bin: BinRef,
    /// Position along the named continuous ramp, in `[0, 1]`.
    pub ramp_position: f64,
    /// 1 keeps full color, 0 is fully suppressed.
    pub suppression_factor: f64,
}

impl VsupQuantizer {
    pub fn new(layers: u32, branching: u32) -> Result<Self, VsupError> {
        if layers < 1 {
            return Err(VsupError::Layers(layers));
        }
        if branching < 2 {
            return Err(VsupError::Branching(branching));
        }
        let leaves = (branching as u64)
            .checked_pow(layers - 1)
            .unwrap_or(u64::MAX);
        if leaves > MAX_LEAF_BINS {
            return Err(VsupError::TooManyBins(leaves));
        }
        Ok(Self { layers, branching })
    }

    pub fn layers(&self) -> u32 {
        self.layers
    }

    pub fn branching(&self) -> u32 {
        self.branching
    }

    pub fn bins_in_layer(&self, layer: u32) -> u32 {
        self.branching.pow(layer)
    }

    /// Inputs outside `[0, 1]` (and NaN, treated as 0) are clamped first.
    pub fn quantize(&self, value_norm: f64, uncertainty: f64) -> BinRef {
        let v = clamp01(value_norm);
        let u = clamp01(uncertainty);
        let top = self.layers - 1;
        let layer = (((1.0 - u) * self.layers as f64).floor() as u32).min(top);
        let bins = self.bins_in_layer(layer);
        let bin = ((v * bins as f64).floor() as u32).min(bins - 1);
        BinRef { layer, bin }
    }

    pub fn suppression_factor(&self, layer: u32) -> f64 {
        if self.layers == 1 {
            1.0
        } else {
            layer as f64 / (self.layers - 1) as f64
        }
    }

    /// Every bin of the tree, layer by layer, with its ramp position (bin
    /// centre) and suppression factor. Colors themselves are left to the UI.
    pub fn palette_table(&self, palette_id: &str) -> Result<Vec<PaletteEntry>, VsupError> {
        if !PALETTES.contains(&palette_id.to_ascii_lowercase().as_str()) {
            return Err(VsupError::UnknownPalette(palette_id.to_owned()));
        }
        let mut out = Vec::new();
        for layer in 0..self.layers {
            let bins = self.bins_in_layer(layer);
            for bin in 0..bins {
                out.push(PaletteEntry {
                    bin: BinRef { layer, bin },
                    ramp_position: (bin as f64 + 0.5) / bins as f64,
                    suppression_factor: self.suppression_factor(layer),
                });
            }
        }
        Ok(out)
    }
}

fn clamp01(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

/// `(v - min) / (max - min)` clamped to `[0, 1]`; 0 when the range is empty.
pub fn normalize_value(v: f64, min: f64, max: f64) -> f64 {
    if max > min {
        clamp01((v - min) / (max - min))
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn quantize_examples() {
        let q = VsupQuantizer::default();
        for v in [0.0, 0.3, 1.0] {
            assert_eq!(q.quantize(v, 1.0), BinRef { layer: 0, bin: 0 });
        }
        assert_eq!(q.quantize(1.0, 0.0), BinRef { layer: 3, bin: 7 });
        // layer = floor(0.5 * 4) = 2, bin = floor(0.3 * 4) = 1
        assert_eq!(q.quantize(0.3, 0.5), BinRef { layer: 2, bin: 1 });
        assert_eq!(q.quantize(-3.0, 7.0), BinRef { layer: 0, bin: 0 });
        assert_eq!(q.quantize(f64::NAN, f64::NAN), BinRef { layer: 3, bin: 0 });
    }

    // Exhaustive lattice oracle computed with integer arithmetic only.
    #[test]
    fn lattice_matches_integer_oracle() {
        let q = VsupQuantizer::default();
        for i in 0..=100u32 {
            for j in 0..=100u32 {
                let layer = ((100 - j) * 4 / 100).min(3);
                let bins = 1u32 << layer;
                let bin = (i * bins / 100).min(bins - 1);
                let got = q.quantize(i as f64 / 100.0, j as f64 / 100.0);
                assert_eq!(
                    got,
                    BinRef { layer, bin },
                    "value {i}/100 uncertainty {j}/100"
                );
            }
        }
    }

    #[test]
    fn constructor_limits() {
        assert_eq!(VsupQuantizer::new(0, 2), Err(VsupError::Layers(0)));
        assert_eq!(VsupQuantizer::new(3, 1), Err(VsupError::Branching(1)));
        assert!(matches!(
            VsupQuantizer::new(40, 3),
            Err(VsupError::TooManyBins(_))
        ));
        let one = VsupQuantizer::new(1, 3).unwrap();
        assert_eq!(one.quantize(0.9, 0.0), BinRef { layer: 0, bin: 0 });
        assert_eq!(one.suppression_factor(0), 1.0);
    }

    #[test]
    fn palette_table_shape() {
        let q = VsupQuantizer::new(3, 3).unwrap();
        let t = q.palette_table("Viridis").unwrap();
        assert_eq!(t.len(), 1 + 3 + 9);
        assert_eq!(t[0].suppression_factor, 0.0);
        assert_eq!(t[0].ramp_position, 0.5);
        assert_eq!(t.last().unwrap().suppression_factor, 1.0);
        let layers: BTreeSet<_> = t.iter().map(|e| e.bin.layer).collect();
        assert_eq!(layers.len(), 3);
        for name in PALETTES {
            assert!(q.palette_table(name).is_ok());
        }
        assert!(q.palette_table("jet").is_err());
    }

    #[test]
    fn normalize() {
        assert_eq!(normalize_value(5.0, 0.0, 10.0), 0.5);
        assert_eq!(normalize_value(5.0, 5.0, 5.0), 0.0);
        assert_eq!(normalize_value(11.0, 0.0, 10.0), 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn monotone(layers in 1u32..6, branching in 2u32..5,
                        v1 in 0.0f64..=1.0, v2 in 0.0f64..=1.0,
                        u1 in 0.0f64..=1.0, u2 in 0.0f64..=1.0) {
                let q = VsupQuantizer::new(layers, branching).unwrap();
                let (lo_u, hi_u) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
                prop_assert!(q.quantize(v1, lo_u).layer >= q.quantize(v1, hi_u).layer);
                let (lo_v, hi_v) = if v1 <= v2 { (v1, v2) } else { (v2, v1) };
                let a = q.quantize(lo_v, u1);
                let b = q.quantize(hi_v, u1);
                prop_assert_eq!(a.layer, b.layer);
                prop_assert!(a.bin <= b.bin);
                prop_assert!(a.bin < q.bins_in_layer(a.layer));
            }
        }
    }
}
