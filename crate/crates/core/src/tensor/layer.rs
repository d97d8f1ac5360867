use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerKind {
    Conv2D,
    TConv2D,
    Lstm,
    BatchNorm,
    LeakyRelu,
    FrequencyFlatten,
    TimeFlip,
    Add,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    None,
    LeakyRelu,
}

/// One row of the layer table.
///
/// `pad_or_crop` is `(top, bottom, left, right)`: top/bottom act on the
/// frequency axis, left/right on the time axis. Convolutions zero-pad;
/// transposed convolutions crop their full output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    pub filters_or_units: usize,
    pub kernel: (usize, usize),
    pub stride: (usize, usize),
    pub pad_or_crop: [usize; 4],
    pub activation: Activation,
}

impl LayerSpec {
    pub fn conv2d(
        name: &str,
        filters: usize,
        kernel: (usize, usize),
        stride: (usize, usize),
        pad: [usize; 4],
    ) -> Self {
        LayerSpec {
            name: name.to_owned(),
            kind: LayerKind::Conv2D,
            filters_or_units: filters,
            kernel,
            stride,
            pad_or_crop: pad,
            activation: Activation::None,
        }
    }

    /// Stride-1 convolution whose padding preserves both extents (odd kernels).
    pub fn conv2d_same(name: &str, filters: usize, kernel: (usize, usize)) -> Self {
        let (kf, kt) = kernel;
        Self::conv2d(
            name,
            filters,
            kernel,
            (1, 1),
            [(kf - 1) / 2, kf / 2, (kt - 1) / 2, kt / 2],
        )
    }

    pub fn tconv2d(
        name: &str,
        filters: usize,
        kernel: (usize, usize),
        stride: (usize, usize),
        crop: [usize; 4],
    ) -> Self {
        LayerSpec {
            kind: LayerKind::TConv2D,
            ..Self::conv2d(name, filters, kernel, stride, crop)
        }
    }

    pub fn lstm(name: &str, units: usize) -> Self {
        LayerSpec {
            name: name.to_owned(),
            kind: LayerKind::Lstm,
            filters_or_units: units,
            kernel: (1, 1),
            stride: (1, 1),
            pad_or_crop: [0; 4],
            activation: Activation::None,
        }
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| {
            Err(Error::Config(format!("layer {}: {what}", self.name)))
        };
        if self.filters_or_units == 0 {
            return bad("filters/units must be positive");
        }
        if self.kernel.0 == 0 || self.kernel.1 == 0 {
            return bad("kernel extents must be >= 1");
        }
        if self.stride.0 == 0 || self.stride.1 == 0 {
            return bad("stride components must be >= 1");
        }
        Ok(())
    }

    /// Output `(freq, time)` extents for an input of `(freq, time)`.
    pub fn output_extent(&self, lf: usize, lt: usize) -> Result<(usize, usize)> {
        self.validate()?;
        let [top, bottom, left, right] = self.pad_or_crop;
        let (kf, kt) = self.kernel;
        let (sf, st) = self.stride;
        match self.kind {
            LayerKind::Conv2D => {
                let pf = lf + top + bottom;
                let pt = lt + left + right;
                if pf < kf || pt < kt {
                    return Err(Error::Config(format!(
                        "layer {}: padded input ({pf}, {pt}) smaller than kernel ({kf}, {kt})",
                        self.name
                    )));
                }
                Ok(((pf - kf) / sf + 1, (pt - kt) / st + 1))
            }
            LayerKind::TConv2D => {
                let ff = (lf - 1) * sf + kf;
                let ft = (lt - 1) * st + kt;
                if top + bottom >= ff || left + right >= ft {
                    return Err(Error::Config(format!(
                        "layer {}: crop {:?} consumes the whole ({ff}, {ft}) output",
                        self.name, self.pad_or_crop
                    )));
                }
                Ok((ff - top - bottom, ft - left - right))
            }
            LayerKind::FrequencyFlatten => Ok((1, lt)),
            _ => Ok((lf, lt)),
        }
    }

    /// Trainable parameter count given the number of input channels.
    pub fn param_count(&self, in_channels: usize) -> usize {
        let (kf, kt) = self.kernel;
        let c = self.filters_or_units;
        match self.kind {
            LayerKind::Conv2D | LayerKind::TConv2D => kf * kt * in_channels * c + c,
            LayerKind::Lstm => 4 * (in_channels * c + c * c + c),
            LayerKind::BatchNorm => 2 * c,
            _ => 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_padding_for_odd_kernels() {
        assert_eq!(LayerSpec::conv2d_same("s", 2, (1, 3)).pad_or_crop, [0, 0, 1, 1]);
        assert_eq!(LayerSpec::conv2d_same("s", 2, (3, 3)).pad_or_crop, [1, 1, 1, 1]);
    }

    #[test]
    fn zero_stride_rejected() {
        let spec = LayerSpec::conv2d("c", 1, (1, 1), (0, 1), [0; 4]);
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn oversized_kernel_rejected() {
        let spec = LayerSpec::conv2d("c", 1, (6, 3), (1, 1), [0; 4]);
        assert!(spec.output_extent(4, 14).is_err());
    }

    #[test]
    fn oversized_crop_rejected() {
        let spec = LayerSpec::tconv2d("t", 1, (1, 1), (1, 1), [1, 0, 0, 0]);
        assert!(spec.output_extent(1, 4).is_err());
    }
}
