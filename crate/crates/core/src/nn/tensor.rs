use alloc::vec;
use alloc::vec::Vec;

use crate::error::{ensure, Result};

/// Dense `channels x time x freq` single-precision tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    data: Vec<f32>,
    channels: usize,
    time: usize,
    freq: usize,
}

impl Tensor {
    pub fn new(data: Vec<f32>, channels: usize, time: usize, freq: usize) -> Result<Self> {
        ensure!(
            channels >= 1 && time >= 1 && freq >= 1,
            "tensor dimensions must be positive, got {channels}x{time}x{freq}"
        );
        ensure!(
            data.len() == channels * time * freq,
            "storage of {} values does not match {channels}x{time}x{freq}",
            data.len()
        );
        Ok(Self { data, channels, time, freq })
    }

    pub fn new_1d(data: Vec<f32>, channels: usize, time: usize) -> Result<Self> {
        Self::new(data, channels, time, 1)
    }

    pub fn zeros(channels: usize, time: usize, freq: usize) -> Result<Self> {
        Self::new(vec![0.0; channels * time * freq], channels, time, freq)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn freq(&self) -> usize {
        self.freq
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.time, self.freq)
    }

    /// Values per channel (`time * freq`).
    pub fn plane(&self) -> usize {
        self.time * self.freq
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let p = self.plane();
        &self.data[c * p..(c + 1) * p]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f32] {
        let p = self.plane();
        &mut self.data[c * p..(c + 1) * p]
    }

    pub fn get(&self, c: usize, t: usize, f: usize) -> f32 {
        self.data[(c * self.time + t) * self.freq + f]
    }

    /// Stacks tensors with equal `time x freq` along the channel axis.
    pub fn concat_channels(parts: &[Tensor]) -> Result<Tensor> {
        ensure!(!parts.is_empty(), "nothing to concatenate");
        let (t, f) = (parts[0].time, parts[0].freq);
        ensure!(
            parts.iter().all(|p| p.time == t && p.freq == f),
            "cannot concatenate feature maps of different sizes"
        );
        let channels = parts.iter().map(|p| p.channels).sum();
        let mut data = Vec::with_capacity(channels * t * f);
        for p in parts {
            data.extend_from_slice(&p.data);
        }
        Tensor::new(data, channels, t, f)
    }
}

/// Mean of every feature map, one value per channel.
pub fn global_average(x: &Tensor) -> Vec<f32> {
    (0..x.channels())
        .map(|c| {
            let ch = x.channel(c);
            (ch.iter().map(|&v| v as f64).sum::<f64>() / ch.len() as f64) as f32
        })
        .collect()
}
