use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::dsp::MFCC_DIM;
use crate::error::Error;

/// Front-end architecture. `Mfcc` is the hand-crafted baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArchId {
    SampleLevel,
    FrameLevel,
    FrameLevelMany,
    V7x96,
    V7x86,
    Timbral,
    Temporal,
    Time,
    TimbralTemporal,
    TimbralTime,
    Vgg,
    Mfcc,
}

/// Which representation of a clip an architecture consumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputKind {
    Waveform,
    LogMel,
    Envelope,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Capacity {
    /// About 120 feature maps, matching the MFCC vector size.
    Small,
    /// About 3500 feature maps.
    Large,
}

impl ArchId {
    /// The eleven CNN front-ends, in cache-code order.
    pub const CNN: [ArchId; 11] = [
        ArchId::SampleLevel,
        ArchId::FrameLevel,
        ArchId::FrameLevelMany,
        ArchId::V7x96,
        ArchId::V7x86,
        ArchId::Timbral,
        ArchId::Temporal,
        ArchId::Time,
        ArchId::TimbralTemporal,
        ArchId::TimbralTime,
        ArchId::Vgg,
    ];

    /// Stable numeric identifier used in cache headers and RNG stream ids.
    pub fn code(self) -> u32 {
        match self {
            ArchId::SampleLevel => 0,
            ArchId::FrameLevel => 1,
            ArchId::FrameLevelMany => 2,
            ArchId::V7x96 => 3,
            ArchId::V7x86 => 4,
            ArchId::Timbral => 5,
            ArchId::Temporal => 6,
            ArchId::Time => 7,
            ArchId::TimbralTemporal => 8,
            ArchId::TimbralTime => 9,
            ArchId::Vgg => 10,
            ArchId::Mfcc => 11,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        ArchId::CNN.iter().copied().chain([ArchId::Mfcc]).find(|a| a.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            ArchId::SampleLevel => "sample_level",
            ArchId::FrameLevel => "frame_level",
            ArchId::FrameLevelMany => "frame_level_many",
            ArchId::V7x96 => "v7x96",
            ArchId::V7x86 => "v7x86",
            ArchId::Timbral => "timbral",
            ArchId::Temporal => "temporal",
            ArchId::Time => "time",
            ArchId::TimbralTemporal => "timbral_temporal",
            ArchId::TimbralTime => "timbral_time",
            ArchId::Vgg => "vgg",
            ArchId::Mfcc => "mfcc",
        }
    }

    pub fn input_kind(self) -> InputKind {
        match self {
            ArchId::SampleLevel | ArchId::FrameLevel | ArchId::FrameLevelMany | ArchId::Mfcc => {
                InputKind::Waveform
            }
            ArchId::Temporal | ArchId::Time => InputKind::Envelope,
            _ => InputKind::LogMel,
        }
    }

    /// True for front-ends fed by the spectrogram or its envelope.
    pub fn is_spectrogram_based(self) -> bool {
        self.input_kind() != InputKind::Waveform
    }
}

impl fmt::Display for ArchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ArchId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        let norm: String = s.trim().to_ascii_lowercase().replace(['-', '+'], "_");
        let alias = match norm.as_str() {
            "7x96" => "v7x96",
            "7x86" => "v7x86",
            "frame_level_many_shapes" => "frame_level_many",
            other => other,
        };
        ArchId::CNN
            .iter()
            .copied()
            .chain([ArchId::Mfcc])
            .find(|a| a.name() == alias)
            .ok_or_else(|| Error::InvalidInput(alloc::format!("unknown architecture '{s}'")))
    }
}

impl Capacity {
    pub fn code(self) -> u32 {
        match self {
            Capacity::Small => 0,
            Capacity::Large => 1,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(Capacity::Small),
            1 => Some(Capacity::Large),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Capacity::Small => "s",
            Capacity::Large => "l",
        }
    }
}

impl fmt::Display for Capacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Capacity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s" | "small" => Ok(Capacity::Small),
            "l" | "large" => Ok(Capacity::Large),
            _ => Err(Error::InvalidInput(alloc::format!("unknown capacity '{s}'"))),
        }
    }
}

/// Architecture, capacity and weight seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FrontEndSpec {
    pub arch: ArchId,
    pub capacity: Capacity,
    pub seed: u64,
}

impl FrontEndSpec {
    pub fn new(arch: ArchId, capacity: Capacity, seed: u64) -> Self {
        Self { arch, capacity, seed }
    }

    pub fn allocation(&self) -> Allocation {
        Allocation::for_arch(self.arch, self.capacity)
    }
}

/// Filters per shape group, per layer.
///
/// Layers are listed in forward order; a layer with several filter shapes
/// (many-shapes, timbral, the wide timbral+temporal layer) has one entry
/// per shape in declaration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation {
    pub layers: Vec<Vec<usize>>,
}

impl Allocation {
    pub fn for_arch(arch: ArchId, capacity: Capacity) -> Self {
        let small = capacity == Capacity::Small;
        let pick = |s: usize, l: usize| if small { s } else { l };
        let layers = match arch {
            ArchId::SampleLevel => vec![vec![pick(17, 500)]; 7],
            ArchId::FrameLevel => vec![vec![pick(30, 875)]; 4],
            ArchId::FrameLevelMany => {
                let mut v = vec![vec![pick(12, 175); 5]];
                v.extend((0..3).map(|_| vec![pick(20, 875)]));
                v
            }
            ArchId::V7x96 | ArchId::V7x86 => vec![vec![pick(120, 3500)]],
            ArchId::Timbral => vec![vec![pick(20, 583); 6]],
            ArchId::Temporal | ArchId::Time => vec![vec![pick(30, 875); 4]],
            ArchId::TimbralTemporal | ArchId::TimbralTime => {
                let mut wide = vec![pick(10, 292); 6];
                wide.extend([pick(15, 437); 4]);
                vec![wide]
            }
            ArchId::Vgg => vec![vec![pick(24, 700)]; 5],
            ArchId::Mfcc => vec![],
        };
        Self { layers }
    }

    /// Total number of feature maps (one feature per map).
    pub fn total(&self) -> usize {
        self.layers.iter().flatten().sum()
    }
}

/// Length of the feature vector produced by `spec`, without building it.
pub fn feature_dimension(spec: &FrontEndSpec) -> usize {
    match spec.arch {
        ArchId::Mfcc => MFCC_DIM,
        _ => spec.allocation().total(),
    }
}
