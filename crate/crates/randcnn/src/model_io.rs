//! RWCM model files: a trained standardizer + classifier with its class
//! names, stored as little-endian `f32` payloads.
//!
//! ```text
//! "RWCM" | u32 version | u32 family (0 svm, 1 elm) | u32 dim | u32 classes
//! classes × (u16 len | UTF-8 name)
//! dim × f32 mean | dim × f32 scale
//! svm: u32 kernel (0 linear, 1 rbf) | f32 gamma | f32 C | u32 n_sv
//!      n_sv × dim × f32 | classes × n_sv × f32 coef | classes × f32 rho
//! elm: u32 hidden | u64 seed | hidden × (dim+1) × f32 W1 | hidden × classes × f32 W2
//! ```

use std::path::Path;

use randcnn_core::classify::{Classifier, ElmModel, Kernel, Matrix, Model, Standardizer, SvmModel};

use crate::bytes::ByteReader;
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"RWCM";
pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct SavedModel {
    pub classifier: Classifier,
    pub class_names: Vec<String>,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u32).to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f32(&mut self, v: f64) {
        self.0.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fn f32s(&mut self, v: &[f64]) {
        v.iter().for_each(|&x| self.f32(x));
    }
}

impl SavedModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(MODEL_MAGIC);
        w.u32(MODEL_VERSION as usize);
        let st = &self.classifier.standardizer;
        let (family, classes) = match &self.classifier.model {
            Model::Svm(m) => (0, m.classes()),
            Model::Elm(m) => (1, m.classes()),
        };
        w.u32(family);
        w.u32(st.dim());
        w.u32(classes);
        for n in &self.class_names {
            w.u16(n.len() as u16);
            w.0.extend_from_slice(n.as_bytes());
        }
        w.f32s(&st.mean);
        w.f32s(&st.scale);
        match &self.classifier.model {
            Model::Svm(m) => {
                let (tag, gamma) = match m.kernel {
                    Kernel::Linear => (0, 0.0),
                    Kernel::Rbf { gamma } => (1, gamma),
                };
                w.u32(tag);
                w.f32(gamma);
                w.f32(m.c);
                w.u32(m.support.rows());
                w.f32s(m.support.data());
                m.coef.iter().for_each(|c| w.f32s(c));
                w.f32s(&m.rho);
            }
            Model::Elm(m) => {
                w.u32(m.hidden());
                w.u64(m.seed);
                w.f32s(m.w1.data());
                w.f32s(m.w2.data());
            }
        }
        w.0
    }

    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let corrupt = |reason: &str| Error::Corrupt { path: origin.into(), kind: "model", reason: reason.into() };
        let mut r = ByteReader::new(bytes);
        let trunc = || corrupt("truncated");
        if r.take(4).ok_or_else(trunc)? != MODEL_MAGIC {
            return Err(corrupt("bad magic"));
        }
        if r.u32().ok_or_else(trunc)? != MODEL_VERSION {
            return Err(corrupt("unsupported version"));
        }
        let family = r.u32().ok_or_else(trunc)?;
        let dim = r.u32().ok_or_else(trunc)? as usize;
        let classes = r.u32().ok_or_else(trunc)? as usize;
        let mut class_names = Vec::with_capacity(classes.min(1 << 16));
        for _ in 0..classes {
            let n = r.u16().ok_or_else(trunc)? as usize;
            let s = r.take(n).ok_or_else(trunc)?;
            class_names.push(String::from_utf8(s.to_vec()).map_err(|_| corrupt("class name is not UTF-8"))?);
        }
        let mean = f64s(&mut r, dim).ok_or_else(trunc)?;
        let scale = f64s(&mut r, dim).ok_or_else(trunc)?;
        let standardizer = Standardizer { mean, scale };
        let model = match family {
            0 => {
                let kernel = match r.u32().ok_or_else(trunc)? {
                    0 => {
                        f64s(&mut r, 1).ok_or_else(trunc)?;
                        Kernel::Linear
                    }
                    1 => Kernel::Rbf { gamma: f64s(&mut r, 1).ok_or_else(trunc)?[0] },
                    _ => return Err(corrupt("unknown kernel tag")),
                };
                let c = f64s(&mut r, 1).ok_or_else(trunc)?[0];
                let n_sv = r.u32().ok_or_else(trunc)? as usize;
                let support = Matrix::new(n_sv, dim, f64s(&mut r, n_sv * dim).ok_or_else(trunc)?)?;
                let coef = (0..classes).map(|_| f64s(&mut r, n_sv).ok_or_else(trunc)).collect::<Result<Vec<_>>>()?;
                let rho = f64s(&mut r, classes).ok_or_else(trunc)?;
                Model::Svm(SvmModel { kernel, c, support, coef, rho })
            }
            1 => {
                let hidden = r.u32().ok_or_else(trunc)? as usize;
                let seed = r.u64().ok_or_else(trunc)?;
                let w1 = Matrix::new(hidden, dim + 1, f64s(&mut r, hidden * (dim + 1)).ok_or_else(trunc)?)?;
                let w2 = Matrix::new(hidden, classes, f64s(&mut r, hidden * classes).ok_or_else(trunc)?)?;
                Model::Elm(ElmModel { w1, w2, seed })
            }
            _ => return Err(corrupt("unknown family tag")),
        };
        if r.remaining() != 0 {
            return Err(corrupt("trailing bytes"));
        }
        Ok(Self { classifier: Classifier { standardizer, model }, class_names })
    }
}

fn f64s(r: &mut ByteReader<'_>, n: usize) -> Option<Vec<f64>> {
    r.f32s(n).map(|v| v.into_iter().map(f64::from).collect())
}

pub fn write_model(path: &Path, m: &SavedModel) -> Result<()> {
    std::fs::write(path, m.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: &Path) -> Result<SavedModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    SavedModel::from_bytes(&bytes, path)
}
