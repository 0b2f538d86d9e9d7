//! Little-endian binary files for models and embedding tables.
//!
//! Every file starts with a four-byte magic and a `u32` version. Matrices are
//! stored row-major. Floats are written bit for bit, so a load returns
//! exactly what was saved.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::activation::ActivationKind;
use crate::autoencoder::AeLayer;
use crate::batch::{Dataset, FeatureBatch};
use crate::elm::ElmModel;
use crate::embedding::{EmbeddingTable, FieldTable};
use crate::error::{ElmError, Result};
use crate::layer::RandomLayer;
use crate::ml_elm::MlElmModel;

pub const ELM_MAGIC: &[u8; 4] = b"ELMK";
pub const ML_ELM_MAGIC: &[u8; 4] = b"ELMM";
pub const EMBEDDING_MAGIC: &[u8; 4] = b"ELME";
pub const FORMAT_VERSION: u32 = 1;

// Guards against allocating absurd buffers from a corrupt header.
const MAX_ELEMENTS: u64 = 1 << 34;

struct Encoder<W> {
    inner: W,
}

impl<W: Write> Encoder<W> {
    fn bytes(&mut self, b: &[u8]) -> std::io::Result<()> {
        self.inner.write_all(b)
    }

    fn u32(&mut self, v: u32) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    fn u64(&mut self, v: u64) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    fn f64(&mut self, v: f64) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    fn matrix(&mut self, m: &DMatrix<f64>) -> std::io::Result<()> {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                self.f64(m[(i, j)])?;
            }
        }
        Ok(())
    }

    fn vector(&mut self, v: &DVector<f64>) -> std::io::Result<()> {
        v.iter().try_for_each(|x| self.f64(*x))
    }
}

struct Decoder<R> {
    inner: R,
}

impl<R: Read> Decoder<R> {
    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => ElmError::Format("file is truncated".into()),
            _ => ElmError::Format(e.to_string()),
        })?;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn dim(&mut self, what: &str) -> Result<usize> {
        let v = self.u64()?;
        if v == 0 || v > MAX_ELEMENTS {
            return Err(ElmError::Format(format!("implausible {what} {v}")));
        }
        Ok(v as usize)
    }

    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        let found: [u8; 4] = self.array()?;
        if &found != magic {
            return Err(ElmError::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&found),
                String::from_utf8_lossy(magic)
            )));
        }
        self.version()
    }

    fn version(&mut self) -> Result<()> {
        let version = self.u32()?;
        if version != FORMAT_VERSION {
            return Err(ElmError::Format(format!("unsupported version {version}")));
        }
        Ok(())
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        check_size(rows, cols)?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(self.f64()?);
        }
        Ok(DMatrix::from_row_slice(rows, cols, &data))
    }

    fn vector(&mut self, len: usize) -> Result<DVector<f64>> {
        let mut v = DVector::zeros(len);
        for x in v.iter_mut() {
            *x = self.f64()?;
        }
        Ok(v)
    }

    fn activation(&mut self) -> Result<ActivationKind> {
        ActivationKind::from_id(self.u32()?).map_err(|e| ElmError::Format(e.to_string()))
    }
}

fn check_size(rows: usize, cols: usize) -> Result<()> {
    match (rows as u64).checked_mul(cols as u64) {
        Some(n) if n <= MAX_ELEMENTS => Ok(()),
        _ => Err(ElmError::Format(format!("implausible matrix size {rows}x{cols}"))),
    }
}

fn create(path: &Path) -> Result<Encoder<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| ElmError::io(path, e))?;
    Ok(Encoder {
        inner: BufWriter::new(file),
    })
}

fn open(path: &Path) -> Result<Decoder<BufReader<File>>> {
    let file = File::open(path).map_err(|e| ElmError::io(path, e))?;
    Ok(Decoder {
        inner: BufReader::new(file),
    })
}

fn finish<W: Write>(enc: Encoder<W>, path: &Path, result: std::io::Result<()>) -> Result<()> {
    let mut inner = enc.inner;
    result.and_then(|_| inner.flush()).map_err(|e| ElmError::io(path, e))
}

fn expect_end<R: Read>(dec: &mut Decoder<R>) -> Result<()> {
    let mut probe = [0u8; 1];
    match dec.inner.read(&mut probe) {
        Ok(0) => Ok(()),
        Ok(_) => Err(ElmError::Format("trailing bytes after model".into())),
        Err(e) => Err(ElmError::Format(e.to_string())),
    }
}

fn write_elm<W: Write>(enc: &mut Encoder<W>, model: &ElmModel) -> std::io::Result<()> {
    let layer = model.layer();
    enc.bytes(ELM_MAGIC)?;
    enc.u32(FORMAT_VERSION)?;
    enc.u32(layer.activation().id())?;
    enc.u64(layer.input_dim() as u64)?;
    enc.u64(layer.hidden_dim() as u64)?;
    enc.u64(model.outputs() as u64)?;
    enc.u64(layer.seed())?;
    enc.f64(model.lambda())?;
    enc.matrix(layer.weights())?;
    enc.vector(layer.bias())?;
    enc.matrix(model.output_weights())
}

/// Reads an ELM block whose magic has already been consumed.
fn read_elm_body<R: Read>(dec: &mut Decoder<R>) -> Result<ElmModel> {
    dec.version()?;
    let activation = dec.activation()?;
    let d = dec.dim("input dimension")?;
    let l = dec.dim("hidden width")?;
    let outputs = dec.dim("output count")?;
    let seed = dec.u64()?;
    let lambda = dec.f64()?;
    let weights = dec.matrix(d, l)?;
    let bias = dec.vector(l)?;
    let output = dec.matrix(l, outputs)?;
    let layer = RandomLayer::from_parts(weights, bias, activation, seed)?;
    ElmModel::new(layer, output, lambda)
}

fn read_elm<R: Read>(dec: &mut Decoder<R>) -> Result<ElmModel> {
    let magic: [u8; 4] = dec.array()?;
    if &magic != ELM_MAGIC {
        return Err(ElmError::Format("expected an ELM block".into()));
    }
    read_elm_body(dec)
}

fn write_ml_elm<W: Write>(enc: &mut Encoder<W>, model: &MlElmModel) -> std::io::Result<()> {
    enc.bytes(ML_ELM_MAGIC)?;
    enc.u32(FORMAT_VERSION)?;
    enc.u64(model.seed())?;
    enc.u32(model.ae_layers().len() as u32)?;
    for ae in model.ae_layers() {
        let layer = ae.random_layer();
        enc.u32(layer.activation().id())?;
        enc.u32(ae.feature_activation().id())?;
        enc.u64(layer.input_dim() as u64)?;
        enc.u64(layer.hidden_dim() as u64)?;
        enc.u64(layer.seed())?;
        enc.f64(ae.lambda())?;
        enc.matrix(layer.weights())?;
        enc.vector(layer.bias())?;
        enc.matrix(ae.output_weights())?;
    }
    write_elm(enc, model.head())
}

fn read_ml_elm_body<R: Read>(dec: &mut Decoder<R>) -> Result<MlElmModel> {
    dec.version()?;
    let seed = dec.u64()?;
    let count = dec.u32()?;
    if count == 0 || count > 1024 {
        return Err(ElmError::Format(format!("implausible layer count {count}")));
    }
    let mut layers = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let hidden_act = dec.activation()?;
        let feature_act = dec.activation()?;
        let d = dec.dim("input dimension")?;
        let l = dec.dim("hidden width")?;
        let layer_seed = dec.u64()?;
        let lambda = dec.f64()?;
        let weights = dec.matrix(d, l)?;
        let bias = dec.vector(l)?;
        let output = dec.matrix(l, d)?;
        let random = RandomLayer::from_parts(weights, bias, hidden_act, layer_seed)?;
        layers.push(AeLayer::new(random, output, lambda, feature_act)?);
    }
    let head = read_elm(dec)?;
    MlElmModel::new(layers, head, seed)
}

pub fn save_elm(model: &ElmModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut enc = create(path)?;
    let result = write_elm(&mut enc, model);
    finish(enc, path, result)
}

pub fn save_ml_elm(model: &MlElmModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut enc = create(path)?;
    let result = write_ml_elm(&mut enc, model);
    finish(enc, path, result)
}

/// Either kind of model file.
#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    Elm(ElmModel),
    MlElm(MlElmModel),
}

impl SavedModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        match self {
            SavedModel::Elm(m) => save_elm(m, path),
            SavedModel::MlElm(m) => save_ml_elm(m, path),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            SavedModel::Elm(m) => m.input_dim(),
            SavedModel::MlElm(m) => m.input_dim(),
        }
    }

    /// Run seed: the seed of the single layer, or of the ML-ELM stack.
    pub fn seed(&self) -> u64 {
        match self {
            SavedModel::Elm(m) => m.layer().seed(),
            SavedModel::MlElm(m) => m.seed(),
        }
    }

    pub fn activation(&self) -> ActivationKind {
        match self {
            SavedModel::Elm(m) => m.layer().activation(),
            SavedModel::MlElm(m) => m.head().layer().activation(),
        }
    }

    pub fn predict<B: FeatureBatch + ?Sized>(&self, x: &B) -> Result<DMatrix<f64>> {
        match self {
            SavedModel::Elm(m) => m.predict(x),
            SavedModel::MlElm(m) => m.predict(x),
        }
    }

    pub fn scores<D: Dataset>(&self, data: &D, batch_size: usize) -> Result<Vec<f64>> {
        match self {
            SavedModel::Elm(m) => m.scores(data, batch_size),
            SavedModel::MlElm(m) => m.scores(data, batch_size),
        }
    }
}

impl From<ElmModel> for SavedModel {
    fn from(m: ElmModel) -> Self {
        SavedModel::Elm(m)
    }
}

impl From<MlElmModel> for SavedModel {
    fn from(m: MlElmModel) -> Self {
        SavedModel::MlElm(m)
    }
}

/// Loads a model file of either kind, dispatching on its magic.
pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    let path = path.as_ref();
    let mut dec = open(path)?;
    let magic: [u8; 4] = dec.array()?;
    let model = match &magic {
        m if m == ELM_MAGIC => SavedModel::Elm(read_elm_body(&mut dec)?),
        m if m == ML_ELM_MAGIC => SavedModel::MlElm(read_ml_elm_body(&mut dec)?),
        other => {
            return Err(ElmError::Format(format!(
                "{} is not a model file (magic {:?})",
                path.display(),
                String::from_utf8_lossy(other)
            )))
        }
    };
    expect_end(&mut dec)?;
    Ok(model)
}

pub fn save_embeddings(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut enc = create(path)?;
    let result = (|| {
        enc.bytes(EMBEDDING_MAGIC)?;
        enc.u32(FORMAT_VERSION)?;
        enc.u32(table.field_count() as u32)?;
        for f in table.fields() {
            enc.u64(f.buckets() as u64)?;
            enc.u32(f.dim() as u32)?;
            for v in f.data() {
                enc.bytes(&v.to_le_bytes())?;
            }
        }
        enc.u64(table.hash_seed())
    })();
    finish(enc, path, result)
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let mut dec = open(path)?;
    dec.header(EMBEDDING_MAGIC)?;
    let count = dec.u32()?;
    if count == 0 || count > 1 << 16 {
        return Err(ElmError::Format(format!("implausible field count {count}")));
    }
    let mut fields = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let buckets = dec.dim("bucket count")?;
        let dim = dec.u32()? as usize;
        check_size(buckets, dim)?;
        let mut data = Vec::with_capacity(buckets * dim);
        for _ in 0..buckets * dim {
            data.push(f32::from_le_bytes(dec.array()?));
        }
        fields.push(FieldTable::new(buckets, dim, data).map_err(|e| ElmError::Format(e.to_string()))?);
    }
    let seed = dec.u64()?;
    expect_end(&mut dec)?;
    EmbeddingTable::new(fields, seed).map_err(|e| ElmError::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoencoder::{orthogonal_layer, procrustes_orthogonalize};

    fn elm(d: usize, l: usize, seed: u64, act: ActivationKind) -> ElmModel {
        let layer = RandomLayer::random(d, l, seed, act);
        let output = DMatrix::from_fn(l, 1, |i, _| (i as f64 * 0.37).sin() / 3.0);
        ElmModel::new(layer, output, 1e-2).unwrap()
    }

    fn ml_elm() -> MlElmModel {
        let dims = [6, 4, 3];
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let random = orthogonal_layer(w[0], w[1], i as u64 + 10, ActivationKind::Sigmoid);
                let raw = DMatrix::from_fn(w[1], w[0], |r, c| ((r * 7 + c) as f64).cos());
                let output = procrustes_orthogonalize(&raw).unwrap();
                AeLayer::new(random, output, 0.5, ActivationKind::Identity).unwrap()
            })
            .collect();
        MlElmModel::new(layers, elm(3, 5, 3, ActivationKind::Sine), 77).unwrap()
    }

    #[test]
    fn elm_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        for act in ActivationKind::ALL {
            let model = elm(5, 7, 11, act);
            let path = dir.path().join(format!("{act}.elm"));
            save_elm(&model, &path).unwrap();
            let loaded = load_model(&path).unwrap();
            assert_eq!(loaded, SavedModel::Elm(model.clone()));
            let x = DMatrix::from_fn(4, 5, |i, j| (i + 2 * j) as f64 / 9.0);
            let a = model.predict(&x).unwrap();
            let b = loaded.predict(&x).unwrap();
            assert!(a.iter().zip(b.iter()).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }

    #[test]
    fn elm_header_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.elm");
        save_elm(&elm(3, 2, 9, ActivationKind::Relu), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"ELMK");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), ActivationKind::Relu.id());
        assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[20..28].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[28..36].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[36..44].try_into().unwrap()), 9);
        assert_eq!(f64::from_le_bytes(bytes[44..52].try_into().unwrap()), 1e-2);
        assert_eq!(bytes.len(), 52 + 8 * (3 * 2 + 2 + 2));
    }

    #[test]
    fn ml_elm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mlelm");
        let model = ml_elm();
        save_ml_elm(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded.seed(), 77);
        assert_eq!(loaded, SavedModel::MlElm(model));
    }

    #[test]
    fn truncation_and_corruption_are_format_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.elm");
        save_ml_elm(&ml_elm(), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        for cut in [0, 3, 7, 20, bytes.len() / 2, bytes.len() - 1] {
            std::fs::write(&path, &bytes[..cut]).unwrap();
            assert!(matches!(load_model(&path), Err(ElmError::Format(_))), "cut at {cut}");
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(load_model(&path), Err(ElmError::Format(_))));
        let mut bad = bytes.clone();
        bad[4] = 9;
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(load_model(&path), Err(ElmError::Format(_))));
        let mut long = bytes;
        long.push(0);
        std::fs::write(&path, &long).unwrap();
        assert!(matches!(load_model(&path), Err(ElmError::Format(_))));
        assert!(matches!(load_model(dir.path().join("missing")), Err(ElmError::Io { .. })));
    }

    #[test]
    fn embedding_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.emb");
        let table = EmbeddingTable::random(&[11, 3, 5], 4, 123).unwrap();
        save_embeddings(&table, &path).unwrap();
        assert_eq!(load_embeddings(&path).unwrap(), table);
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"ELME");
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(load_embeddings(&path), Err(ElmError::Format(_))));
        std::fs::write(&path, b"ELMK\x01\0\0\0").unwrap();
        assert!(matches!(load_embeddings(&path), Err(ElmError::Format(_))));
    }
}
