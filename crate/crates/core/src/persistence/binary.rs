//! Bit-exact binary files for spectrogram datasets and VAE models.
//!
//! Dataset (`SPGD`): magic, u16 version, u32 sample count, u16 height,
//! u16 width, f64 epsilon, one label byte per sample (0 normal, 1 abnormal,
//! 2 unlabeled), then each sample's pixels as row-major f32.
//!
//! Model (`VAEM`): magic, u16 version, u32 layer count, then per layer
//! u32 rows (fan-in), u32 cols (fan-out), u8 activation tag, the row-major
//! f64 weights and the f64 biases. Layers follow [`MlpVae::layers`] order.
//!
//! All integers and floats are little-endian.

use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array2};

use crate::dataset::{Label, LabeledDataset, Split};
use crate::error::{Error, Result};
use crate::spectrogram::{Spectrogram, SPEC_PIXELS, SPEC_SIZE};
use crate::vae::{Activation, Dense, MlpVae};

pub const DATASET_MAGIC: &[u8; 4] = b"SPGD";
pub const MODEL_MAGIC: &[u8; 4] = b"VAEM";
pub const FORMAT_VERSION: u16 = 1;

fn truncated(what: &str) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::format(format!("truncated {what}: {e}"))
}

fn check_header(r: &mut impl Read, magic: &[u8; 4], what: &str) -> Result<()> {
    let mut found = [0u8; 4];
    r.read_exact(&mut found).map_err(truncated(what))?;
    if &found != magic {
        return Err(Error::format(format!(
            "bad {what} magic {:?}, expected {:?}",
            String::from_utf8_lossy(&found),
            String::from_utf8_lossy(magic)
        )));
    }
    let version = r.read_u16::<LE>().map_err(truncated(what))?;
    if version != FORMAT_VERSION {
        return Err(Error::format(format!(
            "unsupported {what} version {version}, expected {FORMAT_VERSION}"
        )));
    }
    Ok(())
}

fn check_consumed(cursor: &Cursor<&[u8]>, what: &str) -> Result<()> {
    let extra = cursor.get_ref().len() as u64 - cursor.position();
    if extra != 0 {
        return Err(Error::format(format!("{extra} trailing bytes after {what}")));
    }
    Ok(())
}

pub fn encode_dataset(data: &LabeledDataset) -> Result<Vec<u8>> {
    let count = u32::try_from(data.len()).map_err(|_| Error::invalid("too many samples for one file"))?;
    let mut out = Vec::with_capacity(22 + data.len() * (1 + 4 * SPEC_PIXELS));
    let io = |e: std::io::Error| Error::format(e.to_string());
    out.write_all(DATASET_MAGIC).map_err(io)?;
    out.write_u16::<LE>(FORMAT_VERSION).map_err(io)?;
    out.write_u32::<LE>(count).map_err(io)?;
    out.write_u16::<LE>(SPEC_SIZE as u16).map_err(io)?;
    out.write_u16::<LE>(SPEC_SIZE as u16).map_err(io)?;
    out.write_f64::<LE>(data.epsilon()).map_err(io)?;
    out.extend(data.labels.iter().map(|l| l.to_byte()));
    for s in &data.samples {
        for &p in s.pixels() {
            out.write_f32::<LE>(p).map_err(io)?;
        }
    }
    Ok(out)
}

/// Decode a dataset. The split is `Test` when any sample is labeled abnormal.
pub fn decode_dataset(bytes: &[u8]) -> Result<LabeledDataset> {
    let what = "dataset";
    let mut r = Cursor::new(bytes);
    check_header(&mut r, DATASET_MAGIC, what)?;
    let count = r.read_u32::<LE>().map_err(truncated(what))? as usize;
    let height = r.read_u16::<LE>().map_err(truncated(what))? as usize;
    let width = r.read_u16::<LE>().map_err(truncated(what))? as usize;
    if height != SPEC_SIZE || width != SPEC_SIZE {
        return Err(Error::format(format!(
            "spectrograms are {height}x{width}, expected {SPEC_SIZE}x{SPEC_SIZE}"
        )));
    }
    let epsilon = r.read_f64::<LE>().map_err(truncated(what))?;
    let expected = (count as u64) * (1 + 4 * SPEC_PIXELS as u64);
    let remaining = bytes.len() as u64 - r.position();
    if remaining < expected {
        return Err(Error::format(format!(
            "truncated dataset: {count} samples need {expected} bytes, {remaining} present"
        )));
    }
    let mut label_bytes = vec![0u8; count];
    r.read_exact(&mut label_bytes).map_err(truncated(what))?;
    let labels = label_bytes
        .iter()
        .enumerate()
        .map(|(i, &b)| Label::from_byte(b).ok_or_else(|| Error::format(format!("sample {i}: bad label byte {b}"))))
        .collect::<Result<Vec<_>>>()?;
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let mut pixels = vec![0f32; SPEC_PIXELS];
        r.read_f32_into::<LE>(&mut pixels).map_err(truncated(what))?;
        let spec = Spectrogram::from_pixels(pixels, epsilon).map_err(|e| Error::format(format!("sample {i}: {e}")))?;
        samples.push(spec);
    }
    check_consumed(&r, what)?;
    let split = if labels.contains(&Label::Abnormal) {
        Split::Test
    } else {
        Split::Train
    };
    LabeledDataset::new(split, samples, labels)
}

pub fn encode_model(model: &MlpVae) -> Result<Vec<u8>> {
    let layers = model.layers();
    let io = |e: std::io::Error| Error::format(e.to_string());
    let mut out = Vec::with_capacity(10 + model.param_count() * 8 + layers.len() * 9);
    out.write_all(MODEL_MAGIC).map_err(io)?;
    out.write_u16::<LE>(FORMAT_VERSION).map_err(io)?;
    out.write_u32::<LE>(layers.len() as u32).map_err(io)?;
    for layer in layers {
        out.write_u32::<LE>(layer.input_dim() as u32).map_err(io)?;
        out.write_u32::<LE>(layer.output_dim() as u32).map_err(io)?;
        out.write_u8(layer.activation.tag()).map_err(io)?;
        for &w in layer.weights.iter() {
            out.write_f64::<LE>(w).map_err(io)?;
        }
        for &b in layer.bias.iter() {
            out.write_f64::<LE>(b).map_err(io)?;
        }
    }
    Ok(out)
}

pub fn decode_model(bytes: &[u8]) -> Result<MlpVae> {
    let what = "model";
    let mut r = Cursor::new(bytes);
    check_header(&mut r, MODEL_MAGIC, what)?;
    let count = r.read_u32::<LE>().map_err(truncated(what))?;
    let mut layers = Vec::new();
    for i in 0..count {
        let rows = r.read_u32::<LE>().map_err(truncated(what))? as usize;
        let cols = r.read_u32::<LE>().map_err(truncated(what))? as usize;
        let tag = r.read_u8().map_err(truncated(what))?;
        let activation =
            Activation::from_tag(tag).ok_or_else(|| Error::format(format!("layer {i}: unknown activation tag {tag}")))?;
        if rows == 0 || cols == 0 {
            return Err(Error::format(format!("layer {i}: empty shape {rows}x{cols}")));
        }
        let needed = (rows as u64 * cols as u64 + cols as u64) * 8;
        let remaining = bytes.len() as u64 - r.position();
        if remaining < needed {
            return Err(Error::format(format!(
                "truncated model: layer {i} needs {needed} bytes, {remaining} present"
            )));
        }
        let mut weights = vec![0f64; rows * cols];
        r.read_f64_into::<LE>(&mut weights).map_err(truncated(what))?;
        let mut bias = vec![0f64; cols];
        r.read_f64_into::<LE>(&mut bias).map_err(truncated(what))?;
        layers.push(Dense {
            weights: Array2::from_shape_vec((rows, cols), weights).expect("length matches shape"),
            bias: Array1::from(bias),
            activation,
        });
    }
    check_consumed(&r, what)?;
    MlpVae::from_layers(layers)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn save_dataset(path: &Path, data: &LabeledDataset) -> Result<()> {
    write_file(path, &encode_dataset(data)?)
}

pub fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    decode_dataset(&read_file(path)?)
}

pub fn save_model(path: &Path, model: &MlpVae) -> Result<()> {
    write_file(path, &encode_model(model)?)
}

pub fn load_model(path: &Path) -> Result<MlpVae> {
    decode_model(&read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vae::LayerPlan;

    fn small_plan() -> LayerPlan {
        LayerPlan {
            input_dim: 12,
            hidden: vec![6],
            latent_dim: 2,
        }
    }

    fn dataset() -> LabeledDataset {
        let samples = (0..3)
            .map(|i| {
                let pixels = (0..SPEC_PIXELS).map(|j| 0.001 + ((i * 7 + j) % 997) as f32 / 1000.0).collect();
                Spectrogram::from_pixels(pixels, 1e-3).unwrap()
            })
            .collect();
        LabeledDataset::new(Split::Test, samples, vec![Label::Normal, Label::Abnormal, Label::Normal]).unwrap()
    }

    #[test]
    fn dataset_round_trip() {
        let data = dataset();
        let bytes = encode_dataset(&data).unwrap();
        assert_eq!(&bytes[..4], b"SPGD");
        assert_eq!(decode_dataset(&bytes).unwrap(), data);
    }

    #[test]
    fn dataset_rejects_damage() {
        let bytes = encode_dataset(&dataset()).unwrap();
        assert!(matches!(decode_dataset(&bytes[..bytes.len() - 1]), Err(Error::Format(_))));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(decode_dataset(&extra), Err(Error::Format(_))));
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(decode_dataset(&magic), Err(Error::Format(_))));
        let mut version = bytes.clone();
        version[4] = 9;
        assert!(matches!(decode_dataset(&version), Err(Error::Format(_))));
        let mut label = bytes;
        label[22] = 7;
        assert!(matches!(decode_dataset(&label), Err(Error::Format(_))));
    }

    #[test]
    fn model_round_trip() {
        let model = MlpVae::init(&small_plan(), 3).unwrap();
        let bytes = encode_model(&model).unwrap();
        let back = decode_model(&bytes).unwrap();
        assert_eq!(back, model);
        assert_eq!(encode_model(&back).unwrap(), bytes);
    }

    #[test]
    fn model_rejects_damage() {
        let bytes = encode_model(&MlpVae::init(&small_plan(), 3).unwrap()).unwrap();
        for cut in [0, 3, 6, 10, 19, bytes.len() - 1] {
            assert!(matches!(decode_model(&bytes[..cut]), Err(Error::Format(_))), "cut {cut}");
        }
        let mut magic = bytes.clone();
        magic[3] = b'X';
        assert!(matches!(decode_model(&magic), Err(Error::Format(_))));
        let mut tag = bytes.clone();
        tag[18] = 9;
        assert!(matches!(decode_model(&tag), Err(Error::Format(_))));
        let mut count = bytes;
        count[6] = 4;
        assert!(matches!(decode_model(&count), Err(Error::Format(_))));
    }
}
