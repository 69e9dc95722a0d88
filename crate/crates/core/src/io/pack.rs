//! Feature packs: a directory holding `manifest.json` and one NPY file per
//! layer of shape `(num_samples, height, width, channels)`.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::npy::{self, NpyWriter};
use crate::descriptor::{LayerFeatureMap, LayerShape, SampleSource};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PACK_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub layer_id: u32,
    pub name: String,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    /// Path relative to the pack directory.
    pub file: String,
    pub dtype: String,
    pub order: String,
}

impl LayerEntry {
    pub fn shape(&self) -> LayerShape {
        LayerShape {
            layer_id: self.layer_id,
            height: self.height,
            width: self.width,
            channels: self.channels,
        }
    }

    fn slab_len(&self) -> usize {
        self.height * self.width * self.channels
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub dataset_name: String,
    pub split: String,
    pub num_samples: usize,
    /// Per-sample class labels; absent for unlabelled (e.g. OOD) packs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_labels: Option<Vec<u32>>,
    pub layers: Vec<LayerEntry>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::format(&path, None, format!("invalid manifest: {e}")))
    }
}

#[derive(Debug)]
struct LayerFile {
    entry: LayerEntry,
    path: PathBuf,
    file: File,
    data_offset: u64,
}

impl LayerFile {
    fn read_slab(&self, index: usize) -> Result<Vec<f32>> {
        let len = self.entry.slab_len();
        let mut buf = vec![0u8; len * 4];
        let offset = self.data_offset + (index * len * 4) as u64;
        read_exact_at(&self.file, &mut buf, offset).map_err(|e| Error::io(&self.path, e))?;
        Ok(npy::decode_f32(&buf))
    }
}

#[cfg(unix)]
fn read_exact_at(file: &File, buf: &mut [u8], offset: u64) -> std::io::Result<()> {
    use std::os::unix::fs::FileExt;
    file.read_exact_at(buf, offset)
}

#[cfg(not(unix))]
fn read_exact_at(file: &File, buf: &mut [u8], offset: u64) -> std::io::Result<()> {
    use std::io::{Read, Seek, SeekFrom};
    let mut f = file.try_clone()?;
    f.seek(SeekFrom::Start(offset))?;
    f.read_exact(buf)
}

/// An opened, validated feature pack with random access to per-sample slabs.
///
/// Reads use positioned I/O on shared handles, so concurrent readers never
/// contend on a file cursor.
#[derive(Debug)]
pub struct FeaturePack {
    root: PathBuf,
    manifest: Manifest,
    layers: Vec<LayerFile>,
}

impl FeaturePack {
    /// Opens `dir` and validates every layer file's header and byte size.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let root = dir.as_ref().to_path_buf();
        let manifest = Manifest::read(&root)?;
        let manifest_path = root.join(MANIFEST_FILE);
        if manifest.format_version != PACK_FORMAT_VERSION {
            return Err(Error::format(
                &manifest_path,
                None,
                format!(
                    "unsupported pack format_version {}, expected {PACK_FORMAT_VERSION}",
                    manifest.format_version
                ),
            ));
        }
        if manifest.layers.is_empty() {
            return Err(Error::usage(format!(
                "{}: feature pack declares no layers",
                manifest_path.display()
            )));
        }
        if let Some(labels) = &manifest.class_labels {
            if labels.len() != manifest.num_samples {
                return Err(Error::format(
                    &manifest_path,
                    None,
                    format!(
                        "{} class labels for {} samples",
                        labels.len(),
                        manifest.num_samples
                    ),
                ));
            }
        }
        let mut seen = std::collections::HashSet::new();
        let mut layers = Vec::with_capacity(manifest.layers.len());
        for entry in &manifest.layers {
            if !seen.insert(entry.layer_id) {
                return Err(Error::format(
                    &manifest_path,
                    None,
                    format!("layer id {} appears twice", entry.layer_id),
                ));
            }
            layers.push(open_layer(&root, &manifest, entry)?);
        }
        Ok(Self {
            root,
            manifest,
            layers,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn is_labelled(&self) -> bool {
        self.manifest.class_labels.is_some()
    }

    /// Raw slab of sample `index` for `layer_id`, shape `h x w x c`.
    pub fn read_slab(&self, index: usize, layer_id: u32) -> Result<Vec<f32>> {
        if index >= self.manifest.num_samples {
            return Err(Error::usage(format!(
                "sample {index} out of range (pack has {})",
                self.manifest.num_samples
            )));
        }
        self.layer(layer_id)?.read_slab(index)
    }

    fn layer(&self, layer_id: u32) -> Result<&LayerFile> {
        self.layers
            .iter()
            .find(|l| l.entry.layer_id == layer_id)
            .ok_or_else(|| Error::usage(format!("pack has no layer {layer_id}")))
    }
}

fn open_layer(root: &Path, manifest: &Manifest, entry: &LayerEntry) -> Result<LayerFile> {
    let path = root.join(&entry.file);
    let ctx = |msg: String| Error::format(&path, None, format!("layer {}: {msg}", entry.layer_id));
    if entry.dtype != npy::DTYPE {
        return Err(ctx(format!(
            "dtype {:?} unsupported, expected \"<f4\"",
            entry.dtype
        )));
    }
    if entry.order != "C" {
        return Err(ctx(format!(
            "order {:?} unsupported, expected \"C\"",
            entry.order
        )));
    }
    if entry.channels == 0 || entry.height == 0 || entry.width == 0 {
        return Err(ctx("dimensions must all be >= 1".into()));
    }
    let mut file = File::open(&path).map_err(|e| Error::io(&path, e))?;
    let header = npy::read_header(&mut file, &path)?;
    let expected_shape = vec![
        manifest.num_samples,
        entry.height,
        entry.width,
        entry.channels,
    ];
    if header.shape != expected_shape {
        return Err(ctx(format!(
            "tensor shape {:?} does not match manifest {:?}",
            header.shape, expected_shape
        )));
    }
    let expected = header.data_offset + (manifest.num_samples * entry.slab_len() * 4) as u64;
    let actual = file.metadata().map_err(|e| Error::io(&path, e))?.len();
    if actual != expected {
        return Err(ctx(format!(
            "file is {actual} bytes, expected {expected} for {} samples",
            manifest.num_samples
        )));
    }
    Ok(LayerFile {
        entry: entry.clone(),
        path,
        file,
        data_offset: header.data_offset,
    })
}

impl SampleSource for FeaturePack {
    fn num_samples(&self) -> usize {
        self.manifest.num_samples
    }

    fn layer_shapes(&self) -> Vec<LayerShape> {
        self.manifest.layers.iter().map(LayerEntry::shape).collect()
    }

    fn label(&self, index: usize) -> Option<u32> {
        self.manifest
            .class_labels
            .as_ref()
            .and_then(|l| l.get(index).copied())
    }

    fn load(&self, index: usize, layers: &[u32]) -> Result<Vec<LayerFeatureMap>> {
        layers
            .iter()
            .map(|&id| {
                let layer = self.layer(id)?;
                let e = &layer.entry;
                LayerFeatureMap::new(
                    id,
                    index as u64,
                    e.height,
                    e.width,
                    e.channels,
                    self.read_slab(index, id)?,
                )
            })
            .collect()
    }
}

/// Declaration of one layer for [`FeaturePackWriter`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerDecl {
    pub layer_id: u32,
    pub name: String,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

/// Writes a pack sample by sample. The sample count is fixed up front since
/// it is part of every NPY header.
pub struct FeaturePackWriter {
    root: PathBuf,
    manifest: Manifest,
    writers: Vec<NpyWriter>,
    labels: Vec<Option<u32>>,
}

impl FeaturePackWriter {
    pub fn create(
        dir: impl AsRef<Path>,
        dataset_name: &str,
        split: &str,
        num_samples: usize,
        layers: &[LayerDecl],
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::usage("feature pack needs at least one layer"));
        }
        let root = dir.as_ref().to_path_buf();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        let mut entries = Vec::with_capacity(layers.len());
        let mut writers = Vec::with_capacity(layers.len());
        for decl in layers {
            let file = format!("layer_{:03}.npy", decl.layer_id);
            writers.push(NpyWriter::create(
                root.join(&file),
                &[num_samples, decl.height, decl.width, decl.channels],
            )?);
            entries.push(LayerEntry {
                layer_id: decl.layer_id,
                name: decl.name.clone(),
                channels: decl.channels,
                height: decl.height,
                width: decl.width,
                file,
                dtype: npy::DTYPE.into(),
                order: "C".into(),
            });
        }
        Ok(Self {
            root,
            manifest: Manifest {
                format_version: PACK_FORMAT_VERSION,
                dataset_name: dataset_name.into(),
                split: split.into(),
                num_samples,
                class_labels: None,
                layers: entries,
            },
            writers,
            labels: Vec::with_capacity(num_samples),
        })
    }

    /// Appends one sample; `slabs[k]` is the `h x w x c` map of layer `k`.
    pub fn append(&mut self, slabs: &[&[f32]], label: Option<u32>) -> Result<()> {
        if self.labels.len() == self.manifest.num_samples {
            return Err(Error::usage("feature pack is already full"));
        }
        if slabs.len() != self.writers.len() {
            return Err(Error::dim(format!(
                "{} slabs for {} layers",
                slabs.len(),
                self.writers.len()
            )));
        }
        for ((w, slab), entry) in self
            .writers
            .iter_mut()
            .zip(slabs)
            .zip(&self.manifest.layers)
        {
            if slab.len() != entry.slab_len() {
                return Err(Error::dim(format!(
                    "layer {}: slab of {} values, expected {}",
                    entry.layer_id,
                    slab.len(),
                    entry.slab_len()
                )));
            }
            w.write_values(slab)?;
        }
        self.labels.push(label);
        Ok(())
    }

    /// Flushes every layer file and writes the manifest. Labels are recorded
    /// only if every sample has one.
    pub fn finish(mut self) -> Result<Manifest> {
        if self.labels.len() != self.manifest.num_samples {
            return Err(Error::usage(format!(
                "feature pack declared {} samples but {} were written",
                self.manifest.num_samples,
                self.labels.len()
            )));
        }
        for w in self.writers {
            w.finish()?;
        }
        self.manifest.class_labels = self.labels.iter().copied().collect::<Option<Vec<_>>>();
        let path = self.root.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serialises");
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(self.manifest)
    }
}
