//! Tab-separated dataset manifests.
//!
//! ```text
//! #classes<TAB>normal<TAB>scratch<TAB>blob
//! class0/000000.ppm<TAB>0
//! class1/000000.ppm<TAB>1
//! ```
//!
//! The optional `#classes` header names the classes and fixes `K`. Other lines
//! starting with `#` and blank lines are ignored. Image paths are resolved
//! relative to the manifest's directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::ImageBuffer;

use super::ppm::read_ppm;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub class_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    /// Directory that relative entry paths are resolved against.
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
    pub class_names: Vec<String>,
}

const CLASSES_HEADER: &str = "#classes";

impl DatasetManifest {
    /// Checks class ranges and that every declared class has at least one entry.
    pub fn new(root: PathBuf, entries: Vec<ManifestEntry>, class_names: Vec<String>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput("manifest has no entries".into()));
        }
        let k = class_names.len();
        let mut seen = vec![false; k];
        for e in &entries {
            if e.class_index >= k {
                return Err(Error::invalid(format!(
                    "{}: class {} out of range for {k} classes",
                    e.path.display(),
                    e.class_index
                )));
            }
            seen[e.class_index] = true;
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!("class {c} ({}) has no entries", class_names[c])));
        }
        Ok(Self {
            root,
            entries,
            class_names,
        })
    }

    /// Parses a manifest. Without a `#classes` header, `n_classes` (or, failing
    /// that, the largest index plus one) sets the class count.
    pub fn load(path: impl AsRef<Path>, n_classes: Option<usize>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, path, root, n_classes)
    }

    fn parse(text: &str, path: &Path, root: PathBuf, n_classes: Option<usize>) -> Result<Self> {
        let malformed = |line: usize, message: String| Error::Manifest {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut names: Option<Vec<String>> = None;
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix(CLASSES_HEADER) {
                let list: Vec<String> = rest
                    .split('\t')
                    .filter(|s| !s.is_empty())
                    .map(str::to_owned)
                    .collect();
                if list.is_empty() {
                    return Err(malformed(line_no, "empty #classes header".into()));
                }
                names = Some(list);
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let (file, class) = line
                .split_once('\t')
                .ok_or_else(|| malformed(line_no, format!("expected `path<TAB>class`, got `{line}`")))?;
            if file.is_empty() {
                return Err(malformed(line_no, "empty image path".into()));
            }
            let class_index: usize = class
                .trim()
                .parse()
                .map_err(|_| malformed(line_no, format!("bad class index `{class}`")))?;
            entries.push((line_no, ManifestEntry {
                path: PathBuf::from(file),
                class_index,
            }));
        }
        if entries.is_empty() {
            return Err(Error::EmptyInput(format!("{}: no entries", path.display())));
        }
        let k = match (&names, n_classes) {
            (Some(n), _) => n.len(),
            (None, Some(k)) => k,
            (None, None) => entries.iter().map(|(_, e)| e.class_index).max().unwrap_or(0) + 1,
        };
        if let Some((line_no, e)) = entries.iter().find(|(_, e)| e.class_index >= k) {
            return Err(malformed(
                *line_no,
                format!("class index {} out of range for {k} classes", e.class_index),
            ));
        }
        let class_names = names.unwrap_or_else(|| (0..k).map(|c| format!("class_{c}")).collect());
        Self::new(root, entries.into_iter().map(|(_, e)| e).collect(), class_names)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<u64> {
        let mut counts = vec![0; self.n_classes()];
        for e in &self.entries {
            counts[e.class_index] += 1;
        }
        counts
    }

    pub fn resolve(&self, index: usize) -> PathBuf {
        let p = &self.entries[index].path;
        if p.is_absolute() {
            p.clone()
        } else {
            self.root.join(p)
        }
    }

    /// Decodes entry `index` from disk.
    pub fn load_image(&self, index: usize) -> Result<ImageBuffer> {
        read_ppm(self.resolve(index))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(CLASSES_HEADER);
        for name in &self.class_names {
            out.push('\t');
            out.push_str(name);
        }
        out.push('\n');
        for e in &self.entries {
            let _ = writeln!(out, "{}\t{}", e.path.display(), e.class_index);
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}
