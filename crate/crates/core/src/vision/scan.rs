use std::path::{Path, PathBuf};

use walkdir::WalkDir;

use crate::dataframe::{encode_categorical, Encoding};
use crate::error::{Error, Result};

pub const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// `<root>/<class>/**/*.{png,jpg,jpeg}`, one class per subdirectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageFolderDataset {
    pub root: PathBuf,
    /// `(path, class index)`, sorted by path.
    pub items: Vec<(PathBuf, usize)>,
    pub class_names: Vec<String>,
    /// Entries that could not be read during the scan.
    pub skipped: usize,
}

impl ImageFolderDataset {
    pub fn labels(&self) -> Vec<usize> {
        self.items.iter().map(|(_, c)| *c).collect()
    }

    pub fn paths(&self) -> Vec<&Path> {
        self.items.iter().map(|(p, _)| p.as_path()).collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> ImageFolderDataset {
        ImageFolderDataset {
            root: self.root.clone(),
            items: indices.iter().map(|&i| self.items[i].clone()).collect(),
            class_names: self.class_names.clone(),
            skipped: self.skipped,
        }
    }
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.iter().any(|x| e.eq_ignore_ascii_case(x)))
}

pub fn scan_image_dir(root: &Path) -> Result<ImageFolderDataset> {
    scan_image_dir_excluding(root, &[])
}

/// Like [`scan_image_dir`] but ignores the named class folders (the brain
/// set's unlabeled `pred` folder, for instance). Class folders without any
/// images are left out of `class_names`.
pub fn scan_image_dir_excluding(root: &Path, exclude: &[&str]) -> Result<ImageFolderDataset> {
    let entries = std::fs::read_dir(root).map_err(|source| Error::File {
        path: root.to_path_buf(),
        source,
    })?;
    let mut skipped = 0;
    let mut class_dirs = Vec::new();
    for entry in entries {
        match entry {
            Ok(e) if e.path().is_dir() => {
                let name = e.file_name().to_string_lossy().into_owned();
                if !exclude.contains(&name.as_str()) && !name.starts_with('.') {
                    class_dirs.push((name, e.path()));
                }
            }
            Ok(_) => {}
            Err(_) => skipped += 1,
        }
    }
    class_dirs.sort();

    let mut per_class = Vec::new();
    for (name, dir) in class_dirs {
        let mut files = Vec::new();
        for entry in WalkDir::new(&dir).follow_links(true).sort_by_file_name() {
            match entry {
                Ok(e) if e.file_type().is_file() && is_image(e.path()) => files.push(e.into_path()),
                Ok(_) => {}
                Err(_) => skipped += 1,
            }
        }
        if files.is_empty() {
            log::warn!("class folder {} has no images; ignoring it", dir.display());
        } else {
            per_class.push((name, files));
        }
    }
    if per_class.is_empty() {
        return Err(Error::Empty(format!("no class folders with images under {}", root.display())));
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} unreadable entries under {}", root.display());
    }
    let class_names = per_class.iter().map(|(n, _)| n.clone()).collect();
    let mut items: Vec<(PathBuf, usize)> = per_class
        .into_iter()
        .enumerate()
        .flat_map(|(c, (_, files))| files.into_iter().map(move |f| (f, c)))
        .collect();
    items.sort();
    Ok(ImageFolderDataset {
        root: root.to_path_buf(),
        items,
        class_names,
        skipped,
    })
}

/// Label binarizer over the dataset's class names: a single 0/1 column for
/// two classes, one-hot for three or more.
pub fn binarize_labels(ds: &ImageFolderDataset) -> Result<Encoding> {
    if ds.class_names.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 classes to learn from, found {:?}",
            ds.class_names
        )));
    }
    let names: Vec<&str> = ds.items.iter().map(|(_, c)| ds.class_names[*c].as_str()).collect();
    let enc = encode_categorical(&names)?;
    if enc.class_names != ds.class_names {
        return Err(Error::InvalidArgument("some classes have no items".into()));
    }
    Ok(enc)
}
