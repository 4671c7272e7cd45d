//! Pascal VOC style annotation documents paired with PGM rasters.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::pgm::{read_pgm, GrayImage};
use crate::error::{Error, Result};

/// Inclusive pixel bounds as written in the annotation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BBox {
    pub xmin: usize,
    pub ymin: usize,
    pub xmax: usize,
    pub ymax: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnotatedImage {
    pub name: String,
    pub image: GrayImage,
    pub boxes: Vec<BBox>,
    pub class_label: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LoadReport {
    pub loaded: usize,
    pub failures: Vec<(PathBuf, String)>,
}

impl LoadReport {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Lower-case, with spaces and hyphens folded to underscores.
pub fn normalize_class(name: &str) -> String {
    name.trim()
        .to_ascii_lowercase()
        .chars()
        .map(|c| if c == '-' || c.is_whitespace() { '_' } else { c })
        .collect()
}

/// Class implied by a file stem such as `rolled-in_scale_12`.
pub fn class_from_stem(stem: &str) -> String {
    let base = match stem.rfind('_') {
        Some(i) if stem[i + 1..].chars().all(|c| c.is_ascii_digit()) && i > 0 => &stem[..i],
        _ => stem,
    };
    normalize_class(base)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Annotation {
    pub size: Option<(usize, usize)>,
    pub objects: Vec<(String, BBox)>,
}

fn child_text<'a>(node: roxmltree::Node<'a, 'a>, tag: &str) -> Option<&'a str> {
    node.children().find(|c| c.has_tag_name(tag)).and_then(|c| c.text()).map(str::trim)
}

fn coord(node: roxmltree::Node, tag: &str) -> std::result::Result<usize, String> {
    let text = child_text(node, tag).ok_or_else(|| format!("bndbox lacks <{tag}>"))?;
    let v: f64 = text.parse().map_err(|_| format!("<{tag}> is not a number: {text:?}"))?;
    if v.fract() != 0.0 || v < 0.0 {
        return Err(format!("<{tag}> is not a non-negative integer: {text:?}"));
    }
    Ok(v as usize)
}

pub fn parse_annotation(xml: &str) -> std::result::Result<Annotation, String> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| format!("XML: {e}"))?;
    let root = doc.root_element();
    let size = root.children().find(|c| c.has_tag_name("size")).and_then(|s| {
        let w = child_text(s, "width")?.parse().ok()?;
        let h = child_text(s, "height")?.parse().ok()?;
        Some((w, h))
    });
    let mut objects = Vec::new();
    for obj in root.children().filter(|c| c.has_tag_name("object")) {
        let name = child_text(obj, "name").ok_or("object lacks <name>")?;
        let bb = obj
            .children()
            .find(|c| c.has_tag_name("bndbox"))
            .ok_or("object lacks <bndbox>")?;
        let b = BBox {
            xmin: coord(bb, "xmin")?,
            ymin: coord(bb, "ymin")?,
            xmax: coord(bb, "xmax")?,
            ymax: coord(bb, "ymax")?,
        };
        objects.push((normalize_class(name), b));
    }
    Ok(Annotation { size, objects })
}

pub fn validate_box(b: &BBox, width: usize, height: usize) -> std::result::Result<(), String> {
    if b.xmin >= b.xmax || b.ymin >= b.ymax {
        return Err(format!("degenerate box {b:?}"));
    }
    if b.xmax > width || b.ymax > height {
        return Err(format!("box {b:?} exceeds {width}x{height} image"));
    }
    Ok(())
}

fn load_pair(image_path: &Path, annotations_dir: &Path) -> std::result::Result<AnnotatedImage, String> {
    let stem = image_path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or("file name is not UTF-8")?
        .to_string();
    let xml_path = annotations_dir.join(format!("{stem}.xml"));
    let xml = std::fs::read_to_string(&xml_path).map_err(|e| format!("annotation {}: {e}", xml_path.display()))?;
    let ann = parse_annotation(&xml)?;
    let image = read_pgm(image_path).map_err(|e| e.to_string())?;
    if let Some((w, h)) = ann.size {
        if (w, h) != (image.width, image.height) {
            return Err(format!(
                "annotation says {w}x{h}, raster is {}x{}",
                image.width, image.height
            ));
        }
    }
    for (_, b) in &ann.objects {
        validate_box(b, image.width, image.height)?;
    }
    let class_label = ann
        .objects
        .first()
        .map(|(n, _)| n.clone())
        .unwrap_or_else(|| class_from_stem(&stem));
    Ok(AnnotatedImage {
        name: stem,
        image,
        boxes: ann.objects.into_iter().map(|(_, b)| b).collect(),
        class_label,
    })
}

fn list_dir(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let matches = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case(ext));
        if matches && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Loads every `*.pgm` under `images_dir` with its same-stem XML document.
///
/// Per-file problems are collected in the report; only an unreadable or
/// empty directory is an error.
pub fn load_annotated_dir(images_dir: &Path, annotations_dir: &Path) -> Result<(Vec<AnnotatedImage>, LoadReport)> {
    if !annotations_dir.is_dir() {
        return Err(Error::Data(format!(
            "annotation directory {} does not exist",
            annotations_dir.display()
        )));
    }
    let paths = list_dir(images_dir, "pgm")?;
    if paths.is_empty() {
        return Err(Error::Data(format!("no .pgm images in {}", images_dir.display())));
    }
    let results: Vec<_> = paths.par_iter().map(|p| load_pair(p, annotations_dir)).collect();
    let mut images = Vec::new();
    let mut report = LoadReport::default();
    for (path, r) in paths.into_iter().zip(results) {
        match r {
            Ok(img) => images.push(img),
            Err(msg) => report.failures.push((path, msg)),
        }
    }
    report.loaded = images.len();
    for (path, msg) in &report.failures {
        log::warn!("skipping {}: {msg}", path.display());
    }
    Ok((images, report))
}

/// Finds `IMAGES` and `ANNOTATIONS` (either case) under a corpus root.
pub fn corpus_dirs(root: &Path) -> Result<(PathBuf, PathBuf)> {
    let pick = |name: &str| {
        [name.to_string(), name.to_ascii_lowercase()]
            .into_iter()
            .map(|n| root.join(n))
            .find(|p| p.is_dir())
            .ok_or_else(|| Error::Data(format!("{} has no {name} directory", root.display())))
    };
    Ok((pick("IMAGES")?, pick("ANNOTATIONS")?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"<annotation>
  <filename>scratches_1.jpg</filename>
  <size><width>200</width><height>200</height><depth>1</depth></size>
  <object><name>scratches</name>
    <bndbox><xmin>50</xmin><ymin>60</ymin><xmax>120</xmax><ymax>140</ymax></bndbox>
  </object>
  <object><name>scratches</name>
    <bndbox><xmin>1</xmin><ymin>2</ymin><xmax>10</xmax><ymax>199</ymax></bndbox>
  </object>
</annotation>"#;

    #[test]
    fn box_preserved_verbatim() {
        let a = parse_annotation(DOC).unwrap();
        assert_eq!(a.size, Some((200, 200)));
        assert_eq!(a.objects.len(), 2);
        assert_eq!(
            a.objects[0],
            ("scratches".to_string(), BBox { xmin: 50, ymin: 60, xmax: 120, ymax: 140 })
        );
    }

    #[test]
    fn malformed_documents() {
        assert!(parse_annotation("<annotation><object>").is_err());
        let no_box = "<annotation><object><name>x</name></object></annotation>";
        assert!(parse_annotation(no_box).is_err());
        let bad = DOC.replace("<xmin>50</xmin>", "<xmin>5.5</xmin>");
        assert!(parse_annotation(&bad).is_err());
    }

    #[test]
    fn box_validation() {
        let b = BBox { xmin: 50, ymin: 60, xmax: 201, ymax: 140 };
        assert!(validate_box(&b, 200, 200).is_err());
        let b = BBox { xmin: 50, ymin: 60, xmax: 50, ymax: 140 };
        assert!(validate_box(&b, 200, 200).is_err());
        let b = BBox { xmin: 0, ymin: 0, xmax: 200, ymax: 200 };
        assert!(validate_box(&b, 200, 200).is_ok());
    }

    #[test]
    fn class_names() {
        assert_eq!(class_from_stem("rolled-in_scale_12"), "rolled_in_scale");
        assert_eq!(class_from_stem("crazing_1"), "crazing");
        assert_eq!(class_from_stem("plain"), "plain");
        assert_eq!(normalize_class(" Pitted Surface "), "pitted_surface");
    }
}
