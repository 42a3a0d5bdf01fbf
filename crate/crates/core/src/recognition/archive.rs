//! Template archives: a directory (or zip) of `<LABEL>.pgm` files, 32x32 with
//! stroke pixels at 255 on 0, plus `manifest.txt` holding `version=<string>`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{Template, TemplateSet, GLYPH_SIZE};
use crate::imaging::io::{decode_pgm, encode_pgm};
use crate::imaging::Glyph;
use crate::{Error, Result};

const MANIFEST: &str = "manifest.txt";

/// Loads and validates an archive from a directory or a `.zip` file.
pub fn load_templates(path: &Path) -> Result<TemplateSet> {
    let entries = if path.is_dir() { read_dir_entries(path)? } else { read_zip_entries(path)? };
    from_entries(entries)
}

fn read_dir_entries(dir: &Path) -> Result<Vec<(String, Vec<u8>)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        if entry.file_type()?.is_file() {
            out.push((entry.file_name().to_string_lossy().into_owned(), fs::read(entry.path())?));
        }
    }
    Ok(out)
}

fn read_zip_entries(path: &Path) -> Result<Vec<(String, Vec<u8>)>> {
    let file = fs::File::open(path)?;
    let mut zip = zip::ZipArchive::new(file).map_err(|e| Error::BadArchive(e.to_string()))?;
    let mut out = Vec::new();
    for i in 0..zip.len() {
        let mut f = zip.by_index(i).map_err(|e| Error::BadArchive(e.to_string()))?;
        if !f.is_file() {
            continue;
        }
        // entries may sit inside a top-level folder
        let name = f.name().rsplit('/').next().unwrap_or_default().to_string();
        let mut bytes = Vec::new();
        f.read_to_end(&mut bytes)?;
        out.push((name, bytes));
    }
    Ok(out)
}

fn from_entries(entries: Vec<(String, Vec<u8>)>) -> Result<TemplateSet> {
    let mut version = None;
    let mut templates = Vec::new();
    for (name, bytes) in entries {
        if name == MANIFEST {
            version = Some(parse_manifest(&bytes)?);
            continue;
        }
        let Some(stem) = name.strip_suffix(".pgm") else {
            continue;
        };
        let mut chars = stem.chars();
        let (Some(label), None) = (chars.next(), chars.next()) else {
            return Err(Error::BadArchive(format!("unexpected template file {name:?}")));
        };
        let img = decode_pgm(&bytes)?;
        if img.width() != GLYPH_SIZE || img.height() != GLYPH_SIZE {
            return Err(Error::BadDimensions { label, width: img.width(), height: img.height() });
        }
        let bits = img.pixels().iter().map(|&p| (p >= 128) as u8).collect();
        templates.push(Template { label, glyph: Glyph::from_bits(bits).expect("32x32 checked above") });
    }
    let version = version.ok_or_else(|| Error::BadArchive("missing manifest.txt".into()))?;
    TemplateSet::new(version, templates)
}

fn parse_manifest(bytes: &[u8]) -> Result<String> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::BadArchive("manifest is not UTF-8".into()))?;
    text.lines()
        .find_map(|l| l.trim().strip_prefix("version=").map(|v| v.trim().to_string()))
        .filter(|v| !v.is_empty())
        .ok_or_else(|| Error::BadArchive("manifest has no version".into()))
}

fn entries_of(set: &TemplateSet) -> Vec<(String, Vec<u8>)> {
    let mut out = vec![(MANIFEST.to_string(), format!("version={}\n", set.version()).into_bytes())];
    for t in set.templates() {
        out.push((format!("{}.pgm", t.label), encode_pgm(&t.glyph.to_binary().to_gray())));
    }
    out
}

pub fn write_template_dir(set: &TemplateSet, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in entries_of(set) {
        fs::write(dir.join(name), bytes)?;
    }
    Ok(())
}

/// Stored (uncompressed) entries with a fixed timestamp, so equal sets give
/// byte-identical files.
pub fn write_template_zip(set: &TemplateSet, path: &Path) -> Result<()> {
    let mut zip = zip::ZipWriter::new(fs::File::create(path)?);
    let options = zip::write::SimpleFileOptions::default()
        .compression_method(zip::CompressionMethod::Stored)
        .last_modified_time(zip::DateTime::default())
        .unix_permissions(0o644);
    for (name, bytes) in entries_of(set) {
        zip.start_file(name, options).map_err(|e| Error::BadArchive(e.to_string()))?;
        zip.write_all(&bytes)?;
    }
    zip.finish().map_err(|e| Error::BadArchive(e.to_string()))?;
    Ok(())
}
